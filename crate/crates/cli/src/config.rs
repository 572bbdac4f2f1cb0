//! Experiment config schema, validation and conversion into library values.
//!
//! Configs are TOML. Every key is documented in the guide; unknown keys are
//! rejected so a typo cannot silently fall back to a default.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tdpt_core::fields::{gauge_transform, TimedPoly};
use tdpt_core::hilbert::Vector;
use tdpt_core::oracle::PropagationMethod;
use tdpt_core::poly::Poly;
use tdpt_core::quasicanon::{Factor, ObservableSpec, StepRule};
use tdpt_core::{Basis, BasisKind, Constants, GaugeField, GaugeFunction, Profile, QuantumNumbers, State};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub constants: ConstantsConfig,
    pub basis: BasisConfig,
    #[serde(default)]
    pub field: FieldConfig,
    /// Optional gauge function; when present the field is transformed by it.
    pub gauge: Option<GaugeConfig>,
    pub state: StateConfig,
    #[serde(default)]
    pub observables: Vec<String>,
    #[serde(default, rename = "observable")]
    pub custom_observables: Vec<CustomObservable>,
    pub time: TimeConfig,
    pub dirac: Option<DiracConfig>,
    pub quasicanon: Option<QuasicanonConfig>,
    pub soperator: Option<SoperatorConfig>,
    pub oracle: Option<OracleConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    pub hbar: f64,
    pub mass: f64,
    pub charge: f64,
    pub c_light: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        let c = Constants::default();
        Self { hbar: c.hbar, mass: c.mass, charge: c.charge, c_light: c.c_light }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BasisKindConfig {
    Ho1d,
    Ho2d,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub kind: BasisKindConfig,
    #[serde(default = "one")]
    pub omega0: f64,
    pub n_max: u32,
}

fn one() -> f64 {
    1.0
}

/// Time profile. Impulses are never entered directly; they only arise from
/// differentiating a gauge function across a jump.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant,
    Ramp,
    Rect { t1: f64 },
    RectIntegral { t1: f64 },
    Sine { omega: f64, t1: f64 },
    Cosine { omega: f64, t1: f64 },
    SineIntegral { omega: f64, t1: f64 },
}

impl From<ProfileConfig> for Profile {
    fn from(p: ProfileConfig) -> Self {
        match p {
            ProfileConfig::Constant => Profile::Constant,
            ProfileConfig::Ramp => Profile::Ramp,
            ProfileConfig::Rect { t1 } => Profile::Rect { t1 },
            ProfileConfig::RectIntegral { t1 } => Profile::RectIntegral { t1 },
            ProfileConfig::Sine { omega, t1 } => Profile::Sine { omega, t1 },
            ProfileConfig::Cosine { omega, t1 } => Profile::Cosine { omega, t1 },
            ProfileConfig::SineIntegral { omega, t1 } => Profile::SineIntegral { omega, t1 },
        }
    }
}

/// `(coefficient, exponents)` pairs, one exponent per spatial axis.
pub type PolyTerms = Vec<(f64, Vec<u32>)>;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Phi,
    Ax,
    Ay,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldTerm {
    pub component: Component,
    pub profile: ProfileConfig,
    pub terms: PolyTerms,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SymmetricMagnetic {
    pub amplitude: f64,
    pub profile: ProfileConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UniformElectric {
    pub e0: Vec<f64>,
    pub profile: ProfileConfig,
}

/// All parts present are summed. An empty section is the zero field.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub symmetric_magnetic: Option<SymmetricMagnetic>,
    pub uniform_electric: Option<UniformElectric>,
    #[serde(default)]
    pub terms: Vec<FieldTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GaugeTerm {
    pub profile: ProfileConfig,
    pub terms: PolyTerms,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GaugeConfig {
    pub f: Vec<GaugeTerm>,
}

/// Exactly one way of giving the initial state.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub index: Option<usize>,
    pub quantum_numbers: Option<QuantumNumbersConfig>,
    /// Equal-weight superposition of these eigenstates.
    pub superposition: Option<Vec<usize>>,
    /// `[re, im]` per basis index, renormalized.
    pub coefficients: Option<Vec<[f64; 2]>>,
    /// Coherent state `[re α, im α]` (1D only).
    pub coherent: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct QuantumNumbersConfig {
    pub n: Option<u32>,
    pub n_radial: Option<u32>,
    pub m_ang: Option<i32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CustomObservable {
    pub name: String,
    /// `(coefficient, factors)` with factors from `x y vx vy p0x p0y`.
    pub terms: Vec<(f64, Vec<String>)>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiracConfig {
    #[serde(default)]
    pub include_a2: bool,
    /// Number of first-order (Euler) steps for the norm demonstration; 0 skips it.
    #[serde(default)]
    pub euler_steps: usize,
    /// Overrides `time.dt` for the coefficient integration.
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepRuleConfig {
    #[default]
    LeftEndpoint,
    Midpoint,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuasicanonConfig {
    #[serde(default)]
    pub rule: StepRuleConfig,
    pub dt: Option<f64>,
    /// Times at which the bracket form of each rate is checked.
    #[serde(default)]
    pub poisson_times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SoperatorConfig {
    pub observable: String,
    /// Two observables whose s-matrices are compared pair by pair.
    pub consistency: Option<[String; 2]>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    #[default]
    CrankNicolson,
    MidpointExponential,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default = "yes")]
    pub include_a2: bool,
    pub dt: Option<f64>,
}

fn yes() -> bool {
    true
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Config { field: field.into(), reason: reason.into() }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

/// A config turned into library values.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub basis: Basis,
    /// The field as written (before any gauge transformation).
    pub original_field: GaugeField,
    /// The field the computation uses.
    pub field: GaugeField,
    pub gauge: Option<GaugeFunction>,
    pub state: State,
    /// Set when the initial state is a single eigenstate.
    pub initial_index: Option<usize>,
    pub observables: Vec<ObservableSpec>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_owned(), source: e })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| text[s].trim().to_string()).unwrap_or_default();
            invalid(if field.is_empty() { "<config>".into() } else { field }, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.constants;
        for (name, v) in [("hbar", c.hbar), ("mass", c.mass), ("charge", c.charge), ("c_light", c.c_light)] {
            positive(&format!("constants.{name}"), v)?;
        }
        positive("basis.omega0", self.basis.omega0)?;
        positive("time.horizon", self.time.horizon)?;
        positive("time.dt", self.time.dt)?;
        for (name, dt) in [
            ("dirac.dt", self.dirac.as_ref().and_then(|d| d.dt)),
            ("quasicanon.dt", self.quasicanon.as_ref().and_then(|d| d.dt)),
            ("oracle.dt", self.oracle.as_ref().and_then(|d| d.dt)),
        ] {
            if let Some(dt) = dt {
                positive(name, dt)?;
            }
        }
        let s = &self.state;
        let given = [s.index.is_some(), s.quantum_numbers.is_some(), s.superposition.is_some(), s.coefficients.is_some(), s.coherent.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if given != 1 {
            return Err(invalid("state", format!("give exactly one of index, quantum_numbers, superposition, coefficients, coherent ({given} given)")));
        }
        Ok(())
    }

    pub fn constants(&self) -> Constants {
        let c = self.constants;
        Constants { hbar: c.hbar, mass: c.mass, charge: c.charge, c_light: c.c_light }
    }

    pub fn basis_kind(&self) -> BasisKind {
        match self.basis.kind {
            BasisKindConfig::Ho1d => BasisKind::Ho1d,
            BasisKindConfig::Ho2d => BasisKind::Ho2d,
        }
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let basis = Basis::build(self.basis_kind(), self.basis.omega0, self.basis.n_max, self.constants())
            .map_err(|e| invalid("basis", e.to_string()))?;
        let dim = basis.spatial_dim();
        let original_field = self.build_field(dim)?;
        let gauge = match &self.gauge {
            Some(g) => Some(build_gauge(g, dim)?),
            None => None,
        };
        let field = match &gauge {
            Some(f) => gauge_transform(&original_field, f, basis.constants()).map_err(|e| invalid("gauge", e.to_string()))?,
            None => original_field.clone(),
        };
        let (state, initial_index) = self.build_state(&basis)?;
        let observables = self.build_observables(&basis)?;
        Ok(Resolved { basis, original_field, field, gauge, state, initial_index, observables })
    }

    fn build_field(&self, dim: usize) -> Result<GaugeField, CliError> {
        let mut vector = vec![TimedPoly::zero(dim); dim];
        let mut scalar = TimedPoly::zero(dim);
        let mut add = |field: GaugeField| {
            for (axis, a) in field.vector().iter().enumerate() {
                vector[axis] = vector[axis].add(a);
            }
            scalar = scalar.add(field.scalar());
        };
        if let Some(m) = &self.field.symmetric_magnetic {
            if dim != 2 {
                return Err(invalid("field.symmetric_magnetic", "needs the ho2d basis"));
            }
            add(GaugeField::symmetric_magnetic(m.amplitude, m.profile.into()).map_err(|e| invalid("field.symmetric_magnetic", e.to_string()))?);
        }
        if let Some(e) = &self.field.uniform_electric {
            if e.e0.len() != dim {
                return Err(invalid("field.uniform_electric.e0", format!("needs {dim} components, got {}", e.e0.len())));
            }
            add(GaugeField::uniform_electric(&e.e0, e.profile.into()).map_err(|err| invalid("field.uniform_electric", err.to_string()))?);
        }
        for (j, term) in self.field.terms.iter().enumerate() {
            let name = format!("field.terms[{j}]");
            let poly = build_poly(&term.terms, dim, &name)?;
            let tp = TimedPoly::single(term.profile.into(), poly);
            let mut vector_part = vec![TimedPoly::zero(dim); dim];
            let mut scalar_part = TimedPoly::zero(dim);
            match term.component {
                Component::Phi => scalar_part = tp,
                Component::Ax => vector_part[0] = tp,
                Component::Ay if dim == 2 => vector_part[1] = tp,
                Component::Ay => return Err(invalid(format!("{name}.component"), "ay needs the ho2d basis")),
            }
            add(GaugeField::new(vector_part, scalar_part).map_err(|e| invalid(&name, e.to_string()))?);
        }
        GaugeField::new(vector, scalar).map_err(|e| invalid("field", e.to_string()))
    }

    fn build_state(&self, basis: &Basis) -> Result<(State, Option<usize>), CliError> {
        let s = &self.state;
        let interior = |field: &str, k: usize| -> Result<usize, CliError> {
            basis.check_interior(k).map_err(|e| invalid(field, e.to_string()))?;
            Ok(k)
        };
        let eigen = |k: usize| basis.eigenstate(k).map_err(|e| invalid("state", e.to_string()));
        if let Some(k) = s.index {
            let k = interior("state.index", k)?;
            return Ok((eigen(k)?, Some(k)));
        }
        if let Some(q) = s.quantum_numbers {
            let numbers = match (basis.kind(), q) {
                (BasisKind::Ho1d, QuantumNumbersConfig { n: Some(n), n_radial: None, m_ang: None }) => QuantumNumbers::Ho1d { n },
                (BasisKind::Ho2d, QuantumNumbersConfig { n: None, n_radial: Some(n_radial), m_ang: Some(m_ang) }) => {
                    QuantumNumbers::Ho2d { n_radial, m_ang }
                }
                _ => return Err(invalid("state.quantum_numbers", "use `n` for ho1d, `n_radial` and `m_ang` for ho2d")),
            };
            let k = basis.index_of(numbers).ok_or_else(|| invalid("state.quantum_numbers", "not in the truncated basis"))?;
            let k = interior("state.quantum_numbers", k)?;
            return Ok((eigen(k)?, Some(k)));
        }
        let mut v = Vector::zeros(basis.dim());
        if let Some(list) = &s.superposition {
            for &k in list {
                v[interior("state.superposition", k)?] += tdpt_core::hilbert::C64::new(1.0, 0.0);
            }
        } else if let Some(coeffs) = &s.coefficients {
            if coeffs.len() > basis.interior_dim() {
                return Err(invalid("state.coefficients", format!("at most {} entries (interior block)", basis.interior_dim())));
            }
            for (k, [re, im]) in coeffs.iter().enumerate() {
                v[k] = tdpt_core::hilbert::C64::new(*re, *im);
            }
        } else if let Some([re, im]) = s.coherent {
            let state = basis.coherent_state(tdpt_core::hilbert::C64::new(re, im)).map_err(|e| invalid("state.coherent", e.to_string()))?;
            return Ok((state, None));
        }
        let state = State::normalized(v).map_err(|e| invalid("state", e.to_string()))?;
        Ok((state, None))
    }

    fn build_observables(&self, basis: &Basis) -> Result<Vec<ObservableSpec>, CliError> {
        let mut out = Vec::new();
        for (j, name) in self.observables.iter().enumerate() {
            out.push(self.named_observable(basis, name).ok_or_else(|| invalid(format!("observables[{j}]"), format!("unknown observable `{name}`")))?);
        }
        for o in &self.custom_observables {
            out.push(self.custom_observable(basis, o)?);
        }
        Ok(out)
    }

    fn custom_observable(&self, basis: &Basis, o: &CustomObservable) -> Result<ObservableSpec, CliError> {
        let d = basis.spatial_dim();
        let mut terms = Vec::new();
        for (coeff, factors) in &o.terms {
            let parsed = factors
                .iter()
                .map(|f| parse_factor(f).filter(|x| factor_axis(*x) < d))
                .collect::<Option<Vec<Factor>>>()
                .ok_or_else(|| invalid(format!("observable.{}", o.name), format!("bad factor list {factors:?}")))?;
            terms.push((*coeff, parsed));
        }
        Ok(ObservableSpec::new(o.name.clone(), terms))
    }

    /// Looks up a built-in or custom observable by name.
    pub fn observable(&self, basis: &Basis, name: &str, field: &str) -> Result<ObservableSpec, CliError> {
        if let Some(spec) = self.named_observable(basis, name) {
            return Ok(spec);
        }
        match self.custom_observables.iter().find(|o| o.name == name) {
            Some(o) => self.custom_observable(basis, o),
            None => Err(invalid(field, format!("unknown observable `{name}`"))),
        }
    }

    fn named_observable(&self, basis: &Basis, name: &str) -> Option<ObservableSpec> {
        let d = basis.spatial_dim();
        match name {
            "energy" => Some(ObservableSpec::energy(basis)),
            "zeta" if d == 2 => Some(ObservableSpec::zeta(basis)),
            "qx" => Some(ObservableSpec::position(0)),
            "qy" if d == 2 => Some(ObservableSpec::position(1)),
            _ => None,
        }
    }

    pub fn dirac_dt(&self) -> f64 {
        self.dirac.as_ref().and_then(|d| d.dt).unwrap_or(self.time.dt)
    }

    pub fn quasicanon_dt(&self) -> f64 {
        self.quasicanon.as_ref().and_then(|d| d.dt).unwrap_or(self.time.dt)
    }

    pub fn oracle_dt(&self) -> f64 {
        self.oracle.as_ref().and_then(|d| d.dt).unwrap_or(self.time.dt)
    }

    pub fn step_rule(&self) -> StepRule {
        match self.quasicanon.as_ref().map(|q| q.rule).unwrap_or_default() {
            StepRuleConfig::LeftEndpoint => StepRule::LeftEndpoint,
            StepRuleConfig::Midpoint => StepRule::Midpoint,
        }
    }

    pub fn method(&self) -> PropagationMethod {
        match self.oracle.as_ref().map(|o| o.method).unwrap_or_default() {
            MethodConfig::CrankNicolson => PropagationMethod::CrankNicolson,
            MethodConfig::MidpointExponential => PropagationMethod::MidpointExponential,
        }
    }
}

fn parse_factor(s: &str) -> Option<Factor> {
    let axis = |c: &str| match c {
        "x" => Some(0),
        "y" => Some(1),
        _ => None,
    };
    if let Some(rest) = s.strip_prefix("p0") {
        return axis(rest).map(Factor::P0);
    }
    if let Some(rest) = s.strip_prefix('v') {
        return axis(rest).map(Factor::V);
    }
    axis(s).map(Factor::Q)
}

fn factor_axis(f: Factor) -> usize {
    let (Factor::Q(i) | Factor::V(i) | Factor::P0(i)) = f;
    i
}

fn build_poly(terms: &PolyTerms, dim: usize, field: &str) -> Result<Poly, CliError> {
    Poly::from_terms(dim, terms).map_err(|e| invalid(format!("{field}.terms"), e.to_string()))
}

fn build_gauge(g: &GaugeConfig, dim: usize) -> Result<GaugeFunction, CliError> {
    let mut f = TimedPoly::zero(dim);
    for (j, term) in g.f.iter().enumerate() {
        let poly = build_poly(&term.terms, dim, &format!("gauge.f[{j}]"))?;
        f = f.add(&TimedPoly::single(term.profile.into(), poly));
    }
    GaugeFunction::new(f).map_err(|e| invalid("gauge.f", e.to_string()))
}
