//! Observable dynamics in the quasi-canonical variables `(q, p0)`.
//!
//! An observable is a polynomial of degree at most two in the coordinates and
//! the unperturbed velocities. For an observable `L` that is a motion
//! invariant of `H0`, the perturbation drives it at the rate
//!
//! ```text
//! dL/dt = (Q/m) ∂L/∂v_i * E_i + (Q/mc) ε_ijl ∂L/∂v_i * B_l * v_j
//! ```
//!
//! built entirely from unperturbed operators and the physical fields, never
//! the potentials. Its expectation in the freely evolving initial state,
//! accumulated step by step, gives `⟨L(T)⟩` to first order.

use std::fmt;

use crate::error::{Error, Result};
use crate::fields::{GaugeField, PhysicalFields};
use crate::hilbert::{commutator_bracket, max_abs, sym_product, Basis, Matrix, Operator, State, Vector, C64};
use crate::profile::Side;
use crate::quadrature::time_grid;
use crate::timed::TimedOperator;

/// Largest admissible `‖[L, H0]‖/(‖L‖‖H0‖)` on the interior block.
pub const INVARIANCE_TOLERANCE: f64 = 1e-10;

/// One factor of an observable monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// Coordinate `q_i`.
    Q(usize),
    /// Unperturbed velocity `v_i`.
    V(usize),
    /// Unperturbed kinetic momentum `p0_i = m v_i`.
    P0(usize),
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let axis = |i: usize| crate::hilbert::axis_name(i);
        match *self {
            Factor::Q(i) => write!(f, "{}", axis(i)),
            Factor::V(i) => write!(f, "v{}", axis(i)),
            Factor::P0(i) => write!(f, "p0{}", axis(i)),
        }
    }
}

/// `Σ coefficient × (f1 * f2 * ...)` with left-associated symmetrized products.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSpec {
    pub name: String,
    pub terms: Vec<(f64, Vec<Factor>)>,
}

impl ObservableSpec {
    pub fn new(name: impl Into<String>, terms: Vec<(f64, Vec<Factor>)>) -> Self {
        Self { name: name.into(), terms }
    }

    /// `ε = (m/2) v² + (m ω0²/2) q²`, the unperturbed energy.
    pub fn energy(basis: &Basis) -> Self {
        let m = basis.constants().mass;
        let w = basis.omega0();
        let terms = (0..basis.spatial_dim())
            .flat_map(|i| {
                [(0.5 * m, vec![Factor::V(i), Factor::V(i)]), (0.5 * m * w * w, vec![Factor::Q(i), Factor::Q(i)])]
            })
            .collect();
        Self::new("energy", terms)
    }

    /// `ζ = m (x v_y - y v_x)`, the planar angular momentum.
    pub fn zeta(basis: &Basis) -> Self {
        let m = basis.constants().mass;
        Self::new(
            "zeta",
            vec![(m, vec![Factor::Q(0), Factor::V(1)]), (-m, vec![Factor::Q(1), Factor::V(0)])],
        )
    }

    /// The single coordinate `q_i`.
    pub fn position(axis: usize) -> Self {
        Self::new(format!("q{}", crate::hilbert::axis_name(axis)), vec![(1.0, vec![Factor::Q(axis)])])
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, m)| m.len() as u32).max().unwrap_or(0)
    }

    fn check(&self, basis: &Basis) -> Result<()> {
        let degree = self.degree();
        if degree > crate::poly::DEGREE_CAP {
            return Err(Error::DegreeExceeded { degree, cap: crate::poly::DEGREE_CAP });
        }
        let d = basis.spatial_dim();
        for (_, m) in &self.terms {
            for f in m {
                let (Factor::Q(i) | Factor::V(i) | Factor::P0(i)) = *f;
                if i >= d {
                    return Err(Error::DimensionMismatch { left: i + 1, right: d });
                }
            }
        }
        Ok(())
    }

    /// Formal derivative `∂L/∂v_axis`, with `p0` read as `m v`.
    pub fn derivative_v(&self, axis: usize, mass: f64) -> ObservableSpec {
        let mut terms = Vec::new();
        for (c, monomial) in &self.terms {
            let mut coeff = *c;
            let normalized: Vec<Factor> = monomial
                .iter()
                .map(|f| match *f {
                    Factor::P0(i) => {
                        coeff *= mass;
                        Factor::V(i)
                    }
                    other => other,
                })
                .collect();
            for (j, f) in normalized.iter().enumerate() {
                if *f == Factor::V(axis) {
                    let mut rest = normalized.clone();
                    rest.remove(j);
                    terms.push((coeff, rest));
                }
            }
        }
        ObservableSpec::new(format!("∂{}/∂v{}", self.name, crate::hilbert::axis_name(axis)), terms)
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} =", self.name)?;
        if self.terms.is_empty() {
            return write!(f, " 0");
        }
        for (i, (c, m)) in self.terms.iter().enumerate() {
            write!(f, "{}{c}", if i == 0 { " " } else { " + " })?;
            for factor in m {
                write!(f, "·{factor}")?;
            }
        }
        Ok(())
    }
}

fn factor_operator(f: Factor, basis: &Basis) -> Operator {
    match f {
        Factor::Q(i) => basis.q(i).clone(),
        Factor::V(i) => basis.velocity(i),
        Factor::P0(i) => basis.p0(i).clone(),
    }
}

/// Promotes an observable to an operator.
pub fn build_observable(spec: &ObservableSpec, basis: &Basis) -> Result<Operator> {
    spec.check(basis)?;
    let n = basis.dim();
    let mut acc = Matrix::zeros(n, n);
    for (c, monomial) in &spec.terms {
        let op = match monomial.split_first() {
            None => Operator::identity(n, "1"),
            Some((first, rest)) => {
                let mut op = factor_operator(*first, basis);
                for f in rest {
                    op = sym_product(&op, &factor_operator(*f, basis))?;
                }
                op
            }
        };
        acc += op.matrix() * C64::new(*c, 0.0);
    }
    Ok(Operator::hermitian(acc, spec.name.clone()))
}

fn frobenius(m: &Matrix) -> f64 {
    m.norm()
}

/// `‖[L, H0]‖/(‖L‖‖H0‖)` in the Frobenius norm on the interior block (0 when `L = 0`).
pub fn verify_unperturbed_invariance(l: &Operator, basis: &Basis) -> Result<f64> {
    if l.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { left: l.dim(), right: basis.dim() });
    }
    let h0 = basis.h0().matrix();
    let comm = basis.interior_block(&(l.matrix() * h0 - h0 * l.matrix()));
    let scale = frobenius(&basis.interior_block(l.matrix())) * frobenius(&basis.interior_block(h0));
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(frobenius(&comm) / scale)
}

fn require_admissible(spec: &ObservableSpec, l: &Operator, basis: &Basis) -> Result<()> {
    let residual = verify_unperturbed_invariance(l, basis)?;
    if residual > INVARIANCE_TOLERANCE {
        return Err(Error::InadmissibleObservable { name: spec.name.clone(), residual });
    }
    Ok(())
}

/// Perturbation-induced rate of an observable, split by force.
#[derive(Debug, Clone, PartialEq)]
pub struct RateOperator {
    pub electric: TimedOperator,
    pub magnetic: TimedOperator,
    /// True when the fields carried impulsive terms that were left out.
    pub excluded_impulses: bool,
}

impl RateOperator {
    pub fn total(&self) -> TimedOperator {
        let mut t = self.electric.clone();
        t.extend(&self.magnetic).expect("parts share a dimension");
        t
    }

    pub fn at(&self, t: f64) -> Operator {
        self.total().at(t)
    }
}

/// Builds the rate operator of `spec` driven by `fields`.
///
/// Triple products are symmetrized pairwise from the left: `a*b*c = (a*b)*c`.
/// Impulsive field terms are dropped and reported through
/// [`RateOperator::excluded_impulses`].
pub fn rate_operator(spec: &ObservableSpec, fields: &PhysicalFields, basis: &Basis) -> Result<RateOperator> {
    if fields.dim() != basis.spatial_dim() {
        return Err(Error::DimensionMismatch { left: fields.dim(), right: basis.spatial_dim() });
    }
    let l = build_observable(spec, basis)?;
    require_admissible(spec, &l, basis)?;
    let c = basis.constants();
    let regular = fields.regular();
    let n = basis.dim();
    let derivs: Vec<Operator> = (0..basis.spatial_dim())
        .map(|i| build_observable(&spec.derivative_v(i, c.mass), basis))
        .collect::<Result<_>>()?;

    let mut electric = TimedOperator::zero(n, format!("(d{}/dt)_e", spec.name));
    for (axis, e) in regular.electric().iter().enumerate() {
        for (profile, poly) in e.terms() {
            let op = sym_product(&derivs[axis], &poly.to_operator(basis)?)?;
            electric.push(vec![*profile], op.scaled(c.charge / c.mass))?;
        }
    }

    let mut magnetic = TimedOperator::zero(n, format!("(d{}/dt)_m", spec.name));
    if let Some(bz) = regular.magnetic_z() {
        let (vx, vy) = (basis.velocity(0), basis.velocity(1));
        for (profile, poly) in bz.terms() {
            let b = poly.to_operator(basis)?;
            let xy = sym_product(&sym_product(&derivs[0], &b)?, &vy)?;
            let yx = sym_product(&sym_product(&derivs[1], &b)?, &vx)?;
            let op = xy.minus(&yx)?;
            magnetic.push(vec![*profile], op.scaled(c.charge / (c.mass * c.c_light)))?;
        }
    }
    Ok(RateOperator { electric, magnetic, excluded_impulses: fields.has_impulses() })
}

/// Quadrature rule for accumulating the rate expectation over one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// Rate sampled at the start of each step (first order in `dt`).
    #[default]
    LeftEndpoint,
    /// Rate sampled at the middle of each step (second order in `dt`).
    Midpoint,
}

/// `⟨L⟩` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationTrajectory {
    pub observable: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ExpectationTrajectory {
    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("trajectory is never empty")
    }
}

fn real_expectation(v: &Vector, m: &Matrix) -> Result<f64> {
    let z = v.dotc(&(m * v));
    if z.im.abs() > 1e-10 * z.re.abs() + 1e-12 {
        return Err(Error::NotHermitian { label: "rate operator".into(), defect: z.im.abs() });
    }
    Ok(z.re)
}

/// Largest step allowed by `evolve_expectation`: `t1/100` for pulsed fields.
pub fn expectation_max_step(rate: &RateOperator) -> Option<f64> {
    rate.total().min_duration().map(|t1| t1 / 100.0)
}

/// `⟨L(T)⟩ ≈ ⟨ψ0|L|ψ0⟩ + Σ_steps ⟨ψ0(t)|dL/dt|ψ0(t)⟩ Δt`, with
/// `ψ0(t) = e^{-iH0 t/ħ} ψ0` the unperturbed evolution of the initial state.
pub fn evolve_expectation(
    spec: &ObservableSpec,
    fields: &PhysicalFields,
    basis: &Basis,
    psi0: &State,
    t_end: f64,
    dt: f64,
    rule: StepRule,
) -> Result<ExpectationTrajectory> {
    if psi0.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { left: psi0.dim(), right: basis.dim() });
    }
    if !basis.supported_in_interior(psi0) {
        return Err(Error::InvalidState("initial state has weight outside the interior block".into()));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::NumericalPolicy { policy: "dt", detail: format!("dt must be finite and > 0, got {dt}") });
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::NumericalPolicy { policy: "horizon", detail: format!("T must be finite and > 0, got {t_end}") });
    }
    let rate = rate_operator(spec, fields, basis)?;
    if let Some(limit) = expectation_max_step(&rate) {
        if dt > limit {
            return Err(Error::NumericalPolicy {
                policy: "quasicanon_step",
                detail: format!("dt = {dt} exceeds t1/100 = {limit}"),
            });
        }
    }
    let l = build_observable(spec, basis)?;
    let total = rate.total();
    let hbar = basis.constants().hbar;
    let evolved = |t: f64| -> Vector {
        Vector::from_iterator(
            basis.dim(),
            psi0.coeffs().iter().enumerate().map(|(i, c)| c * C64::from_polar(1.0, -basis.energy(i) * t / hbar)),
        )
    };
    let times = time_grid(t_end, dt, &total.breakpoints());
    let mut values = Vec::with_capacity(times.len());
    let mut value = real_expectation(psi0.coeffs(), l.matrix())?;
    values.push(value);
    for w in times.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let (ts, side) = match rule {
            StepRule::LeftEndpoint => (ta, Side::Right),
            StepRule::Midpoint => (0.5 * (ta + tb), Side::Point),
        };
        if !total.is_zero() {
            value += real_expectation(&evolved(ts), &total.matrix_at(ts, side))? * (tb - ta);
        }
        values.push(value);
    }
    Ok(ExpectationTrajectory { observable: spec.name.clone(), times, values })
}

/// Max-abs difference on the interior block between the Poisson-bracket form
/// of the rate and [`rate_operator`] at time `t`, relative to the largest
/// individual term on either side:
///
/// ```text
/// Q{L, Φ1} + {L, q_i}*(Q/c)∂A_i/∂t + (Q/c)({L, q_i}*{A_i, H0} - {L, A_i}*{q_i, H0})
/// ```
///
/// with brackets `{f, g} = [f, g]/(iħ)` over `(q, p0)`. Impulsive terms are
/// excluded on both sides.
pub fn poisson_form_check(spec: &ObservableSpec, field: &GaugeField, basis: &Basis, t: f64) -> Result<f64> {
    let c = *basis.constants();
    let l = build_observable(spec, basis)?;
    let at = |tp: &crate::fields::TimedPoly| -> Result<Operator> {
        Ok(Operator::hermitian(
            tp.regular().poly_at(t, Side::Point).to_operator(basis)?.into_matrix(),
            "field",
        ))
    };
    let mut bracket_form = commutator_bracket(&l, &at(field.scalar())?, &c)?.scaled(c.charge).into_matrix();
    let mut scale = max_abs(&basis.interior_block(&bracket_form));
    let charge_c = C64::new(c.charge / c.c_light, 0.0);
    for (axis, a) in field.vector().iter().enumerate() {
        let q = basis.q(axis);
        let l_q = commutator_bracket(&l, q, &c)?;
        let da_dt = at(&a.regular().time_derivative()?.regular())?;
        let a_op = at(a)?;
        let a_h0 = commutator_bracket(&a_op, basis.h0(), &c)?;
        let l_a = commutator_bracket(&l, &a_op, &c)?;
        let q_h0 = commutator_bracket(q, basis.h0(), &c)?;
        for (sign, term) in [
            (1.0, sym_product(&l_q, &da_dt)?),
            (1.0, sym_product(&l_q, &a_h0)?),
            (-1.0, sym_product(&l_a, &q_h0)?),
        ] {
            let m = term.matrix() * charge_c * C64::new(sign, 0.0);
            scale = scale.max(max_abs(&basis.interior_block(&m)));
            bracket_form += m;
        }
    }
    let fields = crate::fields::physical_fields(field, &c);
    let rate = rate_operator(spec, &fields, basis)?;
    for part in [&rate.electric, &rate.magnetic] {
        for term in part.terms() {
            let m = term.op.matrix() * C64::new(term.factor(t, Side::Point), 0.0);
            scale = scale.max(max_abs(&basis.interior_block(&m)));
        }
    }
    let (lhs, rhs) = (basis.interior_block(&bracket_form), basis.interior_block(&rate.total().matrix_at(t, Side::Point)));
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(max_abs(&(lhs - rhs)) / scale)
}
