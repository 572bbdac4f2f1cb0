//! First-order s-operator matrix elements built from an observable's rate.
//!
//! For an observable `L` diagonal in the `H0` eigenbasis, with eigenvalues
//! `L_k`, the generator elements are
//!
//! ```text
//! s_kk'(T) = e^{i(ω_k' - ω_k)T} / (i(L_k - L_k')) · ∫₀^T (dL/dt)_kk' e^{i(ω_k - ω_k')t} dt
//! ```
//!
//! with `ω_k = ε_k/ħ`. The estimate `P_kk' ≈ |s_kk'|²` depends on which
//! observable is used; [`consistency_check`] compares two choices pair by pair.

use crate::error::{Error, Result};
use crate::fields::PhysicalFields;
use crate::hilbert::{Basis, C64, I};
use crate::quadrature::{oscillatory_integral, QuadraturePolicy};
use crate::quasicanon::{build_observable, rate_operator, ObservableSpec};

/// Observable eigenvalues closer than this (relative to the largest) are degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Off-diagonal entries of `L` above this (relative to the largest) reject it.
pub const CODIAGONAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SEntry {
    Defined(C64),
    /// `L_k = L_k'`: the formula divides by zero.
    Undefined,
}

impl SEntry {
    pub fn value(&self) -> Option<C64> {
        match *self {
            SEntry::Defined(z) => Some(z),
            SEntry::Undefined => None,
        }
    }
}

/// s-matrix over interior eigenstate pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrixResult {
    pub observable: String,
    pub horizon: f64,
    /// Observable eigenvalues `L_k` on the interior block.
    pub eigenvalues: Vec<f64>,
    entries: Vec<SEntry>,
    dim: usize,
    pub excluded_impulses: bool,
}

impl SMatrixResult {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, k: usize, kp: usize) -> SEntry {
        self.entries[k * self.dim + kp]
    }

    /// Largest `|s_kk'|` over defined entries.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().filter_map(SEntry::value).map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Diagonal of `L` on the interior block, after checking that `L` is diagonal there.
pub fn observable_eigenvalues(spec: &ObservableSpec, basis: &Basis) -> Result<Vec<f64>> {
    let l = build_observable(spec, basis)?;
    let block = basis.interior_block(l.matrix());
    let n = block.nrows();
    let scale = crate::hilbert::max_abs(&block).max(f64::MIN_POSITIVE);
    let mut offdiag = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                offdiag = offdiag.max(block[(i, j)].norm());
            }
        }
    }
    if offdiag > CODIAGONAL_TOLERANCE * scale {
        return Err(Error::NotCodiagonal { name: spec.name.clone(), offdiag });
    }
    Ok((0..n).map(|i| block[(i, i)].re).collect())
}

/// Computes every interior `s_kk'(T)`.
pub fn s_matrix(
    spec: &ObservableSpec,
    fields: &PhysicalFields,
    basis: &Basis,
    t_end: f64,
    policy: &QuadraturePolicy,
) -> Result<SMatrixResult> {
    let eigenvalues = observable_eigenvalues(spec, basis)?;
    let rate = rate_operator(spec, fields, basis)?.total();
    let n = basis.interior_dim();
    let hbar = basis.constants().hbar;
    let scale = eigenvalues.iter().fold(0.0_f64, |a, l| a.max(l.abs())).max(f64::MIN_POSITIVE);
    let omega = |k: usize| basis.energy(k) / hbar;
    let mut entries = vec![SEntry::Undefined; n * n];
    let mut integrals = std::collections::HashMap::new();
    for k in 0..n {
        for kp in 0..n {
            let gap = eigenvalues[k] - eigenvalues[kp];
            if gap.abs() <= DEGENERACY_TOLERANCE * scale {
                continue;
            }
            let w = omega(k) - omega(kp);
            let mut integral = C64::new(0.0, 0.0);
            for (idx, term) in rate.terms().iter().enumerate() {
                let element = term.op.matrix()[(k, kp)];
                if element.norm() == 0.0 {
                    continue;
                }
                let key = (idx, w.to_bits());
                let value = match integrals.get(&key) {
                    Some(v) => *v,
                    None => {
                        let v = oscillatory_integral(&term.factors, w, t_end, policy)?;
                        integrals.insert(key, v);
                        v
                    }
                };
                integral += element * value;
            }
            let prefactor = C64::from_polar(1.0, (omega(kp) - omega(k)) * t_end) / (I * gap);
            entries[k * n + kp] = SEntry::Defined(prefactor * integral);
        }
    }
    Ok(SMatrixResult {
        observable: spec.name.clone(),
        horizon: t_end,
        eigenvalues,
        entries,
        dim: n,
        excluded_impulses: fields.has_impulses(),
    })
}

/// `|s_kk'(T)|²`.
pub fn transition_probability_s(result: &SMatrixResult, k: usize, kp: usize) -> Result<f64> {
    if k == kp {
        return Err(Error::SameState(k));
    }
    if k >= result.dim || kp >= result.dim {
        return Err(Error::OutsideInterior { index: k.max(kp), interior: result.dim });
    }
    match result.entry(k, kp) {
        SEntry::Defined(z) => Ok(z.norm_sqr()),
        SEntry::Undefined => Err(Error::UndefinedEntry { k, kp }),
    }
}

/// Relative tolerance for calling two `|s|` values equal.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-6;

/// Values below this fraction of the largest entry in either matrix count as zero.
pub const CONSISTENCY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Equal,
    Unequal,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Equal => "equal",
            Verdict::Unequal => "unequal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRow {
    pub k: usize,
    pub kp: usize,
    pub obs_a_abs: f64,
    pub obs_b_abs: f64,
    pub rel_diff: f64,
    pub verdict: Verdict,
}

/// Per-pair comparison of `|s^a_kk'|` and `|s^b_kk'|` for `k < k'` where both are defined.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub observable_a: String,
    pub observable_b: String,
    pub rows: Vec<ConsistencyRow>,
}

impl ConsistencyReport {
    pub fn all_equal(&self) -> bool {
        self.rows.iter().all(|r| r.verdict == Verdict::Equal)
    }

    pub fn max_rel_diff(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_diff).fold(0.0, f64::max)
    }
}

/// Compares two s-matrices built from the same fields.
pub fn compare_s_matrices(a: &SMatrixResult, b: &SMatrixResult) -> Result<ConsistencyReport> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { left: a.dim, right: b.dim });
    }
    let floor = CONSISTENCY_FLOOR * a.max_abs().max(b.max_abs());
    let mut rows = Vec::new();
    for k in 0..a.dim {
        for kp in k + 1..a.dim {
            let (Some(sa), Some(sb)) = (a.entry(k, kp).value(), b.entry(k, kp).value()) else {
                continue;
            };
            let (x, y) = (sa.norm(), sb.norm());
            let big = x.max(y);
            let rel_diff = if big <= floor { 0.0 } else { (x - y).abs() / big };
            let verdict = if rel_diff <= CONSISTENCY_TOLERANCE { Verdict::Equal } else { Verdict::Unequal };
            rows.push(ConsistencyRow { k, kp, obs_a_abs: x, obs_b_abs: y, rel_diff, verdict });
        }
    }
    Ok(ConsistencyReport { observable_a: a.observable.clone(), observable_b: b.observable.clone(), rows })
}

/// Builds both s-matrices and compares them.
pub fn consistency_check(
    fields: &PhysicalFields,
    basis: &Basis,
    t_end: f64,
    spec_a: &ObservableSpec,
    spec_b: &ObservableSpec,
) -> Result<ConsistencyReport> {
    let policy = QuadraturePolicy::default();
    let a = s_matrix(spec_a, fields, basis, t_end, &policy)?;
    let b = s_matrix(spec_b, fields, basis, t_end, &policy)?;
    compare_s_matrices(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{physical_fields, GaugeField};
    use crate::hilbert::{BasisKind, Constants};
    use crate::profile::Profile;
    use crate::quasicanon::Factor;

    fn ho1d() -> Basis {
        Basis::build(BasisKind::Ho1d, 1.0, 10, Constants::default()).unwrap()
    }

    fn ho2d() -> Basis {
        Basis::build(BasisKind::Ho2d, 1.0, 6, Constants::default()).unwrap()
    }

    #[test]
    fn zero_field_gives_zero_entries() {
        let b = ho1d();
        let fields = physical_fields(&GaugeField::zero(1), b.constants());
        let s = s_matrix(&ObservableSpec::energy(&b), &fields, &b, 2.0, &QuadraturePolicy::default()).unwrap();
        assert_eq!(s.max_abs(), 0.0);
        assert_eq!(s.entry(1, 1), SEntry::Undefined);
        assert_eq!(transition_probability_s(&s, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn energy_s_matches_dirac_first_order_for_uniform_field() {
        let b = ho1d();
        let field = GaugeField::uniform_electric(&[0.02], Profile::Rect { t1: 1.3 }).unwrap();
        let policy = QuadraturePolicy::default();
        let s = s_matrix(&ObservableSpec::energy(&b), &physical_fields(&field, b.constants()), &b, 3.0, &policy).unwrap();
        let h1 = crate::dirac::assemble_h1(&field, &b, false).unwrap().total();
        let p = crate::dirac::transition_probability(&h1, &b, 0, 1, 3.0, &policy).unwrap();
        let ps = transition_probability_s(&s, 0, 1).unwrap();
        assert!((p - ps).abs() <= 1e-9 * p, "{p} vs {ps}");
    }

    #[test]
    fn symmetric_moduli() {
        let b = ho2d();
        let field = GaugeField::uniform_electric(&[0.1, 0.05], Profile::Sine { omega: 1.4, t1: 2.0 }).unwrap();
        let fields = physical_fields(&field, b.constants());
        let s = s_matrix(&ObservableSpec::zeta(&b), &fields, &b, 2.5, &QuadraturePolicy::default()).unwrap();
        for k in 0..s.dim() {
            for kp in 0..s.dim() {
                if let (Some(x), Some(y)) = (s.entry(k, kp).value(), s.entry(kp, k).value()) {
                    assert!((x.norm() - y.norm()).abs() <= 1e-8 * x.norm().max(1e-300), "({k},{kp})");
                }
            }
        }
    }

    #[test]
    fn doubling_amplitude_doubles_entries() {
        let b = ho2d();
        let policy = QuadraturePolicy::default();
        let run = |e: f64| {
            let f = GaugeField::uniform_electric(&[e, 0.0], Profile::Rect { t1: 1.0 }).unwrap();
            s_matrix(&ObservableSpec::zeta(&b), &physical_fields(&f, b.constants()), &b, 2.0, &policy).unwrap()
        };
        let (a, c) = (run(0.1), run(0.2));
        for k in 0..a.dim() {
            for kp in 0..a.dim() {
                if let (Some(x), Some(y)) = (a.entry(k, kp).value(), c.entry(k, kp).value()) {
                    assert!((y - x * 2.0).norm() <= 1e-14 * y.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn non_diagonal_observable_rejected() {
        let b = ho2d();
        let spec = ObservableSpec::new("xy", vec![(1.0, vec![Factor::Q(0), Factor::Q(1)])]);
        assert!(matches!(observable_eigenvalues(&spec, &b), Err(Error::NotCodiagonal { .. })));
    }

    #[test]
    fn identical_specs_are_consistent() {
        let b = ho2d();
        let field = GaugeField::uniform_electric(&[0.1, 0.0], Profile::Rect { t1: 1.0 }).unwrap();
        let spec = ObservableSpec::energy(&b);
        let report = consistency_check(&physical_fields(&field, b.constants()), &b, 2.0, &spec, &spec).unwrap();
        assert!(!report.rows.is_empty());
        assert!(report.all_equal());
    }

    #[test]
    fn undefined_entry_reported() {
        let b = ho2d();
        let fields = physical_fields(&GaugeField::zero(2), b.constants());
        let s = s_matrix(&ObservableSpec::energy(&b), &fields, &b, 1.0, &QuadraturePolicy::default()).unwrap();
        // States 1 and 2 share the first excited shell.
        assert_eq!(transition_probability_s(&s, 1, 2), Err(Error::UndefinedEntry { k: 1, kp: 2 }));
        assert_eq!(transition_probability_s(&s, 1, 1), Err(Error::SameState(1)));
    }
}
