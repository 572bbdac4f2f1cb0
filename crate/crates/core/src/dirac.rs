//! Standard time-dependent perturbation theory in the interaction picture.
//!
//! The state is expanded as `Σ C_n(t) e^{-iε_n t/ħ} |n⟩`, which turns the
//! Schrödinger equation into the coefficient system
//! `iħ dC_n/dt = Σ_k (H1)_nk e^{iω_nk t} C_k`. The system is restricted to
//! the interior block of the basis.

use crate::error::{Error, Result};
use crate::fields::{GaugeField, GaugeFunction};
use crate::hilbert::{sym_product, Basis, Vector, C64, I};
use crate::profile::Side;
use crate::quadrature::{oscillatory_integral, time_grid, QuadraturePolicy};
use crate::timed::TimedOperator;

/// `H1 = -(Q/mc) A1*p + (Q²/2mc²) A1² + QΦ1`, kept as separate timed terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbingHamiltonian {
    pub linear_a: TimedOperator,
    pub quadratic_a: TimedOperator,
    pub scalar: TimedOperator,
    pub include_a2: bool,
}

impl PerturbingHamiltonian {
    /// The sum of the terms in use (the `A1²` term only when `include_a2`).
    pub fn total(&self) -> TimedOperator {
        let mut h = TimedOperator::zero(self.linear_a.dim(), "H1");
        h.extend(&self.linear_a).expect("terms share a dimension");
        if self.include_a2 {
            h.extend(&self.quadratic_a).expect("terms share a dimension");
        }
        h.extend(&self.scalar).expect("terms share a dimension");
        h
    }
}

/// Builds `H1` for `field` on `basis`.
pub fn assemble_h1(field: &GaugeField, basis: &Basis, include_a2: bool) -> Result<PerturbingHamiltonian> {
    if field.dim() != basis.spatial_dim() {
        return Err(Error::DimensionMismatch { left: field.dim(), right: basis.spatial_dim() });
    }
    let c = basis.constants();
    let n = basis.dim();
    let mut linear_a = TimedOperator::zero(n, "-(Q/mc)A1*p");
    let mut quadratic_a = TimedOperator::zero(n, "(Q²/2mc²)A1²");
    let mut scalar = TimedOperator::zero(n, "QΦ1");
    let lin = -c.charge / (c.mass * c.c_light);
    let quad = c.charge * c.charge / (2.0 * c.mass * c.c_light * c.c_light);
    for (axis, a) in field.vector().iter().enumerate() {
        for (profile, poly) in a.terms() {
            let op = sym_product(&poly.to_operator(basis)?, basis.p(axis))?;
            linear_a.push(vec![*profile], op.scaled(lin))?;
        }
        for (pa, qa) in a.terms() {
            for (pb, qb) in a.terms() {
                let op = qa.mul(qb).to_operator(basis)?;
                quadratic_a.push(vec![*pa, *pb], op.scaled(quad))?;
            }
        }
    }
    for (profile, poly) in field.scalar().terms() {
        scalar.push(vec![*profile], poly.to_operator(basis)?.scaled(c.charge))?;
    }
    Ok(PerturbingHamiltonian { linear_a, quadratic_a, scalar, include_a2 })
}

fn check_interior_vector(basis: &Basis, v: &Vector) -> Result<()> {
    if v.len() != basis.interior_dim() {
        return Err(Error::DimensionMismatch { left: v.len(), right: basis.interior_dim() });
    }
    Ok(())
}

fn phases(basis: &Basis, t: f64) -> Vector {
    let hbar = basis.constants().hbar;
    Vector::from_iterator(
        basis.interior_dim(),
        (0..basis.interior_dim()).map(|i| C64::from_polar(1.0, basis.energy(i) * t / hbar)),
    )
}

fn rhs(h1: &TimedOperator, basis: &Basis, t: f64, side: Side, coeffs: &Vector) -> Vector {
    let n = basis.interior_dim();
    let h = h1.matrix_at(t, side);
    let ph = phases(basis, t);
    let u = coeffs.component_mul(&ph.map(|z| z.conj()));
    let w = h.view((0, 0), (n, n)) * u;
    w.component_mul(&ph) * (-I / basis.constants().hbar)
}

/// `dC_n/dt = -(i/ħ) Σ_k C_k (H1)_nk e^{iω_nk t}` on the interior block.
pub fn coefficient_rhs(t: f64, coeffs: &Vector, h1: &TimedOperator, basis: &Basis) -> Result<Vector> {
    check_interior_vector(basis, coeffs)?;
    if h1.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { left: h1.dim(), right: basis.dim() });
    }
    Ok(rhs(h1, basis, t, Side::Point, coeffs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientMethod {
    Rk4,
    EulerDemo,
    FirstOrder,
}

/// Interior-block coefficients sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTrajectory {
    pub times: Vec<f64>,
    pub coeffs: Vec<Vector>,
    pub method: CoefficientMethod,
}

impl CoefficientTrajectory {
    pub fn norms_sqr(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_squared()).collect()
    }

    pub fn final_coeffs(&self) -> &Vector {
        self.coeffs.last().expect("trajectory is never empty")
    }

    /// Largest `|‖C‖² - 1|` along the trajectory.
    pub fn norm_drift(&self) -> f64 {
        self.norms_sqr().iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn check_step(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::NumericalPolicy { policy: "dt", detail: format!("dt must be finite and > 0, got {dt}") });
    }
    Ok(())
}

fn check_horizon(t_end: f64) -> Result<()> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::NumericalPolicy { policy: "horizon", detail: format!("T must be finite and > 0, got {t_end}") });
    }
    Ok(())
}

/// Largest RK4 step allowed: `min(0.01/ω_max, t1/200)`.
pub fn rk4_max_step(h1: &TimedOperator, basis: &Basis) -> f64 {
    let by_freq = 0.01 / basis.max_interior_frequency().max(h1.max_profile_frequency());
    match h1.min_duration() {
        Some(t1) => by_freq.min(t1 / 200.0),
        None => by_freq,
    }
}

/// Integrates the coefficient system with classical fixed-step RK4.
pub fn integrate_rk4(h1: &TimedOperator, basis: &Basis, c0: &Vector, t_end: f64, dt: f64) -> Result<CoefficientTrajectory> {
    check_interior_vector(basis, c0)?;
    check_step(dt)?;
    check_horizon(t_end)?;
    if h1.has_impulses() {
        return Err(Error::ImpulsiveField);
    }
    let limit = rk4_max_step(h1, basis);
    if dt > limit {
        return Err(Error::NumericalPolicy {
            policy: "rk4_step",
            detail: format!("dt = {dt} exceeds min(0.01/ω_max, t1/200) = {limit}"),
        });
    }
    let times = time_grid(t_end, dt, &h1.breakpoints());
    let mut coeffs = Vec::with_capacity(times.len());
    let mut c = c0.clone();
    coeffs.push(c.clone());
    for w in times.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let h = tb - ta;
        let tm = 0.5 * (ta + tb);
        let k1 = rhs(h1, basis, ta, Side::Right, &c);
        let k2 = rhs(h1, basis, tm, Side::Point, &(&c + &k1 * C64::new(0.5 * h, 0.0)));
        let k3 = rhs(h1, basis, tm, Side::Point, &(&c + &k2 * C64::new(0.5 * h, 0.0)));
        let k4 = rhs(h1, basis, tb, Side::Left, &(&c + &k3 * C64::new(h, 0.0)));
        c += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
        coeffs.push(c.clone());
    }
    Ok(CoefficientTrajectory { times, coeffs, method: CoefficientMethod::Rk4 })
}

/// Interior unit vector for index `k`.
pub fn unit_coeffs(basis: &Basis, k: usize) -> Result<Vector> {
    basis.check_interior(k)?;
    let mut c = Vector::zeros(basis.interior_dim());
    c[k] = C64::new(1.0, 0.0);
    Ok(c)
}

/// `-(i/ħ) ∫₀^T (H1)_nk(τ) e^{iω_nk τ} dτ`.
pub fn first_order_amplitude(
    h1: &TimedOperator,
    basis: &Basis,
    k: usize,
    n: usize,
    t_end: f64,
    policy: &QuadraturePolicy,
) -> Result<C64> {
    basis.check_interior(k)?;
    basis.check_interior(n)?;
    if n == k {
        return Err(Error::SameState(k));
    }
    if h1.has_impulses() {
        return Err(Error::ImpulsiveField);
    }
    let omega = basis.omega_nk(n, k);
    let mut total = C64::new(0.0, 0.0);
    for term in h1.terms() {
        let element = term.op.matrix()[(n, k)];
        if element.norm() == 0.0 {
            continue;
        }
        total += element * oscillatory_integral(&term.factors, omega, t_end, policy)?;
    }
    Ok(total * (-I / basis.constants().hbar))
}

/// `|first_order_amplitude|²`.
pub fn transition_probability(
    h1: &TimedOperator,
    basis: &Basis,
    k: usize,
    n: usize,
    t_end: f64,
    policy: &QuadraturePolicy,
) -> Result<f64> {
    Ok(first_order_amplitude(h1, basis, k, n, t_end, policy)?.norm_sqr())
}

/// Explicit first-order stepping `C(t+dt) = C(t) - (i/ħ) dt H_I(t) C(t)` from
/// eigenstate `k`, returning `‖C‖²` after each of `steps` steps (index 0 is
/// the initial value).
pub fn euler_norm_demo(h1: &TimedOperator, basis: &Basis, k: usize, dt: f64, steps: usize) -> Result<Vec<f64>> {
    check_step(dt)?;
    let mut c = unit_coeffs(basis, k)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(c.norm_squared());
    for j in 0..steps {
        let t = j as f64 * dt;
        c = &c + rhs(h1, basis, t, Side::Right, &c) * C64::new(dt, 0.0);
        out.push(c.norm_squared());
    }
    Ok(out)
}

/// First-order `P_nk` computed with `field` and with its gauge transform by `f`.
pub fn gauge_sensitivity(
    field: &GaugeField,
    f: &GaugeFunction,
    basis: &Basis,
    k: usize,
    n: usize,
    t_end: f64,
    include_a2: bool,
) -> Result<(f64, f64)> {
    let policy = QuadraturePolicy::default();
    let original = assemble_h1(field, basis, include_a2)?.total();
    let moved = crate::fields::gauge_transform(field, f, basis.constants())?;
    let transformed = assemble_h1(&moved, basis, include_a2)?.total();
    Ok((
        transition_probability(&original, basis, k, n, t_end, &policy)?,
        transition_probability(&transformed, basis, k, n, t_end, &policy)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{max_abs, BasisKind, Constants, QuantumNumbers};
    use crate::poly::Poly;
    use crate::profile::Profile;

    fn ho1d() -> Basis {
        Basis::build(BasisKind::Ho1d, 1.0, 10, Constants::default()).unwrap()
    }

    fn ho2d() -> Basis {
        Basis::build(BasisKind::Ho2d, 1.0, 8, Constants::default()).unwrap()
    }

    #[test]
    fn zero_field_gives_zero_hamiltonian() {
        let b = ho2d();
        let h = assemble_h1(&GaugeField::zero(2), &b, true).unwrap();
        assert!(h.total().is_zero());
        let r = coefficient_rhs(0.3, &unit_coeffs(&b, 2).unwrap(), &h.total(), &b).unwrap();
        assert!(r.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn symmetric_gauge_linear_term_is_angular_momentum() {
        let c = Constants::new(1.0, 1.3, 0.7, 2.0).unwrap();
        let b = Basis::build(BasisKind::Ho2d, 1.0, 8, c).unwrap();
        let eps = 0.2;
        let field = GaugeField::symmetric_magnetic(eps, Profile::Rect { t1: 1.0 }).unwrap();
        let h = assemble_h1(&field, &b, true).unwrap();
        let n = b.interior_dim();
        let lin = b.interior_block(&h.linear_a.matrix_at(0.5, Side::Point));
        let expect = b.interior_block(b.lz().unwrap().matrix()) * C64::new(-eps * c.charge / (2.0 * c.mass * c.c_light), 0.0);
        assert!(max_abs(&(lin - expect)) < 1e-13);
        let quad = b.interior_block(&h.quadratic_a.matrix_at(0.5, Side::Point));
        let r2 = b.q(0).matrix() * b.q(0).matrix() + b.q(1).matrix() * b.q(1).matrix();
        let expect = b.interior_block(&r2) * C64::new(eps * eps * c.charge * c.charge / (8.0 * c.mass * c.c_light * c.c_light), 0.0);
        assert!(max_abs(&(quad - expect)) < 1e-13);
        assert!(h.total().hermiticity_defect(n) < 1e-12);
    }

    #[test]
    fn scalar_coupling() {
        let b = ho1d();
        let e0 = 0.3;
        let field = GaugeField::uniform_electric(&[e0], Profile::Rect { t1: 1.0 }).unwrap();
        let h = assemble_h1(&field, &b, false).unwrap().total();
        let got = h.matrix_at(0.5, Side::Point);
        let expect = b.q(0).matrix() * C64::new(-e0, 0.0);
        assert!(max_abs(&(got - expect)) < 1e-15);
    }

    #[test]
    fn diagonal_rhs_is_pure_phase_rate() {
        let b = ho2d();
        let field = GaugeField::symmetric_magnetic(0.1, Profile::Rect { t1: 1.0 }).unwrap();
        let h = assemble_h1(&field, &b, false).unwrap().total();
        let k = b.index_of(QuantumNumbers::Ho2d { n_radial: 1, m_ang: 1 }).unwrap();
        let r = coefficient_rhs(0.2, &unit_coeffs(&b, k).unwrap(), &h, &b).unwrap();
        let hkk = h.matrix_at(0.2, Side::Point)[(k, k)];
        assert!((r[k] - (-I * hkk)).norm() < 1e-15);
        assert!(r.iter().enumerate().filter(|(i, _)| *i != k).all(|(_, z)| z.norm() < 1e-15));
    }

    #[test]
    fn uniform_field_sources_only_first_excited_state() {
        // dC_1/dt at t=0 from the ground state: -(i/ħ)(-QE0)⟨1|x|0⟩, magnitude (QE0/ħ)√(ħ/2mω).
        let b = ho1d();
        let e0 = 0.4;
        let field = GaugeField::uniform_electric(&[e0], Profile::Constant).unwrap();
        let h = assemble_h1(&field, &b, false).unwrap().total();
        let r = coefficient_rhs(0.0, &unit_coeffs(&b, 0).unwrap(), &h, &b).unwrap();
        assert!((r[1].norm() - e0 * 0.5_f64.sqrt()).abs() < 1e-15);
        assert!(r.iter().enumerate().filter(|(i, _)| *i != 1).all(|(_, z)| z.norm() == 0.0));
    }

    #[test]
    fn rect_pulse_first_order_probability_closed_form() {
        let b = ho1d();
        let (e0, t1) = (0.05, 1.7);
        let field = GaugeField::uniform_electric(&[e0], Profile::Rect { t1 }).unwrap();
        let h = assemble_h1(&field, &b, false).unwrap().total();
        let p = transition_probability(&h, &b, 0, 1, 4.0, &QuadraturePolicy::default()).unwrap();
        let integral = (C64::from_polar(1.0, t1) - 1.0) / C64::new(0.0, 1.0);
        let expect = e0 * e0 / 2.0 * integral.norm_sqr();
        assert!((p - expect).abs() <= 1e-9 * expect);
        assert_eq!(first_order_amplitude(&h, &b, 0, 0, 4.0, &QuadraturePolicy::default()), Err(Error::SameState(0)));
        assert_eq!(transition_probability(&h, &b, 0, 3, 4.0, &QuadraturePolicy::default()).unwrap(), 0.0);
    }

    #[test]
    fn rk4_agrees_with_first_order_to_second_order() {
        let b = ho1d();
        let policy = QuadraturePolicy::default();
        let mut gaps = vec![];
        for e0 in [0.02, 0.01] {
            // The x² part opens the second-order path 0 → 2 → 1.
            let phi = Poly::from_terms(1, &[(-e0, vec![1]), (0.5 * e0, vec![2])]).unwrap();
            let field = GaugeField::new(
                vec![crate::fields::TimedPoly::zero(1)],
                crate::fields::TimedPoly::single(Profile::Sine { omega: 0.8, t1: 3.0 }, phi),
            )
            .unwrap();
            let h = assemble_h1(&field, &b, false).unwrap().total();
            let dt = rk4_max_step(&h, &b);
            let traj = integrate_rk4(&h, &b, &unit_coeffs(&b, 0).unwrap(), 3.0, dt).unwrap();
            assert!(traj.norm_drift() < 1e-10);
            let amp = first_order_amplitude(&h, &b, 0, 1, 3.0, &policy).unwrap();
            gaps.push((traj.final_coeffs()[1] - amp).norm());
        }
        let ratio = gaps[0] / gaps[1];
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn rk4_step_policy_enforced() {
        let b = ho1d();
        let field = GaugeField::uniform_electric(&[0.1], Profile::Rect { t1: 1.0 }).unwrap();
        let h = assemble_h1(&field, &b, false).unwrap().total();
        let err = integrate_rk4(&h, &b, &unit_coeffs(&b, 0).unwrap(), 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::NumericalPolicy { policy: "rk4_step", .. }));
        assert!(matches!(
            integrate_rk4(&h, &b, &unit_coeffs(&b, 0).unwrap(), 1.0, -1.0),
            Err(Error::NumericalPolicy { policy: "dt", .. })
        ));
    }

    #[test]
    fn euler_demo_with_zero_field_keeps_unit_norm() {
        let b = ho2d();
        let h = TimedOperator::zero(b.dim(), "0");
        assert!(euler_norm_demo(&h, &b, 3, 0.01, 20).unwrap().iter().all(|&n| n == 1.0));
    }

    #[test]
    fn pure_gauge_field_has_spurious_first_order_transition() {
        let b = ho1d();
        let f = GaugeFunction::new(crate::fields::TimedPoly::single(
            Profile::SineIntegral { omega: 1.1, t1: 2.0 },
            Poly::coordinate(1, 0).scale(0.05),
        ))
        .unwrap();
        let (p0, p1) = gauge_sensitivity(&GaugeField::zero(1), &f, &b, 0, 1, 3.0, false).unwrap();
        assert_eq!(p0, 0.0);
        assert!(p1 > 1e-6);
        let (a, bb) = gauge_sensitivity(&GaugeField::zero(1), &GaugeFunction::zero(1), &b, 0, 1, 3.0, false).unwrap();
        assert_eq!(a, bb);
    }
}
