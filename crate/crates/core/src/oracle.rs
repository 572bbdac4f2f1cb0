//! Direct propagation of the Schrödinger equation on the full truncated basis.
//!
//! This is the ground truth the perturbative modules are checked against.
//! It works in whatever gauge it is handed: impulsive scalar-potential terms
//! (from gauge functions with jumps) are applied as exact unitary kicks.

use std::collections::HashMap;

use nalgebra::linalg::LU;
use nalgebra::Dyn;

use crate::error::{Error, Result};
use crate::fields::GaugeFunction;
use crate::hilbert::{Basis, Matrix, Operator, State, Vector, C64, I};
use crate::profile::{Profile, Side};
use crate::quadrature::time_grid;
use crate::timed::TimedOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropagationMethod {
    /// `(1 + i dt H/2ħ) ψ' = (1 - i dt H/2ħ) ψ` with `H` sampled at the step midpoint.
    #[default]
    CrankNicolson,
    /// `ψ' = exp(-i dt H/ħ) ψ` with `H` sampled at the step midpoint.
    MidpointExponential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub method: PropagationMethod,
}

impl PropagationResult {
    pub fn final_state(&self) -> &State {
        self.states.last().expect("propagation result is never empty")
    }

    /// Largest `|‖ψ‖² - 1|` over the run.
    pub fn norm_drift(&self) -> f64 {
        self.states.iter().map(|s| (s.norm_sqr() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Largest step allowed: `min(0.05/ω_max, t1/200)` over the full basis.
pub fn oracle_max_step(h1: &TimedOperator, basis: &Basis) -> f64 {
    let by_freq = 0.05 / basis.max_frequency().max(h1.max_profile_frequency());
    match h1.min_duration() {
        Some(t1) => by_freq.min(t1 / 200.0),
        None => by_freq,
    }
}

/// Hermitian-hint defect allowed for sampled Hamiltonians (relative, full basis).
const HERMITIAN_TOLERANCE: f64 = 1e-10;

fn check_hermitian(h: &Matrix, label: &str) -> Result<()> {
    let scale = crate::hilbert::max_abs(h);
    if scale == 0.0 {
        return Ok(());
    }
    let defect = crate::hilbert::max_abs(&(h - h.adjoint())) / scale;
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { label: label.into(), defect });
    }
    Ok(())
}

/// `exp(-i θ M)` for hermitian `M`.
pub fn hermitian_exp(m: &Matrix, theta: f64) -> Matrix {
    let eig = m.clone().symmetric_eigen();
    let phases = Vector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| C64::from_polar(1.0, -theta * l)));
    let v = &eig.eigenvectors;
    v * Matrix::from_diagonal(&phases) * v.adjoint()
}

/// Accumulated impulse operator `Σ coef·op` for deltas at each time.
fn impulses(h1: &TimedOperator) -> Result<Vec<(f64, Matrix)>> {
    let mut out: Vec<(f64, Matrix)> = Vec::new();
    for term in h1.terms().iter().filter(|t| t.is_impulsive()) {
        let deltas: Vec<f64> = term
            .factors
            .iter()
            .filter_map(|p| match p {
                Profile::Delta { at } => Some(*at),
                _ => None,
            })
            .collect();
        if deltas.len() > 1 {
            return Err(Error::UnsupportedProfile("product of delta impulses".into()));
        }
        let at = deltas[0];
        // Continuous factors multiplying the impulse are taken at its instant.
        let weight: f64 = term.factors.iter().filter(|p| !p.is_impulsive()).map(|p| p.value(at)).product();
        let m = term.op.matrix() * C64::new(weight, 0.0);
        match out.iter_mut().find(|(t, _)| *t == at) {
            Some((_, acc)) => *acc += m,
            None => out.push((at, m)),
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

const STEP_CACHE_LIMIT: usize = 16;

enum StepOp {
    Lu(LU<C64, Dyn, Dyn>, Matrix),
    Exp(Matrix),
}

impl StepOp {
    fn apply(&self, psi: &Vector) -> Vector {
        match self {
            StepOp::Lu(lu, rhs) => lu.solve(&(rhs * psi)).expect("Crank–Nicolson matrix is invertible for hermitian H"),
            StepOp::Exp(u) => u * psi,
        }
    }
}

/// Propagates `psi0` under `H0 + h1(t)` from 0 to `t_end`.
pub fn propagate(
    basis: &Basis,
    h1: &TimedOperator,
    psi0: &State,
    t_end: f64,
    dt: f64,
    method: PropagationMethod,
) -> Result<PropagationResult> {
    if psi0.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { left: psi0.dim(), right: basis.dim() });
    }
    if h1.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { left: h1.dim(), right: basis.dim() });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::NumericalPolicy { policy: "dt", detail: format!("dt must be finite and > 0, got {dt}") });
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::NumericalPolicy { policy: "horizon", detail: format!("T must be finite and > 0, got {t_end}") });
    }
    let limit = oracle_max_step(h1, basis);
    if dt > limit {
        return Err(Error::NumericalPolicy {
            policy: "oracle_step",
            detail: format!("dt = {dt} exceeds min(0.05/ω_max, t1/200) = {limit}"),
        });
    }
    let hbar = basis.constants().hbar;
    let kicks: Vec<(f64, Matrix)> = impulses(h1)?
        .into_iter()
        .filter(|(at, _)| (0.0..=t_end).contains(at))
        .map(|(at, m)| {
            check_hermitian(&m, "impulse")?;
            Ok((at, hermitian_exp(&m, 1.0 / hbar)))
        })
        .collect::<Result<_>>()?;
    let regular = h1.regular();
    let h0 = basis.h0().matrix();
    let times = time_grid(t_end, dt, &h1.breakpoints());
    let mut cache: HashMap<Vec<u64>, StepOp> = HashMap::new();
    let mut psi = psi0.coeffs().clone();
    let kick_at = |t: f64, psi: &mut Vector| {
        for (at, u) in &kicks {
            if *at == t {
                *psi = u * &*psi;
            }
        }
    };
    kick_at(0.0, &mut psi);
    let mut states = Vec::with_capacity(times.len());
    states.push(State::from_raw(psi.clone()));
    for w in times.windows(2) {
        let h_step = w[1] - w[0];
        let tm = 0.5 * (w[0] + w[1]);
        let mut key: Vec<u64> = regular.terms().iter().map(|t| t.factor(tm, Side::Point).to_bits()).collect();
        key.push(h_step.to_bits());
        if !cache.contains_key(&key) {
            // Piecewise-constant pulses reuse a handful of factorizations;
            // smoothly varying ones never repeat a key.
            if cache.len() >= STEP_CACHE_LIMIT {
                cache.clear();
            }
            let h = h0 + regular.matrix_at(tm, Side::Point);
            check_hermitian(&h, "H(t)")?;
            let op = match method {
                PropagationMethod::CrankNicolson => {
                    let n = h.nrows();
                    let a = I * (h_step / (2.0 * hbar));
                    let lhs = Matrix::identity(n, n) + &h * a;
                    let rhs = Matrix::identity(n, n) - &h * a;
                    StepOp::Lu(lhs.lu(), rhs)
                }
                PropagationMethod::MidpointExponential => StepOp::Exp(hermitian_exp(&h, h_step / hbar)),
            };
            cache.insert(key.clone(), op);
        }
        psi = cache[&key].apply(&psi);
        kick_at(w[1], &mut psi);
        states.push(State::from_raw(psi.clone()));
    }
    Ok(PropagationResult { times, states, method })
}

/// `|⟨n|ψ(T)⟩|²` for interior index `n`.
pub fn exact_transition(prop: &PropagationResult, basis: &Basis, n: usize) -> Result<f64> {
    basis.check_interior(n)?;
    let psi = prop.final_state();
    if psi.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { left: psi.dim(), right: basis.dim() });
    }
    Ok(psi.coeffs()[n].norm_sqr())
}

/// `⟨ψ(t)|op|ψ(t)⟩` at every stored time (real part).
pub fn exact_expectation(prop: &PropagationResult, op: &Operator) -> Result<Vec<f64>> {
    prop.states.iter().map(|s| crate::hilbert::expectation(s, op).map(|z| z.re)).collect()
}

/// Multiplies `state` by `exp(sign · iQ f(q, t)/ħc)`.
///
/// A state evolved with potentials `(A, Φ)` becomes, with `sign = +1`, the
/// same physical state described in the gauge `(A + ∇f, Φ - (1/c)∂f/∂t)`;
/// `sign = -1` maps back.
pub fn apply_gauge_phase(state: &State, f: &GaugeFunction, basis: &Basis, t: f64, sign: f64) -> Result<State> {
    if state.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { left: state.dim(), right: basis.dim() });
    }
    let c = basis.constants();
    let fop = f.function().poly_at(t, Side::Point).to_operator(basis)?;
    let u = hermitian_exp(fop.matrix(), -sign * c.charge / (c.hbar * c.c_light));
    Ok(State::from_raw(u * state.coeffs()))
}

/// `∫₀^u e^{iwτ} dτ`.
fn phase_integral(w: f64, u: f64) -> C64 {
    if w == 0.0 {
        C64::new(u, 0.0)
    } else {
        (C64::from_polar(1.0, w * u) - 1.0) / (I * w)
    }
}

/// Closed-form `∫₀^T profile(τ) e^{iωτ} dτ` for the forced-oscillator profiles.
pub fn profile_fourier(profile: &Profile, omega: f64, t_end: f64) -> Result<C64> {
    let upto = |t1: f64| t_end.min(t1).max(0.0);
    Ok(match *profile {
        Profile::Constant => phase_integral(omega, t_end),
        Profile::Rect { t1 } => phase_integral(omega, upto(t1)),
        Profile::Sine { omega: w, t1 } => {
            let u = upto(t1);
            (phase_integral(omega + w, u) - phase_integral(omega - w, u)) / (2.0 * I)
        }
        Profile::Cosine { omega: w, t1 } => {
            let u = upto(t1);
            (phase_integral(omega + w, u) + phase_integral(omega - w, u)) * 0.5
        }
        other => return Err(Error::UnsupportedProfile(format!("no forced-oscillator closed form for {other}"))),
    })
}

/// First-order `P_0→1` of a 1D oscillator driven by the uniform field
/// `E0 · profile(t)`: `|(Q E0/ħ) √(ħ/2mω0) ∫₀^T profile(τ) e^{iω0τ} dτ|²`.
pub fn forced_oscillator_reference(
    e0: f64,
    profile: &Profile,
    omega0: f64,
    constants: &crate::hilbert::Constants,
    t_end: f64,
) -> Result<f64> {
    constants.validate()?;
    let c = constants;
    let x01 = (c.hbar / (2.0 * c.mass * omega0)).sqrt();
    let amp = c.charge * e0 / c.hbar * x01 * profile_fourier(profile, omega0, t_end)?.norm();
    Ok(amp * amp)
}

/// Exact `P_0→1 = |β|² e^{-|β|²}` of the driven oscillator (coherent final state),
/// with `|β|²` the first-order value.
pub fn forced_oscillator_exact(
    e0: f64,
    profile: &Profile,
    omega0: f64,
    constants: &crate::hilbert::Constants,
    t_end: f64,
) -> Result<f64> {
    let beta2 = forced_oscillator_reference(e0, profile, omega0, constants, t_end)?;
    Ok(beta2 * (-beta2).exp())
}
