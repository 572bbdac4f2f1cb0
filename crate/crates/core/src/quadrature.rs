//! Time grids and oscillatory integrals over piecewise-smooth profiles.
//!
//! Both place every profile breakpoint on a node, so a rectangular pulse
//! edge never falls inside a step or a Simpson panel.

use crate::error::{Error, Result};
use crate::hilbert::C64;
use crate::profile::{Profile, Side};

/// Settings for [`oscillatory_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePolicy {
    /// Minimum Simpson panels spanning the shortest pulse duration.
    pub min_panels_per_pulse: usize,
    pub rel_tol: f64,
    /// Integrals below `abs_floor × ∫|g|` count as converged (they vanish analytically).
    pub abs_floor: f64,
    pub max_doublings: u32,
}

impl Default for QuadraturePolicy {
    fn default() -> Self {
        Self { min_panels_per_pulse: 400, rel_tol: 1e-9, abs_floor: 1e-13, max_doublings: 14 }
    }
}

/// Breakpoints strictly inside `(0, t_end)`, with `0` and `t_end` added.
pub fn segment_bounds(t_end: f64, breakpoints: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0];
    b.extend(breakpoints.iter().copied().filter(|&x| x > 0.0 && x < t_end));
    b.push(t_end);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Grid on `[0, t_end]` with steps no longer than `dt` and every breakpoint a node.
pub fn time_grid(t_end: f64, dt: f64, breakpoints: &[f64]) -> Vec<f64> {
    let bounds = segment_bounds(t_end, breakpoints);
    let mut grid = vec![0.0];
    for w in bounds.windows(2) {
        let len = w[1] - w[0];
        let n = (len / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        for j in 1..n {
            grid.push(w[0] + len * j as f64 / n as f64);
        }
        grid.push(w[1]);
    }
    grid
}

fn product(factors: &[Profile], t: f64, side: Side) -> f64 {
    factors.iter().map(|p| p.value_at(t, side)).product()
}

/// Composite Simpson sums of `g` and `|g|` on `[a, b]` with `panels` panels.
fn simpson(factors: &[Profile], omega: f64, a: f64, b: f64, panels: usize) -> (C64, f64) {
    let n = 2 * panels;
    let h = (b - a) / n as f64;
    let mut sum = C64::new(0.0, 0.0);
    let mut abs = 0.0;
    for j in 0..=n {
        let (t, side) = match j {
            0 => (a, Side::Right),
            _ if j == n => (b, Side::Left),
            _ => (a + h * j as f64, Side::Point),
        };
        let w = if j == 0 || j == n {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let g = C64::from_polar(product(factors, t, side), omega * t);
        sum += g * w;
        abs += g.norm() * w;
    }
    (sum * (h / 3.0), abs * h / 3.0)
}

/// `∫₀^T Π factors(t) · e^{iωt} dt` by composite Simpson with panel doubling
/// and a final Richardson step.
pub fn oscillatory_integral(factors: &[Profile], omega: f64, t_end: f64, policy: &QuadraturePolicy) -> Result<C64> {
    if factors.iter().any(Profile::is_impulsive) {
        return Err(Error::ImpulsiveField);
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::NumericalPolicy { policy: "horizon", detail: format!("T must be finite and >= 0, got {t_end}") });
    }
    if t_end == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let breakpoints: Vec<f64> = factors.iter().flat_map(Profile::breakpoints).collect();
    let bounds = segment_bounds(t_end, &breakpoints);
    let pulse = factors.iter().filter_map(Profile::duration).fold(t_end, f64::min);
    let carrier = omega.abs() + factors.iter().map(Profile::frequency).sum::<f64>();
    let mut total = C64::new(0.0, 0.0);
    for w in bounds.windows(2) {
        let len = w[1] - w[0];
        let by_pulse = (policy.min_panels_per_pulse as f64 * len / pulse).ceil();
        let by_carrier = (len * carrier).ceil() * 4.0;
        let mut panels = by_pulse.max(by_carrier).max(4.0) as usize;
        let (mut prev, mut l1) = simpson(factors, omega, w[0], w[1], panels);
        let mut converged = None;
        for _ in 0..policy.max_doublings {
            panels *= 2;
            let (next, abs) = simpson(factors, omega, w[0], w[1], panels);
            l1 = abs;
            let diff = (next - prev).norm();
            if diff <= policy.rel_tol * next.norm() || diff <= policy.abs_floor * l1 {
                converged = Some(next + (next - prev) / 15.0);
                break;
            }
            prev = next;
        }
        match converged {
            Some(v) => total += v,
            None => {
                return Err(Error::NumericalPolicy {
                    policy: "quadrature",
                    detail: format!("no convergence on [{}, {}] (∫|g| = {l1:e})", w[0], w[1]),
                })
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_hits_breakpoints() {
        let g = time_grid(5.0, 0.3, &[0.0, 2.0, 7.0]);
        assert!(g.contains(&2.0));
        assert_eq!(*g.last().unwrap(), 5.0);
        assert!(g.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.3 + 1e-15));
    }

    #[test]
    fn rect_integral_matches_closed_form() {
        // ∫₀^t1 e^{iωt} dt = (e^{iωt1} - 1)/(iω)
        let (omega, t1) = (1.3, 2.2);
        let got = oscillatory_integral(&[Profile::Rect { t1 }], omega, 5.0, &QuadraturePolicy::default()).unwrap();
        let exact = (C64::from_polar(1.0, omega * t1) - 1.0) / C64::new(0.0, omega);
        assert!((got - exact).norm() <= 1e-12 * exact.norm());
    }

    #[test]
    fn full_period_integral_vanishes() {
        let got = oscillatory_integral(&[Profile::Rect { t1: 2.0 * PI }], 1.0, 2.0 * PI, &QuadraturePolicy::default()).unwrap();
        assert!(got.norm() < 1e-12);
    }

    #[test]
    fn resonant_sine() {
        // ∫₀^{2π} sin t e^{it} dt = iπ
        let p = Profile::Sine { omega: 1.0, t1: 2.0 * PI };
        let got = oscillatory_integral(&[p], 1.0, 2.0 * PI, &QuadraturePolicy::default()).unwrap();
        assert!((got - C64::new(0.0, PI)).norm() < 1e-11);
    }

    #[test]
    fn impulsive_factor_rejected() {
        let r = oscillatory_integral(&[Profile::Delta { at: 0.0 }], 1.0, 1.0, &QuadraturePolicy::default());
        assert_eq!(r, Err(Error::ImpulsiveField));
    }
}
