//! Scalar time profiles multiplying the spatial part of separable fields.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Which value to take at a discontinuity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// The defined point value (windows are closed intervals).
    Point,
    /// Limit from below, `f(t⁻)`.
    Left,
    /// Limit from above, `f(t⁺)`.
    Right,
}

/// A unit-amplitude time profile. Field amplitudes live in the polynomial coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// 1 for all t.
    Constant,
    /// The value t.
    Ramp,
    /// 1 on `[0, t1]`, 0 otherwise.
    Rect { t1: f64 },
    /// `∫₀ᵗ Rect`: 0 before the pulse, t during it, t1 afterwards.
    RectIntegral { t1: f64 },
    /// `sin(ωt)` on `[0, t1]`, 0 otherwise.
    Sine { omega: f64, t1: f64 },
    /// `cos(ωt)` on `[0, t1]`, 0 otherwise.
    Cosine { omega: f64, t1: f64 },
    /// `∫₀ᵗ Sine`, held at its final value after t1.
    SineIntegral { omega: f64, t1: f64 },
    /// Dirac delta at `at`. Evaluates to zero pointwise; only ever produced by
    /// differentiating a profile across a jump.
    Delta { at: f64 },
}

fn in_window(t: f64, t1: f64, side: Side) -> bool {
    match side {
        Side::Point => (0.0..=t1).contains(&t),
        Side::Right => 0.0 <= t && t < t1,
        Side::Left => 0.0 < t && t <= t1,
    }
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        let valid = match *self {
            Profile::Constant | Profile::Ramp => true,
            Profile::Rect { t1 } | Profile::RectIntegral { t1 } => ok(t1),
            Profile::Sine { omega, t1 }
            | Profile::Cosine { omega, t1 }
            | Profile::SineIntegral { omega, t1 } => ok(t1) && ok(omega),
            Profile::Delta { at } => at.is_finite(),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::UnsupportedProfile(format!("invalid parameters in {self}")))
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.value_at(t, Side::Point)
    }

    pub fn value_at(&self, t: f64, side: Side) -> f64 {
        match *self {
            Profile::Constant => 1.0,
            Profile::Ramp => t,
            Profile::Rect { t1 } => {
                if in_window(t, t1, side) {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::RectIntegral { t1 } => t.clamp(0.0, t1),
            Profile::Sine { omega, t1 } => {
                if in_window(t, t1, side) {
                    (omega * t).sin()
                } else {
                    0.0
                }
            }
            Profile::Cosine { omega, t1 } => {
                if in_window(t, t1, side) {
                    (omega * t).cos()
                } else {
                    0.0
                }
            }
            Profile::SineIntegral { omega, t1 } => {
                if t <= 0.0 {
                    0.0
                } else {
                    (1.0 - (omega * t.min(t1)).cos()) / omega
                }
            }
            Profile::Delta { .. } => 0.0,
        }
    }

    pub fn is_impulsive(&self) -> bool {
        matches!(self, Profile::Delta { .. })
    }

    /// Times at which the profile or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Profile::Constant | Profile::Ramp => vec![],
            Profile::Rect { t1 }
            | Profile::RectIntegral { t1 }
            | Profile::Sine { t1, .. }
            | Profile::Cosine { t1, .. }
            | Profile::SineIntegral { t1, .. } => vec![0.0, t1],
            Profile::Delta { at } => vec![at],
        }
    }

    /// Length of the active window, if the profile is pulsed.
    pub fn duration(&self) -> Option<f64> {
        match *self {
            Profile::Rect { t1 }
            | Profile::RectIntegral { t1 }
            | Profile::Sine { t1, .. }
            | Profile::Cosine { t1, .. }
            | Profile::SineIntegral { t1, .. } => Some(t1),
            _ => None,
        }
    }

    /// Carrier frequency (0 for non-oscillating profiles).
    pub fn frequency(&self) -> f64 {
        match *self {
            Profile::Sine { omega, .. } | Profile::Cosine { omega, .. } | Profile::SineIntegral { omega, .. } => omega,
            _ => 0.0,
        }
    }

    /// `d/dt` as a linear combination of profiles. Jumps become `Delta` terms.
    pub fn derivative(&self) -> Result<Vec<(f64, Profile)>> {
        let mut out = match *self {
            Profile::Constant => vec![],
            Profile::Ramp => vec![(1.0, Profile::Constant)],
            Profile::Rect { t1 } => vec![(1.0, Profile::Delta { at: 0.0 }), (-1.0, Profile::Delta { at: t1 })],
            Profile::RectIntegral { t1 } => vec![(1.0, Profile::Rect { t1 })],
            Profile::Sine { omega, t1 } => vec![
                (omega, Profile::Cosine { omega, t1 }),
                (-(omega * t1).sin(), Profile::Delta { at: t1 }),
            ],
            Profile::Cosine { omega, t1 } => vec![
                (-omega, Profile::Sine { omega, t1 }),
                (1.0, Profile::Delta { at: 0.0 }),
                (-(omega * t1).cos(), Profile::Delta { at: t1 }),
            ],
            Profile::SineIntegral { omega, t1 } => vec![(1.0, Profile::Sine { omega, t1 })],
            Profile::Delta { .. } => {
                return Err(Error::UnsupportedProfile("derivative of a delta impulse".into()))
            }
        };
        out.retain(|(c, _)| *c != 0.0);
        Ok(out)
    }

    /// `∫₀ᵗ` of the profile, where it has a closed form in this family.
    pub fn antiderivative(&self) -> Result<Profile> {
        match *self {
            Profile::Constant => Ok(Profile::Ramp),
            Profile::Rect { t1 } => Ok(Profile::RectIntegral { t1 }),
            Profile::Sine { omega, t1 } => Ok(Profile::SineIntegral { omega, t1 }),
            other => Err(Error::UnsupportedProfile(format!("no antiderivative for {other}"))),
        }
    }

    fn rank(&self) -> (u8, f64, f64) {
        match *self {
            Profile::Constant => (0, 0.0, 0.0),
            Profile::Ramp => (1, 0.0, 0.0),
            Profile::Rect { t1 } => (2, t1, 0.0),
            Profile::RectIntegral { t1 } => (3, t1, 0.0),
            Profile::Sine { omega, t1 } => (4, t1, omega),
            Profile::Cosine { omega, t1 } => (5, t1, omega),
            Profile::SineIntegral { omega, t1 } => (6, t1, omega),
            Profile::Delta { at } => (7, at, 0.0),
        }
    }

    /// Total order used to keep field term lists canonical.
    pub fn canonical_cmp(&self, other: &Profile) -> Ordering {
        let (a0, a1, a2) = self.rank();
        let (b0, b1, b2) = other.rank();
        a0.cmp(&b0).then(a1.total_cmp(&b1)).then(a2.total_cmp(&b2))
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant => write!(f, "const"),
            Profile::Ramp => write!(f, "t"),
            Profile::Rect { t1 } => write!(f, "rect(t1={t1})"),
            Profile::RectIntegral { t1 } => write!(f, "rect_integral(t1={t1})"),
            Profile::Sine { omega, t1 } => write!(f, "sin(omega={omega},t1={t1})"),
            Profile::Cosine { omega, t1 } => write!(f, "cos(omega={omega},t1={t1})"),
            Profile::SineIntegral { omega, t1 } => write!(f, "sin_integral(omega={omega},t1={t1})"),
            Profile::Delta { at } => write!(f, "delta(at={at})"),
        }
    }
}
