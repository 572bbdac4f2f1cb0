//! Time-dependent perturbation theory for charged particles in oscillator
//! potentials, done three ways and checked against each other.
//!
//! * [`dirac`] integrates the standard interaction-picture coefficient
//!   equations and their first-order solution.
//! * [`quasicanon`] evolves expectation values of observables built from the
//!   unperturbed coordinates and velocities. It consumes only the physical
//!   fields `E1`, `B1`, so its results cannot depend on the gauge.
//! * [`soperator`] builds first-order transition estimates from an
//!   observable's rate and compares the estimates two observables give.
//! * [`oracle`] propagates the Schrödinger equation directly on the full
//!   truncated basis and serves as ground truth.
//!
//! The Hilbert space is a truncated 1D or planar harmonic oscillator
//! ([`hilbert`]); perturbations are gauge potentials with separable
//! time profiles ([`fields`]).
//!
//! ```
//! use tdpt_core::dirac::{assemble_h1, transition_probability};
//! use tdpt_core::fields::GaugeField;
//! use tdpt_core::profile::Profile;
//! use tdpt_core::quadrature::QuadraturePolicy;
//! use tdpt_core::{Basis, BasisKind, Constants};
//!
//! let basis = Basis::build(BasisKind::Ho1d, 1.0, 10, Constants::default())?;
//! let field = GaugeField::uniform_electric(&[0.01], Profile::Rect { t1: 3.0 })?;
//! let h1 = assemble_h1(&field, &basis, false)?.total();
//! let p01 = transition_probability(&h1, &basis, 0, 1, 5.0, &QuadraturePolicy::default())?;
//! assert!(p01 > 0.0 && p01 < 1e-3);
//! # Ok::<(), tdpt_core::Error>(())
//! ```

pub mod dirac;
pub mod error;
pub mod fields;
pub mod hilbert;
pub mod oracle;
pub mod poly;
pub mod profile;
pub mod quadrature;
pub mod quasicanon;
pub mod soperator;
pub mod timed;

pub use error::{Error, Result};
pub use fields::{GaugeField, GaugeFunction, PhysicalFields};
pub use hilbert::{Basis, BasisKind, Constants, Operator, QuantumNumbers, State};
pub use profile::Profile;

/// Library version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

// The guide's code blocks run as doctests: each chapter becomes the doc
// comment of an empty module, so a failing snippet names its chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bases.md")]
    mod bases {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/dirac.md")]
    mod dirac {}
    #[doc = include_str!("../../../book/src/quasicanon.md")]
    mod quasicanon {}
    #[doc = include_str!("../../../book/src/soperator.md")]
    mod soperator {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
