//! Electromagnetic perturbations as gauge potentials with separable time profiles.
//!
//! Every field component is a [`TimedPoly`]: a canonical sum of
//! `profile(t) × polynomial(q)` terms. Gauge transformations and the
//! derivation of `E1 = -∇Φ1 - (1/c)∂A1/∂t`, `B1 = ∇×A1` act on the exact
//! coefficients, so gauge identities hold without sampling error.
//!
//! Differentiating a profile across a jump (the edges of a rectangular
//! pulse) produces [`Profile::Delta`] terms. These impulsive terms are kept
//! in the field description but are flagged: computations that cannot treat
//! them either reject the field or work with [`PhysicalFields::regular`].

use std::fmt;

use crate::error::{Error, Result};
use crate::hilbert::{Basis, Constants, Matrix, Operator, C64};
use crate::poly::{Poly, DEGREE_CAP};
use crate::profile::{Profile, Side};
use crate::timed::TimedOperator;

/// Canonical sum of `profile × polynomial` terms, sorted by profile, no zero terms.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedPoly {
    dim: usize,
    terms: Vec<(Profile, Poly)>,
}

impl TimedPoly {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn single(profile: Profile, poly: Poly) -> Self {
        let mut tp = Self::zero(poly.dim());
        tp.add_term(profile, poly);
        tp
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(Profile, Poly)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, profile: Profile, poly: Poly) {
        assert_eq!(poly.dim(), self.dim, "polynomial dimension mismatch");
        if poly.is_zero() {
            return;
        }
        match self.terms.binary_search_by(|(p, _)| p.canonical_cmp(&profile)) {
            Ok(i) => {
                let sum = self.terms[i].1.add(&poly);
                if sum.is_zero() {
                    self.terms.remove(i);
                } else {
                    self.terms[i].1 = sum;
                }
            }
            Err(i) => self.terms.insert(i, (profile, poly)),
        }
    }

    pub fn add(&self, other: &TimedPoly) -> TimedPoly {
        let mut out = self.clone();
        for (p, q) in &other.terms {
            out.add_term(*p, q.clone());
        }
        out
    }

    pub fn scale(&self, factor: f64) -> TimedPoly {
        let mut out = TimedPoly::zero(self.dim);
        for (p, q) in &self.terms {
            out.add_term(*p, q.scale(factor));
        }
        out
    }

    pub fn space_derivative(&self, axis: usize) -> TimedPoly {
        let mut out = TimedPoly::zero(self.dim);
        for (p, q) in &self.terms {
            out.add_term(*p, q.derivative(axis));
        }
        out
    }

    pub fn time_derivative(&self) -> Result<TimedPoly> {
        let mut out = TimedPoly::zero(self.dim);
        for (p, q) in &self.terms {
            for (c, dp) in p.derivative()? {
                out.add_term(dp, q.scale(c));
            }
        }
        Ok(out)
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, q)| q.degree()).max().unwrap_or(0)
    }

    pub fn has_impulses(&self) -> bool {
        self.terms.iter().any(|(p, _)| p.is_impulsive())
    }

    /// Copy with every impulsive term removed.
    pub fn regular(&self) -> TimedPoly {
        TimedPoly {
            dim: self.dim,
            terms: self.terms.iter().filter(|(p, _)| !p.is_impulsive()).cloned().collect(),
        }
    }

    fn validate(&self, allow_impulses: bool) -> Result<()> {
        for (p, q) in &self.terms {
            p.validate()?;
            q.check_degree(DEGREE_CAP)?;
            if p.is_impulsive() && !allow_impulses {
                return Err(Error::ImpulsiveField);
            }
        }
        Ok(())
    }

    /// Spatial polynomial at time `t`.
    pub fn poly_at(&self, t: f64, side: Side) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (p, q) in &self.terms {
            let v = p.value_at(t, side);
            if v != 0.0 {
                out = out.add(&q.scale(v));
            }
        }
        out
    }

    /// Each term promoted to an operator, keeping its profile.
    pub fn to_timed_operator(&self, basis: &Basis, label: &str) -> Result<TimedOperator> {
        let mut out = TimedOperator::zero(basis.dim(), label);
        for (p, q) in &self.terms {
            out.push(vec![*p], q.to_operator(basis)?)?;
        }
        Ok(out)
    }
}

impl fmt::Display for TimedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (p, q)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{q}]·{p}")?;
        }
        Ok(())
    }
}

/// Promotes a field polynomial to an operator at time `t`.
pub fn as_operator(field: &TimedPoly, basis: &Basis, t: f64) -> Result<Operator> {
    if field.dim() != basis.spatial_dim() {
        return Err(Error::DimensionMismatch { left: field.dim(), right: basis.spatial_dim() });
    }
    let mut m = Matrix::zeros(basis.dim(), basis.dim());
    for (p, q) in field.terms() {
        let v = p.value(t);
        if v != 0.0 {
            m += q.to_operator(basis)?.matrix() * C64::new(v, 0.0);
        }
    }
    Ok(Operator::hermitian(m, format!("{field} @ t={t}")))
}

/// Perturbing potentials `(A1, Φ1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeField {
    vector: Vec<TimedPoly>,
    scalar: TimedPoly,
}

impl GaugeField {
    /// `vector` holds one component per spatial dimension. The vector potential
    /// may not carry impulsive profiles; the scalar potential may (they arise
    /// from time-dependent gauge functions with jumps).
    pub fn new(vector: Vec<TimedPoly>, scalar: TimedPoly) -> Result<Self> {
        let dim = scalar.dim();
        if vector.len() != dim {
            return Err(Error::DimensionMismatch { left: vector.len(), right: dim });
        }
        for a in &vector {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch { left: a.dim(), right: dim });
            }
            a.validate(false)?;
        }
        scalar.validate(true)?;
        Ok(Self { vector, scalar })
    }

    pub fn zero(dim: usize) -> Self {
        Self { vector: vec![TimedPoly::zero(dim); dim], scalar: TimedPoly::zero(dim) }
    }

    /// Uniform field `B1 = amplitude · profile · e_z` in the symmetric gauge
    /// `A1 = amplitude · profile · (-y/2, x/2)`.
    pub fn symmetric_magnetic(amplitude: f64, profile: Profile) -> Result<Self> {
        let ax = Poly::monomial(2, -0.5 * amplitude, &[0, 1]);
        let ay = Poly::monomial(2, 0.5 * amplitude, &[1, 0]);
        Self::new(
            vec![TimedPoly::single(profile, ax), TimedPoly::single(profile, ay)],
            TimedPoly::zero(2),
        )
    }

    /// Uniform electric field `E1 = profile · e0` in the scalar gauge `Φ1 = -e0·q · profile`.
    pub fn uniform_electric(e0: &[f64], profile: Profile) -> Result<Self> {
        let dim = e0.len();
        let mut phi = Poly::zero(dim);
        for (axis, e) in e0.iter().enumerate() {
            phi = phi.add(&Poly::coordinate(dim, axis).scale(-e));
        }
        Self::new(vec![TimedPoly::zero(dim); dim], TimedPoly::single(profile, phi))
    }

    pub fn dim(&self) -> usize {
        self.scalar.dim()
    }

    pub fn vector(&self) -> &[TimedPoly] {
        &self.vector
    }

    pub fn scalar(&self) -> &TimedPoly {
        &self.scalar
    }

    pub fn has_impulses(&self) -> bool {
        self.scalar.has_impulses() || self.vector.iter().any(TimedPoly::has_impulses)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .vector
            .iter()
            .chain(std::iter::once(&self.scalar))
            .flat_map(|tp| tp.terms().iter().flat_map(|(p, _)| p.breakpoints()))
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}

/// Gauge function `f(q, t)`; spatial degree at most 2, no impulsive profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFunction {
    f: TimedPoly,
}

impl GaugeFunction {
    pub fn new(f: TimedPoly) -> Result<Self> {
        f.validate(false)?;
        Ok(Self { f })
    }

    pub fn zero(dim: usize) -> Self {
        Self { f: TimedPoly::zero(dim) }
    }

    pub fn function(&self) -> &TimedPoly {
        &self.f
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }
}

/// `(A1, Φ1) → (A1 + ∇f, Φ1 - (1/c) ∂f/∂t)`.
pub fn gauge_transform(field: &GaugeField, f: &GaugeFunction, constants: &Constants) -> Result<GaugeField> {
    if field.dim() != f.dim() {
        return Err(Error::DimensionMismatch { left: field.dim(), right: f.dim() });
    }
    let vector = field
        .vector
        .iter()
        .enumerate()
        .map(|(axis, a)| a.add(&f.f.space_derivative(axis)))
        .collect();
    let dfdt = f.f.time_derivative()?;
    let scalar = field.scalar.add(&dfdt.scale(-1.0 / constants.c_light));
    GaugeField::new(vector, scalar)
}

/// Electric and magnetic fields derived from a [`GaugeField`].
///
/// In the planar case the magnetic field has only a z component; in 1D there
/// is none.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalFields {
    electric: Vec<TimedPoly>,
    magnetic_z: Option<TimedPoly>,
}

impl PhysicalFields {
    pub fn dim(&self) -> usize {
        self.electric.len()
    }

    pub fn electric(&self) -> &[TimedPoly] {
        &self.electric
    }

    pub fn magnetic_z(&self) -> Option<&TimedPoly> {
        self.magnetic_z.as_ref()
    }

    pub fn has_impulses(&self) -> bool {
        self.electric.iter().any(TimedPoly::has_impulses)
            || self.magnetic_z.as_ref().is_some_and(TimedPoly::has_impulses)
    }

    /// The fields with impulsive (delta) contributions removed.
    pub fn regular(&self) -> PhysicalFields {
        PhysicalFields {
            electric: self.electric.iter().map(TimedPoly::regular).collect(),
            magnetic_z: self.magnetic_z.as_ref().map(TimedPoly::regular),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.electric.iter().all(TimedPoly::is_zero) && self.magnetic_z.as_ref().is_none_or(TimedPoly::is_zero)
    }
}

/// `E1 = -∇Φ1 - (1/c)∂A1/∂t` and `B1 = ∇×A1`.
pub fn physical_fields(field: &GaugeField, constants: &Constants) -> PhysicalFields {
    let dim = field.dim();
    let electric = (0..dim)
        .map(|axis| {
            let grad = field.scalar.space_derivative(axis).scale(-1.0);
            let dadt = field.vector[axis]
                .time_derivative()
                .expect("vector potential profiles are differentiable")
                .scale(-1.0 / constants.c_light);
            grad.add(&dadt)
        })
        .collect();
    let magnetic_z = (dim == 2).then(|| {
        field.vector[1]
            .space_derivative(0)
            .add(&field.vector[0].space_derivative(1).scale(-1.0))
    });
    PhysicalFields { electric, magnetic_z }
}
