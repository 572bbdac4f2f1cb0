//! Real polynomials in the Cartesian coordinates, stored as exact coefficients.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::hilbert::{axis_name, Basis, Matrix, Operator, C64};

/// Maximum degree of any field or gauge-function polynomial.
pub const DEGREE_CAP: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self::monomial(dim, value, &vec![0; dim])
    }

    pub fn monomial(dim: usize, coeff: f64, powers: &[u32]) -> Self {
        assert_eq!(powers.len(), dim, "exponent tuple length must equal the spatial dimension");
        let mut p = Self::zero(dim);
        p.add_term(coeff, powers.to_vec());
        p
    }

    /// Builds a polynomial from `(coefficient, exponents)` pairs.
    pub fn from_terms(dim: usize, terms: &[(f64, Vec<u32>)]) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (c, e) in terms {
            if e.len() != dim {
                return Err(Error::DimensionMismatch { left: e.len(), right: dim });
            }
            p.add_term(*c, e.clone());
        }
        Ok(p)
    }

    /// Coordinate `q_axis` as a polynomial.
    pub fn coordinate(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        Self::monomial(dim, 1.0, &e)
    }

    fn add_term(&mut self, coeff: f64, powers: Vec<u32>) {
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(powers).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn coeff(&self, powers: &[u32]) -> f64 {
        self.terms.get(powers).copied().unwrap_or(0.0)
    }

    pub fn check_degree(&self, cap: u32) -> Result<()> {
        let degree = self.degree();
        if degree > cap {
            return Err(Error::DegreeExceeded { degree, cap });
        }
        Ok(())
    }

    pub fn scale(&self, factor: f64) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(c * factor, e.clone());
        }
        out
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*c, e.clone());
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut out = Poly::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(ca * cb, e);
            }
        }
        out
    }

    /// `∂/∂q_axis`.
    pub fn derivative(&self, axis: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            if e[axis] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[axis] -= 1;
            out.add_term(c * e[axis] as f64, d);
        }
        out
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(point).map(|(k, x)| x.powi(*k as i32)).product::<f64>())
            .sum()
    }

    /// Promotes the polynomial to an operator by substituting the position operators.
    pub fn to_operator(&self, basis: &Basis) -> Result<Operator> {
        if basis.spatial_dim() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: basis.spatial_dim() });
        }
        let n = basis.dim();
        let mut acc = Matrix::zeros(n, n);
        for (e, c) in &self.terms {
            let mut m = Matrix::identity(n, n);
            for (axis, k) in e.iter().enumerate() {
                for _ in 0..*k {
                    m *= basis.q(axis).matrix();
                }
            }
            acc += m * C64::new(*c, 0.0);
        }
        Ok(Operator::hermitian(acc, self.to_string()))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (axis, k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "{}", axis_name(axis))?,
                    _ => write!(f, "{}^{k}", axis_name(axis))?,
                }
            }
        }
        Ok(())
    }
}
