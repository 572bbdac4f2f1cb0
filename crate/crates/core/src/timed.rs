//! Separable time-dependent operators: sums of `Π profiles(t) × operator`.

use crate::error::{Error, Result};
use crate::hilbert::{Matrix, Operator, C64};
use crate::profile::{Profile, Side};

#[derive(Debug, Clone, PartialEq)]
pub struct TimedTerm {
    /// Product of profiles scaling `op`; empty means time independent.
    pub factors: Vec<Profile>,
    pub op: Operator,
}

impl TimedTerm {
    pub fn factor(&self, t: f64, side: Side) -> f64 {
        self.factors.iter().map(|p| p.value_at(t, side)).product()
    }

    pub fn is_impulsive(&self) -> bool {
        self.factors.iter().any(Profile::is_impulsive)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedOperator {
    dim: usize,
    label: String,
    terms: Vec<TimedTerm>,
}

impl TimedOperator {
    pub fn zero(dim: usize, label: impl Into<String>) -> Self {
        Self { dim, label: label.into(), terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn terms(&self) -> &[TimedTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `factors × op`, merging with an existing term carrying the same factors.
    pub fn push(&mut self, mut factors: Vec<Profile>, op: Operator) -> Result<()> {
        if op.dim() != self.dim {
            return Err(Error::DimensionMismatch { left: op.dim(), right: self.dim });
        }
        if op.matrix().iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return Ok(());
        }
        factors.sort_by(|a, b| a.canonical_cmp(b));
        if let Some(t) = self.terms.iter_mut().find(|t| t.factors == factors) {
            t.op = t.op.plus(&op)?;
        } else {
            self.terms.push(TimedTerm { factors, op });
        }
        Ok(())
    }

    pub fn extend(&mut self, other: &TimedOperator) -> Result<()> {
        for t in &other.terms {
            self.push(t.factors.clone(), t.op.clone())?;
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> TimedOperator {
        TimedOperator {
            dim: self.dim,
            label: self.label.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| TimedTerm { factors: t.factors.clone(), op: t.op.scaled(factor) })
                .collect(),
        }
    }

    pub fn matrix_at(&self, t: f64, side: Side) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for term in &self.terms {
            let f = term.factor(t, side);
            if f != 0.0 {
                m += term.op.matrix() * C64::new(f, 0.0);
            }
        }
        m
    }

    pub fn at(&self, t: f64) -> Operator {
        Operator::hermitian(self.matrix_at(t, Side::Point), format!("{}({t})", self.label))
    }

    pub fn has_impulses(&self) -> bool {
        self.terms.iter().any(TimedTerm::is_impulsive)
    }

    /// Copy with every impulsive term removed.
    pub fn regular(&self) -> TimedOperator {
        TimedOperator {
            dim: self.dim,
            label: self.label.clone(),
            terms: self.terms.iter().filter(|t| !t.is_impulsive()).cloned().collect(),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.terms.iter().flat_map(|t| t.factors.iter().flat_map(|p| p.breakpoints())).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Shortest pulse duration among all factors.
    pub fn min_duration(&self) -> Option<f64> {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter().filter_map(Profile::duration))
            .min_by(f64::total_cmp)
    }

    /// Largest carrier frequency among all factors (summed within a product).
    pub fn max_profile_frequency(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.factors.iter().map(Profile::frequency).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest hermiticity defect of any term on the top-left `n × n` block.
    pub fn hermiticity_defect(&self, n: usize) -> f64 {
        self.terms.iter().map(|t| t.op.hermiticity_defect(n)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_identical_factor_lists() {
        let mut h = TimedOperator::zero(2, "h");
        let r = Profile::Rect { t1: 1.0 };
        h.push(vec![r], Operator::identity(2, "1")).unwrap();
        h.push(vec![r], Operator::identity(2, "1")).unwrap();
        assert_eq!(h.terms().len(), 1);
        assert_eq!(h.matrix_at(0.5, Side::Point)[(0, 0)], C64::new(2.0, 0.0));
        assert_eq!(h.matrix_at(1.5, Side::Point)[(0, 0)], C64::new(0.0, 0.0));
        assert!(h.push(vec![], Operator::identity(3, "1")).is_err());
    }
}
