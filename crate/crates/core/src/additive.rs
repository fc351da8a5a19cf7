//! The interpretable linear component: weighted sum of per-attribute
//! polynomial marginal value functions.
//!
//! Marginal polynomials have no constant term, so v_j(0) = 0 and any global
//! offset lives in the network path. Attribute weights are kept nonnegative by
//! projection after each optimizer step, which permits exact zeros (a weight of
//! zero reads as "this attribute does not matter").

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::{Error, Result};

/// Weights and polynomial coefficients of the additive value function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveComponent {
    /// One nonnegative weight per attribute.
    pub weights: Vec<f64>,
    /// Coefficient list per attribute; entry d is the coefficient of x^(d+1).
    pub coeffs: Vec<Vec<f64>>,
    pub spec: BasisSpec,
}

impl AdditiveComponent {
    pub fn new(weights: Vec<f64>, coeffs: Vec<Vec<f64>>, spec: BasisSpec) -> Result<Self> {
        if weights.len() != spec.n_attrs() || coeffs.len() != spec.n_attrs() {
            return Err(Error::schema("additive component shape mismatch with spec"));
        }
        for (j, c) in coeffs.iter().enumerate() {
            if c.len() != spec.degrees[j] {
                return Err(Error::schema(format!(
                    "attribute {j}: {} coefficients for degree {}",
                    c.len(),
                    spec.degrees[j]
                )));
            }
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::schema("attribute weights must be nonnegative"));
        }
        Ok(AdditiveComponent {
            weights,
            coeffs,
            spec,
        })
    }

    /// Identity marginals (v_j(x) = x) with the given shared weight.
    pub fn identity(n_attrs: usize, degree: usize, weight: f64) -> Result<Self> {
        let spec = BasisSpec::uniform(n_attrs, degree)?;
        let mut coeffs = vec![vec![0.0; degree]; n_attrs];
        for c in coeffs.iter_mut() {
            c[0] = 1.0;
        }
        AdditiveComponent::new(vec![weight; n_attrs], coeffs, spec)
    }

    pub fn n_attrs(&self) -> usize {
        self.spec.n_attrs()
    }

    /// v_j(x) = sum_d p_{j,d} x^d.
    pub fn marginal_value(&self, j: usize, x: f64) -> Result<f64> {
        let coeffs = self
            .coeffs
            .get(j)
            .ok_or_else(|| Error::schema(format!("attribute index {j} out of range")))?;
        let mut acc = 0.0;
        let mut p = 1.0;
        for &c in coeffs {
            p *= x;
            acc += c * p;
        }
        Ok(acc)
    }

    /// F(x) = sum_j w_j v_j(x_j).
    pub fn linear_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_attrs() {
            return Err(Error::schema(format!(
                "expected {} attributes, got {}",
                self.n_attrs(),
                x.len()
            )));
        }
        let mut acc = 0.0;
        for (j, &xj) in x.iter().enumerate() {
            acc += self.weights[j] * self.marginal_value(j, xj)?;
        }
        Ok(acc)
    }

    /// Same score computed from an already-expanded vector. By linearity this
    /// also evaluates score differences when fed a pairwise-difference
    /// expansion.
    pub fn linear_score_expanded(&self, expanded: &[f64]) -> Result<f64> {
        if expanded.len() != self.spec.width() {
            return Err(Error::schema(format!(
                "expected expansion width {}, got {}",
                self.spec.width(),
                expanded.len()
            )));
        }
        let mut acc = 0.0;
        let mut offset = 0;
        for (j, coeffs) in self.coeffs.iter().enumerate() {
            let block = &expanded[offset..offset + coeffs.len()];
            let mut v = 0.0;
            for (c, e) in coeffs.iter().zip(block) {
                v += c * e;
            }
            acc += self.weights[j] * v;
            offset += coeffs.len();
        }
        Ok(acc)
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weights rescaled to sum to 1.
    pub fn normalized_weights(&self) -> Result<Vec<f64>> {
        let total = self.weight_sum();
        if total <= 0.0 {
            return Err(Error::Degenerate(
                "all attribute weights are zero; cannot normalize".into(),
            ));
        }
        Ok(self.weights.iter().map(|w| w / total).collect())
    }

    /// Clamp negative weights to zero (projection step after an optimizer
    /// update).
    pub fn project_weights(&mut self) {
        self.project_weights_min(0.0);
    }

    /// Clamp weights to at least `floor`. Training uses a small positive
    /// floor: at w_j = 0 the coefficient gradients of attribute j vanish and
    /// the marginal can never recover, so an exact zero is a parameter trap.
    pub fn project_weights_min(&mut self, floor: f64) {
        for w in self.weights.iter_mut() {
            if *w < floor {
                *w = floor;
            }
        }
    }
}
