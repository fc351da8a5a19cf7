//! Polynomial feature expansion.
//!
//! Each attribute value x is expanded into its powers (x, x^2, ..., x^D); the
//! per-attribute blocks are concatenated in attribute order. The pairwise
//! variant expands the difference of powers, which is what the ranking mode
//! trains on.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-attribute polynomial degrees and the expansion they induce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub degrees: Vec<usize>,
}

impl BasisSpec {
    pub fn new(degrees: Vec<usize>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::config("basis spec needs at least one attribute"));
        }
        if degrees.iter().any(|&d| d == 0) {
            return Err(Error::config("every polynomial degree must be >= 1"));
        }
        Ok(BasisSpec { degrees })
    }

    pub fn uniform(n_attrs: usize, degree: usize) -> Result<Self> {
        BasisSpec::new(vec![degree; n_attrs])
    }

    pub fn n_attrs(&self) -> usize {
        self.degrees.len()
    }

    /// Total expansion width, sum of all degrees.
    pub fn width(&self) -> usize {
        self.degrees.iter().sum()
    }

    /// Offset of attribute `j`'s block inside the expanded vector.
    pub fn block_offset(&self, j: usize) -> usize {
        self.degrees[..j].iter().sum()
    }
}

/// Powers x^1 .. x^D.
pub fn expand_scalar(x: f64, degree: usize) -> Result<Vec<f64>> {
    if degree == 0 {
        return Err(Error::config("expansion degree must be >= 1"));
    }
    let mut out = Vec::with_capacity(degree);
    let mut p = 1.0;
    for _ in 0..degree {
        p *= x;
        out.push(p);
    }
    Ok(out)
}

/// Concatenated per-attribute expansion of a full attribute vector.
pub fn expand_vector(x: &[f64], spec: &BasisSpec) -> Result<Vec<f64>> {
    if x.len() != spec.n_attrs() {
        return Err(Error::schema(format!(
            "expected {} attributes, got {}",
            spec.n_attrs(),
            x.len()
        )));
    }
    let mut out = Vec::with_capacity(spec.width());
    for (&xj, &dj) in x.iter().zip(&spec.degrees) {
        let mut p = 1.0;
        for _ in 0..dj {
            p *= xj;
            out.push(p);
        }
    }
    Ok(out)
}

/// Elementwise difference of expansions: (x_i^d - x_k^d) per block entry.
pub fn pairwise_diff(x_i: &[f64], x_k: &[f64], spec: &BasisSpec) -> Result<Vec<f64>> {
    if x_i.len() != x_k.len() {
        return Err(Error::schema("pairwise_diff vectors have unequal lengths"));
    }
    let mut a = expand_vector(x_i, spec)?;
    let b = expand_vector(x_k, spec)?;
    for (av, bv) in a.iter_mut().zip(&b) {
        *av -= bv;
    }
    Ok(a)
}
