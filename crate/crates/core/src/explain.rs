//! Interpretation of a fitted model: weighted marginal-value curves, their
//! sign/monotonicity/concavity diagnostics, attribute importance, and the
//! blend-coefficient recommendation.
//!
//! Diagnostics come from the exact polynomial coefficients, not the sampled
//! grid: roots of w_j·v_j and its first two derivatives are isolated by a
//! sign-change scan over 1024 subintervals of (0, 1) and refined by bisection.

use serde::{Deserialize, Serialize};

use crate::hybrid::HybridModel;
use crate::{Error, Result};

const SCAN_INTERVALS: usize = 1024;
const BISECT_TOL: f64 = 1e-8;
/// A curve whose peak magnitude falls below this fraction of the largest
/// attribute's peak is flagged as effectively zero.
const NEAR_ZERO_FRACTION: f64 = 0.01;

/// Weighted marginal value curve w_j·v_j for one attribute.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalCurve {
    pub attr: usize,
    /// (x, w_j·v_j(x)) on an even grid over [0, 1].
    pub samples: Vec<(f64, f64)>,
    /// Weighted polynomial coefficients w_j·p_{j,d}, d = 1..D_j.
    pub coeffs: Vec<f64>,
}

/// Qualitative features of a marginal curve, per the four analysis
/// perspectives: sign, trend, curvature, and overall magnitude.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveDiagnostics {
    pub attr: usize,
    /// Interior roots of the curve itself (where the contribution flips sign).
    pub zero_crossings: Vec<f64>,
    /// Interior roots of the first derivative (monotonicity inflexions).
    pub monotonicity_inflexions: Vec<f64>,
    /// Interior roots of the second derivative (concavity changes).
    pub concavity_changes: Vec<f64>,
    /// Curve is negligible across the whole scale.
    pub near_zero: bool,
}

/// Evaluate a no-constant-term polynomial sum c_d x^d.
fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    let mut p = 1.0;
    for &c in coeffs {
        p *= x;
        acc += c * p;
    }
    acc
}

/// Derivative of a no-constant-term polynomial, returned with a constant term
/// at index 0 (i.e. plain power-series coefficients c'_0..).
fn poly_derivative_series(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as f64 + 1.0) * c)
        .collect()
}

/// Evaluate a plain power series sum c_d x^d, d = 0..
fn series_eval(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    let mut p = 1.0;
    for &c in coeffs {
        acc += c * p;
        p *= x;
    }
    acc
}

fn series_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

/// Interior roots of a power series on (0, 1): sign-change scan plus
/// bisection. Exact zeros landing on scan points are kept when interior.
fn interior_roots<F: Fn(f64) -> f64>(f: F) -> Vec<f64> {
    let mut roots = Vec::new();
    let step = 1.0 / SCAN_INTERVALS as f64;
    let mut prev_x = 0.0;
    let mut prev_v = f(0.0);
    for i in 1..=SCAN_INTERVALS {
        let x = i as f64 * step;
        let v = f(x);
        if prev_v == 0.0 {
            if prev_x > 0.0 {
                roots.push(prev_x);
            }
        } else if v != 0.0 && prev_v.signum() != v.signum() {
            let mut lo = prev_x;
            let mut hi = x;
            let mut flo = prev_v;
            while hi - lo > BISECT_TOL {
                let mid = 0.5 * (lo + hi);
                let fmid = f(mid);
                if fmid == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo.signum() == fmid.signum() {
                    lo = mid;
                    flo = fmid;
                } else {
                    hi = mid;
                }
            }
            let r = 0.5 * (lo + hi);
            if r > BISECT_TOL && r < 1.0 - BISECT_TOL {
                roots.push(r);
            }
        }
        prev_x = x;
        prev_v = v;
    }
    roots
}

/// Sample the weighted marginal curve of linear-component slot holding
/// full-schema attribute `attr`.
pub fn sample_marginal_curve(model: &HybridModel, attr: usize, grid: usize) -> Result<MarginalCurve> {
    let slot = model
        .linear_attrs
        .iter()
        .position(|&j| j == attr)
        .ok_or_else(|| {
            Error::config(format!("attribute {attr} is not in the linear component"))
        })?;
    if grid < 2 {
        return Err(Error::config("curve grid needs at least 2 points"));
    }
    let w = model.additive.weights[slot];
    let coeffs: Vec<f64> = model.additive.coeffs[slot].iter().map(|&c| w * c).collect();
    let samples = (0..grid)
        .map(|g| {
            let x = g as f64 / (grid - 1) as f64;
            (x, poly_eval(&coeffs, x))
        })
        .collect();
    Ok(MarginalCurve {
        attr,
        samples,
        coeffs,
    })
}

/// Peak |w_j·v_j| over [0, 1], from the analytic coefficients (critical points
/// plus endpoints).
fn curve_peak(coeffs: &[f64]) -> f64 {
    let deriv = poly_derivative_series(coeffs);
    let mut peak = poly_eval(coeffs, 1.0).abs();
    for r in interior_roots(|x| series_eval(&deriv, x)) {
        peak = peak.max(poly_eval(coeffs, r).abs());
    }
    peak
}

/// Diagnose one curve. `scale` is the peak magnitude used for the near-zero
/// test; pass the largest peak across the model's attributes (see
/// [`diagnose_model`]), or the curve's own peak to disable the relative test.
pub fn diagnose(curve: &MarginalCurve, scale: f64) -> CurveDiagnostics {
    let peak = curve_peak(&curve.coeffs);
    let near_zero = scale <= 0.0 || peak < NEAR_ZERO_FRACTION * scale;
    if curve.coeffs.iter().all(|&c| c == 0.0) {
        return CurveDiagnostics {
            attr: curve.attr,
            zero_crossings: vec![],
            monotonicity_inflexions: vec![],
            concavity_changes: vec![],
            near_zero: true,
        };
    }
    let d1 = poly_derivative_series(&curve.coeffs);
    let d2 = series_derivative(&d1);
    CurveDiagnostics {
        attr: curve.attr,
        zero_crossings: interior_roots(|x| poly_eval(&curve.coeffs, x)),
        monotonicity_inflexions: interior_roots(|x| series_eval(&d1, x)),
        concavity_changes: interior_roots(|x| series_eval(&d2, x)),
        near_zero,
    }
}

/// Curves plus diagnostics for every linear attribute, with the near-zero
/// threshold taken relative to the largest curve in the model.
pub fn diagnose_model(
    model: &HybridModel,
    grid: usize,
) -> Result<Vec<(MarginalCurve, CurveDiagnostics)>> {
    let curves: Vec<MarginalCurve> = model
        .linear_attrs
        .iter()
        .map(|&attr| sample_marginal_curve(model, attr, grid))
        .collect::<Result<_>>()?;
    let scale = curves
        .iter()
        .map(|c| curve_peak(&c.coeffs))
        .fold(0.0_f64, f64::max);
    Ok(curves
        .into_iter()
        .map(|c| {
            let d = diagnose(&c, scale);
            (c, d)
        })
        .collect())
}

/// One row of the importance table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributeImportance {
    pub attr: usize,
    pub weight: f64,
    pub normalized_weight: f64,
    /// 1-based position by descending normalized weight, ties by index.
    pub rank: usize,
}

pub fn attribute_importance(model: &HybridModel) -> Result<Vec<AttributeImportance>> {
    let normalized = model.additive.normalized_weights()?;
    let mut order: Vec<usize> = (0..normalized.len()).collect();
    order.sort_by(|&a, &b| {
        normalized[b]
            .partial_cmp(&normalized[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut rank_of = vec![0usize; normalized.len()];
    for (pos, &slot) in order.iter().enumerate() {
        rank_of[slot] = pos + 1;
    }
    Ok(model
        .linear_attrs
        .iter()
        .enumerate()
        .map(|(slot, &attr)| AttributeImportance {
            attr,
            weight: model.additive.weights[slot],
            normalized_weight: normalized[slot],
            rank: rank_of[slot],
        })
        .collect())
}

/// Decision-support reading of the converged blend coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaRecommendation {
    /// α ≤ 0.1: the additive part contributes little; the data are likely too
    /// complex for an interpretable model of this form.
    SuggestFullComplexity,
    /// α ≥ 0.9: the network adds little; a plain additive model suffices.
    SuggestSimplerModel,
    /// Otherwise: keep the hybrid and read both components.
    AcceptHybrid,
}

pub fn interpret_alpha(alpha: f64) -> Result<AlphaRecommendation> {
    if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
        return Err(Error::config(format!("alpha {alpha} outside [0, 1]")));
    }
    Ok(if alpha <= 0.1 {
        AlphaRecommendation::SuggestFullComplexity
    } else if alpha >= 0.9 {
        AlphaRecommendation::SuggestSimplerModel
    } else {
        AlphaRecommendation::AcceptHybrid
    })
}
