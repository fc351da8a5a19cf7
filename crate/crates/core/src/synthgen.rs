//! Seeded generators for the three simulation dataset families and the four
//! ground-truth models used for marginal-curve recovery.
//!
//! Scores are deterministic given a truth description; noise is drawn once per
//! alternative (scaled standard normal) and reused for all of that
//! alternative's pairs. Random polynomial and interaction coefficients are
//! uniform in [-1, 1].

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::numeric::SeededRng;
use crate::ranking::{build_pairs, RankingPair};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Linear,
    Polynomial3,
    Polynomial15,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Family::Linear),
            "polynomial-3" | "poly3" => Ok(Family::Polynomial3),
            "polynomial-15" | "poly15" => Ok(Family::Polynomial15),
            other => Err(Error::config(format!("unknown family '{other}'"))),
        }
    }
}

/// Parameters of one synthetic dataset draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub family: Family,
    pub n_alternatives: usize,
    pub n_attrs: usize,
    pub seed: u64,
    /// Multiplier on the per-alternative standard normal noise.
    pub noise_scale: f64,
}

impl SyntheticSpec {
    pub fn new(family: Family, n_alternatives: usize, n_attrs: usize, seed: u64) -> Result<Self> {
        if n_alternatives < 2 {
            return Err(Error::config("need at least 2 alternatives"));
        }
        if n_attrs == 0 {
            return Err(Error::config("need at least 1 attribute"));
        }
        if family == Family::Polynomial15 && n_attrs > 15 {
            return Err(Error::config(
                "polynomial-15 family limited to 15 attributes (interaction subsets blow up)",
            ));
        }
        Ok(SyntheticSpec {
            family,
            n_alternatives,
            n_attrs,
            seed,
            noise_scale: 1.0,
        })
    }

    pub fn with_noise_scale(mut self, scale: f64) -> Self {
        self.noise_scale = scale;
        self
    }
}

/// Closed-form marginal value function shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalKind {
    /// sum_d coeffs[d-1] * x^d (no constant term).
    Polynomial { coeffs: Vec<f64> },
    Affine { slope: f64, intercept: f64 },
    Sigmoid { steepness: f64, center: f64 },
    /// e^{rate * x} - 1.
    Exponential { rate: f64 },
}

impl MarginalKind {
    fn eval_raw(&self, x: f64) -> f64 {
        match self {
            MarginalKind::Polynomial { coeffs } => {
                let mut acc = 0.0;
                let mut p = 1.0;
                for &c in coeffs {
                    p *= x;
                    acc += c * p;
                }
                acc
            }
            MarginalKind::Affine { slope, intercept } => slope * x + intercept,
            MarginalKind::Sigmoid { steepness, center } => {
                crate::numeric::sigmoid(steepness * (x - center))
            }
            MarginalKind::Exponential { rate } => (rate * x).exp() - 1.0,
        }
    }
}

/// A marginal with an affine post-map, so truths can be rescaled to comparable
/// output ranges without losing the closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub kind: MarginalKind,
    pub post_scale: f64,
    pub post_offset: f64,
}

impl Marginal {
    pub fn plain(kind: MarginalKind) -> Self {
        Marginal {
            kind,
            post_scale: 1.0,
            post_offset: 0.0,
        }
    }

    /// Min-max rescale the shape to span [0, 1] over x in [0, 1], estimated on
    /// a dense grid. Monotone direction is preserved.
    pub fn rescaled_unit(kind: MarginalKind) -> Self {
        const GRID: usize = 2048;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for g in 0..=GRID {
            let v = kind.eval_raw(g as f64 / GRID as f64);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let span = hi - lo;
        if span <= 0.0 {
            return Marginal::plain(kind);
        }
        Marginal {
            kind,
            post_scale: 1.0 / span,
            post_offset: -lo / span,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.post_scale * self.kind.eval_raw(x) + self.post_offset
    }
}

/// Product interaction term over a subset of attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub attrs: Vec<usize>,
    pub coeff: f64,
}

/// Closed-form data-generating model: per-attribute marginals, interaction
/// terms, and the noise scale used when drawing labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub marginals: Vec<Marginal>,
    pub interactions: Vec<Interaction>,
    pub noise_scale: f64,
}

impl GroundTruth {
    pub fn n_attrs(&self) -> usize {
        self.marginals.len()
    }

    /// Noiseless global score.
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, &xj) in self.marginals.iter().zip(x) {
            acc += m.eval(xj);
        }
        for inter in &self.interactions {
            let mut prod = inter.coeff;
            for &j in &inter.attrs {
                prod *= x[j];
            }
            acc += prod;
        }
        acc
    }
}

/// N x n attribute matrix, entries i.i.d. uniform on [0, 1).
pub fn gen_alternatives(spec: &SyntheticSpec) -> Vec<Vec<f64>> {
    let mut rng = SeededRng::derive(spec.seed, 1);
    (0..spec.n_alternatives)
        .map(|_| (0..spec.n_attrs).map(|_| rng.next_f64()).collect())
        .collect()
}

/// All subsets of {0..n} with at least `min_size` members.
fn interaction_subsets(n: usize, min_size: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size >= min_size && size <= max_size {
            let subset: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) != 0).collect();
            out.push(subset);
        }
    }
    out.sort_by(|a, b| (a.len(), a.clone()).cmp(&(b.len(), b.clone())));
    out
}

/// Ground truth for one of the three dataset families.
pub fn truth_for_family(spec: &SyntheticSpec) -> Result<GroundTruth> {
    let mut rng = SeededRng::derive(spec.seed, 2);
    let n = spec.n_attrs;
    let truth = match spec.family {
        Family::Linear => GroundTruth {
            marginals: vec![
                Marginal::plain(MarginalKind::Polynomial { coeffs: vec![1.0] });
                n
            ],
            interactions: vec![],
            noise_scale: spec.noise_scale,
        },
        Family::Polynomial3 => {
            let marginals = (0..n)
                .map(|_| {
                    Marginal::plain(MarginalKind::Polynomial {
                        coeffs: (0..3).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect(),
                    })
                })
                .collect();
            let interactions = interaction_subsets(n, 2, 2)
                .into_iter()
                .map(|attrs| Interaction {
                    attrs,
                    coeff: rng.uniform(-1.0, 1.0).unwrap(),
                })
                .collect();
            GroundTruth {
                marginals,
                interactions,
                noise_scale: spec.noise_scale,
            }
        }
        Family::Polynomial15 => {
            if n > 15 {
                return Err(Error::config("polynomial-15 family limited to 15 attributes"));
            }
            let marginals = (0..n)
                .map(|_| {
                    Marginal::plain(MarginalKind::Polynomial {
                        coeffs: (0..15).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect(),
                    })
                })
                .collect();
            let interactions = interaction_subsets(n, 2, n)
                .into_iter()
                .map(|attrs| Interaction {
                    attrs,
                    coeff: rng.uniform(-1.0, 1.0).unwrap(),
                })
                .collect();
            GroundTruth {
                marginals,
                interactions,
                noise_scale: spec.noise_scale,
            }
        }
    };
    Ok(truth)
}

/// The four ground-truth models for curve recovery, all on three attributes,
/// marginals rescaled to the unit range.
pub fn synthetic_model(kind: u8, seed: u64) -> Result<GroundTruth> {
    let mut rng = SeededRng::derive(seed, 3);
    let nonzero_slope = |rng: &mut SeededRng| {
        let mut s = 0.0_f64;
        while s.abs() < 0.2 {
            s = rng.uniform(-1.0, 1.0).unwrap();
        }
        s
    };
    let pairwise = |rng: &mut SeededRng| -> Vec<Interaction> {
        interaction_subsets(3, 2, 2)
            .into_iter()
            .map(|attrs| Interaction {
                attrs,
                coeff: rng.uniform(-1.0, 1.0).unwrap(),
            })
            .collect()
    };
    match kind {
        1 => {
            // Increasing affine marginals, per the usual value-function
            // convention (rescaled below to v(0)=0, v(1)=1).
            let marginals = (0..3)
                .map(|_| {
                    Marginal::rescaled_unit(MarginalKind::Affine {
                        slope: rng.uniform(0.2, 1.0).unwrap(),
                        intercept: rng.uniform(-0.5, 0.5).unwrap(),
                    })
                })
                .collect();
            Ok(GroundTruth {
                marginals,
                interactions: vec![],
                noise_scale: 1.0,
            })
        }
        2 => {
            let marginals = (0..3)
                .map(|_| {
                    Marginal::rescaled_unit(MarginalKind::Polynomial {
                        coeffs: (0..3).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect(),
                    })
                })
                .collect();
            Ok(GroundTruth {
                marginals,
                interactions: pairwise(&mut rng),
                noise_scale: 1.0,
            })
        }
        3 | 4 => {
            let poly = Marginal::rescaled_unit(MarginalKind::Polynomial {
                coeffs: (0..15).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect(),
            });
            let sig = Marginal::rescaled_unit(MarginalKind::Sigmoid {
                steepness: rng.uniform(4.0, 12.0).unwrap(),
                center: rng.uniform(0.25, 0.75).unwrap(),
            });
            let expo = Marginal::rescaled_unit(MarginalKind::Exponential {
                rate: nonzero_slope(&mut rng) * 3.0,
            });
            let interactions = if kind == 4 {
                let mut inters = pairwise(&mut rng);
                inters.push(Interaction {
                    attrs: vec![0, 1, 2],
                    coeff: rng.uniform(-1.0, 1.0).unwrap(),
                });
                inters
            } else {
                vec![]
            };
            Ok(GroundTruth {
                marginals: vec![poly, sig, expo],
                interactions,
                noise_scale: 1.0,
            })
        }
        other => Err(Error::config(format!("unknown synthetic model kind {other}"))),
    }
}

/// Noisy global scores: one scaled standard normal draw per alternative.
pub fn noisy_scores(truth: &GroundTruth, alternatives: &[Vec<f64>], seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::derive(seed, 4);
    alternatives
        .iter()
        .map(|x| truth.score(x) + truth.noise_scale * rng.standard_normal())
        .collect()
}

/// Complete pairwise dataset for a family draw: the C(N, 2) labeled pairs with
/// features expanded under `model_spec`.
pub fn labeled_pairs(
    spec: &SyntheticSpec,
    truth: &GroundTruth,
    model_spec: &BasisSpec,
) -> Result<Vec<RankingPair>> {
    let alternatives = gen_alternatives(spec);
    let scores = noisy_scores(truth, &alternatives, spec.seed);
    build_pairs(&alternatives, &scores, model_spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternatives_in_range_and_deterministic() {
        let spec = SyntheticSpec::new(Family::Linear, 100, 100, 7).unwrap();
        let a = gen_alternatives(&spec);
        let b = gen_alternatives(&spec);
        assert_eq!(a, b);
        let mut sum = 0.0;
        for row in &a {
            for &v in row {
                assert!((0.0..1.0).contains(&v));
                sum += v;
            }
        }
        let mean = sum / 10_000.0;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn linear_score_is_sum() {
        let spec = SyntheticSpec::new(Family::Linear, 10, 3, 1).unwrap();
        let truth = truth_for_family(&spec).unwrap();
        assert!((truth.score(&[0.2, 0.3, 0.5]) - 1.0).abs() < 1e-15);
        assert_eq!(truth.score(&[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn linear_family_score_variance() {
        // var of sum of n uniforms plus unit noise is n/12 + 1
        let spec = SyntheticSpec::new(Family::Linear, 20_000, 3, 9).unwrap();
        let truth = truth_for_family(&spec).unwrap();
        let alts = gen_alternatives(&spec);
        let scores = noisy_scores(&truth, &alts, spec.seed);
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / scores.len() as f64;
        let expected = 3.0 / 12.0 + 1.0;
        assert!((var - expected).abs() < 0.05, "var {var} expected {expected}");
    }

    #[test]
    fn poly3_interaction_count() {
        let spec = SyntheticSpec::new(Family::Polynomial3, 10, 3, 2).unwrap();
        let truth = truth_for_family(&spec).unwrap();
        assert_eq!(truth.interactions.len(), 3);
        for i in &truth.interactions {
            assert_eq!(i.attrs.len(), 2);
        }
    }

    #[test]
    fn poly3_reduces_to_marginal_sum_without_interactions() {
        let spec = SyntheticSpec::new(Family::Polynomial3, 10, 4, 3).unwrap();
        let mut truth = truth_for_family(&spec).unwrap();
        truth.interactions.clear();
        let x = [0.3, 0.7, 0.1, 0.9];
        let expected: f64 = truth
            .marginals
            .iter()
            .zip(&x)
            .map(|(m, &v)| m.eval(v))
            .sum();
        assert!((truth.score(&x) - expected).abs() < 1e-15);
    }

    #[test]
    fn poly15_subset_counts() {
        let s3 = SyntheticSpec::new(Family::Polynomial15, 10, 3, 4).unwrap();
        assert_eq!(truth_for_family(&s3).unwrap().interactions.len(), 4);
        let s5 = SyntheticSpec::new(Family::Polynomial15, 10, 5, 4).unwrap();
        assert_eq!(truth_for_family(&s5).unwrap().interactions.len(), 26);
        assert!(SyntheticSpec::new(Family::Polynomial15, 10, 20, 4).is_err());
    }

    #[test]
    fn synthetic_model_structure() {
        let m1 = synthetic_model(1, 0).unwrap();
        assert_eq!(m1.marginals.len(), 3);
        assert!(m1.interactions.is_empty());
        for m in &m1.marginals {
            match m.kind {
                MarginalKind::Affine { slope, .. } => assert!(slope >= 0.2),
                ref other => panic!("expected affine marginal, got {other:?}"),
            }
        }

        let m2 = synthetic_model(2, 0).unwrap();
        assert_eq!(m2.interactions.len(), 3);

        let m3 = synthetic_model(3, 0).unwrap();
        assert!(m3.interactions.is_empty());
        assert!(matches!(m3.marginals[1].kind, MarginalKind::Sigmoid { .. }));
        assert!(matches!(m3.marginals[2].kind, MarginalKind::Exponential { .. }));

        let m4 = synthetic_model(4, 0).unwrap();
        assert_eq!(m4.interactions.len(), 4);
        assert_eq!(m4.interactions.iter().filter(|i| i.attrs.len() == 3).count(), 1);

        assert!(synthetic_model(5, 0).is_err());
    }

    #[test]
    fn rescaled_marginals_span_unit_range() {
        let truth = synthetic_model(3, 11).unwrap();
        for m in &truth.marginals {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for g in 0..=1000 {
                let v = m.eval(g as f64 / 1000.0);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            assert!(lo > -1e-6 && lo < 1e-2, "lo {lo}");
            assert!(hi < 1.0 + 1e-6 && hi > 0.99, "hi {hi}");
        }
    }

    #[test]
    fn labeled_pairs_count_and_noiseless_labels() {
        let spec = SyntheticSpec::new(Family::Linear, 250, 3, 5)
            .unwrap()
            .with_noise_scale(0.0);
        let truth = truth_for_family(&spec).unwrap();
        let basis = BasisSpec::uniform(3, 3).unwrap();
        let pairs = labeled_pairs(&spec, &truth, &basis).unwrap();
        assert_eq!(pairs.len(), 31_125);

        let alts = gen_alternatives(&spec);
        for pair in pairs.iter().take(500) {
            let si: f64 = alts[pair.i].iter().sum();
            let sk: f64 = alts[pair.k].iter().sum();
            let expected = if si >= sk { 1.0 } else { 0.0 };
            assert_eq!(pair.label, expected);
        }
    }

    #[test]
    fn label_antisymmetry_under_distinct_scores() {
        let spec = SyntheticSpec::new(Family::Polynomial3, 40, 3, 6).unwrap();
        let truth = truth_for_family(&spec).unwrap();
        let alts = gen_alternatives(&spec);
        let scores = noisy_scores(&truth, &alts, spec.seed);
        for i in 0..10 {
            for k in (i + 1)..10 {
                if scores[i] != scores[k] {
                    let fwd = (scores[i] - scores[k] >= 0.0) as u8;
                    let bwd = (scores[k] - scores[i] >= 0.0) as u8;
                    assert_eq!(fwd + bwd, 1);
                }
            }
        }
    }

    #[test]
    fn determinism_per_family() {
        for family in [Family::Linear, Family::Polynomial3, Family::Polynomial15] {
            let spec = SyntheticSpec::new(family, 30, 3, 99).unwrap();
            let t1 = truth_for_family(&spec).unwrap();
            let t2 = truth_for_family(&spec).unwrap();
            assert_eq!(t1, t2);
            let alts = gen_alternatives(&spec);
            assert_eq!(
                noisy_scores(&t1, &alts, spec.seed),
                noisy_scores(&t2, &alts, spec.seed)
            );
        }
    }
}
