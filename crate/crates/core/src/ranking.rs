//! Multiple-criteria ranking mode: pairwise dataset construction, preference
//! classification with thresholds, and order-preserving weight normalization.

use serde::{Deserialize, Serialize};

use crate::basis::{pairwise_diff, BasisSpec};
use crate::hybrid::HybridModel;
use crate::numeric::sigmoid;
use crate::{Error, Result};

/// One labeled comparison: features are the expanded difference of the two
/// alternatives, label 1 means alternative `i` is at least as good as `k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankingPair {
    pub i: usize,
    pub k: usize,
    pub features: Vec<f64>,
    pub label: f64,
}

/// Probability cutoffs splitting pairwise predictions into strict preference,
/// indifference, and reverse preference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceThresholds {
    pub eta1: f64,
    pub eta2: f64,
}

impl PreferenceThresholds {
    pub fn new(eta1: f64, eta2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta1) || !(0.0..=1.0).contains(&eta2) || eta1 > eta2 {
            return Err(Error::config(format!(
                "thresholds need 0 <= eta1 <= eta2 <= 1, got ({eta1}, {eta2})"
            )));
        }
        Ok(PreferenceThresholds { eta1, eta2 })
    }
}

impl Default for PreferenceThresholds {
    fn default() -> Self {
        PreferenceThresholds {
            eta1: 0.45,
            eta2: 0.55,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preference {
    StrictlyPreferred,
    Indifferent,
    StrictlyWorse,
}

/// All C(N, 2) labeled pairs (i < k) from per-alternative global scores.
/// Ties (zero score difference) are labeled 1.
pub fn build_pairs(
    alternatives: &[Vec<f64>],
    scores: &[f64],
    spec: &BasisSpec,
) -> Result<Vec<RankingPair>> {
    if alternatives.len() < 2 {
        return Err(Error::config("pair construction needs >= 2 alternatives"));
    }
    if alternatives.len() != scores.len() {
        return Err(Error::schema("alternative/score count mismatch"));
    }
    let n = alternatives.len();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for k in (i + 1)..n {
            let features = pairwise_diff(&alternatives[i], &alternatives[k], spec)?;
            let label = if scores[i] - scores[k] >= 0.0 { 1.0 } else { 0.0 };
            pairs.push(RankingPair {
                i,
                k,
                features,
                label,
            });
        }
    }
    Ok(pairs)
}

/// Three-way preference decision for a pair of alternatives: the predicted
/// probability sigmoid(U(x_i) - U(x_k)) is split by the two thresholds.
pub fn compare(
    model: &HybridModel,
    x_i: &[f64],
    x_k: &[f64],
    thresholds: PreferenceThresholds,
) -> Result<Preference> {
    let y_hat = sigmoid(model.global_score(x_i)? - model.global_score(x_k)?);
    Ok(if y_hat >= thresholds.eta2 {
        Preference::StrictlyPreferred
    } else if y_hat >= thresholds.eta1 {
        Preference::Indifferent
    } else {
        Preference::StrictlyWorse
    })
}

/// Rescale the model so attribute weights sum to 1, dividing the nonlinear
/// share by the same weight sum (folded into the head vector). Score
/// differences shrink by exactly the weight sum, so orderings are preserved.
pub fn normalize_model(model: &HybridModel) -> Result<HybridModel> {
    let total = model.additive.weight_sum();
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "cannot normalize a model whose weights sum to zero".into(),
        ));
    }
    let mut out = model.clone();
    for w in out.additive.weights.iter_mut() {
        *w /= total;
    }
    for h in out.mlp.head.iter_mut() {
        *h /= total;
    }
    Ok(out)
}

/// One row of a ranking: position, alternative index, and scores.
#[derive(Debug, Clone, Serialize)]
pub struct RankedAlternative {
    pub rank: usize,
    pub index: usize,
    pub score: f64,
    pub normalized_score: f64,
}

/// Total order by descending global score; ties broken by input index.
pub fn rank(model: &HybridModel, alternatives: &[Vec<f64>]) -> Result<Vec<RankedAlternative>> {
    if alternatives.is_empty() {
        return Err(Error::config("ranking needs at least one alternative"));
    }
    let normalized = normalize_model(model)?;
    let mut rows: Vec<(usize, f64, f64)> = alternatives
        .iter()
        .enumerate()
        .map(|(idx, x)| {
            Ok((
                idx,
                model.global_score(x)?,
                normalized.global_score(x)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(pos, (index, score, normalized_score))| RankedAlternative {
            rank: pos + 1,
            index,
            score,
            normalized_score,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::{AlphaParam, HybridModel, ModelConfig};
    use crate::mlp::Activation;
    use crate::numeric::SeededRng;

    fn random_model(seed: u64, n_attrs: usize, degree: usize) -> HybridModel {
        let mut rng = SeededRng::new(seed);
        let config = ModelConfig {
            degrees: vec![degree; n_attrs],
            linear_attrs: (0..n_attrs).collect(),
            hidden: vec![5],
            activation: Activation::Relu,
            alpha: AlphaParam::Fixed { value: 0.6 },
        };
        let mut model = HybridModel::init(&config, &mut rng).unwrap();
        for w in model.additive.weights.iter_mut() {
            *w = rng.uniform(0.1, 2.0).unwrap();
        }
        for c in model.additive.coeffs.iter_mut() {
            for v in c.iter_mut() {
                *v = rng.uniform(-1.0, 1.0).unwrap();
            }
        }
        model
    }

    #[test]
    fn pair_counts() {
        let spec = BasisSpec::uniform(2, 1).unwrap();
        let alts: Vec<Vec<f64>> = (0..3).map(|i| vec![i as f64 * 0.1, 0.5]).collect();
        let pairs = build_pairs(&alts, &[0.3, 0.2, 0.1], &spec).unwrap();
        assert_eq!(pairs.len(), 3);

        let big: Vec<Vec<f64>> = (0..250).map(|i| vec![(i as f64) / 250.0, 0.5]).collect();
        let scores: Vec<f64> = (0..250).map(|i| i as f64).collect();
        assert_eq!(build_pairs(&big, &scores, &spec).unwrap().len(), 31_125);
    }

    #[test]
    fn tie_labeled_one() {
        let spec = BasisSpec::uniform(1, 1).unwrap();
        let pairs = build_pairs(&[vec![0.1], vec![0.9]], &[0.5, 0.5], &spec).unwrap();
        assert_eq!(pairs[0].label, 1.0);
    }

    #[test]
    fn label_antisymmetry_when_scores_differ() {
        let spec = BasisSpec::uniform(1, 1).unwrap();
        let alts = vec![vec![0.2], vec![0.8]];
        let forward = build_pairs(&alts, &[0.1, 0.9], &spec).unwrap();
        let backward = build_pairs(&alts, &[0.9, 0.1], &spec).unwrap();
        assert_eq!(forward[0].label + backward[0].label, 1.0);
    }

    #[test]
    fn threshold_arithmetic() {
        let t = PreferenceThresholds::new(0.45, 0.55).unwrap();
        assert!(0.95 >= t.eta2);
        assert!(0.3 < t.eta1);
        assert!(PreferenceThresholds::new(0.6, 0.4).is_err());
    }

    #[test]
    fn identical_alternatives_are_indifferent() {
        let model = random_model(1, 2, 2);
        let x = vec![0.4, 0.7];
        let pref = compare(&model, &x, &x, PreferenceThresholds::default()).unwrap();
        assert_eq!(pref, Preference::Indifferent);
    }

    #[test]
    fn compare_three_way() {
        let model = random_model(2, 2, 1);
        let t = PreferenceThresholds::default();
        // with alpha-weighted positive weights and identity marginals a clearly
        // larger vector is preferred
        let lo = vec![0.0, 0.0];
        let hi = vec![1.0, 1.0];
        // depends on the nonlinear part too, so check the pair is consistent
        let a = compare(&model, &hi, &lo, t).unwrap();
        let b = compare(&model, &lo, &hi, t).unwrap();
        match a {
            Preference::StrictlyPreferred => assert_eq!(b, Preference::StrictlyWorse),
            Preference::StrictlyWorse => assert_eq!(b, Preference::StrictlyPreferred),
            Preference::Indifferent => assert_eq!(b, Preference::Indifferent),
        }
    }

    #[test]
    fn normalization_identity_when_weights_sum_to_one() {
        let mut model = random_model(3, 2, 2);
        let total = model.additive.weight_sum();
        for w in model.additive.weights.iter_mut() {
            *w /= total;
        }
        for h in model.mlp.head.iter_mut() {
            *h /= total;
        }
        // already normalized: weight sum is 1, so normalize_model is identity
        let again = normalize_model(&model).unwrap();
        let x = [0.3, 0.9];
        assert!((model.global_score(&x).unwrap() - again.global_score(&x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn normalization_scales_differences_exactly() {
        let mut rng = SeededRng::new(4);
        for seed in 0..20 {
            let model = random_model(seed, 3, 2);
            let normalized = normalize_model(&model).unwrap();
            let total = model.additive.weight_sum();
            let a: Vec<f64> = (0..3).map(|_| rng.next_f64()).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.next_f64()).collect();
            let du = model.global_score(&a).unwrap() - model.global_score(&b).unwrap();
            let dun = normalized.global_score(&a).unwrap() - normalized.global_score(&b).unwrap();
            assert!((dun * total - du).abs() < 1e-10, "du {du} dun {dun}");
        }
    }

    #[test]
    fn rank_basic() {
        let model = random_model(5, 2, 1);
        let single = rank(&model, &[vec![0.5, 0.5]]).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].index, 0);

        let alts = vec![vec![0.1, 0.1], vec![0.9, 0.9], vec![0.5, 0.5]];
        let ranked = rank(&model, &alts).unwrap();
        assert_eq!(ranked.len(), 3);
        for w in ranked.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
    }

    #[test]
    fn rank_agrees_with_pairwise_compare() {
        let mut rng = SeededRng::new(6);
        for seed in 0..5 {
            let model = random_model(100 + seed, 2, 2);
            let alts: Vec<Vec<f64>> = (0..8)
                .map(|_| vec![rng.next_f64(), rng.next_f64()])
                .collect();
            let ranked = rank(&model, &alts).unwrap();
            // no eta band: any strictly higher-ranked alternative must not be
            // strictly worse pairwise
            let strict = PreferenceThresholds::new(0.5, 0.5).unwrap();
            for a in 0..ranked.len() {
                for b in (a + 1)..ranked.len() {
                    if ranked[a].score > ranked[b].score {
                        let pref = compare(
                            &model,
                            &alts[ranked[a].index],
                            &alts[ranked[b].index],
                            strict,
                        )
                        .unwrap();
                        assert_eq!(pref, Preference::StrictlyPreferred);
                    }
                }
            }
        }
    }

    #[test]
    fn ranking_by_normalized_model_is_identical() {
        let mut rng = SeededRng::new(7);
        let model = random_model(42, 3, 2);
        let normalized = normalize_model(&model).unwrap();
        let alts: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..3).map(|_| rng.next_f64()).collect())
            .collect();
        let a: Vec<usize> = rank(&model, &alts).unwrap().iter().map(|r| r.index).collect();
        let b: Vec<usize> = rank(&normalized, &alts)
            .unwrap()
            .iter()
            .map(|r| r.index)
            .collect();
        assert_eq!(a, b);
    }
}
