//! The hybrid model proper: alpha-blended score, probability output, losses,
//! optimizers, the joint training loop, and cross-validated iteration
//! selection.
//!
//! Both components consume the polynomial expansion of the attribute vector.
//! The network sees the whole expansion; the additive component reads only the
//! blocks of the attributes assigned to it. Training on pairwise-difference
//! features works through the same expanded path, since the additive score is
//! linear in the expansion.
//!
//! A trainable trade-off coefficient is stored as an unconstrained scalar `a`
//! with `alpha = sigmoid(a)`, initialized at `a = 0` (alpha = 0.5), which keeps
//! alpha inside [0, 1] with smooth gradients.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::additive::AdditiveComponent;
use crate::basis::{expand_vector, BasisSpec};
use crate::mlp::{Activation, MlpComponent, MlpGradients};
use crate::numeric::{sigmoid, SeededRng};
use crate::{Error, Result};

pub const ARTIFACT_VERSION: u32 = 1;

/// Lower clamp for attribute weights during training. Strictly positive: at
/// an exact zero the coefficient gradients of that attribute vanish and its
/// marginal could never recover.
pub const WEIGHT_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AlphaParam {
    /// alpha = sigmoid(raw); raw is updated by the optimizer.
    Trainable { raw: f64 },
    Fixed { value: f64 },
}

impl AlphaParam {
    pub fn value(&self) -> f64 {
        match *self {
            AlphaParam::Trainable { raw } => sigmoid(raw),
            AlphaParam::Fixed { value } => value,
        }
    }

    pub fn is_trainable(&self) -> bool {
        matches!(self, AlphaParam::Trainable { .. })
    }
}

/// The full NN-MCDA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    pub alpha: AlphaParam,
    pub additive: AdditiveComponent,
    pub mlp: MlpComponent,
    /// Indices (into the full attribute schema) fed to the additive component.
    pub linear_attrs: Vec<usize>,
    /// Expansion spec over the full attribute schema; the network input.
    pub all_spec: BasisSpec,
}

/// Architecture and initialization choices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Polynomial degree per attribute, full schema order.
    pub degrees: Vec<usize>,
    /// Attribute indices handled by the additive component.
    pub linear_attrs: Vec<usize>,
    /// Hidden layer widths of the network.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub alpha: AlphaParam,
}

impl ModelConfig {
    pub fn uniform(n_attrs: usize, degree: usize) -> Self {
        ModelConfig {
            degrees: vec![degree; n_attrs],
            linear_attrs: (0..n_attrs).collect(),
            hidden: vec![64],
            activation: Activation::Relu,
            alpha: AlphaParam::Trainable { raw: 0.0 },
        }
    }
}

impl HybridModel {
    /// Fresh model: identity-leaning marginals (degree-1 coefficient 1, the
    /// rest 0), weights 0.5, Glorot-initialized network.
    pub fn init(config: &ModelConfig, rng: &mut SeededRng) -> Result<Self> {
        let all_spec = BasisSpec::new(config.degrees.clone())?;
        if config.linear_attrs.is_empty() {
            return Err(Error::config("at least one attribute must be linear"));
        }
        for &j in &config.linear_attrs {
            if j >= all_spec.n_attrs() {
                return Err(Error::config(format!(
                    "linear attribute index {j} out of range"
                )));
            }
        }
        if let AlphaParam::Fixed { value } = config.alpha {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::config("fixed alpha must lie in [0, 1]"));
            }
        }
        let linear_degrees: Vec<usize> = config
            .linear_attrs
            .iter()
            .map(|&j| config.degrees[j])
            .collect();
        let linear_spec = BasisSpec::new(linear_degrees)?;
        let mut coeffs: Vec<Vec<f64>> = linear_spec.degrees.iter().map(|&d| vec![0.0; d]).collect();
        for c in coeffs.iter_mut() {
            c[0] = 1.0;
        }
        let additive = AdditiveComponent::new(
            vec![0.5; linear_spec.n_attrs()],
            coeffs,
            linear_spec,
        )?;
        let mlp = MlpComponent::init(all_spec.width(), &config.hidden, config.activation, rng)?;
        Ok(HybridModel {
            alpha: config.alpha,
            additive,
            mlp,
            linear_attrs: config.linear_attrs.clone(),
            all_spec,
        })
    }

    pub fn n_attrs(&self) -> usize {
        self.all_spec.n_attrs()
    }

    /// The additive component's expanded input, extracted from the full
    /// expansion block by block.
    fn linear_blocks(&self, expanded: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.additive.spec.width());
        for &j in &self.linear_attrs {
            let off = self.all_spec.block_offset(j);
            out.extend_from_slice(&expanded[off..off + self.all_spec.degrees[j]]);
        }
        out
    }

    /// Linear and nonlinear component scores on an expanded input.
    pub fn component_scores(&self, expanded: &[f64]) -> Result<(f64, f64)> {
        if expanded.len() != self.all_spec.width() {
            return Err(Error::schema(format!(
                "expected expansion width {}, got {}",
                self.all_spec.width(),
                expanded.len()
            )));
        }
        let z_linear = self
            .additive
            .linear_score_expanded(&self.linear_blocks(expanded))?;
        let (z_nonlinear, _) = self.mlp.forward(expanded)?;
        Ok((z_linear, z_nonlinear))
    }

    /// U = alpha * z_linear + (1 - alpha) * z_nonlinear on an expanded input.
    pub fn global_score_expanded(&self, expanded: &[f64]) -> Result<f64> {
        let (z_lin, z_non) = self.component_scores(expanded)?;
        let alpha = self.alpha.value();
        Ok(alpha * z_lin + (1.0 - alpha) * z_non)
    }

    /// U on a raw attribute vector.
    pub fn global_score(&self, x: &[f64]) -> Result<f64> {
        let expanded = expand_vector(x, &self.all_spec)?;
        self.global_score_expanded(&expanded)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.global_score(x)?))
    }

    pub fn predict_proba_expanded(&self, expanded: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.global_score_expanded(expanded)?))
    }
}

/// Loss variants: plain MSE or MSE with an alpha regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossVariant {
    Mse,
    /// MSE + (1 - alpha)^2: pushes weight toward the linear component.
    MsePlusLinearReg,
    /// MSE + (2 alpha - 1)^2: favors an even split.
    MseBalancedReg,
}

impl LossVariant {
    fn penalty(self, alpha: f64) -> f64 {
        match self {
            LossVariant::Mse => 0.0,
            LossVariant::MsePlusLinearReg => (1.0 - alpha).powi(2),
            LossVariant::MseBalancedReg => (2.0 * alpha - 1.0).powi(2),
        }
    }

    fn penalty_grad(self, alpha: f64) -> f64 {
        match self {
            LossVariant::Mse => 0.0,
            LossVariant::MsePlusLinearReg => -2.0 * (1.0 - alpha),
            LossVariant::MseBalancedReg => 4.0 * (2.0 * alpha - 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adagrad,
    Adam,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// Epochs over the training set.
    pub iterations: usize,
    pub minibatch: usize,
    pub seed: u64,
    pub loss: LossVariant,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-2,
            iterations: 60,
            minibatch: 32,
            seed: 0,
            loss: LossVariant::Mse,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::config("learning rate must be positive"));
        }
        if self.minibatch == 0 {
            return Err(Error::config("minibatch size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub loss_trace: Vec<f64>,
    pub final_alpha: f64,
    pub duration_secs: f64,
    pub seed: u64,
}

/// Training samples: pre-expanded features (width = model expansion width) and
/// binary labels.
#[derive(Debug, Clone)]
pub struct TrainSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl TrainSet {
    pub fn from_raw(rows: &[Vec<f64>], labels: Vec<f64>, spec: &BasisSpec) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::schema("row/label count mismatch"));
        }
        let features = rows
            .iter()
            .map(|r| expand_vector(r, spec))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainSet { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> TrainSet {
        TrainSet {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Gradients of the loss with respect to every model parameter.
#[derive(Debug, Clone)]
pub struct GradientSet {
    pub weights: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
    pub mlp: MlpGradients,
    /// Gradient w.r.t. the unconstrained alpha parameter (0 when fixed).
    pub alpha_raw: f64,
}

/// Mean of (predict_proba - y)^2 over the batch.
pub fn loss(model: &HybridModel, batch: &TrainSet) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::config("loss requires a nonempty batch"));
    }
    let mut acc = 0.0;
    for (x, &y) in batch.features.iter().zip(&batch.labels) {
        let p = model.predict_proba_expanded(x)?;
        acc += (p - y).powi(2);
    }
    Ok(acc / batch.len() as f64)
}

/// MSE plus the selected alpha penalty.
pub fn loss_regularized(model: &HybridModel, batch: &TrainSet, variant: LossVariant) -> Result<f64> {
    Ok(loss(model, batch)? + variant.penalty(model.alpha.value()))
}

/// Analytic gradients of [`loss_regularized`] over the batch.
pub fn loss_gradients(
    model: &HybridModel,
    batch: &TrainSet,
    variant: LossVariant,
) -> Result<GradientSet> {
    if batch.is_empty() {
        return Err(Error::config("gradient requires a nonempty batch"));
    }
    let alpha = model.alpha.value();
    let n = batch.len() as f64;
    let mut gw = vec![0.0; model.additive.n_attrs()];
    let mut gp: Vec<Vec<f64>> = model
        .additive
        .coeffs
        .iter()
        .map(|c| vec![0.0; c.len()])
        .collect();
    let mut gmlp = MlpGradients::zeros_like(&model.mlp);
    let mut galpha = 0.0;

    for (x, &y) in batch.features.iter().zip(&batch.labels) {
        let linear_input = model.linear_blocks(x);
        let z_lin = model.additive.linear_score_expanded(&linear_input)?;
        let (z_non, cache) = model.mlp.forward(x)?;
        let u = alpha * z_lin + (1.0 - alpha) * z_non;
        let p = sigmoid(u);
        let upstream = (2.0 / n) * (p - y) * p * (1.0 - p);

        let mut offset = 0;
        for (j, coeffs) in model.additive.coeffs.iter().enumerate() {
            let block = &linear_input[offset..offset + coeffs.len()];
            let mut v = 0.0;
            for ((g, &c), &e) in gp[j].iter_mut().zip(coeffs).zip(block) {
                v += c * e;
                *g += upstream * alpha * model.additive.weights[j] * e;
            }
            gw[j] += upstream * alpha * v;
            offset += coeffs.len();
        }
        let sample = model.mlp.backward(&cache, upstream * (1.0 - alpha))?;
        gmlp.accumulate(&sample);
        galpha += upstream * (z_lin - z_non);
    }

    let alpha_raw = match model.alpha {
        AlphaParam::Trainable { .. } => {
            (galpha + variant.penalty_grad(alpha)) * alpha * (1.0 - alpha)
        }
        AlphaParam::Fixed { .. } => 0.0,
    };

    Ok(GradientSet {
        weights: gw,
        coeffs: gp,
        mlp: gmlp,
        alpha_raw,
    })
}

// Flat parameter order: additive weights, additive coeffs, per-layer network
// weights then biases, head, trainable alpha last.
pub fn flatten_params(model: &HybridModel) -> Vec<f64> {
    let mut out = Vec::new();
    out.extend_from_slice(&model.additive.weights);
    for c in &model.additive.coeffs {
        out.extend_from_slice(c);
    }
    for layer in &model.mlp.layers {
        out.extend_from_slice(&layer.weights.data);
        out.extend_from_slice(&layer.bias);
    }
    out.extend_from_slice(&model.mlp.head);
    if let AlphaParam::Trainable { raw } = model.alpha {
        out.push(raw);
    }
    out
}

pub fn set_params(model: &mut HybridModel, params: &[f64]) {
    let mut it = params.iter().copied();
    for w in model.additive.weights.iter_mut() {
        *w = it.next().unwrap();
    }
    for c in model.additive.coeffs.iter_mut() {
        for v in c.iter_mut() {
            *v = it.next().unwrap();
        }
    }
    for layer in model.mlp.layers.iter_mut() {
        for v in layer.weights.data.iter_mut() {
            *v = it.next().unwrap();
        }
        for v in layer.bias.iter_mut() {
            *v = it.next().unwrap();
        }
    }
    for v in model.mlp.head.iter_mut() {
        *v = it.next().unwrap();
    }
    if let AlphaParam::Trainable { ref mut raw } = model.alpha {
        *raw = it.next().unwrap();
    }
    debug_assert!(it.next().is_none());
}

pub fn flatten_grads(grads: &GradientSet, trainable_alpha: bool) -> Vec<f64> {
    let mut out = Vec::new();
    out.extend_from_slice(&grads.weights);
    for c in &grads.coeffs {
        out.extend_from_slice(c);
    }
    for (w, b) in &grads.mlp.layers {
        out.extend_from_slice(&w.data);
        out.extend_from_slice(b);
    }
    out.extend_from_slice(&grads.mlp.head);
    if trainable_alpha {
        out.push(grads.alpha_raw);
    }
    out
}

struct OptimizerState {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl OptimizerState {
    fn new(kind: OptimizerKind, lr: f64, dim: usize) -> Self {
        OptimizerState {
            kind,
            lr,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        const EPS: f64 = 1e-8;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adagrad => {
                for ((p, g), acc) in params.iter_mut().zip(grads).zip(self.v.iter_mut()) {
                    *acc += g * g;
                    *p -= self.lr * g / (acc.sqrt() + EPS);
                }
            }
            OptimizerKind::Adam => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                self.t += 1;
                let bc1 = 1.0 - B1.powi(self.t as i32);
                let bc2 = 1.0 - B2.powi(self.t as i32);
                for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
                    self.m[i] = B1 * self.m[i] + (1.0 - B1) * g;
                    self.v[i] = B2 * self.v[i] + (1.0 - B2) * g * g;
                    let mh = self.m[i] / bc1;
                    let vh = self.v[i] / bc2;
                    *p -= self.lr * mh / (vh.sqrt() + EPS);
                }
            }
        }
    }
}

/// Train a fresh model (initialized from the training seed) on the dataset.
pub fn train(
    model_config: &ModelConfig,
    data: &TrainSet,
    config: &TrainConfig,
) -> Result<(HybridModel, TrainReport)> {
    config.validate()?;
    let mut rng = SeededRng::new(config.seed);
    let mut model = HybridModel::init(model_config, &mut rng)?;
    let report = train_in_place(&mut model, data, config, &mut rng, None)?;
    Ok((model, report))
}

/// Run the optimizer on an existing model. When `val` is given, the per-epoch
/// trace records validation loss instead of training loss.
pub fn train_in_place(
    model: &mut HybridModel,
    data: &TrainSet,
    config: &TrainConfig,
    rng: &mut SeededRng,
    val: Option<&TrainSet>,
) -> Result<TrainReport> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    if data.features[0].len() != model.all_spec.width() {
        return Err(Error::schema(format!(
            "training features have width {}, model expects {}",
            data.features[0].len(),
            model.all_spec.width()
        )));
    }
    let start = Instant::now();
    let dim = flatten_params(model).len();
    let mut opt = OptimizerState::new(config.optimizer, config.learning_rate, dim);
    let mut loss_trace = Vec::with_capacity(config.iterations);

    for epoch in 0..config.iterations {
        let order = rng.shuffled_indices(data.len());
        for chunk in order.chunks(config.minibatch) {
            let batch = data.subset(chunk);
            let grads = loss_gradients(model, &batch, config.loss)?;
            let mut params = flatten_params(model);
            opt.step(&mut params, &flatten_grads(&grads, model.alpha.is_trainable()));
            set_params(model, &params);
            model.additive.project_weights_min(WEIGHT_FLOOR);
        }
        let epoch_loss = match val {
            Some(v) => loss_regularized(model, v, config.loss)?,
            None => loss_regularized(model, data, config.loss)?,
        };
        if !epoch_loss.is_finite() {
            return Err(Error::Diverged(format!(
                "loss became non-finite at iteration {} (learning rate {} is likely too large)",
                epoch + 1,
                config.learning_rate
            )));
        }
        loss_trace.push(epoch_loss);
    }

    Ok(TrainReport {
        loss_trace,
        final_alpha: model.alpha.value(),
        duration_secs: start.elapsed().as_secs_f64(),
        seed: config.seed,
    })
}

/// Fivefold cross-validation over iteration count: for each fold, train on the
/// other four and record the epoch with the lowest validation loss; the
/// rounded average across folds is the iteration count for the final model.
pub fn select_iterations_cv(
    model_config: &ModelConfig,
    data: &TrainSet,
    config: &TrainConfig,
) -> Result<usize> {
    const FOLDS: usize = 5;
    if data.len() < FOLDS {
        return Err(Error::config("cross-validation needs at least 5 samples"));
    }
    let mut shuffle_rng = SeededRng::derive(config.seed, 0xcf01);
    let order = shuffle_rng.shuffled_indices(data.len());
    let mut best_iters = Vec::with_capacity(FOLDS);
    for fold in 0..FOLDS {
        let val_idx: Vec<usize> = order
            .iter()
            .copied()
            .skip(fold)
            .step_by(FOLDS)
            .collect();
        let train_idx: Vec<usize> = order
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, _)| i % FOLDS != fold)
            .map(|(_, v)| v)
            .collect();
        let val_set = data.subset(&val_idx);
        let train_set = data.subset(&train_idx);
        if val_set.labels.iter().all(|&y| y == val_set.labels[0]) {
            eprintln!("warning: fold {fold} validation split contains a single class");
        }
        let mut rng = SeededRng::new(config.seed);
        let mut model = HybridModel::init(model_config, &mut rng)?;
        let report = train_in_place(&mut model, &train_set, config, &mut rng, Some(&val_set))?;
        let best = report
            .loss_trace
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i + 1)
            .unwrap_or(config.iterations);
        best_iters.push(best);
    }
    let avg = best_iters.iter().sum::<usize>() as f64 / FOLDS as f64;
    Ok((avg.round() as usize).clamp(1, config.iterations))
}

/// Serialized model file: the model plus enough schema context to explain it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub version: u32,
    pub model: HybridModel,
    pub attribute_names: Vec<String>,
    /// Per-attribute (min, max) normalization bounds recorded at ingestion,
    /// used to report curves in raw units.
    pub bounds: Option<Vec<(f64, f64)>>,
    pub config_hash: String,
}

impl ModelArtifact {
    pub fn new(model: HybridModel, attribute_names: Vec<String>, config_hash: String) -> Self {
        ModelArtifact {
            version: ARTIFACT_VERSION,
            model,
            attribute_names,
            bounds: None,
            config_hash,
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let artifact: ModelArtifact = serde_json::from_str(&text)?;
        if artifact.version != ARTIFACT_VERSION {
            return Err(Error::Artifact(format!(
                "artifact version {} not supported (expected {})",
                artifact.version, ARTIFACT_VERSION
            )));
        }
        Ok(artifact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_model(seed: u64, alpha: AlphaParam) -> HybridModel {
        let mut rng = SeededRng::new(seed);
        let config = ModelConfig {
            degrees: vec![2, 3],
            linear_attrs: vec![0, 1],
            hidden: vec![4],
            activation: Activation::Relu,
            alpha,
        };
        let mut model = HybridModel::init(&config, &mut rng).unwrap();
        for c in model.additive.coeffs.iter_mut() {
            for v in c.iter_mut() {
                *v = rng.uniform(-1.0, 1.0).unwrap();
            }
        }
        for w in model.additive.weights.iter_mut() {
            *w = rng.uniform(0.1, 1.0).unwrap();
        }
        model
    }

    fn random_batch(model: &HybridModel, rng: &mut SeededRng, n: usize) -> TrainSet {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..model.n_attrs()).map(|_| rng.next_f64()).collect())
            .collect();
        let labels = (0..n).map(|_| (rng.next_u64() % 2) as f64).collect();
        TrainSet::from_raw(&rows, labels, &model.all_spec).unwrap()
    }

    #[test]
    fn alpha_endpoints() {
        let model = small_model(1, AlphaParam::Fixed { value: 1.0 });
        let x = [0.3, 0.7];
        let expanded = expand_vector(&x, &model.all_spec).unwrap();
        let (z_lin, z_non) = model.component_scores(&expanded).unwrap();
        assert_eq!(model.global_score(&x).unwrap(), z_lin);

        let mut m0 = model.clone();
        m0.alpha = AlphaParam::Fixed { value: 0.0 };
        assert_eq!(m0.global_score(&x).unwrap(), z_non);

        let mut mh = model.clone();
        mh.alpha = AlphaParam::Fixed { value: 0.5 };
        assert!((mh.global_score(&x).unwrap() - 0.5 * (z_lin + z_non)).abs() < 1e-15);
    }

    #[test]
    fn blend_arithmetic() {
        // alpha = 0.5, z_lin = 0.4, z_non = -0.2 -> 0.1
        assert!((0.5f64 * 0.4 + 0.5 * (-0.2) - 0.1).abs() < 1e-15);
        let model = small_model(2, AlphaParam::Fixed { value: 0.5 });
        let x = [0.4, 0.6];
        let expanded = expand_vector(&x, &model.all_spec).unwrap();
        let (z_lin, z_non) = model.component_scores(&expanded).unwrap();
        let u = model.global_score(&x).unwrap();
        assert!((u - 0.5 * z_lin - 0.5 * z_non).abs() < 1e-14);
    }

    #[test]
    fn proba_of_zero_score_is_half() {
        // alpha = 1, identity marginals, v_j(0) = 0 => U(0) = 0 => p = 0.5
        let mut rng = SeededRng::new(3);
        let config = ModelConfig {
            degrees: vec![1, 1, 1],
            linear_attrs: vec![0, 1, 2],
            hidden: vec![4],
            activation: Activation::Relu,
            alpha: AlphaParam::Fixed { value: 1.0 },
        };
        let model = HybridModel::init(&config, &mut rng).unwrap();
        assert_eq!(model.predict_proba(&[0.0, 0.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn loss_cases() {
        let model = small_model(4, AlphaParam::Fixed { value: 0.5 });
        let empty = TrainSet {
            features: vec![],
            labels: vec![],
        };
        assert!(loss(&model, &empty).is_err());

        // predictions exactly 0.5 against any labels give 0.25
        let mut m = small_model(4, AlphaParam::Fixed { value: 1.0 });
        for w in m.additive.weights.iter_mut() {
            *w = 0.0;
        }
        let mut rng = SeededRng::new(5);
        let batch = random_batch(&m, &mut rng, 10);
        assert!((loss(&m, &batch).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn loss_hand_example() {
        // batch {(p=0.9, y=1), (p=0.2, y=0)} -> (0.01 + 0.04) / 2
        let p = [0.9f64, 0.2];
        let y = [1.0f64, 0.0];
        let mse = p
            .iter()
            .zip(&y)
            .map(|(pi, yi)| (pi - yi).powi(2))
            .sum::<f64>()
            / 2.0;
        assert!((mse - 0.025).abs() < 1e-15);
    }

    #[test]
    fn regularizer_endpoints() {
        assert_eq!(LossVariant::MsePlusLinearReg.penalty(1.0), 0.0);
        assert_eq!(LossVariant::MsePlusLinearReg.penalty(0.0), 1.0);
        assert_eq!(LossVariant::MseBalancedReg.penalty(0.5), 0.0);
    }

    #[test]
    fn fixed_alpha_one_ignores_mlp() {
        let model = small_model(6, AlphaParam::Fixed { value: 1.0 });
        let mut other = model.clone();
        for h in other.mlp.head.iter_mut() {
            *h += 10.0;
        }
        let x = [0.2, 0.9];
        assert_eq!(
            model.global_score(&x).unwrap(),
            other.global_score(&x).unwrap()
        );
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = SeededRng::new(7);
        for (alpha, variant) in [
            (AlphaParam::Trainable { raw: 0.2 }, LossVariant::Mse),
            (
                AlphaParam::Trainable { raw: -0.4 },
                LossVariant::MsePlusLinearReg,
            ),
            (
                AlphaParam::Trainable { raw: 0.7 },
                LossVariant::MseBalancedReg,
            ),
            (AlphaParam::Fixed { value: 0.3 }, LossVariant::Mse),
        ] {
            let model = small_model(rng.next_u64(), alpha);
            let batch = random_batch(&model, &mut rng, 6);
            let grads = loss_gradients(&model, &batch, variant).unwrap();
            let flat_g = flatten_grads(&grads, model.alpha.is_trainable());
            let params = flatten_params(&model);
            let h = 1e-5;
            for i in 0..params.len() {
                let mut pp = params.clone();
                pp[i] += h;
                let mut mp = model.clone();
                set_params(&mut mp, &pp);
                let lp = loss_regularized(&mp, &batch, variant).unwrap();
                let mut pm = params.clone();
                pm[i] -= h;
                let mut mm = model.clone();
                set_params(&mut mm, &pm);
                let lm = loss_regularized(&mm, &batch, variant).unwrap();
                let numeric = (lp - lm) / (2.0 * h);
                let denom = flat_g[i].abs().max(numeric.abs()).max(1e-7);
                assert!(
                    (flat_g[i] - numeric).abs() / denom < 1e-4,
                    "param {i}: analytic {} numeric {}",
                    flat_g[i],
                    numeric
                );
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = SeededRng::new(8);
        let config = ModelConfig::uniform(2, 2);
        let model = HybridModel::init(&config, &mut SeededRng::new(0)).unwrap();
        let data = random_batch(&model, &mut rng, 40);
        let tc = TrainConfig {
            iterations: 5,
            seed: 123,
            ..TrainConfig::default()
        };
        let (m1, r1) = train(&config, &data, &tc).unwrap();
        let (m2, r2) = train(&config, &data, &tc).unwrap();
        assert_eq!(
            serde_json::to_string(&m1).unwrap(),
            serde_json::to_string(&m2).unwrap()
        );
        assert_eq!(r1.loss_trace, r2.loss_trace);
    }

    #[test]
    fn alpha_stays_in_unit_interval_during_training() {
        let mut rng = SeededRng::new(9);
        let config = ModelConfig::uniform(2, 2);
        let probe = HybridModel::init(&config, &mut SeededRng::new(0)).unwrap();
        let data = random_batch(&probe, &mut rng, 60);
        let tc = TrainConfig {
            iterations: 1,
            learning_rate: 0.5,
            seed: 11,
            ..TrainConfig::default()
        };
        let mut model = HybridModel::init(&config, &mut SeededRng::new(11)).unwrap();
        let mut train_rng = SeededRng::new(11);
        for _ in 0..10 {
            train_in_place(&mut model, &data, &tc, &mut train_rng, None).unwrap();
            let a = model.alpha.value();
            assert!((0.0..=1.0).contains(&a), "alpha {a}");
            assert!(model.additive.weights.iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn cv_iteration_count_bounded_and_reproducible() {
        let mut rng = SeededRng::new(10);
        let config = ModelConfig::uniform(2, 1);
        let probe = HybridModel::init(&config, &mut SeededRng::new(0)).unwrap();
        // separable data: label by first attribute
        let rows: Vec<Vec<f64>> = (0..80).map(|_| vec![rng.next_f64(), rng.next_f64()]).collect();
        let labels: Vec<f64> = rows.iter().map(|r| (r[0] > 0.5) as u8 as f64).collect();
        let data = TrainSet::from_raw(&rows, labels, &probe.all_spec).unwrap();
        let tc = TrainConfig {
            iterations: 8,
            seed: 77,
            ..TrainConfig::default()
        };
        let a = select_iterations_cv(&config, &data, &tc).unwrap();
        let b = select_iterations_cv(&config, &data, &tc).unwrap();
        assert_eq!(a, b);
        assert!(a >= 1 && a <= tc.iterations);
    }

    #[test]
    fn artifact_roundtrip_and_version_gate() {
        let model = small_model(12, AlphaParam::Trainable { raw: 0.1 });
        let artifact = ModelArtifact::new(model, vec!["a".into(), "b".into()], "deadbeef".into());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        artifact.save(&path).unwrap();
        let loaded = ModelArtifact::load(&path).unwrap();
        assert_eq!(loaded.model, artifact.model);

        let mut bad = artifact.clone();
        bad.version = 99;
        let bad_path = dir.path().join("bad.json");
        bad.save(&bad_path).unwrap();
        assert!(ModelArtifact::load(&bad_path).is_err());
    }
}
