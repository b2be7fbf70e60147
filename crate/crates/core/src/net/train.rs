//! Adam with exponential learning-rate decay and validation early stopping.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{Evaluator, Model};
use crate::error::{Error, Result};
use crate::numerics::Prng;
use crate::physics::SamplePair;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub decay_rate: f64,
    /// Steps per decay factor; defaults to the number of batches per epoch.
    pub transition_steps: Option<usize>,
    /// Decay in whole factors instead of continuously.
    pub staircase: bool,
    /// Batch size as a fraction of the training set.
    pub batch_fraction: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub init_std: f64,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.005,
            decay_rate: 0.995,
            transition_steps: None,
            staircase: false,
            batch_fraction: 0.2,
            patience: 20,
            max_epochs: 1000,
            init_std: 0.1,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.decay_rate.is_finite() && self.decay_rate > 0.0 && self.decay_rate <= 1.0) {
            return bad("decay_rate must lie in (0, 1]");
        }
        if self.transition_steps == Some(0) {
            return bad("transition_steps must be positive");
        }
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return bad("batch_fraction must lie in (0, 1]");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if !(self.init_std.is_finite() && self.init_std >= 0.0) {
            return bad("init_std must be non-negative");
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || a.epsilon.is_nan() || a.epsilon <= 0.0 {
            return bad("adam betas must lie in [0, 1) and epsilon must be positive");
        }
        Ok(())
    }

    pub fn batch_size(&self, n_train: usize) -> usize {
        ((self.batch_fraction * n_train as f64).round() as usize).clamp(1, n_train.max(1))
    }

    /// Learning rate at optimizer step `step`.
    pub fn learning_rate_at(&self, step: usize, batches_per_epoch: usize) -> f64 {
        let transition = self.transition_steps.unwrap_or(batches_per_epoch).max(1) as f64;
        let mut exponent = step as f64 / transition;
        if self.staircase {
            exponent = exponent.floor();
        }
        self.learning_rate * self.decay_rate.powf(exponent)
    }
}

/// Adam state.
#[derive(Clone, Debug)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(cfg: AdamConfig, len: usize) -> Self {
        Adam { cfg, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let AdamConfig { beta1, beta2, epsilon } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_rmse: f64,
    pub val_rmse: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrainStatus {
    EarlyStopped,
    MaxEpochs,
    Diverged { epoch: usize },
}

#[derive(Clone, Debug)]
pub struct TrainResult {
    /// Parameters with the best validation RMSE.
    pub params: Vec<f64>,
    /// Parameters when training stopped.
    pub last_params: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_rmse: f64,
    pub history: Vec<EpochRecord>,
    pub status: TrainStatus,
}

impl TrainResult {
    pub fn history_csv(&self) -> String {
        let mut s = String::from("epoch,train_rmse,val_rmse,lr\n");
        for r in &self.history {
            s.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_rmse, r.val_rmse, r.lr));
        }
        s
    }
}

/// Pooled RMSE over every component of every sample together with its
/// gradient. The gradient is zero when the loss is zero.
pub fn loss_and_grad(eval: &Evaluator<'_>, params: &[f64], batch: &[&SamplePair]) -> Result<(f64, Vec<f64>)> {
    let parts: Vec<(f64, usize, Vec<f64>)> = batch
        .par_iter()
        .map(|s| eval.half_sse_gradient(params, &s.input, &s.target).map(|(sse, g)| (sse, s.target.data().len(), g)))
        .collect::<Result<_>>()?;
    let mut sse = 0.0;
    let mut count = 0;
    let mut grad = vec![0.0; params.len()];
    for (e, c, g) in &parts {
        sse += e;
        count += c;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    let loss = (sse / count.max(1) as f64).sqrt();
    let scale = if loss > 0.0 { 1.0 / (loss * count as f64) } else { 0.0 };
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok((loss, grad))
}

/// Pooled RMSE over a set of samples.
pub fn rmse(eval: &Evaluator<'_>, params: &[f64], samples: &[SamplePair]) -> Result<f64> {
    let parts: Vec<(f64, usize)> = samples
        .par_iter()
        .map(|s| {
            let pred = eval.forward(params, &s.input)?;
            let sse: f64 = pred.data().iter().zip(s.target.data()).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok((sse, s.target.data().len()))
        })
        .collect::<Result<_>>()?;
    let (sse, count) = parts.iter().fold((0.0, 0), |(a, c), (e, n)| (a + e, c + n));
    Ok((sse / count.max(1) as f64).sqrt())
}

fn sidelength(train: &[SamplePair], val: &[SamplePair]) -> Result<usize> {
    let n = train.first().ok_or_else(|| Error::InvalidConfig("training set is empty".into()))?.input.n();
    if val.is_empty() {
        return Err(Error::InvalidConfig("validation set is empty".into()));
    }
    if train.iter().chain(val).any(|s| s.input.n() != n || s.target.n() != n) {
        return Err(Error::SpecMismatch("samples have different sidelengths".into()));
    }
    Ok(n)
}

/// Trains from a fresh `N(0, init_std^2)` initialization drawn from the
/// run seed.
pub fn train(
    model: &Model,
    train_set: &[SamplePair],
    val_set: &[SamplePair],
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    let root = Prng::new(cfg.seed);
    let params = model.init_params(&mut root.derive(0), cfg.init_std);
    train_from(model, params, train_set, val_set, cfg)
}

pub fn train_from(
    model: &Model,
    mut params: Vec<f64>,
    train_set: &[SamplePair],
    val_set: &[SamplePair],
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    cfg.validate()?;
    if params.len() != model.param_count() {
        return Err(Error::ParamCount { expected: model.param_count(), found: params.len() });
    }
    let n = sidelength(train_set, val_set)?;
    let eval = model.evaluator(n)?;
    let mut shuffler = Prng::new(cfg.seed).derive(1);
    let batch_size = cfg.batch_size(train_set.len());
    let batches = train_set.len().div_ceil(batch_size);

    let mut adam = Adam::new(cfg.adam, params.len());
    let mut best = (f64::INFINITY, params.clone(), 0usize);
    let mut since_best = 0;
    let mut history = Vec::new();
    let mut status = TrainStatus::MaxEpochs;
    let mut step = 0;
    for epoch in 0..cfg.max_epochs {
        let lr_epoch = cfg.learning_rate_at(step, batches);
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        shuffler.shuffle(&mut order);
        for chunk in order.chunks(batch_size) {
            let batch: Vec<&SamplePair> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (_, grad) = loss_and_grad(&eval, &params, &batch)?;
            adam.step(&mut params, &grad, cfg.learning_rate_at(step, batches));
            step += 1;
        }
        let train_rmse = rmse(&eval, &params, train_set)?;
        let val_rmse = rmse(&eval, &params, val_set)?;
        history.push(EpochRecord { epoch, train_rmse, val_rmse, lr: lr_epoch });
        if !train_rmse.is_finite() || !val_rmse.is_finite() || params.iter().any(|p| !p.is_finite()) {
            status = TrainStatus::Diverged { epoch };
            break;
        }
        if val_rmse < best.0 {
            best = (val_rmse, params.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                status = TrainStatus::EarlyStopped;
                break;
            }
        }
    }
    Ok(TrainResult { params: best.1, last_params: params, best_epoch: best.2, best_val_rmse: best.0, history, status })
}
