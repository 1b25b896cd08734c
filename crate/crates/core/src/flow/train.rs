//! Minibatch Adam training with early stopping on validation NLL.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::maf::MafModel;
use crate::manifolds::Dataset;
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub layers: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Upper bound on epochs; early stopping usually ends training first.
    pub epochs: usize,
    pub val_fraction: f64,
    pub patience: usize,
    pub seed: u64,
    /// Global gradient-norm clip; `0` disables clipping.
    pub clip_norm: f64,
    pub lr_schedule: LrSchedule,
    /// Rotate the input of every layer after the first by a fixed random
    /// orthogonal matrix.
    pub rotations: bool,
}

/// Learning rate as a function of the epoch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half-cosine from the base rate down to zero at the last epoch.
    Cosine,
}

impl LrSchedule {
    fn rate(&self, base: f64, epoch: usize, epochs: usize) -> f64 {
        match self {
            LrSchedule::Constant => base,
            LrSchedule::Cosine => {
                let progress = (epoch - 1) as f64 / epochs as f64;
                0.5 * base * (1.0 + (std::f64::consts::PI * progress).cos())
            }
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![128, 128],
            layers: 5,
            learning_rate: 1e-3,
            batch_size: 256,
            epochs: 200,
            val_fraction: 0.1,
            patience: 10,
            seed: 0,
            clip_norm: 10.0,
            lr_schedule: LrSchedule::Constant,
            rotations: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.val_fraction > 0.0 && self.val_fraction <= 0.5) {
            return bad("val_fraction must lie in (0, 0.5]");
        }
        if self.layers == 0 || self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("need at least one layer and non-empty hidden sizes");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.clip_norm >= 0.0) {
            return bad("clip_norm must be non-negative");
        }
        Ok(())
    }
}

/// What happened during training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_val_nll: f64,
    pub best_val_nll: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub val_history: Vec<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

fn column_stats(x: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let mean = x.mean_axis(Axis(0)).expect("non-empty").to_vec();
    let scale = x
        .std_axis(Axis(0), 0.0)
        .iter()
        .map(|s| if s.is_finite() && *s > 1e-12 { *s } else { 1.0 })
        .collect();
    (mean, scale)
}

fn batched_nll(model: &MafModel, x: &Array2<f64>, batch: usize) -> Result<f64> {
    let mut total = 0.0;
    for chunk in x.axis_chunks_iter(Axis(0), batch.max(1)) {
        total += model.log_prob_batch(chunk)?.sum();
    }
    Ok(-total / x.nrows() as f64)
}

/// Trains a flow on `data` and returns the best-validation snapshot.
pub fn train_maf(data: &Dataset, config: &TrainConfig) -> Result<MafModel> {
    train_maf_with_report(data, config).map(|(m, _)| m)
}

pub fn train_maf_with_report(data: &Dataset, config: &TrainConfig) -> Result<(MafModel, TrainReport)> {
    config.validate()?;
    let n = data.len();
    let n_val = ((n as f64) * config.val_fraction).ceil() as usize;
    if n < 2 || n_val >= n {
        return Err(Error::InvalidArgument(format!("{n} points are too few to train and validate")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(derive_seed(config.seed, &[10])));
    let val = data.points.select(Axis(0), &order[..n_val]);
    let train = data.points.select(Axis(0), &order[n_val..]);
    let (mean, scale) = column_stats(&train);

    let mut model = MafModel::new(data.dim(), &config.hidden, config.layers, config.seed)?
        .with_standardization(mean, scale)?;
    if config.rotations {
        model = model.with_rotations(derive_seed(config.seed, &[12]));
    }
    let initial = batched_nll(&model, &val, 4096)?;
    let mut best = (initial, model.params.clone(), 0usize);
    let mut history = Vec::new();
    let mut adam = Adam::new(model.n_params(), config.learning_rate);
    let mut shuffle_rng = seeded(derive_seed(config.seed, &[11]));
    let mut rows: Vec<usize> = (0..train.nrows()).collect();
    let mut last_finite = None;
    let mut epochs_run = 0;

    for epoch in 1..=config.epochs {
        epochs_run = epoch;
        adam.lr = config.lr_schedule.rate(config.learning_rate, epoch, config.epochs);
        rows.shuffle(&mut shuffle_rng);
        for idx in rows.chunks(config.batch_size) {
            let batch = train.select(Axis(0), idx);
            let (loss, mut grad) = match model.nll_and_grad(batch.view()) {
                Ok(v) => v,
                Err(Error::NonFinite(_)) => {
                    return Err(Error::Divergence {
                        epoch,
                        last_finite_epoch: last_finite,
                    })
                }
                Err(e) => return Err(e),
            };
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    last_finite_epoch: last_finite,
                });
            }
            if config.clip_norm > 0.0 {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > config.clip_norm {
                    let f = config.clip_norm / norm;
                    grad.iter_mut().for_each(|g| *g *= f);
                }
            }
            adam.step(&mut model.params, &grad);
        }
        let v = match batched_nll(&model, &val, 4096) {
            Ok(v) if v.is_finite() => v,
            _ => {
                return Err(Error::Divergence {
                    epoch,
                    last_finite_epoch: last_finite,
                })
            }
        };
        last_finite = Some(epoch);
        history.push(v);
        if v < best.0 {
            best = (v, model.params.clone(), epoch);
        } else if epoch - best.2 >= config.patience {
            break;
        }
    }
    model.params = best.1;
    Ok((
        model,
        TrainReport {
            initial_val_nll: initial,
            best_val_nll: best.0,
            best_epoch: best.2,
            epochs_run,
            val_history: history,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{generate, ManifoldKind, ManifoldSpec};

    fn small() -> TrainConfig {
        TrainConfig {
            hidden: vec![16, 16],
            layers: 2,
            epochs: 20,
            batch_size: 128,
            learning_rate: 3e-3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn makes_progress_and_is_deterministic() {
        let spec = ManifoldSpec::new(ManifoldKind::GaussianDiag {
            sigmas: vec![2.0, 0.5],
        });
        let data = generate(&spec, 2000, 1).unwrap();
        let (_, a) = train_maf_with_report(&data, &small()).unwrap();
        let (_, b) = train_maf_with_report(&data, &small()).unwrap();
        assert_eq!(a.best_val_nll, b.best_val_nll);
        assert!(a.best_val_nll <= a.initial_val_nll);
    }

    #[test]
    fn rejects_bad_val_fraction() {
        let cfg = TrainConfig {
            val_fraction: 0.6,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
