use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{argmax_rows, Model};
use super::tape::Tape;
use super::tensor::Tensor;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LrSchedule {
    Constant,
    /// Annealed per epoch from the base rate towards zero.
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub lr_schedule: LrSchedule,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 4,
            batch_size: 8,
            learning_rate: 0.05,
            momentum: 0.9,
            weight_decay: 1e-4,
            lr_schedule: LrSchedule::Cosine,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::invalid(format!("weight_decay must be >= 0, got {}", self.weight_decay)));
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.lr_schedule {
            LrSchedule::Constant => self.learning_rate,
            LrSchedule::Cosine => {
                let frac = epoch as f64 / self.epochs as f64;
                0.5 * self.learning_rate * (1.0 + (std::f64::consts::PI * frac).cos())
            }
        }
    }
}

fn check_compat(model: &Model, dataset: &Dataset) -> Result<()> {
    if dataset.image_shape() != model.input_shape() {
        return Err(Error::ShapeMismatch {
            expected: model.input_shape().to_vec(),
            got: dataset.image_shape().to_vec(),
        });
    }
    if dataset.num_classes() != model.num_classes() {
        return Err(Error::invalid(format!(
            "dataset has {} classes, model has {}",
            dataset.num_classes(),
            model.num_classes()
        )));
    }
    Ok(())
}

/// Minimizes mean softmax cross-entropy with momentum SGD starting from `init`.
/// Shuffle order comes from `cfg.seed`, so equal inputs give bitwise-equal output.
pub fn train(init: &Model, dataset: &Dataset, cfg: &TrainConfig) -> Result<Model> {
    cfg.validate()?;
    check_compat(init, dataset)?;
    let mut model = init.clone();
    let mut velocity: Vec<Vec<f64>> = model.params().iter().map(|p| vec![0.0; p.len()]).collect();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = seed::rng(cfg.seed, &["train-shuffle"]);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let lr = cfg.lr_at(epoch);
        for chunk in order.chunks(cfg.batch_size) {
            let (batch, labels) = dataset.batch(chunk);
            let mut tape = Tape::new();
            let fwd = model.forward_taped(&mut tape, batch, false, true)?;
            let loss = tape.cross_entropy(fwd.logits, &labels)?;
            if !tape.value(loss).data()[0].is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            tape.backward(loss)?;
            for ((param, var), vel) in model.params_mut().iter_mut().zip(&fwd.params).zip(&mut velocity) {
                let grad = tape.grad(*var).expect("parameters require grad");
                for ((w, &g), v) in param.data_mut().iter_mut().zip(grad.data()).zip(vel.iter_mut()) {
                    *v = cfg.momentum * *v + g + cfg.weight_decay * *w;
                    *w -= lr * *v;
                }
            }
        }
        if model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::TrainingDiverged { epoch });
        }
    }
    Ok(model)
}

const EVAL_BATCH: usize = 256;

/// Fraction of samples whose argmax logit equals the label.
pub fn evaluate(model: &Model, dataset: &Dataset) -> Result<f64> {
    check_compat(model, dataset)?;
    let idx: Vec<usize> = (0..dataset.len()).collect();
    let mut correct = 0usize;
    for chunk in idx.chunks(EVAL_BATCH) {
        let (batch, labels) = dataset.batch(chunk);
        correct += count_correct(model, &batch, &labels)?;
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// Correct predictions in an (n, C_in, H, W) batch; no range check on pixels.
pub fn count_correct(model: &Model, batch: &Tensor, labels: &[usize]) -> Result<usize> {
    let logits = model.forward(batch)?;
    let pred = argmax_rows(logits.data(), model.num_classes());
    Ok(pred.iter().zip(labels).filter(|(p, y)| p == y).count())
}
