//! Mini-batch training and evaluation.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cell::CellKind;
use crate::network::{dropout_mask, Dims, NetworkWeights, Tape};
use crate::optim::{steplr, Adam};
use crate::scaler::Scaler;
use crate::window::WindowSample;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub window: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Epochs between learning-rate decays.
    pub step_size: usize,
    pub gamma: f64,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { window: 24, batch_size: 8, epochs: 15, lr: 3e-5, step_size: 5, gamma: 0.5, dropout: 0.2, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.batch_size == 0 || self.epochs == 0 || self.step_size == 0 {
            return Err(Error::Config(format!("window, batch size, epochs and step size must be positive: {self:?}")));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("learning rate and gamma must be positive: {self:?}")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub weights: NetworkWeights,
    /// Mean training loss of each epoch (train mode, dropout active).
    pub loss_history: Vec<f64>,
    /// Wall time of each epoch, seconds.
    pub epoch_seconds: Vec<f64>,
}

/// Mean of squared differences over all components; a batch is passed as
/// concatenated vectors.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::Shape(format!("mse over {} predictions and {} targets", pred.len(), target.len())));
    }
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64)
}

/// Batch MSE and its exact gradient, written into `grad` (overwritten).
/// `masks`, when given, holds one dropout mask per sample.
pub fn batch_gradient(
    weights: &NetworkWeights,
    batch: &[&WindowSample],
    masks: Option<&[Vec<f64>]>,
    grad: &mut [f64],
    tape: &mut Tape,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("empty batch"));
    }
    let out = weights.dims().output;
    check_targets(weights, batch)?;
    grad.fill(0.0);
    let norm = (out * batch.len()) as f64;
    let mut loss = 0.0;
    let mut d_out = vec![0.0; out];
    for (i, s) in batch.iter().enumerate() {
        weights.forward_recorded(&s.input, masks.map(|m| m[i].as_slice()), tape)?;
        for (k, (p, t)) in tape.output().iter().zip(&s.target).enumerate() {
            let e = p - t;
            loss += e * e;
            d_out[k] = 2.0 * e / norm;
        }
        weights.backward(tape, &d_out, Some(grad), None)?;
    }
    Ok(loss / norm)
}

/// Batch MSE in eval mode (or with the given masks).
pub fn batch_loss(weights: &NetworkWeights, batch: &[&WindowSample], masks: Option<&[Vec<f64>]>) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("empty batch"));
    }
    check_targets(weights, batch)?;
    let mut tape = Tape::default();
    let mut sum = 0.0;
    for (i, s) in batch.iter().enumerate() {
        weights.forward_recorded(&s.input, masks.map(|m| m[i].as_slice()), &mut tape)?;
        sum += tape.output().iter().zip(&s.target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
    }
    Ok(sum / (batch.len() * weights.dims().output) as f64)
}

fn check_targets(weights: &NetworkWeights, batch: &[&WindowSample]) -> Result<()> {
    if weights.dims().output != batch[0].target.len() {
        return Err(Error::Shape(format!("network emits {} outputs, targets have {}", weights.dims().output, batch[0].target.len())));
    }
    Ok(())
}

/// Train from a seeded initialization. Initialization, shuffling and dropout
/// are all drawn from `config.seed`.
pub fn train(kind: CellKind, dims: Dims, samples: &[WindowSample], scaler: Scaler, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::Empty("empty training set"));
    }
    if let Some(s) = samples.iter().find(|s| s.input.len() != config.window * dims.input) {
        return Err(Error::Shape(format!(
            "sample has {} values, window {} × {} features expected",
            s.input.len(),
            config.window,
            dims.input
        )));
    }
    let mut weights = NetworkWeights::init(kind, dims, scaler, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut adam = Adam::new(weights.param_count());
    let mut grad = vec![0.0; weights.param_count()];
    let mut tape = Tape::default();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);
    let mut epoch_seconds = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let started = Instant::now();
        let lr = steplr(config.lr, epoch, config.step_size, config.gamma);
        order.shuffle(&mut rng);
        let (mut sum, mut count) = (0.0, 0usize);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&WindowSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let masks: Vec<Vec<f64>> =
                (0..batch.len()).map(|_| dropout_mask(dims.head_hidden, config.dropout, &mut rng)).collect::<Result<_>>()?;
            let loss = batch_gradient(&weights, &batch, Some(&masks), &mut grad, &mut tape)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, batch: b, loss });
            }
            adam.step(weights.params_mut(), &grad, lr);
            sum += loss * batch.len() as f64;
            count += batch.len();
        }
        loss_history.push(sum / count as f64);
        epoch_seconds.push(started.elapsed().as_secs_f64());
    }
    Ok(TrainOutcome { weights, loss_history, epoch_seconds })
}

/// `(MSE, RMSE)` in normalized units over every target component.
pub fn evaluate(weights: &NetworkWeights, samples: &[WindowSample]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::Empty("empty test set"));
    }
    let batch: Vec<&WindowSample> = samples.iter().collect();
    let mse = batch_loss(weights, &batch, None)?;
    Ok((mse, mse.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[1.0; 4], &[0.0; 4]).unwrap(), 1.0);
        let pred = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(mse_loss(&pred, &[0.0; 8]).unwrap(), 0.5);
        assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { dropout: 1.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { lr: f64::NAN, ..Default::default() }.validate().is_err());
    }
}
