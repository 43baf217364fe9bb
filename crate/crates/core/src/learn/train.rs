//! Minibatch SGD with momentum and a step learning-rate schedule.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::mlp::MlpModel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub steps: usize,
    /// Steps at which the learning rate is divided by 10.
    pub milestones: Vec<usize>,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            momentum: 0.9,
            batch_size: 32,
            steps: 1000,
            milestones: Vec::new(),
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Two tenfold drops at 2/3 and 8/9 of the run.
    pub fn with_two_drops(mut self) -> Self {
        self.milestones = vec![self.steps * 2 / 3, self.steps * 8 / 9];
        self
    }

    pub fn lr_at(&self, step: usize) -> f64 {
        let drops = self.milestones.iter().filter(|m| step >= **m).count();
        self.lr * 0.1f64.powi(drops as i32)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean minibatch loss at each step, measured before the update.
    pub losses: Vec<f64>,
}

/// Trains a copy of `model`.
///
/// `loss(i, output)` returns the loss of sample `i` given the network output
/// and its gradient with respect to that output.
pub fn sgd_train<T, F>(
    model: &MlpModel<T>,
    inputs: &[Vec<T>],
    loss: F,
    cfg: &TrainConfig,
) -> Result<(MlpModel<T>, TrainReport)>
where
    T: Scalar,
    F: Fn(usize, &[T]) -> (T, Vec<T>),
{
    if inputs.is_empty() {
        return Err(Error::EmptySet("training"));
    }
    let mut model = model.clone();
    let mut velocity = vec![T::zero(); model.weights.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = TrainReport::default();
    let n = inputs.len();
    let batch = cfg.batch_size.clamp(1, n);
    let momentum = T::lit(cfg.momentum);
    let decay = T::lit(cfg.weight_decay);
    for step in 0..cfg.steps {
        let indices: Vec<usize> = if batch == n {
            (0..n).collect()
        } else {
            sample(&mut rng, n, batch).into_vec()
        };
        let mut grad = vec![T::zero(); model.weights.len()];
        let mut total = T::zero();
        for &i in &indices {
            let cache = model.forward_cached(&inputs[i])?;
            let (l, g_out) = loss(i, cache.output());
            total = total + l;
            model.backward_into(&cache, &g_out, &mut grad);
        }
        let mean_loss = total / T::lit(indices.len() as f64);
        if !mean_loss.is_finite() {
            return Err(Error::Diverged(step));
        }
        report.losses.push(mean_loss.to_f64_lossy());
        let lr = T::lit(cfg.lr_at(step));
        let scale = T::one() / T::lit(indices.len() as f64);
        for ((w, v), g) in model.weights.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
            *v = momentum * *v - lr * (*g * scale + decay * *w);
            *w = *w + *v;
        }
        if !model.is_finite() {
            return Err(Error::Diverged(step));
        }
    }
    Ok((model, report))
}
