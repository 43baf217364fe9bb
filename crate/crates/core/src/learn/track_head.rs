//! Toy stand-in for the track branch head: a small network mapping target and
//! search-region appearance vectors to `(visibility, motion)`.
//!
//! [`HeadInput::SearchOnly`] drops the target half of the input, giving the
//! non-Siamese ablation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::MotionDelta;
use crate::learn::loss::{track_loss_parts, TrackSample, TrackTarget};
use crate::learn::mlp::{sigmoid, MlpModel, OutputKind};
use crate::learn::roc_auc;
use crate::learn::train::{sgd_train, TrainConfig, TrainReport};

/// One training crop: target appearance at `t`, search-region features at `t + delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CropSample {
    pub target: Vec<f32>,
    pub search: Vec<f32>,
    pub truth: TrackTarget<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadInput {
    Siamese,
    SearchOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackHead {
    pub model: MlpModel<f32>,
    pub input: HeadInput,
}

impl TrackHead {
    fn input_of(input: HeadInput, s: &CropSample) -> Vec<f32> {
        match input {
            HeadInput::Siamese => s.target.iter().chain(&s.search).copied().collect(),
            HeadInput::SearchOnly => s.search.clone(),
        }
    }

    /// Trains a head with the given hidden widths on `samples` using the track loss.
    pub fn train(
        samples: &[CropSample],
        input: HeadInput,
        hidden: &[usize],
        cfg: &TrainConfig,
    ) -> Result<(Self, TrainReport)> {
        if samples.is_empty() {
            return Err(Error::EmptySet("training"));
        }
        let inputs: Vec<Vec<f32>> = samples.iter().map(|s| Self::input_of(input, s)).collect();
        let mut dims = vec![inputs[0].len()];
        dims.extend_from_slice(hidden);
        dims.push(5);
        if let Some(bad) = inputs.iter().find(|x| x.len() != dims[0]) {
            return Err(Error::DimensionMismatch {
                expected: dims[0],
                got: bad.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
        let init = MlpModel::<f32>::init(&dims, OutputKind::Linear, &mut rng);
        let loss = |i: usize, out: &[f32]| {
            let v = sigmoid(out[0]);
            let sample = TrackSample {
                target: samples[i].truth,
                v_hat: v,
                m_hat: MotionDelta::from_slice(&out[1..5]),
            };
            let parts = track_loss_parts(&sample);
            let mut g = vec![parts.grad_v * v * (1.0 - v)];
            g.extend_from_slice(&parts.grad_m);
            (parts.total, g)
        };
        let (model, report) = sgd_train(&init, &inputs, loss, cfg)?;
        Ok((Self { model, input }, report))
    }

    pub fn predict(&self, s: &CropSample) -> Result<(f32, MotionDelta<f32>)> {
        let out = self.model.forward(&Self::input_of(self.input, s))?;
        Ok((sigmoid(out[0]), MotionDelta::from_slice(&out[1..5])))
    }

    /// ROC AUC of the visibility output against the visible / not-visible truth.
    pub fn visibility_auc(&self, samples: &[CropSample]) -> Result<f64> {
        let mut scores = Vec::with_capacity(samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        for s in samples {
            scores.push(self.predict(s)?.0 as f64);
            labels.push(matches!(s.truth, TrackTarget::Visible(_)));
        }
        Ok(roc_auc(&scores, &labels))
    }
}
