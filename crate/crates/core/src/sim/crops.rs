//! Toy appearance crops for training the track head.
//!
//! Each identity has a prototype appearance. A target crop shows one identity;
//! its search crop mixes the appearances of whoever is inside the search
//! region (the target itself only when visible) plus a location code carrying
//! the target's motion. Deciding visibility therefore needs both crops.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::world::stream_rng;
use crate::geom::MotionDelta;
use crate::learn::loss::TrackTarget;
use crate::learn::track_head::CropSample;

#[derive(Debug, Clone, PartialEq)]
pub struct CropConfig {
    pub identities: usize,
    pub appearance_dim: usize,
    pub max_distractors: usize,
    pub visible_probability: f64,
    /// Fraction of samples whose target is not a tracked person at all.
    pub negative_fraction: f64,
    pub noise: f32,
}

impl Default for CropConfig {
    fn default() -> Self {
        Self {
            identities: 16,
            appearance_dim: 16,
            max_distractors: 2,
            visible_probability: 0.5,
            negative_fraction: 0.1,
            noise: 0.1,
        }
    }
}

/// Appearance prototypes: identity `i` is the `i`-th basis direction (modulo the dimension).
fn prototype(cfg: &CropConfig, id: usize) -> Vec<f32> {
    let mut v = vec![0.0; cfg.appearance_dim];
    v[id % cfg.appearance_dim] = 1.0;
    v
}

fn noise(n: usize, sigma: f32, rng: &mut ChaCha8Rng) -> Vec<f32> {
    (0..n).map(|_| sigma * rng.sample::<f32, _>(StandardNormal)).collect()
}

/// `n` crop pairs drawn from the stream `seed`.
pub fn crop_samples(n: usize, seed: u64, cfg: &CropConfig) -> Vec<CropSample> {
    let mut rng = stream_rng(seed, &[40]);
    (0..n)
        .map(|_| {
            let id = rng.random_range(0..cfg.identities);
            let negative = rng.random::<f64>() < cfg.negative_fraction;
            let visible = !negative && rng.random::<f64>() < cfg.visible_probability;
            let mut target = prototype(cfg, id);
            for (t, e) in target.iter_mut().zip(noise(cfg.appearance_dim, cfg.noise, &mut rng)) {
                *t += e;
            }
            let mut search = noise(cfg.appearance_dim, cfg.noise, &mut rng);
            let add = |who: usize, weight: f32, search: &mut Vec<f32>| {
                for (s, p) in search.iter_mut().zip(prototype(cfg, who)) {
                    *s += weight * p;
                }
            };
            if visible {
                let w = rng.random_range(0.6..1.0);
                add(id, w, &mut search);
            }
            let distractors = rng.random_range(0..=cfg.max_distractors);
            for _ in 0..distractors {
                let mut other = rng.random_range(0..cfg.identities);
                while other == id {
                    other = rng.random_range(0..cfg.identities);
                }
                let w = rng.random_range(0.6..1.0);
                add(other, w, &mut search);
            }
            let motion = MotionDelta::new(
                rng.random_range(-0.5f32..0.5),
                rng.random_range(-0.5f32..0.5),
                0.1 * rng.sample::<f32, _>(StandardNormal),
                0.1 * rng.sample::<f32, _>(StandardNormal),
            );
            let location: Vec<f32> = if visible {
                motion
                    .to_array()
                    .iter()
                    .zip(noise(4, 0.02, &mut rng))
                    .map(|(m, e)| m + e)
                    .collect()
            } else {
                noise(4, 0.3, &mut rng)
            };
            search.extend(location);
            let truth = if negative {
                TrackTarget::Negative
            } else if visible {
                TrackTarget::Visible(motion)
            } else {
                TrackTarget::Hidden
            };
            CropSample { target, search, truth }
        })
        .collect()
}
