//! Cue stream over a [`World`]: detections are drawn once at construction;
//! track responses are drawn on demand from a stream keyed by frame and
//! target box, so they do not depend on query order.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::world::{stream_rng, TrackCue, World};
use crate::cues::{check_frame, CueProvider, Detection, FrameCues, TrackResponse};
use crate::error::Result;
use crate::geom::{encode_motion, iou, search_region, BBox, Embedding, MotionDelta, Visibility};
use crate::trajectory::TrackId;

/// Minimum overlap with a person's previous box for a target to be identified as that person.
const IDENTITY_IOU: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct SimProvider {
    world: Arc<World>,
    detections: Vec<Vec<Detection>>,
    /// Person behind each detection (`None` for false positives).
    owners: Vec<Vec<Option<usize>>>,
    search_ratio: f64,
}

fn jitter(b: &BBox, sigma: f64, rng: &mut ChaCha8Rng) -> BBox {
    if sigma == 0.0 {
        return *b;
    }
    let mut n = || rng.sample::<f64, _>(StandardNormal) * sigma;
    let (cx, cy) = b.center();
    let cx = cx + n() * b.w;
    let cy = cy + n() * b.h;
    let w = b.w * n().exp();
    let h = b.h * n().exp();
    BBox::from_center(cx, cy, w, h)
}

fn noisy_embedding(e: &Embedding, sigma: f64, rng: &mut ChaCha8Rng) -> Embedding {
    if sigma == 0.0 {
        return e.clone();
    }
    let scale = sigma / (e.dim() as f64).sqrt();
    Embedding::new(
        e.as_slice()
            .iter()
            .map(|x| x + scale * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )
}

fn box_key(b: &BBox) -> [u64; 4] {
    [b.x.to_bits(), b.y.to_bits(), b.w.to_bits(), b.h.to_bits()]
}

impl SimProvider {
    pub fn new(world: Arc<World>, search_ratio: f64) -> Self {
        let cfg = &world.config;
        let noise = &cfg.noise;
        let exact = noise.is_none();
        let mut detections = Vec::with_capacity(cfg.frames);
        let mut owners = Vec::with_capacity(cfg.frames);
        for t in 0..cfg.frames {
            let mut dets = Vec::new();
            let mut own = Vec::new();
            for (p, b) in world.visible_at(t) {
                if world.is_dropped_out(p, t) {
                    continue;
                }
                let mut rng = stream_rng(cfg.seed, &[10, t as u64, p as u64]);
                if rng.random::<f64>() < noise.miss_rate {
                    continue;
                }
                let bbox = jitter(&b, noise.box_jitter, &mut rng);
                let score = if exact { 1.0 } else { rng.random_range(0.6..1.0) };
                let mut look = world.appearance(p, t);
                if noise.occluder_bleed > 0.0 {
                    if let Some((q, covered)) = world.occluder(p, t) {
                        let a = (noise.occluder_bleed * covered).min(1.0);
                        let other = world.appearance(q, t);
                        look = Embedding::new(
                            look.as_slice()
                                .iter()
                                .zip(other.as_slice())
                                .map(|(x, y)| (1.0 - a) * x + a * y)
                                .collect(),
                        )
                        .normalized();
                    }
                }
                let emb = noisy_embedding(&look, noise.embedding_sigma, &mut rng);
                dets.push(Detection::new(bbox, score).with_embedding(emb));
                own.push(Some(p));
            }
            if noise.false_positives > 0.0 {
                let mut rng = stream_rng(cfg.seed, &[11, t as u64]);
                let count = Poisson::new(noise.false_positives).map(|d| d.sample(&mut rng)).unwrap_or(0.0) as usize;
                for _ in 0..count {
                    let h = rng.random_range(cfg.height_range.0..=cfg.height_range.1);
                    let w = cfg.aspect * h;
                    let x = rng.random_range(0.0..=(cfg.arena.0 - w).max(0.0));
                    let y = rng.random_range(0.0..=(cfg.arena.1 - h).max(0.0));
                    let dim = cfg.embedding_dim;
                    let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                    let emb = Embedding::new(v.into_iter().map(|x| x / n).collect());
                    let score = rng.random_range(0.3..0.8);
                    dets.push(Detection::new(BBox::new(x, y, w, h), score).with_embedding(emb));
                    own.push(None);
                }
            }
            detections.push(dets);
            owners.push(own);
        }
        Self {
            world,
            detections,
            owners,
            search_ratio,
        }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn frame_detections(&self, frame: usize) -> &[Detection] {
        &self.detections[frame]
    }

    pub fn detection_owners(&self, frame: usize) -> &[Option<usize>] {
        &self.owners[frame]
    }

    fn respond(&self, frame: usize, target: &BBox) -> TrackResponse {
        let cfg = &self.world.config;
        if cfg.track_cue == TrackCue::Useless {
            return TrackResponse::lost();
        }
        let noise = &cfg.noise;
        let exact = noise.is_none();
        let key = box_key(target);
        let mut rng = stream_rng(cfg.seed, &[12, frame as u64, key[0], key[1], key[2], key[3]]);
        let low = |rng: &mut ChaCha8Rng| {
            if exact {
                0.0
            } else {
                rng.random_range(0.0..0.25)
            }
        };
        let high = |rng: &mut ChaCha8Rng| {
            if exact {
                1.0
            } else {
                rng.random_range(0.8..1.0)
            }
        };
        let previous = if frame > 0 { self.world.visible_at(frame - 1) } else { Vec::new() };
        let mut ranked: Vec<(f64, usize)> = previous
            .iter()
            .map(|(p, b)| (iou(target, b), *p))
            .filter(|(v, _)| if exact { *v > 0.0 } else { *v >= IDENTITY_IOU })
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let flip = rng.random::<f64>() < noise.visibility_flip;
        let swap = rng.random::<f64>() < noise.swap_rate;
        let Some(&(_, mut person)) = ranked.first() else {
            return TrackResponse {
                visibility: Visibility::new(low(&mut rng)),
                motion: MotionDelta::zero(),
            };
        };
        if swap && ranked.len() > 1 {
            person = ranked[1].1;
        }
        let region = search_region(target, self.search_ratio);
        let next = self
            .world
            .visible(person, frame)
            .filter(|b| {
                let (cx, cy) = b.center();
                region.contains_point(cx, cy)
            });
        match (next, flip) {
            (Some(b), false) => {
                let predicted = jitter(&b, noise.track_jitter, &mut rng);
                TrackResponse {
                    visibility: Visibility::new(high(&mut rng)),
                    motion: encode_motion(target, &predicted),
                }
            }
            (None, true) => TrackResponse {
                visibility: Visibility::new(high(&mut rng)),
                motion: MotionDelta::zero(),
            },
            _ => TrackResponse {
                visibility: Visibility::new(low(&mut rng)),
                motion: MotionDelta::zero(),
            },
        }
    }
}

impl CueProvider for SimProvider {
    fn len(&self) -> usize {
        self.world.config.frames
    }

    fn fps(&self) -> f64 {
        self.world.config.fps
    }

    fn has_embeddings(&self) -> bool {
        true
    }

    fn query(&mut self, frame: usize, targets: &BTreeMap<TrackId, BBox>) -> Result<FrameCues> {
        check_frame(frame, self.len())?;
        Ok(FrameCues {
            frame,
            detections: self.detections[frame].clone(),
            responses: targets.iter().map(|(id, b)| (*id, self.respond(frame, b))).collect(),
        })
    }
}

/// Generates a world and a cue provider over it (search ratio 2).
pub fn generate(config: super::world::WorldConfig) -> Result<(crate::trajectory::TrajectorySet, SimProvider)> {
    let world = Arc::new(World::generate(config)?);
    let gt = world.gt.clone();
    Ok((gt, SimProvider::new(world, 2.0)))
}
