//! Synthetic worlds: people walking in a rectangle, with scripted and random
//! occlusions, and per-identity appearance vectors.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{BBox, Embedding};
use crate::trajectory::{TrackId, TrajectorySet};

/// Deterministic RNG for a sub-stream of `seed` identified by `parts`.
pub fn stream_rng(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let mut h = mix(seed);
    for p in parts {
        h = mix(h ^ mix(*p));
    }
    ChaCha8Rng::seed_from_u64(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    /// Walking speed range in pixels per frame for a 150 px tall person.
    pub speed: (f64, f64),
    /// Standard deviation of the per-frame heading change, radians.
    pub turn_sd: f64,
}

/// Degradations applied to the cue stream. [`NoiseConfig::none`] gives exact cues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Detection box jitter, as a fraction of the box size.
    pub box_jitter: f64,
    /// Jitter of the box predicted by the track cue.
    pub track_jitter: f64,
    pub miss_rate: f64,
    /// Expected false detections per frame.
    pub false_positives: f64,
    /// Per-detection embedding perturbation (expected norm).
    pub embedding_sigma: f64,
    /// Appearance drift in radians per second on the unit sphere.
    pub appearance_drift: f64,
    /// Probability that the track cue reports the wrong visibility.
    pub visibility_flip: f64,
    /// Probability that the track cue follows an overlapping neighbour instead.
    pub swap_rate: f64,
    /// How much of a nearer occluder's appearance leaks into a detection's
    /// embedding, per unit of covered box area.
    pub occluder_bleed: f64,
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self {
            box_jitter: 0.0,
            track_jitter: 0.0,
            miss_rate: 0.0,
            false_positives: 0.0,
            embedding_sigma: 0.0,
            appearance_drift: 0.0,
            visibility_flip: 0.0,
            swap_rate: 0.0,
            occluder_bleed: 0.0,
        }
    }

    pub fn is_none(&self) -> bool {
        *self == Self::none()
    }
}

/// Frames `start..end` of one person.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub person: usize,
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn contains(&self, person: usize, frame: usize) -> bool {
        self.person == person && (self.start..self.end).contains(&frame)
    }
}

/// A person with a fixed straight path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersonSpec {
    /// Box center at the entry frame.
    pub center: (f64, f64),
    /// Pixels per frame.
    pub velocity: (f64, f64),
    pub height: f64,
    pub enter: usize,
    pub exit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Population {
    /// Random starting points and headings; with `staggered`, people enter
    /// during the first third and leave during the last third.
    Random { people: usize, staggered: bool },
    Scripted(Vec<PersonSpec>),
}

/// What the track cue reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackCue {
    Informative,
    /// Always visibility 0: every track ends after one frame.
    Useless,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub seed: u64,
    pub frames: usize,
    pub fps: f64,
    pub arena: (f64, f64),
    pub population: Population,
    pub height_range: (f64, f64),
    /// Box width over height.
    pub aspect: f64,
    pub motion: MotionParams,
    /// Scripted intervals during which a person is hidden.
    pub occlusions: Vec<Interval>,
    /// Random occlusions started per person per second.
    pub occlusion_rate: f64,
    pub occlusion_frames: (usize, usize),
    /// Hide a person whose box is covered beyond this fraction by a taller (nearer) one.
    pub occlusion_coverage: Option<f64>,
    /// Intervals during which a visible person is never detected.
    pub detector_dropouts: Vec<Interval>,
    pub embedding_dim: usize,
    /// Identities are drawn around this many appearance clusters (0: independent).
    pub appearance_clusters: usize,
    pub cluster_spread: f64,
    /// Appearances rotate among people this many times over the sequence (0 or 1: never).
    pub shuffle_segments: usize,
    pub track_cue: TrackCue,
    pub noise: NoiseConfig,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            frames: 300,
            fps: 30.0,
            arena: (1920.0, 1080.0),
            population: Population::Random {
                people: 5,
                staggered: false,
            },
            height_range: (100.0, 200.0),
            aspect: 0.4,
            motion: MotionParams {
                speed: (1.0, 3.0),
                turn_sd: 0.03,
            },
            occlusions: Vec::new(),
            occlusion_rate: 0.0,
            occlusion_frames: (15, 45),
            occlusion_coverage: Some(0.75),
            detector_dropouts: Vec::new(),
            embedding_dim: crate::geom::DEFAULT_EMBEDDING_DIM,
            appearance_clusters: 0,
            cluster_spread: 0.5,
            shuffle_segments: 0,
            track_cue: TrackCue::Informative,
            noise: NoiseConfig::none(),
        }
    }
}

impl WorldConfig {
    pub fn people(&self) -> usize {
        match &self.population {
            Population::Random { people, .. } => *people,
            Population::Scripted(p) => p.len(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn without_noise(mut self) -> Self {
        self.noise = NoiseConfig::none();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.frames == 0 {
            return bad("frames must be at least 1".into());
        }
        if !(self.fps > 0.0) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        let n = &self.noise;
        let rates = [
            ("miss_rate", n.miss_rate),
            ("visibility_flip", n.visibility_flip),
            ("swap_rate", n.swap_rate),
        ];
        for (name, v) in rates {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        let nonneg = [
            ("box_jitter", n.box_jitter),
            ("track_jitter", n.track_jitter),
            ("false_positives", n.false_positives),
            ("embedding_sigma", n.embedding_sigma),
            ("appearance_drift", n.appearance_drift),
            ("occlusion_rate", self.occlusion_rate),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(self.height_range.0 > 0.0 && self.height_range.0 <= self.height_range.1) {
            return bad(format!("invalid height range {:?}", self.height_range));
        }
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be at least 1".into());
        }
        if self.occlusion_frames.0 > self.occlusion_frames.1 {
            return bad(format!("invalid occlusion length range {:?}", self.occlusion_frames));
        }
        Ok(())
    }
}

/// A generated world: ground truth plus the appearance model.
#[derive(Debug, Clone)]
pub struct World {
    pub config: WorldConfig,
    /// Visible boxes; person `p` has track id `p + 1`.
    pub gt: TrajectorySet,
    prototypes: Vec<Embedding>,
    drift_axes: Vec<Embedding>,
}

fn unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

pub fn person_id(person: usize) -> TrackId {
    person as TrackId + 1
}

impl World {
    pub fn generate(config: WorldConfig) -> Result<Self> {
        config.validate()?;
        let n = config.people();
        let paths = Self::paths(&config);
        let hidden = Self::hidden(&config, &paths);
        let mut gt = TrajectorySet::new(config.frames, config.fps);
        for (p, path) in paths.iter().enumerate() {
            for (t, b) in path {
                if !hidden[p].contains(t) {
                    gt.insert(person_id(p), *t, *b, None);
                }
            }
        }

        let mut rng = stream_rng(config.seed, &[2]);
        let dim = config.embedding_dim;
        let centers: Vec<Vec<f64>> = (0..config.appearance_clusters).map(|_| unit_vector(dim, &mut rng)).collect();
        let mut prototypes = Vec::with_capacity(n);
        let mut drift_axes = Vec::with_capacity(n);
        for p in 0..n {
            let proto = if centers.is_empty() {
                unit_vector(dim, &mut rng)
            } else {
                let z = unit_vector(dim, &mut rng);
                let c = &centers[p % centers.len()];
                normalize(c.iter().zip(&z).map(|(c, z)| c + config.cluster_spread * z).collect())
            };
            // a direction orthogonal to the prototype to drift along
            let r = unit_vector(dim, &mut rng);
            let dot: f64 = r.iter().zip(&proto).map(|(a, b)| a * b).sum();
            let axis = normalize(r.iter().zip(&proto).map(|(r, p)| r - dot * p).collect());
            prototypes.push(Embedding::new(proto));
            drift_axes.push(Embedding::new(axis));
        }
        Ok(Self {
            config,
            gt,
            prototypes,
            drift_axes,
        })
    }

    /// Box of every person at every frame they are in the scene, visible or not.
    fn paths(config: &WorldConfig) -> Vec<BTreeMap<usize, BBox>> {
        let (aw, ah) = config.arena;
        match &config.population {
            Population::Scripted(people) => people
                .iter()
                .map(|s| {
                    let w = config.aspect * s.height;
                    (s.enter..s.exit.min(config.frames))
                        .map(|t| {
                            let k = (t - s.enter) as f64;
                            let (cx, cy) = (s.center.0 + k * s.velocity.0, s.center.1 + k * s.velocity.1);
                            (t, BBox::from_center(cx, cy, w, s.height))
                        })
                        .collect()
                })
                .collect(),
            Population::Random { people, staggered } => (0..*people)
                .map(|p| {
                    let mut rng = stream_rng(config.seed, &[1, p as u64]);
                    let h = rng.random_range(config.height_range.0..=config.height_range.1);
                    let w = config.aspect * h;
                    let (enter, exit) = if *staggered && config.frames >= 3 {
                        let third = config.frames / 3;
                        (rng.random_range(0..=third), rng.random_range(config.frames - third..=config.frames))
                    } else {
                        (0, config.frames)
                    };
                    let mut cx = rng.random_range(w / 2.0..=aw - w / 2.0);
                    let mut cy = rng.random_range(h / 2.0..=ah - h / 2.0);
                    let speed = rng.random_range(config.motion.speed.0..=config.motion.speed.1) * h / 150.0;
                    let mut heading = rng.random_range(0.0..TAU);
                    let mut path = BTreeMap::new();
                    for t in enter..exit {
                        path.insert(t, BBox::from_center(cx, cy, w, h));
                        let turn: f64 = rng.sample(StandardNormal);
                        heading += config.motion.turn_sd * turn;
                        let (mut vx, mut vy) = (speed * heading.cos(), speed * heading.sin());
                        if cx + vx < w / 2.0 || cx + vx > aw - w / 2.0 {
                            vx = -vx;
                        }
                        if cy + vy < h / 2.0 || cy + vy > ah - h / 2.0 {
                            vy = -vy;
                        }
                        heading = vy.atan2(vx);
                        cx += vx;
                        cy += vy;
                    }
                    path
                })
                .collect(),
        }
    }

    fn hidden(config: &WorldConfig, paths: &[BTreeMap<usize, BBox>]) -> Vec<std::collections::BTreeSet<usize>> {
        let mut hidden: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); paths.len()];
        for occ in &config.occlusions {
            if occ.person < paths.len() {
                hidden[occ.person].extend(occ.start..occ.end);
            }
        }
        if config.occlusion_rate > 0.0 {
            let p_start = (config.occlusion_rate / config.fps).min(1.0);
            for (p, path) in paths.iter().enumerate() {
                let mut rng = stream_rng(config.seed, &[3, p as u64]);
                let mut t_free = 0;
                for t in path.keys() {
                    if *t < t_free {
                        continue;
                    }
                    if rng.random::<f64>() < p_start {
                        let len = rng.random_range(config.occlusion_frames.0..=config.occlusion_frames.1);
                        hidden[p].extend(*t..*t + len);
                        t_free = t + len + 1;
                    }
                }
            }
        }
        if let Some(limit) = config.occlusion_coverage {
            for t in 0..config.frames {
                let present: Vec<(usize, BBox)> = paths
                    .iter()
                    .enumerate()
                    .filter_map(|(p, path)| path.get(&t).map(|b| (p, *b)))
                    .collect();
                for (p, b) in &present {
                    let covered = present.iter().any(|(q, c)| {
                        q != p
                            && (c.h > b.h || (c.h == b.h && q < p))
                            && b.intersection_area(c) / b.area() > limit
                    });
                    if covered {
                        hidden[*p].insert(t);
                    }
                }
            }
        }
        hidden
    }

    pub fn people(&self) -> usize {
        self.prototypes.len()
    }

    /// Visible box of `person` at `frame`.
    pub fn visible(&self, person: usize, frame: usize) -> Option<BBox> {
        self.gt.tracks.get(&person_id(person)).and_then(|t| t.get(frame).copied())
    }

    pub fn visible_at(&self, frame: usize) -> Vec<(usize, BBox)> {
        self.gt
            .frame(frame)
            .into_iter()
            .map(|(id, b)| (id as usize - 1, b))
            .collect()
    }

    /// Whose appearance `person` shows at `frame` (differs only in shuffled worlds).
    pub fn identity_shown(&self, person: usize, frame: usize) -> usize {
        let n = self.people();
        let s = self.config.shuffle_segments;
        if s <= 1 || n == 0 {
            return person;
        }
        let segment = frame * s / self.config.frames.max(1);
        (person + segment) % n
    }

    /// Noise-free appearance of `person` at `frame`.
    pub fn appearance(&self, person: usize, frame: usize) -> Embedding {
        let q = self.identity_shown(person, frame);
        let drift = self.config.noise.appearance_drift;
        if drift == 0.0 {
            return self.prototypes[q].clone();
        }
        let phi = drift * frame as f64 / self.config.fps;
        let (s, c) = phi.sin_cos();
        Embedding::new(
            self.prototypes[q]
                .as_slice()
                .iter()
                .zip(self.drift_axes[q].as_slice())
                .map(|(p, a)| c * p + s * a)
                .collect(),
        )
    }

    pub fn prototype(&self, person: usize) -> &Embedding {
        &self.prototypes[person]
    }

    /// The nearest (tallest) visible person covering `person` at `frame`, with
    /// the covered fraction of `person`'s box.
    pub fn occluder(&self, person: usize, frame: usize) -> Option<(usize, f64)> {
        let b = self.visible(person, frame)?;
        self.visible_at(frame)
            .into_iter()
            .filter(|(q, c)| *q != person && (c.h > b.h || (c.h == b.h && *q < person)))
            .map(|(q, c)| (q, b.intersection_area(&c) / b.area()))
            .filter(|(_, f)| *f > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
    }

    pub fn is_dropped_out(&self, person: usize, frame: usize) -> bool {
        self.config.detector_dropouts.iter().any(|d| d.contains(person, frame))
    }
}
