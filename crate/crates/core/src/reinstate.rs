//! Deciding whether a newly localized person is a terminated track coming back.
//!
//! Two deciders are provided: the embedding-distance threshold rule, and a
//! trained classifier over appearance and kinematic features. The classifier
//! runs either online (features from the first few frames of the new track)
//! or offline, as a post-pass linking completed tracks.

use std::borrow::Cow;
use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{iou, BBox, Embedding};
use crate::learn::mlp::{MlpModel, ModelTag, OutputKind};
use crate::learn::loss::{bce, bce_grad};
use crate::learn::train::{sgd_train, TrainConfig};
use crate::track::Track;
use crate::trajectory::{TrackId, TrajectorySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReinstateMode {
    Disabled,
    Threshold,
    Online,
    Offline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinstateConfig {
    pub mode: ReinstateMode,
    /// Reinstate when the k-most-similar distance is strictly below this.
    pub distance_threshold: f64,
    pub k_most_similar: usize,
    pub buffer_seconds: f64,
}

impl Default for ReinstateConfig {
    fn default() -> Self {
        Self {
            mode: ReinstateMode::Threshold,
            distance_threshold: 0.5,
            k_most_similar: 5,
            buffer_seconds: 30.0,
        }
    }
}

/// Horizon of the embedding buffer in frames.
pub fn horizon_frames(buffer_seconds: f64, fps: f64) -> usize {
    (buffer_seconds * fps).round().max(0.0) as usize
}

/// Time-bounded per-track embedding cache.
///
/// After `evict(t)`, no entry is older than `t - horizon` frames. At most one
/// embedding is kept per track and frame.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingBuffer {
    entries: BTreeMap<TrackId, VecDeque<(usize, Embedding)>>,
    horizon: usize,
}

impl EmbeddingBuffer {
    pub fn new(capacity_seconds: f64, fps: f64) -> Self {
        Self {
            entries: BTreeMap::new(),
            horizon: horizon_frames(capacity_seconds, fps),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn push(&mut self, id: TrackId, frame: usize, embedding: Embedding) {
        let q = self.entries.entry(id).or_default();
        match q.back_mut() {
            Some((f, e)) if *f == frame => *e = embedding,
            _ => q.push_back((frame, embedding)),
        }
    }

    pub fn evict(&mut self, current: usize) {
        let oldest = current.saturating_sub(self.horizon);
        self.entries.retain(|_, q| {
            while q.front().is_some_and(|(f, _)| *f < oldest) {
                q.pop_front();
            }
            !q.is_empty()
        });
    }

    pub fn contains(&self, id: TrackId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn embeddings(&self, id: TrackId) -> Vec<&Embedding> {
        self.entries
            .get(&id)
            .map(|q| q.iter().map(|(_, e)| e).collect())
            .unwrap_or_default()
    }

    pub fn frames(&self, id: TrackId) -> Vec<usize> {
        self.entries
            .get(&id)
            .map(|q| q.iter().map(|(f, _)| *f).collect())
            .unwrap_or_default()
    }

    pub fn oldest_frame(&self) -> Option<usize> {
        self.entries.values().filter_map(|q| q.front().map(|(f, _)| *f)).min()
    }

    pub fn remove(&mut self, id: TrackId) {
        self.entries.remove(&id);
    }

    /// Moves the entries of `from` to the end of `into`.
    pub fn merge(&mut self, from: TrackId, into: TrackId) {
        if let Some(q) = self.entries.remove(&from) {
            for (f, e) in q {
                self.push(into, f, e);
            }
        }
    }
}

/// Mean of the `k` smallest pairwise l2 distances between the two sets
/// (`k` capped at the number of pairs).
pub fn match_distance<'a, 'b>(
    pending: impl IntoIterator<Item = &'a Embedding>,
    terminated: impl IntoIterator<Item = &'b Embedding> + Clone,
    k: usize,
) -> Result<f64> {
    let k = k.max(1);
    // ascending buffer of the k smallest distances seen so far
    let mut smallest: Vec<f64> = Vec::with_capacity(k + 1);
    let mut any_pending = false;
    let mut any_pair = false;
    for p in pending {
        any_pending = true;
        for q in terminated.clone() {
            any_pair = true;
            let d = p.distance(q);
            if smallest.len() < k || d < *smallest.last().unwrap() {
                let pos = smallest.partition_point(|x| *x <= d);
                smallest.insert(pos, d);
                smallest.truncate(k);
            }
        }
    }
    if !any_pending || !any_pair {
        return Err(Error::NoEmbeddings);
    }
    Ok(smallest.iter().sum::<f64>() / smallest.len() as f64)
}

/// l2 distance between the mean embeddings of the two sets.
pub fn centroid_distance<'a, 'b>(
    a: impl IntoIterator<Item = &'a Embedding>,
    b: impl IntoIterator<Item = &'b Embedding>,
) -> Result<f64> {
    fn mean<'e>(it: impl IntoIterator<Item = &'e Embedding>) -> Option<Vec<f64>> {
        let mut acc: Option<Vec<f64>> = None;
        let mut n = 0usize;
        for e in it {
            let v = acc.get_or_insert_with(|| vec![0.0; e.dim()]);
            for (x, y) in v.iter_mut().zip(e.as_slice()) {
                *x += y;
            }
            n += 1;
        }
        acc.map(|v| v.into_iter().map(|x| x / n as f64).collect())
    }
    match (mean(a), mean(b)) {
        (Some(x), Some(y)) => Ok(crate::geom::l2_distance(&x, &y)),
        _ => Err(Error::NoEmbeddings),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Reinstate(TrackId),
    NewTrack,
}

/// A terminated track under consideration, scored by some decider.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: TrackId,
    pub terminated_at: usize,
    pub score: f64,
}

/// Strict threshold on the embedding distance.
pub fn passes_threshold(distance: f64, threshold: f64) -> bool {
    distance < threshold
}

/// Threshold rule over scored candidates (`score` = match distance): the
/// closest candidate wins, ties going to the most recent termination, then
/// to the lower id; it is reinstated only if strictly below `threshold`.
pub fn decide_threshold(candidates: &[Candidate], threshold: f64) -> Decision {
    let best = candidates.iter().min_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then(b.terminated_at.cmp(&a.terminated_at))
            .then(a.id.cmp(&b.id))
    });
    match best {
        Some(c) if passes_threshold(c.score, threshold) => Decision::Reinstate(c.id),
        _ => Decision::NewTrack,
    }
}

/// Classifier rule over scored candidates (`score` = same-track probability):
/// the most probable candidate wins and is reinstated if strictly above 0.5.
pub fn decide_probability(candidates: &[Candidate]) -> Decision {
    let best = candidates.iter().max_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then(a.terminated_at.cmp(&b.terminated_at))
            .then(b.id.cmp(&a.id))
    });
    match best {
        Some(c) if c.score > 0.5 => Decision::Reinstate(c.id),
        _ => Decision::NewTrack,
    }
}

/// Boxes used for velocity and size statistics on each side of the gap.
pub const KINEMATIC_BOXES: usize = 5;

pub const FEATURE_DIM: usize = 14;

/// Embeddings per side used when whole tracks are compared (evenly spaced).
pub const WHOLE_TRACK_EMBEDDINGS: usize = 32;

fn evenly_spaced(embeddings: &[(usize, Embedding)], n: usize) -> Vec<&Embedding> {
    let len = embeddings.len();
    if len <= n {
        return embeddings.iter().map(|(_, e)| e).collect();
    }
    (0..n).map(|i| &embeddings[i * (len - 1) / (n - 1)].1).collect()
}

/// Pairwise features between a new (pending) track and a terminated one.
///
/// Kinematics are measured on the boxes nearest the gap: the terminated
/// track's last [`KINEMATIC_BOXES`] boxes and the pending track's first ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReinstateFeatures {
    pub embedding_distance: f64,
    pub centroid_distance: f64,
    /// First pending center minus last terminated center, pixels.
    pub center_gap: (f64, f64),
    /// Mean pending size minus mean terminated size, pixels.
    pub size_gap: (f64, f64),
    /// Pending velocity minus terminated velocity, pixels per frame.
    pub velocity_gap: (f64, f64),
    /// Frames between the last terminated box and the first pending box.
    pub time_gap: usize,
    pub old_confidence: f64,
    pub new_confidence: f64,
    pub old_velocity: (f64, f64),
    /// Mean height of the terminated track's last boxes, used to normalize.
    pub scale: f64,
}

fn velocity(boxes: &[(usize, BBox)]) -> (f64, f64) {
    if boxes.len() < 2 {
        return (0.0, 0.0);
    }
    let (f0, b0) = boxes[0];
    let (f1, b1) = boxes[boxes.len() - 1];
    let (x0, y0) = b0.center();
    let (x1, y1) = b1.center();
    let dt = (f1 - f0) as f64;
    ((x1 - x0) / dt, (y1 - y0) / dt)
}

fn mean_size(boxes: &[(usize, BBox)]) -> (f64, f64) {
    let n = boxes.len() as f64;
    let (w, h) = boxes.iter().fold((0.0, 0.0), |(w, h), (_, b)| (w + b.w, h + b.h));
    (w / n, h / n)
}

/// Features of `pending` (restricted to its first `window` frames if given)
/// against `terminated`. Without a window both tracks are used whole, their
/// embeddings thinned to [`WHOLE_TRACK_EMBEDDINGS`] each.
pub fn extract_features(
    pending: &Track,
    terminated: &Track,
    window: Option<usize>,
    k: usize,
) -> Result<ReinstateFeatures> {
    let pending = match window {
        Some(n) if pending.len() > n => Cow::Owned(pending.head(n)),
        _ => Cow::Borrowed(pending),
    };
    let (Some(p_first), Some(t_last)) = (pending.first_frame(), terminated.last_frame()) else {
        return Err(Error::NoEmbeddings);
    };
    if p_first <= t_last {
        return Err(Error::Config(format!(
            "pending track {} starts at frame {p_first}, before track {} ends at {t_last}",
            pending.id, terminated.id
        )));
    }
    let (p_emb, t_emb) = match window {
        Some(_) => (
            pending.embeddings.iter().map(|(_, e)| e).collect::<Vec<_>>(),
            terminated.embeddings.iter().map(|(_, e)| e).collect::<Vec<_>>(),
        ),
        None => (
            evenly_spaced(&pending.embeddings, WHOLE_TRACK_EMBEDDINGS),
            evenly_spaced(&terminated.embeddings, WHOLE_TRACK_EMBEDDINGS),
        ),
    };
    let embedding_distance = match_distance(p_emb.iter().copied(), t_emb.iter().copied(), k)?;
    let centroid_distance = centroid_distance(p_emb.iter().copied(), t_emb.iter().copied())?;

    let p_boxes: Vec<(usize, BBox)> = pending.boxes.iter().map(|(f, b)| (*f, *b)).collect();
    let t_all: Vec<(usize, BBox)> = terminated.boxes.iter().map(|(f, b)| (*f, *b)).collect();
    let p_near = &p_boxes[..p_boxes.len().min(KINEMATIC_BOXES)];
    let t_near = &t_all[t_all.len().saturating_sub(KINEMATIC_BOXES)..];

    let (pcx, pcy) = p_near[0].1.center();
    let (tcx, tcy) = t_near[t_near.len() - 1].1.center();
    let (pw, ph) = mean_size(&p_boxes);
    let (tw, th) = mean_size(t_near);
    let pv = velocity(p_near);
    let tv = velocity(t_near);
    Ok(ReinstateFeatures {
        embedding_distance,
        centroid_distance,
        center_gap: (pcx - tcx, pcy - tcy),
        size_gap: (pw - tw, ph - th),
        velocity_gap: (pv.0 - tv.0, pv.1 - tv.1),
        time_gap: p_first - t_last,
        old_confidence: terminated.confidence(),
        new_confidence: pending.confidence(),
        old_velocity: tv,
        scale: th,
    })
}

impl ReinstateFeatures {
    /// Normalized network input of length [`FEATURE_DIM`].
    pub fn to_input(&self) -> Vec<f32> {
        let s = self.scale.max(1.0);
        let dt = self.time_gap as f64;
        // where the old track would be now, had it kept its velocity
        let rx = self.center_gap.0 - self.old_velocity.0 * dt;
        let ry = self.center_gap.1 - self.old_velocity.1 * dt;
        [
            self.embedding_distance,
            self.centroid_distance,
            self.center_gap.0 / s,
            self.center_gap.1 / s,
            self.size_gap.0 / s,
            self.size_gap.1 / s,
            10.0 * self.velocity_gap.0 / s,
            10.0 * self.velocity_gap.1 / s,
            dt / 30.0,
            self.old_confidence,
            self.new_confidence,
            rx / s,
            ry / s,
            (rx * rx + ry * ry).sqrt() / s,
        ]
        .iter()
        .map(|v| v.clamp(-10.0, 10.0) as f32)
        .collect()
    }
}

/// Trained same-track classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub model: MlpModel<f32>,
}

impl Classifier {
    pub fn new(model: MlpModel<f32>) -> Result<Self> {
        if model.input_dim() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                got: model.input_dim(),
            });
        }
        if model.output_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: model.output_dim(),
            });
        }
        Ok(Self { model })
    }

    pub fn tag(&self) -> ModelTag {
        self.model.tag
    }

    /// Probability that the two tracks are the same person.
    pub fn probability(&self, features: &ReinstateFeatures) -> Result<f64> {
        let out = self.model.forward(&features.to_input())?;
        Ok(match self.model.output {
            OutputKind::Sigmoid => out[0] as f64,
            OutputKind::Linear => crate::learn::mlp::sigmoid(out[0] as f64),
        })
    }
}

/// Classifier decision for a single pair: reinstate iff the probability is strictly above 0.5.
pub fn decide_classifier(features: &ReinstateFeatures, model: &MlpModel<f32>) -> Result<bool> {
    if model.input_dim() != FEATURE_DIM {
        return Err(Error::DimensionMismatch {
            expected: FEATURE_DIM,
            got: model.input_dim(),
        });
    }
    let out = model.forward(&features.to_input())?;
    let p = match model.output {
        OutputKind::Sigmoid => out[0],
        OutputKind::Linear => crate::learn::mlp::sigmoid(out[0]),
    };
    Ok(p > 0.5)
}

/// Offline post-pass: visits tracks by start frame and appends each to the
/// earlier chain the classifier finds most probable, using whole tracks on
/// both sides.
pub fn offline_link(
    mut tracks: Vec<Track>,
    classifier: &Classifier,
    horizon: usize,
    k: usize,
) -> Result<Vec<Track>> {
    tracks.retain(|t| !t.is_empty());
    tracks.sort_by_key(|t| (t.first_frame(), t.id));
    let mut chains: Vec<Track> = Vec::with_capacity(tracks.len());
    for t in tracks {
        let first = t.first_frame().unwrap();
        let mut candidates = Vec::new();
        if !t.embeddings.is_empty() {
            for (ci, c) in chains.iter().enumerate() {
                let last = c.last_frame().unwrap();
                if last >= first || first - last > horizon || c.embeddings.is_empty() {
                    continue;
                }
                let f = extract_features(&t, c, None, k)?;
                candidates.push(Candidate {
                    id: ci as TrackId,
                    terminated_at: last,
                    score: classifier.probability(&f)?,
                });
            }
        }
        match decide_probability(&candidates) {
            Decision::Reinstate(ci) => chains[ci as usize].absorb(t),
            Decision::NewTrack => chains.push(t),
        }
    }
    Ok(chains)
}

/// A labelled candidate pair harvested from a tracking run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairExample {
    pub online: ReinstateFeatures,
    pub offline: ReinstateFeatures,
    pub same: bool,
    /// Frames of the later track; online and offline features coincide when this is small.
    pub pending_len: usize,
}

/// Ground-truth identity covering most frames of `track` at IoU >= 0.5.
pub fn majority_identity(track: &Track, gt: &TrajectorySet) -> Option<TrackId> {
    let mut votes: BTreeMap<TrackId, usize> = BTreeMap::new();
    for (f, b) in &track.boxes {
        let best = gt
            .frame(*f)
            .into_iter()
            .map(|(id, g)| (iou(b, &g), id))
            .filter(|(v, _)| *v >= 0.5)
            .max_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((_, id)) = best {
            *votes.entry(id).or_default() += 1;
        }
    }
    let (id, n) = votes.into_iter().max_by_key(|(id, n)| (*n, std::cmp::Reverse(*id)))?;
    (2 * n >= track.len()).then_some(id)
}

/// Every (earlier, later) pair a decider could face, labelled by ground truth.
pub fn harvest_pairs(
    tracks: &[Track],
    gt: &TrajectorySet,
    horizon: usize,
    pending_frames: usize,
    k: usize,
) -> Result<Vec<PairExample>> {
    let ids: Vec<Option<TrackId>> = tracks.iter().map(|t| majority_identity(t, gt)).collect();
    let mut out = Vec::new();
    for (bi, b) in tracks.iter().enumerate() {
        let Some(first) = b.first_frame() else { continue };
        if b.embeddings.is_empty() {
            continue;
        }
        for (ai, a) in tracks.iter().enumerate() {
            let Some(last) = a.last_frame() else { continue };
            if ai == bi || last >= first || first - last > horizon || a.embeddings.is_empty() {
                continue;
            }
            let online = match extract_features(b, a, Some(pending_frames), k) {
                Ok(f) => f,
                Err(Error::NoEmbeddings) => continue,
                Err(e) => return Err(e),
            };
            let offline = extract_features(b, a, None, k)?;
            out.push(PairExample {
                online,
                offline,
                same: ids[ai].is_some() && ids[ai] == ids[bi],
                pending_len: b.len(),
            });
        }
    }
    Ok(out)
}

/// Trains the same-track classifier: two hidden layers of 256 ReLU units and a
/// sigmoid output, binary cross-entropy.
///
/// `negative_weight` scales the loss of different-track pairs; pass the
/// subsampling factor when negatives were thinned so that probabilities keep
/// the prior the solver will face.
pub fn train_classifier(
    examples: &[(ReinstateFeatures, bool)],
    negative_weight: f64,
    cfg: &TrainConfig,
    tag: ModelTag,
) -> Result<(Classifier, crate::learn::TrainReport)> {
    use rand::SeedableRng;
    let inputs: Vec<Vec<f32>> = examples.iter().map(|(f, _)| f.to_input()).collect();
    let labels: Vec<f32> = examples.iter().map(|(_, y)| if *y { 1.0 } else { 0.0 }).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = MlpModel::<f32>::init(&[FEATURE_DIM, 256, 256, 1], OutputKind::Sigmoid, &mut rng).with_tag(tag);
    let (model, report) = sgd_train(
        &init,
        &inputs,
        |i, out| {
            let w = if labels[i] > 0.5 { 1.0 } else { negative_weight as f32 };
            (w * bce(out[0], labels[i]), vec![w * bce_grad(out[0], labels[i])])
        },
        cfg,
    )?;
    Ok((Classifier::new(model)?, report))
}
