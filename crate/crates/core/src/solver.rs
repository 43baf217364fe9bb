//! The online track lifecycle: continue, terminate, merge, initiate, reinstate.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cues::{CueProvider, Detection, FrameCues};
use crate::error::{Error, Result};
use crate::geom::{decode_motion, iou, BBox, Embedding, Visibility};
use crate::reinstate::{
    decide_probability, decide_threshold, extract_features, horizon_frames, match_distance,
    offline_link, Candidate, Classifier, Decision, EmbeddingBuffer, ReinstateConfig, ReinstateMode,
};
use crate::track::{Track, TrackState};
use crate::trajectory::{TrackId, TrajectorySet};

/// How existing tracks are carried from one frame to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Association {
    /// Track responses (visibility and motion) continue or terminate tracks.
    Track,
    /// No track cue: detections are linked to tracks by embedding distance alone.
    Reid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub iou_merge_threshold: f64,
    pub visibility_threshold: f64,
    pub detection_score_threshold: f64,
    pub search_ratio: f64,
    /// Two live tracks overlapping more than this are duplicates; the younger one goes.
    pub duplicate_iou_threshold: f64,
    /// Frames a new track is followed before reinstatement is decided.
    pub pending_frames: usize,
    pub association: Association,
    /// Acceptance threshold on the embedding distance in re-id association.
    pub reid_distance_threshold: f64,
    pub reinstate: ReinstateConfig,
    /// Overrides the provider's frame rate when set.
    pub fps: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            iou_merge_threshold: 0.3,
            visibility_threshold: 0.3,
            detection_score_threshold: 0.5,
            search_ratio: 2.0,
            duplicate_iou_threshold: 0.9,
            pending_frames: 5,
            association: Association::Track,
            reid_distance_threshold: 0.5,
            reinstate: ReinstateConfig::default(),
            fps: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("iou_merge_threshold", self.iou_merge_threshold),
            ("visibility_threshold", self.visibility_threshold),
            ("detection_score_threshold", self.detection_score_threshold),
            ("duplicate_iou_threshold", self.duplicate_iou_threshold),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.search_ratio >= 1.0 && self.search_ratio.is_finite()) {
            return Err(Error::Config(format!("search_ratio must be >= 1, got {}", self.search_ratio)));
        }
        let nonneg = [
            ("reid_distance_threshold", self.reid_distance_threshold),
            ("reinstate_distance_threshold", self.reinstate.distance_threshold),
            ("buffer_seconds", self.reinstate.buffer_seconds),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite non-negative number, got {v}")));
            }
        }
        if self.reinstate.k_most_similar == 0 {
            return Err(Error::Config("k_most_similar must be at least 1".into()));
        }
        if let Some(fps) = self.fps {
            if !(fps > 0.0 && fps.is_finite()) {
                return Err(Error::Config(format!("fps must be positive, got {fps}")));
            }
        }
        Ok(())
    }

    fn needs_classifier(&self) -> bool {
        matches!(self.reinstate.mode, ReinstateMode::Online | ReinstateMode::Offline)
    }
}

/// State of one sequence being tracked. Feed it consecutive frames with
/// [`Solver::step`], then call [`Solver::finish`].
#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    classifier: Option<Classifier>,
    horizon: usize,
    next_frame: usize,
    next_id: TrackId,
    tracks: BTreeMap<TrackId, Track>,
    pending: BTreeSet<TrackId>,
    buffer: EmbeddingBuffer,
    sequence_length: usize,
    fps: f64,
}

pub type SolverState = Solver;

impl Solver {
    pub fn new(config: SolverConfig, classifier: Option<Classifier>, provider_fps: f64) -> Result<Self> {
        config.validate()?;
        if config.needs_classifier() && classifier.is_none() {
            return Err(Error::Config(format!(
                "reinstate mode {:?} needs a classifier model",
                config.reinstate.mode
            )));
        }
        let fps = config.fps.unwrap_or(if provider_fps > 0.0 { provider_fps } else { 30.0 });
        Ok(Self {
            horizon: horizon_frames(config.reinstate.buffer_seconds, fps),
            buffer: EmbeddingBuffer::new(config.reinstate.buffer_seconds, fps),
            config,
            classifier,
            next_frame: 0,
            next_id: 1,
            tracks: BTreeMap::new(),
            pending: BTreeSet::new(),
            sequence_length: 0,
            fps,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Frame the next call to [`Solver::step`] expects.
    pub fn next_frame(&self) -> usize {
        self.next_frame
    }

    pub fn tracks(&self) -> impl Iterator<Item = &Track> {
        self.tracks.values()
    }

    pub fn track(&self, id: TrackId) -> Option<&Track> {
        self.tracks.get(&id)
    }

    pub fn pending(&self) -> &BTreeSet<TrackId> {
        &self.pending
    }

    pub fn buffer(&self) -> &EmbeddingBuffer {
        &self.buffer
    }

    pub fn active(&self) -> impl Iterator<Item = &Track> {
        self.tracks.values().filter(|t| t.state == TrackState::Active)
    }

    /// Boxes the track cue must be queried for at the next frame.
    pub fn targets(&self) -> BTreeMap<TrackId, BBox> {
        match self.config.association {
            Association::Track => self
                .active()
                .filter_map(|t| t.last_box().map(|b| (t.id, b)))
                .collect(),
            Association::Reid => BTreeMap::new(),
        }
    }

    fn fresh_id(&mut self) -> TrackId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn step(&mut self, cues: &FrameCues) -> Result<()> {
        let t = cues.frame;
        if t != self.next_frame {
            return Err(Error::FrameGap {
                expected: self.next_frame,
                got: t,
            });
        }
        self.next_frame = t + 1;
        self.sequence_length = self.next_frame;
        self.age_out(t);

        // proposed observations for live tracks, keyed by track
        let mut observed: BTreeMap<TrackId, (BBox, Visibility, Option<Embedding>)> = BTreeMap::new();
        let mut used = vec![false; cues.detections.len()];
        match self.config.association {
            Association::Track => self.continue_tracks(t, cues, &mut observed, &mut used)?,
            Association::Reid => self.associate_by_embedding(t, cues, &mut observed, &mut used)?,
        }
        self.suppress_duplicates(t, &mut observed);
        for (id, (bbox, v, emb)) in observed {
            if let Some(e) = &emb {
                self.buffer.push(id, t, e.clone());
            }
            self.tracks.get_mut(&id).unwrap().push(t, bbox, v, emb);
        }
        self.spawn(t, &cues.detections, &used);
        self.decide_pending(t)?;
        Ok(())
    }

    /// Terminated tracks whose last box left the embedding buffer can no longer come back.
    fn age_out(&mut self, t: usize) {
        self.buffer.evict(t);
        let oldest = t.saturating_sub(self.horizon);
        for track in self.tracks.values_mut() {
            if track.state == TrackState::Terminated && track.last_frame().is_some_and(|f| f < oldest) {
                track.state = TrackState::Finished;
            }
        }
    }

    fn terminate(&mut self, id: TrackId, t: usize) {
        let track = self.tracks.get_mut(&id).unwrap();
        track.state = TrackState::Terminated;
        track.terminated_at = Some(t);
    }

    fn continue_tracks(
        &mut self,
        t: usize,
        cues: &FrameCues,
        observed: &mut BTreeMap<TrackId, (BBox, Visibility, Option<Embedding>)>,
        used: &mut [bool],
    ) -> Result<()> {
        let active: Vec<(TrackId, BBox)> = self
            .active()
            .filter_map(|tr| tr.last_box().map(|b| (tr.id, b)))
            .collect();
        for (id, prev) in active {
            let response = cues.responses.get(&id).ok_or(Error::MissingResponse(id))?;
            if response.visibility.value() >= self.config.visibility_threshold {
                let next = decode_motion(&prev, &response.motion);
                if next.is_valid() {
                    observed.insert(id, (next, response.visibility, None));
                    continue;
                }
            }
            self.terminate(id, t);
        }

        let mut pairs: Vec<(f64, usize, TrackId)> = Vec::new();
        for (di, det) in cues.detections.iter().enumerate() {
            for (id, (b, _, _)) in observed.iter() {
                let v = iou(&det.bbox, b);
                if v > self.config.iou_merge_threshold {
                    pairs.push((v, di, *id));
                }
            }
        }
        let dets = &cues.detections;
        pairs.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then(dets[b.1].score.total_cmp(&dets[a.1].score))
                .then(a.2.cmp(&b.2))
        });
        let mut merged_tracks = BTreeSet::new();
        for (_, di, id) in pairs {
            if used[di] || merged_tracks.contains(&id) {
                continue;
            }
            used[di] = true;
            merged_tracks.insert(id);
            let entry = observed.get_mut(&id).unwrap();
            entry.0 = dets[di].bbox;
            entry.2 = dets[di].embedding.clone();
        }
        Ok(())
    }

    fn associate_by_embedding(
        &mut self,
        t: usize,
        cues: &FrameCues,
        observed: &mut BTreeMap<TrackId, (BBox, Visibility, Option<Embedding>)>,
        used: &mut [bool],
    ) -> Result<()> {
        let k = self.config.reinstate.k_most_similar;
        let active: Vec<TrackId> = self.active().map(|tr| tr.id).collect();
        let mut pairs: Vec<(f64, usize, TrackId)> = Vec::new();
        for (di, det) in cues.detections.iter().enumerate() {
            let Some(e) = &det.embedding else {
                return Err(Error::MissingEmbedding);
            };
            for id in &active {
                let gallery = self.buffer.embeddings(*id);
                if gallery.is_empty() {
                    continue;
                }
                let d = match_distance([e], gallery, k)?;
                if d < self.config.reid_distance_threshold {
                    pairs.push((d, di, *id));
                }
            }
        }
        let dets = &cues.detections;
        pairs.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(dets[b.1].score.total_cmp(&dets[a.1].score))
                .then(a.2.cmp(&b.2))
        });
        for (_, di, id) in pairs {
            if used[di] || observed.contains_key(&id) {
                continue;
            }
            used[di] = true;
            let d = &dets[di];
            observed.insert(id, (d.bbox, Visibility::new(d.score), d.embedding.clone()));
        }
        for id in active {
            if !observed.contains_key(&id) {
                self.terminate(id, t);
            }
        }
        Ok(())
    }

    /// Older tracks win; a younger duplicate is dropped if still pending,
    /// terminated otherwise.
    fn suppress_duplicates(
        &mut self,
        t: usize,
        observed: &mut BTreeMap<TrackId, (BBox, Visibility, Option<Embedding>)>,
    ) {
        let ids: Vec<TrackId> = observed.keys().copied().collect();
        let mut kept: Vec<(TrackId, BBox)> = Vec::with_capacity(ids.len());
        for id in ids {
            let b = observed[&id].0;
            if kept.iter().any(|(_, k)| iou(k, &b) > self.config.duplicate_iou_threshold) {
                observed.remove(&id);
                if self.pending.remove(&id) {
                    self.tracks.remove(&id);
                    self.buffer.remove(id);
                } else {
                    self.terminate(id, t);
                }
            } else {
                kept.push((id, b));
            }
        }
    }

    fn spawn(&mut self, t: usize, detections: &[Detection], used: &[bool]) {
        let mut occupied: Vec<BBox> = self
            .active()
            .filter(|tr| tr.last_frame() == Some(t))
            .filter_map(|tr| tr.last_box())
            .collect();
        let mut order: Vec<usize> = (0..detections.len())
            .filter(|&i| !used[i] && detections[i].score >= self.config.detection_score_threshold)
            .collect();
        order.sort_by(|&a, &b| detections[b].score.total_cmp(&detections[a].score).then(a.cmp(&b)));
        for di in order {
            let det = &detections[di];
            if occupied
                .iter()
                .any(|b| iou(b, &det.bbox) > self.config.duplicate_iou_threshold)
            {
                continue;
            }
            let id = self.fresh_id();
            let mut track = Track::new(id);
            track.push(t, det.bbox, Visibility::new(det.score), det.embedding.clone());
            if let Some(e) = &det.embedding {
                self.buffer.push(id, t, e.clone());
            }
            occupied.push(det.bbox);
            self.tracks.insert(id, track);
            self.pending.insert(id);
        }
    }

    fn decide_pending(&mut self, t: usize) -> Result<()> {
        let due: Vec<TrackId> = self
            .pending
            .iter()
            .copied()
            .filter(|id| {
                let tr = &self.tracks[id];
                tr.state != TrackState::Active || tr.len() >= self.config.pending_frames
            })
            .collect();
        for id in due {
            self.decide(id, t)?;
        }
        Ok(())
    }

    fn candidates(&self, pending: &Track) -> Vec<&Track> {
        let first = pending.first_frame().unwrap_or(0);
        self.tracks
            .values()
            .filter(|c| {
                c.state == TrackState::Terminated
                    && !self.pending.contains(&c.id)
                    && c.last_frame().is_some_and(|f| f < first)
                    && self.buffer.contains(c.id)
            })
            .collect()
    }

    fn decide(&mut self, id: TrackId, t: usize) -> Result<()> {
        self.pending.remove(&id);
        let pending = &self.tracks[&id];
        let k = self.config.reinstate.k_most_similar;
        let decision = match self.config.reinstate.mode {
            ReinstateMode::Disabled | ReinstateMode::Offline => Decision::NewTrack,
            _ if pending.embeddings.is_empty() => Decision::NewTrack,
            ReinstateMode::Threshold => {
                let mut scored = Vec::new();
                for c in self.candidates(pending) {
                    let d = match_distance(
                        pending.embeddings.iter().map(|(_, e)| e),
                        self.buffer.embeddings(c.id),
                        k,
                    )?;
                    scored.push(Candidate {
                        id: c.id,
                        terminated_at: c.terminated_at.unwrap_or(0),
                        score: d,
                    });
                }
                decide_threshold(&scored, self.config.reinstate.distance_threshold)
            }
            ReinstateMode::Online => {
                let classifier = self.classifier.as_ref().unwrap();
                let oldest = t.saturating_sub(self.horizon);
                let mut scored = Vec::new();
                for c in self.candidates(pending) {
                    let recent = if c.first_frame().is_some_and(|f| f < oldest) {
                        Cow::Owned(c.window(oldest..))
                    } else {
                        Cow::Borrowed(c)
                    };
                    if recent.embeddings.is_empty() {
                        continue;
                    }
                    let f = extract_features(pending, &recent, Some(self.config.pending_frames), k)?;
                    scored.push(Candidate {
                        id: c.id,
                        terminated_at: c.terminated_at.unwrap_or(0),
                        score: classifier.probability(&f)?,
                    });
                }
                decide_probability(&scored)
            }
        };
        if let Decision::Reinstate(target) = decision {
            let pending = self.tracks.remove(&id).unwrap();
            let state = pending.state;
            let terminated_at = pending.terminated_at;
            let old = self.tracks.get_mut(&target).unwrap();
            old.absorb(pending);
            old.state = state;
            old.terminated_at = terminated_at;
            self.buffer.merge(id, target);
        }
        Ok(())
    }

    /// Ends the sequence: pending tracks are decided with what has been seen,
    /// the offline linker runs if configured, and ids are renumbered densely
    /// in creation order.
    pub fn finish(mut self) -> Result<TrajectorySet> {
        let t = self.next_frame.saturating_sub(1);
        let pending: Vec<TrackId> = self.pending.iter().copied().collect();
        for id in pending {
            self.decide(id, t)?;
        }
        let mut tracks: Vec<Track> = std::mem::take(&mut self.tracks)
            .into_values()
            .map(|mut tr| {
                tr.state = TrackState::Finished;
                tr
            })
            .collect();
        if self.config.reinstate.mode == ReinstateMode::Offline {
            let classifier = self.classifier.as_ref().unwrap();
            tracks = offline_link(tracks, classifier, self.horizon, self.config.reinstate.k_most_similar)?;
            tracks.sort_by_key(|tr| tr.id);
        }
        let mut out = TrajectorySet::new(self.sequence_length, self.fps);
        for (i, tr) in tracks.iter().filter(|tr| !tr.is_empty()).enumerate() {
            out.tracks.insert(i as TrackId + 1, tr.to_trajectory());
        }
        Ok(out)
    }

    /// Confirmed tracks as they stand, without deciding pending ones.
    pub fn snapshot(&self) -> Vec<Track> {
        self.tracks
            .values()
            .filter(|tr| !self.pending.contains(&tr.id))
            .cloned()
            .collect()
    }
}

/// Tracks a whole sequence, one frame at a time.
pub fn run<P: CueProvider + ?Sized>(
    provider: &mut P,
    config: &SolverConfig,
    classifier: Option<Classifier>,
) -> Result<TrajectorySet> {
    if config.reinstate.mode != ReinstateMode::Disabled || config.association == Association::Reid {
        if !provider.has_embeddings() && !provider.is_empty() {
            return Err(Error::MissingEmbedding);
        }
    }
    let mut solver = Solver::new(config.clone(), classifier, provider.fps())?;
    let len = provider.len();
    for t in 0..len {
        let targets = solver.targets();
        let cues = provider.query(t, &targets)?;
        solver.step(&cues)?;
    }
    let mut out = solver.finish()?;
    out.sequence_length = len;
    Ok(out)
}

/// Tracks a sequence with every track cue but no reinstatement, returning the
/// raw tracks (used to harvest classifier training pairs).
pub fn run_tracklets<P: CueProvider + ?Sized>(provider: &mut P, config: &SolverConfig) -> Result<Vec<Track>> {
    let mut cfg = config.clone();
    cfg.reinstate.mode = ReinstateMode::Disabled;
    let mut solver = Solver::new(cfg, None, provider.fps())?;
    for t in 0..provider.len() {
        let targets = solver.targets();
        let cues = provider.query(t, &targets)?;
        solver.step(&cues)?;
    }
    let pending: Vec<TrackId> = solver.pending.iter().copied().collect();
    let last = solver.next_frame.saturating_sub(1);
    for id in pending {
        solver.decide(id, last)?;
    }
    Ok(solver.tracks.into_values().filter(|t| !t.is_empty()).collect())
}
