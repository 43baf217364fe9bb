//! The per-identity record kept by the solver.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::{BBox, Embedding, Visibility};
use crate::trajectory::{TrackId, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackState {
    Active,
    Terminated,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: TrackId,
    pub state: TrackState,
    pub boxes: BTreeMap<usize, BBox>,
    pub visibilities: BTreeMap<usize, Visibility>,
    pub embeddings: Vec<(usize, Embedding)>,
    pub terminated_at: Option<usize>,
    visibility_sum: f64,
}

impl Track {
    pub fn new(id: TrackId) -> Self {
        Self {
            id,
            state: TrackState::Active,
            boxes: BTreeMap::new(),
            visibilities: BTreeMap::new(),
            embeddings: Vec::new(),
            terminated_at: None,
            visibility_sum: 0.0,
        }
    }

    /// Appends an observation. Frames must be strictly increasing.
    pub fn push(&mut self, frame: usize, bbox: BBox, visibility: Visibility, embedding: Option<Embedding>) {
        assert!(
            self.last_frame().is_none_or(|f| frame > f),
            "track {} frames must increase ({frame} after {:?})",
            self.id,
            self.last_frame()
        );
        self.boxes.insert(frame, bbox);
        self.visibilities.insert(frame, visibility);
        self.visibility_sum += visibility.value();
        if let Some(e) = embedding {
            self.embeddings.push((frame, e));
        }
    }

    /// Running mean of the recorded visibility scores.
    pub fn confidence(&self) -> f64 {
        if self.visibilities.is_empty() {
            0.0
        } else {
            self.visibility_sum / self.visibilities.len() as f64
        }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn first_frame(&self) -> Option<usize> {
        self.boxes.keys().next().copied()
    }

    pub fn last_frame(&self) -> Option<usize> {
        self.boxes.keys().next_back().copied()
    }

    pub fn last_box(&self) -> Option<BBox> {
        self.boxes.values().next_back().copied()
    }

    /// Appends every observation of `later`, which must start after this track ends.
    pub fn absorb(&mut self, later: Track) {
        for (frame, bbox) in later.boxes {
            self.boxes.insert(frame, bbox);
        }
        for (frame, v) in later.visibilities {
            self.visibilities.insert(frame, v);
            self.visibility_sum += v.value();
        }
        self.embeddings.extend(later.embeddings);
    }

    /// Sub-track restricted to `frames`, preserving visibilities and embeddings.
    pub fn window(&self, frames: impl std::ops::RangeBounds<usize> + Clone) -> Track {
        let mut out = Track::new(self.id);
        out.state = self.state;
        out.terminated_at = self.terminated_at;
        for (f, b) in self.boxes.range(frames.clone()) {
            out.boxes.insert(*f, *b);
        }
        for (f, v) in self.visibilities.range(frames.clone()) {
            out.visibilities.insert(*f, *v);
            out.visibility_sum += v.value();
        }
        out.embeddings = self
            .embeddings
            .iter()
            .filter(|(f, _)| frames.contains(f))
            .cloned()
            .collect();
        out
    }

    /// The first `n` observed frames.
    pub fn head(&self, n: usize) -> Track {
        match self.boxes.keys().nth(n) {
            Some(&end) => self.window(..end),
            None => self.clone(),
        }
    }

    pub fn to_trajectory(&self) -> Trajectory {
        let mut t = Trajectory::default();
        for (f, b) in &self.boxes {
            t.insert(*f, *b, self.visibilities.get(f).map(|v| v.value()));
        }
        t
    }
}
