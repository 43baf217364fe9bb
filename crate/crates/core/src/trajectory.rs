//! Whole-sequence track collections: the common currency of the solver,
//! the simulator, the file formats and the metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::BBox;

pub type TrackId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub bbox: BBox,
    pub score: Option<f64>,
}

/// One identity's boxes, keyed by 0-based frame.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: BTreeMap<usize, TrackPoint>,
}

impl Trajectory {
    pub fn insert(&mut self, frame: usize, bbox: BBox, score: Option<f64>) {
        self.points.insert(frame, TrackPoint { bbox, score });
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, frame: usize) -> Option<&BBox> {
        self.points.get(&frame).map(|p| &p.bbox)
    }

    pub fn first_frame(&self) -> Option<usize> {
        self.points.keys().next().copied()
    }

    pub fn last_frame(&self) -> Option<usize> {
        self.points.keys().next_back().copied()
    }

    /// Mean of the per-frame scores; `None` if any frame lacks one.
    pub fn mean_score(&self) -> Option<f64> {
        if self.points.is_empty() {
            return None;
        }
        let mut sum = 0.0;
        for p in self.points.values() {
            sum += p.score?;
        }
        Some(sum / self.points.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySet {
    pub tracks: BTreeMap<TrackId, Trajectory>,
    pub sequence_length: usize,
    pub fps: f64,
}

impl TrajectorySet {
    pub fn new(sequence_length: usize, fps: f64) -> Self {
        Self {
            tracks: BTreeMap::new(),
            sequence_length,
            fps,
        }
    }

    pub fn insert(&mut self, id: TrackId, frame: usize, bbox: BBox, score: Option<f64>) {
        self.tracks.entry(id).or_default().insert(frame, bbox, score);
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn box_count(&self) -> usize {
        self.tracks.values().map(Trajectory::len).sum()
    }

    /// `(id, box)` pairs present at `frame`, ordered by id.
    pub fn frame(&self, frame: usize) -> Vec<(TrackId, BBox)> {
        self.tracks
            .iter()
            .filter_map(|(id, t)| t.get(frame).map(|b| (*id, *b)))
            .collect()
    }

    /// Keeps only frames in `0..end`; tracks left empty are dropped.
    pub fn truncated(&self, end: usize) -> Self {
        let mut out = Self::new(end.min(self.sequence_length), self.fps);
        for (id, t) in &self.tracks {
            let points: BTreeMap<_, _> = t.points.range(..end).map(|(f, p)| (*f, *p)).collect();
            if !points.is_empty() {
                out.tracks.insert(*id, Trajectory { points });
            }
        }
        out
    }

    /// Same tracks relabelled 1..=n in order of first appearance (ties by old id).
    pub fn relabelled(&self) -> Self {
        let mut order: Vec<_> = self
            .tracks
            .iter()
            .filter(|(_, t)| !t.is_empty())
            .map(|(id, t)| (t.first_frame().unwrap_or(0), *id))
            .collect();
        order.sort();
        let mut out = Self::new(self.sequence_length, self.fps);
        for (new_id, (_, old)) in order.into_iter().enumerate() {
            out.tracks.insert(new_id as TrackId + 1, self.tracks[&old].clone());
        }
        out
    }
}
