//! Per-frame cue bundles and the providers that produce them.
//!
//! The solver never sees a network. Everything it needs at frame `t` comes
//! from a [`CueProvider`]: the detections of that frame and, for every box
//! it is currently tracking, a visibility score and a motion delta measured
//! inside the box's search region.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{encode_motion, iou, search_region, BBox, Embedding, MotionDelta, Visibility};
use crate::io::mot::{read_embeddings, read_mot};
use crate::trajectory::{TrackId, TrajectorySet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub score: f64,
    pub embedding: Option<Embedding>,
}

impl Detection {
    pub fn new(bbox: BBox, score: f64) -> Self {
        Self {
            bbox,
            score: score.clamp(0.0, 1.0),
            embedding: None,
        }
    }

    pub fn with_embedding(mut self, embedding: Embedding) -> Self {
        self.embedding = Some(embedding);
        self
    }
}

/// Output of the track cue for one target: is it still there, and where did it move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackResponse {
    pub visibility: Visibility,
    pub motion: MotionDelta,
}

impl TrackResponse {
    pub fn lost() -> Self {
        Self {
            visibility: Visibility::new(0.0),
            motion: MotionDelta::zero(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameCues {
    pub frame: usize,
    pub detections: Vec<Detection>,
    pub responses: BTreeMap<TrackId, TrackResponse>,
}

/// Source of cues for one sequence.
pub trait CueProvider {
    /// Number of frames in the sequence.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn fps(&self) -> f64;

    /// Whether detections carry embeddings.
    fn has_embeddings(&self) -> bool;

    /// Cues for `frame`, with one response per entry of `targets` (boxes at `frame - 1`).
    fn query(&mut self, frame: usize, targets: &BTreeMap<TrackId, BBox>) -> Result<FrameCues>;
}

pub(crate) fn check_frame(frame: usize, len: usize) -> Result<()> {
    if frame >= len {
        Err(Error::OutOfBounds { frame, len })
    } else {
        Ok(())
    }
}

/// Response of a perfect track cue: the target is the ground-truth box at the
/// previous frame that best overlaps `target`; it is visible when its next box
/// has its center inside the search region.
pub fn oracle_response(
    target: &BBox,
    previous: &[(TrackId, BBox)],
    current: &[(TrackId, BBox)],
    search_ratio: f64,
) -> (Option<TrackId>, TrackResponse) {
    let Some(identity) = identify(target, previous, 0.0) else {
        return (None, TrackResponse::lost());
    };
    let region = search_region(target, search_ratio);
    match current.iter().find(|(id, _)| *id == identity) {
        Some((_, next)) => {
            let (cx, cy) = next.center();
            if region.contains_point(cx, cy) {
                (
                    Some(identity),
                    TrackResponse {
                        visibility: Visibility::new(1.0),
                        motion: encode_motion(target, next),
                    },
                )
            } else {
                (Some(identity), TrackResponse::lost())
            }
        }
        None => (Some(identity), TrackResponse::lost()),
    }
}

/// Identity of the box in `boxes` overlapping `target` most, if that overlap exceeds `min_iou`.
/// Ties go to the lower id.
pub fn identify(target: &BBox, boxes: &[(TrackId, BBox)], min_iou: f64) -> Option<TrackId> {
    let mut best: Option<(f64, TrackId)> = None;
    for (id, b) in boxes {
        let v = iou(target, b);
        if v > min_iou && best.is_none_or(|(bv, _)| v > bv) {
            best = Some((v, *id));
        }
    }
    best.map(|(_, id)| id)
}

/// Noiseless provider replaying a ground-truth world.
///
/// Every present person is detected with score 1 and carries its identity's
/// embedding; track responses come from [`oracle_response`].
#[derive(Debug, Clone)]
pub struct GroundTruthProvider {
    gt: TrajectorySet,
    embeddings: BTreeMap<TrackId, Embedding>,
    search_ratio: f64,
}

impl GroundTruthProvider {
    pub fn new(gt: TrajectorySet, embeddings: BTreeMap<TrackId, Embedding>, search_ratio: f64) -> Self {
        Self {
            gt,
            embeddings,
            search_ratio,
        }
    }
}

impl CueProvider for GroundTruthProvider {
    fn len(&self) -> usize {
        self.gt.sequence_length
    }

    fn fps(&self) -> f64 {
        self.gt.fps
    }

    fn has_embeddings(&self) -> bool {
        !self.embeddings.is_empty()
    }

    fn query(&mut self, frame: usize, targets: &BTreeMap<TrackId, BBox>) -> Result<FrameCues> {
        check_frame(frame, self.len())?;
        let current = self.gt.frame(frame);
        let previous = if frame > 0 { self.gt.frame(frame - 1) } else { Vec::new() };
        let detections = current
            .iter()
            .map(|(id, b)| {
                let d = Detection::new(*b, 1.0);
                match self.embeddings.get(id) {
                    Some(e) => d.with_embedding(e.clone()),
                    None => d,
                }
            })
            .collect();
        let responses = targets
            .iter()
            .map(|(tid, b)| (*tid, oracle_response(b, &previous, &current, self.search_ratio).1))
            .collect();
        Ok(FrameCues {
            frame,
            detections,
            responses,
        })
    }
}

/// Replays externally produced detections (MOTChallenge CSV) and, optionally,
/// per-detection embeddings.
///
/// Without a trained track cue the responses are synthesized: the target is
/// associated with the detection of highest IoU whose center lies inside its
/// search region; visibility is that IoU and motion is the delta to that
/// detection. No candidate means visibility 0.
#[derive(Debug, Clone)]
pub struct FileProvider {
    frames: Vec<Vec<Detection>>,
    fps: f64,
    search_ratio: f64,
    has_embeddings: bool,
}

impl FileProvider {
    pub fn load(det_path: &Path, emb_path: Option<&Path>, search_ratio: f64) -> Result<Self> {
        let seq = read_mot(det_path)?;
        let embeddings = match emb_path {
            Some(p) => Some(read_embeddings(p)?),
            None => None,
        };
        let mut frames: Vec<Vec<Detection>> = vec![Vec::new(); seq.num_frames()];
        if let Some(emb) = &embeddings {
            if emb.len() != seq.data_lines {
                return Err(Error::parse(
                    &emb_path.unwrap().display().to_string(),
                    emb.len().min(seq.data_lines) + 1,
                    format!(
                        "{} embedding rows for {} detection rows",
                        emb.len(),
                        seq.data_lines
                    ),
                ));
            }
        }
        for (frame, rows) in &seq.frames {
            for row in rows {
                let mut det = Detection::new(row.bbox(), row.conf);
                if let Some(emb) = &embeddings {
                    let (emb_frame, values) = &emb[row.data_index];
                    if *emb_frame != row.frame {
                        return Err(Error::parse(
                            &emb_path.unwrap().display().to_string(),
                            row.data_index + 1,
                            format!("frame {} does not match detection frame {}", emb_frame, row.frame),
                        ));
                    }
                    det = det.with_embedding(values.clone());
                }
                frames[*frame].push(det);
            }
        }
        Ok(Self {
            frames,
            fps: 30.0,
            search_ratio,
            has_embeddings: embeddings.is_some(),
        })
    }

    pub fn from_frames(frames: Vec<Vec<Detection>>, fps: f64, search_ratio: f64) -> Self {
        let has_embeddings = frames.iter().flatten().any(|d| d.embedding.is_some());
        Self {
            frames,
            fps,
            search_ratio,
            has_embeddings,
        }
    }

    pub fn with_fps(mut self, fps: f64) -> Self {
        self.fps = fps;
        self
    }

    /// Pads the sequence with empty frames up to `len` (e.g. from seqinfo).
    pub fn with_len(mut self, len: usize) -> Self {
        if self.frames.len() < len {
            self.frames.resize(len, Vec::new());
        }
        self
    }

    pub fn detection_count(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }

    pub fn frame_detections(&self, frame: usize) -> &[Detection] {
        &self.frames[frame]
    }

    /// Fails with [`Error::MissingEmbedding`] when the file had no embeddings.
    pub fn require_embeddings(&self) -> Result<()> {
        if self.has_embeddings {
            Ok(())
        } else {
            Err(Error::MissingEmbedding)
        }
    }
}

/// Best-IoU association of `target` with a detection inside its search region.
pub fn heuristic_response(target: &BBox, detections: &[Detection], search_ratio: f64) -> TrackResponse {
    let region = search_region(target, search_ratio);
    let mut best: Option<(f64, &Detection)> = None;
    for d in detections {
        let (cx, cy) = d.bbox.center();
        if !region.contains_point(cx, cy) {
            continue;
        }
        let v = iou(target, &d.bbox);
        if v > 0.0 && best.is_none_or(|(bv, _)| v > bv) {
            best = Some((v, d));
        }
    }
    match best {
        Some((v, d)) => TrackResponse {
            visibility: Visibility::new(v),
            motion: encode_motion(target, &d.bbox),
        },
        None => TrackResponse::lost(),
    }
}

impl CueProvider for FileProvider {
    fn len(&self) -> usize {
        self.frames.len()
    }

    fn fps(&self) -> f64 {
        self.fps
    }

    fn has_embeddings(&self) -> bool {
        self.has_embeddings
    }

    fn query(&mut self, frame: usize, targets: &BTreeMap<TrackId, BBox>) -> Result<FrameCues> {
        check_frame(frame, self.len())?;
        let detections = self.frames[frame].clone();
        let responses = targets
            .iter()
            .map(|(id, b)| (*id, heuristic_response(b, &detections, self.search_ratio)))
            .collect();
        Ok(FrameCues {
            frame,
            detections,
            responses,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn world() -> TrajectorySet {
        let mut gt = TrajectorySet::new(3, 30.0);
        gt.insert(1, 0, BBox::new(10., 10., 20., 40.), None);
        gt.insert(1, 1, BBox::new(14., 12., 20., 40.), None);
        // person 2 jumps far away between frames 1 and 2
        gt.insert(2, 0, BBox::new(100., 100., 10., 10.), None);
        gt.insert(2, 1, BBox::new(100., 100., 10., 10.), None);
        gt.insert(2, 2, BBox::new(300., 300., 10., 10.), None);
        gt
    }

    #[test]
    fn empty_frame_gives_empty_cues() {
        let mut p = GroundTruthProvider::new(TrajectorySet::new(2, 30.0), BTreeMap::new(), 2.0);
        let c = p.query(0, &BTreeMap::new()).unwrap();
        assert!(c.detections.is_empty());
        assert!(c.responses.is_empty());
    }

    #[test]
    fn oracle_follows_ground_truth() {
        let gt = world();
        let mut p = GroundTruthProvider::new(gt.clone(), BTreeMap::new(), 2.0);
        let targets = BTreeMap::from([(7, *gt.tracks[&1].get(0).unwrap())]);
        let c = p.query(1, &targets).unwrap();
        let r = c.responses[&7];
        assert_eq!(r.visibility.value(), 1.0);
        assert_eq!(
            r.motion,
            encode_motion(gt.tracks[&1].get(0).unwrap(), gt.tracks[&1].get(1).unwrap())
        );
        assert_eq!(c.detections.len(), 2);
    }

    #[test]
    fn oracle_reports_target_outside_search_region_as_lost() {
        let gt = world();
        let mut p = GroundTruthProvider::new(gt.clone(), BTreeMap::new(), 2.0);
        let targets = BTreeMap::from([(3, *gt.tracks[&2].get(1).unwrap())]);
        let c = p.query(2, &targets).unwrap();
        assert_eq!(c.responses[&3].visibility.value(), 0.0);
        // person 1 left the scene at frame 2
        let targets = BTreeMap::from([(4, *gt.tracks[&1].get(1).unwrap())]);
        assert_eq!(p.query(2, &targets).unwrap().responses[&4].visibility.value(), 0.0);
    }

    #[test]
    fn out_of_bounds_query() {
        let mut p = GroundTruthProvider::new(world(), BTreeMap::new(), 2.0);
        assert!(matches!(
            p.query(3, &BTreeMap::new()),
            Err(Error::OutOfBounds { frame: 3, len: 3 })
        ));
    }

    #[test]
    fn heuristic_picks_best_overlap_inside_region() {
        let target = BBox::new(0., 0., 10., 10.);
        let dets = vec![
            Detection::new(BBox::new(2., 0., 10., 10.), 0.9),
            Detection::new(BBox::new(1., 0., 10., 10.), 0.5),
            Detection::new(BBox::new(100., 0., 10., 10.), 0.9),
        ];
        let r = heuristic_response(&target, &dets, 2.0);
        assert!((r.visibility.value() - 90.0 / 110.0).abs() < 1e-12);
        assert_eq!(r.motion, encode_motion(&target, &dets[1].bbox));
        assert_eq!(heuristic_response(&target, &dets[2..], 2.0), TrackResponse::lost());
    }

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(text.as_bytes()).unwrap();
        p
    }

    #[test]
    fn file_provider_groups_by_frame() {
        let dir = tempfile::tempdir().unwrap();
        let text = "1,-1,10,20,30,40,0.9,-1,-1,-1\n1,-1,50,20,30,40,0.8,-1,-1,-1\n3,-1,12,20,30,40,0.7,-1,-1,-1\n";
        let det = write(&dir, "det.txt", text);
        let p = FileProvider::load(&det, None, 2.0).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.detection_count(), text.lines().count());
        assert_eq!(p.frame_detections(0).len(), 2);
        assert!(p.frame_detections(1).is_empty());
        assert!(matches!(p.require_embeddings(), Err(Error::MissingEmbedding)));
    }

    #[test]
    fn file_provider_empty_and_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write(&dir, "empty.txt", "");
        assert_eq!(FileProvider::load(&empty, None, 2.0).unwrap().len(), 0);
        let bad = write(&dir, "bad.txt", "1,a,b\n");
        match FileProvider::load(&bad, None, 2.0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn file_provider_attaches_embeddings_in_line_order() {
        let dir = tempfile::tempdir().unwrap();
        let det = write(&dir, "det.txt", "2,-1,10,20,30,40,0.9,-1,-1,-1\n1,-1,50,20,30,40,0.8,-1,-1,-1\n");
        let emb = write(&dir, "emb.txt", "2,1,0\n1,0,1\n");
        let p = FileProvider::load(&det, Some(&emb), 2.0).unwrap();
        assert!(p.has_embeddings());
        assert_eq!(p.frame_detections(0)[0].embedding.as_ref().unwrap().0, vec![0.0, 1.0]);
        assert_eq!(p.frame_detections(1)[0].embedding.as_ref().unwrap().0, vec![1.0, 0.0]);
        let wrong = write(&dir, "wrong.txt", "1,1,0\n1,0,1\n");
        assert!(matches!(
            FileProvider::load(&det, Some(&wrong), 2.0),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
