//! CLEAR-MOT counts and the mostly-tracked / mostly-lost fractions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::assignment::max_cardinality_matching;
use super::check_lengths;
use crate::error::Result;
use crate::geom::iou;
use crate::trajectory::{TrackId, TrajectorySet};

/// Per-frame matching outcome of the CLEAR-MOT protocol.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClearMotMatching {
    /// `(gt id, pred id, iou)` per frame.
    pub matches: BTreeMap<usize, Vec<(TrackId, TrackId, f64)>>,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub id_switches: usize,
    pub gt_boxes: usize,
    pub pred_boxes: usize,
}

impl ClearMotMatching {
    pub fn match_count(&self) -> usize {
        self.matches.values().map(Vec::len).sum()
    }

    pub fn mota(&self) -> f64 {
        let errors = (self.false_positives + self.false_negatives + self.id_switches) as f64;
        1.0 - errors / self.gt_boxes.max(1) as f64
    }

    /// Mean IoU of matched pairs (1 when nothing matched).
    pub fn motp(&self) -> f64 {
        let n = self.match_count();
        if n == 0 {
            return 1.0;
        }
        self.matches.values().flatten().map(|(_, _, v)| v).sum::<f64>() / n as f64
    }

    /// Matched frames per ground-truth track.
    pub fn coverage(&self) -> BTreeMap<TrackId, usize> {
        let mut out = BTreeMap::new();
        for (g, _, _) in self.matches.values().flatten() {
            *out.entry(*g).or_default() += 1;
        }
        out
    }
}

/// Frame-by-frame matching: a ground-truth object keeps its last-ever
/// partner while their IoU stays at or above the threshold (objects visited
/// in id order); the rest is matched by an assignment that maximizes the
/// number of pairs and then their total IoU. A new partner different from
/// the last-ever one is an identity switch.
pub fn clear_mot_matching(pred: &TrajectorySet, gt: &TrajectorySet, iou_threshold: f64) -> Result<ClearMotMatching> {
    check_lengths(pred, gt)?;
    let mut out = ClearMotMatching::default();
    let mut last: BTreeMap<TrackId, TrackId> = BTreeMap::new();
    for t in 0..gt.sequence_length {
        let g = gt.frame(t);
        let p = pred.frame(t);
        out.gt_boxes += g.len();
        out.pred_boxes += p.len();
        let mut g_done = vec![false; g.len()];
        let mut p_done = vec![false; p.len()];
        let mut frame_matches = Vec::new();

        for (gi, (gid, gb)) in g.iter().enumerate() {
            let Some(prev) = last.get(gid) else { continue };
            let Some(pi) = p.iter().position(|(pid, _)| pid == prev) else { continue };
            if p_done[pi] {
                continue;
            }
            let v = iou(gb, &p[pi].1);
            if v >= iou_threshold {
                g_done[gi] = true;
                p_done[pi] = true;
                frame_matches.push((*gid, *prev, v));
            }
        }

        let g_left: Vec<usize> = (0..g.len()).filter(|&i| !g_done[i]).collect();
        let p_left: Vec<usize> = (0..p.len()).filter(|&j| !p_done[j]).collect();
        let weights: Vec<Vec<Option<f64>>> = g_left
            .iter()
            .map(|&gi| {
                p_left
                    .iter()
                    .map(|&pj| {
                        let v = iou(&g[gi].1, &p[pj].1);
                        (v >= iou_threshold).then_some(v)
                    })
                    .collect()
            })
            .collect();
        for (a, b) in max_cardinality_matching(&weights) {
            let (gid, gb) = g[g_left[a]];
            let (pid, pb) = p[p_left[b]];
            g_done[g_left[a]] = true;
            p_done[p_left[b]] = true;
            if last.get(&gid).is_some_and(|prev| *prev != pid) {
                out.id_switches += 1;
            }
            frame_matches.push((gid, pid, iou(&gb, &pb)));
        }
        for (gid, pid, _) in &frame_matches {
            last.insert(*gid, *pid);
        }
        out.false_negatives += g_done.iter().filter(|d| !**d).count();
        out.false_positives += p_done.iter().filter(|d| !**d).count();
        frame_matches.sort_by_key(|(g, _, _)| *g);
        if !frame_matches.is_empty() {
            out.matches.insert(t, frame_matches);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClearMot {
    pub mota: f64,
    pub motp: f64,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub id_switches: usize,
    pub gt_boxes: usize,
}

pub fn clear_mot(pred: &TrajectorySet, gt: &TrajectorySet, iou_threshold: f64) -> Result<ClearMot> {
    let m = clear_mot_matching(pred, gt, iou_threshold)?;
    Ok(ClearMot {
        mota: m.mota(),
        motp: m.motp(),
        false_positives: m.false_positives,
        false_negatives: m.false_negatives,
        id_switches: m.id_switches,
        gt_boxes: m.gt_boxes,
    })
}

/// Fractions of ground-truth tracks matched in at least 80% (mostly tracked)
/// and at most 20% (mostly lost) of their frames, by any prediction.
pub fn mt_ml(pred: &TrajectorySet, gt: &TrajectorySet, iou_threshold: f64) -> Result<(f64, f64)> {
    let m = clear_mot_matching(pred, gt, iou_threshold)?;
    Ok(mt_ml_from(&m, gt))
}

pub(crate) fn mt_ml_from(m: &ClearMotMatching, gt: &TrajectorySet) -> (f64, f64) {
    let cov = m.coverage();
    let tracks: Vec<(TrackId, usize)> = gt
        .tracks
        .iter()
        .map(|(id, t)| (*id, t.points.range(..gt.sequence_length).count()))
        .filter(|(_, n)| *n > 0)
        .collect();
    if tracks.is_empty() {
        return (0.0, 0.0);
    }
    let (mut mt, mut ml) = (0usize, 0usize);
    for (id, len) in &tracks {
        let hit = cov.get(id).copied().unwrap_or(0);
        if 5 * hit >= 4 * len {
            mt += 1;
        }
        if 5 * hit <= *len {
            ml += 1;
        }
    }
    let n = tracks.len() as f64;
    (mt as f64 / n, ml as f64 / n)
}
