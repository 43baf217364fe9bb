//! Track-level average precision: whole predicted tracks are ranked by score
//! and matched to ground-truth tracks by their mean per-frame IoU.

use std::collections::BTreeSet;

use super::check_lengths;
use crate::error::{Error, Result};
use crate::geom::iou;
use crate::trajectory::{TrackId, Trajectory, TrajectorySet};

/// Mean per-frame IoU over the union of the two frame supports; frames where
/// one side is missing count as 0.
pub fn track_iou(pred: &Trajectory, gt: &Trajectory) -> f64 {
    let frames: BTreeSet<usize> = pred.points.keys().chain(gt.points.keys()).copied().collect();
    if frames.is_empty() {
        return 0.0;
    }
    let total: f64 = frames
        .iter()
        .map(|f| match (pred.get(*f), gt.get(*f)) {
            (Some(a), Some(b)) => iou(a, b),
            _ => 0.0,
        })
        .sum();
    total / frames.len() as f64
}

/// Predicted tracks ordered by descending score (ties by id).
pub fn ranked_tracks(pred: &TrajectorySet) -> Result<Vec<(TrackId, f64)>> {
    let mut ranked = Vec::with_capacity(pred.len());
    for (id, t) in &pred.tracks {
        if t.is_empty() {
            continue;
        }
        ranked.push((*id, t.mean_score().ok_or(Error::MissingScores(*id))?));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// 101-point interpolated average precision of a ranked list of hit flags.
pub fn interpolated_ap(hits: &[bool], positives: usize) -> f64 {
    if positives == 0 {
        return 0.0;
    }
    let mut tp = 0usize;
    let mut curve: Vec<(f64, f64)> = Vec::with_capacity(hits.len());
    for (rank, hit) in hits.iter().enumerate() {
        if *hit {
            tp += 1;
        }
        curve.push((tp as f64 / positives as f64, tp as f64 / (rank + 1) as f64));
    }
    // precision envelope, non-increasing in recall
    for i in (0..curve.len().saturating_sub(1)).rev() {
        curve[i].1 = curve[i].1.max(curve[i + 1].1);
    }
    let mut sum = 0.0;
    let mut idx = 0;
    for k in 0..=100 {
        let r = k as f64 / 100.0;
        while idx < curve.len() && curve[idx].0 < r {
            idx += 1;
        }
        if idx < curve.len() {
            sum += curve[idx].1;
        }
    }
    sum / 101.0
}

/// Greedy matching in score order: each prediction takes the free
/// ground-truth track with the highest track IoU at or above `threshold`
/// (ties by lower id). Returns one hit flag per ranked prediction.
pub fn greedy_hits(pred: &TrajectorySet, gt: &TrajectorySet, ranked: &[(TrackId, f64)], threshold: f64) -> Vec<bool> {
    let gt_tracks: Vec<(TrackId, &Trajectory)> =
        gt.tracks.iter().filter(|(_, t)| !t.is_empty()).map(|(id, t)| (*id, t)).collect();
    let mut taken = vec![false; gt_tracks.len()];
    ranked
        .iter()
        .map(|(pid, _)| {
            let p = &pred.tracks[pid];
            let mut best: Option<(f64, usize)> = None;
            for (gi, (_, g)) in gt_tracks.iter().enumerate() {
                if taken[gi] {
                    continue;
                }
                let v = track_iou(p, g);
                if v >= threshold && best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, gi));
                }
            }
            match best {
                Some((_, gi)) => {
                    taken[gi] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

/// Average precision at each IoU threshold. With no ground-truth tracks every AP is 0.
pub fn track_ap_at(pred: &TrajectorySet, gt: &TrajectorySet, thresholds: &[f64]) -> Result<Vec<f64>> {
    check_lengths(pred, gt)?;
    let ranked = ranked_tracks(pred)?;
    let positives = gt.tracks.values().filter(|t| !t.is_empty()).count();
    Ok(thresholds
        .iter()
        .map(|thr| interpolated_ap(&greedy_hits(pred, gt, &ranked, *thr), positives))
        .collect())
}

/// `(AP50, AP75)`.
pub fn track_ap(pred: &TrajectorySet, gt: &TrajectorySet) -> Result<(f64, f64)> {
    let ap = track_ap_at(pred, gt, &[0.5, 0.75])?;
    Ok((ap[0], ap[1]))
}
