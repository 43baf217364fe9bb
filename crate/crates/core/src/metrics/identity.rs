//! Identity-preserving scores (IDF1, IDP, IDR) from a global track-to-track assignment.

use serde::{Deserialize, Serialize};

use super::assignment::max_weight_matching;
use super::check_lengths;
use crate::error::Result;
use crate::geom::iou;
use crate::trajectory::TrajectorySet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdScores {
    pub idf1: f64,
    pub idp: f64,
    pub idr: f64,
    pub idtp: usize,
    pub gt_boxes: usize,
    pub pred_boxes: usize,
}

/// Frames in which the two tracks overlap by at least `iou_threshold`, for every (gt, pred) pair.
pub fn overlap_counts(pred: &TrajectorySet, gt: &TrajectorySet, iou_threshold: f64) -> Vec<Vec<u64>> {
    gt.tracks
        .values()
        .map(|g| {
            pred.tracks
                .values()
                .map(|p| {
                    g.points
                        .range(..gt.sequence_length)
                        .filter(|(f, gp)| p.get(**f).is_some_and(|pb| iou(&gp.bbox, pb) >= iou_threshold))
                        .count() as u64
                })
                .collect()
        })
        .collect()
}

/// Each ground-truth track is paired with at most one prediction so that the
/// number of correctly identified boxes (IDTP) is maximal.
pub fn id_scores(pred: &TrajectorySet, gt: &TrajectorySet, iou_threshold: f64) -> Result<IdScores> {
    check_lengths(pred, gt)?;
    let counts = overlap_counts(pred, gt, iou_threshold);
    let idtp: u64 = max_weight_matching(&counts).into_iter().map(|(i, j)| counts[i][j]).sum();
    let gt_boxes: usize = gt.tracks.values().map(|t| t.points.range(..gt.sequence_length).count()).sum();
    let pred_boxes: usize = pred.tracks.values().map(|t| t.points.range(..gt.sequence_length).count()).sum();
    let ratio = |num: u64, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let idf1 = if gt_boxes + pred_boxes == 0 {
        1.0
    } else {
        2.0 * idtp as f64 / (gt_boxes + pred_boxes) as f64
    };
    Ok(IdScores {
        idf1,
        idp: ratio(idtp, pred_boxes),
        idr: ratio(idtp, gt_boxes),
        idtp: idtp as usize,
        gt_boxes,
        pred_boxes,
    })
}

pub fn idf1(pred: &TrajectorySet, gt: &TrajectorySet, iou_threshold: f64) -> Result<f64> {
    Ok(id_scores(pred, gt, iou_threshold)?.idf1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::BBox;

    #[test]
    fn split_track_scores_half() {
        let mut gt = TrajectorySet::new(10, 30.0);
        let mut pred = TrajectorySet::new(10, 30.0);
        for t in 0..10 {
            let b = BBox::new(0.0, 0.0, 10.0, 10.0);
            gt.insert(1, t, b, None);
            pred.insert(if t < 5 { 1 } else { 2 }, t, b, Some(1.0));
        }
        assert!((idf1(&pred, &gt, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(idf1(&gt, &gt, 0.5).unwrap(), 1.0);
        let empty = TrajectorySet::new(10, 30.0);
        assert_eq!(idf1(&empty, &gt, 0.5).unwrap(), 0.0);
    }
}
