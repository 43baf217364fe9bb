//! Evaluation against ground truth: CLEAR-MOT, identity F1, mostly
//! tracked/lost, and track-level AP.

pub mod assignment;
pub mod clear;
pub mod identity;
pub mod track_ap;

use serde::{Deserialize, Serialize};

pub use clear::{clear_mot, clear_mot_matching, mt_ml, ClearMot, ClearMotMatching};
pub use identity::{id_scores, idf1, IdScores};
pub use track_ap::{track_ap, track_ap_at, track_iou};

use crate::error::{Error, Result};
use crate::trajectory::TrajectorySet;

/// Box-level IoU needed for a prediction to count as a match.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

pub(crate) fn check_lengths(pred: &TrajectorySet, gt: &TrajectorySet) -> Result<()> {
    if pred.sequence_length != gt.sequence_length {
        Err(Error::SequenceMismatch {
            pred: pred.sequence_length,
            gt: gt.sequence_length,
        })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotReport {
    pub mota: f64,
    pub motp: f64,
    pub idf1: f64,
    pub idp: f64,
    pub idr: f64,
    /// Fraction of ground-truth tracks covered in at least 80% of their frames.
    pub mt: f64,
    /// Fraction covered in at most 20%.
    pub ml: f64,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub id_switches: usize,
    pub gt_boxes: usize,
    pub pred_boxes: usize,
    pub gt_tracks: usize,
    pub pred_tracks: usize,
    /// Present when every predicted track carries scores.
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
}

impl MotReport {
    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("nan".to_string(), |v| format!("{v:.6}"));
        format!(
            "mota={:.6}\nmotp={:.6}\nidf1={:.6}\nidp={:.6}\nidr={:.6}\nmt={:.6}\nml={:.6}\nfp={}\nfn={}\nidsw={}\ngt_boxes={}\npred_boxes={}\ngt_tracks={}\npred_tracks={}\nap50={}\nap75={}\n",
            self.mota,
            self.motp,
            self.idf1,
            self.idp,
            self.idr,
            self.mt,
            self.ml,
            self.false_positives,
            self.false_negatives,
            self.id_switches,
            self.gt_boxes,
            self.pred_boxes,
            self.gt_tracks,
            self.pred_tracks,
            opt(self.ap50),
            opt(self.ap75),
        )
    }
}

impl std::fmt::Display for MotReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "MOTA  {:>7.2}%   MOTP {:>6.2}%", 100.0 * self.mota, 100.0 * self.motp)?;
        writeln!(
            f,
            "IDF1  {:>7.2}%   IDP  {:>6.2}%   IDR {:>6.2}%",
            100.0 * self.idf1,
            100.0 * self.idp,
            100.0 * self.idr
        )?;
        writeln!(f, "MT    {:>7.2}%   ML   {:>6.2}%", 100.0 * self.mt, 100.0 * self.ml)?;
        writeln!(
            f,
            "FP {}  FN {}  IDsw {}  (gt boxes {}, tracks {}; predicted boxes {}, tracks {})",
            self.false_positives,
            self.false_negatives,
            self.id_switches,
            self.gt_boxes,
            self.gt_tracks,
            self.pred_boxes,
            self.pred_tracks
        )?;
        match (self.ap50, self.ap75) {
            (Some(a), Some(b)) => write!(f, "AP50  {:>7.2}%   AP75 {:>6.2}%", 100.0 * a, 100.0 * b),
            _ => write!(f, "AP50/AP75 unavailable (tracks without scores)"),
        }
    }
}

/// Every metric at the given box IoU threshold. TrackAP is skipped (left
/// `None`) when some predicted track has no score.
pub fn evaluate(pred: &TrajectorySet, gt: &TrajectorySet, iou_threshold: f64) -> Result<MotReport> {
    let m = clear_mot_matching(pred, gt, iou_threshold)?;
    let ids = id_scores(pred, gt, iou_threshold)?;
    let (mt, ml) = clear::mt_ml_from(&m, gt);
    let (ap50, ap75) = match track_ap(pred, gt) {
        Ok((a, b)) => (Some(a), Some(b)),
        Err(Error::MissingScores(_)) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(MotReport {
        mota: m.mota(),
        motp: m.motp(),
        idf1: ids.idf1,
        idp: ids.idp,
        idr: ids.idr,
        mt,
        ml,
        false_positives: m.false_positives,
        false_negatives: m.false_negatives,
        id_switches: m.id_switches,
        gt_boxes: m.gt_boxes,
        pred_boxes: m.pred_boxes,
        gt_tracks: gt.tracks.values().filter(|t| !t.is_empty()).count(),
        pred_tracks: pred.tracks.values().filter(|t| !t.is_empty()).count(),
        ap50,
        ap75,
    })
}
