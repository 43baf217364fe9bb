//! Brute-force reference implementations of the tracking metrics.

use std::collections::BTreeMap;

use super::ref_iou;
use trackline::{BBox, TrackId, TrajectorySet};

/// All matchings between `n` rows and `m` columns over allowed pairs, as row -> column lists.
pub fn all_matchings(allowed: &[Vec<bool>], m: usize) -> Vec<Vec<Option<usize>>> {
    fn rec(allowed: &[Vec<bool>], i: usize, used: &mut Vec<bool>, cur: &mut Vec<Option<usize>>, out: &mut Vec<Vec<Option<usize>>>) {
        if i == allowed.len() {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        rec(allowed, i + 1, used, cur, out);
        cur.pop();
        for j in 0..used.len() {
            if !used[j] && allowed[i][j] {
                used[j] = true;
                cur.push(Some(j));
                rec(allowed, i + 1, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(allowed, 0, &mut vec![false; m], &mut Vec::new(), &mut out);
    out
}

pub struct OracleMot {
    pub fp: usize,
    pub fn_: usize,
    pub idsw: usize,
    pub gt_boxes: usize,
    pub matched: BTreeMap<TrackId, usize>,
}

pub fn frame_boxes(set: &TrajectorySet, t: usize) -> Vec<(TrackId, BBox)> {
    set.tracks
        .iter()
        .filter_map(|(id, tr)| tr.points.get(&t).map(|p| (*id, p.bbox)))
        .collect()
}

pub fn oracle_clear_mot(pred: &TrajectorySet, gt: &TrajectorySet) -> OracleMot {
    let mut last: BTreeMap<TrackId, TrackId> = BTreeMap::new();
    let mut r = OracleMot {
        fp: 0,
        fn_: 0,
        idsw: 0,
        gt_boxes: 0,
        matched: BTreeMap::new(),
    };
    for t in 0..gt.sequence_length {
        let g = frame_boxes(gt, t);
        let p = frame_boxes(pred, t);
        r.gt_boxes += g.len();
        let mut g_used = vec![false; g.len()];
        let mut p_used = vec![false; p.len()];
        let mut pairs: Vec<(TrackId, TrackId)> = Vec::new();
        for (gi, (gid, gb)) in g.iter().enumerate() {
            if let Some(prev) = last.get(gid) {
                if let Some(pi) = p.iter().position(|(pid, _)| pid == prev) {
                    if !p_used[pi] && ref_iou(gb, &p[pi].1) >= 0.5 {
                        g_used[gi] = true;
                        p_used[pi] = true;
                        pairs.push((*gid, *prev));
                    }
                }
            }
        }
        let gl: Vec<usize> = (0..g.len()).filter(|i| !g_used[*i]).collect();
        let pl: Vec<usize> = (0..p.len()).filter(|j| !p_used[*j]).collect();
        let allowed: Vec<Vec<bool>> = gl
            .iter()
            .map(|&gi| pl.iter().map(|&pj| ref_iou(&g[gi].1, &p[pj].1) >= 0.5).collect())
            .collect();
        let mut best: Option<(usize, f64, Vec<Option<usize>>)> = None;
        for m in all_matchings(&allowed, pl.len()) {
            let card = m.iter().flatten().count();
            let sum: f64 = m
                .iter()
                .enumerate()
                .filter_map(|(a, b)| b.map(|b| ref_iou(&g[gl[a]].1, &p[pl[b]].1)))
                .sum();
            let better = match &best {
                None => true,
                Some((bc, bs, _)) => card > *bc || (card == *bc && sum > *bs + 1e-12),
            };
            if better {
                best = Some((card, sum, m));
            }
        }
        for (a, b) in best.unwrap().2.iter().enumerate() {
            if let Some(b) = b {
                let gid = g[gl[a]].0;
                let pid = p[pl[*b]].0;
                g_used[gl[a]] = true;
                p_used[pl[*b]] = true;
                if last.get(&gid).is_some_and(|x| *x != pid) {
                    r.idsw += 1;
                }
                pairs.push((gid, pid));
            }
        }
        for (gid, pid) in pairs {
            last.insert(gid, pid);
            *r.matched.entry(gid).or_default() += 1;
        }
        r.fn_ += g_used.iter().filter(|u| !**u).count();
        r.fp += p_used.iter().filter(|u| !**u).count();
    }
    r
}

pub fn oracle_idtp(pred: &TrajectorySet, gt: &TrajectorySet) -> usize {
    let gts: Vec<_> = gt.tracks.values().collect();
    let preds: Vec<_> = pred.tracks.values().collect();
    let count = |gi: usize, pj: usize| {
        gts[gi]
            .points
            .iter()
            .filter(|(f, gp)| preds[pj].points.get(f).is_some_and(|pp| ref_iou(&gp.bbox, &pp.bbox) >= 0.5))
            .count()
    };
    let allowed = vec![vec![true; preds.len()]; gts.len()];
    all_matchings(&allowed, preds.len())
        .into_iter()
        .map(|m| m.iter().enumerate().filter_map(|(a, b)| b.map(|b| count(a, b))).sum::<usize>())
        .max()
        .unwrap_or(0)
}

pub fn oracle_track_iou(pred: &trackline::Trajectory, gt: &trackline::Trajectory) -> f64 {
    let mut frames: Vec<usize> = pred.points.keys().chain(gt.points.keys()).copied().collect();
    frames.sort();
    frames.dedup();
    if frames.is_empty() {
        return 0.0;
    }
    let mut s = 0.0;
    for f in &frames {
        if let (Some(a), Some(b)) = (pred.points.get(f), gt.points.get(f)) {
            s += ref_iou(&a.bbox, &b.bbox);
        }
    }
    s / frames.len() as f64
}

/// Exhaustive TrackAP: among every assignment of predictions to ground truth
/// above the threshold, the one that is lexicographically best in score
/// order (each prediction, in turn, gets the highest track IoU still possible).
pub fn oracle_ap(pred: &TrajectorySet, gt: &TrajectorySet, thr: f64) -> f64 {
    let mut ranked: Vec<(TrackId, f64)> = pred
        .tracks
        .iter()
        .map(|(id, t)| (*id, t.points.values().map(|p| p.score.unwrap()).sum::<f64>() / t.points.len() as f64))
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let gts: Vec<_> = gt.tracks.values().collect();
    let ious: Vec<Vec<f64>> = ranked
        .iter()
        .map(|(id, _)| gts.iter().map(|g| oracle_track_iou(&pred.tracks[id], g)).collect())
        .collect();
    let allowed: Vec<Vec<bool>> = ious.iter().map(|r| r.iter().map(|v| *v >= thr).collect()).collect();
    let key = |m: &Vec<Option<usize>>| -> Vec<f64> {
        m.iter().enumerate().map(|(i, j)| j.map_or(-1.0, |j| ious[i][j])).collect()
    };
    let best = all_matchings(&allowed, gts.len())
        .into_iter()
        .max_by(|a, b| key(a).partial_cmp(&key(b)).unwrap())
        .unwrap();
    let n_gt = gts.len();
    if n_gt == 0 {
        return 0.0;
    }
    let mut tp = 0usize;
    let mut points: Vec<(usize, f64)> = Vec::new();
    for (k, m) in best.iter().enumerate() {
        if m.is_some() {
            tp += 1;
        }
        points.push((tp, tp as f64 / (k + 1) as f64));
    }
    let mut total = 0.0;
    for r in 0..=100usize {
        // recall tp / n_gt >= r / 100, compared in integers
        let p = points
            .iter()
            .filter(|(tp, _)| 100 * tp >= r * n_gt)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max);
        total += p;
    }
    total / 101.0
}
