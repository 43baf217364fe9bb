#![allow(dead_code)]

pub mod gradcheck;
pub mod oracles;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use trackline::{BBox, TrackId, TrajectorySet};

/// IoU written out independently of the library.
pub fn ref_iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a.w * a.h + b.w * b.h - inter)
}

/// Small ground truth plus a corrupted prediction of it: jittered boxes,
/// dropped boxes, identity changes and spurious boxes.
pub fn random_instance(rng: &mut ChaCha8Rng, max_tracks: usize, max_frames: usize) -> (TrajectorySet, TrajectorySet) {
    let frames = rng.random_range(1..=max_frames);
    let n_gt = rng.random_range(1..=max_tracks);
    let mut gt = TrajectorySet::new(frames, 30.0);
    let mut pred = TrajectorySet::new(frames, 30.0);
    for g in 0..n_gt {
        let mut x = rng.random_range(0.0..40.0);
        let mut y = rng.random_range(0.0..40.0);
        let w = rng.random_range(8.0..20.0);
        let h = rng.random_range(8.0..20.0);
        let mut pid: TrackId = rng.random_range(1..=max_tracks as TrackId + 1);
        for t in 0..frames {
            x += rng.random_range(-3.0..3.0);
            y += rng.random_range(-3.0..3.0);
            if rng.random::<f64>() < 0.15 {
                continue;
            }
            let b = BBox::new(x, y, w, h);
            gt.insert(g as TrackId + 1, t, b, None);
            if rng.random::<f64>() < 0.15 {
                continue;
            }
            if rng.random::<f64>() < 0.15 {
                pid = rng.random_range(1..=max_tracks as TrackId + 1);
            }
            if pred.tracks.get(&pid).is_some_and(|tr| tr.get(t).is_some()) {
                continue;
            }
            let j = rng.random_range(0.0..4.0);
            let pb = BBox::new(x + rng.random_range(-j..=j), y + rng.random_range(-j..=j), w, h);
            pred.insert(pid, t, pb, Some(rng.random::<f64>()));
        }
    }
    for t in 0..frames {
        if rng.random::<f64>() < 0.2 {
            let pid = rng.random_range(1..=max_tracks as TrackId + 1);
            if pred.tracks.get(&pid).is_none_or(|tr| tr.get(t).is_none()) {
                let b = BBox::new(rng.random_range(0.0..50.0), rng.random_range(0.0..50.0), 10.0, 10.0);
                pred.insert(pid, t, b, Some(rng.random::<f64>()));
            }
        }
    }
    (pred, gt)
}
