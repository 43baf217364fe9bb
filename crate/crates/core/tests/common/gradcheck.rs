//! Analytic gradients against central finite differences. Each check returns
//! the comparisons that failed, empty on success.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trackline::learn::loss::{self as lib, TrackSample, TrackTarget};
use trackline::learn::{MlpModel, OutputKind};
use trackline::MotionDelta;

const H: f64 = 1e-6;

pub fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-4 * analytic.abs().max(numeric.abs()) + 1e-7
}

fn numeric(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x + H) - f(x - H)) / (2.0 * H)
}

/// A value at least `gap` away from every kink in `kinks`.
fn away_from(rng: &mut ChaCha8Rng, lo: f64, hi: f64, kinks: &[f64], gap: f64) -> f64 {
    loop {
        let v = rng.random_range(lo..hi);
        if kinks.iter().all(|k| (v - k).abs() > gap) {
            return v;
        }
    }
}

fn check(failures: &mut Vec<String>, what: impl FnOnce() -> String, analytic: f64, numeric: f64) {
    if !close(analytic, numeric) {
        failures.push(format!("{}: analytic {analytic} numeric {numeric}", what()));
    }
}

pub fn smooth_l1(points: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for point in 0..points {
        let target: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pred: Vec<f64> = target.iter().map(|t| t + away_from(&mut rng, -3.0, 3.0, &[-1.0, 1.0], 1e-3)).collect();
        let (_, g) = lib::smooth_l1_grad(&pred, &target).unwrap();
        for k in 0..4 {
            let f = |v: f64| {
                let mut p = pred.clone();
                p[k] = v;
                lib::smooth_l1(&p, &target).unwrap()
            };
            check(&mut failures, || format!("smooth_l1 point {point} component {k}"), g[k], numeric(f, pred[k]));
        }
    }
    failures
}

pub fn bce(points: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for point in 0..points {
        let p = rng.random_range(0.01..0.99);
        let y = if rng.random::<bool>() { 1.0 } else { 0.0 };
        check(&mut failures, || format!("bce point {point}"), lib::bce_grad(p, y), numeric(|v| lib::bce(v, y), p));
    }
    failures
}

/// Gradients of the track loss, plus the rule that hidden and negative
/// targets carry no motion term.
pub fn track_loss(points: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for point in 0..points {
        let m_gt = MotionDelta::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
        let target = match point % 3 {
            0 => TrackTarget::Visible(m_gt),
            1 => TrackTarget::Hidden,
            _ => TrackTarget::Negative,
        };
        let gt = m_gt.to_array();
        let m: Vec<f64> = gt.iter().map(|g| g + away_from(&mut rng, -2.0, 2.0, &[-1.0, 1.0], 1e-3)).collect();
        let sample = TrackSample {
            target,
            v_hat: rng.random_range(0.02..0.98),
            m_hat: MotionDelta::from_slice(&m),
        };
        let parts = lib::track_loss_parts(&sample);
        let fv = |v: f64| lib::track_loss(&TrackSample { v_hat: v, ..sample });
        check(&mut failures, || format!("track loss point {point} visibility"), parts.grad_v, numeric(fv, sample.v_hat));
        for k in 0..4 {
            let fm = |v: f64| {
                let mut mm = m.clone();
                mm[k] = v;
                lib::track_loss(&TrackSample { m_hat: MotionDelta::from_slice(&mm), ..sample })
            };
            check(&mut failures, || format!("track loss point {point} motion {k}"), parts.grad_m[k], numeric(fm, m[k]));
        }
        let visible = matches!(target, TrackTarget::Visible(_));
        if parts.motion.is_some() != visible {
            failures.push(format!("track loss point {point}: motion term present = {}", parts.motion.is_some()));
        }
        if !visible {
            let moved = TrackSample { m_hat: MotionDelta::new(9.0, -9.0, 3.0, 3.0), ..sample };
            if parts.grad_m != [0.0; 4] || lib::track_loss(&moved) != parts.total || parts.total != parts.cls {
                failures.push(format!("track loss point {point}: motion leaks into a {target:?} target"));
            }
        }
    }
    failures
}

pub fn triplet(points: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut checked = 0;
    while checked < points {
        let dim = 5;
        let vec = |rng: &mut ChaCha8Rng| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let anchor = vec(&mut rng);
        let pos: Vec<Vec<f64>> = (0..3).map(|_| vec(&mut rng)).collect();
        let neg: Vec<Vec<f64>> = (0..3).map(|_| vec(&mut rng)).collect();
        let alpha = 0.2;
        let g = lib::triplet_loss_grad(&anchor, &pos, &neg, alpha).unwrap();
        // keep away from the hinge and from ties among the hardest examples
        let d = |b: &Vec<f64>| anchor.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let mut dp: Vec<f64> = pos.iter().map(d).collect();
        let mut dn: Vec<f64> = neg.iter().map(d).collect();
        dp.sort_by(|a, b| b.total_cmp(a));
        dn.sort_by(|a, b| a.total_cmp(b));
        if (dp[0] - dn[0] + alpha).abs() < 1e-3 || dp[0] - dp[1] < 1e-3 || dn[1] - dn[0] < 1e-3 {
            continue;
        }
        checked += 1;
        for k in 0..dim {
            let fa = |v: f64| {
                let mut a = anchor.clone();
                a[k] = v;
                lib::triplet_loss(&a, &pos, &neg, alpha).unwrap()
            };
            check(&mut failures, || format!("triplet anchor {k}"), g.anchor[k], numeric(fa, anchor[k]));
            for j in 0..3 {
                let fp = |v: f64| {
                    let mut p = pos.clone();
                    p[j][k] = v;
                    lib::triplet_loss(&anchor, &p, &neg, alpha).unwrap()
                };
                check(&mut failures, || format!("triplet positive {j}/{k}"), g.positives[j][k], numeric(fp, pos[j][k]));
                let fnn = |v: f64| {
                    let mut n = neg.clone();
                    n[j][k] = v;
                    lib::triplet_loss(&anchor, &pos, &n, alpha).unwrap()
                };
                check(&mut failures, || format!("triplet negative {j}/{k}"), g.negatives[j][k], numeric(fnn, neg[j][k]));
            }
        }
    }
    failures
}

pub fn mlp(points: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for point in 0..points {
        let output = if point % 2 == 0 { OutputKind::Linear } else { OutputKind::Sigmoid };
        let mut model = MlpModel::<f64>::init(&[4, 6, 5, 3], output, &mut rng);
        // zero biases put dead units exactly on the ReLU kink
        for w in model.weights.iter_mut() {
            *w += rng.random_range(-0.1..0.1);
        }
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let objective = |m: &MlpModel<f64>, x: &[f64]| m.forward(x).unwrap().iter().zip(&c).map(|(o, c)| o * c).sum::<f64>();
        let cache = model.forward_cached(&x).unwrap();
        let (gw, gx) = model.backward(&cache, &c);
        for k in 0..x.len() {
            let f = |v: f64| {
                let mut xx = x.clone();
                xx[k] = v;
                objective(&model, &xx)
            };
            check(&mut failures, || format!("mlp point {point} input {k}"), gx[k], numeric(f, x[k]));
        }
        for k in (0..model.weights.len()).step_by(3) {
            let f = |v: f64| {
                let mut m = model.clone();
                m.weights[k] = v;
                objective(&m, &x)
            };
            check(&mut failures, || format!("mlp point {point} weight {k}"), gw[k], numeric(f, model.weights[k]));
        }
    }
    failures
}
