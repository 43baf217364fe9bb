//! Track-branch and re-id losses, each paired with its analytic gradient.

use crate::error::{Error, Result};
use crate::geom::{l2_distance, MotionDelta};
use crate::scalar::Scalar;

const BCE_EPS: f64 = 1e-7;

/// Summed smooth-L1 (Huber with transition at 1): `0.5 x^2` if `|x| < 1`, else `|x| - 0.5`.
pub fn smooth_l1<T: Scalar>(pred: &[T], target: &[T]) -> Result<T> {
    Ok(smooth_l1_grad(pred, target)?.0)
}

/// Loss and its gradient with respect to `pred`.
pub fn smooth_l1_grad<T: Scalar>(pred: &[T], target: &[T]) -> Result<(T, Vec<T>)> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch(pred.len(), target.len()));
    }
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(pred.len());
    for (p, t) in pred.iter().zip(target) {
        let x = *p - *t;
        if x.abs() < T::one() {
            loss = loss + T::HALF * x * x;
            grad.push(x);
        } else {
            loss = loss + x.abs() - T::HALF;
            grad.push(x.signum());
        }
    }
    Ok((loss, grad))
}

fn clamp_prob<T: Scalar>(p: T) -> T {
    let eps = T::lit(BCE_EPS);
    p.max(eps).min(T::one() - eps)
}

/// Binary cross entropy of probability `pred` against a 0/1 `target`.
pub fn bce<T: Scalar>(pred: T, target: T) -> T {
    let p = clamp_prob(pred);
    -(target * p.ln() + (T::one() - target) * (T::one() - p).ln())
}

/// d bce / d pred (zero where the clamp is active).
pub fn bce_grad<T: Scalar>(pred: T, target: T) -> T {
    let eps = T::lit(BCE_EPS);
    if pred < eps || pred > T::one() - eps {
        return T::zero();
    }
    -target / pred + (T::one() - target) / (T::one() - pred)
}

/// Ground truth of one track-branch training sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrackTarget<T = f64> {
    /// Positive target that is visible in the second frame, with its true motion.
    Visible(MotionDelta<T>),
    /// Positive target that left the search region or is occluded.
    Hidden,
    /// Background box; never visible.
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSample<T = f64> {
    pub target: TrackTarget<T>,
    pub v_hat: T,
    pub m_hat: MotionDelta<T>,
}

impl<T: Scalar> TrackSample<T> {
    pub fn is_positive(&self) -> bool {
        !matches!(self.target, TrackTarget::Negative)
    }

    pub fn v_gt(&self) -> T {
        match self.target {
            TrackTarget::Visible(_) => T::one(),
            _ => T::zero(),
        }
    }

    pub fn m_gt(&self) -> Option<MotionDelta<T>> {
        match self.target {
            TrackTarget::Visible(m) => Some(m),
            _ => None,
        }
    }
}

/// Per-term breakdown of the track loss. `motion` is `None` exactly when the
/// motion term was not evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackLossParts<T> {
    pub total: T,
    pub cls: T,
    pub motion: Option<T>,
    pub grad_v: T,
    pub grad_m: [T; 4],
}

pub fn track_loss<T: Scalar>(sample: &TrackSample<T>) -> T {
    track_loss_parts(sample).total
}

pub fn track_loss_parts<T: Scalar>(sample: &TrackSample<T>) -> TrackLossParts<T> {
    let v_gt = sample.v_gt();
    let cls = bce(sample.v_hat, v_gt);
    let grad_v = bce_grad(sample.v_hat, v_gt);
    match sample.target {
        TrackTarget::Visible(m_gt) => {
            let (motion, g) = smooth_l1_grad(&sample.m_hat.to_array(), &m_gt.to_array())
                .expect("motion vectors have four components");
            TrackLossParts {
                total: cls + motion,
                cls,
                motion: Some(motion),
                grad_v,
                grad_m: [g[0], g[1], g[2], g[3]],
            }
        }
        TrackTarget::Hidden | TrackTarget::Negative => TrackLossParts {
            total: cls,
            cls,
            motion: None,
            grad_v,
            grad_m: [T::zero(); 4],
        },
    }
}

/// Batch-hard triplet loss on l2 distances:
/// `max(0, max_q d(anchor, q) - min_n d(anchor, n) + alpha)`.
pub fn triplet_loss<T: Scalar>(anchor: &[T], positives: &[Vec<T>], negatives: &[Vec<T>], alpha: T) -> Result<T> {
    Ok(triplet_loss_grad(anchor, positives, negatives, alpha)?.loss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletGrad<T> {
    pub loss: T,
    pub anchor: Vec<T>,
    pub positives: Vec<Vec<T>>,
    pub negatives: Vec<Vec<T>>,
}

pub fn triplet_loss_grad<T: Scalar>(
    anchor: &[T],
    positives: &[Vec<T>],
    negatives: &[Vec<T>],
    alpha: T,
) -> Result<TripletGrad<T>> {
    if positives.is_empty() {
        return Err(Error::EmptySet("positive"));
    }
    if negatives.is_empty() {
        return Err(Error::EmptySet("negative"));
    }
    for v in positives.iter().chain(negatives) {
        if v.len() != anchor.len() {
            return Err(Error::DimensionMismatch {
                expected: anchor.len(),
                got: v.len(),
            });
        }
    }
    let (qi, dq) = positives
        .iter()
        .map(|q| l2_distance(anchor, q))
        .enumerate()
        .fold((0, T::neg_infinity()), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    let (ni, dn) = negatives
        .iter()
        .map(|n| l2_distance(anchor, n))
        .enumerate()
        .fold((0, T::infinity()), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
    let inner = dq - dn + alpha;
    let dim = anchor.len();
    let mut grad = TripletGrad {
        loss: inner.max(T::zero()),
        anchor: vec![T::zero(); dim],
        positives: vec![vec![T::zero(); dim]; positives.len()],
        negatives: vec![vec![T::zero(); dim]; negatives.len()],
    };
    if inner <= T::zero() {
        return Ok(grad);
    }
    // d||a - b|| / da = (a - b) / ||a - b||
    for k in 0..dim {
        if dq > T::zero() {
            let u = (anchor[k] - positives[qi][k]) / dq;
            grad.anchor[k] = grad.anchor[k] + u;
            grad.positives[qi][k] = -u;
        }
        if dn > T::zero() {
            let u = (anchor[k] - negatives[ni][k]) / dn;
            grad.anchor[k] = grad.anchor[k] - u;
            grad.negatives[ni][k] = u;
        }
    }
    Ok(grad)
}
