//! Boxes, motion deltas and the search-region construction.
//!
//! Boxes are anchored at their top-left corner and motion deltas are taken
//! on those anchor coordinates:
//!
//! ```text
//! dx = (x' - x) / w     dy = (y' - y) / h
//! dw = ln(w' / w)       dh = ln(h' / h)
//! ```
//!
//! A center-based delta differs from this one only by the size-change term
//! `(w' - w) / 2w`, so either reading roundtrips; the anchor reading is kept
//! because it matches the published parameterization symbol for symbol.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Axis-aligned box `(x, y, w, h)` with `(x, y)` the top-left corner, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox<T = f64> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

impl<T: Scalar> BBox<T> {
    pub fn new(x: T, y: T, w: T, h: T) -> Self {
        Self { x, y, w, h }
    }

    pub fn from_center(cx: T, cy: T, w: T, h: T) -> Self {
        Self::new(cx - w * T::HALF, cy - h * T::HALF, w, h)
    }

    /// `w > 0`, `h > 0` and all coordinates finite.
    pub fn is_valid(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
            && self.w > T::zero()
            && self.h > T::zero()
    }

    pub fn center(&self) -> (T, T) {
        (self.x + self.w * T::HALF, self.y + self.h * T::HALF)
    }

    pub fn right(&self) -> T {
        self.x + self.w
    }

    pub fn bottom(&self) -> T {
        self.y + self.h
    }

    pub fn area(&self) -> T {
        self.w * self.h
    }

    pub fn contains_point(&self, px: T, py: T) -> bool {
        px >= self.x && px <= self.right() && py >= self.y && py <= self.bottom()
    }

    pub fn intersection_area(&self, other: &Self) -> T {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= T::zero() || ih <= T::zero() {
            T::zero()
        } else {
            iw * ih
        }
    }

    /// Scales every coordinate by `s` (image resampling).
    pub fn scaled(&self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.w * s, self.h * s)
    }

    pub fn cast<U: Scalar>(&self) -> BBox<U> {
        BBox::new(
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.w.to_f64_lossy()),
            U::lit(self.h.to_f64_lossy()),
        )
    }
}

/// Intersection over union. Disjoint or touching boxes give 0.
pub fn iou<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> T {
    let inter = a.intersection_area(b);
    if inter <= T::zero() {
        return T::zero();
    }
    let union = a.area() + b.area() - inter;
    if union <= T::zero() {
        return T::zero();
    }
    (inter / union).min(T::one())
}

/// Box-relative motion between two frames: normalized center shift and log size ratios.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionDelta<T = f64> {
    pub dx: T,
    pub dy: T,
    pub dw: T,
    pub dh: T,
}

impl<T: Scalar> MotionDelta<T> {
    pub fn new(dx: T, dy: T, dw: T, dh: T) -> Self {
        Self { dx, dy, dw, dh }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.dx.is_finite() && self.dy.is_finite() && self.dw.is_finite() && self.dh.is_finite()
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.dx, self.dy, self.dw, self.dh]
    }

    pub fn from_slice(v: &[T]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

pub fn encode_motion<T: Scalar>(prev: &BBox<T>, next: &BBox<T>) -> MotionDelta<T> {
    MotionDelta {
        dx: (next.x - prev.x) / prev.w,
        dy: (next.y - prev.y) / prev.h,
        dw: (next.w / prev.w).ln(),
        dh: (next.h / prev.h).ln(),
    }
}

pub fn decode_motion<T: Scalar>(prev: &BBox<T>, m: &MotionDelta<T>) -> BBox<T> {
    BBox::new(
        prev.x + m.dx * prev.w,
        prev.y + m.dy * prev.h,
        prev.w * m.dw.exp(),
        prev.h * m.dh.exp(),
    )
}

/// The target enlarged by `ratio` around its own center.
pub fn search_region<T: Scalar>(target: &BBox<T>, ratio: T) -> BBox<T> {
    let (cx, cy) = target.center();
    BBox::from_center(cx, cy, target.w * ratio, target.h * ratio)
}

/// Visibility probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct Visibility(f64);

impl Visibility {
    /// Clamps into `[0, 1]`; NaN maps to 0.
    pub fn new(v: f64) -> Self {
        if v.is_nan() {
            Self(0.0)
        } else {
            Self(v.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Fixed-length appearance vector produced by the re-id cue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding<T = f64>(pub Vec<T>);

pub const DEFAULT_EMBEDDING_DIM: usize = 128;

impl<T: Scalar> Embedding<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn distance(&self, other: &Self) -> T {
        l2_distance(&self.0, &other.0)
    }

    pub fn normalized(&self) -> Self {
        let n = self.0.iter().map(|v| *v * *v).sum::<T>().sqrt();
        if n > T::zero() {
            Self(self.0.iter().map(|v| *v / n).collect())
        } else {
            self.clone()
        }
    }
}

pub fn l2_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y) * (*x - *y))
        .sum::<T>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h)
    }

    #[test]
    fn iou_examples() {
        assert_eq!(iou(&b(0., 0., 10., 10.), &b(0., 0., 10., 10.)), 1.0);
        assert_eq!(iou(&b(0., 0., 10., 10.), &b(20., 20., 5., 5.)), 0.0);
        // intersection 50, union 150
        assert!((iou(&b(0., 0., 10., 10.), &b(5., 0., 10., 10.)) - 1.0 / 3.0).abs() < 1e-15);
        // touching edges
        assert_eq!(iou(&b(0., 0., 10., 10.), &b(10., 0., 10., 10.)), 0.0);
    }

    #[test]
    fn iou_generic_over_f32() {
        let a = BBox::<f32>::new(0., 0., 10., 10.);
        let c = BBox::<f32>::new(5., 0., 10., 10.);
        assert!((iou(&a, &c) - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(
            encode_motion(&b(10., 10., 20., 40.), &b(10., 10., 20., 40.)),
            MotionDelta::zero()
        );
        let m = encode_motion(&b(0., 0., 10., 10.), &b(5., 10., 20., 10.));
        assert_eq!((m.dx, m.dy), (0.5, 1.0));
        assert!((m.dw - 2f64.ln()).abs() < 1e-15);
        assert_eq!(m.dh, 0.0);
        let m = encode_motion(&b(0., 0., 4., 4.), &b(0., 0., 2., 8.));
        assert!((m.dw + 2f64.ln()).abs() < 1e-15);
        assert!((m.dh - 2f64.ln()).abs() < 1e-15);
        assert_eq!((m.dx, m.dy), (0.0, 0.0));
    }

    #[test]
    fn decode_examples() {
        let prev = b(10., 10., 20., 40.);
        assert_eq!(decode_motion(&prev, &MotionDelta::zero()), prev);
        let prev = b(0., 0., 10., 10.);
        let back = decode_motion(&prev, &MotionDelta::new(0.5, 1.0, 2f64.ln(), 0.0));
        let next = b(5., 10., 20., 10.);
        for (u, v) in [(back.x, next.x), (back.y, next.y), (back.w, next.w), (back.h, next.h)] {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn search_region_examples() {
        assert_eq!(search_region(&b(10., 10., 10., 10.), 1.0), b(10., 10., 10., 10.));
        assert_eq!(search_region(&b(10., 10., 10., 10.), 2.0), b(5., 5., 20., 20.));
        assert_eq!(search_region(&b(0., 0., 4., 8.), 2.0), b(-2., -4., 8., 16.));
    }

    #[test]
    fn visibility_clamps() {
        assert_eq!(Visibility::new(1.5).value(), 1.0);
        assert_eq!(Visibility::new(-0.2).value(), 0.0);
        assert_eq!(Visibility::new(f64::NAN).value(), 0.0);
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (-1e3f64..1e3, -1e3f64..1e3, 1f64..1e4, 1f64..1e4).prop_map(|(x, y, w, h)| b(x, y, w, h))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), c in arb_box()) {
            let u = iou(&a, &c);
            prop_assert!((0.0..=1.0).contains(&u));
            prop_assert_eq!(u, iou(&c, &a));
        }

        #[test]
        fn roundtrip_relative_error(a in arb_box(), c in arb_box()) {
            let back = decode_motion(&a, &encode_motion(&a, &c));
            let scale = c.w.max(c.h).max(c.x.abs()).max(c.y.abs()).max(1.0);
            prop_assert!((back.x - c.x).abs() / scale < 1e-9);
            prop_assert!((back.y - c.y).abs() / scale < 1e-9);
            prop_assert!((back.w - c.w).abs() / c.w < 1e-9);
            prop_assert!((back.h - c.h).abs() / c.h < 1e-9);
        }

        #[test]
        fn search_region_preserves_center_and_aspect(a in arb_box(), r in 1f64..8.0) {
            let s = search_region(&a, r);
            let (ax, ay) = a.center();
            let (sx, sy) = s.center();
            prop_assert!((ax - sx).abs() <= 1e-9 * ax.abs().max(s.w));
            prop_assert!((ay - sy).abs() <= 1e-9 * ay.abs().max(s.h));
            prop_assert!((s.w / s.h - a.w / a.h).abs() <= 1e-9 * (a.w / a.h));
            // the target sits inside its enlargement: IoU is the area ratio
            prop_assert!((iou(&a, &s) - 1.0 / (r * r)).abs() < 1e-9);
        }
    }
}
