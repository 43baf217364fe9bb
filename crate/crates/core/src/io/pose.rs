//! JTA-style pose annotations and their conversion to person boxes.
//!
//! Line format: `person_id,frame,x1,y1,z1,v1,...,x22,y22,z22,v22` where `z`
//! is the joint's distance to the camera in meters and `v` is 1 when the
//! joint is visible, 0 otherwise.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::BBox;

pub const JOINT_COUNT: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Joint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseAnnotation {
    pub person_id: i64,
    pub frame: usize,
    pub joints: [Joint; JOINT_COUNT],
}

/// Box derivation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseFilter {
    /// Coordinate scale applied first (downsampling to a shorter side of 900).
    pub scale: f64,
    /// Fractional enlargement on each side.
    pub enlarge: f64,
    pub min_width: f64,
    pub min_height: f64,
    /// Meters; compared with the mean distance of the visible joints.
    pub max_distance: f64,
    pub min_visible_fraction: f64,
}

impl Default for PoseFilter {
    fn default() -> Self {
        Self {
            scale: 1.0,
            enlarge: 0.05,
            min_width: 25.0,
            min_height: 50.0,
            max_distance: 25.0,
            min_visible_fraction: 0.5,
        }
    }
}

impl PoseFilter {
    /// Scale that maps a `width x height` frame to a shorter side of `short_side`.
    pub fn downsample_to(width: f64, height: f64, short_side: f64) -> f64 {
        short_side / width.min(height)
    }
}

/// Tight box over the visible joints, grown by `enlarge` on every side.
/// `None` when too few joints are visible, the person is too far away, or the
/// grown box is still smaller than the minimum size.
pub fn pose_to_bbox(pose: &PoseAnnotation, filter: &PoseFilter) -> Option<BBox> {
    let visible: Vec<&Joint> = pose.joints.iter().filter(|j| j.visible).collect();
    if visible.is_empty()
        || (visible.len() as f64) < filter.min_visible_fraction * JOINT_COUNT as f64
    {
        return None;
    }
    let mean_z = visible.iter().map(|j| j.z).sum::<f64>() / visible.len() as f64;
    if mean_z > filter.max_distance {
        return None;
    }
    let s = filter.scale;
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for j in &visible {
        x0 = x0.min(j.x * s);
        y0 = y0.min(j.y * s);
        x1 = x1.max(j.x * s);
        y1 = y1.max(j.y * s);
    }
    let (w, h) = (x1 - x0, y1 - y0);
    let (dx, dy) = (w * filter.enlarge, h * filter.enlarge);
    let grown = BBox::new(x0 - dx, y0 - dy, w + 2.0 * dx, h + 2.0 * dy);
    if grown.w < filter.min_width || grown.h < filter.min_height {
        return None;
    }
    Some(grown)
}

pub fn parse_pose_line(raw: &str, path: &str, line: usize) -> Result<PoseAnnotation> {
    let cols: Vec<&str> = raw.split(',').map(str::trim).collect();
    if cols.len() != 2 + 4 * JOINT_COUNT {
        return Err(Error::parse(
            path,
            line,
            format!("expected {} fields, found {}", 2 + 4 * JOINT_COUNT, cols.len()),
        ));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::parse(path, line, format!("invalid number {s:?}")))
    };
    let person_id = cols[0]
        .parse::<i64>()
        .map_err(|_| Error::parse(path, line, "invalid person id"))?;
    let frame = cols[1]
        .parse::<usize>()
        .map_err(|_| Error::parse(path, line, "invalid frame"))?;
    let mut joints = [Joint {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        visible: false,
    }; JOINT_COUNT];
    for (k, j) in joints.iter_mut().enumerate() {
        let base = 2 + 4 * k;
        j.x = num(cols[base])?;
        j.y = num(cols[base + 1])?;
        j.z = num(cols[base + 2])?;
        j.visible = num(cols[base + 3])? != 0.0;
    }
    Ok(PoseAnnotation {
        person_id,
        frame,
        joints,
    })
}

pub fn read_poses(path: &Path) -> Result<Vec<PoseAnnotation>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let label = path.display().to_string();
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_pose_line(l, &label, i + 1))
        .collect()
}
