//! MOTChallenge CSV: `frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z`.
//!
//! Ground-truth files use the 9-column layout
//! `frame,id,bb_left,bb_top,bb_width,bb_height,flag,class,visibility`; rows
//! whose visibility is below [`MIN_GT_VISIBILITY`] are dropped on read.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{BBox, Embedding};
use crate::trajectory::TrajectorySet;

pub const MIN_GT_VISIBILITY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct MotRow {
    /// 1-based, as written in the file.
    pub frame: usize,
    pub id: i64,
    pub bb_left: f64,
    pub bb_top: f64,
    pub bb_width: f64,
    pub bb_height: f64,
    pub conf: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Only present in the 9-column ground-truth layout.
    pub visibility: Option<f64>,
    /// 1-based line number in the source.
    pub line: usize,
    /// Index among the non-blank lines of the source.
    pub data_index: usize,
}

impl MotRow {
    pub fn bbox(&self) -> BBox {
        BBox::new(self.bb_left, self.bb_top, self.bb_width, self.bb_height)
    }
}

/// Parsed file, rows grouped by 0-based frame.
#[derive(Debug, Clone, Default)]
pub struct MotSequence {
    pub frames: BTreeMap<usize, Vec<MotRow>>,
    /// Non-blank lines seen, including rows removed by the visibility filter.
    pub data_lines: usize,
}

impl MotSequence {
    /// One past the last frame that has a row.
    pub fn num_frames(&self) -> usize {
        self.frames.keys().next_back().map_or(0, |f| f + 1)
    }

    pub fn row_count(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    /// Groups rows by id. A confidence of exactly `-1` means "no score".
    pub fn to_trajectories(&self, sequence_length: Option<usize>, fps: f64) -> TrajectorySet {
        let len = sequence_length.unwrap_or(self.num_frames());
        let mut out = TrajectorySet::new(len, fps);
        for (frame, rows) in &self.frames {
            for r in rows {
                let score = if r.conf == -1.0 { None } else { Some(r.conf) };
                out.insert(r.id as u64, *frame, r.bbox(), score);
            }
        }
        out
    }
}

fn field<T: std::str::FromStr>(s: &str, name: &str, path: &str, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {name} {:?}", s.trim())))
}

fn int_field(s: &str, name: &str, path: &str, line: usize) -> Result<i64> {
    if let Ok(v) = s.trim().parse::<i64>() {
        return Ok(v);
    }
    let v: f64 = field(s, name, path, line)?;
    if v.fract() == 0.0 && v.is_finite() {
        Ok(v as i64)
    } else {
        Err(Error::parse(path, line, format!("invalid {name} {:?}", s.trim())))
    }
}

/// Parses CSV text; `path` only labels errors.
pub fn parse_mot(text: &str, path: &str) -> Result<MotSequence> {
    let mut seq = MotSequence::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let data_index = seq.data_lines;
        seq.data_lines += 1;
        let cols: Vec<&str> = raw.split(',').collect();
        if !(7..=10).contains(&cols.len()) {
            return Err(Error::parse(
                path,
                line,
                format!("expected 7 to 10 comma-separated fields, found {}", cols.len()),
            ));
        }
        let frame = int_field(cols[0], "frame", path, line)?;
        if frame < 1 {
            return Err(Error::parse(path, line, "frame numbers start at 1"));
        }
        let id = int_field(cols[1], "id", path, line)?;
        let mut vals = [0f64; 5];
        for (k, name) in ["bb_left", "bb_top", "bb_width", "bb_height", "conf"].iter().enumerate() {
            vals[k] = field(cols[2 + k], name, path, line)?;
            if !vals[k].is_finite() {
                return Err(Error::parse(path, line, format!("non-finite {name}")));
            }
        }
        if vals[2] <= 0.0 || vals[3] <= 0.0 {
            return Err(Error::NonPositiveBox {
                path: path.to_string(),
                line,
            });
        }
        let mut extra = [-1f64; 3];
        for (k, c) in cols[7..].iter().enumerate() {
            extra[k] = field(c, "column", path, line)?;
        }
        let visibility = (cols.len() == 9).then_some(extra[1]);
        if visibility.is_some_and(|v| v < MIN_GT_VISIBILITY) {
            continue;
        }
        let (x, y, z) = if cols.len() == 10 {
            (extra[0], extra[1], extra[2])
        } else {
            (-1.0, -1.0, -1.0)
        };
        seq.frames.entry(frame as usize - 1).or_default().push(MotRow {
            frame: frame as usize,
            id,
            bb_left: vals[0],
            bb_top: vals[1],
            bb_width: vals[2],
            bb_height: vals[3],
            conf: vals[4],
            x,
            y,
            z,
            visibility,
            line,
            data_index,
        });
    }
    Ok(seq)
}

pub fn read_mot(path: &Path) -> Result<MotSequence> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mot(&text, &path.display().to_string())
}

/// Renders trajectories in submission format, sorted by frame then id.
pub fn format_results(set: &TrajectorySet) -> String {
    let mut rows: Vec<(usize, u64, String)> = Vec::with_capacity(set.box_count());
    for (id, t) in &set.tracks {
        for (frame, p) in &t.points {
            let b = p.bbox;
            let conf = p.score.map_or_else(|| "-1".to_string(), |s| s.to_string());
            rows.push((
                *frame,
                *id,
                format!("{},{},{},{},{},{},{},-1,-1,-1", frame + 1, id, b.x, b.y, b.w, b.h, conf),
            ));
        }
    }
    rows.sort_by_key(|(f, id, _)| (*f, *id));
    let mut out = String::new();
    for (_, _, r) in rows {
        let _ = writeln!(out, "{r}");
    }
    out
}

pub fn write_results(set: &TrajectorySet, path: &Path) -> Result<()> {
    std::fs::write(path, format_results(set)).map_err(|e| Error::io(path, e))
}

/// Embedding rows `frame,v1,...,vD`, one per detection row of the matching det file.
pub fn parse_embeddings(text: &str, path: &str) -> Result<Vec<(usize, Embedding)>> {
    let mut out: Vec<(usize, Embedding)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut cols = raw.split(',');
        let frame = int_field(cols.next().unwrap_or(""), "frame", path, line)?;
        if frame < 1 {
            return Err(Error::parse(path, line, "frame numbers start at 1"));
        }
        let values = cols
            .map(|c| field::<f64>(c, "embedding value", path, line))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(path, line, "embedding must be non-empty and finite"));
        }
        if let Some((_, first)) = out.first() {
            if first.dim() != values.len() {
                return Err(Error::parse(
                    path,
                    line,
                    format!("embedding has {} values, expected {}", values.len(), first.dim()),
                ));
            }
        }
        out.push((frame as usize, Embedding::new(values)));
    }
    Ok(out)
}

pub fn read_embeddings(path: &Path) -> Result<Vec<(usize, Embedding)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text, &path.display().to_string())
}

/// Writes `(1-based frame, embedding)` rows.
pub fn write_embeddings(rows: &[(usize, Embedding)], path: &Path) -> Result<()> {
    let mut out = String::new();
    for (frame, e) in rows {
        out.push_str(&frame.to_string());
        for v in e.as_slice() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection_row_walkthrough() {
        let seq = parse_mot("1,-1,10,20,30,40,0.9,-1,-1,-1\n", "t").unwrap();
        let r = &seq.frames[&0][0];
        assert_eq!(r.frame, 1);
        assert_eq!(r.id, -1);
        assert_eq!(r.bbox(), BBox::new(10., 20., 30., 40.));
        assert_eq!(r.conf, 0.9);
        assert_eq!(r.visibility, None);
    }

    #[test]
    fn gt_visibility_filter() {
        let text = "1,1,10,20,30,40,1,1,0.04\n1,2,10,20,30,40,1,1,0.05\n2,1,10,20,30,40,1,1,1.0\n";
        let seq = parse_mot(text, "gt").unwrap();
        assert_eq!(seq.row_count(), 2);
        assert_eq!(seq.frames[&0].len(), 1);
        assert_eq!(seq.frames[&0][0].id, 2);
        assert_eq!(seq.data_lines, 3);
    }

    #[test]
    fn empty_file_has_no_frames() {
        let seq = parse_mot("", "e").unwrap();
        assert_eq!(seq.num_frames(), 0);
        assert_eq!(parse_mot("\n\n", "e").unwrap().num_frames(), 0);
    }

    #[test]
    fn malformed_rows_report_line() {
        match parse_mot("1,a,b", "bad") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        let text = "1,-1,10,20,30,40,0.9,-1,-1,-1\n\n1,x,10,20,30,40,0.9,-1,-1,-1\n";
        assert!(matches!(parse_mot(text, "bad"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(
            parse_mot("1,-1,10,20,0,40,0.9,-1,-1,-1", "bad"),
            Err(Error::NonPositiveBox { line: 1, .. })
        ));
        assert!(matches!(parse_mot("0,-1,10,20,5,40,0.9,-1,-1,-1", "bad"), Err(Error::Parse { .. })));
    }

    #[test]
    fn writer_is_one_based_and_sorted() {
        let mut set = TrajectorySet::new(3, 30.0);
        set.insert(2, 1, BBox::new(1.5, 2., 3., 4.), Some(0.25));
        set.insert(1, 0, BBox::new(1., 2., 3., 4.), None);
        set.insert(1, 1, BBox::new(1., 2., 3., 4.), Some(1.0));
        let text = format_results(&set);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "1,1,1,2,3,4,-1,-1,-1,-1");
        assert_eq!(lines[1], "2,1,1,2,3,4,1,-1,-1,-1");
        assert_eq!(lines[2], "2,2,1.5,2,3,4,0.25,-1,-1,-1");
        assert_eq!(format_results(&TrajectorySet::new(0, 30.0)), "");
    }
}
