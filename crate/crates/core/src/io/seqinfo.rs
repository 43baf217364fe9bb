//! Minimal `seqinfo.ini` reader: only the frame rate and sequence length.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SeqInfo {
    pub fps: Option<f64>,
    pub length: Option<usize>,
}

pub fn parse_seqinfo(text: &str) -> SeqInfo {
    let mut info = SeqInfo::default();
    for line in text.lines() {
        let Some((k, v)) = line.split_once('=') else {
            continue;
        };
        match k.trim() {
            "frameRate" => info.fps = v.trim().parse().ok(),
            "seqLength" => info.length = v.trim().parse().ok(),
            _ => {}
        }
    }
    info
}

pub fn read_seqinfo(path: &Path) -> Result<SeqInfo> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_seqinfo(&text))
}
