//! Cue directories written by the simulator.
//!
//! A directory holds the detections (`det.txt`, MOTChallenge layout), their
//! embeddings (`emb.txt`, one row per detection row), a `seqinfo.ini`, and the
//! world description (`world.json`). The first three are enough for a
//! file-based run; the world file regenerates the exact simulated stream,
//! track cue included.

use std::fmt::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::io::mot::write_embeddings;
use crate::sim::{SimProvider, World, WorldConfig};

pub const DET_FILE: &str = "det.txt";
pub const EMB_FILE: &str = "emb.txt";
pub const SEQINFO_FILE: &str = "seqinfo.ini";
pub const WORLD_FILE: &str = "world.json";

pub fn write_cue_dir(dir: &Path, provider: &SimProvider) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg = &provider.world().config;
    let mut det = String::new();
    let mut emb = Vec::new();
    for t in 0..cfg.frames {
        for d in provider.frame_detections(t) {
            let b = d.bbox;
            let _ = writeln!(det, "{},-1,{},{},{},{},{},-1,-1,-1", t + 1, b.x, b.y, b.w, b.h, d.score);
            if let Some(e) = &d.embedding {
                emb.push((t + 1, e.clone()));
            }
        }
    }
    let write = |name: &str, text: &str| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(path, e))
    };
    write(DET_FILE, &det)?;
    write_embeddings(&emb, &dir.join(EMB_FILE))?;
    write(
        SEQINFO_FILE,
        &format!("[Sequence]\nframeRate={}\nseqLength={}\n", cfg.fps, cfg.frames),
    )?;
    let json = serde_json::to_string_pretty(cfg).map_err(|e| Error::Config(e.to_string()))?;
    write(WORLD_FILE, &(json + "\n"))
}

/// Rebuilds the simulated provider recorded in `dir`.
pub fn load_replay(dir: &Path, search_ratio: f64) -> Result<SimProvider> {
    let path = dir.join(WORLD_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let cfg: WorldConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    Ok(SimProvider::new(Arc::new(World::generate(cfg)?), search_ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cues::{CueProvider, FileProvider};
    use crate::sim::scenario;

    #[test]
    fn directory_feeds_both_providers() {
        let dir = tempfile::tempdir().unwrap();
        let world = Arc::new(World::generate(scenario("crossing").unwrap().config(3)).unwrap());
        let sim = SimProvider::new(world, 2.0);
        write_cue_dir(dir.path(), &sim).unwrap();
        let replay = load_replay(dir.path(), 2.0).unwrap();
        for t in 0..sim.len() {
            assert_eq!(replay.frame_detections(t), sim.frame_detections(t));
        }
        let file = FileProvider::load(&dir.path().join(DET_FILE), Some(&dir.path().join(EMB_FILE)), 2.0).unwrap();
        assert!(file.has_embeddings());
        for t in 0..file.len() {
            let a: Vec<_> = file.frame_detections(t).iter().map(|d| (d.bbox, d.score)).collect();
            let b: Vec<_> = sim.frame_detections(t).iter().map(|d| (d.bbox, d.score)).collect();
            assert_eq!(a, b, "frame {t}");
        }
    }

    #[test]
    fn bad_world_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(WORLD_FILE), "{\n  \"frames\": oops\n}\n").unwrap();
        assert!(matches!(load_replay(dir.path(), 2.0), Err(Error::Parse { line: 2, .. })));
    }
}
