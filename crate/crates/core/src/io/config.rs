//! Flat `key = value` configuration files (TOML syntax, no tables).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reinstate::{ReinstateConfig, ReinstateMode};
use crate::solver::{Association, SolverConfig};

/// Environment variable naming the config file used when none is given.
pub const CONFIG_ENV: &str = "TRACKLINE_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConfigFile {
    iou_merge_threshold: f64,
    visibility_threshold: f64,
    detection_score_threshold: f64,
    search_ratio: f64,
    duplicate_iou_threshold: f64,
    pending_frames: usize,
    association: Association,
    reid_distance_threshold: f64,
    reinstate: ReinstateMode,
    reinstate_distance_threshold: f64,
    k_most_similar: usize,
    buffer_seconds: f64,
    fps: Option<f64>,
    classifier_model: Option<PathBuf>,
    pose_short_side: f64,
}

impl Default for ConfigFile {
    fn default() -> Self {
        TrackerConfig::default().to_file()
    }
}

/// Everything a config file can set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub solver: SolverConfig,
    /// Classifier weights for the online and offline reinstatement modes.
    pub classifier_model: Option<PathBuf>,
    /// Short side pose annotations are rescaled to before box filtering.
    pub pose_short_side: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            classifier_model: None,
            pose_short_side: 900.0,
        }
    }
}

impl TrackerConfig {
    fn to_file(&self) -> ConfigFile {
        let s = &self.solver;
        ConfigFile {
            iou_merge_threshold: s.iou_merge_threshold,
            visibility_threshold: s.visibility_threshold,
            detection_score_threshold: s.detection_score_threshold,
            search_ratio: s.search_ratio,
            duplicate_iou_threshold: s.duplicate_iou_threshold,
            pending_frames: s.pending_frames,
            association: s.association,
            reid_distance_threshold: s.reid_distance_threshold,
            reinstate: s.reinstate.mode,
            reinstate_distance_threshold: s.reinstate.distance_threshold,
            k_most_similar: s.reinstate.k_most_similar,
            buffer_seconds: s.reinstate.buffer_seconds,
            fps: s.fps,
            classifier_model: self.classifier_model.clone(),
            pose_short_side: self.pose_short_side,
        }
    }

    fn from_file(f: ConfigFile) -> Self {
        Self {
            solver: SolverConfig {
                iou_merge_threshold: f.iou_merge_threshold,
                visibility_threshold: f.visibility_threshold,
                detection_score_threshold: f.detection_score_threshold,
                search_ratio: f.search_ratio,
                duplicate_iou_threshold: f.duplicate_iou_threshold,
                pending_frames: f.pending_frames,
                association: f.association,
                reid_distance_threshold: f.reid_distance_threshold,
                reinstate: ReinstateConfig {
                    mode: f.reinstate,
                    distance_threshold: f.reinstate_distance_threshold,
                    k_most_similar: f.k_most_similar,
                    buffer_seconds: f.buffer_seconds,
                },
                fps: f.fps,
            },
            classifier_model: f.classifier_model,
            pose_short_side: f.pose_short_side,
        }
    }
}

/// Parses and validates a config. Missing keys keep their defaults; unknown keys are errors.
pub fn parse_config(text: &str) -> Result<TrackerConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    let cfg = TrackerConfig::from_file(file);
    cfg.solver.validate()?;
    if !(cfg.pose_short_side > 0.0) {
        return Err(Error::Config(format!(
            "pose_short_side must be positive, got {}",
            cfg.pose_short_side
        )));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<TrackerConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    // model paths are relative to the config file
    if let (Some(model), Some(dir)) = (&cfg.classifier_model, path.parent()) {
        if model.is_relative() {
            cfg.classifier_model = Some(dir.join(model));
        }
    }
    Ok(cfg)
}

/// Writes `cfg` as a commented config file that [`parse_config`] reads back unchanged.
pub fn render_config(cfg: &TrackerConfig) -> String {
    let f = cfg.to_file();
    let mode = |m: ReinstateMode| match m {
        ReinstateMode::Disabled => "disabled",
        ReinstateMode::Threshold => "threshold",
        ReinstateMode::Online => "online",
        ReinstateMode::Offline => "offline",
    };
    let assoc = match f.association {
        Association::Track => "track",
        Association::Reid => "reid",
    };
    let mut out = String::new();
    let mut line = |comment: &str, kv: String| {
        out.push_str("# ");
        out.push_str(comment);
        out.push('\n');
        out.push_str(&kv);
        out.push_str("\n\n");
    };
    line(
        "merge a detection into a continued track when IoU > this",
        format!("iou_merge_threshold = {:?}", f.iou_merge_threshold),
    );
    line(
        "terminate a track whose visibility score falls below this",
        format!("visibility_threshold = {:?}", f.visibility_threshold),
    );
    line(
        "minimum detection score to start a new track",
        format!("detection_score_threshold = {:?}", f.detection_score_threshold),
    );
    line(
        "search region side relative to the target box",
        format!("search_ratio = {:?}", f.search_ratio),
    );
    line(
        "live tracks overlapping more than this are duplicates",
        format!("duplicate_iou_threshold = {:?}", f.duplicate_iou_threshold),
    );
    line(
        "frames a new track is followed before reinstatement is decided",
        format!("pending_frames = {}", f.pending_frames),
    );
    line(
        "track | reid (embedding-only association, no track cue)",
        format!("association = \"{assoc}\""),
    );
    line(
        "re-id association accepts a match when the distance is below this",
        format!("reid_distance_threshold = {:?}", f.reid_distance_threshold),
    );
    line(
        "disabled | threshold | online | offline",
        format!("reinstate = \"{}\"", mode(f.reinstate)),
    );
    line(
        "reinstate when the mean distance of the most similar boxes is below this",
        format!("reinstate_distance_threshold = {:?}", f.reinstate_distance_threshold),
    );
    line(
        "number of most similar box pairs averaged",
        format!("k_most_similar = {}", f.k_most_similar),
    );
    line(
        "seconds of embeddings kept for terminated tracks",
        format!("buffer_seconds = {:?}", f.buffer_seconds),
    );
    line(
        "frame rate override; defaults to the sequence's own (30 if unknown)",
        match f.fps {
            Some(v) => format!("fps = {v:?}"),
            None => "# fps = 30.0".to_string(),
        },
    );
    line(
        "classifier weights for the online and offline modes",
        match &f.classifier_model {
            Some(p) => format!("classifier_model = {:?}", p.display().to_string()),
            None => "# classifier_model = \"reinstater.bin\"".to_string(),
        },
    );
    line(
        "pose annotations are rescaled to this short side before box filtering",
        format!("pose_short_side = {:?}", f.pose_short_side),
    );
    out
}
