//! Online multi-object tracking by detection.
//!
//! A [`solver::Solver`] consumes per-frame cues (detections, per-track
//! visibility and motion responses, appearance embeddings) from a
//! [`cues::CueProvider`] and maintains the track lifecycle: continuation,
//! termination, initiation and reinstatement. [`metrics`] scores the output
//! against ground truth, [`sim`] generates synthetic worlds to test it on,
//! and [`learn`] holds the losses and the small networks used by the
//! trainable parts.

pub mod cues;
pub mod error;
pub mod experiment;
pub mod geom;
pub mod io;
pub mod learn;
pub mod metrics;
pub mod reinstate;
pub mod scalar;
pub mod sim;
pub mod solver;
pub mod track;
pub mod trajectory;

pub use cues::{CueProvider, Detection, FileProvider, FrameCues, GroundTruthProvider, TrackResponse};
pub use error::{Error, Result};
pub use geom::{decode_motion, encode_motion, iou, search_region, BBox, Embedding, MotionDelta, Visibility};
pub use learn::MlpModel;
pub use reinstate::{Classifier, EmbeddingBuffer, ReinstateConfig, ReinstateFeatures, ReinstateMode};
pub use scalar::Scalar;
pub use solver::{run, Association, Solver, SolverConfig};
pub use track::{Track, TrackState};
pub use trajectory::{TrackId, Trajectory, TrajectorySet};

pub type BBoxF64 = BBox<f64>;
pub type BBoxF32 = BBox<f32>;
pub type MotionDeltaF64 = MotionDelta<f64>;
pub type MotionDeltaF32 = MotionDelta<f32>;
pub type EmbeddingF64 = Embedding<f64>;
pub type EmbeddingF32 = Embedding<f32>;
pub type Mlp32 = MlpModel<f32>;
pub type Mlp64 = MlpModel<f64>;
