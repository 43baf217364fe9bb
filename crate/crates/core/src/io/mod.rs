//! File formats: MOTChallenge CSV, per-detection embeddings, JTA-style pose
//! annotations, `seqinfo.ini`, the solver configuration file and simulator
//! cue directories.

pub mod config;
pub mod cuedir;
pub mod mot;
pub mod pose;
pub mod seqinfo;

pub use cuedir::{load_replay, write_cue_dir};
pub use config::{load_config, parse_config, render_config, TrackerConfig, CONFIG_ENV};
pub use mot::{read_embeddings, read_mot, write_embeddings, write_results, MotRow, MotSequence};
pub use pose::{pose_to_bbox, read_poses, Joint, PoseAnnotation, PoseFilter, JOINT_COUNT};
pub use seqinfo::{read_seqinfo, SeqInfo};
