//! Synthetic worlds and the cue streams observed in them.

pub mod crops;
pub mod provider;
pub mod scenarios;
pub mod world;

pub use crops::{crop_samples, CropConfig};
pub use provider::{generate, SimProvider};
pub use scenarios::{benchmark_noise, scenario, scenario_library, scenario_names, Scenario};
pub use world::{Interval, MotionParams, NoiseConfig, PersonSpec, Population, TrackCue, World, WorldConfig};
