//! Named worlds exercising the situations a tracker has to survive.

use super::world::{Interval, NoiseConfig, PersonSpec, Population, TrackCue, WorldConfig};

#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    build: fn(u64) -> WorldConfig,
}

impl Scenario {
    pub fn config(&self, seed: u64) -> WorldConfig {
        (self.build)(seed)
    }
}

/// Cue degradations used by the noisy scenarios.
pub fn benchmark_noise() -> NoiseConfig {
    NoiseConfig {
        box_jitter: 0.03,
        track_jitter: 0.03,
        miss_rate: 0.1,
        false_positives: 1.0,
        embedding_sigma: 0.3,
        appearance_drift: 0.03,
        visibility_flip: 0.02,
        swap_rate: 0.1,
        occluder_bleed: 1.0,
    }
}

fn lane(y: f64, x: f64, speed: f64, frames: usize) -> PersonSpec {
    PersonSpec {
        center: (x, y),
        velocity: (speed, 0.0),
        height: 150.0,
        enter: 0,
        exit: frames,
    }
}

fn lanes(seed: u64, frames: usize) -> WorldConfig {
    WorldConfig {
        seed,
        frames,
        population: Population::Scripted(vec![
            lane(200.0, 200.0, 2.0, frames),
            lane(540.0, 1700.0, -1.5, frames),
            lane(880.0, 400.0, 1.0, frames),
        ]),
        occlusion_coverage: None,
        noise: benchmark_noise(),
        ..WorldConfig::default()
    }
}

fn crossing(seed: u64) -> WorldConfig {
    let frames = 200;
    WorldConfig {
        seed,
        frames,
        population: Population::Scripted(vec![
            lane(500.0, 600.0, 2.0, frames),
            // a tenth of a body height lower, so the peak overlap stays near 0.82
            lane(515.0, 1000.0, -2.0, frames),
        ]),
        occlusion_coverage: None,
        noise: benchmark_noise(),
        ..WorldConfig::default()
    }
}

fn partial_occlusion(seed: u64) -> WorldConfig {
    WorldConfig {
        detector_dropouts: vec![Interval {
            person: 1,
            start: 60,
            end: 90,
        }],
        ..lanes(seed, 300)
    }
}

fn full_occlusion(seed: u64) -> WorldConfig {
    WorldConfig {
        occlusions: vec![Interval {
            person: 1,
            start: 60,
            end: 105,
        }],
        ..lanes(seed, 300)
    }
}

fn long_gap(seed: u64) -> WorldConfig {
    let mut noise = benchmark_noise();
    noise.appearance_drift = 0.05;
    WorldConfig {
        occlusions: vec![Interval {
            person: 1,
            start: 60,
            end: 360,
        }],
        noise,
        ..lanes(seed, 450)
    }
}

fn id_shuffle(seed: u64) -> WorldConfig {
    let frames = 120;
    WorldConfig {
        seed,
        frames,
        population: Population::Scripted(vec![
            lane(150.0, 200.0, 2.0, frames),
            lane(400.0, 1600.0, -2.0, frames),
            lane(650.0, 500.0, 1.0, frames),
            lane(900.0, 1200.0, -1.0, frames),
        ]),
        occlusion_coverage: None,
        shuffle_segments: 4,
        track_cue: TrackCue::Useless,
        noise: NoiseConfig::none(),
        ..WorldConfig::default()
    }
}

fn crowded(seed: u64) -> WorldConfig {
    WorldConfig {
        seed,
        frames: 300,
        population: Population::Random {
            people: 32,
            staggered: true,
        },
        height_range: (80.0, 200.0),
        occlusion_coverage: Some(0.75),
        noise: benchmark_noise(),
        ..WorldConfig::default()
    }
}

fn crowded_occlusion(seed: u64) -> WorldConfig {
    WorldConfig {
        frames: 450,
        occlusion_rate: 0.15,
        occlusion_frames: (20, 75),
        occlusion_coverage: Some(0.7),
        appearance_clusters: 8,
        cluster_spread: 0.5,
        ..crowded(seed)
    }
}

pub fn scenario_library() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "lanes",
            description: "three people walking in separate lanes, never overlapping",
            build: |s| lanes(s, 300),
        },
        Scenario {
            name: "crossing",
            description: "two people walking through each other",
            build: crossing,
        },
        Scenario {
            name: "partial-occlusion",
            description: "one person stays visible but is missed by the detector for a second",
            build: partial_occlusion,
        },
        Scenario {
            name: "full-occlusion",
            description: "one person disappears for 1.5 s and comes back",
            build: full_occlusion,
        },
        Scenario {
            name: "long-gap",
            description: "one person disappears for 10 s while appearance drifts",
            build: long_gap,
        },
        Scenario {
            name: "id-shuffle",
            description: "exact detections, useless track cue, appearances rotating among people",
            build: id_shuffle,
        },
        Scenario {
            name: "crowded",
            description: "32 people wandering, entering and leaving, hiding behind each other",
            build: crowded,
        },
        Scenario {
            name: "crowded-occlusion",
            description: "crowded plus random full occlusions and look-alike appearance clusters",
            build: crowded_occlusion,
        },
    ]
}

pub fn scenario(name: &str) -> Option<Scenario> {
    scenario_library().into_iter().find(|s| s.name == name)
}

pub fn scenario_names() -> Vec<&'static str> {
    scenario_library().iter().map(|s| s.name).collect()
}
