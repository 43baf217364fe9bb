use std::collections::BTreeMap;
use std::sync::Arc;

use trackline::io::mot::format_results;
use trackline::sim::{scenario, SimProvider, World};
use trackline::{iou, run, BBox, CueProvider, FrameCues, GroundTruthProvider, Result, Solver, SolverConfig, TrackId, TrackState, TrajectorySet};

/// The first `len` frames of another provider.
struct Prefix<P> {
    inner: P,
    len: usize,
}

impl<P: CueProvider> CueProvider for Prefix<P> {
    fn len(&self) -> usize {
        self.len
    }
    fn fps(&self) -> f64 {
        self.inner.fps()
    }
    fn has_embeddings(&self) -> bool {
        self.inner.has_embeddings()
    }
    fn query(&mut self, frame: usize, targets: &BTreeMap<TrackId, BBox>) -> Result<FrameCues> {
        self.inner.query(frame, targets)
    }
}

fn noisy_provider(name: &str, seed: u64, frames: usize) -> SimProvider {
    let mut cfg = scenario(name).unwrap().config(seed);
    cfg.frames = frames;
    SimProvider::new(Arc::new(World::generate(cfg).unwrap()), 2.0)
}

/// Steps a solver through the provider, checking per-step invariants, and
/// returns the frames after which nothing was pending.
fn stepped(p: &mut SimProvider, cfg: &SolverConfig) -> (TrajectorySet, Vec<usize>) {
    let mut solver = Solver::new(cfg.clone(), None, p.fps()).unwrap();
    let mut quiet = Vec::new();
    let mut previous: BTreeMap<TrackId, (TrackState, BTreeMap<usize, BBox>)> = BTreeMap::new();
    for t in 0..p.len() {
        let cues = p.query(t, &solver.targets()).unwrap();
        solver.step(&cues).unwrap();

        let active: Vec<BBox> = solver.active().filter_map(|tr| tr.boxes.get(&t).copied()).collect();
        for i in 0..active.len() {
            for j in i + 1..active.len() {
                assert!(iou(&active[i], &active[j]) <= cfg.duplicate_iou_threshold, "frame {t}: duplicate active boxes");
            }
        }
        for tr in solver.tracks() {
            if let Some((state, boxes)) = previous.get(&tr.id) {
                if *state == TrackState::Terminated {
                    // only reinstatement may touch a terminated track, and only by appending
                    let last = *boxes.keys().next_back().unwrap();
                    assert!(tr.boxes.range(..=last).eq(boxes.iter()), "track {} rewritten", tr.id);
                }
            }
        }
        previous = solver.tracks().map(|tr| (tr.id, (tr.state, tr.boxes.clone()))).collect();
        if solver.pending().is_empty() {
            quiet.push(t + 1);
        }
    }
    (solver.finish().unwrap(), quiet)
}

#[test]
fn step_invariants_hold_under_noise() {
    for seed in 0..3 {
        let mut p = noisy_provider("crowded-occlusion", seed, 200);
        let (out, _) = stepped(&mut p, &SolverConfig::default());
        // dense ids in creation order
        let ids: Vec<TrackId> = out.tracks.keys().copied().collect();
        assert_eq!(ids, (1..=ids.len() as TrackId).collect::<Vec<_>>());
        let firsts: Vec<usize> = out.tracks.values().map(|t| t.first_frame().unwrap()).collect();
        assert!(firsts.windows(2).all(|w| w[0] <= w[1]), "{firsts:?}");
    }
}

#[test]
fn prefix_run_is_prefix_of_full_run() {
    let cfg = SolverConfig::default();
    for seed in 0..3 {
        let frames = 180;
        let (full, quiet) = stepped(&mut noisy_provider("crowded-occlusion", seed, frames), &cfg);
        let cuts: Vec<usize> = quiet.iter().copied().step_by(3).collect();
        assert!(cuts.len() >= 3, "too few cut points: {quiet:?}");
        for m in cuts {
            let mut p = Prefix {
                inner: noisy_provider("crowded-occlusion", seed, frames),
                len: m,
            };
            let prefix = run(&mut p, &cfg, None).unwrap();
            assert_eq!(prefix.relabelled(), full.truncated(m).relabelled(), "seed {seed} cut {m}");
        }
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    let cfg = SolverConfig::default();
    let a = run(&mut noisy_provider("crowded", 5, 150), &cfg, None).unwrap();
    let b = run(&mut noisy_provider("crowded", 5, 150), &cfg, None).unwrap();
    assert_eq!(format_results(&a), format_results(&b));
    assert!(!a.is_empty());
}

#[test]
fn empty_provider_gives_empty_output() {
    let mut p = GroundTruthProvider::new(TrajectorySet::new(0, 30.0), BTreeMap::new(), 2.0);
    let out = run(&mut p, &SolverConfig::default(), None).unwrap();
    assert!(out.is_empty());
    assert_eq!(out.sequence_length, 0);
}

#[test]
fn three_separate_walkers_are_recovered_exactly() {
    let mut gt = TrajectorySet::new(50, 30.0);
    for t in 0..50 {
        for (k, y) in [100.0, 400.0, 700.0].iter().enumerate() {
            gt.insert(k as TrackId + 1, t, BBox::new(50.0 + 3.0 * t as f64, *y, 40.0, 100.0), None);
        }
    }
    let mut cfg = SolverConfig::default();
    cfg.reinstate.mode = trackline::ReinstateMode::Disabled;
    let mut p = GroundTruthProvider::new(gt.clone(), BTreeMap::new(), 2.0);
    let out = run(&mut p, &cfg, None).unwrap();
    let with_scores = |s: &TrajectorySet| {
        let mut s = s.clone();
        for t in s.tracks.values_mut() {
            for p in t.points.values_mut() {
                p.score = None;
            }
        }
        s
    };
    assert_eq!(with_scores(&out), gt);
}
