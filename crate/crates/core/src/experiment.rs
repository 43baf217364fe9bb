//! End-to-end routines over simulated worlds: training the reinstatement
//! classifier, comparing tracker variants and the track-head input ablation.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::mlp::ModelTag;
use crate::learn::track_head::{HeadInput, TrackHead};
use crate::learn::train::TrainConfig;
use crate::metrics::{evaluate, MotReport, DEFAULT_IOU_THRESHOLD};
use crate::reinstate::{harvest_pairs, horizon_frames, train_classifier, Classifier, PairExample, ReinstateMode};
use crate::sim::{crop_samples, CropConfig, Scenario, SimProvider, World};
use crate::solver::{run, run_tracklets, Association, SolverConfig};

/// Tracker configurations compared on simulated worlds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Track cue only; terminated tracks never come back.
    TrackOnly,
    /// Embedding association only, no track cue; threshold reinstatement.
    ReidOnly,
    /// Track cue plus threshold reinstatement.
    Threshold,
    /// Track cue plus the online classifier.
    Online,
    /// Track cue plus the offline classifier post-pass.
    Offline,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::TrackOnly,
        Variant::ReidOnly,
        Variant::Threshold,
        Variant::Online,
        Variant::Offline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::TrackOnly => "track-only",
            Variant::ReidOnly => "reid-only",
            Variant::Threshold => "threshold",
            Variant::Online => "online",
            Variant::Offline => "offline",
        }
    }

    pub fn config(self, base: &SolverConfig) -> SolverConfig {
        let mut cfg = base.clone();
        cfg.association = Association::Track;
        cfg.reinstate.mode = match self {
            Variant::TrackOnly => ReinstateMode::Disabled,
            Variant::ReidOnly => {
                cfg.association = Association::Reid;
                ReinstateMode::Threshold
            }
            Variant::Threshold => ReinstateMode::Threshold,
            Variant::Online => ReinstateMode::Online,
            Variant::Offline => ReinstateMode::Offline,
        };
        cfg
    }
}

/// Labelled candidate pairs from a track-only run over one world.
pub fn harvest_world(world: Arc<World>, base: &SolverConfig) -> Result<Vec<PairExample>> {
    let fps = world.config.fps;
    let gt = world.gt.clone();
    let mut provider = SimProvider::new(world, base.search_ratio);
    let tracks = run_tracklets(&mut provider, base)?;
    let horizon = horizon_frames(base.reinstate.buffer_seconds, base.fps.unwrap_or(fps));
    harvest_pairs(
        &tracks,
        &gt,
        horizon,
        base.pending_frames,
        base.reinstate.k_most_similar,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSummary {
    pub train_pairs: usize,
    pub train_positives: usize,
    pub heldout_pairs: usize,
    pub heldout_positives: usize,
    /// Accuracies are over all harvested pairs, thinned negatives reweighted.
    pub train_accuracy: f64,
    pub heldout_accuracy: f64,
    /// Held-out accuracy restricted to same-track pairs.
    pub heldout_recall: f64,
    pub final_loss: f64,
}

/// Default optimizer settings for the reinstatement classifier.
pub fn classifier_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        lr: 0.01,
        momentum: 0.9,
        batch_size: 64,
        steps: 3000,
        milestones: Vec::new(),
        weight_decay: 1e-4,
        seed,
    }
    .with_two_drops()
}

/// Negative pairs kept per positive one when training.
pub const NEGATIVES_PER_POSITIVE: usize = 8;

/// Keeps every same-track pair and a seeded sample of the others, at most
/// `ratio` per positive (but never fewer than 1000 when available). Also
/// returns how many original negatives each kept one stands for.
pub fn balance_pairs(pairs: Vec<PairExample>, ratio: usize, seed: u64) -> (Vec<PairExample>, f64) {
    let (pos, neg): (Vec<PairExample>, Vec<PairExample>) = pairs.into_iter().partition(|p| p.same);
    let keep = (pos.len() * ratio).max(1000);
    if neg.len() <= keep {
        return (pos.into_iter().chain(neg).collect(), 1.0);
    }
    let weight = neg.len() as f64 / keep as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, neg.len(), keep).into_vec();
    idx.sort_unstable();
    (pos.into_iter().chain(idx.into_iter().map(|i| neg[i])).collect(), weight)
}

fn select(pairs: &[PairExample], tag: ModelTag) -> Vec<(crate::reinstate::ReinstateFeatures, bool)> {
    pairs
        .iter()
        .map(|p| match tag {
            ModelTag::Offline => (p.offline, p.same),
            _ => (p.online, p.same),
        })
        .collect()
}

/// Accuracy with negatives counted `negative_weight` times, and recall on positives.
fn accuracy(
    c: &Classifier,
    data: &[(crate::reinstate::ReinstateFeatures, bool)],
    negative_weight: f64,
) -> Result<(f64, f64)> {
    let (mut ok, mut total, mut pos, mut pos_ok) = (0.0, 0.0, 0usize, 0usize);
    for (f, y) in data {
        let hit = (c.probability(f)? > 0.5) == *y;
        let w = if *y { 1.0 } else { negative_weight };
        total += w;
        if hit {
            ok += w;
        }
        if *y {
            pos += 1;
            pos_ok += hit as usize;
        }
    }
    Ok((
        if total == 0.0 { 0.0 } else { ok / total },
        if pos == 0 { 1.0 } else { pos_ok as f64 / pos as f64 },
    ))
}

/// Trains a classifier on pairs harvested from `train_seeds` of a scenario
/// and measures it on `heldout_seeds`.
pub fn train_reinstater(
    scenario: &Scenario,
    train_seeds: &[u64],
    heldout_seeds: &[u64],
    tag: ModelTag,
    base: &SolverConfig,
    train: &TrainConfig,
) -> Result<(Classifier, ClassifierSummary)> {
    let pairs = TrainingPairs::harvest(scenario, train_seeds, heldout_seeds, base, train.seed)?;
    fit_reinstater(&pairs, tag, train)
}

/// Balanced candidate pairs from training and held-out worlds, shared by
/// the online and offline classifiers.
pub struct TrainingPairs {
    pub train: Vec<PairExample>,
    pub train_weight: f64,
    pub heldout: Vec<PairExample>,
    pub heldout_weight: f64,
}

impl TrainingPairs {
    pub fn harvest(
        scenario: &Scenario,
        train_seeds: &[u64],
        heldout_seeds: &[u64],
        base: &SolverConfig,
        seed: u64,
    ) -> Result<Self> {
        let harvest = |seeds: &[u64]| -> Result<Vec<PairExample>> {
            let mut all = Vec::new();
            for s in seeds {
                let world = Arc::new(World::generate(scenario.config(*s))?);
                all.extend(harvest_world(world, base)?);
            }
            Ok(all)
        };
        let (train, train_weight) = balance_pairs(harvest(train_seeds)?, NEGATIVES_PER_POSITIVE, seed);
        let (heldout, heldout_weight) = balance_pairs(harvest(heldout_seeds)?, NEGATIVES_PER_POSITIVE, seed + 1);
        Ok(Self { train, train_weight, heldout, heldout_weight })
    }
}

pub fn fit_reinstater(
    pairs: &TrainingPairs,
    tag: ModelTag,
    train: &TrainConfig,
) -> Result<(Classifier, ClassifierSummary)> {
    let train_data = select(&pairs.train, tag);
    if train_data.is_empty() {
        return Err(Error::EmptySet("training pair"));
    }
    let heldout_data = select(&pairs.heldout, tag);
    let (classifier, report) = train_classifier(&train_data, pairs.train_weight, train, tag)?;
    let (train_accuracy, _) = accuracy(&classifier, &train_data, pairs.train_weight)?;
    let (heldout_accuracy, heldout_recall) = accuracy(&classifier, &heldout_data, pairs.heldout_weight)?;
    let tail = report.losses.len().saturating_sub(50);
    let final_loss = report.losses[tail..].iter().sum::<f64>() / report.losses[tail..].len().max(1) as f64;
    Ok((
        classifier,
        ClassifierSummary {
            train_pairs: train_data.len(),
            train_positives: train_data.iter().filter(|(_, y)| *y).count(),
            heldout_pairs: heldout_data.len(),
            heldout_positives: heldout_data.iter().filter(|(_, y)| *y).count(),
            train_accuracy,
            heldout_accuracy,
            heldout_recall,
            final_loss,
        },
    ))
}

/// Runs one variant on one world and scores it.
pub fn evaluate_variant(
    world: Arc<World>,
    variant: Variant,
    base: &SolverConfig,
    online: Option<&Classifier>,
    offline: Option<&Classifier>,
) -> Result<MotReport> {
    let cfg = variant.config(base);
    let classifier = match variant {
        Variant::Online => Some(online.ok_or_else(|| Error::Config("online variant needs a classifier".into()))?.clone()),
        Variant::Offline => Some(offline.ok_or_else(|| Error::Config("offline variant needs a classifier".into()))?.clone()),
        _ => None,
    };
    let gt = world.gt.clone();
    let mut provider = SimProvider::new(world, cfg.search_ratio);
    let pred = run(&mut provider, &cfg, classifier)?;
    evaluate(&pred, &gt, DEFAULT_IOU_THRESHOLD)
}

/// Held-out visibility AUC of the two track-head inputs trained on the same crops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadAblation {
    pub siamese_auc: f64,
    pub search_only_auc: f64,
}

pub fn head_ablation(seed: u64) -> Result<HeadAblation> {
    let cfg = CropConfig::default();
    let train = crop_samples(4000, seed, &cfg);
    let heldout = crop_samples(2000, seed.wrapping_add(1 << 32), &cfg);
    let train_cfg = TrainConfig {
        lr: 0.02,
        batch_size: 32,
        steps: 3000,
        seed,
        ..TrainConfig::default()
    }
    .with_two_drops();
    let auc = |input| -> Result<f64> {
        let (head, _) = TrackHead::train(&train, input, &[64, 64], &train_cfg)?;
        head.visibility_auc(&heldout)
    };
    Ok(HeadAblation {
        siamese_auc: auc(HeadInput::Siamese)?,
        search_only_auc: auc(HeadInput::SearchOnly)?,
    })
}
