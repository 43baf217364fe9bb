use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use trackline::experiment::{self, classifier_train_config};
use trackline::io::{load_config, load_replay, read_mot, read_seqinfo, write_cue_dir, write_results, TrackerConfig, CONFIG_ENV};
use trackline::learn::ModelTag;
use trackline::metrics::{evaluate, MotReport, DEFAULT_IOU_THRESHOLD};
use trackline::sim::{scenario, scenario_names, Population, Scenario, SimProvider, World};
use trackline::{run, Association, Classifier, CueProvider, Error, FileProvider, MlpModel, ReinstateMode, SolverConfig};

use crate::{BenchArgs, EvalArgs, Failure, Mode, SimulateArgs, TrackArgs, TrainArgs};

fn find_scenario(name: &str) -> Result<Scenario, Failure> {
    scenario(name).ok_or_else(|| {
        Failure::input(format!("unknown scenario '{name}'; available: {}", scenario_names().join(", ")))
    })
}

/// Anything that goes wrong while reading the config is a config error.
fn config_error(e: Error) -> Failure {
    Failure::config(e.to_string())
}

fn load_tracker_config(path: Option<&Path>) -> Result<TrackerConfig, Failure> {
    let path = path.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    match path {
        Some(p) => load_config(&p).map_err(config_error),
        None => Ok(TrackerConfig::default()),
    }
}

fn load_classifier(cfg: &TrackerConfig) -> Result<Option<Classifier>, Failure> {
    let want = match cfg.solver.reinstate.mode {
        ReinstateMode::Online => ModelTag::Online,
        ReinstateMode::Offline => ModelTag::Offline,
        _ => return Ok(None),
    };
    let path = cfg
        .classifier_model
        .as_ref()
        .ok_or_else(|| Failure::config("online and offline reinstatement need classifier_model"))?;
    let classifier = MlpModel::<f32>::load(path).and_then(Classifier::new).map_err(config_error)?;
    if classifier.tag() != want {
        return Err(Failure::config(format!(
            "{} is tagged {:?} but reinstate mode needs {:?}",
            path.display(),
            classifier.tag(),
            want
        )));
    }
    Ok(Some(classifier))
}

pub fn track(a: &TrackArgs) -> Result<(), Failure> {
    let t0 = Instant::now();
    let mut cfg = load_tracker_config(a.config.as_deref())?;
    let mut classifier = load_classifier(&cfg)?;
    let (mut provider, has_embeddings): (Box<dyn CueProvider>, bool) = match (&a.replay, &a.det) {
        (Some(dir), _) => (Box::new(load_replay(dir, cfg.solver.search_ratio)?), true),
        (None, Some(det)) => {
            let mut p = FileProvider::load(det, a.emb.as_deref(), cfg.solver.search_ratio)?;
            if let Some(path) = &a.seqinfo {
                let info = read_seqinfo(path)?;
                if let Some(fps) = info.fps {
                    p = p.with_fps(fps);
                }
                if let Some(len) = info.length {
                    if p.len() > len {
                        return Err(Failure::input(format!(
                            "{} has detections up to frame {} but {} says {len} frames",
                            det.display(),
                            p.len(),
                            path.display()
                        )));
                    }
                    p = p.with_len(len);
                }
            }
            (Box::new(p), a.emb.is_some())
        }
        (None, None) => return Err(Failure::input("either --det or --replay is required")),
    };
    if !has_embeddings {
        if cfg.solver.association == Association::Reid {
            return Err(Failure::config("association = reid needs embeddings (--emb)"));
        }
        if cfg.solver.reinstate.mode != ReinstateMode::Disabled {
            eprintln!("warning: no --emb given, reinstatement disabled");
            cfg.solver.reinstate.mode = ReinstateMode::Disabled;
            classifier = None;
        }
    }
    let out = run(&mut *provider, &cfg.solver, classifier)?;
    write_results(&out, &a.out)?;
    println!(
        "{} tracks, {} boxes over {} frames in {:.3} s",
        out.tracks.len(),
        out.box_count(),
        out.sequence_length,
        t0.elapsed().as_secs_f64()
    );
    Ok(())
}

fn score(pred: &Path, gt: &Path, fps: f64) -> Result<MotReport, Failure> {
    let gt = read_mot(gt)?;
    let pred = read_mot(pred)?;
    // a prediction may stop early (trailing frames without tracks), never run past the ground truth
    let (pl, gl) = (pred.num_frames(), gt.num_frames());
    if pl > gl {
        return Err(Error::SequenceMismatch { pred: pl, gt: gl }.into());
    }
    let report = evaluate(&pred.to_trajectories(Some(gl), fps), &gt.to_trajectories(Some(gl), fps), DEFAULT_IOU_THRESHOLD)?;
    Ok(report)
}

pub fn eval(a: &EvalArgs) -> Result<(), Failure> {
    if a.pred.len() != a.gt.len() {
        return Err(Failure::input(format!(
            "{} --pred files but {} --gt files",
            a.pred.len(),
            a.gt.len()
        )));
    }
    if !(a.fps > 0.0) {
        return Err(Failure::input(format!("--fps must be positive, got {}", a.fps)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .map_err(|e| Failure::config(e.to_string()))?;
    let reports: Vec<Result<MotReport, Failure>> =
        pool.install(|| a.pred.par_iter().zip(a.gt.par_iter()).map(|(p, g)| score(p, g, a.fps)).collect());
    let reports = reports.into_iter().collect::<Result<Vec<_>, _>>()?;
    let single = reports.len() == 1;
    if a.json {
        let value = if single {
            serde_json::to_value(&reports[0])
        } else {
            let items: Vec<_> = a
                .pred
                .iter()
                .zip(&a.gt)
                .zip(&reports)
                .map(|((p, g), r)| serde_json::json!({ "pred": p, "gt": g, "report": r }))
                .collect();
            Ok(serde_json::Value::Array(items))
        }
        .map_err(|e| Failure::input(e.to_string()))?;
        println!("{value:#}");
    } else {
        for ((p, g), r) in a.pred.iter().zip(&a.gt).zip(&reports) {
            if !single {
                println!("pred={}\ngt={}", p.display(), g.display());
            }
            println!("{}", r.to_key_values().trim_end());
        }
    }
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let sc = find_scenario(&a.scenario)?;
    let world = Arc::new(World::generate(sc.config(a.seed))?);
    if let Some(path) = &a.out_gt {
        write_results(&world.gt, path)?;
    }
    if let Some(dir) = &a.out_cues {
        write_cue_dir(dir, &SimProvider::new(world.clone(), SolverConfig::default().search_ratio))?;
    }
    println!(
        "{} seed {}: {} tracks, {} boxes over {} frames at {} fps",
        sc.name,
        a.seed,
        world.gt.tracks.len(),
        world.gt.box_count(),
        world.gt.sequence_length,
        world.gt.fps
    );
    Ok(())
}

pub fn train_reinstater(a: &TrainArgs) -> Result<(), Failure> {
    let sc = find_scenario(&a.scenario_set)?;
    // training and held-out worlds never share a seed
    let base_seed = a.seed.wrapping_mul(10_000);
    let train: Vec<u64> = (0..a.train_worlds).map(|i| base_seed + i).collect();
    let heldout: Vec<u64> = (0..a.heldout_worlds).map(|i| base_seed + 5_000 + i).collect();
    let mut tc = classifier_train_config(a.seed);
    if let Some(steps) = a.steps {
        tc.steps = steps;
        tc = tc.with_two_drops();
    }
    if let Some(lr) = a.lr {
        tc.lr = lr;
    }
    let tag = match a.mode {
        Mode::Online => ModelTag::Online,
        Mode::Offline => ModelTag::Offline,
    };
    let (classifier, s) = experiment::train_reinstater(&sc, &train, &heldout, tag, &SolverConfig::default(), &tc)?;
    classifier.model.save(&a.out)?;
    println!(
        "held-out accuracy {:.4} (same-track recall {:.4}) on {} pairs, {} same-track",
        s.heldout_accuracy, s.heldout_recall, s.heldout_pairs, s.heldout_positives
    );
    println!(
        "train accuracy {:.4} on {} pairs, final loss {:.4}",
        s.train_accuracy, s.train_pairs, s.final_loss
    );
    println!("wrote {:?} model to {}", tag, a.out.display());
    Ok(())
}

pub fn bench(a: &BenchArgs) -> Result<(), Failure> {
    let sc = find_scenario("crowded")?;
    let solver = SolverConfig::default();
    println!("{:>6} {:>12} {:>10} {:>12}", "people", "boxes/frame", "us/frame", "frames/s");
    for &people in &a.tracks {
        let mut cfg = sc.config(a.seed);
        cfg.population = Population::Random { people, staggered: false };
        cfg.frames = a.frames;
        let world = Arc::new(World::generate(cfg)?);
        let mut provider = SimProvider::new(world.clone(), solver.search_ratio);
        let t0 = Instant::now();
        run(&mut provider, &solver, None)?;
        let secs = t0.elapsed().as_secs_f64();
        let frames = world.gt.sequence_length.max(1) as f64;
        println!(
            "{:>6} {:>12.1} {:>10.1} {:>12.1}",
            people,
            world.gt.box_count() as f64 / frames,
            1e6 * secs / frames,
            frames / secs
        );
    }
    Ok(())
}
