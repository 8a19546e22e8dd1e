//! The four subcommands as library calls, returning what they wrote.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};

use navq_core::agents::{facing_towards, run_exploration_phase, Learner, Rule, TrainingEnv};
use navq_core::eval::{
    decay_experiment, run_mission, test_sequence, DecayExperimentResult, MissionSpec, SequenceResult,
};
use navq_core::rng::{derive_seed, rng_from};
use navq_core::worldsim::{self, apply_weather, render_frame, World, FRAME_SIZE};

use crate::config::{MissionSelection, RunConfig};
use crate::formats::{read_json, write_json, Checkpoint, ReportFile, WorldFile};
use crate::render::{frame_pgm, route_svg};
use crate::tables::{write_decay, write_reports, write_training_log};

const TRAIN_STREAM: u64 = 0x7472_6169;
const INIT_STREAM: u64 = 0x696e_6974;

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub struct GeneratedWorld {
    pub world: World,
    pub path: PathBuf,
}

/// Writes `world.json` and, with `frame`, the start-cell camera view as `frame.pgm`.
pub fn generate_world(cfg: &RunConfig, frame: bool) -> Result<GeneratedWorld> {
    let world = generate_world_from(cfg)?;
    out_dir(&cfg.out)?;
    let path = cfg.out.join("world.json");
    write_json(&path, &WorldFile::from_world(&world))?;
    if frame {
        let spec = world.spec();
        let raw = render_frame(&world, spec.start, facing_towards(spec.start, spec.goal));
        let shown = apply_weather(&raw, cfg.weather_condition()?, cfg.seed);
        fs::write(cfg.out.join("frame.pgm"), frame_pgm(&shown, FRAME_SIZE))?;
    }
    Ok(GeneratedWorld { world, path })
}

fn generate_world_from(cfg: &RunConfig) -> Result<World> {
    match &cfg.world_file {
        Some(p) => read_json::<WorldFile>(p)?.into_world(),
        None => Ok(worldsim::generate_world(&cfg.world_spec())?),
    }
}

pub struct TrainResult {
    pub converged: bool,
    pub episodes: usize,
    pub checkpoint: PathBuf,
    pub log: PathBuf,
}

/// Teleport-mode training on the configured world; writes
/// `checkpoint.json`, `training.csv` and the effective `config.txt`.
pub fn train(cfg: &RunConfig) -> Result<TrainResult> {
    let world = generate_world_from(cfg)?;
    let env = TrainingEnv::new(world, cfg.weather_condition()?)?;
    let mut learner = Learner::new(cfg.agent, derive_seed(cfg.seed, INIT_STREAM))?;
    let mut rng = rng_from(cfg.seed, TRAIN_STREAM);
    let outcome = run_exploration_phase(&env, &mut learner, &mut rng)?;
    out_dir(&cfg.out)?;
    let checkpoint = cfg.out.join("checkpoint.json");
    let log = cfg.out.join("training.csv");
    write_json(&checkpoint, &Checkpoint::from_learner(&learner))?;
    write_training_log(&log, &outcome.log)?;
    fs::write(cfg.out.join("config.txt"), cfg.dump())?;
    Ok(TrainResult { converged: outcome.converged, episodes: outcome.episodes(), checkpoint, log })
}

fn checkpoint_path(cfg: &RunConfig) -> PathBuf {
    cfg.checkpoint.clone().unwrap_or_else(|| cfg.out.join("checkpoint.json"))
}

/// Loads the checkpoint with its stored configuration; the run config
/// supplies the test exploration rate and the mission step budget.
pub fn load_learner(cfg: &RunConfig) -> Result<Learner> {
    let path = checkpoint_path(cfg);
    ensure!(path.is_file(), "checkpoint {} not found", path.display());
    let cp: Checkpoint = read_json(&path)?;
    let mut agent = cp.config;
    agent.epsilon_test = cfg.agent.epsilon_test;
    agent.max_steps_per_mission = cfg.agent.max_steps_per_mission;
    cp.into_learner(agent)
}

/// Missions of one evaluation run, labelled.
pub fn mission_list(cfg: &RunConfig, master_seed: u64) -> Result<Vec<(String, MissionSpec)>> {
    let all = || test_sequence(cfg.scale, master_seed);
    Ok(match &cfg.missions {
        MissionSelection::Sequence => all()?,
        MissionSelection::Labels(labels) => {
            let seq = all()?;
            labels
                .iter()
                .map(|l| seq.iter().find(|(s, _)| s == l).cloned().expect("labels validated on parse"))
                .collect()
        }
        MissionSelection::Single => {
            let spec = MissionSpec::new(cfg.domain, cfg.side, cfg.distance, cfg.weather_condition()?, master_seed)?;
            vec![("single".to_string(), spec)]
        }
    })
}

/// Flies the missions in order with one learner carried through.
pub fn evaluate_run(cfg: &RunConfig, master_seed: u64) -> Result<Vec<(SequenceResult, MissionSpec)>> {
    let mut learner = load_learner(cfg)?;
    mission_list(cfg, master_seed)?
        .into_iter()
        .map(|(label, spec)| {
            let report = run_mission(&spec, &mut learner)?;
            Ok((SequenceResult { label, report }, spec))
        })
        .collect()
}

fn write_run(dir: &Path, results: &[(SequenceResult, MissionSpec)]) -> Result<()> {
    out_dir(&dir.join("svg"))?;
    write_reports(&dir.join("report.csv"), results.iter().map(|(r, _)| &r.report))?;
    let file = ReportFile::new(results.iter().map(|(r, _)| r.clone()).collect());
    write_json(&dir.join("report.json"), &file)?;
    for (i, (r, spec)) in results.iter().enumerate() {
        let world = worldsim::generate_world(&spec.world)?;
        let name = format!("{:02}-{}.svg", i + 1, r.label);
        fs::write(dir.join("svg").join(name), route_svg(&r.report, &world))?;
    }
    Ok(())
}

/// Directory of run `k`: the output directory itself for a single run.
pub fn run_dir(cfg: &RunConfig, k: usize) -> PathBuf {
    if cfg.runs <= 1 {
        cfg.out.clone()
    } else {
        cfg.out.join(format!("run-{:03}", k + 1))
    }
}

/// `runs` independent evaluations seeded from the master seed, spread over
/// `workers` threads. Output does not depend on the worker count.
pub fn evaluate(cfg: &RunConfig) -> Result<Vec<Vec<SequenceResult>>> {
    ensure!(cfg.runs >= 1 && cfg.workers >= 1, "runs and workers must be positive");
    ensure!(checkpoint_path(cfg).is_file(), "checkpoint {} not found", checkpoint_path(cfg).display());
    let seed_of = |k: usize| if cfg.runs == 1 { cfg.seed } else { derive_seed(cfg.seed, k as u64) };
    let mut slots: Vec<Option<Result<Vec<(SequenceResult, MissionSpec)>>>> = (0..cfg.runs).map(|_| None).collect();
    let workers = cfg.workers.min(cfg.runs);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    (w..cfg.runs).step_by(workers).map(|k| (k, evaluate_run(cfg, seed_of(k)))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (k, r) in h.join().expect("evaluation worker panicked") {
                slots[k] = Some(r);
            }
        }
    });
    let mut all = Vec::with_capacity(cfg.runs);
    for (k, slot) in slots.into_iter().enumerate() {
        let results = slot.expect("every run assigned")?;
        write_run(&run_dir(cfg, k), &results)?;
        all.push(results.into_iter().map(|(r, _)| r).collect());
    }
    Ok(all)
}

/// Both bootstrap rules under one seed, written to `decay.csv`.
pub fn decay(cfg: &RunConfig) -> Result<(Vec<DecayExperimentResult>, PathBuf)> {
    let dc = cfg.decay_config();
    let results = [Rule::Ddqn, Rule::Eddqn]
        .into_iter()
        .map(|rule| decay_experiment(rule, &dc))
        .collect::<navq_core::Result<Vec<_>>>()?;
    out_dir(&cfg.out)?;
    let path = cfg.out.join("decay.csv");
    write_decay(&path, &results)?;
    Ok((results, path))
}
