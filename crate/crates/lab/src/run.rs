//! Running experiments and writing run directories.
//!
//! A run directory holds:
//!
//! | file              | contents                                         |
//! |-------------------|--------------------------------------------------|
//! | `config.toml`     | the resolved config, with this run's seed        |
//! | `history.hist`    | full binary history                              |
//! | `metrics.jsonl`   | one [`MetricsRow`] per step                      |
//! | `events.jsonl`    | one delivered curiosity event per line           |
//! | `compressor.cprd` | final compressor, canonical serialization        |
//! | `policy.csv`      | Q-table (optional)                               |
//! | `summary.json`    | [`RunSummary`]; written last, marks completion   |

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use curio_core::control::PolicyState;
use curio_core::engine::{Engine, SchedulerMode};
use curio_core::worlds::make_world;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::LabError;

pub const SUMMARY_FILE: &str = "summary.json";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const HISTORY_FILE: &str = "history.hist";
pub const COMPRESSOR_FILE: &str = "compressor.cprd";

/// Steps at the end of life used for the tail statistics.
pub const TAIL_STEPS: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub t: u64,
    pub r_ext: f64,
    pub r_int: f64,
    pub cum_r_int: f64,
    /// Bits per symbol of the most recently delivered epoch.
    pub bits_per_symbol: Option<f64>,
    pub room: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub in_pattern_room: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub whole: f64,
    pub middle_third: f64,
    pub final_tenth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub lifetime: u64,
    pub steps: u64,
    pub total_r_int: f64,
    pub total_r_ext: f64,
    pub final_bits_per_symbol: Option<f64>,
    pub epochs_launched: u64,
    pub events_delivered: u64,
    pub undelivered: u64,
    pub tail_steps: u64,
    pub tail_mean_r_int: f64,
    pub tail_mean_abs_r_int: f64,
    /// Fraction of steps spent in the pattern room, for worlds that have one.
    pub pattern_occupancy: Option<Occupancy>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub summary: RunSummary,
}

fn fraction(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        0.0
    } else {
        flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64
    }
}

pub fn occupancy(in_room: &[bool]) -> Occupancy {
    let n = in_room.len();
    Occupancy {
        whole: fraction(in_room),
        middle_third: fraction(&in_room[n / 3..2 * n / 3]),
        final_tenth: fraction(&in_room[n - n / 10..]),
    }
}

/// Seed of the world's noise stream, kept apart from the controller's.
fn world_seed(seed: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x5851_f42d_4c95_7f2d
}

fn create(path: &Path) -> Result<BufWriter<File>, LabError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| LabError::io(path, e))
}

fn json_line<W: Write, T: Serialize>(w: &mut W, path: &Path, v: &T) -> Result<(), LabError> {
    serde_json::to_writer(&mut *w, v).map_err(|e| LabError::Format(e.to_string()))?;
    w.write_all(b"\n").map_err(|e| LabError::io(path, e))
}

/// One run with the given seed, written to `dir`.
pub fn run_single(cfg: &ExperimentConfig, seed: u64, dir: &Path) -> Result<RunSummary, LabError> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    // A stale summary would make a half-written directory look complete.
    let summary_path = dir.join(SUMMARY_FILE);
    if summary_path.exists() {
        fs::remove_file(&summary_path).map_err(|e| LabError::io(&summary_path, e))?;
    }

    let mut resolved = cfg.clone();
    resolved.seed = seed;
    resolved.replications = 1;
    resolved.output.dir = dir.to_path_buf();
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, resolved.to_toml()).map_err(|e| LabError::io(&cfg_path, e))?;

    let world = make_world(&cfg.world, cfg.lifetime, world_seed(seed))?;
    let pattern_room = world.pattern_room();
    let policy = PolicyState::new(&cfg.controller, world.act_alphabet())?;
    let predictor = cfg.build_predictor()?;
    let mut engine = Engine::new(
        world,
        policy,
        cfg.controller.window,
        predictor,
        cfg.engine.clone(),
        seed,
    )?;

    let metrics_path = dir.join(METRICS_FILE);
    let events_path = dir.join(EVENTS_FILE);
    let mut metrics = create(&metrics_path)?;
    let mut events = create(&events_path)?;
    let mut cum = 0.0;
    let mut in_room = Vec::with_capacity(cfg.lifetime as usize);
    let mut tail = (0.0, 0.0);
    let tail_start = cfg.lifetime.saturating_sub(TAIL_STEPS);
    while !engine.is_over() {
        let out = engine.step()?;
        let s = out.step;
        cum += s.r.r_int;
        if s.t > tail_start {
            tail.0 += s.r.r_int;
            tail.1 += s.r.r_int.abs();
        }
        let here = pattern_room.map(|p| p == out.room);
        in_room.push(here.unwrap_or(false));
        let row = MetricsRow {
            t: s.t,
            r_ext: s.r.r_ext,
            r_int: s.r.r_int,
            cum_r_int: cum,
            bits_per_symbol: out.latest_bits_per_symbol,
            room: out.room,
            in_pattern_room: here,
        };
        json_line(&mut metrics, &metrics_path, &row)?;
        for ev in &out.delivered {
            json_line(&mut events, &events_path, ev)?;
        }
    }
    metrics.flush().map_err(|e| LabError::io(&metrics_path, e))?;
    events.flush().map_err(|e| LabError::io(&events_path, e))?;

    let history = engine.history();
    let hist_path = dir.join(HISTORY_FILE);
    history
        .write_to(create(&hist_path)?)
        .map_err(|e| LabError::Format(e.to_string()))?;
    let comp_path = dir.join(COMPRESSOR_FILE);
    fs::write(&comp_path, engine.compressor().to_bytes()).map_err(|e| LabError::io(&comp_path, e))?;
    if cfg.output.policy_csv {
        let p = dir.join("policy.csv");
        engine
            .policy()
            .write_csv(create(&p)?)
            .map_err(|e| LabError::Format(e.to_string()))?;
    }

    let steps = history.len() as u64;
    let tail_steps = steps.min(TAIL_STEPS);
    let summary = RunSummary {
        seed,
        lifetime: cfg.lifetime,
        steps,
        total_r_int: history.total_r_int(),
        total_r_ext: history.iter().map(|s| s.r.r_ext).sum(),
        final_bits_per_symbol: engine.delivered().last().map(|e| e.data_bits_new / e.snapshot_t as f64),
        epochs_launched: match cfg.engine.mode {
            SchedulerMode::Deterministic => engine.epochs_launched(),
            SchedulerMode::Threaded => engine.delivered().len() as u64,
        },
        events_delivered: engine.delivered().len() as u64,
        undelivered: engine.undelivered() as u64,
        tail_steps,
        tail_mean_r_int: tail.0 / tail_steps as f64,
        tail_mean_abs_r_int: tail.1 / tail_steps as f64,
        pattern_occupancy: pattern_room.map(|_| occupancy(&in_room)),
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| LabError::Format(e.to_string()))?;
    fs::write(&summary_path, text + "\n").map_err(|e| LabError::io(&summary_path, e))?;
    Ok(summary)
}

/// Runs every replication of `cfg` (in parallel) under `cfg.output.dir`.
///
/// With one replication the run directory is `cfg.output.dir` itself;
/// otherwise replication `i` goes to `rep-NNN`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunOutput>, LabError> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(LabError::Config(errs));
    }
    let base = &cfg.output.dir;
    (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let dir = if cfg.replications == 1 {
                base.clone()
            } else {
                base.join(format!("rep-{i:03}"))
            };
            let summary = run_single(cfg, cfg.replication_seed(i), &dir)?;
            Ok(RunOutput { dir, summary })
        })
        .collect()
}
