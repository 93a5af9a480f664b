use std::fs;
use std::path::Path;

use curio_core::engine::ImproverSpec;
use curio_core::worlds::WorldSpec;
use curio_lab::{run_experiment, run_single, summarize, ExperimentConfig, MetricsRow};

fn config(text: &str, dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml(text).unwrap();
    cfg.output.dir = dir.to_path_buf();
    cfg
}

fn rows(dir: &Path) -> Vec<MetricsRow> {
    fs::read_to_string(dir.join("metrics.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn identity_improver_in_the_dark_earns_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config("version = 1\nseed = 1\nlifetime = 1000\n", tmp.path());
    cfg.world = WorldSpec::DarkRoom {
        obs_alphabet: 16,
        act_alphabet: 4,
    };
    cfg.engine.improver = ImproverSpec::Identity;
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].summary.total_r_int, 0.0);
    assert_eq!(out[0].summary.steps, 1000);
    assert!(out[0].summary.epochs_launched > 0);
    assert!(out[0].summary.pattern_occupancy.is_none());
}

#[test]
fn cumulative_reward_is_conserved() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("version = 1\nseed = 4\nlifetime = 2000\n", tmp.path());
    let s = run_single(&cfg, 4, tmp.path()).unwrap();
    let rows = rows(tmp.path());
    assert_eq!(rows.len(), 2000);
    let mut cum = 0.0;
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.t, i as u64 + 1);
        cum += r.r_int;
        assert_eq!(r.cum_r_int, cum);
    }
    assert_eq!(rows.last().unwrap().cum_r_int, s.total_r_int);
    let events: f64 = fs::read_to_string(tmp.path().join("events.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["r_int"].as_f64().unwrap())
        .sum();
    assert_eq!(events, s.total_r_int);
    assert_eq!(s.events_delivered + s.undelivered, s.epochs_launched);
}

#[test]
fn replications_get_their_own_directories_and_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config("version = 1\nseed = 10\nlifetime = 300\nreplications = 3\n", tmp.path());
    cfg.engine.epoch_interval = 50;
    let out = run_experiment(&cfg).unwrap();
    let seeds: Vec<u64> = out.iter().map(|o| o.summary.seed).collect();
    assert_eq!(seeds, vec![10, 11, 12]);
    for (i, o) in out.iter().enumerate() {
        assert_eq!(o.dir, tmp.path().join(format!("rep-{i:03}")));
        let resolved = ExperimentConfig::load(&o.dir.join("config.toml")).unwrap();
        assert_eq!(resolved.seed, 10 + i as u64);
    }
}

#[test]
fn summaries_aggregate_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("version = 1\nseed = 0\nlifetime = 400\n", tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let sa = run_single(&cfg, 1, &a).unwrap();
    let sb = run_single(&cfg, 2, &b).unwrap();

    let one = summarize(&[a.clone()]).unwrap();
    let row = one.rows.iter().find(|r| r.metric == "total_r_int").unwrap();
    assert_eq!((row.n, row.mean, row.stddev), (1, sa.total_r_int, 0.0));

    let two = summarize(&[a, b]).unwrap();
    let row = two.rows.iter().find(|r| r.metric == "total_r_int").unwrap();
    assert_eq!(row.mean, (sa.total_r_int + sb.total_r_int) / 2.0);
    assert_eq!(row.min, sa.total_r_int.min(sb.total_r_int));
    let names: Vec<&str> = two.rows.iter().map(|r| r.metric.as_str()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(!names.contains(&"seed"));
}

#[test]
fn threaded_mode_runs_to_completion() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config("version = 1\nseed = 2\nlifetime = 3000\n", tmp.path());
    cfg.engine.mode = curio_core::engine::SchedulerMode::Threaded;
    let s = run_single(&cfg, 2, tmp.path()).unwrap();
    assert_eq!(s.steps, 3000);
    assert_eq!(rows(tmp.path()).last().unwrap().cum_r_int, s.total_r_int);
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config("version = 1\nseed = 0\nlifetime = 0\nreplications = 0\n", &tmp.path().join("never"));
    cfg.controller.alpha = 0.0;
    let err = run_experiment(&cfg).unwrap_err();
    let curio_lab::LabError::Config(errs) = err else { panic!() };
    assert_eq!(errs.len(), 3, "{errs:?}");
    assert!(!tmp.path().join("never").exists());
}
