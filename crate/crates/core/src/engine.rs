//! The curiosity engine: a controller loop and a compressor loop.
//!
//! The compressor loop repeatedly freezes the history, measures the current
//! compressor on it, lets an improver produce a new compressor, measures that
//! one on the same frozen data, and pays the difference out as intrinsic
//! reward. The controller loop acts, observes, collects whatever intrinsic
//! reward has arrived since its last step, and learns.
//!
//! In deterministic mode the compressor work is computed at launch and its
//! result is held back for a simulated duration proportional to the number
//! of predictor evaluations it needed. In threaded mode the compressor runs
//! on its own thread and results arrive whenever they are ready.

use std::collections::VecDeque;
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{evaluate_sequence, Channel, CodecError, CompressionReport, Measure};
use crate::control::{marker, ControlError, PolicyState, StateFeature};
use crate::history::{History, HistoryError, HistoryStep, RewardPair, Symbol};
use crate::prediction::{train, PredictError, Predictor, PredictorSpec};
use crate::worlds::{World, WorldError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("life is over after {0} steps")]
    LifeOver(u64),
    #[error("compressor slot is busy ({0:?})")]
    SlotBusy(EpochPhase),
    #[error("cannot run a compressor epoch on an empty history")]
    EmptyHistory,
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("invalid engine config: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// Maps the old and new code lengths of an epoch to intrinsic reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgressFn {
    #[default]
    Difference,
    ClampedDifference,
}

pub fn intrinsic_reward(c_old: f64, c_new: f64, f: ProgressFn) -> f64 {
    match f {
        ProgressFn::Difference => c_old - c_new,
        ProgressFn::ClampedDifference => (c_old - c_new).max(0.0),
    }
}

/// Combines external and intrinsic reward into the controller's reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Combiner {
    #[default]
    Sum,
    WeightedSum { lambda: f64 },
}

pub fn combine(r_ext: f64, r_int: f64, g: Combiner) -> f64 {
    match g {
        Combiner::Sum => r_ext + r_int,
        Combiner::WeightedSum { lambda } => r_ext + lambda * r_int,
    }
}

/// Produces a hopefully better compressor from the old one and the frozen data.
pub trait Improver: Send + Sync {
    fn improve(&self, p_old: &Predictor, h_old: &[Symbol]) -> Result<Predictor, String>;
}

impl<F> Improver for F
where
    F: Fn(&Predictor, &[Symbol]) -> Result<Predictor, String> + Send + Sync,
{
    fn improve(&self, p_old: &Predictor, h_old: &[Symbol]) -> Result<Predictor, String> {
        self(p_old, h_old)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImproverSpec {
    /// Returns the old compressor unchanged.
    Identity,
    /// Trains a fresh predictor (the given one, or a blank copy of the old
    /// compressor) for one pass over the frozen history.
    #[default]
    Refit,
    RefitAs { predictor: PredictorSpec },
    /// Continues training the old compressor for one more pass.
    Continue,
}

#[derive(Clone, Debug)]
pub enum BuiltImprover {
    Identity,
    Refit(Option<Predictor>),
    Continue,
}

impl ImproverSpec {
    pub fn build(&self, alphabet: usize) -> Result<BuiltImprover, PredictError> {
        Ok(match self {
            ImproverSpec::Identity => BuiltImprover::Identity,
            ImproverSpec::Refit => BuiltImprover::Refit(None),
            ImproverSpec::RefitAs { predictor } => BuiltImprover::Refit(Some(predictor.build(alphabet)?)),
            ImproverSpec::Continue => BuiltImprover::Continue,
        })
    }
}

impl Improver for BuiltImprover {
    fn improve(&self, p_old: &Predictor, h_old: &[Symbol]) -> Result<Predictor, String> {
        match self {
            BuiltImprover::Identity => Ok(p_old.clone()),
            BuiltImprover::Refit(template) => {
                let blank = template.clone().unwrap_or_else(|| p_old.fresh());
                train(&blank, h_old).map_err(|e| e.to_string())
            }
            BuiltImprover::Continue => train(p_old, h_old).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochPhase {
    Idle,
    EvaluatingOld,
    Improving,
    EvaluatingNew,
}

/// The compressor's working state across epochs.
#[derive(Clone, Debug)]
pub struct CompressorSlot {
    p_old: Predictor,
    p_new: Predictor,
    h_old: Option<History>,
    phase: EpochPhase,
    transitions: Vec<EpochPhase>,
}

impl CompressorSlot {
    pub fn new(initial: Predictor) -> Self {
        Self {
            p_old: initial.clone(),
            p_new: initial,
            h_old: None,
            phase: EpochPhase::Idle,
            transitions: Vec::new(),
        }
    }

    /// Compressor the next epoch will start from.
    pub fn current(&self) -> &Predictor {
        &self.p_new
    }

    pub fn previous(&self) -> &Predictor {
        &self.p_old
    }

    pub fn phase(&self) -> EpochPhase {
        self.phase
    }

    pub fn last_snapshot(&self) -> Option<&History> {
        self.h_old.as_ref()
    }

    /// Phases entered during the most recent epoch.
    pub fn transitions(&self) -> &[EpochPhase] {
        &self.transitions
    }

    fn enter(&mut self, phase: EpochPhase) {
        self.phase = phase;
        self.transitions.push(phase);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochSettings {
    pub measure: Measure,
    pub f: ProgressFn,
    pub channel: Channel,
}

/// Outcome of one compressor epoch, before delivery to the controller.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochResult {
    /// Length of the frozen history `h_old`.
    pub snapshot_t: u64,
    pub c_old: CompressionReport,
    pub c_new: CompressionReport,
    pub r_int: f64,
    pub hash_old: u64,
    pub hash_new: u64,
    /// Predictor evaluations spent on both measurements.
    pub eval_cost: u64,
    pub diagnostic: Option<String>,
}

/// An intrinsic reward as delivered at controller step `tau`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CuriosityEvent {
    pub tau: u64,
    pub snapshot_t: u64,
    pub c_old: f64,
    pub c_new: f64,
    pub r_int: f64,
    pub data_bits_new: f64,
    pub eval_cost: u64,
    pub hash_old: u64,
    pub hash_new: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl EpochResult {
    pub fn deliver(self, tau: u64) -> CuriosityEvent {
        CuriosityEvent {
            tau,
            snapshot_t: self.snapshot_t,
            c_old: self.c_old.total_bits,
            c_new: self.c_new.total_bits,
            r_int: self.r_int,
            data_bits_new: self.c_new.data_bits,
            eval_cost: self.eval_cost,
            hash_old: self.hash_old,
            hash_new: self.hash_new,
            diagnostic: self.diagnostic,
        }
    }

    /// Bits per symbol of the new compressor on the frozen history.
    pub fn bits_per_symbol(&self) -> f64 {
        if self.snapshot_t == 0 {
            0.0
        } else {
            self.c_new.data_bits / self.snapshot_t as f64
        }
    }
}

/// FNV-1a over the coded symbols; identifies the data an epoch measured.
pub fn snapshot_hash(seq: &[Symbol]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for s in seq {
        for b in s.0.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Runs one full epoch on the frozen history `h_old`.
pub fn compressor_epoch(
    slot: &mut CompressorSlot,
    h_old: &History,
    improver: &dyn Improver,
    settings: EpochSettings,
) -> Result<EpochResult, EngineError> {
    if slot.phase != EpochPhase::Idle {
        return Err(EngineError::SlotBusy(slot.phase));
    }
    if h_old.is_empty() {
        return Err(EngineError::EmptyHistory);
    }
    slot.transitions.clear();
    slot.p_old = slot.p_new.clone();
    slot.h_old = Some(h_old.snapshot());
    let snapshot_t = h_old.len() as u64;

    slot.enter(EpochPhase::EvaluatingOld);
    let data = settings.channel.extract(h_old);
    let hash_old = snapshot_hash(&data);
    let c_old = match evaluate_sequence(&slot.p_old, &data, settings.measure) {
        Ok(r) => r,
        Err(e) => {
            slot.enter(EpochPhase::Idle);
            return Err(e.into());
        }
    };

    slot.enter(EpochPhase::Improving);
    let candidate = improver.improve(&slot.p_old, &data).and_then(|p| {
        if p.alphabet() == slot.p_old.alphabet() {
            Ok(p)
        } else {
            Err(format!(
                "improver changed the alphabet from {} to {}",
                slot.p_old.alphabet(),
                p.alphabet()
            ))
        }
    });
    let p_new = match candidate {
        Ok(p) => p,
        Err(msg) => {
            slot.p_new = slot.p_old.clone();
            slot.enter(EpochPhase::Idle);
            return Ok(EpochResult {
                snapshot_t,
                c_old,
                c_new: c_old,
                r_int: 0.0,
                hash_old,
                hash_new: hash_old,
                eval_cost: c_old.eval_cost,
                diagnostic: Some(format!("improver failed: {msg}")),
            });
        }
    };

    slot.enter(EpochPhase::EvaluatingNew);
    let data = settings.channel.extract(h_old);
    let hash_new = snapshot_hash(&data);
    let c_new = match evaluate_sequence(&p_new, &data, settings.measure) {
        Ok(r) => r,
        Err(e) => {
            slot.p_new = slot.p_old.clone();
            slot.enter(EpochPhase::Idle);
            return Err(e.into());
        }
    };
    slot.p_new = p_new;
    slot.enter(EpochPhase::Idle);
    Ok(EpochResult {
        snapshot_t,
        c_old,
        c_new,
        r_int: intrinsic_reward(c_old.total_bits, c_new.total_bits, settings.f),
        hash_old,
        hash_new,
        eval_cost: c_old.eval_cost + c_new.eval_cost,
        diagnostic: None,
    })
}

/// Epoch results waiting for their delivery step.
#[derive(Clone, Debug, Default)]
pub struct EventQueue {
    pending: VecDeque<(u64, EpochResult)>,
}

impl EventQueue {
    pub fn push(&mut self, deliver_at: u64, result: EpochResult) {
        let pos = self
            .pending
            .iter()
            .position(|(t, _)| *t > deliver_at)
            .unwrap_or(self.pending.len());
        self.pending.insert(pos, (deliver_at, result));
    }

    /// Removes and returns every result due at or before step `t`.
    pub fn drain_due(&mut self, t: u64) -> Vec<EpochResult> {
        let mut out = Vec::new();
        while self.pending.front().is_some_and(|(d, _)| *d <= t) {
            out.push(self.pending.pop_front().unwrap().1);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerMode {
    #[default]
    Deterministic,
    Threaded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    #[serde(default)]
    pub f: ProgressFn,
    #[serde(default)]
    pub g: Combiner,
    /// Controller steps between compressor epoch launches.
    #[serde(default = "default_interval")]
    pub epoch_interval: u64,
    #[serde(default)]
    pub measure: Measure,
    /// Expose epoch launches and reward deliveries in the controller's state.
    #[serde(default)]
    pub markers: bool,
    #[serde(default)]
    pub mode: SchedulerMode,
    /// Simulated predictor evaluations the compressor performs per controller step.
    #[serde(default = "default_evals_per_step")]
    pub evals_per_step: u64,
    #[serde(default)]
    pub channel: Channel,
    #[serde(default)]
    pub improver: ImproverSpec,
}

fn default_interval() -> u64 {
    64
}

fn default_evals_per_step() -> u64 {
    1024
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            f: ProgressFn::default(),
            g: Combiner::default(),
            epoch_interval: default_interval(),
            measure: Measure::default(),
            markers: false,
            mode: SchedulerMode::default(),
            evals_per_step: default_evals_per_step(),
            channel: Channel::default(),
            improver: ImproverSpec::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.epoch_interval < 1 {
            errs.push("epoch_interval: must be >= 1".into());
        }
        if self.evals_per_step < 1 {
            errs.push("evals_per_step: must be >= 1".into());
        }
        if let Combiner::WeightedSum { lambda } = self.g {
            if !(lambda.is_finite() && lambda > 0.0) {
                errs.push(format!("g.lambda: must be > 0, got {lambda}"));
            }
        }
        errs
    }

    fn settings(&self) -> EpochSettings {
        EpochSettings {
            measure: self.measure,
            f: self.f,
            channel: self.channel,
        }
    }
}

struct Shared {
    history: History,
    stop: bool,
}

/// Compressor loop running on its own thread.
struct ThreadedCompressor {
    shared: Arc<(Mutex<Shared>, Condvar)>,
    rx: Receiver<EpochResult>,
    handle: Option<JoinHandle<()>>,
}

impl ThreadedCompressor {
    fn spawn(
        initial: Predictor,
        improver: BuiltImprover,
        cfg: &EngineConfig,
        history: History,
    ) -> Self {
        let shared = Arc::new((Mutex::new(Shared { history, stop: false }), Condvar::new()));
        let (tx, rx): (Sender<EpochResult>, _) = mpsc::channel();
        let worker_shared = Arc::clone(&shared);
        let interval = cfg.epoch_interval as usize;
        let settings = cfg.settings();
        let handle = std::thread::spawn(move || {
            let mut slot = CompressorSlot::new(initial);
            let mut last_launch = 0usize;
            loop {
                let snapshot = {
                    let (lock, cvar) = &*worker_shared;
                    let mut g = lock.lock().unwrap();
                    while !g.stop && g.history.len() < last_launch + interval {
                        g = cvar.wait(g).unwrap();
                    }
                    if g.stop {
                        return;
                    }
                    g.history.snapshot()
                };
                last_launch = snapshot.len();
                match compressor_epoch(&mut slot, &snapshot, &improver, settings) {
                    Ok(result) => {
                        if tx.send(result).is_err() {
                            return;
                        }
                    }
                    Err(_) => return,
                }
            }
        });
        Self {
            shared,
            rx,
            handle: Some(handle),
        }
    }

    fn publish(&self, history: &History) {
        let (lock, cvar) = &*self.shared;
        lock.lock().unwrap().history = history.snapshot();
        cvar.notify_all();
    }

    fn drain(&self) -> Vec<EpochResult> {
        self.rx.try_iter().collect()
    }
}

impl Drop for ThreadedCompressor {
    fn drop(&mut self) {
        let (lock, cvar) = &*self.shared;
        lock.lock().unwrap().stop = true;
        cvar.notify_all();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// What happened during one controller step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub step: HistoryStep,
    pub room: usize,
    pub delivered: Vec<CuriosityEvent>,
    pub launched: bool,
    /// Bits per symbol of the most recently delivered epoch, if any so far.
    pub latest_bits_per_symbol: Option<f64>,
}

pub struct Engine {
    cfg: EngineConfig,
    world: World,
    policy: PolicyState,
    rng: ChaCha8Rng,
    history: History,
    window: usize,
    slot: CompressorSlot,
    improver: BuiltImprover,
    queue: EventQueue,
    threaded: Option<ThreadedCompressor>,
    next_launch: u64,
    launched: u64,
    delivered: Vec<CuriosityEvent>,
    last_marker: u8,
    latest_bps: Option<f64>,
}

impl Engine {
    /// `window` is the number of recent observations in the controller's state.
    pub fn new(
        world: World,
        policy: PolicyState,
        window: usize,
        initial: Predictor,
        cfg: EngineConfig,
        seed: u64,
    ) -> Result<Self, EngineError> {
        let errs = cfg.validate();
        if !errs.is_empty() {
            return Err(EngineError::Invalid(errs));
        }
        let history = History::new(world.obs_alphabet(), world.act_alphabet())?;
        let want = cfg.channel.alphabet(&history);
        if initial.alphabet() != want {
            return Err(EngineError::Invalid(vec![format!(
                "predictor: alphabet {} does not match the coded channel ({want} symbols)",
                initial.alphabet()
            )]));
        }
        let improver = cfg.improver.build(want)?;
        let threaded = (cfg.mode == SchedulerMode::Threaded).then(|| {
            ThreadedCompressor::spawn(initial.clone(), improver.clone(), &cfg, history.snapshot())
        });
        Ok(Self {
            next_launch: cfg.epoch_interval,
            cfg,
            world,
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            history,
            window,
            slot: CompressorSlot::new(initial),
            improver,
            queue: EventQueue::default(),
            threaded,
            launched: 0,
            delivered: Vec::new(),
            last_marker: marker::NONE,
            latest_bps: None,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn policy(&self) -> &PolicyState {
        &self.policy
    }

    /// Compressor the next deterministic epoch will start from.
    pub fn compressor(&self) -> &Predictor {
        self.slot.current()
    }

    /// Every event delivered to the controller so far.
    pub fn delivered(&self) -> &[CuriosityEvent] {
        &self.delivered
    }

    /// Epochs launched by the deterministic scheduler.
    pub fn epochs_launched(&self) -> u64 {
        self.launched
    }

    /// Epoch results computed but not yet delivered.
    pub fn undelivered(&self) -> usize {
        self.queue.len()
    }

    pub fn is_over(&self) -> bool {
        self.world.is_terminal()
    }

    fn state(&self, marker_bits: u8) -> StateFeature {
        let m = if self.cfg.markers { marker_bits } else { marker::NONE };
        StateFeature::from_history(&self.history, self.window, m)
    }

    /// One controller step.
    pub fn step(&mut self) -> Result<StepOutcome, EngineError> {
        if self.world.is_terminal() {
            return Err(EngineError::LifeOver(self.world.time()));
        }
        let s = self.state(self.last_marker);
        let y = self.policy.select_action(&s, &mut self.rng);
        let (x, r_ext) = self.world.step(y)?;
        let t = self.history.len() as u64 + 1;

        let due = match &self.threaded {
            Some(tc) => tc.drain(),
            None => self.queue.drain_due(t),
        };
        let mut delivered = Vec::with_capacity(due.len());
        for res in due {
            self.latest_bps = Some(res.bits_per_symbol());
            delivered.push(res.deliver(t));
        }
        let r_int: f64 = delivered.iter().map(|e| e.r_int).sum();
        self.history.append(x, y, RewardPair::new(r_ext, r_int))?;
        self.delivered.extend(delivered.iter().cloned());

        let mut marker_bits = if delivered.is_empty() {
            marker::NONE
        } else {
            marker::REWARD_DELIVERED
        };
        let mut launched = false;
        match &self.threaded {
            Some(tc) => tc.publish(&self.history),
            None => {
                if self.queue.is_empty() && t >= self.next_launch {
                    let snapshot = self.history.snapshot();
                    let res = compressor_epoch(
                        &mut self.slot,
                        &snapshot,
                        &self.improver,
                        self.cfg.settings(),
                    )?;
                    let duration = res.eval_cost.div_ceil(self.cfg.evals_per_step).max(1);
                    self.queue.push(t + duration, res);
                    self.next_launch = t + self.cfg.epoch_interval;
                    self.launched += 1;
                    launched = true;
                    marker_bits |= marker::EPOCH_LAUNCHED;
                }
            }
        }

        let next = self.state(marker_bits);
        let r = combine(r_ext, r_int, self.cfg.g);
        self.policy.q_update(&s, y, r, &next)?;
        self.last_marker = marker_bits;

        Ok(StepOutcome {
            step: *self.history.last().unwrap(),
            room: self.world.room(),
            delivered,
            launched,
            latest_bits_per_symbol: self.latest_bps,
        })
    }

    /// Steps until the world's lifetime is exhausted.
    pub fn run_to_end(&mut self, mut on_step: impl FnMut(&StepOutcome)) -> Result<(), EngineError> {
        while !self.is_over() {
            let out = self.step()?;
            on_step(&out);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::evaluate;
    use crate::control::{ControllerSpec, PolicyKind};
    use crate::prediction::PROB_FLOOR;
    use crate::worlds::{make_world, WorldSpec};
    use rand::Rng;

    fn history_of(obs: &[u16], alphabet: u16) -> History {
        let mut h = History::new(alphabet, 2).unwrap();
        for &x in obs {
            h.append(Symbol(x), Symbol(0), RewardPair::default()).unwrap();
        }
        h
    }

    fn settings() -> EpochSettings {
        EpochSettings::default()
    }

    #[test]
    fn reward_functions() {
        assert_eq!(intrinsic_reward(500.0, 450.0, ProgressFn::Difference), 50.0);
        assert_eq!(intrinsic_reward(123.25, 123.25, ProgressFn::Difference), 0.0);
        assert_eq!(intrinsic_reward(450.0, 500.0, ProgressFn::ClampedDifference), 0.0);
        assert_eq!(intrinsic_reward(450.0, 500.0, ProgressFn::Difference), -50.0);
        assert_eq!(combine(0.0, 50.0, Combiner::Sum), 50.0);
        assert_eq!(combine(10.0, 0.0, Combiner::Sum), 10.0);
        assert_eq!(combine(10.0, 50.0, Combiner::WeightedSum { lambda: 0.1 }), 15.0);
        assert_eq!(combine(0.0, 50.0, Combiner::WeightedSum { lambda: 0.5 }), 25.0);
    }

    #[test]
    fn identity_improver_yields_zero() {
        let h = history_of(&[1, 0, 1, 1, 0, 1], 2);
        let mut slot = CompressorSlot::new(Predictor::laplace(2, 1).unwrap());
        let res = compressor_epoch(&mut slot, &h, &BuiltImprover::Identity, settings()).unwrap();
        assert_eq!(res.r_int, 0.0);
        assert_eq!(res.c_old, res.c_new);
        assert_eq!(
            slot.transitions(),
            &[
                EpochPhase::EvaluatingOld,
                EpochPhase::Improving,
                EpochPhase::EvaluatingNew,
                EpochPhase::Idle
            ]
        );
    }

    #[test]
    fn constant_history_uniform_to_laplace() {
        let h = history_of(&[0; 64], 2);
        let mut slot = CompressorSlot::new(Predictor::uniform(2));
        let improver = BuiltImprover::Refit(Some(Predictor::laplace(2, 0).unwrap()));
        let res = compressor_epoch(&mut slot, &h, &improver, settings()).unwrap();
        assert_eq!(res.c_old.data_bits, 64.0);
        // Independent oracle: add-one estimator starting from 64 zeros seen.
        let oracle: f64 = (0..64)
            .map(|k| -((64.0 + k as f64 + 1.0) / (64.0 + k as f64 + 2.0)).log2())
            .sum();
        assert!((res.c_new.data_bits - oracle).abs() < 1e-9);
        assert!((oracle - (129.0f64 / 65.0).log2()).abs() < 1e-9);
        assert!(res.c_new.total_bits < res.c_old.total_bits);
        assert!(res.r_int > 0.0);
        assert_eq!(res.hash_old, res.hash_new);
        assert_eq!(slot.current(), &train(&Predictor::laplace(2, 0).unwrap(), &h.observations()).unwrap());
    }

    #[test]
    fn noise_history_gives_small_progress() {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let obs: Vec<u16> = (0..2000).map(|_| rng.gen_range(0..16)).collect();
            let h = history_of(&obs, 16);
            let trained = train(&Predictor::laplace(16, 0).unwrap(), &h.observations()[..1000]).unwrap();
            let mut slot = CompressorSlot::new(trained);
            let res = compressor_epoch(&mut slot, &h, &BuiltImprover::Refit(None), settings()).unwrap();
            assert!(res.r_int.abs() < 0.05 * h.len() as f64, "seed {seed}: {}", res.r_int);
        }
    }

    #[test]
    fn improver_failure_keeps_old_compressor() {
        let h = history_of(&[1, 1, 1], 2);
        let p0 = Predictor::laplace(2, 0).unwrap();
        let mut slot = CompressorSlot::new(p0.clone());
        let failing = |_: &Predictor, _: &[Symbol]| -> Result<Predictor, String> { Err("diverged".into()) };
        let res = compressor_epoch(&mut slot, &h, &failing, settings()).unwrap();
        assert_eq!(res.r_int, 0.0);
        assert!(res.diagnostic.unwrap().contains("diverged"));
        assert_eq!(slot.current(), &p0);
        assert_eq!(slot.phase(), EpochPhase::Idle);

        let wrong = |_: &Predictor, _: &[Symbol]| -> Result<Predictor, String> { Ok(Predictor::uniform(3)) };
        let res = compressor_epoch(&mut slot, &h, &wrong, settings()).unwrap();
        assert!(res.diagnostic.is_some());
    }

    #[test]
    fn epoch_requires_data() {
        let h = History::new(2, 2).unwrap();
        let mut slot = CompressorSlot::new(Predictor::uniform(2));
        assert!(matches!(
            compressor_epoch(&mut slot, &h, &BuiltImprover::Identity, settings()),
            Err(EngineError::EmptyHistory)
        ));
    }

    #[test]
    fn epochs_on_frozen_history_telescope() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let obs: Vec<u16> = (0..400)
            .map(|i| if rng.gen_bool(0.2) { rng.gen_range(0..4) } else { (i % 4) as u16 })
            .collect();
        let h = history_of(&obs, 4);
        let p0 = Predictor::laplace(4, 2).unwrap();
        let mut slot = CompressorSlot::new(p0.clone());
        let mut total = 0.0;
        for _ in 0..6 {
            total += compressor_epoch(&mut slot, &h, &BuiltImprover::Continue, settings())
                .unwrap()
                .r_int;
        }
        let first = evaluate(&p0, &h, Measure::Length).unwrap().total_bits;
        let last = evaluate(slot.current(), &h, Measure::Length).unwrap().total_bits;
        assert!((total - (first - last)).abs() < 1e-9);
    }

    #[test]
    fn queue_sums_events_due_together() {
        let h = history_of(&[0; 8], 2);
        let mut slot = CompressorSlot::new(Predictor::uniform(2));
        let imp = BuiltImprover::Refit(Some(Predictor::laplace(2, 0).unwrap()));
        let a = compressor_epoch(&mut slot, &h, &imp, settings()).unwrap();
        let b = compressor_epoch(&mut slot, &h, &BuiltImprover::Continue, settings()).unwrap();
        let expected = a.r_int + b.r_int;
        let mut q = EventQueue::default();
        q.push(12, b);
        q.push(11, a);
        assert!(q.drain_due(10).is_empty());
        let due = q.drain_due(12);
        assert_eq!(due.len(), 2);
        assert_eq!(due.iter().map(|e| e.r_int).sum::<f64>(), expected);
        assert!(q.is_empty());
        assert!(q.drain_due(13).is_empty());
    }

    fn engine(world: WorldSpec, lifetime: u64, p0: Predictor, cfg: EngineConfig, seed: u64) -> Engine {
        let w = make_world(&world, lifetime, seed).unwrap();
        let policy = PolicyState::new(&ControllerSpec::default(), w.act_alphabet()).unwrap();
        Engine::new(w, policy, 2, p0, cfg, seed).unwrap()
    }

    fn noise() -> WorldSpec {
        WorldSpec::NoiseTv {
            obs_alphabet: 16,
            act_alphabet: 4,
        }
    }

    #[test]
    fn rewards_are_conserved_and_delivered_once() {
        let mut e = engine(noise(), 3000, Predictor::uniform(16), EngineConfig {
            improver: ImproverSpec::RefitAs {
                predictor: PredictorSpec::Laplace { order: 1, smoothing: 1.0 },
            },
            ..EngineConfig::default()
        }, 5);
        let mut per_step = Vec::new();
        e.run_to_end(|o| per_step.push(o.clone())).unwrap();
        assert_eq!(e.history().len(), 3000);
        let recorded = e.history().total_r_int();
        let emitted: f64 = e.delivered().iter().map(|ev| ev.r_int).sum();
        assert_eq!(recorded, emitted);
        for ev in e.delivered() {
            assert!(ev.tau > ev.snapshot_t);
            assert_eq!(ev.hash_old, ev.hash_new);
            let carrying: Vec<_> = per_step
                .iter()
                .filter(|o| o.delivered.iter().any(|d| d.snapshot_t == ev.snapshot_t))
                .collect();
            assert_eq!(carrying.len(), 1);
            assert_eq!(carrying[0].step.t, ev.tau);
        }
        assert!(per_step.iter().filter(|o| o.delivered.is_empty()).all(|o| o.step.r.r_int == 0.0));
        assert_eq!(e.delivered().len() as u64 + e.undelivered() as u64, e.epochs_launched());
        assert!(matches!(e.step(), Err(EngineError::LifeOver(3000))));
    }

    #[test]
    fn first_epoch_is_delayed_by_its_cost() {
        let cfg = EngineConfig {
            epoch_interval: 10,
            evals_per_step: 4,
            ..EngineConfig::default()
        };
        let mut e = engine(noise(), 40, Predictor::laplace(16, 0).unwrap(), cfg, 1);
        e.run_to_end(|_| {}).unwrap();
        // Launched at t=10 on 10 steps: 20 evaluations take 5 steps.
        assert_eq!(e.delivered()[0].snapshot_t, 10);
        assert_eq!(e.delivered()[0].tau, 15);
        // Next launch waits for the interval after launch.
        assert_eq!(e.delivered()[1].snapshot_t, 20);
    }

    #[test]
    fn identity_improver_gives_zero_reward_in_any_world() {
        for world in [noise(), WorldSpec::DarkRoom { obs_alphabet: 16, act_alphabet: 4 }] {
            let cfg = EngineConfig {
                improver: ImproverSpec::Identity,
                epoch_interval: 16,
                ..EngineConfig::default()
            };
            let mut e = engine(world, 500, Predictor::laplace(16, 1).unwrap(), cfg, 2);
            e.run_to_end(|_| {}).unwrap();
            assert!(e.epochs_launched() > 10);
            assert!(e.history().iter().all(|s| s.r.r_int == 0.0));
        }
    }

    #[test]
    fn deterministic_runs_are_identical() {
        let run = |seed| {
            let mut e = engine(noise(), 1000, Predictor::laplace(16, 0).unwrap(), EngineConfig::default(), seed);
            e.run_to_end(|_| {}).unwrap();
            e.history().to_bytes()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn markers_enter_state_when_enabled() {
        let cfg = EngineConfig {
            markers: true,
            epoch_interval: 8,
            ..EngineConfig::default()
        };
        let mut e = engine(noise(), 200, Predictor::laplace(16, 0).unwrap(), cfg, 4);
        e.run_to_end(|_| {}).unwrap();
        let csv = {
            let mut out = Vec::new();
            e.policy().write_csv(&mut out).unwrap();
            String::from_utf8(out).unwrap()
        };
        assert!(csv.contains("|1,") && csv.contains("|2,"));
    }

    #[test]
    fn threaded_mode_conserves_rewards() {
        let cfg = EngineConfig {
            mode: SchedulerMode::Threaded,
            epoch_interval: 32,
            ..EngineConfig::default()
        };
        let mut e = engine(noise(), 4000, Predictor::laplace(16, 0).unwrap(), cfg, 8);
        e.run_to_end(|_| {}).unwrap();
        let recorded = e.history().total_r_int();
        let emitted: f64 = e.delivered().iter().map(|ev| ev.r_int).sum();
        assert_eq!(recorded, emitted);
        for ev in e.delivered() {
            assert!(ev.tau > ev.snapshot_t);
            assert_eq!(ev.hash_old, ev.hash_new);
        }
    }

    #[test]
    fn random_policy_is_not_updated() {
        let w = make_world(&noise(), 100, 0).unwrap();
        let policy = PolicyState::new(
            &ControllerSpec {
                kind: PolicyKind::Random,
                ..ControllerSpec::default()
            },
            4,
        )
        .unwrap();
        let mut e = Engine::new(w, policy, 2, Predictor::laplace(16, 0).unwrap(), EngineConfig::default(), 0).unwrap();
        e.run_to_end(|_| {}).unwrap();
        assert_eq!(e.policy().states(), 0);
    }

    #[test]
    fn config_is_validated() {
        let w = make_world(&noise(), 10, 0).unwrap();
        let policy = PolicyState::new(&ControllerSpec::default(), 4).unwrap();
        let cfg = EngineConfig {
            epoch_interval: 0,
            g: Combiner::WeightedSum { lambda: -1.0 },
            ..EngineConfig::default()
        };
        let Err(EngineError::Invalid(errs)) =
            Engine::new(w.clone(), policy.clone(), 2, Predictor::uniform(16), cfg, 0)
        else {
            panic!()
        };
        assert_eq!(errs.len(), 2);
        assert!(Engine::new(w, policy, 2, Predictor::uniform(8), EngineConfig::default(), 0).is_err());
        let _ = PROB_FLOOR;
    }
}
