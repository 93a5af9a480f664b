//! Controllers that turn (curiosity) reward into behaviour.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::{History, Symbol};

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("invalid controller: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("action {value} out of range for {alphabet} actions")]
    ActionOutOfRange { value: u16, alphabet: u16 },
    #[error("reward is not finite: {0}")]
    NonFiniteReward(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    TabularQ,
    EpsilonGreedyBandit,
    Random,
}

/// Controller parameters as they appear in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    #[serde(default)]
    pub kind: PolicyKind,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Number of most recent observations in the state key.
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_epsilon() -> f64 {
    0.1
}
fn default_alpha() -> f64 {
    0.1
}
fn default_gamma() -> f64 {
    0.95
}
fn default_window() -> usize {
    2
}

impl Default for ControllerSpec {
    fn default() -> Self {
        Self {
            kind: PolicyKind::TabularQ,
            epsilon: default_epsilon(),
            alpha: default_alpha(),
            gamma: default_gamma(),
            window: default_window(),
        }
    }
}

impl ControllerSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(0.0..=1.0).contains(&self.epsilon) {
            errs.push(format!("epsilon: must be in [0, 1], got {}", self.epsilon));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            errs.push(format!("alpha: must be in (0, 1], got {}", self.alpha));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            errs.push(format!("gamma: must be in [0, 1), got {}", self.gamma));
        }
        errs
    }
}

/// Compressor events visible to the controller at a step.
pub mod marker {
    pub const NONE: u8 = 0;
    pub const EPOCH_LAUNCHED: u8 = 1;
    pub const REWARD_DELIVERED: u8 = 2;
}

/// Key of a tabular state: the last few observations plus marker bits.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateFeature {
    pub window: Vec<Symbol>,
    pub marker: u8,
}

impl StateFeature {
    pub fn from_history(h: &History, window: usize, marker: u8) -> Self {
        Self {
            window: h.recent_observations(window),
            marker,
        }
    }

    fn csv_key(&self) -> String {
        let w: Vec<String> = self.window.iter().map(|s| s.0.to_string()).collect();
        format!("{}|{}", w.join(" "), self.marker)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicyState {
    kind: PolicyKind,
    n_actions: u16,
    epsilon: f64,
    alpha: f64,
    gamma: f64,
    q: BTreeMap<StateFeature, Vec<f64>>,
}

impl PolicyState {
    pub fn new(spec: &ControllerSpec, n_actions: u16) -> Result<Self, ControlError> {
        let mut errs = spec.validate();
        if n_actions < 1 {
            errs.push("n_actions: must be >= 1".into());
        }
        if !errs.is_empty() {
            return Err(ControlError::Invalid(errs));
        }
        Ok(Self {
            kind: spec.kind,
            n_actions,
            epsilon: spec.epsilon,
            alpha: spec.alpha,
            gamma: spec.gamma,
            q: BTreeMap::new(),
        })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn key(&self, s: &StateFeature) -> StateFeature {
        match self.kind {
            PolicyKind::EpsilonGreedyBandit => StateFeature {
                window: Vec::new(),
                marker: 0,
            },
            _ => s.clone(),
        }
    }

    /// Action values for `s`; unseen states read as all zeros.
    pub fn q_row(&self, s: &StateFeature) -> Vec<f64> {
        self.q
            .get(&self.key(s))
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.n_actions as usize])
    }

    pub fn set_q(&mut self, s: &StateFeature, a: Symbol, value: f64) {
        let n = self.n_actions as usize;
        let key = self.key(s);
        self.q.entry(key).or_insert_with(|| vec![0.0; n])[a.value()] = value;
    }

    pub fn greedy(&self, s: &StateFeature) -> Symbol {
        let row = self.q_row(s);
        let mut best = 0;
        for (i, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = i;
            }
        }
        Symbol(best as u16)
    }

    /// Epsilon-greedy choice; ties in the greedy branch go to the lowest action.
    pub fn select_action<R: Rng>(&self, s: &StateFeature, rng: &mut R) -> Symbol {
        let explore = match self.kind {
            PolicyKind::Random => true,
            _ => rng.gen::<f64>() < self.epsilon,
        };
        if explore {
            Symbol(rng.gen_range(0..self.n_actions))
        } else {
            self.greedy(s)
        }
    }

    /// One-step Q-learning backup of `q(s, a)`.
    pub fn q_update(
        &mut self,
        s: &StateFeature,
        a: Symbol,
        r: f64,
        next: &StateFeature,
    ) -> Result<(), ControlError> {
        if a.0 >= self.n_actions {
            return Err(ControlError::ActionOutOfRange {
                value: a.0,
                alphabet: self.n_actions,
            });
        }
        if !r.is_finite() {
            return Err(ControlError::NonFiniteReward(r));
        }
        if self.kind == PolicyKind::Random {
            return Ok(());
        }
        let bootstrap = match self.kind {
            PolicyKind::EpsilonGreedyBandit => 0.0,
            _ => self
                .q_row(next)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max),
        };
        let old = self.q_row(s)[a.value()];
        let new = old + self.alpha * (r + self.gamma * bootstrap - old);
        self.set_q(s, a, new);
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.q.len()
    }

    /// Writes `state,action,value` rows in state order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), ControlError> {
        writeln!(w, "state,action,value")?;
        for (s, row) in &self.q {
            for (a, v) in row.iter().enumerate() {
                writeln!(w, "{},{a},{v}", s.csv_key())?;
            }
        }
        Ok(())
    }

    /// Checkpoint as JSON.
    pub fn to_json(&self) -> serde_json::Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            state: &'a StateFeature,
            values: &'a [f64],
        }
        #[derive(Serialize)]
        struct Checkpoint<'a> {
            kind: PolicyKind,
            n_actions: u16,
            epsilon: f64,
            alpha: f64,
            gamma: f64,
            q: Vec<Row<'a>>,
        }
        serde_json::to_string(&Checkpoint {
            kind: self.kind,
            n_actions: self.n_actions,
            epsilon: self.epsilon,
            alpha: self.alpha,
            gamma: self.gamma,
            q: self
                .q
                .iter()
                .map(|(state, values)| Row { state, values })
                .collect(),
        })
    }
}
