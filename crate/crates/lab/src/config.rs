//! Experiment configuration files.
//!
//! A config is a single TOML document. Every field except `seed` has a
//! default, and `curio defaults` prints the fully expanded default document.

use std::path::{Path, PathBuf};

use curio_core::codec::Channel;
use curio_core::control::ControllerSpec;
use curio_core::engine::EngineConfig;
use curio_core::prediction::{Predictor, PredictorSpec};
use curio_core::worlds::{RoomSpec, WorldSpec};
use curio_core::History;
use serde::{Deserialize, Serialize};

use crate::LabError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    #[serde(default = "default_lifetime")]
    pub lifetime: u64,
    /// Independent runs with seeds `seed, seed + 1, ...`.
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default = "default_world")]
    pub world: WorldSpec,
    #[serde(default = "default_predictor")]
    pub predictor: PredictorSpec,
    #[serde(default)]
    pub controller: ControllerSpec,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Also write the controller's Q-table as CSV.
    #[serde(default = "default_true")]
    pub policy_csv: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs/default"),
            policy_csv: true,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_lifetime() -> u64 {
    20_000
}

fn default_replications() -> u32 {
    1
}

fn default_world() -> WorldSpec {
    WorldSpec::TwoRoom {
        obs_alphabet: 16,
        act_alphabet: 4,
        rooms: vec![
            RoomSpec::Noise,
            RoomSpec::Pattern {
                period: 8,
                pattern: None,
            },
        ],
        start_room: 0,
        task_reward: None,
    }
}

fn default_predictor() -> PredictorSpec {
    PredictorSpec::Laplace {
        order: 1,
        smoothing: 1.0,
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            lifetime: default_lifetime(),
            replications: default_replications(),
            world: default_world(),
            predictor: default_predictor(),
            controller: ControllerSpec::default(),
            engine: EngineConfig::default(),
            output: OutputSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| LabError::Config(vec![e.message().to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    /// Size of the symbol stream the compressor codes.
    pub fn channel_alphabet(&self) -> usize {
        let obs = self.world.obs_alphabet();
        match self.engine.channel {
            Channel::Observations => obs as usize,
            Channel::ObservationsAndActions => obs as usize * self.world.act_alphabet() as usize,
        }
    }

    pub fn build_predictor(&self) -> Result<Predictor, LabError> {
        self.predictor
            .build(self.channel_alphabet())
            .map_err(|e| LabError::Config(vec![format!("predictor: {e}")]))
    }

    /// Every problem in the config, each prefixed with the offending field.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.version != CONFIG_VERSION {
            errs.push(format!(
                "version: unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        if self.lifetime == 0 {
            errs.push("lifetime: must be >= 1".into());
        }
        if self.replications == 0 {
            errs.push("replications: must be >= 1".into());
        }
        // Lifetime is reported once, above.
        let world_errs = self.world.validate(self.lifetime.max(1));
        let world_ok = world_errs.is_empty();
        errs.extend(world_errs.into_iter().map(|e| format!("world.{e}")));
        errs.extend(self.controller.validate().into_iter().map(|e| format!("controller.{e}")));
        errs.extend(self.engine.validate().into_iter().map(|e| format!("engine.{e}")));
        if world_ok {
            if let Err(e) = self.predictor.build(self.channel_alphabet()) {
                errs.push(format!("predictor: {e}"));
            }
            if let Err(e) = self.engine.improver.build(self.channel_alphabet()) {
                errs.push(format!("engine.improver: {e}"));
            }
            if History::new(self.world.obs_alphabet(), self.world.act_alphabet()).is_err() {
                errs.push("world: alphabet sizes do not fit the history format".into());
            }
        }
        errs
    }

    pub fn validated(self) -> Result<Self, LabError> {
        let errs = self.validate();
        if errs.is_empty() {
            Ok(self)
        } else {
            Err(LabError::Config(errs))
        }
    }

    /// Seed of replication `i`.
    pub fn replication_seed(&self, i: u32) -> u64 {
        self.seed.wrapping_add(u64::from(i))
    }
}
