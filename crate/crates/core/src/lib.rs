//! Compression-progress curiosity.
//!
//! An agent stores its whole history, a predictor-based compressor keeps
//! trying to explain that history in fewer bits, and every improvement is
//! paid out to the controller as intrinsic reward.

pub mod codec;
pub mod control;
pub mod engine;
pub mod history;
pub mod prediction;
pub mod worlds;

pub use codec::{evaluate, Bitstring, Channel, CompressionReport, Compressor, Measure};
pub use control::{ControllerSpec, PolicyKind, PolicyState, StateFeature};
pub use engine::{
    compressor_epoch, CompressorSlot, CuriosityEvent, Engine, EngineConfig, EngineError, EpochResult,
    ImproverSpec, SchedulerMode,
};
pub use history::{History, HistoryStep, RewardPair, Symbol};
pub use prediction::{Distribution, Predictor, PredictorSpec, SequencePredictor};
pub use worlds::{make_world, World, WorldSpec};
