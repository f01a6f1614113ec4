//! Tri-hybrid (digital / analog phase shifter / RHS amplitude) holographic
//! beamforming for integrated sensing and communication.

pub mod analysis;
pub mod array;
pub mod baselines;
pub mod error;
pub mod experiments;
pub mod gradients;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod scenario;

pub use error::{Error, Result};
pub use linalg::{CMatrix, RMatrix, C64};
pub use metrics::Problem;
pub use model::{
    Direction, OptimizationResult, OptimizerParams, PenaltyState, Scenario, SystemConfig,
    TraceRecord, TriHybridBeamformer,
};
