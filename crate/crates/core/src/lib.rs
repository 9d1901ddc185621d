pub mod additive;
pub mod baselines;
pub mod cli;
pub mod eigensystems;
pub mod error;
pub mod features;
pub mod projection;
pub mod simulate;
pub mod verify;

pub use additive::{AdditiveFeatures, AdditiveState};
pub use baselines::{krr_fit, Kernel, KrrModel, SgdModel};
pub use eigensystems::{EigenSystem, KernelId, WorkingMeasure};
pub use error::{Error, Result};
pub use features::FeatureMap;
pub use projection::{EstimatorConfig, OnlineProjection, ProjectionState, StepReport};
