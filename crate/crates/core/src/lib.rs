//! Gait optimization for a hub-supported biped.
//!
//! - [`kinematics`]: planar two-link leg with an optional foot.
//! - [`gait`]: spline gait controller with an optional ankle kick.
//! - [`sim`]: kinematic contact simulation and per-period reward.
//! - [`evolution`]: the evolutionary optimizer.
//! - [`harness`]: experiment runner, on-disk artifacts and reports.

pub mod evolution;
pub mod format;
pub mod gait;
pub mod harness;
pub mod kinematics;
pub mod sim;

pub use evolution::{
    run_evolution, Breeder, EvolutionConfig, EvolutionError, EvolutionOutcome, GenerationStats,
    Individual, Origin,
};
pub use gait::{denormalize, GaitError, GaitGenome, GaitParameters, GaitPhase, StrokeState};
pub use harness::{ExperimentPlan, HarnessError, RunRecord};
pub use kinematics::{
    JointAngles, KinematicsError, LegGeometry, Morphology, MorphologyKind, PlanarPoint,
};
pub use sim::{evaluate_gait, Evaluation, PeriodOutcome, SimConfig, SimError};
