//! Simulation and verification kernels for continuous-state branching
//! processes with interaction.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contour;
pub mod error;
pub mod interaction;
pub mod laws;
pub mod measure;
pub mod path;
pub mod population;
pub mod quadrature;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod study;

pub use contour::{
    build_planar_forest, contour_from_forest, direct_contour, girsanov_weight, local_time_profile, ContourParams,
    ContourPath, ForestParams, LocalTimeProfile, PlanarForest,
};
pub use error::{Error, Result};
pub use interaction::{IncrementTable, InteractionFunction, InteractionKind, InteractionSums};
pub use laws::{ModelConstants, ModelLaws, OffspringLaw};
pub use measure::{JumpMeasure, MeasureFamily, MeasureSpec, Region, TailStats};
pub use path::{PathKind, PiecewisePath};
pub use population::{RecordMode, RecordedPath, ScaledModel};
pub use sde::{SdePath, SdeScheme, SdeSolver, SmallJumpMode};
pub use stats::{ks_critical_value, ks_two_sample, moment_stats, MomentStats};
pub use study::{emit, run_study, StudyConfig, StudyOutput, StudyReport};
