//! Fixtures shared by the kernel benchmarks.

use csbp_core::{InteractionFunction, InteractionKind, JumpMeasure};

/// `μ = δ_2`, the measure used throughout the acceptance runs.
pub fn atom_measure() -> JumpMeasure {
    JumpMeasure::atoms(&[(2.0, 1.0)]).expect("valid atom")
}

/// Truncated power-law measure with index 1.5.
pub fn power_measure() -> JumpMeasure {
    JumpMeasure::power(1.0, 1.5, 4.0).expect("valid power law")
}

/// `f(x) = x - x²`, clipped at 2 when `clip` is set.
pub fn logistic(clip: Option<f64>) -> InteractionFunction {
    InteractionFunction::new(InteractionKind::Logistic { a: 1.0, b: 1.0, clip }, 1.0).expect("valid logistic")
}
