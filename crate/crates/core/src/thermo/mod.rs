//! Partition functions, pressure and the Bowen parameter, with the finite-horizon
//! diagnostics that decide which dimension formula applies.

mod diagnostics;
mod partition;
mod pressure;

pub use diagnostics::{
    ab_dimension_bounds, balancing_class, certify_primitivity, classify_rho, diameter_extremes, evenly_varying_check,
    hausdorff_measure_trend, lower_bound_diagnostics, norm_extremes, rho_sequence, theta_bounds, theta_chain_holds,
    AbBounds, BalancingClass, BalancingReport, EvenVariation, FamilyRule, LowerBoundDiagnostics, MeasureTrend,
    MeasureVerdict, ThetaBounds, EVEN_VARIATION_CAP,
};
pub use partition::{
    partition, partition_sequence, NormMemo, PartitionOptions, PartitionValue, Strategy, DEFAULT_BUDGET,
};
pub use pressure::{
    bowen_dimension, bowen_dimension_with, pressure_estimate, BisectionStep, DimensionResult, PressureEstimate,
    PressureOptions, PressureRow, ProxyKind,
};
