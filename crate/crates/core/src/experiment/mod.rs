//! Paired three-arm Monte Carlo experiments on the delivery model.
//!
//! Outcomes are carried as fractions; callers scale to percentage points
//! for display.

mod allocation;
mod calibration;
mod design;
mod estimands;
mod inversion;
mod monte_carlo;
mod sweep;

pub use allocation::{allocation_objective, optimal_allocation};
pub use calibration::{
    calibrate_knobs, expected_decomposition, win_probability_given_match, Calibration, CalibrationTarget, MatchModel,
    CONCENTRATION_BRACKET,
};
pub use design::{three_arm_design, validate_design, ArmSpec, Creative};
pub use estimands::{
    decompose, mean_var, neyman_decomposition, neyman_var, ArmSummary, Decomposition, Estimand, Method,
};
pub use inversion::{invert_sigma, Inversion, InversionStep, MAX_BISECTIONS};
pub use monte_carlo::{
    monte_carlo, paired_decomposition, run_three_arm_round, summarize, ArmReport, EngagementReport,
    ExperimentConfig, MonteCarloReport, Pairing, RoundRecord,
};
pub use sweep::{bid_sweep, SweepRow};
