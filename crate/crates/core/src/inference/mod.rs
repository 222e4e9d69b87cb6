//! Estimation stack for three-arm panels.
//!
//! Outcomes are fitted by weighted saturated regression at the
//! (day, slot, arm) level with HC3 covariance. Families of contrasts are
//! adjusted by the Romano-Wolf step-down procedure on a Rademacher wild
//! bootstrap. Bernoulli standard errors, dispersion ratios, composition
//! splits, balance audits and the two-sample KS check complete the set.

mod audit;
mod bernoulli;
mod bootstrap;
mod composition;
mod contrasts;
mod dispersion;
mod family;
mod ks;
mod stepdown;
mod wls;

pub use audit::{audit_cell, pairwise_audit, AuditCell, AuditReport};
pub use bernoulli::{bernoulli_decomposition, bernoulli_se, Counts};
pub use bootstrap::{
    wild_bootstrap, wild_bootstrap_joint, wild_bootstrap_with, BootstrapDraws, BootstrapOptions, Hypothesis, Signs,
};
pub use composition::{composition_decompose, Composition};
pub use contrasts::{contrast, contrast_vector, contrasts, estimand_arms, fit_decomposition, ContrastResult};
pub use dispersion::{dispersion_ratio, dispersion_report, Collapse, DispersionOutcome, DispersionReport, DispersionRow};
pub use family::{
    aggregate_family, bonferroni_threshold, known_cells, per_cell_family, ArmLevel, CellDecomposition, CellMeasure,
    FamilyKind, FamilyReport, FamilyRow, InferenceOptions, SeMode,
};
pub use ks::{ks_one_sample, ks_two_sample, KsTest};
pub use stepdown::{bootstrap_p, romano_wolf};
pub use wls::{wls_fit, FitResult, Observation};
