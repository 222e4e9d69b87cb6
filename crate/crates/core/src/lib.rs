//! Three-arm divergent-delivery laboratory.
//!
//! Two halves share this crate:
//!
//! - [`auction`] and [`experiment`] simulate a matching-then-second-price
//!   delivery model in which the platform's predicted click rate for the focal
//!   advertiser is perturbed by a noise regime (the mediator), and run the
//!   paired three-arm Monte Carlo experiment on top of it.
//! - [`panel`] and [`inference`] ingest cell-level campaign panels and estimate
//!   the natural indirect, natural direct and total effects with weighted
//!   saturated regression, HC3 covariance, wild-bootstrap Romano-Wolf
//!   adjustment and the supporting diagnostics.
//!
//! Arms follow the design table: arm 1 is `(A, S(A))`, arm 2 is `(A, S(B))`
//! and arm 3 is `(B, S(B))`.

pub mod arm;
pub mod auction;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod panel;
pub mod rng;
pub mod special;

pub use arm::Arm;
pub use error::{Error, Result};
