//! Rothman diagrams for stratified 2×2 tables.
//!
//! A Rothman diagram plots the risk of disease in the unexposed (x) against
//! the risk in the exposed (y). This crate provides:
//!
//! - [`tables`]: stratified count data, CSV ingestion, stratum and crude points
//! - [`measures`]: risk difference, risk ratio, odds ratio and cumulative
//!   hazard ratio as functions on the unit square, with their contour lines
//! - [`standardize`]: standardized points and hulls, geometric confounding,
//!   extremes of standardized measures and collapsibility verdicts
//! - [`inference`]: grouped-binomial GLMs with identity, log, logit and
//!   complementary log-log links, interaction tests and profile-likelihood
//!   intervals
//! - [`render`]: deterministic SVG diagrams
//! - [`cli`]: the command implementations behind the `rothman` binary
//!
//! ```
//! use rothman::prelude::*;
//!
//! let table = newcastle_fixture();
//! let fit = fit(&table, ModelSpec::new(LinkFunction::Logit, false)).unwrap();
//! let common_or = common_measure(&fit).unwrap();
//! assert!((common_or - 1.537).abs() < 5e-4);
//!
//! let verdict = collapsibility_verdict(&fit.fitted_points, Measure::OddsRatio).unwrap();
//! assert!((verdict.min.value - 1.229).abs() < 5e-3);
//! ```

pub mod cli;
pub mod error;
pub mod inference;
pub mod measures;
pub mod render;
pub mod standardize;
pub mod tables;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::inference::{
        chi2_sf, common_measure, fit, lr_test_interaction, profile_ci, FitResult, LinkFunction, ModelSpec,
    };
    pub use crate::measures::{contour_polyline, contour_y, ContourValue, Measure};
    pub use crate::standardize::{
        collapsibility_verdict, extremize_standardized, grid_extremize, is_confounded, standardized_hull,
        standardized_point, Objective, StandardDistribution, Verdict,
    };
    pub use crate::tables::{
        crude_point, newcastle_fixture, parse_table, stratum_points, Arm, RiskPoint, StratifiedTable,
    };
}
