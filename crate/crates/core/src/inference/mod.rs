//! Binomial GLM inference for stratified 2×2 tables.

mod chi2;
mod glm;
mod link;
mod profile;

pub use chi2::{chi2_quantile, chi2_sf, ln_gamma, regularized_gamma_q};
pub use glm::{
    cell_loglik, common_measure, empirical_measures, fit, loglik, loglik_at, lr_test_interaction, score, FitResult,
    IterationRecord, LrTest, ModelSpec, EXPOSURE, MAX_ITERATIONS,
};
pub use link::LinkFunction;
pub use profile::{profile_ci, profile_loglik, ProfileCi};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tables::StratifiedTable;

/// One row of the stratum-specific / common summary for a link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSummary {
    pub link: LinkFunction,
    pub stratum_estimates: Vec<f64>,
    pub interaction: Option<LrTest>,
    pub common: f64,
    pub ci: ProfileCi,
    pub common_fit: FitResult,
}

/// Saturated and no-interaction fits, interaction test and profile interval
/// for one link.
pub fn summarize(table: &StratifiedTable, link: LinkFunction, level: f64) -> Result<LinkSummary> {
    let common_fit = fit(table, ModelSpec::new(link, false))?;
    let (stratum_estimates, interaction) = if table.len() >= 2 {
        let full = fit(table, ModelSpec::new(link, true))?;
        let lr = glm::lr_from_fits(&full, &common_fit, table.len());
        (full.stratum_measures()?, Some(lr))
    } else {
        (common_fit.stratum_measures()?, None)
    };
    Ok(LinkSummary {
        link,
        stratum_estimates,
        interaction,
        common: common_measure(&common_fit)?,
        ci: profile_ci(table, link, level)?,
        common_fit,
    })
}
