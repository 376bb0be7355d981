//! Profile-likelihood confidence intervals for the common measure.

use serde::{Deserialize, Serialize};

use super::chi2::chi2_quantile;
use super::glm::{fit, Model, ModelSpec, EXPOSURE};
use super::link::LinkFunction;
use crate::error::{Error, Result};
use crate::tables::StratifiedTable;

const BISECTION_WIDTH: f64 = 1e-12;
const MAX_EXPANSIONS: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCi {
    pub link: LinkFunction,
    pub level: f64,
    /// Interval on the measure scale.
    pub lower: f64,
    pub upper: f64,
    /// Interval on the coefficient scale.
    pub lower_coef: f64,
    pub upper_coef: f64,
    pub estimate: f64,
    /// An endpoint stopped at the edge of the feasible region before the
    /// likelihood-ratio statistic reached its critical value.
    pub lower_truncated: bool,
    pub upper_truncated: bool,
    pub critical_value: f64,
}

/// Profile log-likelihood of the no-interaction model at exposure
/// coefficient `effect`, or `None` where no coefficients keep every cell
/// probability in (0, 1).
pub fn profile_loglik(table: &StratifiedTable, link: LinkFunction, effect: f64) -> Result<Option<f64>> {
    let model = Model::new(table, ModelSpec::new(link, false));
    Ok(profile_with(&model, table, effect))
}

fn profile_with(model: &Model, table: &StratifiedTable, effect: f64) -> Option<f64> {
    let start = model.restricted_start(table, effect)?;
    let mut free = vec![true; start.len()];
    free[EXPOSURE] = false;
    model.newton(start, &free).ok().map(|o| o.loglik)
}

/// Likelihood-ratio interval for the common measure under `link`.
///
/// Each side expands geometrically from the estimate until the statistic
/// `2 (ℓ̂ - ℓ_profile(b₁))` passes the chi-square(1) critical value, then
/// bisects on `b₁`.
pub fn profile_ci(table: &StratifiedTable, link: LinkFunction, level: f64) -> Result<ProfileCi> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("confidence level {level} not in (0, 1)")));
    }
    let spec = ModelSpec::new(link, false);
    let mle = fit(table, spec)?;
    let model = Model::new(table, spec);
    let critical = chi2_quantile(level, 1);
    let b_hat = mle.exposure_coefficient();
    let lr = |b: f64| profile_with(&model, table, b).map(|l| (2.0 * (mle.loglik - l)).max(0.0));

    let scale = standard_error(&model, &mle.coefficients).unwrap_or(0.1).max(1e-6);
    let (lower_coef, lower_truncated) = search(b_hat, -1.0, scale, critical, &lr);
    let (upper_coef, upper_truncated) = search(b_hat, 1.0, scale, critical, &lr);
    Ok(ProfileCi {
        link,
        level,
        lower: link.coefficient_to_measure(lower_coef),
        upper: link.coefficient_to_measure(upper_coef),
        lower_coef,
        upper_coef,
        estimate: link.coefficient_to_measure(b_hat),
        lower_truncated,
        upper_truncated,
        critical_value: critical,
    })
}

fn standard_error(model: &Model, beta: &[f64]) -> Option<f64> {
    let ev = model.evaluate(beta)?;
    let cov = ev.fisher.try_inverse()?;
    let v = cov[(EXPOSURE, EXPOSURE)];
    (v > 0.0).then(|| v.sqrt())
}

fn search(b_hat: f64, direction: f64, scale: f64, critical: f64, lr: &impl Fn(f64) -> Option<f64>) -> (f64, bool) {
    let inside = |b: f64| lr(b).is_some_and(|v| v <= critical);
    let mut near = b_hat;
    let mut far = None;
    let mut delta = scale;
    for _ in 0..MAX_EXPANSIONS {
        let b = b_hat + direction * delta;
        if inside(b) {
            near = b;
            delta *= 2.0;
        } else {
            far = Some(b);
            break;
        }
    }
    let Some(mut far) = far else {
        return (near, true);
    };
    for _ in 0..200 {
        if (far - near).abs() <= BISECTION_WIDTH {
            break;
        }
        let mid = 0.5 * (near + far);
        if inside(mid) {
            near = mid;
        } else {
            far = mid;
        }
    }
    let truncated = lr(near).is_none_or(|v| v < critical - 1e-6);
    (near, truncated)
}
