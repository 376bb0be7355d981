//! Standardization over a stratifying covariate.
//!
//! A standard distribution of the covariate weights the stratum-specific
//! risks in both exposure groups alike. The resulting standardized points
//! fill the convex hull of the stratum points, which is what the confounding
//! and collapsibility checks below are phrased in terms of.

mod extremize;
mod hull;

pub use extremize::{extremize_standardized, grid_extremize, Extremum, Objective};
pub use hull::{standardized_hull, StandardizedHull};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::tables::{crude_point, stratum_points, Arm, RiskPoint, StratifiedTable};

/// Default tolerance for hull membership and for equal measure values.
pub const DEFAULT_TOL: f64 = 1e-9;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Nonnegative stratum weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardDistribution {
    weights: Vec<f64>,
}

impl StandardDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("a standard distribution needs at least one weight"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::domain(format!("weight {w} is not a nonnegative number")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::domain(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0 / k as f64; k])
    }

    /// All weight on stratum `index`.
    pub fn vertex(k: usize, index: usize) -> Result<Self> {
        if index >= k {
            return Err(Error::domain(format!(
                "stratum index {index} out of range for {k} strata"
            )));
        }
        let mut w = vec![0.0; k];
        w[index] = 1.0;
        Self::new(w)
    }

    /// The covariate distribution of the whole table (both arms pooled).
    pub fn marginal(table: &StratifiedTable) -> Self {
        let total = table.total_participants() as f64;
        Self {
            weights: table.strata().iter().map(|s| s.size() as f64 / total).collect(),
        }
    }

    /// The covariate distribution within one exposure group.
    pub fn within_arm(table: &StratifiedTable, arm: Arm) -> Self {
        let total = table.margin(arm).total() as f64;
        Self {
            weights: table
                .strata()
                .iter()
                .map(|s| s.cell(arm).total() as f64 / total)
                .collect(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn check_aligned(&self, k: usize) -> Result<()> {
        if self.weights.len() != k {
            return Err(Error::domain(format!(
                "standard distribution has {} weights but there are {k} strata",
                self.weights.len()
            )));
        }
        Ok(())
    }
}

/// Weighted average of the stratum risks in one arm.
pub fn standardized_risk(table: &StratifiedTable, arm: Arm, dist: &StandardDistribution) -> Result<f64> {
    dist.check_aligned(table.len())?;
    Ok(table
        .strata()
        .iter()
        .zip(&dist.weights)
        .map(|(s, w)| s.cell(arm).risk() * w)
        .sum())
}

/// Standardized risks in the unexposed and exposed under the same `dist`.
pub fn standardized_point(table: &StratifiedTable, dist: &StandardDistribution) -> Result<RiskPoint> {
    let x = standardized_risk(table, Arm::Unexposed, dist)?;
    let y = standardized_risk(table, Arm::Exposed, dist)?;
    Ok(RiskPoint::clamped(x, y))
}

/// Weighted average of arbitrary points (e.g. fitted stratum points).
pub fn combine_points(points: &[RiskPoint], dist: &StandardDistribution) -> Result<RiskPoint> {
    dist.check_aligned(points.len())?;
    let (x, y) = points
        .iter()
        .zip(&dist.weights)
        .fold((0.0, 0.0), |(x, y), (p, w)| (x + w * p.x(), y + w * p.y()));
    Ok(RiskPoint::clamped(x, y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfoundingReport {
    pub confounded: bool,
    /// Distance from the crude point to the standardized hull.
    pub distance: f64,
    pub crude: RiskPoint,
    pub hull: StandardizedHull,
    /// Membership was settled with integer arithmetic on the counts.
    pub exact: bool,
}

/// Whether the crude point lies off the standardized hull by more than `tol`.
pub fn is_confounded(table: &StratifiedTable, tol: f64) -> Result<ConfoundingReport> {
    if table.len() < 2 {
        return Err(Error::precondition("confounding needs at least two strata"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::domain(format!("tolerance {tol} must be positive")));
    }
    let crude = crude_point(table);
    let hull = standardized_hull(&stratum_points(table))?;
    let exact = (table.len() == 2).then(|| crude_on_segment_exact(table));
    let distance = match exact {
        Some(true) => 0.0,
        _ => hull.distance(crude),
    };
    Ok(ConfoundingReport {
        confounded: distance > tol,
        distance,
        crude,
        hull,
        exact: exact.is_some(),
    })
}

/// Two strata: the crude point is the mix of the stratum points with weight
/// `n_1 / N` on the x axis and `m_1 / M` on the y axis (group sizes in the
/// unexposed and exposed). It is on the segment iff one weight serves both
/// axes, or an axis on which the stratum points agree leaves it free.
fn crude_on_segment_exact(table: &StratifiedTable) -> bool {
    let [a, b] = [&table.strata()[0], &table.strata()[1]];
    let same_risk = |p: crate::tables::CellCounts, q: crate::tables::CellCounts| {
        p.cases() as u128 * q.total() as u128 == q.cases() as u128 * p.total() as u128
    };
    let x_equal = same_risk(a.unexposed(), b.unexposed());
    let y_equal = same_risk(a.exposed(), b.exposed());
    if x_equal || y_equal {
        return true;
    }
    let n1 = a.unexposed().total() as u128;
    let n = n1 + b.unexposed().total() as u128;
    let m1 = a.exposed().total() as u128;
    let m = m1 + b.exposed().total() as u128;
    n1 * m == m1 * n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Every standardized point has the common stratum value.
    CollapsibleHere,
    /// Standardized values lie strictly between the null and the common value
    /// away from the hull's vertices.
    AttenuatedTowardNull,
    /// Standardized values leave the band between the null and the common value.
    NotCollapsible,
}

impl Verdict {
    pub fn describe(self) -> &'static str {
        match self {
            Verdict::CollapsibleHere => "collapsible-here",
            Verdict::AttenuatedTowardNull => "attenuated-toward-null",
            Verdict::NotCollapsible => "not-collapsible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapsibilityReport {
    pub measure: Measure,
    /// Common stratum-specific value.
    pub common: f64,
    pub min: Extremum,
    pub max: Extremum,
    pub verdict: Verdict,
}

/// Compares the standardized values of `measure` against its common value
/// at the stratum points.
pub fn collapsibility_verdict(points: &[RiskPoint], measure: Measure) -> Result<CollapsibilityReport> {
    let values = points
        .iter()
        .map(|p| measure.evaluate(*p))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::precondition("no stratum points"));
    }
    let first = values[0];
    if values.iter().any(|v| (v - first).abs() > DEFAULT_TOL) {
        let listed: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
        return Err(Error::precondition(format!(
            "stratum {} values differ ({}); collapsibility needs a common value",
            measure.abbreviation(),
            listed.join(", ")
        )));
    }
    let common = values.iter().sum::<f64>() / values.len() as f64;
    let min = extremize_standardized(points, measure, Objective::Min)?;
    let max = extremize_standardized(points, measure, Objective::Max)?;
    let null = measure.null_value();
    let verdict = if max.value - min.value <= DEFAULT_TOL {
        Verdict::CollapsibleHere
    } else if (common > null && min.value > null && max.value <= common + DEFAULT_TOL)
        || (common < null && max.value < null && min.value >= common - DEFAULT_TOL)
    {
        Verdict::AttenuatedTowardNull
    } else {
        Verdict::NotCollapsible
    };
    Ok(CollapsibilityReport {
        measure,
        common,
        min,
        max,
        verdict,
    })
}
