//! Measures of association as functions on the unit square, and their
//! contour lines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::RiskPoint;

/// Slack allowed when a contour lands a hair outside `[0, 1]`.
const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    RiskDifference,
    RiskRatio,
    OddsRatio,
    CumulativeHazardRatio,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::RiskDifference,
        Measure::RiskRatio,
        Measure::OddsRatio,
        Measure::CumulativeHazardRatio,
    ];

    pub fn abbreviation(self) -> &'static str {
        match self {
            Measure::RiskDifference => "RD",
            Measure::RiskRatio => "RR",
            Measure::OddsRatio => "OR",
            Measure::CumulativeHazardRatio => "CHR",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::RiskDifference => "risk difference",
            Measure::RiskRatio => "risk ratio",
            Measure::OddsRatio => "odds ratio",
            Measure::CumulativeHazardRatio => "cumulative hazard ratio",
        }
    }

    /// Value of the measure on the null line `x = y`.
    pub fn null_value(self) -> f64 {
        match self {
            Measure::RiskDifference => 0.0,
            _ => 1.0,
        }
    }

    /// Whether every contour of the measure is a straight line.
    pub fn is_straight(self) -> bool {
        matches!(self, Measure::RiskDifference | Measure::RiskRatio)
    }

    /// Checks that `p` lies where the measure is defined.
    pub fn check_domain(self, p: RiskPoint) -> Result<()> {
        let (x, y) = (p.x(), p.y());
        let fail = |rule: &str| {
            Err(Error::domain(format!(
                "{} undefined at ({x}, {y}): requires {rule}",
                self.name()
            )))
        };
        match self {
            Measure::RiskDifference => Ok(()),
            Measure::RiskRatio if x <= 0.0 => fail("x > 0"),
            Measure::RiskRatio => Ok(()),
            Measure::OddsRatio if x <= 0.0 || x >= 1.0 => fail("0 < x < 1"),
            Measure::OddsRatio if y >= 1.0 => fail("y < 1"),
            Measure::OddsRatio => Ok(()),
            // ln(1 - x) vanishes at x = 0, so the ratio also needs x > 0
            Measure::CumulativeHazardRatio if x <= 0.0 || x >= 1.0 => fail("0 < x < 1"),
            Measure::CumulativeHazardRatio if y >= 1.0 => fail("y < 1"),
            Measure::CumulativeHazardRatio => Ok(()),
        }
    }

    pub fn evaluate(self, p: RiskPoint) -> Result<f64> {
        self.check_domain(p)?;
        Ok(self.evaluate_unchecked(p.x(), p.y()))
    }

    pub(crate) fn evaluate_unchecked(self, x: f64, y: f64) -> f64 {
        match self {
            Measure::RiskDifference => y - x,
            Measure::RiskRatio => y / x,
            Measure::OddsRatio => (y * (1.0 - x)) / (x * (1.0 - y)),
            Measure::CumulativeHazardRatio => (-y).ln_1p() / (-x).ln_1p(),
        }
    }

    /// Partial derivatives `(dM/dx, dM/dy)`.
    pub fn gradient(self, p: RiskPoint) -> Result<(f64, f64)> {
        self.check_domain(p)?;
        Ok(self.gradient_unchecked(p.x(), p.y()))
    }

    pub(crate) fn gradient_unchecked(self, x: f64, y: f64) -> (f64, f64) {
        match self {
            Measure::RiskDifference => (-1.0, 1.0),
            Measure::RiskRatio => (-y / (x * x), 1.0 / x),
            Measure::OddsRatio => (-y / ((1.0 - y) * x * x), (1.0 - x) / (x * (1.0 - y) * (1.0 - y))),
            Measure::CumulativeHazardRatio => {
                let lx = (-x).ln_1p();
                let ly = (-y).ln_1p();
                (ly / ((1.0 - x) * lx * lx), -1.0 / ((1.0 - y) * lx))
            }
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbreviation())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rd" | "risk-difference" => Ok(Measure::RiskDifference),
            "rr" | "risk-ratio" => Ok(Measure::RiskRatio),
            "or" | "odds-ratio" => Ok(Measure::OddsRatio),
            "chr" | "hr" | "cumulative-hazard-ratio" => Ok(Measure::CumulativeHazardRatio),
            other => Err(Error::usage(format!(
                "unknown measure '{other}' (expected rd, rr, or, chr)"
            ))),
        }
    }
}

/// Free-function form of [`Measure::evaluate`].
pub fn evaluate(measure: Measure, p: RiskPoint) -> Result<f64> {
    measure.evaluate(p)
}

/// Free-function form of [`Measure::null_value`].
pub fn null_value(measure: Measure) -> f64 {
    measure.null_value()
}

/// Free-function form of [`Measure::is_straight`].
pub fn is_straight(measure: Measure) -> bool {
    measure.is_straight()
}

/// One contour line: the level set `measure = m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourValue {
    measure: Measure,
    m: f64,
}

impl ContourValue {
    pub fn new(measure: Measure, m: f64) -> Result<Self> {
        let ok = match measure {
            Measure::RiskDifference => (-1.0..=1.0).contains(&m),
            _ => m.is_finite() && m >= 0.0,
        };
        if !ok {
            return Err(Error::domain(format!(
                "{} contour level {m} is not attainable",
                measure.name()
            )));
        }
        Ok(Self { measure, m })
    }

    pub fn null(measure: Measure) -> Self {
        Self {
            measure,
            m: measure.null_value(),
        }
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn level(&self) -> f64 {
        self.m
    }

    pub fn is_null(&self) -> bool {
        self.m == self.measure.null_value()
    }

    /// The closed x-interval over which the contour stays inside the unit
    /// square, or `None` if it never enters it.
    pub fn x_interval(&self) -> Option<(f64, f64)> {
        let m = self.m;
        let (lo, hi) = match self.measure {
            Measure::RiskDifference => ((-m).max(0.0), (1.0 - m).min(1.0)),
            Measure::RiskRatio if m > 1.0 => (0.0, 1.0 / m),
            Measure::RiskRatio | Measure::OddsRatio | Measure::CumulativeHazardRatio => (0.0, 1.0),
        };
        (lo <= hi).then_some((lo, hi))
    }
}

impl fmt::Display for ContourValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.measure, self.m)
    }
}

/// The `y` on contour `c` above `x`.
///
/// Defined on the closed square by continuous extension: ratio contours pass
/// through `(0, 0)`, and the odds ratio and cumulative hazard ratio contours
/// with `m > 0` through `(1, 1)`. The zero level of a ratio measure is the
/// floor `y = 0`.
pub fn contour_y(c: ContourValue, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("x = {x} is outside [0, 1]")));
    }
    let m = c.m;
    let y = match c.measure {
        Measure::RiskDifference => x + m,
        Measure::RiskRatio => m * x,
        _ if m == 0.0 => 0.0,
        Measure::OddsRatio => m * x / (1.0 - x + m * x),
        Measure::CumulativeHazardRatio => -(m * (-x).ln_1p()).exp_m1(),
    };
    if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&y) {
        return Err(Error::Range(format!(
            "contour {c} leaves the unit square at x = {x} (y = {y})"
        )));
    }
    Ok(y.clamp(0.0, 1.0))
}

/// `n` points with x evenly spaced across [`ContourValue::x_interval`].
///
/// An empty interval gives an empty list and a single-point interval gives
/// that one point.
pub fn contour_polyline(c: ContourValue, n: usize) -> Vec<RiskPoint> {
    let Some((lo, hi)) = c.x_interval() else {
        return Vec::new();
    };
    if hi - lo <= f64::EPSILON || n < 2 {
        return vec![point_on(c, lo)];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let x = if i + 1 == n { hi } else { lo + step * i as f64 };
            point_on(c, x)
        })
        .collect()
}

fn point_on(c: ContourValue, x: f64) -> RiskPoint {
    let y = contour_y(c, x).expect("x lies inside the contour's interval");
    RiskPoint::clamped(x, y)
}

/// `d²y/dx²` along the contour at `x`.
pub fn contour_second_derivative(c: ContourValue, x: f64) -> f64 {
    let m = c.m;
    match c.measure {
        Measure::RiskDifference | Measure::RiskRatio => 0.0,
        Measure::OddsRatio => -2.0 * m * (m - 1.0) / (1.0 + (m - 1.0) * x).powi(3),
        Measure::CumulativeHazardRatio => -m * (m - 1.0) * (1.0 - x).powf(m - 2.0),
    }
}

/// Whether the single contour `c` is a straight line.
///
/// For the odds ratio and cumulative hazard ratio the second derivative of
/// the contour carries the factor `m (m - 1)`, so only the null contour and
/// the degenerate floor `m = 0` are straight.
pub fn is_straight_at(c: ContourValue) -> bool {
    match c.measure {
        Measure::RiskDifference | Measure::RiskRatio => true,
        Measure::OddsRatio | Measure::CumulativeHazardRatio => c.m * (c.m - 1.0) == 0.0,
    }
}
