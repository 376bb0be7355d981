use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Measure;

/// Binomial link functions. Each one makes the exposure coefficient of a
/// no-interaction model a common value of one association measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFunction {
    Identity,
    Log,
    Logit,
    #[serde(rename = "cloglog")]
    CLogLog,
}

impl LinkFunction {
    pub const ALL: [LinkFunction; 4] = [
        LinkFunction::Identity,
        LinkFunction::Logit,
        LinkFunction::Log,
        LinkFunction::CLogLog,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkFunction::Identity => "identity",
            LinkFunction::Log => "log",
            LinkFunction::Logit => "logit",
            LinkFunction::CLogLog => "cloglog",
        }
    }

    pub fn measure(self) -> Measure {
        match self {
            LinkFunction::Identity => Measure::RiskDifference,
            LinkFunction::Log => Measure::RiskRatio,
            LinkFunction::Logit => Measure::OddsRatio,
            LinkFunction::CLogLog => Measure::CumulativeHazardRatio,
        }
    }

    pub fn for_measure(measure: Measure) -> Self {
        match measure {
            Measure::RiskDifference => LinkFunction::Identity,
            Measure::RiskRatio => LinkFunction::Log,
            Measure::OddsRatio => LinkFunction::Logit,
            Measure::CumulativeHazardRatio => LinkFunction::CLogLog,
        }
    }

    /// `g(p)`.
    pub fn link(self, p: f64) -> f64 {
        match self {
            LinkFunction::Identity => p,
            LinkFunction::Log => p.ln(),
            LinkFunction::Logit => (p / (1.0 - p)).ln(),
            LinkFunction::CLogLog => (-(-p).ln_1p()).ln(),
        }
    }

    /// `g⁻¹(η)`.
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            LinkFunction::Identity => eta,
            LinkFunction::Log => eta.exp(),
            LinkFunction::Logit => {
                if eta >= 0.0 {
                    1.0 / (1.0 + (-eta).exp())
                } else {
                    let e = eta.exp();
                    e / (1.0 + e)
                }
            }
            LinkFunction::CLogLog => -(-eta.exp()).exp_m1(),
        }
    }

    /// First and second derivatives of `g⁻¹` at `η`, given `p = g⁻¹(η)`.
    pub(crate) fn inverse_derivatives(self, eta: f64, p: f64) -> (f64, f64) {
        match self {
            LinkFunction::Identity => (1.0, 0.0),
            LinkFunction::Log => (p, p),
            LinkFunction::Logit => {
                let d = p * (1.0 - p);
                (d, d * (1.0 - 2.0 * p))
            }
            LinkFunction::CLogLog => {
                let u = eta.exp();
                let d = (1.0 - p) * u;
                (d, d * (1.0 - u))
            }
        }
    }

    /// Maps the exposure coefficient onto the scale of [`Self::measure`].
    pub fn coefficient_to_measure(self, b: f64) -> f64 {
        match self {
            LinkFunction::Identity => b,
            _ => b.exp(),
        }
    }
}

impl fmt::Display for LinkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" => Ok(LinkFunction::Identity),
            "log" => Ok(LinkFunction::Log),
            "logit" => Ok(LinkFunction::Logit),
            "cloglog" => Ok(LinkFunction::CLogLog),
            other => Err(Error::usage(format!(
                "unknown link '{other}' (expected identity, log, logit, cloglog)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_inverts() {
        for link in LinkFunction::ALL {
            for p in [0.01, 0.2, 0.5, 0.87, 0.999] {
                let back = link.inverse(link.link(p));
                assert!((back - p).abs() < 1e-13, "{link} {p} {back}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for link in LinkFunction::ALL {
            for eta in [-2.0, -0.7, -0.1] {
                let p = link.inverse(eta);
                let (d1, d2) = link.inverse_derivatives(eta, p);
                let f = |e| link.inverse(e);
                let fd1 = (f(eta + h) - f(eta - h)) / (2.0 * h);
                let fd2 = (f(eta + h) - 2.0 * p + f(eta - h)) / (h * h);
                assert!((d1 - fd1).abs() < 1e-8, "{link}");
                assert!((d2 - fd2).abs() < 1e-4, "{link}");
            }
        }
    }

    #[test]
    fn links_pair_with_measures() {
        for link in LinkFunction::ALL {
            assert_eq!(LinkFunction::for_measure(link.measure()), link);
            assert_eq!(link.name().parse::<LinkFunction>().unwrap(), link);
        }
        assert!("probit".parse::<LinkFunction>().is_err());
    }
}
