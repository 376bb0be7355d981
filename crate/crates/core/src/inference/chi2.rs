//! Chi-square tail probabilities via the regularized incomplete gamma function.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(z)` for `z > 0` (Lanczos, g = 7).
pub fn ln_gamma(z: f64) -> f64 {
    if z < 0.5 {
        // reflection
        return (PI / (PI * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
}

const EPS: f64 = 1e-16;
const MAX_TERMS: usize = 10_000;

/// Lower regularized gamma `P(a, x)` by its power series.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_TERMS {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Upper regularized gamma `Q(a, x)` by its continued fraction (modified Lentz).
fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Upper regularized incomplete gamma function `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

/// Upper tail `P(X > x)` of a chi-square variable with `df` degrees of freedom.
pub fn chi2_sf(x: f64, df: u32) -> f64 {
    assert!(df >= 1, "degrees of freedom must be at least 1");
    if x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(0.5 * df as f64, 0.5 * x).clamp(0.0, 1.0)
}

/// The value exceeded with probability `1 - level`, by bisection on [`chi2_sf`].
pub fn chi2_quantile(level: f64, df: u32) -> f64 {
    assert!(level > 0.0 && level < 1.0, "level must be in (0, 1)");
    let target = 1.0 - level;
    let mut hi = df as f64 + 10.0;
    while chi2_sf(hi, df) > target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_sf(mid, df) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_values() {
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(10.5) - 1_133_278.388_7f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn sf_examples() {
        assert_eq!(chi2_sf(0.0, 1), 1.0);
        assert!((chi2_sf(3.8415, 1) - 0.05).abs() < 1e-4);
        assert!((chi2_sf(6.6349, 1) - 0.01).abs() < 1e-4);
        // df = 2 is exponential: exp(-x/2)
        for x in [0.1, 1.0, 5.0, 40.0] {
            assert!((chi2_sf(x, 2) - (-x / 2.0f64).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn quantile_inverts_sf() {
        let q = chi2_quantile(0.95, 1);
        assert!((q - 3.841_458_820_694_124).abs() < 1e-9, "{q}");
        for df in [1, 2, 5, 12] {
            let q = chi2_quantile(0.9, df);
            assert!((chi2_sf(q, df) - 0.1).abs() < 1e-12);
        }
    }
}
