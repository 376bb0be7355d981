mod common;

use common::{central_difference, random_table, LINKS};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rothman::inference::{chi2_quantile, empirical_measures, profile_loglik, score, summarize};
use rothman::prelude::*;

#[test]
fn score_matches_central_differences() {
    let mut rng = StdRng::seed_from_u64(1);
    for link in LINKS {
        let mut checked = 0;
        while checked < 100 {
            let table = random_table(&mut rng);
            let spec = ModelSpec::new(link, rng.random_bool(0.5));
            let base = fit(&table, spec).unwrap().coefficients;
            let beta: Vec<f64> = base.iter().map(|b| b + rng.random_range(-0.05..0.05)).collect();
            let Ok(g) = score(&table, spec, &beta) else { continue };
            let mut feasible = true;
            for (j, gj) in g.iter().enumerate() {
                match central_difference(&table, spec, &beta, j) {
                    Some(fd) => assert!((fd - gj).abs() < 1e-4, "{link} coef {j}: analytic {gj} vs {fd}"),
                    None => feasible = false,
                }
            }
            if feasible {
                checked += 1;
            }
        }
    }
}

#[test]
fn score_vanishes_at_the_optimum() {
    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..50 {
        let table = random_table(&mut rng);
        for link in LINKS {
            for interaction in [false, true] {
                let spec = ModelSpec::new(link, interaction);
                let f = fit(&table, spec).unwrap();
                assert!(f.converged);
                let g = score(&table, spec, &f.coefficients).unwrap();
                let norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(norm < 1e-8, "{link} interaction={interaction}: |score| = {norm}");
            }
        }
    }
}

#[test]
fn saturated_fits_reproduce_empirical_risks() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..50 {
        let table = random_table(&mut rng);
        for link in LINKS {
            let f = fit(&table, ModelSpec::new(link, true)).unwrap();
            for (fp, s) in f.fitted_points.iter().zip(table.strata()) {
                assert!(fp.distance(&s.point()) < 1e-8);
            }
            let closed = empirical_measures(&table, link.measure()).unwrap();
            for (a, b) in f.stratum_measures().unwrap().iter().zip(closed) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn nesting_and_nonnegative_lr() {
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..200 {
        let table = random_table(&mut rng);
        for link in LINKS {
            let lr = lr_test_interaction(&table, link).unwrap();
            assert!(lr.loglik_interaction >= lr.loglik_common - 1e-9);
            assert!(lr.statistic >= 0.0);
            assert!((0.0..=1.0).contains(&lr.p_value));
            assert_eq!(lr.df as usize, table.len() - 1);
        }
    }
}

#[test]
fn common_estimate_within_stratum_range() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..200 {
        let table = random_table(&mut rng);
        for link in LINKS {
            let common = common_measure(&fit(&table, ModelSpec::new(link, false)).unwrap()).unwrap();
            let strata = empirical_measures(&table, link.measure()).unwrap();
            let lo = strata.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = strata.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(
                common >= lo - 1e-6 && common <= hi + 1e-6,
                "{link}: {common} outside [{lo}, {hi}]"
            );
        }
    }
}

#[test]
fn profile_interval_brackets_estimate() {
    let mut rng = StdRng::seed_from_u64(6);
    let critical = chi2_quantile(0.95, 1);
    for _ in 0..15 {
        let table = random_table(&mut rng);
        for link in LINKS {
            let s = summarize(&table, link, 0.95).unwrap();
            let ci = &s.ci;
            assert!(ci.lower < s.common && s.common < ci.upper, "{link}: {ci:?}");
            for (coef, truncated) in [(ci.lower_coef, ci.lower_truncated), (ci.upper_coef, ci.upper_truncated)] {
                if truncated {
                    continue;
                }
                let l = profile_loglik(&table, link, coef).unwrap().unwrap();
                let stat = 2.0 * (s.common_fit.loglik - l);
                assert!((stat - critical).abs() < 1e-6, "{link}: LR {stat} at {coef}");
            }
            assert!((ci.estimate - s.common).abs() < 1e-12);
        }
    }
}

#[test]
fn chi2_against_reference_implementations() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    for df in 1..=6u32 {
        let reference = ChiSquared::new(df as f64).unwrap();
        for i in 0..=500 {
            let x = i as f64 * 0.1;
            let ours = chi2_sf(x, df);
            let theirs = reference.sf(x);
            assert!((ours - theirs).abs() < 1e-10, "df={df} x={x}: {ours} vs {theirs}");
        }
    }
    for i in 0..=5000 {
        let x = i as f64 * 0.01;
        let closed = libm::erfc((x / 2.0).sqrt());
        assert!((chi2_sf(x, 1) - closed).abs() < 1e-10);
    }
}
