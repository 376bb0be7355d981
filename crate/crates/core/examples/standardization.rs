//! Standardized points under several distributions of the strata, and the
//! hull they fill. Pass a CSV path to use your own table.
//!
//!     cargo run --example standardization -- crates/core/data/synthetic_four_strata.csv

use rothman::prelude::*;
use rothman::standardize::standardized_risk;

fn main() -> Result<()> {
    let table = match std::env::args().nth(1) {
        Some(path) => parse_table(&std::fs::read_to_string(path)?)?,
        None => newcastle_fixture(),
    };
    let k = table.len();
    let choices = [
        ("marginal", StandardDistribution::marginal(&table)),
        ("uniform", StandardDistribution::uniform(k)?),
        ("exposed", StandardDistribution::within_arm(&table, Arm::Exposed)),
        ("unexposed", StandardDistribution::within_arm(&table, Arm::Unexposed)),
    ];
    for (name, dist) in &choices {
        let p = standardized_point(&table, dist)?;
        println!(
            "{name:<10} weights {:.3?} -> point {p:.4}  OR {:.3}",
            dist.weights(),
            Measure::OddsRatio.evaluate(p)?
        );
    }

    // The crude point mixes the two arms with different weights.
    let x = standardized_risk(&table, Arm::Unexposed, &choices[3].1)?;
    let y = standardized_risk(&table, Arm::Exposed, &choices[2].1)?;
    println!("crude      ({x:.4}, {y:.4}) = {:.4}", crude_point(&table));

    let hull = standardized_hull(&stratum_points(&table))?;
    println!("hull: {} vertices, area {:.5}", hull.vertices().len(), hull.area());
    for v in hull.vertices() {
        println!("  {v:.4}");
    }
    Ok(())
}
