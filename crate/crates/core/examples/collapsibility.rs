//! How far standardized measures move away from a common stratum value.
//!
//!     cargo run --example collapsibility

use rothman::prelude::*;

fn main() -> Result<()> {
    let table = newcastle_fixture();
    for measure in Measure::ALL {
        let fitted = fit(&table, ModelSpec::new(LinkFunction::for_measure(measure), false))?;
        let r = collapsibility_verdict(&fitted.fitted_points, measure)?;
        println!(
            "{:<4} common {:.4}  min {:.4} at {:.3?}  max {:.4}  {}",
            measure.abbreviation(),
            r.common,
            r.min.value,
            r.min.weights,
            r.max.value,
            r.verdict.describe()
        );
        let grid = grid_extremize(&fitted.fitted_points, measure, Objective::Min, 1e-3)?;
        println!("     grid search minimum {:.4}", grid.value);
    }

    // Four strata sharing an odds ratio of 3: the interior of their hull
    // has standardized odds ratios strictly between 1 and 3.
    let c = ContourValue::new(Measure::OddsRatio, 3.0)?;
    let points = [0.05, 0.2, 0.45, 0.7]
        .iter()
        .map(|&x| RiskPoint::new(x, contour_y(c, x)?))
        .collect::<Result<Vec<_>>>()?;
    let min = extremize_standardized(&points, Measure::OddsRatio, Objective::Min)?;
    println!(
        "four strata at OR 3: minimum standardized OR {:.4} with weights {:.3?}",
        min.value, min.weights
    );
    Ok(())
}
