//! Contour lines of the four measures, and which of them are straight.
//!
//!     cargo run --example contour_geometry

use rothman::prelude::*;

fn main() -> Result<()> {
    for measure in Measure::ALL {
        let level = if measure == Measure::RiskDifference { 0.2 } else { 2.0 };
        let contour = ContourValue::new(measure, level)?;
        let line = contour_polyline(contour, 5);
        let straight = measure.is_straight();
        println!(
            "{} = {level} ({}):",
            measure.name(),
            if straight { "straight" } else { "curved" }
        );
        for p in &line {
            match measure.evaluate(*p) {
                Ok(v) => println!("  {p:.4}  value {v:.6}"),
                Err(_) => println!("  {p:.4}  value undefined"),
            }
        }
    }

    // Curved contours bend towards the null line: the midpoint of two points
    // on the OR = 2 contour has an odds ratio between 1 and 2.
    let c = ContourValue::new(Measure::OddsRatio, 2.0)?;
    let a = RiskPoint::new(0.1, contour_y(c, 0.1)?)?;
    let b = RiskPoint::new(0.8, contour_y(c, 0.8)?)?;
    let mid = RiskPoint::new(0.5 * (a.x() + b.x()), 0.5 * (a.y() + b.y()))?;
    println!(
        "midpoint of {a:.3} and {b:.3}: OR {:.4}",
        Measure::OddsRatio.evaluate(mid)?
    );
    Ok(())
}
