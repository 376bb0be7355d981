//! Stratum-specific and crude measures for the built-in smoking table,
//! showing the reversal of direction once age is ignored.
//!
//!     cargo run --example newcastle_measures

use rothman::prelude::*;

fn main() -> Result<()> {
    let table = newcastle_fixture();
    println!(
        "{:<8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "stratum", "x", "y", "RD", "RR", "OR", "CHR"
    );
    let rows = table
        .strata()
        .iter()
        .map(|s| (s.label().to_string(), s.point()))
        .chain([("crude".to_string(), crude_point(&table))]);
    for (label, p) in rows {
        print!("{label:<8} {:>8.3} {:>8.3}", p.x(), p.y());
        for m in Measure::ALL {
            print!(" {:>8.3}", m.evaluate(p)?);
        }
        println!();
    }

    let report = is_confounded(&table, 1e-9)?;
    println!(
        "crude point {:.4} lies {:.4} from the segment of stratum points: {}",
        report.crude,
        report.distance,
        if report.confounded {
            "confounded"
        } else {
            "not confounded"
        }
    );
    Ok(())
}
