//! Binomial regression with each of the four links: stratum estimates,
//! likelihood-ratio interaction test, common estimate and profile interval.
//!
//!     cargo run --example glm_links

use rothman::inference::summarize;
use rothman::prelude::*;

fn main() -> Result<()> {
    let table = newcastle_fixture();
    for measure in Measure::ALL {
        let link = LinkFunction::for_measure(measure);
        let s = summarize(&table, link, 0.95)?;
        let strata: Vec<String> = s.stratum_estimates.iter().map(|v| format!("{v:.3}")).collect();
        let p = s.interaction.as_ref().map_or(f64::NAN, |t| t.p_value);
        println!(
            "{:<4} {:<9} strata [{}]  p {:.3}  common {:.3}  95% CI ({:.3}, {:.3})",
            measure.abbreviation(),
            link.name(),
            strata.join(", "),
            p,
            s.common,
            s.ci.lower,
            s.ci.upper
        );
    }
    Ok(())
}
