//! Writes every built-in diagram as an SVG file.
//!
//!     cargo run --example rothman_figures -- out/

use std::path::PathBuf;

use rothman::prelude::*;
use rothman::render::{diagram_from_analysis, render_svg, AnalysisOptions, Figure, HullSource};

fn main() -> Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "figures".into()));
    std::fs::create_dir_all(&dir)?;
    let table = newcastle_fixture();

    for figure in Figure::ALL {
        let path = dir.join(format!("{figure}.svg"));
        std::fs::write(&path, render_svg(&figure.build(&table)?)?)?;
        println!("wrote {}", path.display());
    }

    // A custom panel: observed points, their segment and the crude point.
    let options = AnalysisOptions {
        hull: Some(HullSource::Observed),
        crude: true,
        null_contour: true,
        ..AnalysisOptions::default()
    };
    let spec = diagram_from_analysis(&table, Measure::RiskRatio, &options)?;
    let path = dir.join("custom.svg");
    std::fs::write(&path, render_svg(&spec)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
