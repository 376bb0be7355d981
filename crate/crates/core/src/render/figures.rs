//! Ready-made diagrams built from an analysis of a stratified table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ContourSpec, DiagramSpec, Glyph, Panel};
use crate::error::{Error, Result};
use crate::inference::{common_measure, empirical_measures, fit, FitResult, LinkFunction, ModelSpec};
use crate::measures::Measure;
use crate::standardize::{combine_points, standardized_hull, StandardDistribution};
use crate::tables::{crude_point, stratum_points, Arm, RiskPoint, StratifiedTable};

/// Which stratum points span the shaded hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HullSource {
    Observed,
    Fitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Observed stratum points as filled circles.
    pub observed: bool,
    /// Fitted no-interaction points as open circles.
    pub fitted: bool,
    /// Dashed contour through each observed stratum point.
    pub stratum_contours: bool,
    /// Solid contour at the common (no-interaction) estimate.
    pub common_contour: bool,
    pub null_contour: bool,
    pub hull: Option<HullSource>,
    pub crude: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            observed: true,
            fitted: true,
            stratum_contours: true,
            common_contour: true,
            null_contour: false,
            hull: None,
            crude: false,
        }
    }
}

/// One panel describing `table` on the scale of `measure`, fitted with the
/// canonical link for that measure.
pub fn diagram_from_analysis(
    table: &StratifiedTable,
    measure: Measure,
    options: &AnalysisOptions,
) -> Result<DiagramSpec> {
    Ok(DiagramSpec::new(vec![analysis_panel(table, measure, options)?]))
}

fn analysis_panel(table: &StratifiedTable, measure: Measure, options: &AnalysisOptions) -> Result<Panel> {
    let observed = stratum_points(table);
    let needs_fit = options.fitted || options.common_contour || options.hull == Some(HullSource::Fitted);
    let common = if needs_fit {
        Some(common_fit(table, measure)?)
    } else {
        None
    };

    let mut panel = Panel::new(measure).with_title(measure.name());
    if options.null_contour {
        panel = panel.contour(ContourSpec::solid(measure.null_value()));
    }
    if options.stratum_contours {
        for m in empirical_measures(table, measure)? {
            panel = panel.contour(ContourSpec::dashed(m));
        }
    }
    if let (true, Some(f)) = (options.common_contour, &common) {
        panel = panel.contour(ContourSpec::solid(common_measure(f)?));
    }
    match options.hull {
        Some(HullSource::Observed) => add_hull(&mut panel, &observed)?,
        Some(HullSource::Fitted) => add_hull(&mut panel, &common.as_ref().expect("fitted").fitted_points)?,
        None => {}
    }
    if options.observed {
        for p in &observed {
            panel = panel.point(*p, Glyph::Filled);
        }
    }
    if let (true, Some(f)) = (options.fitted, &common) {
        for p in &f.fitted_points {
            panel = panel.point(*p, Glyph::Open);
        }
    }
    if options.crude {
        panel = panel.point(crude_point(table), Glyph::Cross);
    }
    Ok(panel)
}

fn common_fit(table: &StratifiedTable, measure: Measure) -> Result<FitResult> {
    fit(table, ModelSpec::new(LinkFunction::for_measure(measure), false))
}

/// A segment for two distinct points, a shaded polygon for more.
fn add_hull(panel: &mut Panel, points: &[RiskPoint]) -> Result<()> {
    let hull = standardized_hull(points)?;
    let v = hull.vertices();
    if hull.is_segment() {
        panel.segments.push([v[0], v[1]]);
    } else if !hull.is_point() {
        panel.hull = Some(v.to_vec());
    }
    Ok(())
}

/// Null contour plus two levels either side of it, for every measure.
pub fn contours_figure() -> DiagramSpec {
    let levels: [(Measure, [f64; 4]); 4] = [
        (Measure::RiskDifference, [-0.5, -0.25, 0.25, 0.5]),
        (Measure::RiskRatio, [0.25, 0.5, 2.0, 4.0]),
        (Measure::OddsRatio, [0.25, 0.5, 2.0, 4.0]),
        // Level 4 loses ~1e-8 of round-trip accuracy near x = 1; 3 does not.
        (Measure::CumulativeHazardRatio, [0.25, 0.5, 2.0, 3.0]),
    ];
    let panels = levels
        .into_iter()
        .map(|(measure, ls)| {
            let mut panel = Panel::new(measure)
                .with_title(measure.name())
                .contour(ContourSpec::solid(measure.null_value()));
            for l in ls {
                panel = panel.contour(ContourSpec::dashed(l));
            }
            panel
        })
        .collect();
    DiagramSpec::new(panels)
}

/// Observed and fitted points with stratum and common contours on each scale.
pub fn modification_figure(table: &StratifiedTable) -> Result<DiagramSpec> {
    let panels = Measure::ALL
        .iter()
        .map(|m| analysis_panel(table, *m, &AnalysisOptions::default()))
        .collect::<Result<_>>()?;
    Ok(DiagramSpec::new(panels))
}

/// Risk-ratio scale, effect modification on/off crossed with confounding
/// on/off. Without modification the stratum points are the fitted
/// common-ratio points; with confounding the crude point standardizes each
/// arm to its own covariate distribution, otherwise both arms share the
/// marginal distribution.
pub fn modconf_figure(table: &StratifiedTable) -> Result<DiagramSpec> {
    let measure = Measure::RiskRatio;
    let observed = stratum_points(table);
    let fitted = common_fit(table, measure)?.fitted_points;
    let unexposed = StandardDistribution::within_arm(table, Arm::Unexposed);
    let exposed = StandardDistribution::within_arm(table, Arm::Exposed);
    let marginal = StandardDistribution::marginal(table);

    let mut panels = Vec::with_capacity(4);
    for (modified, points) in [(true, &observed), (false, &fitted)] {
        for confounded in [true, false] {
            let crude = if confounded {
                let x = combine_points(points, &unexposed)?.x();
                let y = combine_points(points, &exposed)?.y();
                RiskPoint::new(x, y)?
            } else {
                combine_points(points, &marginal)?
            };
            let title = format!(
                "{}, {}",
                if modified { "Modification" } else { "No modification" },
                if confounded { "confounding" } else { "no confounding" }
            );
            let mut panel = Panel::new(measure)
                .with_title(title)
                .contour(ContourSpec::solid(measure.null_value()));
            let mut levels: Vec<f64> = Vec::new();
            for p in points.iter() {
                let m = measure.evaluate(*p)?;
                if !levels.iter().any(|l| (l - m).abs() < 1e-9) {
                    levels.push(m);
                }
            }
            for l in levels {
                panel = panel.contour(ContourSpec::dashed(l));
            }
            add_hull(&mut panel, points)?;
            for p in points.iter() {
                panel = panel.point(*p, Glyph::Filled);
            }
            panels.push(panel.point(crude, Glyph::Cross));
        }
    }
    Ok(DiagramSpec::new(panels))
}

/// Fitted common-effect points, their standardized segment and the common
/// contour: the segment lies on the contour when the measure is collapsible.
fn common_effect_panel(table: &StratifiedTable, measure: Measure) -> Result<Panel> {
    let f = common_fit(table, measure)?;
    let mut panel = Panel::new(measure)
        .with_title(format!("Common {}", measure.name()))
        .contour(ContourSpec::solid(measure.null_value()))
        .contour(ContourSpec::dashed(common_measure(&f)?));
    add_hull(&mut panel, &f.fitted_points)?;
    for p in &f.fitted_points {
        panel = panel.point(*p, Glyph::Filled);
    }
    Ok(panel)
}

/// Common risk difference: standardized points stay on the common contour.
pub fn collapsible_figure(table: &StratifiedTable) -> Result<DiagramSpec> {
    Ok(DiagramSpec::new(vec![common_effect_panel(
        table,
        Measure::RiskDifference,
    )?]))
}

/// Common odds ratio: standardized points leave the common contour.
pub fn noncollapsible_figure(table: &StratifiedTable) -> Result<DiagramSpec> {
    Ok(DiagramSpec::new(vec![common_effect_panel(table, Measure::OddsRatio)?]))
}

/// Observed points, their shaded hull and the crude point.
pub fn hull_figure(table: &StratifiedTable) -> Result<DiagramSpec> {
    let options = AnalysisOptions {
        fitted: false,
        common_contour: false,
        null_contour: true,
        hull: Some(HullSource::Observed),
        crude: true,
        ..AnalysisOptions::default()
    };
    let panel = analysis_panel(table, Measure::OddsRatio, &options)?.with_title("Standardized hull and crude point");
    Ok(DiagramSpec::new(vec![panel]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Contours,
    Modification,
    Modconf,
    Collapsible,
    Noncollapsible,
    Hull,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::Contours,
        Figure::Modification,
        Figure::Modconf,
        Figure::Collapsible,
        Figure::Noncollapsible,
        Figure::Hull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Contours => "contours",
            Figure::Modification => "modification",
            Figure::Modconf => "modconf",
            Figure::Collapsible => "collapsible",
            Figure::Noncollapsible => "noncollapsible",
            Figure::Hull => "hull",
        }
    }

    /// Whether the figure is drawn from table data.
    pub fn needs_table(self) -> bool {
        self != Figure::Contours
    }

    pub fn build(self, table: &StratifiedTable) -> Result<DiagramSpec> {
        match self {
            Figure::Contours => Ok(contours_figure()),
            Figure::Modification => modification_figure(table),
            Figure::Modconf => modconf_figure(table),
            Figure::Collapsible => collapsible_figure(table),
            Figure::Noncollapsible => noncollapsible_figure(table),
            Figure::Hull => hull_figure(table),
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::usage(format!(
                    "unknown figure '{s}' (expected contours, modification, modconf, collapsible, noncollapsible, hull)"
                ))
            })
    }
}
