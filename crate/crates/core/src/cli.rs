//! Command implementations behind the `rothman` binary.
//!
//! Each `cmd_*` function takes library values and returns the report text, so
//! the commands can be exercised without spawning a process. [`execute`]
//! wires parsed arguments to them.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{fit, summarize, FitResult, LinkFunction, LinkSummary, LrTest, ModelSpec, ProfileCi};
use crate::measures::Measure;
use crate::render::{render_svg, Figure};
use crate::standardize::{
    collapsibility_verdict, grid_extremize, is_confounded, standardized_hull, standardized_point, CollapsibilityReport,
    Objective, StandardDistribution, DEFAULT_TOL,
};
use crate::tables::{crude_point, newcastle_fixture, parse_table, RiskPoint, StratifiedTable};

/// Grid spacing used by `collapse --grid-oracle`.
pub const GRID_ORACLE_RESOLUTION: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "rothman", version, about = "Rothman diagrams for stratified 2x2 tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    /// Smoking and 20-year mortality by age group.
    Newcastle,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// CSV table: stratum,exposed_cases,exposed_total,unexposed_cases,unexposed_total
    #[arg(long, value_name = "PATH", conflicts_with = "fixture")]
    pub input: Option<PathBuf>,
    /// Built-in table instead of --input.
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
}

impl InputArgs {
    pub fn load(&self) -> Result<StratifiedTable> {
        match (&self.input, self.fixture) {
            (Some(path), None) => parse_table(&std::fs::read_to_string(path)?),
            (None, Some(Fixture::Newcastle)) => Ok(newcastle_fixture()),
            (Some(_), Some(_)) => Err(Error::usage("give either --input or --fixture, not both")),
            (None, None) => Err(Error::usage(
                "an input table is required (--input PATH or --fixture newcastle)",
            )),
        }
    }

    fn is_given(&self) -> bool {
        self.input.is_some() || self.fixture.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkChoice {
    All,
    One(LinkFunction),
}

impl LinkChoice {
    /// Links in measure order: identity, log, logit, cloglog.
    pub fn links(self) -> Vec<LinkFunction> {
        match self {
            LinkChoice::All => Measure::ALL.iter().map(|m| LinkFunction::for_measure(*m)).collect(),
            LinkChoice::One(l) => vec![l],
        }
    }
}

fn parse_link_choice(s: &str) -> std::result::Result<LinkChoice, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(LinkChoice::All);
    }
    s.parse().map(LinkChoice::One).map_err(|e: Error| e.to_string())
}

fn parse_measure(s: &str) -> std::result::Result<Measure, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_figure(s: &str) -> std::result::Result<Figure, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// How to weight the strata when standardizing.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightsArg {
    /// Pooled covariate distribution of the whole table.
    Marginal,
    Uniform,
    /// Covariate distribution among the exposed.
    Exposed,
    /// Covariate distribution among the unexposed.
    Unexposed,
    Explicit(Vec<f64>),
}

impl WeightsArg {
    pub fn resolve(&self, table: &StratifiedTable) -> Result<StandardDistribution> {
        use crate::tables::Arm;
        match self {
            WeightsArg::Marginal => Ok(StandardDistribution::marginal(table)),
            WeightsArg::Uniform => StandardDistribution::uniform(table.len()),
            WeightsArg::Exposed => Ok(StandardDistribution::within_arm(table, Arm::Exposed)),
            WeightsArg::Unexposed => Ok(StandardDistribution::within_arm(table, Arm::Unexposed)),
            WeightsArg::Explicit(w) => StandardDistribution::new(w.clone()),
        }
    }
}

impl std::str::FromStr for WeightsArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "marginal" => Ok(WeightsArg::Marginal),
            "uniform" => Ok(WeightsArg::Uniform),
            "exposed" => Ok(WeightsArg::Exposed),
            "unexposed" => Ok(WeightsArg::Unexposed),
            _ => s
                .split(',')
                .map(|w| {
                    w.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("invalid weight '{}'", w.trim()))
                })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(WeightsArg::Explicit),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stratum-specific and crude values of all four measures.
    Measures {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Binomial GLM fits: stratum estimates, interaction test, common estimate and profile interval.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        /// identity, log, logit, cloglog or all.
        #[arg(long, default_value = "all", value_parser = parse_link_choice)]
        link: LinkChoice,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Standardized risks under a chosen distribution of the strata.
    Standardize {
        #[command(flatten)]
        input: InputArgs,
        /// marginal, uniform, exposed, unexposed, or comma-separated weights.
        #[arg(long, default_value = "marginal")]
        weights: WeightsArg,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Range of a standardized measure over the hull of the fitted common-effect points.
    Collapse {
        #[command(flatten)]
        input: InputArgs,
        /// rd, rr, or, chr.
        #[arg(long, value_parser = parse_measure)]
        measure: Measure,
        /// Cross-check the optimizer against a brute-force grid search.
        #[arg(long)]
        grid_oracle: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Draw a diagram as SVG.
    Plot {
        /// contours, modification, modconf, collapsible, noncollapsible, hull.
        #[arg(value_parser = parse_figure)]
        figure: Figure,
        #[command(flatten)]
        input: InputArgs,
        /// svg, or json for the diagram description.
        #[arg(long, value_enum, default_value = "svg")]
        format: Format,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
}

impl Command {
    pub fn output(&self) -> Option<&PathBuf> {
        match self {
            Command::Measures { output, .. }
            | Command::Fit { output, .. }
            | Command::Standardize { output, .. }
            | Command::Collapse { output, .. }
            | Command::Plot { output, .. } => output.as_ref(),
        }
    }
}

/// Runs a parsed command and returns its report.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Measures { input, format, .. } => cmd_measures(&input.load()?, *format),
        Command::Fit {
            input,
            link,
            level,
            format,
            ..
        } => cmd_fit(&input.load()?, *link, *level, *format),
        Command::Standardize {
            input, weights, format, ..
        } => {
            let table = input.load()?;
            check_format(*format, &[Format::Text, Format::Json], "standardize")?;
            let dist = weights.resolve(&table)?;
            cmd_standardize(&table, &dist, *format)
        }
        Command::Collapse {
            input,
            measure,
            grid_oracle,
            format,
            ..
        } => cmd_collapse(&input.load()?, *measure, *grid_oracle, *format),
        Command::Plot {
            figure, input, format, ..
        } => {
            let table = if figure.needs_table() || input.is_given() {
                input.load()?
            } else {
                newcastle_fixture()
            };
            cmd_plot(*figure, &table, *format)
        }
    }
}

/// Writes the report to `-o` or standard output.
pub fn run(cli: &Cli) -> Result<()> {
    let report = execute(cli)?;
    match cli.command.output() {
        Some(path) => std::fs::write(path, report)?,
        None => print!("{report}"),
    }
    Ok(())
}

/// Process exit status for an error: 2 usage, 3 data or domain, 4 convergence.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) => 2,
        Error::Convergence { .. } => 4,
        Error::Parse { .. } | Error::Domain(_) | Error::Range(_) | Error::Precondition(_) | Error::Io(_) => 3,
    }
}

/// Error message for the terminal, with the iteration trace for convergence failures.
pub fn describe_error(e: &Error) -> String {
    let mut s = format!("error: {e}");
    if let Error::Convergence {
        coefficients, trace, ..
    } = e
    {
        let _ = write!(
            s,
            "\nlast coefficients: {coefficients:?}\niteration  log-likelihood  |gradient|  step"
        );
        for r in trace {
            let _ = write!(
                s,
                "\n{:>9}  {:>14.6}  {:>10.3e}  {:.4}",
                r.iteration, r.loglik, r.gradient_norm, r.step
            );
        }
    }
    s
}

fn check_format(format: Format, allowed: &[Format], command: &str) -> Result<()> {
    if allowed.contains(&format) {
        Ok(())
    } else {
        Err(Error::usage(
            format!("format {format:?} is not available for {command}").to_lowercase(),
        ))
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Io(e.to_string()))
}

/// Three decimals, without a negative sign on zero.
pub fn fmt3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn fmt_weights(w: &[f64]) -> String {
    let parts: Vec<String> = w.iter().map(|v| fmt3(*v)).collect();
    format!("({})", parts.join(", "))
}

fn fmt_point(p: RiskPoint) -> String {
    format!("({}, {})", fmt3(p.x()), fmt3(p.y()))
}

/// A measure at one point, or why it is undefined there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub measure: Measure,
    pub value: Option<f64>,
    pub undefined: Option<String>,
}

impl MeasureValue {
    pub fn at(measure: Measure, p: RiskPoint) -> Self {
        match measure.evaluate(p) {
            Ok(v) => Self {
                measure,
                value: Some(v),
                undefined: None,
            },
            Err(_) => Self {
                measure,
                value: None,
                undefined: Some(undefined_reason(measure, p)),
            },
        }
    }

    pub fn all_at(p: RiskPoint) -> Vec<Self> {
        Measure::ALL.iter().map(|m| Self::at(*m, p)).collect()
    }

    fn text(&self) -> String {
        match (self.value, &self.undefined) {
            (Some(v), _) => fmt3(v),
            (None, Some(r)) => format!("undefined ({r})"),
            (None, None) => "undefined".into(),
        }
    }
}

fn undefined_reason(measure: Measure, p: RiskPoint) -> String {
    let reasons = [
        (p.x() == 0.0, "x=0"),
        (p.x() == 1.0 && measure != Measure::RiskRatio, "x=1"),
        (p.y() == 1.0, "y=1"),
    ];
    reasons
        .iter()
        .find(|(hit, _)| *hit)
        .map_or_else(|| "outside domain".into(), |(_, r)| (*r).into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMeasures {
    pub label: String,
    pub point: RiskPoint,
    pub measures: Vec<MeasureValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuresReport {
    pub strata: Vec<PointMeasures>,
    pub crude: PointMeasures,
}

fn text_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{s:<w$}", w = widths[i]))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn cmd_measures(table: &StratifiedTable, format: Format) -> Result<String> {
    check_format(format, &[Format::Text, Format::Json], "measures")?;
    let entry = |label: &str, point: RiskPoint| PointMeasures {
        label: label.into(),
        point,
        measures: MeasureValue::all_at(point),
    };
    let report = MeasuresReport {
        strata: table.strata().iter().map(|s| entry(s.label(), s.point())).collect(),
        crude: entry("crude", crude_point(table)),
    };
    if format == Format::Json {
        return json(&report);
    }
    let mut rows = vec![["stratum", "x", "y", "RD", "RR", "OR", "CHR"]
        .map(String::from)
        .to_vec()];
    for e in report.strata.iter().chain(std::iter::once(&report.crude)) {
        let mut row = vec![e.label.clone(), fmt3(e.point.x()), fmt3(e.point.y())];
        row.extend(e.measures.iter().map(MeasureValue::text));
        rows.push(row);
    }
    Ok(text_table(&rows))
}

/// One link's row of the fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub link: LinkFunction,
    pub measure: Measure,
    pub strata: Vec<String>,
    pub stratum_estimates: Vec<f64>,
    pub interaction: Option<LrTest>,
    pub common: f64,
    pub ci: ProfileCi,
    pub fitted_points: Vec<RiskPoint>,
    pub boundary: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub level: f64,
    pub rows: Vec<FitRow>,
}

pub fn cmd_fit(table: &StratifiedTable, links: LinkChoice, level: f64, format: Format) -> Result<String> {
    check_format(format, &[Format::Text, Format::Json], "fit")?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::usage(format!(
            "--level {level} must lie strictly between 0 and 1"
        )));
    }
    let links = links.links();
    let summaries: Vec<Result<LinkSummary>> = std::thread::scope(|s| {
        let handles: Vec<_> = links
            .iter()
            .map(|link| s.spawn(move || summarize(table, *link, level)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fit thread panicked"))
            .collect()
    });
    let labels: Vec<String> = table.labels().into_iter().map(String::from).collect();
    let rows = summaries
        .into_iter()
        .map(|s| {
            s.map(|s| FitRow {
                link: s.link,
                measure: s.link.measure(),
                strata: labels.clone(),
                stratum_estimates: s.stratum_estimates,
                interaction: s.interaction,
                common: s.common,
                ci: s.ci,
                fitted_points: s.common_fit.fitted_points,
                boundary: s.common_fit.boundary,
                iterations: s.common_fit.iterations,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = FitReport { level, rows };
    if format == Format::Json {
        return json(&report);
    }

    let pct = level * 100.0;
    let ci_head = if (pct - pct.round()).abs() < 1e-9 {
        format!("{pct:.0}% CI")
    } else {
        format!("{pct}% CI")
    };
    let mut head = vec!["measure".to_string(), "link".into()];
    head.extend(labels.iter().cloned());
    head.extend(["p".into(), "common".into(), ci_head]);
    let mut rows = vec![head];
    let mut notes = Vec::new();
    for r in &report.rows {
        let mut row = vec![r.measure.abbreviation().to_string(), r.link.name().into()];
        row.extend(r.stratum_estimates.iter().map(|v| fmt3(*v)));
        row.push(r.interaction.as_ref().map_or_else(|| "n/a".into(), |t| fmt3(t.p_value)));
        row.push(fmt3(r.common));
        let lower = if r.ci.lower_truncated {
            format!("≤{}", fmt3(r.ci.lower))
        } else {
            fmt3(r.ci.lower)
        };
        let upper = if r.ci.upper_truncated {
            format!("≥{}", fmt3(r.ci.upper))
        } else {
            fmt3(r.ci.upper)
        };
        row.push(format!("({lower}, {upper})"));
        rows.push(row);
        if r.boundary {
            notes.push(format!(
                "note: {} fit has a fitted risk on the boundary of [0, 1]",
                r.link
            ));
        }
    }
    let mut out = text_table(&rows);
    for n in notes {
        out.push_str(&n);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizeReport {
    pub weights: Vec<f64>,
    pub point: RiskPoint,
    pub measures: Vec<MeasureValue>,
    /// The standardized point is a corner of the standardized hull.
    pub hull_vertex: bool,
    pub crude: RiskPoint,
    /// Distance from the crude point to the standardized hull; absent for one stratum.
    pub crude_distance: Option<f64>,
    pub confounded: Option<bool>,
}

pub fn cmd_standardize(table: &StratifiedTable, dist: &StandardDistribution, format: Format) -> Result<String> {
    check_format(format, &[Format::Text, Format::Json], "standardize")?;
    let point = standardized_point(table, dist)?;
    let hull = standardized_hull(&crate::tables::stratum_points(table))?;
    let confounding = if table.len() >= 2 {
        Some(is_confounded(table, DEFAULT_TOL)?)
    } else {
        None
    };
    let report = StandardizeReport {
        weights: dist.weights().to_vec(),
        point,
        measures: MeasureValue::all_at(point),
        hull_vertex: hull.is_vertex(point, DEFAULT_TOL),
        crude: crude_point(table),
        crude_distance: confounding.as_ref().map(|c| c.distance),
        confounded: confounding.as_ref().map(|c| c.confounded),
    };
    if format == Format::Json {
        return json(&report);
    }
    let mut rows = vec![
        vec!["weights".to_string(), fmt_weights(&report.weights)],
        vec!["risk in unexposed".into(), fmt3(point.x())],
        vec!["risk in exposed".into(), fmt3(point.y())],
    ];
    for m in &report.measures {
        rows.push(vec![m.measure.abbreviation().into(), m.text()]);
    }
    rows.push(vec![
        "hull vertex".into(),
        if report.hull_vertex { "yes" } else { "no" }.into(),
    ]);
    rows.push(vec!["crude point".into(), fmt_point(report.crude)]);
    if let (Some(d), Some(c)) = (report.crude_distance, report.confounded) {
        rows.push(vec!["crude to hull".into(), fmt3(d)]);
        rows.push(vec!["confounded".into(), if c { "yes" } else { "no" }.into()]);
    }
    Ok(text_table(&rows))
}

/// Brute-force cross-check of the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    pub resolution: f64,
    pub min: f64,
    pub max: f64,
    /// Optimizer minus grid for the minimum (≤ 0 when the optimizer is at least as good).
    pub min_gap: f64,
    /// Grid minus optimizer for the maximum.
    pub max_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub link: LinkFunction,
    pub fitted_points: Vec<RiskPoint>,
    pub report: CollapsibilityReport,
    pub grid: Option<GridCheck>,
}

pub fn cmd_collapse(table: &StratifiedTable, measure: Measure, grid_oracle: bool, format: Format) -> Result<String> {
    check_format(format, &[Format::Text, Format::Json], "collapse")?;
    let link = LinkFunction::for_measure(measure);
    let fitted: FitResult = fit(table, ModelSpec::new(link, false))?;
    let report = collapsibility_verdict(&fitted.fitted_points, measure)?;
    let grid = if grid_oracle {
        let min = grid_extremize(&fitted.fitted_points, measure, Objective::Min, GRID_ORACLE_RESOLUTION)?.value;
        let max = grid_extremize(&fitted.fitted_points, measure, Objective::Max, GRID_ORACLE_RESOLUTION)?.value;
        Some(GridCheck {
            resolution: GRID_ORACLE_RESOLUTION,
            min,
            max,
            min_gap: report.min.value - min,
            max_gap: max - report.max.value,
        })
    } else {
        None
    };
    let out = CollapseReport {
        link,
        fitted_points: fitted.fitted_points,
        report,
        grid,
    };
    if format == Format::Json {
        return json(&out);
    }
    let r = &out.report;
    let mut rows = vec![
        vec![
            "measure".to_string(),
            format!("{} ({})", measure.name(), measure.abbreviation()),
        ],
        vec!["fitted with".into(), format!("{link} link, no interaction")],
        vec!["common value".into(), fmt3(r.common)],
    ];
    for (name, e) in [("minimum", &r.min), ("maximum", &r.max)] {
        rows.push(vec![
            name.into(),
            format!(
                "{} at weights {}, point {}",
                fmt3(e.value),
                fmt_weights(&e.weights),
                fmt_point(e.point)
            ),
        ]);
    }
    rows.push(vec!["verdict".into(), r.verdict.describe().into()]);
    if let Some(g) = &out.grid {
        rows.push(vec![
            "grid check".into(),
            format!("min {} max {} (spacing {})", fmt3(g.min), fmt3(g.max), g.resolution),
        ]);
    }
    Ok(text_table(&rows))
}

pub fn cmd_plot(figure: Figure, table: &StratifiedTable, format: Format) -> Result<String> {
    check_format(format, &[Format::Svg, Format::Json], "plot")?;
    let spec = figure.build(table)?;
    match format {
        Format::Json => json(&spec),
        _ => render_svg(&spec),
    }
}
