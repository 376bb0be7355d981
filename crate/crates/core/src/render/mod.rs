//! Deterministic SVG output for Rothman diagrams.
//!
//! Every panel maps the unit square onto a 480×480 plot area with 60-unit
//! margins, y pointing up. Output depends only on the [`DiagramSpec`]: no
//! timestamps, no hashing, numbers printed in shortest round-trip form.

mod figures;

pub use figures::{
    collapsible_figure, contours_figure, diagram_from_analysis, hull_figure, modconf_figure, modification_figure,
    noncollapsible_figure, AnalysisOptions, Figure, HullSource,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{contour_polyline, ContourValue, Measure};
use crate::tables::RiskPoint;

/// Style table.
pub mod style {
    pub const PLOT_SIZE: f64 = 480.0;
    pub const MARGIN: f64 = 60.0;
    pub const PANEL_SIZE: f64 = PLOT_SIZE + 2.0 * MARGIN;
    pub const CONTOUR_SAMPLES: usize = 201;
    pub const DASH: &str = "6 4";
    pub const CONTOUR_WIDTH: f64 = 1.5;
    pub const NULL_WIDTH: f64 = 2.0;
    pub const SEGMENT_WIDTH: f64 = 2.5;
    pub const FRAME_WIDTH: f64 = 1.0;
    pub const FONT_SIZE: f64 = 12.0;
    pub const TITLE_SIZE: f64 = 14.0;
    pub const POINT_RADIUS: f64 = 5.0;
    pub const CROSS_HALF: f64 = 5.0;
    pub const HULL_FILL: &str = "#d0d0d0";
    pub const FONT: &str = "sans-serif";
    pub const TICKS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineStyle {
    Solid,
    Dashed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub level: f64,
    pub style: LineStyle,
    pub label: bool,
}

impl ContourSpec {
    pub fn solid(level: f64) -> Self {
        Self {
            level,
            style: LineStyle::Solid,
            label: true,
        }
    }

    pub fn dashed(level: f64) -> Self {
        Self {
            level,
            style: LineStyle::Dashed,
            label: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Glyph {
    /// Observed stratum point.
    Filled,
    /// Fitted stratum point.
    Open,
    /// Crude point.
    Cross,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub point: RiskPoint,
    pub glyph: Glyph,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub title: String,
    pub measure: Measure,
    pub contours: Vec<ContourSpec>,
    pub points: Vec<PlotPoint>,
    /// Shaded polygon, drawn beneath everything else.
    pub hull: Option<Vec<RiskPoint>>,
    pub segments: Vec<[RiskPoint; 2]>,
    pub x_label: String,
    pub y_label: String,
}

impl Panel {
    pub fn new(measure: Measure) -> Self {
        Self {
            title: String::new(),
            measure,
            contours: Vec::new(),
            points: Vec::new(),
            hull: None,
            segments: Vec::new(),
            x_label: "Risk in unexposed".into(),
            y_label: "Risk in exposed".into(),
        }
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn contour(mut self, c: ContourSpec) -> Self {
        self.contours.push(c);
        self
    }

    pub fn point(mut self, point: RiskPoint, glyph: Glyph) -> Self {
        self.points.push(PlotPoint {
            point,
            glyph,
            label: None,
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramSpec {
    pub panels: Vec<Panel>,
    /// Panels per row.
    pub columns: usize,
}

impl DiagramSpec {
    pub fn new(panels: Vec<Panel>) -> Self {
        let columns = if panels.len() == 4 { 2 } else { panels.len().max(1) };
        Self { panels, columns }
    }

    pub fn validate(&self) -> Result<()> {
        if self.panels.is_empty() {
            return Err(Error::domain("diagram has no panels"));
        }
        if self.columns == 0 {
            return Err(Error::domain("diagram needs at least one column"));
        }
        for (i, panel) in self.panels.iter().enumerate() {
            let coords = panel
                .points
                .iter()
                .map(|p| p.point)
                .chain(panel.hull.iter().flatten().copied())
                .chain(panel.segments.iter().flatten().copied());
            for p in coords {
                if !(0.0..=1.0).contains(&p.x()) || !(0.0..=1.0).contains(&p.y()) {
                    return Err(Error::domain(format!(
                        "panel {i}: coordinate {p} outside the unit square"
                    )));
                }
            }
            for c in &panel.contours {
                ContourValue::new(panel.measure, c.level)?;
            }
        }
        Ok(())
    }
}

/// Pixel origin of a panel's plot area: (x of risk 0, y of risk 0).
pub fn plot_origin(spec: &DiagramSpec, index: usize) -> (f64, f64) {
    let col = (index % spec.columns) as f64;
    let row = (index / spec.columns) as f64;
    (
        col * style::PANEL_SIZE + style::MARGIN,
        row * style::PANEL_SIZE + style::MARGIN + style::PLOT_SIZE,
    )
}

fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

/// Short label text for a level: at most three decimals, trailing zeros dropped.
pub fn level_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Canvas {
    x0: f64,
    y0: f64,
}

impl Canvas {
    fn px(&self, x: f64) -> f64 {
        self.x0 + x * style::PLOT_SIZE
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 - y * style::PLOT_SIZE
    }

    fn pair(&self, p: RiskPoint) -> String {
        format!("{},{}", num(self.px(p.x())), num(self.py(p.y())))
    }
}

/// Renders a standalone SVG 1.1 document.
pub fn render_svg(spec: &DiagramSpec) -> Result<String> {
    spec.validate()?;
    let rows = spec.panels.len().div_ceil(spec.columns);
    let cols = spec.columns.min(spec.panels.len());
    let width = cols as f64 * style::PANEL_SIZE;
    let height = rows as f64 * style::PANEL_SIZE;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"{f}\" font-size=\"{fs}\">",
        w = num(width),
        h = num(height),
        f = style::FONT,
        fs = num(style::FONT_SIZE),
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>",
        num(width),
        num(height)
    );
    for (i, panel) in spec.panels.iter().enumerate() {
        let (x0, y0) = plot_origin(spec, i);
        render_panel(&mut out, panel, i, &Canvas { x0, y0 });
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn render_panel(out: &mut String, panel: &Panel, index: usize, cv: &Canvas) {
    let size = style::PLOT_SIZE;
    let top = cv.py(1.0);
    let _ = writeln!(
        out,
        "<g class=\"panel\" id=\"panel-{index}\" data-measure=\"{}\" data-x0=\"{}\" data-y0=\"{}\" data-scale=\"{}\">",
        panel.measure.abbreviation(),
        num(cv.x0),
        num(cv.y0),
        num(size)
    );
    if !panel.title.is_empty() {
        let _ = writeln!(
            out,
            "<text class=\"title\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"{}\">{}</text>",
            num(cv.px(0.5)),
            num(top - 30.0),
            num(style::TITLE_SIZE),
            escape(&panel.title)
        );
    }

    if let Some(hull) = &panel.hull {
        let pts: Vec<String> = hull.iter().map(|p| cv.pair(*p)).collect();
        let _ = writeln!(
            out,
            "<polygon class=\"hull\" points=\"{}\" fill=\"{}\" stroke=\"none\"/>",
            pts.join(" "),
            style::HULL_FILL
        );
    }

    // frame, ticks, axis labels
    let _ = writeln!(
        out,
        "<rect class=\"frame\" x=\"{}\" y=\"{}\" width=\"{s}\" height=\"{s}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\"/>",
        num(cv.x0),
        num(top),
        num(style::FRAME_WIDTH),
        s = num(size)
    );
    for t in style::TICKS {
        let (tx, ty) = (cv.px(t), cv.py(t));
        let _ = writeln!(
            out,
            "<line class=\"tick\" x1=\"{x}\" y1=\"{y}\" x2=\"{x}\" y2=\"{y2}\" stroke=\"black\"/>",
            x = num(tx),
            y = num(cv.y0),
            y2 = num(cv.y0 + 5.0)
        );
        let _ = writeln!(
            out,
            "<text class=\"tick-label\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            num(tx),
            num(cv.y0 + 18.0),
            level_label(t)
        );
        let _ = writeln!(
            out,
            "<line class=\"tick\" x1=\"{x}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>",
            x = num(cv.x0),
            y = num(ty),
            x2 = num(cv.x0 - 5.0)
        );
        let _ = writeln!(
            out,
            "<text class=\"tick-label\" x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            num(cv.x0 - 8.0),
            num(ty + 4.0),
            level_label(t)
        );
    }
    let _ = writeln!(
        out,
        "<text class=\"axis-label\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        num(cv.px(0.5)),
        num(cv.y0 + 40.0),
        escape(&panel.x_label)
    );
    let (lx, ly) = (cv.x0 - 42.0, cv.py(0.5));
    let _ = writeln!(
        out,
        "<text class=\"axis-label\" x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" transform=\"rotate(-90 {x} {y})\">{}</text>",
        escape(&panel.y_label),
        x = num(lx),
        y = num(ly)
    );

    let mut labels = Vec::new();
    for c in &panel.contours {
        let value = ContourValue::new(panel.measure, c.level).expect("validated");
        let line = contour_polyline(value, style::CONTOUR_SAMPLES);
        if line.is_empty() {
            continue;
        }
        let pts: Vec<String> = line.iter().map(|p| cv.pair(*p)).collect();
        let (class, width, dash) = match c.style {
            LineStyle::Solid => (
                "contour solid",
                if value.is_null() {
                    style::NULL_WIDTH
                } else {
                    style::CONTOUR_WIDTH
                },
                String::new(),
            ),
            LineStyle::Dashed => (
                "contour dashed",
                style::CONTOUR_WIDTH,
                format!(" stroke-dasharray=\"{}\"", style::DASH),
            ),
        };
        let _ = writeln!(
            out,
            "<polyline class=\"{class}\" data-level=\"{}\" points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\"{dash}/>",
            num(c.level),
            pts.join(" "),
            num(width)
        );
        if c.label {
            labels.push(place_label(&line, value, c.level, cv));
        }
    }
    for l in spread_labels(labels) {
        let _ = writeln!(
            out,
            "<text class=\"contour-label\" x=\"{}\" y=\"{}\" text-anchor=\"{}\">{}</text>",
            num(l.x),
            num(l.y),
            l.edge.anchor(),
            l.text
        );
    }

    for [a, b] in &panel.segments {
        let _ = writeln!(
            out,
            "<line class=\"segment\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"{}\"/>",
            num(cv.px(a.x())),
            num(cv.py(a.y())),
            num(cv.px(b.x())),
            num(cv.py(b.y())),
            num(style::SEGMENT_WIDTH)
        );
    }

    for p in &panel.points {
        let (x, y) = (cv.px(p.point.x()), cv.py(p.point.y()));
        match p.glyph {
            Glyph::Filled | Glyph::Open => {
                let (class, fill) = if p.glyph == Glyph::Filled {
                    ("point filled", "black")
                } else {
                    ("point open", "white")
                };
                let _ = writeln!(
                    out,
                    "<circle class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\" stroke=\"black\" stroke-width=\"1.5\"/>",
                    num(x),
                    num(y),
                    num(style::POINT_RADIUS)
                );
            }
            Glyph::Cross => {
                let h = style::CROSS_HALF;
                let _ = writeln!(
                    out,
                    "<path class=\"point cross\" d=\"M {} {} L {} {} M {} {} L {} {}\" stroke=\"black\" stroke-width=\"2\" fill=\"none\"/>",
                    num(x - h),
                    num(y - h),
                    num(x + h),
                    num(y + h),
                    num(x - h),
                    num(y + h),
                    num(x + h),
                    num(y - h)
                );
            }
        }
        if let Some(label) = &p.label {
            let _ = writeln!(
                out,
                "<text class=\"point-label\" x=\"{}\" y=\"{}\">{}</text>",
                num(x + 8.0),
                num(y - 8.0),
                escape(label)
            );
        }
    }
    out.push_str("</g>\n");
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LabelEdge {
    Top,
    Right,
    /// Inside the plot, where a contour ending in the (1, 1) corner crosses
    /// the anti-diagonal.
    Inner,
}

impl LabelEdge {
    fn anchor(self) -> &'static str {
        match self {
            LabelEdge::Top => "middle",
            LabelEdge::Right | LabelEdge::Inner => "start",
        }
    }
}

struct Label {
    x: f64,
    y: f64,
    edge: LabelEdge,
    text: String,
}

/// Labels go where the contour leaves the frame through its top or right
/// edge. Non-null contours that all meet in the (1, 1) corner are labelled
/// on the anti-diagonal instead so they stay apart.
fn place_label(line: &[RiskPoint], value: ContourValue, level: f64, cv: &Canvas) -> Label {
    let text = level_label(level);
    let end = *line.last().expect("nonempty");
    let corner = end.x() >= 1.0 - 1e-9 && end.y() >= 1.0 - 1e-9;
    if corner && !value.is_null() && !value.measure().is_straight() {
        let cross = line
            .iter()
            .min_by(|a, b| (a.x() + a.y() - 1.0).abs().total_cmp(&(b.x() + b.y() - 1.0).abs()))
            .expect("nonempty");
        return Label {
            x: cv.px(cross.x()) + 4.0,
            y: cv.py(cross.y()) - 4.0,
            edge: LabelEdge::Inner,
            text,
        };
    }
    if end.y() >= 1.0 - 1e-9 {
        Label {
            x: cv.px(end.x()),
            y: cv.py(1.0) - 4.0,
            edge: LabelEdge::Top,
            text,
        }
    } else {
        Label {
            x: cv.px(1.0) + 4.0,
            y: cv.py(end.y()) + 4.0,
            edge: LabelEdge::Right,
            text,
        }
    }
}

fn label_width(text: &str) -> f64 {
    text.chars().count() as f64 * style::FONT_SIZE * 0.6 + 4.0
}

/// Pushes apart labels on the same edge that would overlap: top labels
/// shift left, right-edge labels shift down.
fn spread_labels(mut labels: Vec<Label>) -> Vec<Label> {
    let gap = style::FONT_SIZE + 2.0;
    let mut top: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i].edge == LabelEdge::Top)
        .collect();
    top.sort_by(|&a, &b| labels[b].x.total_cmp(&labels[a].x).then(a.cmp(&b)));
    for w in 1..top.len() {
        let (prev, cur) = (&labels[top[w - 1]], &labels[top[w]]);
        let limit = prev.x - 0.5 * (label_width(&prev.text) + label_width(&cur.text));
        if cur.x > limit {
            labels[top[w]].x = limit;
        }
    }
    for edge in [LabelEdge::Right, LabelEdge::Inner] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].edge == edge).collect();
        idx.sort_by(|&a, &b| labels[a].y.total_cmp(&labels[b].y).then(a.cmp(&b)));
        for w in 1..idx.len() {
            let limit = labels[idx[w - 1]].y + gap;
            if labels[idx[w]].y < limit {
                labels[idx[w]].y = limit;
            }
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_panel_has_axes_only() {
        let svg = render_svg(&DiagramSpec::new(vec![Panel::new(Measure::RiskRatio)])).unwrap();
        assert!(svg.contains("class=\"frame\""));
        assert!(!svg.contains("<polyline"));
        assert!(!svg.contains("<circle"));
        assert!(svg.starts_with("<?xml"));
    }

    #[test]
    fn validation() {
        assert!(render_svg(&DiagramSpec::new(vec![])).is_err());
        let bad = Panel::new(Measure::RiskDifference).contour(ContourSpec::dashed(2.0));
        assert!(render_svg(&DiagramSpec::new(vec![bad])).is_err());
        let spec: DiagramSpec = serde_json::from_str(
            r#"{"columns":1,"panels":[{"title":"","measure":"RiskRatio","contours":[],
            "points":[{"point":{"x":1.5,"y":0.2},"glyph":"filled","label":null}],
            "hull":null,"segments":[],"x_label":"","y_label":""}]}"#,
        )
        .unwrap();
        assert!(matches!(render_svg(&spec), Err(Error::Domain(_))));
    }

    #[test]
    fn labels() {
        assert_eq!(level_label(0.25), "0.25");
        assert_eq!(level_label(1.537_225_5), "1.537");
        assert_eq!(level_label(2.0), "2");
        assert_eq!(level_label(-0.0001), "0");
        assert_eq!(escape("a<b & c"), "a&lt;b &amp; c");
    }

    #[test]
    fn layout() {
        let spec = DiagramSpec::new(vec![Panel::new(Measure::RiskRatio); 4]);
        assert_eq!(spec.columns, 2);
        assert_eq!(plot_origin(&spec, 0), (60.0, 540.0));
        assert_eq!(plot_origin(&spec, 3), (660.0, 1140.0));
        let svg = render_svg(&spec).unwrap();
        assert!(svg.contains("width=\"1200\" height=\"1200\""));
    }
}
