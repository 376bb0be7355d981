mod common;

use std::collections::BTreeMap;

use common::{attr, panels, polyline_points, worst_vertex_error};
use roxmltree::{Document, Node};

use rothman::prelude::*;
use rothman::render::{
    collapsible_figure, contours_figure, diagram_from_analysis, render_svg, AnalysisOptions, DiagramSpec, Figure, Panel,
};
use sha2::{Digest, Sha256};

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/figures.sha256");

fn figures() -> Vec<(Figure, String)> {
    let table = newcastle_fixture();
    Figure::ALL
        .into_iter()
        .map(|f| (f, render_svg(&f.build(&table).unwrap()).unwrap()))
        .collect()
}

#[test]
fn well_formed_svg() {
    for (figure, svg) in figures() {
        let doc = Document::parse(&svg).unwrap_or_else(|e| panic!("{figure}: {e}"));
        let root = doc.root_element();
        assert_eq!(root.tag_name().name(), "svg");
        assert_eq!(root.tag_name().namespace(), Some("http://www.w3.org/2000/svg"));
        for a in ["width", "height", "viewBox", "version"] {
            assert!(root.attribute(a).is_some(), "{figure}: missing {a}");
        }
        assert!(panels(&doc).count() >= 1);
    }
}

#[test]
fn byte_identical_across_runs() {
    assert_eq!(figures(), figures());
}

#[test]
fn contour_vertices_evaluate_to_their_level() {
    for (figure, svg) in figures() {
        let worst = worst_vertex_error(&Document::parse(&svg).unwrap());
        assert!(worst < 1e-9, "{figure}: vertex off its level by {worst}");
    }
}

#[test]
fn four_panel_contour_figure() {
    let svg = render_svg(&contours_figure()).unwrap();
    let doc = Document::parse(&svg).unwrap();
    assert_eq!(panels(&doc).count(), 4);
    for panel in panels(&doc) {
        let lines: Vec<Node> = panel
            .descendants()
            .filter(|n| n.tag_name().name() == "polyline")
            .collect();
        let solid = lines
            .iter()
            .filter(|n| n.attribute("class") == Some("contour solid"))
            .count();
        let dashed = lines
            .iter()
            .filter(|n| n.attribute("stroke-dasharray") == Some("6 4"))
            .count();
        assert_eq!((solid, dashed), (1, 4));
        let labels = panel
            .descendants()
            .filter(|n| n.attribute("class") == Some("contour-label"))
            .count();
        assert_eq!(labels, 5);
    }
}

#[test]
fn empty_panel_has_axes_only() {
    let svg = render_svg(&DiagramSpec::new(vec![Panel::new(Measure::OddsRatio)])).unwrap();
    let doc = Document::parse(&svg).unwrap();
    assert!(doc.descendants().any(|n| n.attribute("class") == Some("frame")));
    assert!(!doc
        .descendants()
        .any(|n| matches!(n.tag_name().name(), "polyline" | "circle" | "polygon" | "path")));
}

/// Distance from (px, py) to the nearest piece of a polyline.
fn distance_to_polyline(p: (f64, f64), line: &[(f64, f64)]) -> f64 {
    line.windows(2)
        .map(|w| {
            let ((ax, ay), (bx, by)) = (w[0], w[1]);
            let (dx, dy) = (bx - ax, by - ay);
            let t = (((p.0 - ax) * dx + (p.1 - ay) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            ((ax + t * dx - p.0).powi(2) + (ay + t * dy - p.1).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn common_risk_difference_segment_lies_on_its_contour() {
    let svg = render_svg(&collapsible_figure(&newcastle_fixture()).unwrap()).unwrap();
    let doc = Document::parse(&svg).unwrap();
    let contour = doc
        .descendants()
        .find(|n| n.tag_name().name() == "polyline" && n.attribute("class") == Some("contour dashed"))
        .unwrap();
    assert!((attr(contour, "data-level") - 0.052).abs() < 5e-4);
    let line = polyline_points(contour);
    let seg = doc
        .descendants()
        .find(|n| n.attribute("class") == Some("segment"))
        .unwrap();
    let (a, b) = ((attr(seg, "x1"), attr(seg, "y1")), (attr(seg, "x2"), attr(seg, "y2")));
    for i in 0..=100 {
        let t = i as f64 / 100.0;
        let p = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
        assert!(distance_to_polyline(p, &line) <= 0.5);
    }
}

#[test]
fn crude_option_places_cross() {
    let options = AnalysisOptions {
        crude: true,
        ..AnalysisOptions::default()
    };
    let spec = diagram_from_analysis(&newcastle_fixture(), Measure::OddsRatio, &options).unwrap();
    let cross = spec.panels[0]
        .points
        .iter()
        .find(|p| p.glyph == rothman::render::Glyph::Cross)
        .unwrap();
    assert!((cross.point.x() - 0.31421).abs() < 1e-5 && (cross.point.y() - 0.23883).abs() < 1e-5);
}

#[test]
fn golden_hashes() {
    let actual: BTreeMap<String, String> = figures()
        .into_iter()
        .map(|(f, svg)| (f.to_string(), format!("{:x}", Sha256::digest(svg.as_bytes()))))
        .collect();
    let rendered: String = actual.iter().map(|(k, v)| format!("{k} {v}\n")).collect();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(GOLDEN, &rendered).unwrap();
    }
    let expected = std::fs::read_to_string(GOLDEN).expect("missing golden file; run with UPDATE_GOLDEN=1");
    assert_eq!(
        rendered, expected,
        "SVG output changed; rerun with UPDATE_GOLDEN=1 if intended"
    );
}
