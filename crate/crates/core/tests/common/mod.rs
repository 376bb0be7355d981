//! Helpers shared by the integration tests.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use rothman::inference::loglik_at;
use rothman::prelude::*;
use roxmltree::{Document, Node};

/// Random table with 2–5 strata and every cell strictly between 0% and 100%.
pub fn random_table(rng: &mut StdRng) -> StratifiedTable {
    let k = rng.random_range(2..=5);
    let rows: Vec<(String, u64, u64, u64, u64)> = (0..k)
        .map(|i| {
            let (et, ut) = (rng.random_range(20..400u64), rng.random_range(20..400u64));
            let cell = |rng: &mut StdRng, total: u64| {
                let p: f64 = rng.random_range(0.05..0.95);
                ((p * total as f64).round() as u64).clamp(1, total - 1)
            };
            (format!("s{i}"), cell(rng, et), et, cell(rng, ut), ut)
        })
        .collect();
    StratifiedTable::from_counts(&rows).unwrap()
}

pub const LINKS: [LinkFunction; 4] = [
    LinkFunction::Identity,
    LinkFunction::Log,
    LinkFunction::Logit,
    LinkFunction::CLogLog,
];

/// Central difference with step 1e-6, Richardson-extrapolated against step
/// 2e-6 so the O(h²) truncation term does not swamp the comparison where a
/// fitted risk is close to 0 or 1.
pub fn central_difference(table: &StratifiedTable, spec: ModelSpec, beta: &[f64], j: usize) -> Option<f64> {
    let d = |h: f64| {
        let mut up = beta.to_vec();
        let mut down = beta.to_vec();
        up[j] += h;
        down[j] -= h;
        Some((loglik_at(table, spec, &up).ok()? - loglik_at(table, spec, &down).ok()?) / (2.0 * h))
    };
    let (d1, d2) = (d(1e-6)?, d(2e-6)?);
    Some((4.0 * d1 - d2) / 3.0)
}

pub fn attr(node: Node, name: &str) -> f64 {
    node.attribute(name).unwrap().parse().unwrap()
}

pub fn polyline_points(node: Node) -> Vec<(f64, f64)> {
    node.attribute("points")
        .unwrap()
        .split_whitespace()
        .map(|pair| {
            let (x, y) = pair.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}

pub fn panels<'a>(doc: &'a Document) -> impl Iterator<Item = Node<'a, 'a>> {
    doc.descendants().filter(|n| n.attribute("class") == Some("panel"))
}

/// Largest deviation of any contour vertex in the document from its level,
/// after mapping back to risk coordinates. Limit points outside a measure's
/// domain are compared against the contour's continuous extension instead.
pub fn worst_vertex_error(doc: &Document) -> f64 {
    let mut worst = 0.0f64;
    for panel in panels(doc) {
        let measure: Measure = panel.attribute("data-measure").unwrap().parse().unwrap();
        let (x0, y0, scale) = (
            attr(panel, "data-x0"),
            attr(panel, "data-y0"),
            attr(panel, "data-scale"),
        );
        for line in panel.descendants().filter(|n| n.tag_name().name() == "polyline") {
            let level = attr(line, "data-level");
            let contour = ContourValue::new(measure, level).unwrap();
            for (px, py) in polyline_points(line) {
                let x = (px - x0) / scale;
                let y = (y0 - py) / scale;
                let p = RiskPoint::new(x, y.clamp(0.0, 1.0)).unwrap();
                let err = match measure.evaluate(p) {
                    Ok(v) => (v - level).abs(),
                    Err(_) => (contour_y(contour, x).unwrap() - y).abs(),
                };
                worst = worst.max(err);
            }
        }
    }
    worst
}
