use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::RiskPoint;

/// Convex hull of a set of risk points.
///
/// Vertices run counterclockwise from the lowest (then leftmost) extreme
/// point. One vertex is a point hull, two a segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedHull {
    vertices: Vec<RiskPoint>,
}

fn cross(o: RiskPoint, a: RiskPoint, b: RiskPoint) -> f64 {
    (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x())
}

/// Monotone-chain convex hull. Collinear boundary points are dropped.
pub fn standardized_hull(points: &[RiskPoint]) -> Result<StandardizedHull> {
    if points.is_empty() {
        return Err(Error::precondition("hull of an empty point set"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x().total_cmp(&b.x()).then(a.y().total_cmp(&b.y())));
    pts.dedup();
    if pts.len() < 3 {
        return Ok(StandardizedHull::from_chain(pts));
    }

    let mut lower: Vec<RiskPoint> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<RiskPoint> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    Ok(StandardizedHull::from_chain(lower))
}

impl StandardizedHull {
    fn from_chain(mut vertices: Vec<RiskPoint>) -> Self {
        // collinear input collapses the chain to [a, b, a]-style duplicates
        let mut unique: Vec<RiskPoint> = Vec::with_capacity(vertices.len());
        for v in vertices.drain(..) {
            if !unique.contains(&v) {
                unique.push(v);
            }
        }
        let start = unique
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.y().total_cmp(&b.y()).then(a.x().total_cmp(&b.x())))
            .map_or(0, |(i, _)| i);
        unique.rotate_left(start);
        Self { vertices: unique }
    }

    pub fn vertices(&self) -> &[RiskPoint] {
        &self.vertices
    }

    pub fn is_point(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn is_segment(&self) -> bool {
        self.vertices.len() == 2
    }

    pub fn is_vertex(&self, p: RiskPoint, tol: f64) -> bool {
        self.vertices.iter().any(|v| v.distance(&p) <= tol)
    }

    /// Euclidean distance from `p` to the hull; zero inside.
    pub fn distance(&self, p: RiskPoint) -> f64 {
        match self.vertices.as_slice() {
            [v] => v.distance(&p),
            [a, b] => point_segment_distance(p, *a, *b),
            vs => {
                let n = vs.len();
                let inside = (0..n).all(|i| cross(vs[i], vs[(i + 1) % n], p) >= 0.0);
                if inside {
                    0.0
                } else {
                    (0..n)
                        .map(|i| point_segment_distance(p, vs[i], vs[(i + 1) % n]))
                        .fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

    pub fn contains(&self, p: RiskPoint, tol: f64) -> bool {
        self.distance(p) <= tol
    }

    /// Signed area (positive for counterclockwise polygons).
    pub fn area(&self) -> f64 {
        let vs = &self.vertices;
        let n = vs.len();
        if n < 3 {
            return 0.0;
        }
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (vs[i], vs[(i + 1) % n]);
                a.x() * b.y() - b.x() * a.y()
            })
            .sum::<f64>()
    }
}

pub(crate) fn point_segment_distance(p: RiskPoint, a: RiskPoint, b: RiskPoint) -> f64 {
    let (dx, dy) = (b.x() - a.x(), b.y() - a.y());
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = (((p.x() - a.x()) * dx + (p.y() - a.y()) * dy) / len2).clamp(0.0, 1.0);
    (p.x() - (a.x() + t * dx)).hypot(p.y() - (a.y() + t * dy))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> RiskPoint {
        RiskPoint::new(x, y).unwrap()
    }

    #[test]
    fn two_points_make_a_segment() {
        let h = standardized_hull(&[pt(0.6, 0.7), pt(0.1, 0.2)]).unwrap();
        assert_eq!(h.vertices(), &[pt(0.1, 0.2), pt(0.6, 0.7)]);
        assert!(h.is_segment());
    }

    #[test]
    fn collinear_points_keep_extremes() {
        let h = standardized_hull(&[pt(0.2, 0.2), pt(0.5, 0.5), pt(0.8, 0.8), pt(0.5, 0.5)]).unwrap();
        assert_eq!(h.vertices(), &[pt(0.2, 0.2), pt(0.8, 0.8)]);
    }

    #[test]
    fn square_with_center() {
        let h = standardized_hull(&[pt(0.5, 0.5), pt(0.9, 0.9), pt(0.1, 0.9), pt(0.9, 0.1), pt(0.1, 0.1)]).unwrap();
        assert_eq!(h.vertices(), &[pt(0.1, 0.1), pt(0.9, 0.1), pt(0.9, 0.9), pt(0.1, 0.9)]);
        assert!((h.area() - 0.64).abs() < 1e-12);
        assert_eq!(h.distance(pt(0.5, 0.5)), 0.0);
        assert!((h.distance(pt(0.95, 0.5)) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn lowest_then_leftmost_start() {
        let h = standardized_hull(&[pt(0.5, 0.1), pt(0.2, 0.1), pt(0.4, 0.8)]).unwrap();
        assert_eq!(h.vertices()[0], pt(0.2, 0.1));
        assert!(h.area() > 0.0);
    }

    #[test]
    fn single_point_and_empty() {
        let h = standardized_hull(&[pt(0.3, 0.3), pt(0.3, 0.3)]).unwrap();
        assert!(h.is_point());
        assert!((h.distance(pt(0.6, 0.7)) - 0.5).abs() < 1e-12);
        assert!(standardized_hull(&[]).is_err());
    }

    #[test]
    fn segment_distance() {
        let d = point_segment_distance(pt(0.5, 0.0), pt(0.0, 0.0), pt(1.0, 1.0));
        assert!((d - 0.5f64.sqrt() / 2.0).abs() < 1e-15);
        let d = point_segment_distance(pt(1.0, 0.0), pt(0.0, 0.0), pt(0.5, 0.0));
        assert!((d - 0.5).abs() < 1e-15);
    }
}
