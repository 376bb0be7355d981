//! Extremes of a measure over the standardized hull.
//!
//! The objective is `w ↦ M(Σ w_k p_k)` on the probability simplex. Two
//! strata use a scan, golden-section search and a bisection on the sign of
//! the derivative. More strata use projected gradient from several starts.
//! [`grid_extremize`] is the brute-force oracle for both.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::tables::RiskPoint;

use super::hull::standardized_hull;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Min,
    Max,
}

impl Objective {
    fn sign(self) -> f64 {
        match self {
            Objective::Min => 1.0,
            Objective::Max => -1.0,
        }
    }
}

/// An optimum value with a standard distribution that attains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub weights: Vec<f64>,
    pub point: RiskPoint,
}

struct Problem<'a> {
    points: &'a [RiskPoint],
    measure: Measure,
    sign: f64,
}

impl Problem<'_> {
    fn point(&self, w: &[f64]) -> (f64, f64) {
        w.iter()
            .zip(self.points)
            .fold((0.0, 0.0), |(x, y), (wk, p)| (x + wk * p.x(), y + wk * p.y()))
    }

    /// Signed objective: smaller is better.
    fn value(&self, w: &[f64]) -> f64 {
        let (x, y) = self.point(w);
        self.sign * self.measure.evaluate_unchecked(x, y)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let (x, y) = self.point(w);
        let (gx, gy) = self.measure.gradient_unchecked(x, y);
        self.points
            .iter()
            .map(|p| self.sign * (gx * p.x() + gy * p.y()))
            .collect()
    }

    fn finish(&self, w: Vec<f64>) -> Extremum {
        let (x, y) = self.point(&w);
        Extremum {
            value: self.measure.evaluate_unchecked(x, y),
            point: RiskPoint::clamped(x, y),
            weights: w,
        }
    }
}

fn validate(points: &[RiskPoint], measure: Measure) -> Result<()> {
    if points.is_empty() {
        return Err(Error::precondition("no points to standardize over"));
    }
    for p in points {
        measure.check_domain(*p)?;
    }
    Ok(())
}

/// Relative gap below which two objective values count as tied.
const TIE_TOL: f64 = 1e-12;

/// Lower signed value wins; ties go to the lexicographically smaller weights.
fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> bool {
    if (a.0 - b.0).abs() <= TIE_TOL * a.0.abs().max(b.0.abs()).max(1.0) {
        return lex_cmp(a.1, b.1) == Ordering::Less;
    }
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => lex_cmp(a.1, b.1) == Ordering::Less,
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Minimizes or maximizes `measure` over all standardized points of `points`.
pub fn extremize_standardized(points: &[RiskPoint], measure: Measure, objective: Objective) -> Result<Extremum> {
    validate(points, measure)?;
    let problem = Problem {
        points,
        measure,
        sign: objective.sign(),
    };
    let weights = match points.len() {
        1 => vec![1.0],
        2 => segment_search(&problem),
        _ => projected_gradient(&problem),
    };
    Ok(problem.finish(weights))
}

const SCAN_INTERVALS: usize = 64;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn segment_search(problem: &Problem<'_>) -> Vec<f64> {
    let f = |w: f64| problem.value(&[w, 1.0 - w]);
    let slope = |w: f64| {
        let g = problem.gradient(&[w, 1.0 - w]);
        g[0] - g[1]
    };

    let nodes: Vec<f64> = (0..=SCAN_INTERVALS).map(|i| i as f64 / SCAN_INTERVALS as f64).collect();
    let best = (0..nodes.len())
        .min_by(|&i, &j| f(nodes[i]).total_cmp(&f(nodes[j])).then(j.cmp(&i)))
        .unwrap_or(0);
    let mut a = nodes[best.saturating_sub(1)];
    let mut b = nodes[(best + 1).min(SCAN_INTERVALS)];

    // golden section
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-7 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut w = 0.5 * (a + b);

    // refine a stationary point by bisection on the derivative sign
    let (mut lo, mut hi) = ((w - 1e-6).max(0.0), (w + 1e-6).min(1.0));
    if slope(lo) < 0.0 && slope(hi) > 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-15 {
                break;
            }
            if slope(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        w = 0.5 * (lo + hi);
    }

    let mut winner = vec![w, 1.0 - w];
    for cand in [[0.0, 1.0], [1.0, 0.0]] {
        if better((f(cand[0]), &cand), (problem.value(&winner), &winner)) {
            winner = cand.to_vec();
        }
    }
    winner
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumulative += ui;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|vi| (vi - theta).max(0.0)).collect()
}

const PG_MAX_ITER: usize = 20_000;

fn projected_gradient(problem: &Problem<'_>) -> Vec<f64> {
    let k = problem.points.len();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for i in 0..k {
        let mut v = vec![0.0; k];
        v[i] = 1.0;
        starts.push(v);
    }
    for i in 0..k {
        for j in i + 1..k {
            let mut v = vec![0.0; k];
            v[i] = 0.5;
            v[j] = 0.5;
            starts.push(v);
        }
    }
    starts.push(vec![1.0 / k as f64; k]);

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let w = descend(problem, start);
        let v = problem.value(&w);
        if best.as_ref().is_none_or(|(bv, bw)| better((v, &w), (*bv, bw))) {
            best = Some((v, w));
        }
    }
    best.expect("at least one start").1
}

fn descend(problem: &Problem<'_>, mut w: Vec<f64>) -> Vec<f64> {
    let mut fw = problem.value(&w);
    let mut step = 1.0;
    for _ in 0..PG_MAX_ITER {
        let g = problem.gradient(&w);
        let mut moved = false;
        while step > 1e-18 {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - step * gi).collect();
            let trial = project_simplex(&trial);
            let decrease: f64 = g
                .iter()
                .zip(trial.iter().zip(&w))
                .map(|(gi, (t, wi))| gi * (t - wi))
                .sum();
            let ft = problem.value(&trial);
            if decrease < 0.0 && ft <= fw + 1e-4 * decrease {
                let change = trial.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                w = trial;
                fw = ft;
                step = (step * 2.0).min(1e8);
                moved = change > 1e-13;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    w
}

/// Brute-force search over simplex weights on a grid of the given spacing.
///
/// With one or two points the weights are enumerated directly. With more, the
/// standardized hull is split into a fan of triangles from one corner and
/// each triangle is enumerated in turn; together they cover every
/// standardized point.
pub fn grid_extremize(
    points: &[RiskPoint],
    measure: Measure,
    objective: Objective,
    resolution: f64,
) -> Result<Extremum> {
    validate(points, measure)?;
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::domain(format!("grid resolution {resolution} not in (0, 1]")));
    }
    let steps = (1.0 / resolution).round().max(1.0) as usize;
    let problem = Problem {
        points,
        measure,
        sign: objective.sign(),
    };
    let k = points.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    // weights are only materialized for candidates that win or tie
    let mut consider = |v: f64, make: &dyn Fn() -> Vec<f64>| {
        let contender = match &best {
            None => true,
            Some((bv, _)) => v <= *bv + TIE_TOL * v.abs().max(bv.abs()).max(1.0),
        };
        if contender {
            let w = make();
            if best.as_ref().is_none_or(|(bv, bw)| better((v, &w), (*bv, bw))) {
                best = Some((v, w));
            }
        }
    };
    let n = steps as f64;
    let signed = |x: f64, y: f64| problem.sign * measure.evaluate_unchecked(x, y);
    match k {
        1 => consider(problem.value(&[1.0]), &|| vec![1.0]),
        2 => {
            for i in 0..=steps {
                let w = [i as f64 / n, (steps - i) as f64 / n];
                consider(problem.value(&w), &|| w.to_vec());
            }
        }
        _ => {
            let hull = standardized_hull(points)?;
            let index = |v: &RiskPoint| {
                points
                    .iter()
                    .position(|p| p == v)
                    .expect("hull vertex is an input point")
            };
            let corners: Vec<usize> = hull.vertices().iter().map(index).collect();
            let unit = |i: usize, wi: f64, j: usize, wj: f64| {
                let mut w = vec![0.0; k];
                w[i] += wi;
                w[j] += wj;
                w
            };
            match corners.len() {
                1 => consider(signed(points[corners[0]].x(), points[corners[0]].y()), &|| {
                    unit(corners[0], 1.0, corners[0], 0.0)
                }),
                2 => {
                    let (i, j) = (corners[0], corners[1]);
                    for a in 0..=steps {
                        let (wa, wb) = (a as f64 / n, (steps - a) as f64 / n);
                        let x = wa * points[i].x() + wb * points[j].x();
                        let y = wa * points[i].y() + wb * points[j].y();
                        consider(signed(x, y), &|| unit(i, wa, j, wb));
                    }
                }
                _ => {
                    // fan triangulation of the hull from its first corner
                    let i = corners[0];
                    for t in 1..corners.len() - 1 {
                        let (j, l) = (corners[t], corners[t + 1]);
                        let (pi, pj, pl) = (points[i], points[j], points[l]);
                        for a in 0..=steps {
                            for b in 0..=steps - a {
                                let (wa, wb, wc) = (a as f64 / n, b as f64 / n, (steps - a - b) as f64 / n);
                                let x = wa * pi.x() + wb * pj.x() + wc * pl.x();
                                let y = wa * pi.y() + wb * pj.y() + wc * pl.y();
                                consider(signed(x, y), &|| {
                                    let mut w = vec![0.0; k];
                                    w[i] = wa;
                                    w[j] = wb;
                                    w[l] = wc;
                                    w
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(problem.finish(best.expect("grid is nonempty").1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> RiskPoint {
        RiskPoint::new(x, y).unwrap()
    }

    #[test]
    fn projection_lands_on_simplex() {
        for v in [
            vec![0.2, 0.3, 0.5],
            vec![2.0, -1.0, 0.0],
            vec![-5.0, -5.0, -4.0],
            vec![0.9, 0.9],
        ] {
            let p = project_simplex(&v);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12, "{p:?}");
            assert!(p.iter().all(|x| *x >= 0.0));
        }
        assert_eq!(project_simplex(&[0.2, 0.3, 0.5]), vec![0.2, 0.3, 0.5]);
        assert_eq!(project_simplex(&[2.0, -1.0, 0.0]), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn identical_points() {
        let p = pt(0.3, 0.6);
        for obj in [Objective::Min, Objective::Max] {
            let e = extremize_standardized(&[p, p], Measure::OddsRatio, obj).unwrap();
            assert!((e.value - Measure::OddsRatio.evaluate(p).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn straight_contour_has_constant_value() {
        let pts = [pt(0.1, 0.15), pt(0.7, 0.75)];
        let lo = extremize_standardized(&pts, Measure::RiskDifference, Objective::Min).unwrap();
        let hi = extremize_standardized(&pts, Measure::RiskDifference, Objective::Max).unwrap();
        assert!((lo.value - 0.05).abs() < 1e-12 && (hi.value - 0.05).abs() < 1e-12);
    }

    #[test]
    fn domain_checked() {
        let err = extremize_standardized(&[pt(0.0, 0.1), pt(0.3, 0.4)], Measure::RiskRatio, Objective::Min);
        assert!(matches!(err, Err(Error::Domain(_))));
        assert!(extremize_standardized(&[], Measure::RiskRatio, Objective::Min).is_err());
    }

    #[test]
    fn monotone_segment_ends_at_vertex() {
        // RR along this segment increases toward the second point
        let pts = [pt(0.5, 0.5), pt(0.2, 0.6)];
        let hi = extremize_standardized(&pts, Measure::RiskRatio, Objective::Max).unwrap();
        assert_eq!(hi.weights, vec![0.0, 1.0]);
        assert!((hi.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn optimizer_matches_grid_on_triangle() {
        let pts = [pt(0.1, 0.3), pt(0.5, 0.8), pt(0.8, 0.9)];
        for m in Measure::ALL {
            for obj in [Objective::Min, Objective::Max] {
                let e = extremize_standardized(&pts, m, obj).unwrap();
                let g = grid_extremize(&pts, m, obj, 0.01).unwrap();
                let worse = obj.sign() * (e.value - g.value);
                assert!(worse < 1e-9, "{m} {obj:?}: {} vs grid {}", e.value, g.value);
            }
        }
    }

    #[test]
    fn grid_resolution_validated() {
        let pts = [pt(0.1, 0.3)];
        assert!(grid_extremize(&pts, Measure::RiskDifference, Objective::Min, 0.0).is_err());
        assert!(grid_extremize(&pts, Measure::RiskDifference, Objective::Min, 0.5).is_ok());
    }
}
