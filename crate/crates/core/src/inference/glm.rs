//! Grouped-binomial GLMs for the 2×2×K design.
//!
//! Coefficients use reference-cell coding with the first stratum as
//! reference: `[intercept, exposure, stratum_2..stratum_K,
//! exposure×stratum_2..exposure×stratum_K]`, the interaction block present
//! only when requested. The likelihood is summed over the `2K` cells.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::link::LinkFunction;
use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::tables::{Arm, CellCounts, RiskPoint, StratifiedTable};

pub const MAX_ITERATIONS: usize = 200;
const GRADIENT_TOL: f64 = 1e-10;
const LOGLIK_TOL: f64 = 1e-12;
const MAX_HALVINGS: usize = 60;
const BOUNDARY_TOL: f64 = 1e-12;
/// Start values are pulled this far inside the unit interval.
const START_MARGIN: f64 = 1e-9;

/// Index of the exposure coefficient.
pub const EXPOSURE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub link: LinkFunction,
    pub interaction: bool,
}

impl ModelSpec {
    pub fn new(link: LinkFunction, interaction: bool) -> Self {
        Self { link, interaction }
    }

    pub fn n_params(&self, strata: usize) -> usize {
        let extra = strata.saturating_sub(1);
        2 + extra + if self.interaction { extra } else { 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub loglik: f64,
    pub gradient_norm: f64,
    /// Fraction of the Newton step taken after halving.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub coefficients: Vec<f64>,
    pub loglik: f64,
    /// Fitted (unexposed, exposed) risks per stratum.
    pub fitted_points: Vec<RiskPoint>,
    pub converged: bool,
    pub iterations: usize,
    /// Some fitted probability sits within 1e-12 of 0 or 1.
    pub boundary: bool,
    pub trace: Vec<IterationRecord>,
}

impl FitResult {
    pub fn exposure_coefficient(&self) -> f64 {
        self.coefficients[EXPOSURE]
    }

    /// Measure values at the fitted stratum points.
    pub fn stratum_measures(&self) -> Result<Vec<f64>> {
        let measure = self.spec.link.measure();
        self.fitted_points.iter().map(|p| measure.evaluate(*p)).collect()
    }
}

/// Common measure of a no-interaction fit: `b₁` for the identity link,
/// `exp(b₁)` otherwise.
pub fn common_measure(fit: &FitResult) -> Result<f64> {
    if fit.spec.interaction {
        return Err(Error::usage("common measure requires a fit without interaction terms"));
    }
    if !fit.converged {
        return Err(Error::precondition("fit did not converge"));
    }
    Ok(fit.spec.link.coefficient_to_measure(fit.exposure_coefficient()))
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    cases: f64,
    total: f64,
    stratum: usize,
    exposed: bool,
}

pub(crate) struct Model {
    link: LinkFunction,
    spec: ModelSpec,
    strata: usize,
    cells: Vec<Cell>,
}

pub(crate) struct Evaluation {
    pub loglik: f64,
    pub score: DVector<f64>,
    /// Negative Hessian.
    pub observed: DMatrix<f64>,
    pub fisher: DMatrix<f64>,
}

pub(crate) struct NewtonOutcome {
    pub beta: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
}

fn cell_term(cases: f64, total: f64, p: f64) -> f64 {
    let mut l = 0.0;
    if cases > 0.0 {
        l += cases * p.ln();
    }
    if total > cases {
        l += (total - cases) * (-p).ln_1p();
    }
    l
}

impl Model {
    pub fn new(table: &StratifiedTable, spec: ModelSpec) -> Self {
        let mut cells = Vec::with_capacity(2 * table.len());
        for (k, s) in table.strata().iter().enumerate() {
            for (arm, exposed) in [(Arm::Unexposed, false), (Arm::Exposed, true)] {
                let c = s.cell(arm);
                cells.push(Cell {
                    cases: c.cases() as f64,
                    total: c.total() as f64,
                    stratum: k,
                    exposed,
                });
            }
        }
        Self {
            link: spec.link,
            spec,
            strata: table.len(),
            cells,
        }
    }

    pub fn n_params(&self) -> usize {
        self.spec.n_params(self.strata)
    }

    /// Design columns equal to one for a cell; all others are zero.
    fn columns(&self, stratum: usize, exposed: bool) -> ([usize; 4], usize) {
        let mut cols = [0usize; 4];
        let mut n = 1;
        if exposed {
            cols[n] = EXPOSURE;
            n += 1;
        }
        if stratum > 0 {
            cols[n] = 1 + stratum;
            n += 1;
            if exposed && self.spec.interaction {
                cols[n] = self.strata + stratum;
                n += 1;
            }
        }
        (cols, n)
    }

    pub fn eta(&self, beta: &[f64], stratum: usize, exposed: bool) -> f64 {
        let (cols, n) = self.columns(stratum, exposed);
        cols[..n].iter().map(|&j| beta[j]).sum()
    }

    /// Fitted probability per cell, or `None` when one leaves (0, 1).
    fn probabilities(&self, beta: &[f64]) -> Option<Vec<f64>> {
        self.cells
            .iter()
            .map(|c| {
                let p = self.link.inverse(self.eta(beta, c.stratum, c.exposed));
                (p > 0.0 && p < 1.0).then_some(p)
            })
            .collect()
    }

    pub fn loglik(&self, beta: &[f64]) -> Option<f64> {
        let probs = self.probabilities(beta)?;
        Some(
            self.cells
                .iter()
                .zip(probs)
                .map(|(c, p)| cell_term(c.cases, c.total, p))
                .sum(),
        )
    }

    pub fn evaluate(&self, beta: &[f64]) -> Option<Evaluation> {
        let probs = self.probabilities(beta)?;
        let q = self.n_params();
        let mut score = DVector::zeros(q);
        let mut observed = DMatrix::zeros(q, q);
        let mut fisher = DMatrix::zeros(q, q);
        let mut loglik = 0.0;
        for (c, p) in self.cells.iter().zip(probs) {
            let eta = self.eta(beta, c.stratum, c.exposed);
            let (d1, d2) = self.link.inverse_derivatives(eta, p);
            let (a, n) = (c.cases, c.total);
            loglik += cell_term(a, n, p);
            let dl_dp = (a - n * p) / (p * (1.0 - p));
            let d2l_dp2 = -a / (p * p) - (n - a) / ((1.0 - p) * (1.0 - p));
            let s = dl_dp * d1;
            let obs = -(d2l_dp2 * d1 * d1 + dl_dp * d2);
            let fis = n * d1 * d1 / (p * (1.0 - p));
            let (cols, m) = self.columns(c.stratum, c.exposed);
            for &i in &cols[..m] {
                score[i] += s;
                for &j in &cols[..m] {
                    observed[(i, j)] += obs;
                    fisher[(i, j)] += fis;
                }
            }
        }
        Some(Evaluation {
            loglik,
            score,
            observed,
            fisher,
        })
    }

    pub fn fitted_points(&self, beta: &[f64]) -> Vec<RiskPoint> {
        (0..self.strata)
            .map(|k| {
                RiskPoint::clamped(
                    self.link.inverse(self.eta(beta, k, false)),
                    self.link.inverse(self.eta(beta, k, true)),
                )
            })
            .collect()
    }

    /// Closed-form saturated coefficients from (clamped) empirical risks.
    fn saturated_start(&self, table: &StratifiedTable) -> Vec<f64> {
        let g = |c: CellCounts| self.link.link(c.risk().clamp(START_MARGIN, 1.0 - START_MARGIN));
        let s = table.strata();
        let base_u = g(s[0].unexposed());
        let base_effect = g(s[0].exposed()) - base_u;
        let mut beta = vec![0.0; self.n_params()];
        beta[0] = base_u;
        beta[EXPOSURE] = base_effect;
        for (k, st) in s.iter().enumerate().skip(1) {
            let u = g(st.unexposed());
            beta[1 + k] = u - base_u;
            beta[self.strata + k] = (g(st.exposed()) - u) - base_effect;
        }
        beta
    }

    /// Start for a model without interaction and with the exposure
    /// coefficient held at `effect`: each stratum's pooled risk, shifted so
    /// both of its cells stay feasible.
    pub fn restricted_start(&self, table: &StratifiedTable, effect: f64) -> Option<Vec<f64>> {
        let mut alphas = Vec::with_capacity(self.strata);
        for s in table.strata() {
            let pooled = (s.exposed().cases() + s.unexposed().cases()) as f64 / s.size() as f64;
            let pooled = pooled.clamp(0.01, 0.99);
            let share = s.exposed().total() as f64 / s.size() as f64;
            let mut alpha = self.link.link(pooled) - effect * share;
            match self.link {
                LinkFunction::Identity => {
                    let (lo, hi) = ((-effect).max(0.0), (1.0 - effect).min(1.0));
                    if lo >= hi {
                        return None;
                    }
                    let pad = 0.01 * (hi - lo);
                    alpha = alpha.clamp(lo + pad, hi - pad);
                }
                LinkFunction::Log => {
                    let hi = (-effect).min(0.0);
                    alpha = alpha.min(hi - 0.01);
                }
                LinkFunction::Logit | LinkFunction::CLogLog => {}
            }
            alphas.push(alpha);
        }
        let mut beta = vec![0.0; self.n_params()];
        beta[0] = alphas[0];
        beta[EXPOSURE] = effect;
        for k in 1..self.strata {
            beta[1 + k] = alphas[k] - alphas[0];
        }
        Some(beta)
    }

    /// Newton ascent on the coefficients flagged in `free`; the rest stay put.
    ///
    /// Uses the observed information when it is positive definite and the
    /// Fisher information otherwise, halving steps until every cell
    /// probability stays in (0, 1) and the log-likelihood does not drop.
    pub fn newton(&self, mut beta: Vec<f64>, free: &[bool]) -> Result<NewtonOutcome> {
        let idx: Vec<usize> = (0..beta.len()).filter(|&i| free[i]).collect();
        let mut ev = self
            .evaluate(&beta)
            .ok_or_else(|| Error::domain("starting coefficients give probabilities outside (0, 1)"))?;
        let mut trace = Vec::new();
        for iteration in 1..=MAX_ITERATIONS {
            let g = DVector::from_iterator(idx.len(), idx.iter().map(|&i| ev.score[i]));
            let gnorm = g.amax();
            if gnorm < GRADIENT_TOL || idx.is_empty() {
                trace.push(IterationRecord {
                    iteration,
                    loglik: ev.loglik,
                    gradient_norm: gnorm,
                    step: 0.0,
                });
                return Ok(NewtonOutcome {
                    beta,
                    loglik: ev.loglik,
                    iterations: iteration - 1,
                    trace,
                });
            }
            let sub = |m: &DMatrix<f64>| DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]);
            let direction = sub(&ev.observed)
                .cholesky()
                .map(|ch| ch.solve(&g))
                .or_else(|| sub(&ev.fisher).cholesky().map(|ch| ch.solve(&g)))
                .or_else(|| sub(&ev.fisher).lu().solve(&g))
                .ok_or_else(|| Error::precondition("information matrix is singular"))?;

            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let mut cand = beta.clone();
                for (d, &i) in direction.iter().zip(&idx) {
                    cand[i] += step * d;
                }
                if let Some(next) = self.evaluate(&cand) {
                    if next.loglik >= ev.loglik - LOGLIK_TOL {
                        accepted = Some((cand, next));
                        break;
                    }
                }
                step *= 0.5;
            }
            trace.push(IterationRecord {
                iteration,
                loglik: ev.loglik,
                gradient_norm: gnorm,
                step: if accepted.is_some() { step } else { 0.0 },
            });
            let Some((cand, next)) = accepted else {
                // no ascent direction left at working precision
                if gnorm < 1e-6 {
                    return Ok(NewtonOutcome {
                        beta,
                        loglik: ev.loglik,
                        iterations: iteration,
                        trace,
                    });
                }
                break;
            };
            let change = next.loglik - ev.loglik;
            beta = cand;
            ev = next;
            if step == 1.0 && change.abs() < LOGLIK_TOL {
                return Ok(NewtonOutcome {
                    beta,
                    loglik: ev.loglik,
                    iterations: iteration,
                    trace,
                });
            }
        }
        Err(Error::Convergence {
            iterations: trace.len(),
            last_loglik: ev.loglik,
            coefficients: beta,
            trace,
        })
    }
}

/// Maximum-likelihood fit of a grouped-binomial GLM.
pub fn fit(table: &StratifiedTable, spec: ModelSpec) -> Result<FitResult> {
    if spec.interaction && table.len() < 2 {
        return Err(Error::precondition("an interaction model needs at least two strata"));
    }
    let model = Model::new(table, spec);
    let start = if spec.interaction {
        model.saturated_start(table)
    } else {
        model
            .restricted_start(table, 0.0)
            .ok_or_else(|| Error::domain("no feasible starting point"))?
    };
    let free = vec![true; start.len()];
    let out = model.newton(start, &free)?;
    let fitted_points = model.fitted_points(&out.beta);
    // a saturated fit of an all-or-none cell drifts toward the edge but can
    // stop short of BOUNDARY_TOL
    let degenerate_cell = spec.interaction
        && table.strata().iter().any(|s| {
            [s.exposed(), s.unexposed()]
                .iter()
                .any(|c| c.cases() == 0 || c.cases() == c.total())
        });
    let boundary = degenerate_cell
        || fitted_points.iter().any(|p| {
            [p.x(), p.y()]
                .iter()
                .any(|v| *v < BOUNDARY_TOL || *v > 1.0 - BOUNDARY_TOL)
        });
    Ok(FitResult {
        spec,
        coefficients: out.beta,
        loglik: out.loglik,
        fitted_points,
        converged: true,
        iterations: out.iterations,
        boundary,
        trace: out.trace,
    })
}

/// Log-likelihood at given coefficients.
pub fn loglik_at(table: &StratifiedTable, spec: ModelSpec, beta: &[f64]) -> Result<f64> {
    let model = Model::new(table, spec);
    check_len(&model, beta)?;
    model
        .loglik(beta)
        .ok_or_else(|| Error::domain("coefficients give probabilities outside (0, 1)"))
}

/// Analytic score (gradient of the log-likelihood) at given coefficients.
pub fn score(table: &StratifiedTable, spec: ModelSpec, beta: &[f64]) -> Result<Vec<f64>> {
    let model = Model::new(table, spec);
    check_len(&model, beta)?;
    model
        .evaluate(beta)
        .map(|ev| ev.score.iter().copied().collect())
        .ok_or_else(|| Error::domain("coefficients give probabilities outside (0, 1)"))
}

fn check_len(model: &Model, beta: &[f64]) -> Result<()> {
    if beta.len() != model.n_params() {
        return Err(Error::domain(format!(
            "expected {} coefficients, got {}",
            model.n_params(),
            beta.len()
        )));
    }
    Ok(())
}

/// Binomial log-likelihood of one cell, binomial coefficient omitted.
pub fn cell_loglik(cell: CellCounts, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability {p} outside (0, 1)")));
    }
    Ok(cell_term(cell.cases() as f64, cell.total() as f64, p))
}

/// Log-likelihood of the whole table given per-stratum (unexposed, exposed)
/// probabilities.
pub fn loglik(table: &StratifiedTable, probs: &[RiskPoint]) -> Result<f64> {
    if probs.len() != table.len() {
        return Err(Error::domain(format!(
            "{} probability pairs for {} strata",
            probs.len(),
            table.len()
        )));
    }
    table
        .strata()
        .iter()
        .zip(probs)
        .map(|(s, p)| Ok(cell_loglik(s.unexposed(), p.x())? + cell_loglik(s.exposed(), p.y())?))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub loglik_interaction: f64,
    pub loglik_common: f64,
}

/// Likelihood-ratio test of the exposure×stratum interaction terms.
pub fn lr_test_interaction(table: &StratifiedTable, link: LinkFunction) -> Result<LrTest> {
    if table.len() < 2 {
        return Err(Error::precondition("interaction test needs at least two strata"));
    }
    let full = fit(table, ModelSpec::new(link, true))?;
    let reduced = fit(table, ModelSpec::new(link, false))?;
    Ok(lr_from_fits(&full, &reduced, table.len()))
}

pub(crate) fn lr_from_fits(full: &FitResult, reduced: &FitResult, strata: usize) -> LrTest {
    let statistic = (2.0 * (full.loglik - reduced.loglik)).max(0.0);
    let df = (strata - 1) as u32;
    LrTest {
        statistic,
        df,
        p_value: super::chi2::chi2_sf(statistic, df),
        loglik_interaction: full.loglik,
        loglik_common: reduced.loglik,
    }
}

/// Measure values of the empirical stratum points (what a saturated fit reproduces).
pub fn empirical_measures(table: &StratifiedTable, measure: Measure) -> Result<Vec<f64>> {
    crate::tables::stratum_points(table)
        .into_iter()
        .map(|p| measure.evaluate(p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{newcastle_fixture, stratum_points};

    #[test]
    fn cell_loglik_examples() {
        let l = cell_loglik(CellCounts::new(5, 10).unwrap(), 0.5).unwrap();
        assert!((l - 10.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((l + 6.9315).abs() < 5e-5);
        assert!(cell_loglik(CellCounts::new(5, 10).unwrap(), 1.0).is_err());
        assert!(cell_loglik(CellCounts::new(5, 10).unwrap(), 0.0).is_err());
    }

    #[test]
    fn empirical_risks_maximize_saturated_loglik() {
        let t = newcastle_fixture();
        let pts = stratum_points(&t);
        let best = loglik(&t, &pts).unwrap();
        for (dx, dy) in [(1e-3, 0.0), (0.0, -1e-3), (2e-3, 2e-3)] {
            let moved: Vec<RiskPoint> = pts
                .iter()
                .map(|p| RiskPoint::new(p.x() + dx, p.y() + dy).unwrap())
                .collect();
            assert!(loglik(&t, &moved).unwrap() < best);
        }
    }

    #[test]
    fn saturated_logit_reproduces_stratum_odds_ratios() {
        let fit = fit(&newcastle_fixture(), ModelSpec::new(LinkFunction::Logit, true)).unwrap();
        let ors = fit.stratum_measures().unwrap();
        assert!(
            (ors[0] - 1.622).abs() < 5e-4 && (ors[1] - 1.018).abs() < 5e-4,
            "{ors:?}"
        );
        for (f, e) in fit.fitted_points.iter().zip(stratum_points(&newcastle_fixture())) {
            assert!((f.x() - e.x()).abs() < 1e-8 && (f.y() - e.y()).abs() < 1e-8);
        }
    }

    #[test]
    fn common_estimates() {
        let t = newcastle_fixture();
        let rd = fit(&t, ModelSpec::new(LinkFunction::Identity, false)).unwrap();
        assert!((common_measure(&rd).unwrap() - 0.052).abs() < 5e-4);
        let chr = fit(&t, ModelSpec::new(LinkFunction::CLogLog, false)).unwrap();
        assert!((common_measure(&chr).unwrap() - 1.316).abs() < 5e-4);
        let or = fit(&t, ModelSpec::new(LinkFunction::Logit, false)).unwrap();
        assert!((common_measure(&or).unwrap() - 1.537).abs() < 5e-4);
        let rr = fit(&t, ModelSpec::new(LinkFunction::Log, false)).unwrap();
        assert!((common_measure(&rr).unwrap() - 1.062).abs() < 5e-4);
    }

    #[test]
    fn common_measure_rejects_interaction_fit() {
        let f = fit(&newcastle_fixture(), ModelSpec::new(LinkFunction::Logit, true)).unwrap();
        assert!(matches!(common_measure(&f), Err(Error::Usage(_))));
    }

    #[test]
    fn null_data_gives_null_measure() {
        let t = StratifiedTable::from_counts(&[("a", 10, 100, 20, 200), ("b", 30, 60, 15, 30)]).unwrap();
        for link in LinkFunction::ALL {
            let f = fit(&t, ModelSpec::new(link, false)).unwrap();
            let m = common_measure(&f).unwrap();
            assert!((m - link.measure().null_value()).abs() < 1e-9, "{link}: {m}");
        }
    }

    #[test]
    fn lr_test_examples() {
        let t = newcastle_fixture();
        let log = lr_test_interaction(&t, LinkFunction::Log).unwrap();
        assert!((log.p_value - 0.010).abs() < 5e-4, "{}", log.p_value);
        let id = lr_test_interaction(&t, LinkFunction::Identity).unwrap();
        assert!((id.p_value - 0.300).abs() < 5e-4, "{}", id.p_value);
        assert_eq!(id.df, 1);

        let same = StratifiedTable::from_counts(&[("a", 12, 50, 7, 40), ("b", 12, 50, 7, 40)]).unwrap();
        for link in LinkFunction::ALL {
            let r = lr_test_interaction(&same, link).unwrap();
            assert!(r.statistic < 1e-9, "{link}: {}", r.statistic);
            assert!((r.p_value - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn interaction_needs_two_strata() {
        let t = StratifiedTable::from_counts(&[("a", 3, 10, 2, 10)]).unwrap();
        assert!(matches!(
            fit(&t, ModelSpec::new(LinkFunction::Logit, true)),
            Err(Error::Precondition(_))
        ));
        let f = fit(&t, ModelSpec::new(LinkFunction::Logit, false)).unwrap();
        assert!((common_measure(&f).unwrap() - (0.3 / 0.7) / (0.2 / 0.8)).abs() < 1e-9);
    }

    #[test]
    fn boundary_data_is_flagged_or_fails() {
        let t = StratifiedTable::from_counts(&[("a", 0, 20, 3, 20), ("b", 5, 20, 4, 20)]).unwrap();
        match fit(&t, ModelSpec::new(LinkFunction::Logit, true)) {
            Ok(f) => {
                assert!(f.boundary);
                assert!(f.fitted_points[0].y() < 1e-8);
            }
            Err(e) => assert!(matches!(e, Error::Convergence { .. })),
        }
    }

    #[test]
    fn coefficient_layout() {
        let spec = ModelSpec::new(LinkFunction::Logit, true);
        assert_eq!(spec.n_params(3), 6);
        assert_eq!(ModelSpec::new(LinkFunction::Logit, false).n_params(3), 4);
        let t = StratifiedTable::from_counts(&[("a", 3, 10, 2, 10), ("b", 4, 10, 1, 10), ("c", 5, 10, 5, 10)]).unwrap();
        let m = Model::new(&t, spec);
        let beta = [1.0, 10.0, 100.0, 1000.0, 1e4, 1e5];
        assert_eq!(m.eta(&beta, 0, false), 1.0);
        assert_eq!(m.eta(&beta, 0, true), 11.0);
        assert_eq!(m.eta(&beta, 2, false), 1001.0);
        assert_eq!(m.eta(&beta, 2, true), 1.0 + 10.0 + 1000.0 + 1e5);
    }
}
