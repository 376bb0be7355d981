//! Stratified 2×2 count data.
//!
//! A [`StratifiedTable`] holds, for each level of a stratifying covariate, the
//! number of cases and the group size among the exposed and the unexposed.
//! Risks are always derived from the counts on demand.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column header expected by [`parse_table`].
pub const CSV_HEADER: [&str; 5] = [
    "stratum",
    "exposed_cases",
    "exposed_total",
    "unexposed_cases",
    "unexposed_total",
];

/// Cases out of a group total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellCounts {
    cases: u64,
    total: u64,
}

impl CellCounts {
    pub fn new(cases: u64, total: u64) -> Result<Self> {
        if total == 0 {
            return Err(Error::domain("cell total must be at least 1"));
        }
        if cases > total {
            return Err(Error::domain(format!("cases ({cases}) exceed total ({total})")));
        }
        Ok(Self { cases, total })
    }

    pub fn cases(&self) -> u64 {
        self.cases
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn non_cases(&self) -> u64 {
        self.total - self.cases
    }

    /// Empirical risk, `cases / total`.
    pub fn risk(&self) -> f64 {
        self.cases as f64 / self.total as f64
    }
}

/// Free-function form of [`CellCounts::risk`].
pub fn risk(cell: CellCounts) -> f64 {
    cell.risk()
}

/// Which exposure group a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Exposed,
    Unexposed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    label: String,
    exposed: CellCounts,
    unexposed: CellCounts,
}

impl Stratum {
    pub fn new(label: impl Into<String>, exposed: CellCounts, unexposed: CellCounts) -> Result<Self> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(Error::domain("stratum label must be nonempty"));
        }
        Ok(Self {
            label,
            exposed,
            unexposed,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn exposed(&self) -> CellCounts {
        self.exposed
    }

    pub fn unexposed(&self) -> CellCounts {
        self.unexposed
    }

    pub fn cell(&self, arm: Arm) -> CellCounts {
        match arm {
            Arm::Exposed => self.exposed,
            Arm::Unexposed => self.unexposed,
        }
    }

    /// Number of participants in the stratum, both arms.
    pub fn size(&self) -> u64 {
        self.exposed.total + self.unexposed.total
    }

    /// Risk in the unexposed (x) and in the exposed (y).
    pub fn point(&self) -> RiskPoint {
        RiskPoint {
            x: self.unexposed.risk(),
            y: self.exposed.risk(),
        }
    }
}

/// The 2×2×K data cube. Strata keep their input order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratifiedTable {
    strata: Vec<Stratum>,
}

impl StratifiedTable {
    pub fn new(strata: Vec<Stratum>) -> Result<Self> {
        if strata.is_empty() {
            return Err(Error::domain("a table needs at least one stratum"));
        }
        let mut seen = HashSet::new();
        for s in &strata {
            if !seen.insert(s.label.as_str()) {
                return Err(Error::domain(format!("duplicate stratum label '{}'", s.label)));
            }
        }
        Ok(Self { strata })
    }

    /// Convenience constructor from `(label, exposed_cases, exposed_total,
    /// unexposed_cases, unexposed_total)` rows.
    pub fn from_counts<S: AsRef<str>>(rows: &[(S, u64, u64, u64, u64)]) -> Result<Self> {
        let strata = rows
            .iter()
            .map(|(label, ec, et, uc, ut)| {
                Stratum::new(label.as_ref(), CellCounts::new(*ec, *et)?, CellCounts::new(*uc, *ut)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(strata)
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.strata.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn total_participants(&self) -> u64 {
        self.strata.iter().map(Stratum::size).sum()
    }

    /// Summed counts over all strata for one arm.
    pub fn margin(&self, arm: Arm) -> CellCounts {
        let (cases, total) = self.strata.iter().fold((0, 0), |(c, t), s| {
            let cell = s.cell(arm);
            (c + cell.cases, t + cell.total)
        });
        CellCounts { cases, total }
    }

    pub fn to_csv(&self) -> String {
        let mut out = CSV_HEADER.join(",");
        out.push('\n');
        for s in &self.strata {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.label, s.exposed.cases, s.exposed.total, s.unexposed.cases, s.unexposed.total
            ));
        }
        out
    }
}

/// A point of the unit square: risk in the unexposed (`x`) and in the exposed (`y`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    x: f64,
    y: f64,
}

impl RiskPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::domain(format!(
                "risk point ({x}, {y}) lies outside the unit square"
            )));
        }
        Ok(Self { x, y })
    }

    /// Builds a point from coordinates already known to lie in the unit
    /// square, snapping round-off overshoot back onto the boundary.
    pub(crate) fn clamped(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite());
        Self {
            x: x.clamp(0.0, 1.0),
            y: y.clamp(0.0, 1.0),
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn distance(&self, other: &RiskPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl fmt::Display for RiskPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "({:.p$}, {:.p$})", self.x, self.y, p = p),
            None => write!(f, "({}, {})", self.x, self.y),
        }
    }
}

/// Stratum-specific points, in stratum order.
pub fn stratum_points(table: &StratifiedTable) -> Vec<RiskPoint> {
    table.strata.iter().map(Stratum::point).collect()
}

/// The point of marginal (pooled) risks.
pub fn crude_point(table: &StratifiedTable) -> RiskPoint {
    RiskPoint {
        x: table.margin(Arm::Unexposed).risk(),
        y: table.margin(Arm::Exposed).risk(),
    }
}

/// Parses the five-column CSV format. Lines starting with `#` are comments.
pub fn parse_table(text: &str) -> Result<StratifiedTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut header_seen = false;
    let mut strata = Vec::new();
    let mut labels = HashSet::new();
    let mut last_line = 0;

    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        last_line = line;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if !header_seen {
            if record.len() != CSV_HEADER.len() || record.iter().zip(CSV_HEADER).any(|(a, b)| a != b) {
                return Err(Error::Parse {
                    line,
                    message: format!("expected header '{}'", CSV_HEADER.join(",")),
                });
            }
            header_seen = true;
            continue;
        }
        if record.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected 5 fields, found {}", record.len()),
            });
        }
        let mut counts = [0u64; 4];
        for (slot, (field, name)) in counts.iter_mut().zip(record.iter().skip(1).zip(&CSV_HEADER[1..])) {
            *slot = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("{name}: '{field}' is not a nonnegative integer"),
            })?;
        }
        let label = &record[0];
        if label.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty stratum label".into(),
            });
        }
        let at_line = |e: Error| match e {
            Error::Domain(m) => Error::Domain(format!("line {line}: {m}")),
            other => other,
        };
        let exposed = CellCounts::new(counts[0], counts[1]).map_err(at_line)?;
        let unexposed = CellCounts::new(counts[2], counts[3]).map_err(at_line)?;
        if !labels.insert(label.to_string()) {
            return Err(Error::Domain(format!("line {line}: duplicate stratum label '{label}'")));
        }
        strata.push(Stratum::new(label, exposed, unexposed)?);
    }

    if !header_seen {
        return Err(Error::Parse {
            line: 1,
            message: "missing header".into(),
        });
    }
    if strata.is_empty() {
        return Err(Error::Parse {
            line: last_line + 1,
            message: "no data rows".into(),
        });
    }
    StratifiedTable::new(strata)
}

/// Smoking and 20-year mortality among women in Newcastle, stratified by age
/// at the original survey (18-64 and 65+).
pub fn newcastle_fixture() -> StratifiedTable {
    StratifiedTable::from_counts(&[("18-64", 97, 533, 65, 539), ("65+", 42, 49, 165, 193)])
        .expect("fixture counts are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const NEWCASTLE_CSV: &str = "\
# Newcastle smoking and mortality
stratum,exposed_cases,exposed_total,unexposed_cases,unexposed_total
18-64,97,533,65,539
65+,42,49,165,193
";

    #[test]
    fn risk_examples() {
        assert!((risk(CellCounts::new(97, 533).unwrap()) - 0.18199).abs() < 5e-6);
        assert_eq!(risk(CellCounts::new(0, 10).unwrap()), 0.0);
        assert!((risk(CellCounts::new(165, 193).unwrap()) - 0.85492).abs() < 5e-6);
    }

    #[test]
    fn cell_invariants() {
        assert!(matches!(CellCounts::new(1, 0), Err(Error::Domain(_))));
        assert!(matches!(CellCounts::new(5, 4), Err(Error::Domain(_))));
        assert!(CellCounts::new(4, 4).is_ok());
    }

    #[test]
    fn fixture_contents() {
        let t = newcastle_fixture();
        assert_eq!(t.len(), 2);
        let young = &t.strata()[0];
        assert_eq!(young.label(), "18-64");
        assert_eq!((young.exposed().cases(), young.exposed().total()), (97, 533));
        let old = &t.strata()[1];
        assert_eq!((old.unexposed().cases(), old.unexposed().total()), (165, 193));
        assert_eq!(t.total_participants(), 1314);
    }

    #[test]
    fn newcastle_points() {
        let pts = stratum_points(&newcastle_fixture());
        let expected = [(0.12060, 0.18199), (0.85492, 0.85714)];
        for (p, (x, y)) in pts.iter().zip(expected) {
            assert!((p.x() - x).abs() < 1e-5 && (p.y() - y).abs() < 1e-5, "{p}");
        }
        let crude = crude_point(&newcastle_fixture());
        assert_eq!(crude.x(), 230.0 / 732.0);
        assert_eq!(crude.y(), 139.0 / 582.0);
    }

    #[test]
    fn degenerate_points() {
        let t = StratifiedTable::from_counts(&[("a", 3, 10, 3, 10)]).unwrap();
        let p = stratum_points(&t)[0];
        assert_eq!(p.x(), p.y());
        assert_eq!(crude_point(&t), p);
        let t = StratifiedTable::from_counts(&[("a", 7, 7, 2, 2)]).unwrap();
        assert_eq!(stratum_points(&t)[0], RiskPoint::new(1.0, 1.0).unwrap());
    }

    #[test]
    fn crude_on_segment_without_confounding() {
        // same split of C in both arms: 100/300 in each
        let t = StratifiedTable::from_counts(&[("a", 10, 100, 5, 100), ("b", 150, 200, 120, 200)]).unwrap();
        let [p, q] = [stratum_points(&t)[0], stratum_points(&t)[1]];
        let c = crude_point(&t);
        let w = 1.0 / 3.0;
        assert!((c.x() - (w * p.x() + (1.0 - w) * q.x())).abs() < 1e-15);
        assert!((c.y() - (w * p.y() + (1.0 - w) * q.y())).abs() < 1e-15);
    }

    #[test]
    fn parses_newcastle() {
        assert_eq!(parse_table(NEWCASTLE_CSV).unwrap(), newcastle_fixture());
    }

    #[test]
    fn parse_errors() {
        let header = CSV_HEADER.join(",");
        assert!(matches!(parse_table(&format!("{header}\n")), Err(Error::Parse { .. })));
        assert!(matches!(parse_table(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_table(&format!("{header}\nA,5,4,1,10\n")),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            parse_table(&format!("{header}\nA,1,4,1,10\nA,1,4,1,10\n")),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            parse_table(&format!("{header}\nA,1,4,1,0\n")),
            Err(Error::Domain(_))
        ));
        match parse_table(&format!("{header}\nA,1,4,1,10\nB,x,4,1,10\n")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse_table(&format!("{header}\nA,1,4,1\n")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_table("a,b,c,d,e\n1,2,3,4,5\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn risk_monotone_in_cases() {
        for total in 1..30u64 {
            let risks: Vec<f64> = (0..=total).map(|c| CellCounts::new(c, total).unwrap().risk()).collect();
            assert!(risks.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
