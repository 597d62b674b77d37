//! Complete and partially observed 2×2 diagnostic tables.

use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

/// Cell counts of a complete table. Margins are always derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CellCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl CellCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    /// Test-positive row total.
    pub fn n_plus(&self) -> u64 {
        self.tp + self.fp
    }

    /// Test-negative row total.
    pub fn n_minus(&self) -> u64 {
        self.fn_ + self.tn
    }

    /// Diseased column total.
    pub fn n1(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Non-diseased column total.
    pub fn n2(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn total(&self) -> u64 {
        self.n1() + self.n2()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scenario {
    /// Only the test-positive row is reported.
    SingleRowOnly,
    /// TP, FP and the overall sample size are reported.
    RowPlusTotalN,
    #[default]
    Custom,
}

/// Whatever subset of cells and margins a report makes available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PartialTable {
    pub tp: Option<u64>,
    pub fp: Option<u64>,
    pub fn_: Option<u64>,
    pub tn: Option<u64>,
    pub n1: Option<u64>,
    pub n2: Option<u64>,
    pub total: Option<u64>,
    pub scenario: Scenario,
}

impl PartialTable {
    pub fn single_row(tp: u64, fp: u64) -> Self {
        Self { tp: Some(tp), fp: Some(fp), scenario: Scenario::SingleRowOnly, ..Self::default() }
    }

    pub fn row_plus_total(tp: u64, fp: u64, total: u64) -> Self {
        Self { tp: Some(tp), fp: Some(fp), total: Some(total), scenario: Scenario::RowPlusTotalN, ..Self::default() }
    }

    pub fn from_counts(c: &CellCounts) -> Self {
        Self {
            tp: Some(c.tp),
            fp: Some(c.fp),
            fn_: Some(c.fn_),
            tn: Some(c.tn),
            n1: Some(c.n1()),
            n2: Some(c.n2()),
            total: Some(c.total()),
            scenario: Scenario::Custom,
        }
    }
}

/// A broken consistency requirement of a [`PartialTable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoCellObserved,
    /// A cell exceeds a margin that contains it.
    CellExceedsMargin { cell: &'static str, value: u64, margin: &'static str, bound: u64 },
    /// A fully observed margin does not equal the sum of its parts.
    SumMismatch { margin: &'static str, expected: u64, parts: &'static str, sum: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoCellObserved => write!(f, "no cell is observed"),
            Violation::CellExceedsMargin { cell, value, margin, bound } => {
                write!(f, "{cell} exceeds {margin} ({value} > {bound})")
            }
            Violation::SumMismatch { margin, expected, parts, sum } => {
                write!(f, "{margin} = {expected} but {parts} = {sum}")
            }
        }
    }
}

/// Check every consistency requirement; an empty list means the table is usable.
pub fn validate_partial(t: &PartialTable) -> Vec<Violation> {
    let mut out = Vec::new();
    if t.tp.is_none() && t.fp.is_none() && t.fn_.is_none() && t.tn.is_none() {
        out.push(Violation::NoCellObserved);
    }

    let mut exceeds = |cell: &'static str, value: Option<u64>, margin: &'static str, bound: Option<u64>| {
        if let (Some(value), Some(bound)) = (value, bound) {
            if value > bound {
                out.push(Violation::CellExceedsMargin { cell, value, margin, bound });
            }
        }
    };
    exceeds("tp", t.tp, "n1", t.n1);
    exceeds("fn", t.fn_, "n1", t.n1);
    exceeds("fp", t.fp, "n2", t.n2);
    exceeds("tn", t.tn, "n2", t.n2);
    exceeds("n1", t.n1, "N", t.total);
    exceeds("n2", t.n2, "N", t.total);
    let plus = t.tp.zip(t.fp).map(|(a, b)| a + b);
    let minus = t.fn_.zip(t.tn).map(|(a, b)| a + b);
    exceeds("tp+fp", plus, "N", t.total);
    exceeds("fn+tn", minus, "N", t.total);
    // Lower bounds implied by partial sums.
    exceeds("tp+fn", t.tp.zip(t.fn_).map(|(a, b)| a + b), "n1", t.n1);
    exceeds("fp+tn", t.fp.zip(t.tn).map(|(a, b)| a + b), "n2", t.n2);

    let mut sums = |margin: &'static str, expected: Option<u64>, parts: &'static str, sum: Option<u64>| {
        if let (Some(expected), Some(sum)) = (expected, sum) {
            if expected != sum {
                out.push(Violation::SumMismatch { margin, expected, parts, sum });
            }
        }
    };
    sums("N", t.total, "n1+n2", t.n1.zip(t.n2).map(|(a, b)| a + b));
    sums("n1", t.n1, "tp+fn", t.tp.zip(t.fn_).map(|(a, b)| a + b));
    sums("n2", t.n2, "fp+tn", t.fp.zip(t.tn).map(|(a, b)| a + b));
    if let (Some(tp), Some(fp), Some(fn_), Some(tn)) = (t.tp, t.fp, t.fn_, t.tn) {
        sums("N", t.total, "tp+fp+fn+tn", Some(tp + fp + fn_ + tn));
    }
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("cannot complete the table: {0}")]
    InfeasibleCompletion(String),
}

/// Fill in FN and TN from the observed row and inferred column totals.
pub fn complete_table(tp: u64, fp: u64, n1: u64, n2: u64) -> Result<CellCounts, TableError> {
    if n1 < tp {
        return Err(TableError::InfeasibleCompletion(format!("n1 = {n1} is below tp = {tp}")));
    }
    if n2 < fp {
        return Err(TableError::InfeasibleCompletion(format!("n2 = {n2} is below fp = {fp}")));
    }
    Ok(CellCounts { tp, fp, fn_: n1 - tp, tn: n2 - fp })
}

/// Scalars a count ratio can be expressed in.
pub trait RatioScalar: Copy {
    /// `num / den` for `den > 0`.
    fn ratio(num: u64, den: u64) -> Self;
}

impl RatioScalar for f64 {
    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }
}

impl RatioScalar for f32 {
    fn ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }
}

impl RatioScalar for Ratio<u64> {
    fn ratio(num: u64, den: u64) -> Self {
        Ratio::new(num, den)
    }
}

/// `num / den`, or `None` when the denominator is zero.
pub fn defined_ratio<T: RatioScalar>(num: u64, den: u64) -> Option<T> {
    (den > 0).then(|| T::ratio(num, den))
}

/// Operating characteristics of a complete table. `None` marks a measure
/// whose denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measures<T> {
    pub se: Option<T>,
    pub sp: Option<T>,
    pub ppv: Option<T>,
    pub npv: Option<T>,
    pub accuracy: Option<T>,
    pub prevalence: Option<T>,
}

pub fn measures_from_counts<T: RatioScalar>(c: &CellCounts) -> Measures<T> {
    Measures {
        se: defined_ratio(c.tp, c.n1()),
        sp: defined_ratio(c.tn, c.n2()),
        ppv: defined_ratio(c.tp, c.n_plus()),
        npv: defined_ratio(c.tn, c.n_minus()),
        accuracy: defined_ratio(c.tp + c.tn, c.total()),
        prevalence: defined_ratio(c.n1(), c.total()),
    }
}

/// Render an optional measure the way reports print it.
pub fn display_measure(m: Option<f64>, decimals: usize) -> String {
    match m {
        Some(v) => format!("{v:.decimals$}"),
        None => "undefined".to_string(),
    }
}
