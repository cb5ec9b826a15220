//! Inequality reports and the CSV ledger schema shared by all checks.

use crate::field::fmt17;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// Evaluated two sides of one inequality, with the inputs that entered the
/// constants and a quadrature error bar. `margin = rhs - lhs`; the verdict is
/// `holds` iff the margin is not below minus the error bar, `violated` iff it
/// is, and `inconclusive` when either side failed to evaluate to a finite
/// number.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub error: f64,
    pub inputs: Vec<(String, f64)>,
    pub verdict: Verdict,
}

impl BoundReport {
    pub fn evaluate(name: &str, lhs: f64, rhs: f64, error: f64) -> Self {
        let verdict = if !lhs.is_finite() || !rhs.is_finite() || !error.is_finite() {
            Verdict::Inconclusive
        } else if rhs - lhs >= -error {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        BoundReport {
            name: name.into(),
            lhs,
            rhs,
            error,
            inputs: Vec::new(),
            verdict,
        }
    }

    /// A report that records evidence without claiming a verdict.
    pub fn inconclusive(name: &str, lhs: f64, rhs: f64, error: f64) -> Self {
        BoundReport {
            name: name.into(),
            lhs,
            rhs,
            error,
            inputs: Vec::new(),
            verdict: Verdict::Inconclusive,
        }
    }

    pub fn with_input(mut self, key: &str, value: f64) -> Self {
        self.inputs.push((key.into(), value));
        self
    }

    pub fn with_inputs(mut self, kv: &[(&str, f64)]) -> Self {
        for (k, v) in kv {
            self.inputs.push(((*k).into(), *v));
        }
        self
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn to_row(&self, check: &str) -> LedgerRow {
        LedgerRow {
            check: check.into(),
            name: self.name.clone(),
            lhs: self.lhs,
            rhs: self.rhs,
            margin: self.margin(),
            error: self.error,
            verdict: self.verdict,
        }
    }

    /// Human-readable ledger line.
    pub fn describe(&self) -> String {
        let mut s = format!(
            "{}: lhs={:.6e} rhs={:.6e} margin={:.6e} err={:.6e} [{}]",
            self.name,
            self.lhs,
            self.rhs,
            self.margin(),
            self.error,
            self.verdict
        );
        if !self.inputs.is_empty() {
            s.push_str(" inputs:");
            for (k, v) in &self.inputs {
                s.push_str(&format!(" {k}={v:.6e}"));
            }
        }
        s
    }
}

pub const LEDGER_HEADER: &str = "check,name,lhs,rhs,margin,error,verdict";

#[derive(Debug, Clone)]
pub struct LedgerRow {
    pub check: String,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub error: f64,
    pub verdict: Verdict,
}

impl LedgerRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.check,
            self.name,
            fmt17(self.lhs),
            fmt17(self.rhs),
            fmt17(self.margin),
            fmt17(self.error),
            self.verdict
        )
    }
}
