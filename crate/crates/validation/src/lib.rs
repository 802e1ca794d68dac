//! Pass/fail bookkeeping for the acceptance target.

use std::fmt::Write as _;

/// One measured quantity inside a criterion.
#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub detail: String,
    pub ok: bool,
}

/// A named acceptance criterion made of one or more checks.
#[derive(Debug, Clone)]
pub struct Criterion {
    pub name: &'static str,
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn new(name: &'static str) -> Self {
        Self { name, checks: Vec::new() }
    }

    pub fn check(&mut self, label: impl Into<String>, ok: bool, detail: impl Into<String>) -> &mut Self {
        self.checks.push(Check {
            label: label.into(),
            detail: detail.into(),
            ok,
        });
        self
    }

    /// `|measured - target| <= tol`.
    pub fn within(&mut self, label: &str, measured: f64, target: f64, tol: f64, unit: &str) -> &mut Self {
        let ok = (measured - target).abs() <= tol;
        self.check(label, ok, format!("{measured:.6} {unit} (want {target} ± {tol})"))
    }

    /// `measured <= bound`.
    pub fn at_most(&mut self, label: &str, measured: f64, bound: f64, unit: &str) -> &mut Self {
        self.check(label, measured <= bound, format!("{measured:.6} {unit} (want <= {bound})"))
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.ok)
    }

    /// `PASS name: a=..; b=..` on one line, failing checks marked `[x]`.
    pub fn line(&self) -> String {
        let mut s = format!("{} {}:", if self.passed() { "PASS" } else { "FAIL" }, self.name);
        for (i, c) in self.checks.iter().enumerate() {
            let sep = if i == 0 { " " } else { "; " };
            let mark = if c.ok { "" } else { "[x] " };
            let _ = write!(s, "{sep}{mark}{} {}", c.label, c.detail);
        }
        s
    }
}
