//! Result rows and CSV output.

use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Informational row without a check attached.
    Info,
    /// The computation itself failed.
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
            Status::Error => "error",
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(self, Status::Fail | Status::Error)
    }
}

/// One line of a report.
#[derive(Debug, Clone)]
pub struct Row {
    pub scenario: String,
    pub quantity: String,
    pub parameter: String,
    pub value: Option<f64>,
    pub oracle: Option<f64>,
    pub order: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
    /// Error message for `Status::Error` rows (stderr only).
    pub message: Option<String>,
}

impl Row {
    pub fn info(scenario: &str, quantity: &str, parameter: impl Into<String>, value: f64) -> Self {
        Row {
            scenario: scenario.to_string(),
            quantity: quantity.to_string(),
            parameter: parameter.into(),
            value: Some(value),
            oracle: None,
            order: None,
            tolerance: None,
            status: Status::Info,
            message: None,
        }
    }

    /// `|value − oracle| ≤ tolerance`.
    pub fn compare(scenario: &str, quantity: &str, parameter: impl Into<String>, value: f64, oracle: f64, tolerance: f64) -> Self {
        let ok = (value - oracle).abs() <= tolerance;
        Row {
            oracle: Some(oracle),
            tolerance: Some(tolerance),
            status: if ok { Status::Pass } else { Status::Fail },
            ..Row::info(scenario, quantity, parameter, value)
        }
    }

    /// `value ≤ bound` (the bound is reported as the oracle).
    pub fn at_most(scenario: &str, quantity: &str, parameter: impl Into<String>, value: f64, bound: f64, slack: f64) -> Self {
        Row {
            oracle: Some(bound),
            tolerance: Some(slack),
            status: if value <= bound + slack { Status::Pass } else { Status::Fail },
            ..Row::info(scenario, quantity, parameter, value)
        }
    }

    /// `value ≥ bound`, used for observed convergence orders.
    pub fn at_least(scenario: &str, quantity: &str, parameter: impl Into<String>, value: f64, bound: f64) -> Self {
        Row {
            oracle: Some(bound),
            status: if value >= bound { Status::Pass } else { Status::Fail },
            order: Some(value),
            ..Row::info(scenario, quantity, parameter, value)
        }
    }

    pub fn error(scenario: &str, quantity: &str, parameter: impl Into<String>, message: impl Into<String>) -> Self {
        Row {
            scenario: scenario.to_string(),
            quantity: quantity.to_string(),
            parameter: parameter.into(),
            value: None,
            oracle: None,
            order: None,
            tolerance: None,
            status: Status::Error,
            message: Some(message.into()),
        }
    }

    pub fn with_order(mut self, order: Option<f64>) -> Self {
        self.order = order;
        self
    }

    pub fn abs_error(&self) -> Option<f64> {
        Some((self.value? - self.oracle?).abs())
    }

    pub fn rel_error(&self) -> Option<f64> {
        let o = self.oracle?;
        let a = self.abs_error()?;
        Some(if o == 0.0 { a } else { a / o.abs() })
    }
}

/// Scientific notation for tiny magnitudes, shortest round-trip otherwise.
pub fn fmt_num(x: Option<f64>) -> String {
    match x {
        None => String::new(),
        Some(v) if v.is_nan() => "nan".into(),
        Some(v) if v != 0.0 && v.abs() < 1e-3 => format!("{v:e}"),
        Some(v) => format!("{v}"),
    }
}

pub const HEADER: [&str; 10] = [
    "scenario",
    "quantity",
    "parameter",
    "value",
    "oracle",
    "abs_error",
    "rel_error",
    "order",
    "tolerance",
    "status",
];

pub fn write_rows(path: &Path, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.quantity.clone(),
            r.parameter.clone(),
            fmt_num(r.value),
            fmt_num(r.oracle),
            fmt_num(r.abs_error()),
            fmt_num(r.rel_error()),
            fmt_num(r.order),
            fmt_num(r.tolerance),
            r.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timings(path: &Path, timings: &[(String, Duration)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["scenario", "seconds"])?;
    for (name, d) in timings {
        w.write_record([name.clone(), format!("{:.6}", d.as_secs_f64())])?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable line for stdout/stderr.
pub fn describe(r: &Row) -> String {
    let mut s = format!("{:<6} {} {} {}", r.status.as_str().to_uppercase(), r.scenario, r.quantity, r.parameter);
    if let Some(v) = r.value {
        s += &format!(" value={}", fmt_num(Some(v)));
    }
    if let Some(o) = r.oracle {
        s += &format!(" oracle={}", fmt_num(Some(o)));
    }
    if let Some(t) = r.tolerance {
        s += &format!(" tol={}", fmt_num(Some(t)));
    }
    if let Some(m) = &r.message {
        s += &format!(" ({m})");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(Some(0.0)), "0");
        assert_eq!(fmt_num(Some(2.5)), "2.5");
        assert_eq!(fmt_num(Some(1.5e-7)), "1.5e-7");
        assert_eq!(fmt_num(None), "");
    }

    #[test]
    fn comparison_rows() {
        assert_eq!(Row::compare("s", "q", "", 1.0, 1.0 + 1e-10, 1e-8).status, Status::Pass);
        assert_eq!(Row::compare("s", "q", "", 1.0, 2.0, 1e-8).status, Status::Fail);
        assert_eq!(Row::at_least("s", "q", "", 1.95, 1.9).status, Status::Pass);
        assert_eq!(Row::compare("s", "q", "", 1.0, 2.0, 1e-8).rel_error(), Some(0.5));
    }
}
