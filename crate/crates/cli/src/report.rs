//! Machine-readable run reports: one JSON document or one CSV table per
//! invocation, with identical numbers in both. Floats are written in their
//! shortest round-trip form by default so reruns with the same seed produce
//! byte-identical files; `--digits` opts into rounded human-friendly CSV.

use std::fmt::Write as _;

use qosa::estimator::QosaEstimate;
use serde::Serialize;

/// One `(input, alpha)` cell of an estimation table.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub input: usize,
    pub input_name: String,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<QosaEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RmseRow {
    pub input: usize,
    pub input_name: String,
    pub alpha: f64,
    pub truth: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageRow {
    pub replication: usize,
    pub s_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageSummary {
    pub truth: f64,
    pub coverage: f64,
    pub mean_ci_width: f64,
    pub replications: Vec<CoverageRow>,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ReportDiagnostics {
    /// Cells that could not be estimated (degenerate tail).
    pub degenerate_cells: usize,
    /// Kernel weight-underflow fallbacks summed over all cells.
    pub kernel_fallbacks: usize,
}

/// The single document a command emits.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport<C: Serialize, R: Serialize> {
    pub command: &'static str,
    pub config: C,
    pub results: R,
    pub diagnostics: ReportDiagnostics,
    /// Wall-clock seconds; reported on stderr only so output files are
    /// reproducible byte for byte.
    #[serde(skip)]
    pub duration_seconds: f64,
}

/// Float formatting for CSV cells.
#[derive(Debug, Clone, Copy)]
pub struct Digits(pub Option<usize>);

impl Digits {
    fn fmt(&self, v: f64) -> String {
        match self.0 {
            Some(d) => format!("{v:.d$}"),
            None => format!("{v}"),
        }
    }

    fn fmt_opt(&self, v: Option<f64>) -> String {
        v.map(|v| self.fmt(v)).unwrap_or_default()
    }
}

fn push_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

pub fn estimate_rows_to_csv(rows: &[EstimateRow], digits: Digits) -> String {
    let mut out = String::new();
    out.push_str(
        "alpha,input,input_name,s_hat,ci_lo,ci_hi,sigma2,mean_r,mean_z,var_r,var_z,cov_rz,\
         n,bandwidth,kernel_fallbacks,conditional_exceedances,unconditional_exceedances,\
         truth,abs_error,error\n",
    );
    for row in rows {
        let e = row.estimate.as_ref();
        let cells = vec![
            digits.fmt(row.alpha),
            row.input.to_string(),
            row.input_name.clone(),
            digits.fmt_opt(e.map(|e| e.s_hat)),
            digits.fmt_opt(e.map(|e| e.ci_lo)),
            digits.fmt_opt(e.map(|e| e.ci_hi)),
            digits.fmt_opt(e.map(|e| e.sigma2)),
            digits.fmt_opt(e.map(|e| e.mean_r)),
            digits.fmt_opt(e.map(|e| e.mean_z)),
            digits.fmt_opt(e.map(|e| e.var_r)),
            digits.fmt_opt(e.map(|e| e.var_z)),
            digits.fmt_opt(e.map(|e| e.cov_rz)),
            e.map(|e| e.n.to_string()).unwrap_or_default(),
            digits.fmt_opt(e.map(|e| e.bandwidth)),
            e.map(|e| e.diagnostics.kernel_fallbacks.to_string())
                .unwrap_or_default(),
            e.map(|e| e.diagnostics.conditional_exceedances.to_string())
                .unwrap_or_default(),
            e.map(|e| e.diagnostics.unconditional_exceedances.to_string())
                .unwrap_or_default(),
            digits.fmt_opt(row.truth),
            digits.fmt_opt(row.abs_error),
            row.error.clone().unwrap_or_default().replace(',', ";"),
        ];
        push_row(&mut out, &cells);
    }
    out
}

pub fn rmse_rows_to_csv(rows: &[RmseRow], digits: Digits) -> String {
    let mut out = String::from("alpha,input,input_name,truth,rmse\n");
    for row in rows {
        let cells = vec![
            digits.fmt(row.alpha),
            row.input.to_string(),
            row.input_name.clone(),
            digits.fmt(row.truth),
            digits.fmt(row.rmse),
        ];
        push_row(&mut out, &cells);
    }
    out
}

pub fn coverage_to_csv(summary: &CoverageSummary, digits: Digits) -> String {
    let mut out =
        String::from("replication,s_hat,ci_lo,ci_hi,covered,truth,coverage,mean_ci_width\n");
    for row in &summary.replications {
        let cells = vec![
            row.replication.to_string(),
            digits.fmt(row.s_hat),
            digits.fmt(row.ci_lo),
            digits.fmt(row.ci_hi),
            row.covered.to_string(),
            digits.fmt(summary.truth),
            digits.fmt(summary.coverage),
            digits.fmt(summary.mean_ci_width),
        ];
        push_row(&mut out, &cells);
    }
    out
}

/// Render a report as JSON (always full precision).
pub fn to_json<C: Serialize, R: Serialize>(report: &RunReport<C, R>) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Stderr one-liner with the wall-clock duration.
pub fn log_duration(command: &str, duration_seconds: f64) {
    let mut line = String::new();
    let _ = write!(line, "{command}: completed in {duration_seconds:.3}s");
    eprintln!("{line}");
}
