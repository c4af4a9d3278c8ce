//! Reproduction harnesses: the published price table, the density figures,
//! the backward-equation residual and the `c = β/γ²` validity scan, plus the
//! closed-form oracles they lean on.

pub mod figures;
pub mod kbe;
pub mod oracles;
pub mod scan;
pub mod table1;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::montecarlo::{MCEstimate, PathConfig};
use crate::pricing::QuadratureControls;

pub use figures::{figure_report, FigureReport, Which};
pub use kbe::{kbe_residual, FdSteps, KbeResidual, XDerivative};
pub use scan::{validity_scan, ScanGrid};
pub use table1::{table1_report, table1_rows, Table1Row};

/// Spot, rate, mean log-volatility and horizon shared by the price studies.
pub const S0: f64 = 100.0;
pub const RATE: f64 = 0.015;
pub const A_BAR: f64 = -1.6;
pub const HORIZON: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    /// Monte Carlo settings; `None` skips the simulation column.
    pub paths: Option<PathConfig>,
    pub controls: QuadratureControls,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            paths: Some(PathConfig {
                n_paths: 2_000_000,
                ..PathConfig::default()
            }),
            controls: QuadratureControls::for_spot(S0),
        }
    }
}

/// One priced case of a study over `(K, ρ, γ, β)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub k: f64,
    pub rho: f64,
    pub gamma: f64,
    pub beta: f64,
    pub analytic: Option<f64>,
    pub mc: Option<MCEstimate>,
    /// `(analytic − mc)/mc` in percent.
    pub rel_dev_pct: Option<f64>,
    /// Published analytic value, when one exists.
    pub reference: Option<f64>,
    /// Published simulation value, when one exists.
    pub reference_mc: Option<f64>,
    /// Set when the analytic price could not be computed.
    pub error: Option<String>,
}

impl ReportRow {
    pub fn c(&self) -> f64 {
        self.beta / (self.gamma * self.gamma)
    }

    pub fn reference_diff(&self) -> Option<f64> {
        Some(self.analytic? - self.reference?)
    }

    fn fill_deviation(&mut self) {
        self.rel_dev_pct = match (self.analytic, &self.mc) {
            (Some(a), Some(m)) => Some(100.0 * (a - m.mean) / m.mean),
            _ => None,
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max_abs_rel_dev_pct: Option<f64>,
    pub rel_dev_tolerance_pct: f64,
    pub max_abs_reference_diff: Option<f64>,
    pub reference_tolerance: f64,
    pub failed_rows: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub title: String,
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

impl ValidationReport {
    fn new(title: &str, rows: Vec<ReportRow>, rel_tol_pct: f64, ref_tol: f64) -> Self {
        let max_abs = |it: &mut dyn Iterator<Item = f64>| it.map(f64::abs).reduce(f64::max);
        let max_dev = max_abs(&mut rows.iter().filter_map(|r| r.rel_dev_pct));
        let max_ref = max_abs(&mut rows.iter().filter_map(|r| r.reference_diff()));
        let failed_rows = rows.iter().filter(|r| r.error.is_some()).count();
        let pass = failed_rows == 0
            && max_dev.is_none_or(|d| d < rel_tol_pct)
            && max_ref.is_none_or(|d| d <= ref_tol);
        ValidationReport {
            title: title.to_string(),
            summary: Summary {
                max_abs_rel_dev_pct: max_dev,
                rel_dev_tolerance_pct: rel_tol_pct,
                max_abs_reference_diff: max_ref,
                reference_tolerance: ref_tol,
                failed_rows,
                pass,
            },
            rows,
        }
    }

    /// Mean `|relative deviation|` over rows sharing a key, in first-seen order.
    pub fn block_averages<K: PartialEq + Clone>(&self, key: impl Fn(&ReportRow) -> K) -> Vec<(K, f64)> {
        let mut blocks: Vec<(K, f64, usize)> = Vec::new();
        for row in &self.rows {
            let Some(d) = row.rel_dev_pct else { continue };
            let k = key(row);
            match blocks.iter_mut().find(|b| b.0 == k) {
                Some(b) => {
                    b.1 += d.abs();
                    b.2 += 1;
                }
                None => blocks.push((k, d.abs(), 1)),
            }
        }
        blocks.into_iter().map(|(k, s, n)| (k, s / n as f64)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "k,rho,gamma,beta,c,analytic,mc,mc_stderr,rel_dev_pct,reference,reference_mc,error\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{},{},{},{},{},{},{}",
                r.k,
                r.rho,
                r.gamma,
                r.beta,
                r.c(),
                fmt_opt(r.analytic, 6),
                fmt_opt(r.mc.map(|m| m.mean), 6),
                fmt_opt(r.mc.map(|m| m.stderr), 6),
                fmt_opt(r.rel_dev_pct, 4),
                fmt_opt(r.reference, 4),
                fmt_opt(r.reference_mc, 4),
                r.error.as_deref().unwrap_or("").replace(',', ";"),
            );
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("# {}\n\n", self.title);
        out.push_str("| K | ρ | γ | β | c | analytic | MC ± stderr | rel. dev. (%) | reference |\n");
        out.push_str("|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
        for r in &self.rows {
            let mc = r
                .mc
                .map(|m| format!("{:.4} ± {:.4}", m.mean, m.stderr))
                .unwrap_or_else(|| "–".into());
            let analytic = match (&r.analytic, &r.error) {
                (Some(a), _) => format!("{a:.4}"),
                (None, Some(e)) => format!("invalid: {e}"),
                _ => "–".into(),
            };
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {:.2} | {} | {} | {} | {} |",
                r.k,
                r.rho,
                r.gamma,
                r.beta,
                r.c(),
                analytic,
                mc,
                fmt_opt(r.rel_dev_pct, 4),
                fmt_opt(r.reference, 4),
            );
        }
        let s = &self.summary;
        let _ = write!(
            out,
            "\nmax |rel. dev.|: {} % (tolerance {} %)  \nmax |analytic − reference|: {} (tolerance {})  \nrows without analytic price: {}  \nresult: {}\n",
            fmt_opt(s.max_abs_rel_dev_pct, 4),
            s.rel_dev_tolerance_pct,
            fmt_opt(s.max_abs_reference_diff, 6),
            s.reference_tolerance,
            s.failed_rows,
            if s.pass { "PASS" } else { "FAIL" },
        );
        out
    }
}

pub(crate) fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}
