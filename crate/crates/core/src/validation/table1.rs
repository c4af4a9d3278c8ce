//! The 54-row call price table: three strikes over eighteen `(ρ, γ, β)`
//! volatility settings.

use rayon::prelude::*;

use super::{ReportRow, ValidationConfig, ValidationReport, A_BAR, HORIZON, RATE, S0};
use crate::model::{JumpSpec, LnParams, MarketRequest, SvModel};
use crate::montecarlo::{mc_call_prices, PathConfig};
use crate::pricing::call_price;

const FIXTURE: &str = include_str!("../../fixtures/table1.csv");

/// Tolerance on `|analytic − published analytic|`.
pub const REFERENCE_TOLERANCE: f64 = 1e-3;
/// Tolerance on `|analytic − MC| / MC`, in percent.
pub const DEVIATION_TOLERANCE_PCT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub row: usize,
    pub k: f64,
    pub rho: f64,
    pub gamma: f64,
    pub beta: f64,
    pub mc_published: f64,
    pub approx_published: f64,
    pub rel_pct_published: f64,
}

impl Table1Row {
    pub fn params(&self) -> LnParams {
        LnParams::with_long_run_sigma0(self.beta, A_BAR, self.gamma, self.rho, RATE)
    }
}

pub fn table1_rows() -> Vec<Table1Row> {
    FIXTURE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("row,") && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let num = |i: usize| f[i].parse::<f64>().expect("numeric fixture field");
            Table1Row {
                row: f[0].parse().expect("row index"),
                k: num(1),
                rho: num(2),
                gamma: num(3),
                beta: num(4),
                mc_published: num(5),
                approx_published: num(6),
                rel_pct_published: num(7),
            }
        })
        .collect()
}

/// Distinct `(ρ, γ, β)` settings in table order.
pub(crate) fn groups(rows: &[Table1Row]) -> Vec<(f64, f64, f64)> {
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    for r in rows {
        let g = (r.rho, r.gamma, r.beta);
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

/// Analytic prices for every row and, when configured, simulated prices.
/// Each volatility setting gets its own seed (`seed + group index`) and one
/// set of paths shared by the three strikes.
pub fn table1_report(config: &ValidationConfig) -> ValidationReport {
    let fixture = table1_rows();
    let mut rows: Vec<ReportRow> = fixture
        .par_iter()
        .map(|r| {
            let priced = call_price(
                &SvModel::Ln(r.params()),
                &JumpSpec::none(),
                &MarketRequest::new(S0, r.k, HORIZON),
                &config.controls,
            );
            ReportRow {
                k: r.k,
                rho: r.rho,
                gamma: r.gamma,
                beta: r.beta,
                analytic: priced.as_ref().ok().map(|p| p.price),
                mc: None,
                rel_dev_pct: None,
                reference: Some(r.approx_published),
                reference_mc: Some(r.mc_published),
                error: priced.err().map(|e| e.to_string()),
            }
        })
        .collect();

    if let Some(paths) = config.paths {
        for (g, &(rho, gamma, beta)) in groups(&fixture).iter().enumerate() {
            let idx: Vec<usize> = (0..rows.len())
                .filter(|&i| (rows[i].rho, rows[i].gamma, rows[i].beta) == (rho, gamma, beta))
                .collect();
            let strikes: Vec<f64> = idx.iter().map(|&i| rows[i].k).collect();
            let cfg = PathConfig {
                seed: paths.seed.wrapping_add(g as u64),
                ..paths
            };
            let model = SvModel::Ln(LnParams::with_long_run_sigma0(beta, A_BAR, gamma, rho, RATE));
            match mc_call_prices(&model, &JumpSpec::none(), S0, HORIZON, &strikes, &cfg) {
                Ok(est) => {
                    for (&i, e) in idx.iter().zip(est) {
                        rows[i].mc = Some(e);
                        rows[i].fill_deviation();
                    }
                }
                Err(e) => {
                    for &i in &idx {
                        rows[i].error.get_or_insert_with(|| e.to_string());
                    }
                }
            }
        }
    }

    ValidationReport::new(
        "Call prices: analytic approximation vs Monte Carlo",
        rows,
        DEVIATION_TOLERANCE_PCT,
        REFERENCE_TOLERANCE,
    )
}
