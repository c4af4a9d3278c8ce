//! Map of analytic-vs-simulation deviation over the validity parameter
//! `c = β/γ²`, correlation and moneyness, with `γ` held fixed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ReportRow, ValidationConfig, ValidationReport, A_BAR, HORIZON, RATE, S0};
use crate::error::{Result, ValidationError};
use crate::model::{check, JumpSpec, LnParams, MarketRequest, SvModel};
use crate::montecarlo::{mc_call_prices, PathConfig};
use crate::pricing::call_price;

pub const C_RANGE: (f64, f64) = (2.0, 30.0);
pub const RHO_RANGE: (f64, f64) = (-0.5, 0.5);
pub const MONEYNESS_RANGE: (f64, f64) = (0.9, 1.1);
/// Region in which the approximation is claimed to hold.
pub const CLAIMED_MIN_C: f64 = 7.0;
pub const CLAIMED_MAX_T: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrid {
    pub c: Vec<f64>,
    pub rho: Vec<f64>,
    /// Strikes as fractions of spot.
    pub moneyness: Vec<f64>,
    pub gamma: f64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid {
            c: vec![2.0, 4.0, 7.0, 12.0, 20.0, 30.0],
            rho: vec![-0.5, 0.0, 0.5],
            moneyness: vec![0.9, 1.0, 1.1],
            gamma: 0.5,
        }
    }
}

impl ScanGrid {
    pub fn violations(&self) -> Vec<ValidationError> {
        let mut errs = Vec::new();
        let mut range = |field: &'static str, values: &[f64], (lo, hi): (f64, f64)| {
            for &value in values {
                if !(value >= lo && value <= hi) {
                    errs.push(ValidationError::ScanOutOfRange { field, value, lo, hi });
                }
            }
        };
        range("c", &self.c, C_RANGE);
        range("rho", &self.rho, RHO_RANGE);
        range("moneyness", &self.moneyness, MONEYNESS_RANGE);
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            errs.push(ValidationError::GammaNotPositive(self.gamma));
        }
        errs
    }
}

/// Whether a row sits in the claimed validity region (`c > 7`, `T ≤ 1`).
pub fn in_claimed_region(row: &ReportRow) -> bool {
    row.c() > CLAIMED_MIN_C && HORIZON <= CLAIMED_MAX_T
}

/// Analytic and simulated prices on the grid. Rows whose analytic price fails
/// carry the error instead of aborting the scan. Each `(c, ρ)` cell simulates
/// with `seed + cell index`, shared across strikes.
pub fn validity_scan(grid: &ScanGrid, config: &ValidationConfig) -> Result<ValidationReport> {
    check(grid.violations())?;
    let gamma = grid.gamma;
    let cells: Vec<(f64, f64)> = grid
        .c
        .iter()
        .flat_map(|&c| grid.rho.iter().map(move |&rho| (c, rho)))
        .collect();
    let mut rows: Vec<ReportRow> = cells
        .par_iter()
        .flat_map_iter(|&(c, rho)| {
            let params = LnParams::with_long_run_sigma0(c * gamma * gamma, A_BAR, gamma, rho, RATE);
            grid.moneyness.iter().map(move |&m| {
                let priced = call_price(
                    &SvModel::Ln(params),
                    &JumpSpec::none(),
                    &MarketRequest::new(S0, m * S0, HORIZON),
                    &config.controls,
                );
                ReportRow {
                    k: m * S0,
                    rho,
                    gamma,
                    beta: params.beta,
                    analytic: priced.as_ref().ok().map(|p| p.price),
                    mc: None,
                    rel_dev_pct: None,
                    reference: None,
                    reference_mc: None,
                    error: priced.err().map(|e| e.to_string()),
                }
            })
        })
        .collect();

    if let Some(paths) = config.paths {
        let strikes: Vec<f64> = grid.moneyness.iter().map(|m| m * S0).collect();
        for (cell, &(c, rho)) in cells.iter().enumerate() {
            let params = LnParams::with_long_run_sigma0(c * gamma * gamma, A_BAR, gamma, rho, RATE);
            let cfg = PathConfig {
                seed: paths.seed.wrapping_add(cell as u64),
                ..paths
            };
            let est = mc_call_prices(&SvModel::Ln(params), &JumpSpec::none(), S0, HORIZON, &strikes, &cfg)?;
            let base = cell * strikes.len();
            for (j, e) in est.into_iter().enumerate() {
                rows[base + j].mc = Some(e);
                rows[base + j].fill_deviation();
            }
        }
    }

    Ok(ValidationReport::new(
        "Deviation vs validity parameter c = β/γ²",
        rows,
        super::table1::DEVIATION_TOLERANCE_PCT,
        0.0,
    ))
}
