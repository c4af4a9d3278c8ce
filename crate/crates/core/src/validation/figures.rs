//! Plot data for the density overlay (three horizons) and the jump-model
//! price curves.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{fmt_opt, ValidationConfig, A_BAR, HORIZON, RATE, S0};
use crate::error::Result;
use crate::model::{JumpSpec, LnParams, SvModel};
use crate::montecarlo::{simulate_terminal, PathConfig};
use crate::pricing::{call_prices, FourierPricer, QuadratureControls};

/// Strike band over which jump-model price deviations are assessed.
pub const MONEYNESS_BAND: (f64, f64) = (0.9, 1.1);
/// Tolerance on `|analytic − MC| / MC` inside the band, in percent.
pub const JUMP_DEVIATION_TOLERANCE_PCT: f64 = 2.0;
/// Per-bin tolerance in standard errors.
pub const BIN_TOLERANCE_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Fig1,
    Fig2,
}

/// Analytic bin masses against a simulated histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub label: String,
    pub t: f64,
    pub edges: Vec<f64>,
    /// Analytic density at the bin centres.
    pub analytic_pdf: Vec<f64>,
    pub analytic_mass: Vec<f64>,
    pub mc_mass: Option<Vec<f64>>,
    pub mc_stderr: Option<Vec<f64>>,
}

impl DensityCurve {
    pub fn centres(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// `(mc − analytic)/stderr` per bin; bins with zero stderr score zero when
    /// the masses agree and infinity otherwise.
    pub fn z_scores(&self) -> Option<Vec<f64>> {
        let (mc, se) = (self.mc_mass.as_ref()?, self.mc_stderr.as_ref()?);
        Some(
            self.analytic_mass
                .iter()
                .zip(mc.iter().zip(se))
                .map(|(a, (m, s))| {
                    let d = m - a;
                    if *s > 0.0 {
                        d / s
                    } else if d.abs() < 1e-12 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                })
                .collect(),
        )
    }

    pub fn max_abs_z(&self) -> Option<f64> {
        Some(self.z_scores()?.iter().fold(0.0f64, |m, z| m.max(z.abs())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceCurve {
    pub label: String,
    pub strikes: Vec<f64>,
    pub analytic: Vec<f64>,
    pub mc: Option<Vec<f64>>,
    pub mc_stderr: Option<Vec<f64>>,
}

impl PriceCurve {
    pub fn rel_dev_pct(&self) -> Option<Vec<f64>> {
        let mc = self.mc.as_ref()?;
        Some(self.analytic.iter().zip(mc).map(|(a, m)| 100.0 * (a - m) / m).collect())
    }

    /// Largest `|relative deviation|` with `K/S₀` inside [`MONEYNESS_BAND`].
    pub fn max_abs_dev_in_band(&self) -> Option<f64> {
        let dev = self.rel_dev_pct()?;
        Some(
            self.strikes
                .iter()
                .zip(dev)
                .filter(|(k, _)| in_band(**k / S0))
                .fold(0.0f64, |m, (_, d)| m.max(d.abs())),
        )
    }
}

fn in_band(moneyness: f64) -> bool {
    moneyness >= MONEYNESS_BAND.0 - 1e-12 && moneyness <= MONEYNESS_BAND.1 + 1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureReport {
    pub which: Which,
    pub densities: Vec<DensityCurve>,
    pub prices: Vec<PriceCurve>,
}

impl FigureReport {
    pub fn pass(&self) -> Option<bool> {
        match self.which {
            Which::Fig1 => self
                .densities
                .iter()
                .map(|c| c.max_abs_z().map(|z| z <= BIN_TOLERANCE_SIGMAS))
                .collect::<Option<Vec<_>>>()
                .map(|v| v.into_iter().all(|b| b)),
            Which::Fig2 => self
                .prices
                .iter()
                .map(|c| c.max_abs_dev_in_band().map(|d| d < JUMP_DEVIATION_TOLERANCE_PCT))
                .collect::<Option<Vec<_>>>()
                .map(|v| v.into_iter().all(|b| b)),
        }
    }

    pub fn to_csv(&self) -> String {
        match self.which {
            Which::Fig1 => {
                let mut out = String::from("curve,t,x,analytic_pdf,analytic_mass,mc_mass,mc_stderr,z\n");
                for c in &self.densities {
                    let z = c.z_scores();
                    for (i, x) in c.centres().iter().enumerate() {
                        let _ = writeln!(
                            out,
                            "{},{},{:.6},{:.8},{:.8},{},{},{}",
                            c.label,
                            c.t,
                            x,
                            c.analytic_pdf[i],
                            c.analytic_mass[i],
                            fmt_opt(c.mc_mass.as_ref().map(|m| m[i]), 8),
                            fmt_opt(c.mc_stderr.as_ref().map(|s| s[i]), 8),
                            fmt_opt(z.as_ref().map(|z| z[i]), 3),
                        );
                    }
                }
                out
            }
            Which::Fig2 => {
                let mut out = String::from("model,k,k_over_s0,analytic,mc,mc_stderr,rel_dev_pct\n");
                for c in &self.prices {
                    let dev = c.rel_dev_pct();
                    for (i, k) in c.strikes.iter().enumerate() {
                        let _ = writeln!(
                            out,
                            "{},{},{:.2},{:.6},{},{},{}",
                            c.label,
                            k,
                            k / S0,
                            c.analytic[i],
                            fmt_opt(c.mc.as_ref().map(|m| m[i]), 6),
                            fmt_opt(c.mc_stderr.as_ref().map(|s| s[i]), 6),
                            fmt_opt(dev.as_ref().map(|d| d[i]), 4),
                        );
                    }
                }
                out
            }
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        match self.which {
            Which::Fig1 => {
                out.push_str("# Log-return density: analytic vs Monte Carlo\n\n");
                out.push_str("| curve | T | bins | max abs z |\n|---|---:|---:|---:|\n");
                for c in &self.densities {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {} |",
                        c.label,
                        c.t,
                        c.analytic_mass.len(),
                        fmt_opt(c.max_abs_z(), 3)
                    );
                }
            }
            Which::Fig2 => {
                out.push_str("# Call prices with jumps: analytic vs Monte Carlo\n\n");
                let _ = writeln!(
                    out,
                    "| model | max abs rel. dev. (%) for {} ≤ K/S0 ≤ {} |\n|---|---:|",
                    MONEYNESS_BAND.0, MONEYNESS_BAND.1
                );
                for c in &self.prices {
                    let _ = writeln!(out, "| {} | {} |", c.label, fmt_opt(c.max_abs_dev_in_band(), 4));
                }
            }
        }
        let verdict = match self.pass() {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "analytic only",
        };
        let _ = writeln!(out, "\nresult: {verdict}");
        out
    }
}

/// Analytic bin masses of `x_T − x₀` against a histogram from `paths`.
pub fn density_comparison(
    label: &str,
    model: &SvModel,
    jumps: &JumpSpec,
    t: f64,
    edges: &[f64],
    paths: Option<&PathConfig>,
    controls: &QuadratureControls,
) -> Result<DensityCurve> {
    let pricer = FourierPricer::new(model, jumps, *controls)?;
    let centres: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let analytic_pdf = pricer.log_return_density(t, &centres)?;
    let analytic_mass = pricer.bin_masses(t, edges)?;
    let (mc_mass, mc_stderr) = match paths {
        Some(cfg) => {
            let hist = simulate_terminal(model, jumps, t, cfg)?.histogram(edges)?;
            (Some(hist.mass), Some(hist.stderr))
        }
        None => (None, None),
    };
    Ok(DensityCurve {
        label: label.to_string(),
        t,
        edges: edges.to_vec(),
        analytic_pdf,
        analytic_mass,
        mc_mass,
        mc_stderr,
    })
}

/// Equal bins over `±4` long-run standard deviations around the drift.
pub fn density_edges(params: &LnParams, t: f64, bins: usize) -> Vec<f64> {
    let var = (2.0 * params.a_bar).exp() * t;
    let centre = params.r * t - 0.5 * var;
    let half = 4.0 * var.sqrt();
    (0..=bins)
        .map(|i| centre - half + 2.0 * half * i as f64 / bins as f64)
        .collect()
}

/// Jump-model price comparison parameters: `β = 5, ā = −1.6, γ = 0.5, ρ = −0.5`.
pub fn figure_two_model() -> LnParams {
    LnParams::with_long_run_sigma0(5.0, A_BAR, 0.5, -0.5, RATE)
}

pub fn figure_two_jumps() -> [(&'static str, JumpSpec); 3] {
    [
        ("LN", JumpSpec::none()),
        ("LN+Merton", JumpSpec::merton(10.0, -0.01, 0.03)),
        ("LN+Kou", JumpSpec::kou(10.0, 0.3, 0.7, 0.02, 0.04)),
    ]
}

pub fn figure_two_strikes() -> Vec<f64> {
    (0..=20).map(|i| 80.0 + 2.0 * i as f64).collect()
}

const FIG1_BINS: usize = 40;

/// Density overlay (`Fig1`) or jump-model price curves (`Fig2`). Each curve
/// simulates with `seed + curve index`.
pub fn figure_report(which: Which, config: &ValidationConfig) -> Result<FigureReport> {
    let seeded = |i: usize| {
        config.paths.map(|p| PathConfig {
            seed: p.seed.wrapping_add(i as u64),
            ..p
        })
    };
    match which {
        Which::Fig1 => {
            let densities = super::kbe::figure_one_settings()
                .iter()
                .enumerate()
                .map(|(i, (t, params))| {
                    let label = format!("T={} rho={}", t, params.rho);
                    density_comparison(
                        &label,
                        &SvModel::Ln(*params),
                        &JumpSpec::none(),
                        *t,
                        &density_edges(params, *t, FIG1_BINS),
                        seeded(i).as_ref(),
                        &config.controls,
                    )
                })
                .collect::<Result<_>>()?;
            Ok(FigureReport {
                which,
                densities,
                prices: Vec::new(),
            })
        }
        Which::Fig2 => {
            let model = SvModel::Ln(figure_two_model());
            let strikes = figure_two_strikes();
            let prices = figure_two_jumps()
                .iter()
                .enumerate()
                .map(|(i, (label, jumps))| {
                    let analytic = call_prices(&model, jumps, S0, HORIZON, &strikes, &config.controls)?
                        .iter()
                        .map(|r| r.price)
                        .collect();
                    let (mc, mc_stderr) = match seeded(i) {
                        Some(cfg) => {
                            let sample = simulate_terminal(&model, jumps, HORIZON, &cfg)?;
                            let est: Vec<_> = strikes.iter().map(|&k| sample.call(S0, k, RATE)).collect();
                            (
                                Some(est.iter().map(|e| e.mean).collect()),
                                Some(est.iter().map(|e| e.stderr).collect()),
                            )
                        }
                        None => (None, None),
                    };
                    Ok(PriceCurve {
                        label: label.to_string(),
                        strikes: strikes.clone(),
                        analytic,
                        mc,
                        mc_stderr,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(FigureReport {
                which,
                densities: Vec::new(),
                prices,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn analytic_only() -> ValidationConfig {
        ValidationConfig {
            paths: None,
            ..ValidationConfig::default()
        }
    }

    #[test]
    fn longer_horizon_spans_wider_range() {
        let report = figure_report(Which::Fig1, &analytic_only()).unwrap();
        let span = |c: &DensityCurve| c.edges[c.edges.len() - 1] - c.edges[0];
        assert!(span(&report.densities[2]) > span(&report.densities[0]));
        for c in &report.densities {
            let covered: f64 = c.analytic_mass.iter().sum();
            assert!(covered > 0.99 && covered < 1.0 + 1e-9, "{covered}");
        }
        assert_eq!(report.pass(), None);
    }

    #[test]
    fn vanishing_intensity_recovers_plain_curve() {
        let model = SvModel::Ln(figure_two_model());
        let controls = QuadratureControls::for_spot(S0);
        let strikes = figure_two_strikes();
        let plain = call_prices(&model, &JumpSpec::none(), S0, 1.0, &strikes, &controls).unwrap();
        let tiny = call_prices(&model, &JumpSpec::merton(1e-12, -0.01, 0.03), S0, 1.0, &strikes, &controls)
            .unwrap();
        for (a, b) in plain.iter().zip(&tiny) {
            assert!((a.price - b.price).abs() < 1e-8);
        }
    }

    #[test]
    fn price_csv_has_every_strike() {
        let report = figure_report(Which::Fig2, &analytic_only()).unwrap();
        assert_eq!(report.to_csv().lines().count(), 1 + 3 * 21);
        assert!(report.to_markdown().contains("analytic only"));
    }
}
