//! European vanilla prices and marginal log-return densities by Fourier
//! inversion of `Φ(p) = F(p, T)·e^{U(p, T)}`.
//!
//! With `κ = ln(K/S₀) − rT` and
//! `G(p) = S₀Φ(p + i) − K e^{−rT} Φ(p)`, the call price is evaluated on the
//! half line,
//!
//! ```text
//! C = G(0)/2 − (1/π) ∫₀^∞ Im[e^{ipκ} G(p)] / p dp,
//! ```
//!
//! which folds the two-sided `1/p` integral onto its odd part using
//! `G(−p) = conj G(p)` for real `p`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfn::{branch_scan, CharModel};
use crate::error::{Error, Result, ValidationError};
use crate::jumps::PreparedJumps;
use crate::model::{check, JumpSpec, MarketRequest, SvModel};
use crate::quadrature;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Below this `p` the call integrand is replaced by its limit at zero.
const SMALL_P: f64 = 1e-6;

/// Grid points used for the square-root branch monitor.
const BRANCH_SCAN_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureControls {
    /// Target absolute error (currency units for prices, density units for densities).
    pub abs_tol: f64,
    /// Hard cutoff on the Fourier variable.
    pub p_max_cap: f64,
    /// Integrand magnitude below which the tail is dropped.
    pub tail_eps: f64,
}

impl QuadratureControls {
    pub fn for_spot(s0: f64) -> Self {
        QuadratureControls {
            abs_tol: 1e-6 * s0,
            p_max_cap: 2000.0,
            tail_eps: 1e-12,
        }
    }

    pub fn with_abs_tol(self, abs_tol: f64) -> Self {
        QuadratureControls { abs_tol, ..self }
    }

    pub fn violations(&self) -> Vec<ValidationError> {
        [
            ("abs_tol", self.abs_tol),
            ("p_max_cap", self.p_max_cap),
            ("tail_eps", self.tail_eps),
        ]
        .into_iter()
        .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
        .map(|(field, value)| ValidationError::ControlNotPositive { field, value })
        .collect()
    }
}

impl Default for QuadratureControls {
    fn default() -> Self {
        QuadratureControls::for_spot(100.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceDiagnostics {
    /// `|F(i, T)e^{U(i, T)} − 1|`; zero for an exact martingale model.
    pub martingale_deviation: f64,
    pub branch_continuous: bool,
    /// Largest change of a square-root argument between adjacent monitor nodes.
    pub branch_max_jump: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceResult {
    pub price: f64,
    pub est_error: f64,
    pub p_max_used: f64,
    pub diagnostics: PriceDiagnostics,
}

/// A diffusion model and prepared jumps, ready for repeated inversions.
pub struct FourierPricer<'a, M: CharModel + ?Sized> {
    model: &'a M,
    jumps: PreparedJumps,
    controls: QuadratureControls,
}

impl<'a, M: CharModel + ?Sized> FourierPricer<'a, M> {
    pub fn new(model: &'a M, jumps: &JumpSpec, controls: QuadratureControls) -> Result<Self> {
        let mut errs = jumps.violations();
        errs.extend(controls.violations());
        check(errs)?;
        Ok(FourierPricer {
            model,
            jumps: PreparedJumps::new(jumps)?,
            controls,
        })
    }

    pub fn controls(&self) -> &QuadratureControls {
        &self.controls
    }

    /// `F(p, T)·e^{U(p, T)}`.
    pub fn propagator(&self, p: Complex64, t: f64) -> Result<Complex64> {
        Ok((self.model.log_char_fn(p, t)? + self.jumps.u(p, t)?).exp())
    }

    /// `G(p) = S₀Φ(p + i) − K e^{−rT} Φ(p)`.
    pub fn g(&self, req: &MarketRequest, p: Complex64) -> Result<Complex64> {
        let discount = (-self.model.rate() * req.t).exp();
        Ok(req.s0 * self.propagator(p + I, req.t)? - req.k * discount * self.propagator(p, req.t)?)
    }

    pub fn martingale_deviation(&self, t: f64) -> Result<f64> {
        Ok((self.propagator(I, t)? - 1.0).norm())
    }

    pub fn call(&self, req: &MarketRequest) -> Result<PriceResult> {
        check(req.violations())?;
        let r = self.model.rate();
        let kappa = (req.k / req.s0).ln() - r * req.t;
        let integrand = |p: f64| -> Result<f64> {
            Ok(((I * p * kappa).exp() * self.g(req, Complex64::new(p, 0.0))?).im / p)
        };
        // the integrand is analytic at 0; Richardson-extrapolate its limit
        let at_zero = 2.0 * integrand(SMALL_P)? - integrand(2.0 * SMALL_P)?;
        let width = panel_width(kappa);
        let tol = self.controls.abs_tol * std::f64::consts::PI;
        let hl = quadrature::half_line(
            |p| if p < SMALL_P { Ok(at_zero) } else { integrand(p) },
            width,
            self.controls.tail_eps,
            self.controls.p_max_cap,
            tol,
        )?;
        let mut est_error = hl.error / std::f64::consts::PI;
        if hl.truncated {
            est_error += hl.tail_magnitude * width / std::f64::consts::PI;
            if est_error > self.controls.abs_tol {
                return Err(Error::QuadratureNotConverged {
                    achieved: est_error,
                    target: self.controls.abs_tol,
                    at: Some(hl.p_max),
                });
            }
        }
        let g0 = self.g(req, Complex64::new(0.0, 0.0))?;
        let price = 0.5 * g0.re - hl.value / std::f64::consts::PI;
        let diagnostics = self.diagnostics(req.t, hl.p_max)?;
        let result = PriceResult {
            price,
            est_error,
            p_max_used: hl.p_max,
            diagnostics,
        };
        reject_negative(result, self.controls.abs_tol)
    }

    /// Put by parity from the same inversion as the call.
    pub fn put(&self, req: &MarketRequest) -> Result<PriceResult> {
        let call = self.call(req)?;
        let parity = req.s0 - req.k * (-self.model.rate() * req.t).exp();
        let put = PriceResult {
            price: call.price - parity,
            ..call
        };
        reject_negative(put, self.controls.abs_tol)
    }

    fn diagnostics(&self, t: f64, p_max: f64) -> Result<PriceDiagnostics> {
        let step = p_max / BRANCH_SCAN_POINTS as f64;
        let real: Vec<Complex64> = (0..=BRANCH_SCAN_POINTS)
            .map(|i| Complex64::new(i as f64 * step, 0.0))
            .collect();
        let shifted: Vec<Complex64> = real.iter().map(|p| p + I).collect();
        let a = branch_scan(self.model, t, &real);
        let b = branch_scan(self.model, t, &shifted);
        Ok(PriceDiagnostics {
            martingale_deviation: self.martingale_deviation(t)?,
            branch_continuous: a.is_continuous() && b.is_continuous(),
            branch_max_jump: a.max_jump.max(b.max_jump),
        })
    }

    /// Density of the log-return `x_T − x₀` at each point of `returns`.
    pub fn log_return_density(&self, t: f64, returns: &[f64]) -> Result<Vec<f64>> {
        let drift = self.model.rate() * t;
        returns
            .iter()
            .map(|&y| {
                let u = y - drift;
                self.half_line_real(t, panel_width(u), |p, phi| {
                    ((I * p * u).exp() * phi).re
                })
            })
            .collect()
    }

    /// Probability that `x_T − x₀` falls in each `[edges[i], edges[i+1])`.
    pub fn bin_masses(&self, t: f64, edges: &[f64]) -> Result<Vec<f64>> {
        let drift = self.model.rate() * t;
        edges
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0] - drift, w[1] - drift);
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                let width = panel_width(mid.abs().max(a.abs()).max(b.abs()));
                // ∫_a^b e^{ipu} du = e^{ip·mid} · 2 sin(p·half)/p
                self.half_line_real(t, width, |p, phi| {
                    let kernel = if p == 0.0 { 2.0 * half } else { 2.0 * (p * half).sin() / p };
                    ((I * p * mid).exp() * phi).re * kernel
                })
            })
            .collect()
    }

    fn half_line_real<K>(&self, t: f64, width: f64, kernel: K) -> Result<f64>
    where
        K: Fn(f64, Complex64) -> f64,
    {
        let hl = quadrature::half_line(
            |p| Ok(kernel(p, self.propagator(Complex64::new(p, 0.0), t)?)),
            width,
            self.controls.tail_eps,
            self.controls.p_max_cap,
            self.controls.abs_tol * std::f64::consts::PI,
        )?;
        Ok(hl.value / std::f64::consts::PI)
    }
}

// At least 8 panels per oscillation period of e^{ipκ}.
fn panel_width(freq: f64) -> f64 {
    let cap = 5.0;
    if freq == 0.0 {
        cap
    } else {
        (2.0 * std::f64::consts::PI / (8.0 * freq.abs())).min(cap)
    }
}

fn reject_negative(result: PriceResult, abs_tol: f64) -> Result<PriceResult> {
    if result.price < -abs_tol.max(result.est_error) {
        Err(Error::NegativePrice {
            price: result.price,
            est_error: result.est_error,
            martingale_deviation: result.diagnostics.martingale_deviation,
        })
    } else {
        Ok(result)
    }
}

fn validated_pricer<'a>(
    model: &'a SvModel,
    jumps: &JumpSpec,
    req: Option<&MarketRequest>,
    controls: &QuadratureControls,
) -> Result<FourierPricer<'a, SvModel>> {
    let mut errs = model.violations();
    errs.extend(jumps.violations());
    errs.extend(controls.violations());
    if let Some(req) = req {
        errs.extend(req.violations());
    }
    check(errs)?;
    FourierPricer::new(model, jumps, *controls)
}

/// `G(p)` for a validated model.
pub fn g_function(
    model: &SvModel,
    jumps: &JumpSpec,
    req: &MarketRequest,
    p: Complex64,
) -> Result<Complex64> {
    validated_pricer(model, jumps, Some(req), &QuadratureControls::for_spot(req.s0))?.g(req, p)
}

pub fn call_price(
    model: &SvModel,
    jumps: &JumpSpec,
    req: &MarketRequest,
    controls: &QuadratureControls,
) -> Result<PriceResult> {
    validated_pricer(model, jumps, Some(req), controls)?.call(req)
}

pub fn put_price(
    model: &SvModel,
    jumps: &JumpSpec,
    req: &MarketRequest,
    controls: &QuadratureControls,
) -> Result<PriceResult> {
    validated_pricer(model, jumps, Some(req), controls)?.put(req)
}

/// Call prices for several strikes, evaluated in parallel. Each strike is an
/// independent inversion, so results do not depend on the thread count.
pub fn call_prices(
    model: &SvModel,
    jumps: &JumpSpec,
    s0: f64,
    t: f64,
    strikes: &[f64],
    controls: &QuadratureControls,
) -> Result<Vec<PriceResult>> {
    let pricer = validated_pricer(model, jumps, None, controls)?;
    strikes
        .par_iter()
        .map(|&k| pricer.call(&MarketRequest::new(s0, k, t)))
        .collect()
}

/// Marginal density of `x_T` at each point of `x_grid` (absolute log-prices).
pub fn density(
    model: &SvModel,
    jumps: &JumpSpec,
    req: &MarketRequest,
    x_grid: &[f64],
    controls: &QuadratureControls,
) -> Result<Vec<f64>> {
    let pricer = validated_pricer(model, jumps, Some(req), controls)?;
    if let Some(&bad) = x_grid.iter().find(|x| !x.is_finite()) {
        return Err(ValidationError::NonFinite {
            field: "x_grid",
            value: bad,
        }
        .into());
    }
    let x0 = req.x0();
    let returns: Vec<f64> = x_grid.iter().map(|x| x - x0).collect();
    pricer.log_return_density(req.t, &returns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LnParams;
    use approx::assert_relative_eq;

    use crate::validation::oracles::{black_scholes_call as black_scholes, merton_series_call};

    #[test]
    fn table_one_spot_checks() {
        let controls = QuadratureControls::for_spot(100.0);
        let cases = [
            (100.0, 0.0, 0.5, 2.0, 9.1328),
            (110.0, -0.5, 1.2, 7.0, 5.1365),
            (90.0, -0.5, 1.2, 7.0, 15.2533),
        ];
        for (k, rho, gamma, beta, expected) in cases {
            let model = SvModel::Ln(LnParams::with_long_run_sigma0(beta, -1.6, gamma, rho, 0.015));
            let res = call_price(
                &model,
                &JumpSpec::none(),
                &MarketRequest::new(100.0, k, 1.0),
                &controls,
            )
            .unwrap();
            assert!((res.price - expected).abs() < 1e-3, "{} vs {expected}", res.price);
            assert!(res.diagnostics.branch_continuous);
            assert!(res.est_error <= controls.abs_tol);
        }
    }

    #[test]
    fn black_scholes_limit() {
        let params = LnParams::with_long_run_sigma0(5.0, -1.6, 1e-3, 0.0, 0.015);
        let controls = QuadratureControls::for_spot(100.0);
        for k in [80.0, 100.0, 125.0] {
            let req = MarketRequest::new(100.0, k, 1.0);
            let c = call_price(&SvModel::Ln(params), &JumpSpec::none(), &req, &controls).unwrap();
            let bs = black_scholes(100.0, k, 1.0, 0.015, (-1.6f64).exp());
            assert_relative_eq!(c.price, bs, max_relative = 1e-3);
        }
    }

    #[test]
    fn constant_vol_is_black_scholes() {
        let model = SvModel::ConstVol { sigma: 0.25, r: 0.03 };
        let controls = QuadratureControls::for_spot(100.0).with_abs_tol(1e-10);
        for (k, t) in [(60.0, 0.1), (100.0, 1.0), (150.0, 3.0)] {
            let c = call_price(&model, &JumpSpec::none(), &MarketRequest::new(100.0, k, t), &controls)
                .unwrap();
            assert_relative_eq!(c.price, black_scholes(100.0, k, t, 0.03, 0.25), epsilon = 1e-8);
            assert_eq!(c.diagnostics.martingale_deviation, 0.0);
        }
    }

    #[test]
    fn g_reduces_without_jumps() {
        let model = SvModel::Ln(LnParams::with_long_run_sigma0(5.0, -1.6, 0.5, -0.5, 0.015));
        let req = MarketRequest::new(100.0, 100.0, 1.0);
        let g0 = g_function(&model, &JumpSpec::none(), &req, Complex64::new(0.0, 0.0)).unwrap();
        let f_i = crate::charfn::ln_char_fn(
            match &model {
                SvModel::Ln(p) => p,
                _ => unreachable!(),
            },
            I,
            1.0,
        )
        .unwrap();
        assert!((g0 - (100.0 * f_i - 100.0 * (-0.015f64).exp())).norm() < 1e-12);
        // the martingale deviation of these parameters is small
        assert!((g0.re - (100.0 - 100.0 * (-0.015f64).exp())).abs() < 0.05);
    }

    // 40-digit evaluation of G at p = 1 with Fig. 2 parameters (K = 100).
    #[test]
    fn g_matches_high_precision_oracle() {
        let model = SvModel::Ln(LnParams::with_long_run_sigma0(5.0, -1.6, 0.5, -0.5, 0.015));
        let req = MarketRequest::new(100.0, 100.0, 1.0);
        let p = Complex64::new(1.0, 0.0);
        let cases = [
            (JumpSpec::none(), Complex64::new(1.5543337744146346, -4.0629854816981164)),
            (
                JumpSpec::merton(10.0, -0.01, 0.03),
                Complex64::new(1.5590353487445295, -4.9964785352611453),
            ),
            (
                JumpSpec::kou(10.0, 0.3, 0.7, 0.02, 0.04),
                Complex64::new(1.6458227695724588, -6.2753499275113409),
            ),
        ];
        for (jumps, expected) in cases {
            let g = g_function(&model, &jumps, &req, p).unwrap();
            assert!((g - expected).norm() < 1e-12, "{g} vs {expected}");
        }
    }

    #[test]
    fn parity_and_zero_size_jumps() {
        let model = SvModel::Ln(LnParams::with_long_run_sigma0(2.0, -1.6, 0.5, 0.0, 0.015));
        let controls = QuadratureControls::for_spot(100.0);
        let req = MarketRequest::new(100.0, 100.0, 1.0);
        let c = call_price(&model, &JumpSpec::none(), &req, &controls).unwrap();
        let p = put_price(&model, &JumpSpec::none(), &req, &controls).unwrap();
        assert!((c.price - p.price - (100.0 - 100.0 * (-0.015f64).exp())).abs() < 1e-12);
        assert!((p.price - (9.1328 - 100.0 + 100.0 * (-0.015f64).exp())).abs() < 1e-3);
        let p_jump = put_price(&model, &JumpSpec::merton(5.0, 0.0, 0.0), &req, &controls).unwrap();
        assert_eq!(p.price, p_jump.price);
    }

    #[test]
    fn deep_in_the_money_put_vanishes() {
        let model = SvModel::ConstVol { sigma: 0.2, r: 0.015 };
        let controls = QuadratureControls::for_spot(100.0).with_abs_tol(1e-9);
        let p = put_price(&model, &JumpSpec::none(), &MarketRequest::new(100.0, 1.0, 1.0), &controls)
            .unwrap();
        assert!(p.price.abs() < 1e-8, "{}", p.price);
    }

    #[test]
    fn density_normalization_and_gaussian_limit() {
        let model = SvModel::ConstVol { sigma: 0.2, r: 0.015 };
        let controls = QuadratureControls::default().with_abs_tol(1e-10);
        let req = MarketRequest::new(1.0, 1.0, 1.0);
        let n = 1201;
        let grid: Vec<f64> = (0..n).map(|i| -1.5 + 3.0 * i as f64 / (n - 1) as f64).collect();
        let pdf = density(&model, &JumpSpec::none(), &req, &grid, &controls).unwrap();
        let h = 3.0 / (n - 1) as f64;
        let mass: f64 = pdf.iter().enumerate().map(|(i, v)| {
            let w = if i == 0 || i == n - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * v
        }).sum::<f64>() * h / 3.0;
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
        let (mean, var) = (0.015 - 0.02, 0.04);
        for (x, v) in grid.iter().zip(&pdf) {
            let g = (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
            assert!((v - g).abs() < 1e-9);
        }
    }

    #[test]
    fn bin_masses_sum_to_one() {
        let model = SvModel::Ln(LnParams::with_long_run_sigma0(5.0, -1.6, 0.5, -0.5, 0.015));
        let pricer = FourierPricer::new(
            &model,
            &JumpSpec::kou(10.0, 0.3, 0.7, 0.02, 0.04),
            QuadratureControls::default().with_abs_tol(1e-11),
        )
        .unwrap();
        let edges: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
        let masses = pricer.bin_masses(1.0, &edges).unwrap();
        let total: f64 = masses.iter().sum();
        assert!((total - 1.0).abs() < 1e-8, "{total}");
        assert!(masses.iter().all(|m| *m > -1e-10));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let model = SvModel::ConstVol { sigma: 0.2, r: 0.0 };
        let r = call_price(
            &model,
            &JumpSpec::none(),
            &MarketRequest::new(100.0, -1.0, 0.0),
            &QuadratureControls { abs_tol: 0.0, ..Default::default() },
        );
        let err = r.unwrap_err();
        assert!(err.violations().contains(&ValidationError::StrikeNotPositive(-1.0)));
        assert!(err.violations().contains(&ValidationError::MaturityNotPositive(0.0)));
        assert!(err
            .violations()
            .iter()
            .any(|e| matches!(e, ValidationError::ControlNotPositive { field: "abs_tol", .. })));
    }
    #[test]
    fn merton_jumps_match_series() {
        let model = SvModel::ConstVol { sigma: 0.2, r: 0.015 };
        let jumps = JumpSpec::merton(10.0, -0.01, 0.03);
        let controls = QuadratureControls::for_spot(100.0).with_abs_tol(1e-9);
        for k in [80.0, 95.0, 100.0, 110.0, 120.0] {
            let c = call_price(&model, &jumps, &MarketRequest::new(100.0, k, 1.0), &controls).unwrap();
            let oracle = merton_series_call(100.0, k, 1.0, 0.015, 0.2, 10.0, -0.01, 0.03);
            assert_relative_eq!(c.price, oracle, max_relative = 1e-6);
        }
    }

    #[test]
    fn closed_and_numeric_jump_exponents_price_alike() {
        let model = SvModel::Ln(LnParams::with_long_run_sigma0(5.0, -1.6, 0.5, -0.5, 0.015));
        let controls = QuadratureControls::for_spot(100.0).with_abs_tol(1e-10);
        for jumps in [JumpSpec::merton(10.0, -0.01, 0.03), JumpSpec::kou(10.0, 0.3, 0.7, 0.02, 0.04)] {
            let numeric = jumps.as_numeric();
            for k in [90.0, 100.0, 110.0] {
                let req = MarketRequest::new(100.0, k, 1.0);
                let a = call_price(&model, &jumps, &req, &controls).unwrap().price;
                let b = call_price(&model, &numeric, &req, &controls).unwrap().price;
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn calls_are_convex_and_decreasing_in_strike() {
        let model = SvModel::Ln(LnParams::with_long_run_sigma0(5.0, -1.6, 0.5, -0.5, 0.015));
        let strikes: Vec<f64> = (0..21).map(|i| 80.0 + 2.0 * i as f64).collect();
        let prices: Vec<f64> = call_prices(
            &model,
            &JumpSpec::kou(10.0, 0.3, 0.7, 0.02, 0.04),
            100.0,
            1.0,
            &strikes,
            &QuadratureControls::for_spot(100.0),
        )
        .unwrap()
        .iter()
        .map(|r| r.price)
        .collect();
        for w in prices.windows(3) {
            assert!(w[0] > w[1] && w[1] > w[2]);
            assert!(w[0] - 2.0 * w[1] + w[2] > -1e-6);
        }
    }
}
