//! Fourier-space propagators `F(p, T) = E[exp(−ip(x_T − x₀ − rT))]`.
//!
//! The exponential-Vasicek propagator comes from integrating the log-volatility
//! path integral after expanding `e^ζ` to second order around the mean
//! level. Its building blocks are the complex coefficients in [`CharCoeffs`].
//!
//! All evaluation happens in log space and is exponentiated once at the end:
//! the individual exponents grow like `p²` and overflow long before their sum
//! does.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{LnParams, SvModel};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Complex intermediates of the exponential-Vasicek propagator for one
/// Fourier mode and horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharCoeffs {
    pub a_coef: Complex64,
    pub b_coef: Complex64,
    pub omega: Complex64,
    pub m_coef: Complex64,
    pub n_coef: Complex64,
    pub xi: Complex64,
}

/// `|ω|` below which the `γ²M/ω²` terms are not evaluated directly.
pub fn branch_epsilon(params: &LnParams) -> f64 {
    1e-12 * (params.beta + params.gamma * params.gamma)
}

/// `1 − e^{−z}` without cancellation for small `|z|`.
fn one_minus_exp_neg(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        // alternating Taylor series, truncation error below 1e-14 · |z|
        let mut term = z;
        let mut sum = z;
        for k in 2..=7 {
            term = -term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        1.0 - (-z).exp()
    }
}

struct Raw {
    coeffs: CharCoeffs,
    log_f: Complex64,
    sqrt_arg: Complex64,
}

fn evaluate(params: &LnParams, zeta0: f64, p: Complex64, t: f64) -> Raw {
    let LnParams {
        beta,
        a_bar,
        gamma,
        rho,
        ..
    } = *params;
    let g2 = gamma * gamma;
    let a = ((1.0 - rho * rho) * p * p - I * p) * (2.0 * a_bar).exp();
    let b = I * p * rho * a_bar.exp() / gamma;
    let omega = (beta * beta + 2.0 * g2 * (a + b * beta - b * g2 / 4.0)).sqrt();
    let m = a + b * beta - b * g2 / 2.0;

    let q = g2 * m / (omega * omega);
    let decay = (-omega * t).exp();
    let e2 = one_minus_exp_neg(2.0 * omega * t);
    let n = q - (zeta0 + q) * decay;
    let bg = b * g2;
    let xi = omega * (2.0 * bg * n + omega * (n - q) * (n - q) - (beta + bg) * n * n)
        + e2 * (b * b * g2 * g2 / 2.0 - b * g2 * g2 * m / omega
            + (beta + bg) * g2 * g2 * m * m / (2.0 * omega * omega * omega));

    let shift = beta - omega + bg;
    let sqrt_arg = 1.0 + e2 / (2.0 * omega) * shift;
    let log_f = b * zeta0.exp_m1()
        + (beta * zeta0 * zeta0 - omega * (zeta0 + q) * (zeta0 + q)) / (2.0 * g2)
        + ((beta - omega - a + bg) / 2.0 + g2 * m * m / (2.0 * omega * omega)) * t
        + xi / (g2 * (2.0 * omega + shift * e2))
        - 0.5 * sqrt_arg.ln();

    Raw {
        coeffs: CharCoeffs {
            a_coef: a,
            b_coef: b,
            omega,
            m_coef: m,
            n_coef: n,
            xi,
        },
        log_f,
        sqrt_arg,
    }
}

/// Coefficients `A, B, ω, M, N, Ξ` at Fourier mode `p` and horizon `t`.
pub fn ln_coeffs(params: &LnParams, p: Complex64, t: f64) -> Result<CharCoeffs> {
    let raw = evaluate(params, params.zeta0(), p, t);
    if raw.coeffs.omega.norm() < branch_epsilon(params) {
        return Err(Error::BranchDegenerate { p });
    }
    Ok(raw.coeffs)
}

/// `|ω|` below which the closed form loses too many digits to cancellation in
/// the `γ²M/ω²` terms and the propagator is evaluated by analytic continuation.
pub fn continuation_threshold(params: &LnParams) -> f64 {
    1e-2 * (params.beta + params.gamma * params.gamma)
}

const CIRCLE_POINTS: usize = 16;

// F is even in ω, hence analytic in p where ω² = 0: its mean over a small
// circle equals the value at the centre. The radius grows until every node
// sits clear of the cancellation region.
fn circle_mean(params: &LnParams, p: Complex64, t: f64) -> Result<Complex64> {
    let threshold = continuation_threshold(params);
    let mut radius = 1e-3 * (1.0 + p.norm());
    'radius: for _ in 0..20 {
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..CIRCLE_POINTS {
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / CIRCLE_POINTS as f64;
            let z = p + Complex64::from_polar(radius, angle);
            let raw = evaluate(params, params.zeta0(), z, t);
            if raw.coeffs.omega.norm() < 2.0 * threshold {
                radius *= 2.0;
                continue 'radius;
            }
            sum += raw.log_f.exp();
        }
        return Ok(sum / CIRCLE_POINTS as f64);
    }
    Err(Error::BranchDegenerate { p })
}

/// `ln F(p, T)` for the exponential-Vasicek model.
pub fn ln_log_char_fn(params: &LnParams, p: Complex64, t: f64) -> Result<Complex64> {
    let raw = evaluate(params, params.zeta0(), p, t);
    let log_f = if raw.coeffs.omega.norm() < continuation_threshold(params) {
        circle_mean(params, p, t)?.ln()
    } else {
        raw.log_f
    };
    if !(log_f.re.is_finite() && log_f.im.is_finite()) || log_f.re > 700.0 {
        return Err(Error::NonFiniteResult { p });
    }
    Ok(log_f)
}

/// `F(p, T)` for the exponential-Vasicek model.
pub fn ln_char_fn(params: &LnParams, p: Complex64, t: f64) -> Result<Complex64> {
    Ok(ln_log_char_fn(params, p, t)?.exp())
}

/// Black-Scholes propagator `exp(−(p² − ip)σ²t/2)`.
pub fn const_vol_char_fn(sigma: f64, p: Complex64, t: f64) -> Complex64 {
    const_vol_log_char_fn(sigma, p, t).exp()
}

fn const_vol_log_char_fn(sigma: f64, p: Complex64, t: f64) -> Complex64 {
    -(p * p - I * p) * sigma * sigma * t / 2.0
}

/// A diffusion model that exposes its Fourier propagator.
pub trait CharModel: Send + Sync {
    fn log_char_fn(&self, p: Complex64, t: f64) -> Result<Complex64>;

    fn char_fn(&self, p: Complex64, t: f64) -> Result<Complex64> {
        Ok(self.log_char_fn(p, t)?.exp())
    }

    fn rate(&self) -> f64;

    /// Arguments of the complex square roots taken during evaluation; empty
    /// when the model takes none.
    fn branch_angles(&self, _p: Complex64, _t: f64) -> Vec<f64> {
        Vec::new()
    }
}

impl CharModel for LnParams {
    fn log_char_fn(&self, p: Complex64, t: f64) -> Result<Complex64> {
        ln_log_char_fn(self, p, t)
    }

    fn rate(&self) -> f64 {
        self.r
    }

    fn branch_angles(&self, p: Complex64, t: f64) -> Vec<f64> {
        let raw = evaluate(self, self.zeta0(), p, t);
        vec![raw.coeffs.omega.arg(), raw.sqrt_arg.arg()]
    }
}

/// Constant volatility reference model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstVolCharModel {
    pub sigma: f64,
    pub r: f64,
}

impl CharModel for ConstVolCharModel {
    fn log_char_fn(&self, p: Complex64, t: f64) -> Result<Complex64> {
        Ok(const_vol_log_char_fn(self.sigma, p, t))
    }

    fn rate(&self) -> f64 {
        self.r
    }
}

impl CharModel for SvModel {
    fn log_char_fn(&self, p: Complex64, t: f64) -> Result<Complex64> {
        match self {
            SvModel::Ln(params) => params.log_char_fn(p, t),
            SvModel::ConstVol { sigma, .. } => Ok(const_vol_log_char_fn(*sigma, p, t)),
        }
    }

    fn rate(&self) -> f64 {
        SvModel::rate(self)
    }

    fn branch_angles(&self, p: Complex64, t: f64) -> Vec<f64> {
        match self {
            SvModel::Ln(params) => params.branch_angles(p, t),
            SvModel::ConstVol { .. } => Vec::new(),
        }
    }
}

/// Result of monitoring square-root branches along an ordered grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BranchReport {
    /// Largest change of any square-root argument between adjacent nodes.
    pub max_jump: f64,
    /// Grid nodes where a change of at least π/2 was seen.
    pub violations: Vec<Complex64>,
}

impl BranchReport {
    pub fn is_continuous(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Track the arguments of ω and of the prefactor square root along `grid`.
pub fn branch_scan<M: CharModel + ?Sized>(model: &M, t: f64, grid: &[Complex64]) -> BranchReport {
    let mut report = BranchReport::default();
    let mut prev: Option<Vec<f64>> = None;
    for &p in grid {
        let angles = model.branch_angles(p, t);
        if let Some(prev) = &prev {
            let jump = prev
                .iter()
                .zip(&angles)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            report.max_jump = report.max_jump.max(jump);
            if jump >= std::f64::consts::FRAC_PI_2 {
                report.violations.push(p);
            }
        }
        prev = Some(angles);
    }
    report
}
