//! Residual of the Kolmogorov backward equation applied to the jump-free
//! analytic propagator `P(x_T | x₀, ζ₀; T)`:
//!
//! ```text
//! −∂P/∂T + (r − v/2)∂P/∂x₀ + (v/2)∂²P/∂x₀² − βζ₀∂P/∂ζ₀ + (γ²/2)∂²P/∂ζ₀²
//!        + ρ√v γ ∂²P/∂x₀∂ζ₀,      v = e^{2(ζ₀ + ā)}.
//! ```
//!
//! All six derivatives are taken under one fixed Kronrod rule on `[0, p_max]`
//! so that the differenced densities see identical quadrature error. `ζ₀` and
//! `T` are differenced; `x₀` enters only through `e^{ip(x_T − x₀)}`, so its
//! derivatives are exact multiplications by `−ip` unless finite differences
//! are requested.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charfn::ln_char_fn;
use crate::error::{Error, Result, ValidationError};
use crate::model::{check, LnParams};
use crate::quadrature::fixed_rule;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const P_CAP: f64 = 2000.0;
const TAIL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XDerivative {
    Spectral,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdSteps {
    pub h_x: f64,
    pub h_zeta: f64,
    pub h_t: f64,
    pub x_derivative: XDerivative,
}

impl Default for FdSteps {
    fn default() -> Self {
        FdSteps {
            h_x: 1e-4,
            h_zeta: 1e-4,
            h_t: 1e-5,
            x_derivative: XDerivative::Spectral,
        }
    }
}

impl FdSteps {
    pub fn scaled(self, factor: f64) -> Self {
        FdSteps {
            h_x: self.h_x * factor,
            h_zeta: self.h_zeta * factor,
            h_t: self.h_t * factor,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbeResidual {
    /// Log-returns `x_T − x₀` at which the residual was evaluated.
    pub x_grid: Vec<f64>,
    pub density: Vec<f64>,
    pub residual: Vec<f64>,
    pub max_abs: f64,
    pub p_max: f64,
}

/// Backward-equation residual on `x_grid` (log-returns `x_T − x₀`).
pub fn kbe_residual(params: &LnParams, t: f64, x_grid: &[f64], steps: &FdSteps) -> Result<KbeResidual> {
    let mut errs = params.violations();
    for (field, value) in [("h_x", steps.h_x), ("h_zeta", steps.h_zeta), ("h_t", steps.h_t)] {
        if !(value > 0.0 && value.is_finite()) {
            errs.push(ValidationError::ControlNotPositive { field, value });
        }
    }
    if !(t > steps.h_t && t.is_finite()) {
        errs.push(ValidationError::MaturityNotPositive(t));
    }
    if let Some(&x) = x_grid.iter().find(|x| !x.is_finite()) {
        errs.push(ValidationError::NonFinite { field: "x_grid", value: x });
    }
    check(errs)?;

    let (beta, gamma, rho, r) = (params.beta, params.gamma, params.rho, params.r);
    let z0 = params.zeta0();
    let f = |z: f64, tt: f64, p: f64| ln_char_fn(&params.with_zeta0(z), Complex64::new(p, 0.0), tt);

    let p_max = cutoff(|p| f(z0, t - steps.h_t, p))?;
    let spread = x_grid.iter().fold(0.0f64, |m, x| m.max(x.abs())) + r * t + steps.h_x;
    let width = (2.0 * std::f64::consts::PI / (8.0 * spread.max(1e-3))).min(2.0);
    let rule = fixed_rule(0.0, p_max, (p_max / width).ceil() as usize);

    struct Node {
        p: f64,
        w: f64,
        f0: Complex64,
        dz: Complex64,
        dzz: Complex64,
        dt: Complex64,
    }
    let (hz, ht) = (steps.h_zeta, steps.h_t);
    let nodes: Vec<Node> = rule
        .iter()
        .map(|&(p, w)| {
            let f0 = f(z0, t, p)?;
            let (zp, zm) = (f(z0 + hz, t, p)?, f(z0 - hz, t, p)?);
            let (tp, tm) = (f(z0, t + ht, p)?, f(z0, t - ht, p)?);
            Ok(Node {
                p,
                w,
                f0,
                dz: (zp - zm) / (2.0 * hz),
                dzz: (zp - 2.0 * f0 + zm) / (hz * hz),
                dt: (tp - tm) / (2.0 * ht),
            })
        })
        .collect::<Result<_>>()?;

    let v = (2.0 * (z0 + params.a_bar)).exp();
    let vol = v.sqrt();
    let mut density = Vec::with_capacity(x_grid.len());
    let mut residual = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        // P = (1/π)∫₀^∞ Re[e^{ip(x − rT)} F] dp; the T-derivative of the
        // phase contributes −ipr.
        let u = x - r * t;
        let integral = |g: &dyn Fn(&Node, Complex64) -> Complex64| -> f64 {
            nodes
                .iter()
                .map(|n| n.w * g(n, (I * n.p * u).exp()).re)
                .sum::<f64>()
                / std::f64::consts::PI
        };
        let p_t = integral(&|n, e| e * (n.dt - I * n.p * r * n.f0));
        let p_z = integral(&|n, e| e * n.dz);
        let p_zz = integral(&|n, e| e * n.dzz);
        let (p_x, p_xx, p_xz) = match steps.x_derivative {
            XDerivative::Spectral => (
                integral(&|n, e| -I * n.p * e * n.f0),
                integral(&|n, e| -(n.p * n.p) * e * n.f0),
                integral(&|n, e| -I * n.p * e * n.dz),
            ),
            XDerivative::FiniteDifference => {
                // shifting x₀ by +h moves the phase to e^{ip(u − h)}
                let h = steps.h_x;
                let shift = |n: &Node, s: f64| (-I * n.p * s * h).exp();
                (
                    integral(&|n, e| e * n.f0 * (shift(n, 1.0) - shift(n, -1.0)) / (2.0 * h)),
                    integral(&|n, e| e * n.f0 * (shift(n, 1.0) - 2.0 + shift(n, -1.0)) / (h * h)),
                    integral(&|n, e| e * n.dz * (shift(n, 1.0) - shift(n, -1.0)) / (2.0 * h)),
                )
            }
        };
        density.push(integral(&|n, e| e * n.f0));
        residual.push(
            -p_t + (r - 0.5 * v) * p_x + 0.5 * v * p_xx - beta * z0 * p_z
                + 0.5 * gamma * gamma * p_zz
                + rho * vol * gamma * p_xz,
        );
    }
    let max_abs = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(KbeResidual {
        x_grid: x_grid.to_vec(),
        density,
        residual,
        max_abs,
        p_max,
    })
}

// Smallest p beyond which p²|F| stays below TAIL, scanning on a unit grid.
fn cutoff(f: impl Fn(f64) -> Result<Complex64>) -> Result<f64> {
    let mut p = 1.0;
    while p < P_CAP {
        if f(p)?.norm() * (1.0 + p * p) < TAIL {
            return Ok(p);
        }
        p += 1.0;
    }
    Err(Error::QuadratureNotConverged {
        achieved: f(P_CAP)?.norm(),
        target: TAIL,
        at: Some(P_CAP),
    })
}

/// The three published density settings: `(T, ρ)` with `β = 5, ā = −1.6,
/// γ = 0.5, r = 0.015`.
pub fn figure_one_settings() -> [(f64, LnParams); 3] {
    let params = |rho| LnParams::with_long_run_sigma0(5.0, -1.6, 0.5, rho, 0.015);
    [(0.25, params(0.0)), (1.0, params(-0.5)), (5.0, params(0.5))]
}

/// Evenly spaced log-returns covering `±width` standard deviations of the
/// long-run volatility over `t`.
pub fn default_grid(params: &LnParams, t: f64, points: usize) -> Vec<f64> {
    let sd = (2.0 * params.a_bar).exp().sqrt() * t.sqrt();
    let half = 4.0 * sd;
    (0..points)
        .map(|i| -half + 2.0 * half * i as f64 / (points - 1).max(1) as f64 + params.r * t)
        .collect()
}
