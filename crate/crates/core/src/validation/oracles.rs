//! Closed-form reference prices that share no code with the Fourier route.

use statrs::distribution::{ContinuousCDF, Normal};

fn norm_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").cdf(x)
}

/// Black-Scholes call with continuously compounded rate `r`.
pub fn black_scholes_call(s0: f64, k: f64, t: f64, r: f64, sigma: f64) -> f64 {
    let sd = sigma * t.sqrt();
    let d1 = ((s0 / k).ln() + (r + 0.5 * sigma * sigma) * t) / sd;
    s0 * norm_cdf(d1) - k * (-r * t).exp() * norm_cdf(d1 - sd)
}

/// Merton's Poisson-weighted sum of Black-Scholes prices for log-normal
/// jumps `J ~ N(ν, δ²)` arriving at rate `λ` on top of constant volatility.
#[allow(clippy::too_many_arguments)]
pub fn merton_series_call(
    s0: f64,
    k: f64,
    t: f64,
    r: f64,
    sigma: f64,
    lambda: f64,
    nu: f64,
    delta: f64,
) -> f64 {
    let log_mean = nu + 0.5 * delta * delta;
    let m = log_mean.exp_m1();
    let intensity = lambda * (1.0 + m) * t;
    let mut weight = (-intensity).exp();
    let mut total = 0.0;
    let mut n = 0u32;
    loop {
        let nf = n as f64;
        let sigma_n = (sigma * sigma + nf * delta * delta / t).sqrt();
        let r_n = r - lambda * m + nf * log_mean / t;
        total += weight * black_scholes_call(s0, k, t, r_n, sigma_n);
        n += 1;
        weight *= intensity / n as f64;
        // weights decay super-geometrically once n exceeds the mean count
        if n as f64 > intensity && weight * s0 < 1e-18 * total.max(1e-300) || n > 10_000 {
            return total;
        }
    }
}
