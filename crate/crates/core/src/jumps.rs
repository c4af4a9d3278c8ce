//! Compound-Poisson jumps in the log-price: the compensator
//! `m^j = E[e^J − 1]` and the exponent
//!
//! ```text
//! U(p, T) = λT ∫ [e^{−ipJ} − 1 + ip(e^J − 1)] ϖ(J) dJ
//! ```
//!
//! Multiplying any diffusion propagator `F(p, T)` by `e^{U(p, T)}` adds the
//! jumps (with the drift compensated so the discounted price stays a
//! martingale). Merton and Kou densities have closed forms; anything else is
//! integrated numerically.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{JumpDensity, JumpKind, JumpSpec};
use crate::quadrature;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default absolute tolerance on a numerically integrated `U(p, T)`.
pub const U_NUMERIC_TOL: f64 = 1e-10;

/// Mass of `ϖ` and of `e^J ϖ` allowed outside the truncated support.
pub const TRUNCATION_MASS: f64 = 1e-12;

/// Modulus below which a Kou denominator counts as a pole.
pub const KOU_POLE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpExponent {
    pub u: Complex64,
    pub m_j: f64,
}

/// `E[e^J − 1]` under the jump law.
pub fn compensator(spec: &JumpSpec) -> Result<f64> {
    match &spec.kind {
        JumpKind::Merton { nu, delta } => Ok((nu + 0.5 * delta * delta).exp_m1()),
        JumpKind::Kou {
            p_plus,
            p_minus,
            eta_plus,
            eta_minus,
        } => Ok(kou_compensator(*p_plus, *p_minus, *eta_plus, *eta_minus)),
        JumpKind::Custom(d) => numeric_compensator(d),
    }
}

fn kou_compensator(p_plus: f64, p_minus: f64, eta_plus: f64, eta_minus: f64) -> f64 {
    p_plus / (1.0 - eta_plus) + p_minus / (1.0 + eta_minus) - 1.0
}

fn numeric_compensator(d: &JumpDensity) -> Result<f64> {
    match d.integrate(f64::exp_m1, 1e-13) {
        Ok(m) if m.is_finite() => Ok(m),
        Ok(m) => Err(Error::DivergentCompensator { estimate: m }),
        Err(Error::QuadratureNotConverged { achieved, .. }) => {
            Err(Error::DivergentCompensator { estimate: achieved })
        }
        Err(e) => Err(e),
    }
}

/// Closed-form `U` for normal log-jumps.
pub fn u_merton(lambda: f64, nu: f64, delta: f64, p: Complex64, t: f64) -> Complex64 {
    let m = (nu + 0.5 * delta * delta).exp_m1();
    lambda * t * (cexpm1(-I * p * nu - 0.5 * delta * delta * p * p) + I * p * m)
}

/// Closed-form `U` for double-exponential log-jumps.
pub fn u_kou(
    lambda: f64,
    p_plus: f64,
    p_minus: f64,
    eta_plus: f64,
    eta_minus: f64,
    p: Complex64,
    t: f64,
) -> Result<Complex64> {
    let up = 1.0 + I * p * eta_plus;
    let down = 1.0 - I * p * eta_minus;
    if up.norm() < KOU_POLE_EPS || down.norm() < KOU_POLE_EPS {
        return Err(Error::PoleProximity { p });
    }
    let m = kou_compensator(p_plus, p_minus, eta_plus, eta_minus);
    Ok(lambda * t * (p_plus / up + p_minus / down - 1.0 + I * p * m))
}

/// `U` by adaptive quadrature over an arbitrary density.
pub fn u_numeric(density: &JumpDensity, lambda: f64, p: Complex64, t: f64) -> Result<Complex64> {
    NumericJumps::new(density.clone(), lambda)?.u(p, t)
}

/// `U` and `m^j` for any spec, closed form where available.
pub fn jump_exponent(spec: &JumpSpec, p: Complex64, t: f64) -> Result<JumpExponent> {
    let prepared = PreparedJumps::new(spec)?;
    Ok(JumpExponent {
        u: prepared.u(p, t)?,
        m_j: prepared.compensator(),
    })
}

/// `e^w − 1` without cancellation near `w = 0`.
fn cexpm1(w: Complex64) -> Complex64 {
    let half = (0.5 * w.im).sin();
    Complex64::new(
        w.re.exp_m1() * w.im.cos() - 2.0 * half * half,
        w.re.exp() * w.im.sin(),
    )
}

/// A custom density with its truncated support and compensator computed once.
#[derive(Debug, Clone)]
pub struct NumericJumps {
    density: JumpDensity,
    lambda: f64,
    segments: Vec<(f64, f64)>,
    m_j: f64,
    tol: f64,
}

impl NumericJumps {
    pub fn new(density: JumpDensity, lambda: f64) -> Result<Self> {
        let (lower, upper) = truncate(&density)?;
        let segments = crate::model::segments(lower, upper, density.breakpoints());
        let m_j = numeric_compensator(&density)?;
        Ok(NumericJumps {
            density,
            lambda,
            segments,
            m_j,
            tol: U_NUMERIC_TOL,
        })
    }

    /// Absolute tolerance on `U` (default [`U_NUMERIC_TOL`]).
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn compensator(&self) -> f64 {
        self.m_j
    }

    /// Integration interval actually used.
    pub fn truncated_support(&self) -> (f64, f64) {
        (self.segments[0].0, self.segments[self.segments.len() - 1].1)
    }

    pub fn u(&self, p: Complex64, t: f64) -> Result<Complex64> {
        if self.lambda == 0.0 || p == Complex64::new(0.0, 0.0) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let scale = self.lambda * t;
        // at least 8 panels per oscillation period 2π/|Re p|
        let max_width = if p.re.abs() > 0.0 {
            2.0 * std::f64::consts::PI / (8.0 * p.re.abs())
        } else {
            f64::INFINITY
        };
        let mut panels = Vec::new();
        for &(a, b) in &self.segments {
            let n = ((b - a) / max_width).ceil().max(1.0) as usize;
            let w = (b - a) / n as f64;
            panels.extend((0..n).map(|i| (a + i as f64 * w, if i + 1 == n { b } else { a + (i + 1) as f64 * w })));
        }
        let per_panel = self.tol / scale / panels.len() as f64;
        let mut total = Complex64::new(0.0, 0.0);
        for (a, b) in panels {
            let est = quadrature::adaptive(
                |j| {
                    let kernel = cexpm1(-I * p * j) + I * p * j.exp_m1();
                    Ok(kernel * self.density.pdf(j))
                },
                a,
                b,
                per_panel,
            )?;
            total += est.value;
        }
        Ok(scale * total)
    }
}

// Cumulative integral of weight·ϖ from the left (or right) end to x.
fn tail_mass<W: Fn(f64) -> f64>(d: &JumpDensity, weight: &W, from: f64, to: f64) -> Result<f64> {
    let (a, b) = if from <= to { (from, to) } else { (to, from) };
    let mut total = 0.0;
    for (s, e) in crate::model::segments(a, b, d.breakpoints()) {
        total += quadrature::adaptive(|j| Ok(weight(j) * d.pdf(j)), s, e, 1e-16)?.value;
    }
    Ok(total)
}

/// Smallest interval inside the declared support that leaves at most
/// [`TRUNCATION_MASS`] of both `ϖ` and `e^J ϖ` outside, found by bisection.
fn truncate(d: &JumpDensity) -> Result<(f64, f64)> {
    let (lower, upper) = d.support();
    let unit = |_: f64| 1.0;
    let expw = |j: f64| j.exp();
    let mass0 = d.integrate(unit, 1e-14)?;
    let mass1 = d.integrate(expw, 1e-14)?;
    let budget0 = 0.5 * TRUNCATION_MASS * mass0;
    let budget1 = 0.5 * TRUNCATION_MASS * mass1;
    let within = |from: f64, to: f64| -> Result<bool> {
        Ok(tail_mass(d, &unit, from, to)? <= budget0 && tail_mass(d, &expw, from, to)? <= budget1)
    };
    // left end: largest x with little mass in [lower, x]
    let (mut lo, mut hi) = (lower, upper);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if within(lower, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let left = lo;
    let (mut lo, mut hi) = (left, upper);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if within(mid, upper)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let right = hi;
    if right > left {
        Ok((left, right))
    } else {
        Ok((lower, upper))
    }
}

/// A jump spec ready for repeated evaluation of `U(p, T)`.
#[derive(Debug, Clone)]
pub enum PreparedJumps {
    None,
    Merton {
        lambda: f64,
        nu: f64,
        delta: f64,
    },
    Kou {
        lambda: f64,
        p_plus: f64,
        p_minus: f64,
        eta_plus: f64,
        eta_minus: f64,
    },
    Numeric(NumericJumps),
}

impl PreparedJumps {
    pub fn new(spec: &JumpSpec) -> Result<Self> {
        if spec.lambda == 0.0 {
            return Ok(PreparedJumps::None);
        }
        Ok(match &spec.kind {
            JumpKind::Merton { nu, delta } => PreparedJumps::Merton {
                lambda: spec.lambda,
                nu: *nu,
                delta: *delta,
            },
            JumpKind::Kou {
                p_plus,
                p_minus,
                eta_plus,
                eta_minus,
            } => PreparedJumps::Kou {
                lambda: spec.lambda,
                p_plus: *p_plus,
                p_minus: *p_minus,
                eta_plus: *eta_plus,
                eta_minus: *eta_minus,
            },
            JumpKind::Custom(d) => PreparedJumps::Numeric(NumericJumps::new(d.clone(), spec.lambda)?),
        })
    }

    pub fn u(&self, p: Complex64, t: f64) -> Result<Complex64> {
        match self {
            PreparedJumps::None => Ok(Complex64::new(0.0, 0.0)),
            PreparedJumps::Merton { lambda, nu, delta } => Ok(u_merton(*lambda, *nu, *delta, p, t)),
            PreparedJumps::Kou {
                lambda,
                p_plus,
                p_minus,
                eta_plus,
                eta_minus,
            } => u_kou(*lambda, *p_plus, *p_minus, *eta_plus, *eta_minus, p, t),
            PreparedJumps::Numeric(n) => n.u(p, t),
        }
    }

    pub fn compensator(&self) -> f64 {
        match self {
            PreparedJumps::None => 0.0,
            PreparedJumps::Merton { nu, delta, .. } => (nu + 0.5 * delta * delta).exp_m1(),
            PreparedJumps::Kou {
                p_plus,
                p_minus,
                eta_plus,
                eta_minus,
                ..
            } => kou_compensator(*p_plus, *p_minus, *eta_plus, *eta_minus),
            PreparedJumps::Numeric(n) => n.compensator(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn merton() -> JumpSpec {
        JumpSpec::merton(10.0, -0.01, 0.03)
    }

    fn kou() -> JumpSpec {
        JumpSpec::kou(10.0, 0.3, 0.7, 0.02, 0.04)
    }

    #[test]
    fn compensators() {
        assert_eq!(compensator(&JumpSpec::merton(1.0, 0.0, 0.0)).unwrap(), 0.0);
        // 40-digit evaluation of p₊/(1−η₊) + p₋/(1+η₋) − 1
        let k = compensator(&kou()).unwrap();
        assert!((k + 0.020800627943485086).abs() < 1e-16);
        let m = compensator(&merton()).unwrap();
        assert!((m - (-0.01f64 + 0.00045).exp_m1()).abs() < 1e-17);
    }

    #[test]
    fn compensators_match_numeric_integration() {
        for spec in [kou(), merton(), JumpSpec::kou(2.0, 0.6, 0.4, 0.1, 0.25)] {
            let closed = compensator(&spec).unwrap();
            let numeric = compensator(&spec.as_numeric()).unwrap();
            assert!((closed - numeric).abs() < 1e-12, "{closed} vs {numeric}");
        }
    }

    #[test]
    fn closed_forms_at_unit_mode() {
        // 40-digit evaluations of the closed forms, λ = 10, T = 1, p = 1
        let um = u_merton(10.0, -0.01, 0.03, c(1.0, 0.0), 1.0);
        assert!((um - c(-0.004998758537697117, 0.004907908534364793)).norm() < 1e-17);
        let uk = u_kou(10.0, 0.3, 0.7, 0.02, 0.04, c(1.0, 0.0), 1.0).unwrap();
        let d = (uk - c(-0.012381628818121314, 0.011570426623939678)).norm();
        assert!(d < 5e-15, "{d}");
    }

    #[test]
    fn zero_and_martingale_modes_vanish() {
        for spec in [merton(), kou()] {
            for t in [0.1, 1.0, 5.0] {
                let prepared = PreparedJumps::new(&spec).unwrap();
                assert!(prepared.u(c(0.0, 0.0), t).unwrap().norm() < 1e-13);
                assert!(prepared.u(c(0.0, 1.0), t).unwrap().norm() < 1e-13);
            }
        }
        let numeric = PreparedJumps::new(&kou().as_numeric()).unwrap();
        assert!(numeric.u(c(0.0, 1.0), 1.0).unwrap().norm() < 1e-10);
    }

    #[test]
    fn no_intensity_means_no_exponent() {
        let spec = JumpSpec::merton(0.0, -0.2, 0.3);
        for p in [c(3.0, 0.0), c(-7.5, 1.0)] {
            assert_eq!(jump_exponent(&spec, p, 2.0).unwrap().u, c(0.0, 0.0));
        }
    }

    #[test]
    fn numeric_matches_closed_forms() {
        for spec in [merton(), kou()] {
            let numeric = NumericJumps::new(spec.density(), spec.lambda).unwrap();
            let closed = PreparedJumps::new(&spec).unwrap();
            let mut worst = 0.0f64;
            for i in 0..=100 {
                let pr = -50.0 + i as f64;
                for im in [0.0, 1.0] {
                    let p = c(pr, im);
                    let d = (numeric.u(p, 1.0).unwrap() - closed.u(p, 1.0).unwrap()).norm();
                    worst = worst.max(d);
                }
            }
            assert!(worst < 1e-10, "{worst}");
        }
    }

    #[test]
    fn kou_pole_is_reported() {
        // 1 + ip·η₊ = 0 at p = i/η₊
        let r = u_kou(1.0, 0.5, 0.5, 0.5, 0.5, c(0.0, 2.0), 1.0);
        assert!(matches!(r, Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn truncation_keeps_the_exponential_weight() {
        let numeric = NumericJumps::new(merton().density(), 10.0).unwrap();
        let (lo, hi) = numeric.truncated_support();
        // both the density and its exponential tilt (mean shifted by δ²) must fit
        assert!(lo < -0.01 - 7.0 * 0.03 && hi > -0.01 + 0.0009 + 7.0 * 0.03);
        assert!(hi - lo < 1.0);
    }

    #[test]
    fn custom_tabulated_density() {
        // triangular density on [-0.1, 0.1]
        let d = JumpDensity::tabulated(vec![[-0.1, 0.0], [0.0, 10.0], [0.1, 0.0]]).unwrap();
        let spec = JumpSpec::custom(3.0, d);
        // E[e^J] for the symmetric triangle = 2(cosh(0.1) − 1)/0.01
        let m = compensator(&spec).unwrap();
        assert!((m - (2.0 * (0.1f64.cosh() - 1.0) / 0.01 - 1.0)).abs() < 1e-12);
        let u = jump_exponent(&spec, c(0.0, 1.0), 1.0).unwrap().u;
        assert!(u.norm() < 1e-10);
    }

    proptest! {
        #[test]
        fn conjugate_symmetry(p in -60.0f64..60.0, t in 0.05f64..5.0) {
            for spec in [merton(), kou()] {
                let prepared = PreparedJumps::new(&spec).unwrap();
                let a = prepared.u(c(p, 0.0), t).unwrap();
                let b = prepared.u(c(-p, 0.0), t).unwrap();
                prop_assert!((a - b.conj()).norm() < 1e-13);
            }
        }

        #[test]
        fn real_part_non_positive_on_real_axis(p in -200.0f64..200.0) {
            // |E e^{-ipJ}| ≤ 1 so Re U ≤ 0 for real p
            for spec in [merton(), kou()] {
                let u = PreparedJumps::new(&spec).unwrap().u(c(p, 0.0), 1.0).unwrap();
                prop_assert!(u.re <= 1e-14);
            }
        }
    }
}
