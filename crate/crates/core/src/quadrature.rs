//! Gauss-Kronrod quadrature: globally adaptive on finite intervals, a
//! panel-marching variant for decaying integrands on `[0, ∞)`, and a fixed
//! composite rule for callers that need the same nodes across evaluations.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

// 7-point Gauss / 15-point Kronrod abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SEGMENTS: usize = 4000;

pub(crate) trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Estimate<V> {
    pub value: V,
    pub error: f64,
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
    abs: f64,
}

fn kronrod<V, F>(f: &mut F, a: f64, b: f64) -> Result<Segment<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> Result<V>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = fc.magnitude() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx)?;
        let f2 = f(centre + dx)?;
        let s = f1 + f2;
        kron = kron + s * WGK[j];
        abs += (f1.magnitude() + f2.magnitude()) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).magnitude();
    Ok(Segment {
        a,
        b,
        value,
        error,
        abs: abs * half.abs(),
    })
}

/// Globally adaptive G7/K15 integration of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub(crate) fn adaptive<V, F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Estimate<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> Result<V>,
{
    if a == b {
        return Ok(Estimate {
            value: V::zero(),
            error: 0.0,
        });
    }
    let mut segs = vec![kronrod(&mut f, a, b)?];
    loop {
        let total_err: f64 = segs.iter().map(|s| s.error).sum();
        let total_abs: f64 = segs.iter().map(|s| s.abs).sum();
        if !(total_err.is_finite() && total_abs.is_finite()) {
            return Err(Error::QuadratureNotConverged {
                achieved: total_err,
                target: tol,
                at: None,
            });
        }
        if total_err <= tol || total_err <= 50.0 * f64::EPSILON * total_abs {
            let value = segs.iter().fold(V::zero(), |acc, s| acc + s.value);
            return Ok(Estimate {
                value,
                error: total_err,
            });
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let s = &segs[worst];
        let mid = 0.5 * (s.a + s.b);
        if segs.len() >= MAX_SEGMENTS || !(mid > s.a && mid < s.b) {
            return Err(Error::QuadratureNotConverged {
                achieved: total_err,
                target: tol,
                at: Some(mid),
            });
        }
        let (sa, sb) = (s.a, s.b);
        let left = kronrod(&mut f, sa, mid)?;
        let right = kronrod(&mut f, mid, sb)?;
        segs[worst] = left;
        segs.push(right);
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct HalfLine<V> {
    pub value: V,
    pub error: f64,
    /// Upper end of the last panel integrated.
    pub p_max: f64,
    /// Set when the cap was hit before the integrand fell below the tail threshold.
    pub truncated: bool,
    /// Largest integrand magnitude seen on the last panel.
    pub tail_magnitude: f64,
}

/// Integrate a decaying integrand over `[0, ∞)` panel by panel, stopping
/// once the integrand magnitude on a whole panel drops below `tail_eps` or
/// the panel edge reaches `cap`.
pub(crate) fn half_line<V, F>(
    mut f: F,
    panel_width: f64,
    tail_eps: f64,
    cap: f64,
    tol: f64,
) -> Result<HalfLine<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> Result<V>,
{
    let mut value = V::zero();
    let mut error = 0.0;
    let mut a = 0.0;
    let mut k = 0i32;
    loop {
        let b = (a + panel_width).min(cap);
        let mut peak = 0.0f64;
        let panel_tol = tol * 0.5f64.powi((k + 1).min(40));
        let est = adaptive(
            |p| {
                let v = f(p)?;
                peak = peak.max(v.magnitude());
                Ok(v)
            },
            a,
            b,
            panel_tol,
        )?;
        value = value + est.value;
        error += est.error;
        if peak < tail_eps || b >= cap {
            return Ok(HalfLine {
                value,
                error,
                p_max: b,
                truncated: peak >= tail_eps,
                tail_magnitude: peak,
            });
        }
        a = b;
        k += 1;
    }
}

/// Composite 15-point Kronrod rule on `panels` equal panels of `[a, b]`.
pub(crate) fn fixed_rule(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut out = Vec::with_capacity(panels * 15);
    for i in 0..panels {
        let centre = a + (i as f64 + 0.5) * width;
        out.push((centre, WGK[7] * half));
        for j in 0..7 {
            out.push((centre - half * XGK[j], WGK[j] * half));
            out.push((centre + half * XGK[j], WGK[j] * half));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let est = adaptive(|x: f64| Ok(x.powi(5) - 3.0 * x * x), -1.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(est.value, 64.0 / 6.0 - 1.0 / 6.0 - 9.0, epsilon = 1e-13);
    }

    #[test]
    fn oscillatory_complex() {
        let est = adaptive(
            |x: f64| Ok(Complex64::new(0.0, 25.0 * x).exp()),
            0.0,
            3.0,
            1e-12,
        )
        .unwrap();
        let exact = (Complex64::new(0.0, 75.0).exp() - 1.0) / Complex64::new(0.0, 25.0);
        assert!((est.value - exact).norm() < 1e-12);
    }

    #[test]
    fn half_line_gaussian() {
        let hl = half_line(|x: f64| Ok((-x * x).exp()), 1.0, 1e-16, 100.0, 1e-13).unwrap();
        assert_relative_eq!(hl.value, std::f64::consts::PI.sqrt() / 2.0, epsilon = 1e-13);
        assert!(!hl.truncated);
        assert!(hl.p_max < 10.0);
    }

    #[test]
    fn half_line_reports_truncation() {
        let hl = half_line(|x: f64| Ok(1.0 / (1.0 + x * x)), 5.0, 1e-12, 20.0, 1e-10).unwrap();
        assert!(hl.truncated);
        assert_eq!(hl.p_max, 20.0);
    }

    #[test]
    fn singular_integrand_fails_loudly() {
        let r = adaptive(|x: f64| Ok(1.0 / x), 0.0, 1.0, 1e-10);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn fixed_rule_weights_sum_to_length() {
        let rule = fixed_rule(0.0, 3.0, 7);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert_relative_eq!(total, 3.0, epsilon = 1e-13);
    }
}
