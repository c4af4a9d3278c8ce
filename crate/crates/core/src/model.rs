//! Model parameters, jump specifications and market inputs.
//!
//! Everything here is immutable once validated. Validation reports every
//! violated invariant at once instead of failing fast.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};
use crate::quadrature;

/// Tolerance on `p_plus + p_minus = 1` for Kou jumps.
pub const KOU_PROBABILITY_TOL: f64 = 1e-12;

/// Tolerance on the unit mass of a custom jump density.
pub const CUSTOM_MASS_TOL: f64 = 1e-6;

/// Exponential-Vasicek stochastic volatility parameters.
///
/// The log-volatility `z = ln σ` is an Ornstein-Uhlenbeck process
/// `dz = β(ā − z)dt + γ dW₂`, correlated with the asset Brownian motion
/// through `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "LnParamsRaw")]
pub struct LnParams {
    /// Mean-reversion speed of log-volatility (1/year).
    pub beta: f64,
    /// Mean-reversion level of log-volatility.
    pub a_bar: f64,
    /// Volatility of log-volatility (1/√year).
    pub gamma: f64,
    pub rho: f64,
    /// Initial volatility.
    pub sigma0: f64,
    /// Continuously compounded risk-free rate.
    pub r: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LnParamsRaw {
    beta: f64,
    a_bar: f64,
    gamma: f64,
    rho: f64,
    #[serde(default)]
    sigma0: Option<f64>,
    r: f64,
}

impl From<LnParamsRaw> for LnParams {
    fn from(raw: LnParamsRaw) -> Self {
        let mut p = LnParams {
            beta: raw.beta,
            a_bar: raw.a_bar,
            gamma: raw.gamma,
            rho: raw.rho,
            sigma0: f64::NAN,
            r: raw.r,
        };
        p.sigma0 = raw.sigma0.unwrap_or_else(|| p.default_sigma0());
        p
    }
}

impl LnParams {
    /// Parameters with `sigma0` set to the long-run mean volatility.
    pub fn with_long_run_sigma0(beta: f64, a_bar: f64, gamma: f64, rho: f64, r: f64) -> Self {
        let mut p = LnParams {
            beta,
            a_bar,
            gamma,
            rho,
            sigma0: f64::NAN,
            r,
        };
        p.sigma0 = p.default_sigma0();
        p
    }

    /// `exp(ā + γ²/(4β))`, the stationary mean of `σ(t)`.
    pub fn default_sigma0(&self) -> f64 {
        default_sigma0(self.a_bar, self.gamma, self.beta)
    }

    /// `ln σ₀ − ā`, the initial log-volatility offset from its mean level.
    pub fn zeta0(&self) -> f64 {
        self.sigma0.ln() - self.a_bar
    }

    /// The approximation quality parameter `c = β/γ²`.
    pub fn c(&self) -> f64 {
        self.beta / (self.gamma * self.gamma)
    }

    /// Copy with a different initial log-volatility offset.
    pub fn with_zeta0(&self, zeta0: f64) -> Self {
        LnParams {
            sigma0: (self.a_bar + zeta0).exp(),
            ..*self
        }
    }

    /// Invariant violations for analytic use (`gamma > 0` required).
    pub fn violations(&self) -> Vec<ValidationError> {
        let mut errs = self.common_violations();
        if self.gamma.is_finite() && self.gamma <= 0.0 {
            errs.push(ValidationError::GammaNotPositive(self.gamma));
        }
        if errs.is_empty() {
            let c = self.c();
            if !(c.is_finite() && c > 0.0) {
                errs.push(ValidationError::ValidityParameterInvalid(c));
            }
        }
        errs
    }

    /// Invariant violations for path simulation, where `gamma = 0` is allowed.
    pub fn simulation_violations(&self) -> Vec<ValidationError> {
        let mut errs = self.common_violations();
        if self.gamma.is_finite() && self.gamma < 0.0 {
            errs.push(ValidationError::GammaNegative(self.gamma));
        }
        errs
    }

    fn common_violations(&self) -> Vec<ValidationError> {
        let mut errs = Vec::new();
        for (field, value) in [
            ("beta", self.beta),
            ("a_bar", self.a_bar),
            ("gamma", self.gamma),
            ("rho", self.rho),
            ("sigma0", self.sigma0),
            ("r", self.r),
        ] {
            if !value.is_finite() {
                errs.push(ValidationError::NonFinite { field, value });
            }
        }
        if self.beta.is_finite() && self.beta <= 0.0 {
            errs.push(ValidationError::BetaNotPositive(self.beta));
        }
        if self.sigma0.is_finite() && self.sigma0 <= 0.0 {
            errs.push(ValidationError::Sigma0NotPositive(self.sigma0));
        }
        if self.rho.is_finite() && !(-1.0..=1.0).contains(&self.rho) {
            errs.push(ValidationError::RhoOutOfRange(self.rho));
        }
        errs
    }
}

/// Long-run mean volatility `exp(ā + γ²/(4β))`.
pub fn default_sigma0(a_bar: f64, gamma: f64, beta: f64) -> f64 {
    (a_bar + gamma * gamma / (4.0 * beta)).exp()
}

/// Initial log-volatility offset `ln σ₀ − ā`.
pub fn zeta0(params: &LnParams) -> f64 {
    params.zeta0()
}

/// The diffusive part of the model: exponential-Vasicek stochastic
/// volatility or a constant-volatility reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SvModel {
    Ln(LnParams),
    ConstVol { sigma: f64, r: f64 },
}

impl SvModel {
    pub fn rate(&self) -> f64 {
        match self {
            SvModel::Ln(p) => p.r,
            SvModel::ConstVol { r, .. } => *r,
        }
    }

    pub fn violations(&self) -> Vec<ValidationError> {
        match self {
            SvModel::Ln(p) => p.violations(),
            SvModel::ConstVol { sigma, r } => const_vol_violations(*sigma, *r),
        }
    }

    pub fn simulation_violations(&self) -> Vec<ValidationError> {
        match self {
            SvModel::Ln(p) => p.simulation_violations(),
            SvModel::ConstVol { sigma, r } => const_vol_violations(*sigma, *r),
        }
    }
}

impl From<LnParams> for SvModel {
    fn from(p: LnParams) -> Self {
        SvModel::Ln(p)
    }
}

fn const_vol_violations(sigma: f64, r: f64) -> Vec<ValidationError> {
    let mut errs = Vec::new();
    if !sigma.is_finite() {
        errs.push(ValidationError::NonFinite {
            field: "sigma",
            value: sigma,
        });
    } else if sigma < 0.0 {
        errs.push(ValidationError::ConstVolSigmaNegative(sigma));
    }
    if !r.is_finite() {
        errs.push(ValidationError::NonFinite { field: "r", value: r });
    }
    errs
}

/// A probability density for log-jump sizes with a declared finite support.
///
/// Either backed by an arbitrary closure or by a tabulated, linearly
/// interpolated set of points (the only form that round-trips through JSON).
#[derive(Clone)]
pub struct JumpDensity {
    pdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lower: f64,
    upper: f64,
    breakpoints: Vec<f64>,
    table: Option<Vec<[f64; 2]>>,
}

impl JumpDensity {
    /// Density from a closure; the integration support is `[lower, upper]`.
    pub fn from_fn<F>(pdf: F, lower: f64, upper: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        JumpDensity {
            pdf: Arc::new(pdf),
            lower,
            upper,
            breakpoints: Vec::new(),
            table: None,
        }
    }

    /// Interior points where the density is not smooth (integration splits there).
    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        points.retain(|b| *b > self.lower && *b < self.upper);
        points.sort_by(f64::total_cmp);
        self.breakpoints = points;
        self
    }

    /// Piecewise-linear density through `(j, pdf)` points; zero outside.
    pub fn tabulated(points: Vec<[f64; 2]>) -> Result<Self, ValidationError> {
        if points.len() < 2
            || points.windows(2).any(|w| !(w[1][0] > w[0][0]))
            || points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite() || p[1] < 0.0)
        {
            return Err(ValidationError::TabulatedDensityInvalid);
        }
        let lower = points[0][0];
        let upper = points[points.len() - 1][0];
        let table = points.clone();
        let pdf = move |j: f64| interpolate(&table, j);
        let interior = points[1..points.len() - 1].iter().map(|p| p[0]).collect();
        Ok(JumpDensity {
            pdf: Arc::new(pdf),
            lower,
            upper,
            breakpoints: interior,
            table: Some(points),
        })
    }

    pub fn pdf(&self, j: f64) -> f64 {
        if j < self.lower || j > self.upper {
            0.0
        } else {
            (self.pdf)(j)
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Support split at the breakpoints.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        segments(self.lower, self.upper, &self.breakpoints)
    }

    /// `∫ g(J) ϖ(J) dJ` over the declared support.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G, tol: f64) -> Result<f64> {
        let mut total = 0.0;
        let segs = self.segments();
        let per = tol / segs.len() as f64;
        for (a, b) in segs {
            let r = quadrature::adaptive(|j| Ok(g(j) * self.pdf(j)), a, b, per)?;
            total += r.value;
        }
        Ok(total)
    }

    fn violations(&self) -> Vec<ValidationError> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return vec![ValidationError::CustomSupportInvalid {
                lower: self.lower,
                upper: self.upper,
            }];
        }
        let mut errs = Vec::new();
        match self.integrate(|_| 1.0, 1e-10) {
            Ok(mass) if (mass - 1.0).abs() <= CUSTOM_MASS_TOL => {}
            Ok(mass) => errs.push(ValidationError::CustomDensityNotNormalized { mass }),
            Err(_) => errs.push(ValidationError::CustomDensityNotNormalized { mass: f64::NAN }),
        }
        match self.integrate(f64::exp, 1e-10) {
            Ok(m) if m.is_finite() => {}
            Ok(m) => errs.push(ValidationError::CustomExpMomentDivergent { estimate: m }),
            Err(_) => errs.push(ValidationError::CustomExpMomentDivergent {
                estimate: f64::NAN,
            }),
        }
        errs
    }
}

pub(crate) fn segments(lower: f64, upper: f64, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut edges = vec![lower];
    edges.extend(breakpoints.iter().copied().filter(|b| *b > lower && *b < upper));
    edges.push(upper);
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

fn interpolate(table: &[[f64; 2]], j: f64) -> f64 {
    let idx = table.partition_point(|p| p[0] <= j);
    if idx == 0 {
        return if j == table[0][0] { table[0][1] } else { 0.0 };
    }
    if idx == table.len() {
        let last = table[table.len() - 1];
        return if j == last[0] { last[1] } else { 0.0 };
    }
    let [x0, y0] = table[idx - 1];
    let [x1, y1] = table[idx];
    y0 + (y1 - y0) * (j - x0) / (x1 - x0)
}

impl fmt::Debug for JumpDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JumpDensity")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("breakpoints", &self.breakpoints)
            .field("tabulated", &self.table.as_ref().map(Vec::len))
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedRaw {
    points: Vec<[f64; 2]>,
}

impl Serialize for JumpDensity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.table {
            Some(points) => TabulatedRaw {
                points: points.clone(),
            }
            .serialize(s),
            None => Err(serde::ser::Error::custom(
                "closure-backed jump densities cannot be serialized",
            )),
        }
    }
}

impl<'de> Deserialize<'de> for JumpDensity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TabulatedRaw::deserialize(d)?;
        JumpDensity::tabulated(raw.points).map_err(serde::de::Error::custom)
    }
}

/// Jump-size distribution of the compound Poisson component.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JumpKind {
    /// Normal log-jumps with mean `nu` and standard deviation `delta`.
    Merton { nu: f64, delta: f64 },
    /// Asymmetric double-exponential log-jumps.
    Kou {
        p_plus: f64,
        p_minus: f64,
        eta_plus: f64,
        eta_minus: f64,
    },
    Custom(JumpDensity),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    /// Poisson intensity (jumps per year).
    pub lambda: f64,
    pub kind: JumpKind,
}

impl Default for JumpSpec {
    fn default() -> Self {
        JumpSpec::none()
    }
}

impl JumpSpec {
    /// No jumps at all.
    pub fn none() -> Self {
        JumpSpec {
            lambda: 0.0,
            kind: JumpKind::Merton {
                nu: 0.0,
                delta: 0.0,
            },
        }
    }

    pub fn merton(lambda: f64, nu: f64, delta: f64) -> Self {
        JumpSpec {
            lambda,
            kind: JumpKind::Merton { nu, delta },
        }
    }

    pub fn kou(lambda: f64, p_plus: f64, p_minus: f64, eta_plus: f64, eta_minus: f64) -> Self {
        JumpSpec {
            lambda,
            kind: JumpKind::Kou {
                p_plus,
                p_minus,
                eta_plus,
                eta_minus,
            },
        }
    }

    pub fn custom(lambda: f64, density: JumpDensity) -> Self {
        JumpSpec {
            lambda,
            kind: JumpKind::Custom(density),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.lambda == 0.0
    }

    /// Kou probabilities rescaled to sum to one. Only applied on request.
    pub fn renormalized(mut self) -> Self {
        if let JumpKind::Kou {
            p_plus, p_minus, ..
        } = &mut self.kind
        {
            let total = *p_plus + *p_minus;
            if total > 0.0 && total.is_finite() {
                *p_plus /= total;
                *p_minus /= total;
            }
        }
        self
    }

    /// The jump-size density, with a truncated support wide enough that the
    /// neglected mass of both `ϖ(J)` and `e^J ϖ(J)` is negligible.
    pub fn density(&self) -> JumpDensity {
        match &self.kind {
            JumpKind::Merton { nu, delta } => {
                let (nu, delta) = (*nu, *delta);
                // e^J ϖ(J) is a normal centred at nu + delta²
                let half = 40.0 * delta.max(1e-300);
                JumpDensity::from_fn(
                    move |j| {
                        let z = (j - nu) / delta;
                        (-0.5 * z * z).exp() / (delta * (2.0 * std::f64::consts::PI).sqrt())
                    },
                    nu - half,
                    nu + delta * delta + half,
                )
            }
            JumpKind::Kou {
                p_plus,
                p_minus,
                eta_plus,
                eta_minus,
            } => {
                let (pp, pm, ep, em) = (*p_plus, *p_minus, *eta_plus, *eta_minus);
                // e^J ϖ decays like exp(-J (1/η₊ - 1)) on the positive side
                let upper = 40.0 / (1.0 / ep - 1.0);
                let lower = -40.0 / (1.0 / em + 1.0);
                JumpDensity::from_fn(
                    move |j| {
                        if j >= 0.0 {
                            pp / ep * (-j / ep).exp()
                        } else {
                            pm / em * (j / em).exp()
                        }
                    },
                    lower,
                    upper,
                )
                .with_breakpoints(vec![0.0])
            }
            JumpKind::Custom(d) => d.clone(),
        }
    }

    /// Same jump law, but expressed as a custom density so every consumer
    /// falls back to numerical integration.
    pub fn as_numeric(&self) -> JumpSpec {
        JumpSpec {
            lambda: self.lambda,
            kind: JumpKind::Custom(self.density()),
        }
    }

    pub fn violations(&self) -> Vec<ValidationError> {
        let mut errs = Vec::new();
        if !self.lambda.is_finite() {
            errs.push(ValidationError::NonFinite {
                field: "lambda",
                value: self.lambda,
            });
        } else if self.lambda < 0.0 {
            errs.push(ValidationError::NegativeIntensity(self.lambda));
        }
        match &self.kind {
            JumpKind::Merton { nu, delta } => {
                for (field, value) in [("nu", *nu), ("delta", *delta)] {
                    if !value.is_finite() {
                        errs.push(ValidationError::NonFinite { field, value });
                    }
                }
                if *delta < 0.0 {
                    errs.push(ValidationError::MertonDeltaNegative(*delta));
                }
            }
            JumpKind::Kou {
                p_plus,
                p_minus,
                eta_plus,
                eta_minus,
            } => {
                for (field, value) in [
                    ("p_plus", *p_plus),
                    ("p_minus", *p_minus),
                    ("eta_plus", *eta_plus),
                    ("eta_minus", *eta_minus),
                ] {
                    if !value.is_finite() {
                        errs.push(ValidationError::NonFinite { field, value });
                    }
                }
                if *p_plus < 0.0 {
                    errs.push(ValidationError::KouPPlusNegative(*p_plus));
                }
                if *p_minus < 0.0 {
                    errs.push(ValidationError::KouPMinusNegative(*p_minus));
                }
                let sum = p_plus + p_minus;
                if !((sum - 1.0).abs() <= KOU_PROBABILITY_TOL) {
                    errs.push(ValidationError::KouProbabilitySum(sum));
                }
                if !(*eta_plus > 0.0 && *eta_plus < 1.0) {
                    errs.push(ValidationError::KouEtaPlusOutOfRange(*eta_plus));
                }
                if !(*eta_minus > 0.0) {
                    errs.push(ValidationError::KouEtaMinusNotPositive(*eta_minus));
                }
            }
            JumpKind::Custom(d) => errs.extend(d.violations()),
        }
        errs
    }
}

/// Spot, strike and maturity of a European option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketRequest {
    pub s0: f64,
    pub k: f64,
    pub t: f64,
}

impl MarketRequest {
    pub fn new(s0: f64, k: f64, t: f64) -> Self {
        MarketRequest { s0, k, t }
    }

    pub fn x0(&self) -> f64 {
        self.s0.ln()
    }

    pub fn violations(&self) -> Vec<ValidationError> {
        let mut errs = Vec::new();
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            errs.push(ValidationError::SpotNotPositive(self.s0));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            errs.push(ValidationError::StrikeNotPositive(self.k));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            errs.push(ValidationError::MaturityNotPositive(self.t));
        }
        errs
    }
}

/// A model whose invariants have been checked.
#[derive(Debug, Clone)]
pub struct ValidatedModel {
    model: SvModel,
    jumps: JumpSpec,
}

impl ValidatedModel {
    pub fn model(&self) -> &SvModel {
        &self.model
    }

    pub fn jumps(&self) -> &JumpSpec {
        &self.jumps
    }

    pub fn into_parts(self) -> (SvModel, JumpSpec) {
        (self.model, self.jumps)
    }
}

/// Check every invariant of the diffusion model and the jump specification.
pub fn validate(model: impl Into<SvModel>, jumps: &JumpSpec) -> Result<ValidatedModel> {
    let model = model.into();
    let mut errs = model.violations();
    errs.extend(jumps.violations());
    if errs.is_empty() {
        Ok(ValidatedModel {
            model,
            jumps: jumps.clone(),
        })
    } else {
        Err(Error::invalid(errs))
    }
}

pub(crate) fn check(errs: Vec<ValidationError>) -> Result<()> {
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::invalid(errs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig1() -> LnParams {
        LnParams {
            beta: 5.0,
            a_bar: -1.6,
            gamma: 0.5,
            rho: -0.5,
            sigma0: 0.2,
            r: 0.015,
        }
    }

    #[test]
    fn figure_parameters_validate() {
        assert!(validate(fig1(), &JumpSpec::none()).is_ok());
        assert!(validate(fig1(), &JumpSpec::kou(10.0, 0.3, 0.7, 0.02, 0.04)).is_ok());
        assert!(validate(fig1(), &JumpSpec::merton(10.0, -0.01, 0.03)).is_ok());
    }

    #[test]
    fn kou_eta_plus_above_one_is_rejected() {
        let err = validate(fig1(), &JumpSpec::kou(10.0, 0.3, 0.7, 1.2, 0.04)).unwrap_err();
        assert_eq!(
            err.violations(),
            &[ValidationError::KouEtaPlusOutOfRange(1.2)]
        );
    }

    #[test]
    fn every_violation_is_reported() {
        let bad = LnParams {
            beta: -1.0,
            a_bar: -1.6,
            gamma: 0.0,
            rho: 1.5,
            sigma0: -0.1,
            r: 0.0,
        };
        let err = validate(bad, &JumpSpec::kou(-1.0, 0.5, 0.6, 0.02, 0.0)).unwrap_err();
        let v = err.violations();
        assert!(v.contains(&ValidationError::BetaNotPositive(-1.0)));
        assert!(v.contains(&ValidationError::GammaNotPositive(0.0)));
        assert!(v.contains(&ValidationError::RhoOutOfRange(1.5)));
        assert!(v.contains(&ValidationError::Sigma0NotPositive(-0.1)));
        assert!(v.contains(&ValidationError::NegativeIntensity(-1.0)));
        assert!(v.contains(&ValidationError::KouEtaMinusNotPositive(0.0)));
        assert!(v
            .iter()
            .any(|e| matches!(e, ValidationError::KouProbabilitySum(_))));
    }

    #[test]
    fn rho_extremes_are_accepted() {
        for rho in [-1.0, 1.0] {
            assert!(validate(LnParams { rho, ..fig1() }, &JumpSpec::none()).is_ok());
        }
    }

    #[test]
    fn kou_probabilities_are_not_silently_renormalized() {
        let spec = JumpSpec::kou(1.0, 0.3, 0.6, 0.02, 0.04);
        assert!(!spec.violations().is_empty());
        let fixed = spec.renormalized();
        assert!(fixed.violations().is_empty());
        if let JumpKind::Kou { p_plus, .. } = fixed.kind {
            assert_relative_eq!(p_plus, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn validate_is_idempotent() {
        let v = validate(fig1(), &JumpSpec::merton(3.0, -0.1, 0.2)).unwrap();
        let again = validate(*v.model(), v.jumps()).unwrap();
        assert_eq!(v.model(), again.model());
    }

    #[test]
    fn long_run_sigma0() {
        assert_relative_eq!(
            default_sigma0(-1.6, 0.5, 5.0),
            (-1.6f64 + 0.0125).exp(),
            max_relative = 1e-15
        );
        // exp(-1.5875) evaluated independently: 0.2044360635624740
        assert_relative_eq!(default_sigma0(-1.6, 0.5, 5.0), 0.204_436_063_562_474, epsilon = 1e-15);
        assert_eq!(default_sigma0(0.0, 0.0, 1.0), 1.0);
        assert_relative_eq!(
            default_sigma0(-1.6, 1.2, 7.0),
            (-1.6 + 1.44 / 28.0f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn zeta0_identities() {
        let p = LnParams::with_long_run_sigma0(5.0, -1.6, 0.5, 0.0, 0.015);
        assert_relative_eq!(p.zeta0(), 0.25 / 20.0, epsilon = 1e-15);
        assert_eq!(p.with_zeta0(0.0).zeta0().abs() < 1e-15, true);
        let q = LnParams { sigma0: 0.25, ..p };
        assert_relative_eq!(zeta0(&q), 0.25f64.ln() + 1.6, epsilon = 1e-15);
    }

    #[test]
    fn sigma0_defaults_when_omitted_from_json() {
        let p: LnParams = serde_json::from_str(
            r#"{"beta":5,"a_bar":-1.6,"gamma":0.5,"rho":-0.5,"r":0.015}"#,
        )
        .unwrap();
        assert_relative_eq!(p.sigma0, p.default_sigma0());
        let bad = serde_json::from_str::<LnParams>(
            r#"{"beta":5,"a_bar":-1.6,"gamma":0.5,"rho":-0.5,"r":0.015,"kappa":1}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn jump_spec_json_shape() {
        let spec: JumpSpec = serde_json::from_str(
            r#"{"lambda":10,"kind":{"type":"kou","p_plus":0.3,"p_minus":0.7,"eta_plus":0.02,"eta_minus":0.04}}"#,
        )
        .unwrap();
        assert!(spec.violations().is_empty());
        let tab: JumpSpec = serde_json::from_str(
            r#"{"lambda":1,"kind":{"type":"custom","points":[[-0.1,0],[0,10],[0.1,0]]}}"#,
        )
        .unwrap();
        assert!(tab.violations().is_empty(), "{:?}", tab.violations());
        let text = serde_json::to_string(&tab).unwrap();
        let back: JumpSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.density().pdf(0.05), 5.0);
    }

    #[test]
    fn unnormalized_custom_density_is_rejected() {
        let d = JumpDensity::from_fn(|_| 1.0, -1.0, 1.0);
        let errs = JumpSpec::custom(1.0, d).violations();
        assert!(matches!(
            errs[0],
            ValidationError::CustomDensityNotNormalized { .. }
        ));
    }

    #[test]
    fn stationary_mean_exceeds_median() {
        for gamma in [0.1, 0.5, 1.2] {
            assert!(default_sigma0(-1.6, gamma, 3.0) > (-1.6f64).exp());
        }
    }
}
