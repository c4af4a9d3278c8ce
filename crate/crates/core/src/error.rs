//! Error types shared across the crate.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// A single violated input invariant.
///
/// Validation collects every violation rather than stopping at the first, so a
/// bad configuration is reported in one pass.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("{field} must be finite (got {value})")]
    NonFinite { field: &'static str, value: f64 },
    #[error("beta must be > 0 (got {0})")]
    BetaNotPositive(f64),
    #[error("gamma must be > 0 (got {0})")]
    GammaNotPositive(f64),
    #[error("gamma must be >= 0 (got {0})")]
    GammaNegative(f64),
    #[error("sigma0 must be > 0 (got {0})")]
    Sigma0NotPositive(f64),
    #[error("rho must lie in [-1, 1] (got {0})")]
    RhoOutOfRange(f64),
    #[error("c = beta/gamma^2 must be finite and positive (got {0})")]
    ValidityParameterInvalid(f64),
    #[error("constant volatility must be >= 0 (got {0})")]
    ConstVolSigmaNegative(f64),
    #[error("jump intensity lambda must be >= 0 (got {0})")]
    NegativeIntensity(f64),
    #[error("Merton delta must be >= 0 (got {0})")]
    MertonDeltaNegative(f64),
    #[error("Kou p_plus must be >= 0 (got {0})")]
    KouPPlusNegative(f64),
    #[error("Kou p_minus must be >= 0 (got {0})")]
    KouPMinusNegative(f64),
    #[error("Kou p_plus + p_minus must equal 1 to 1e-12 (got {0})")]
    KouProbabilitySum(f64),
    #[error("Kou eta_plus must lie in (0, 1) (got {0})")]
    KouEtaPlusOutOfRange(f64),
    #[error("Kou eta_minus must be > 0 (got {0})")]
    KouEtaMinusNotPositive(f64),
    #[error("custom jump density support [{lower}, {upper}] is not a finite, non-empty interval")]
    CustomSupportInvalid { lower: f64, upper: f64 },
    #[error("custom jump density integrates to {mass}, not 1")]
    CustomDensityNotNormalized { mass: f64 },
    #[error("custom jump density has no finite E[e^J] (estimate {estimate})")]
    CustomExpMomentDivergent { estimate: f64 },
    #[error("tabulated jump density needs at least two points with increasing abscissae")]
    TabulatedDensityInvalid,
    #[error("spot s0 must be > 0 (got {0})")]
    SpotNotPositive(f64),
    #[error("strike k must be > 0 (got {0})")]
    StrikeNotPositive(f64),
    #[error("maturity t must be > 0 (got {0})")]
    MaturityNotPositive(f64),
    #[error("quadrature control {field} must be > 0 (got {value})")]
    ControlNotPositive { field: &'static str, value: f64 },
    #[error("path config {field} must be >= 1")]
    PathConfigZero { field: &'static str },
    #[error("histogram needs at least 10 bins (got {0})")]
    TooFewBins(usize),
    #[error("{field} = {value} lies outside the supported scan range [{lo}, {hi}]")]
    ScanOutOfRange {
        field: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("{0}")]
    Other(String),
}

/// List of violations, displayed one per line.
#[derive(Debug, Clone, PartialEq)]
pub struct Violations(pub Vec<ValidationError>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e:?}: {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input:\n{0}")]
    Invalid(Violations),
    #[error("BranchDegenerate: |omega| below branch threshold at p = {p}")]
    BranchDegenerate { p: Complex64 },
    #[error("NonFiniteResult: characteristic function overflowed at p = {p}")]
    NonFiniteResult { p: Complex64 },
    #[error("PoleProximity: Kou denominator within 1e-8 of zero at p = {p}")]
    PoleProximity { p: Complex64 },
    #[error("QuadratureNotConverged: achieved error {achieved:e} > target {target:e}{}", at.map(|p| format!(" (near p = {p})")).unwrap_or_default())]
    QuadratureNotConverged {
        achieved: f64,
        target: f64,
        at: Option<f64>,
    },
    #[error("DivergentCompensator: E[e^J - 1] does not converge (estimate {estimate})")]
    DivergentCompensator { estimate: f64 },
    #[error("NegativePrice: computed price {price} (quadrature error {est_error:e}, martingale deviation {martingale_deviation:e})")]
    NegativePrice {
        price: f64,
        est_error: f64,
        martingale_deviation: f64,
    },
}

impl Error {
    pub fn invalid(errors: Vec<ValidationError>) -> Self {
        Error::Invalid(Violations(errors))
    }

    /// True for input-validation failures, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid(_))
    }

    /// The individual violations when this is a validation error.
    pub fn violations(&self) -> &[ValidationError] {
        match self {
            Error::Invalid(v) => &v.0,
            _ => &[],
        }
    }
}

impl From<ValidationError> for Error {
    fn from(e: ValidationError) -> Self {
        Error::invalid(vec![e])
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
