//! Option pricing under the exponential-Vasicek stochastic volatility model
//! with compound-Poisson price jumps.
//!
//! * [`model`]: parameters, jump laws and validation.
//! * [`charfn`]: the Fourier-space propagator `F(p, T)`.
//! * [`jumps`]: the jump compensator and the jump exponent `U(p, T)`.
//! * [`pricing`]: marginal densities and European call/put prices by Fourier inversion.
//! * [`montecarlo`]: path simulation used as an independent oracle.
//! * [`validation`]: reproduction harnesses for the published tables and figures.

pub mod charfn;
pub mod error;
pub mod jumps;
pub mod model;
pub mod montecarlo;
pub mod pricing;
mod quadrature;
pub mod validation;

pub use error::{Error, Result, ValidationError};
pub use pricing::{call_price, put_price, FourierPricer, PriceResult, QuadratureControls};
pub use model::{validate, JumpDensity, JumpKind, JumpSpec, LnParams, MarketRequest, SvModel};
