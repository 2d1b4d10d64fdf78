//! Optimal traffic flow and minimal relay-node density for dense wireless
//! networks with mobile nodes.
//!
//! Sources and destinations of data are continuous densities `rho`. At each
//! time the optimal flow is the gradient field `T = -grad(phi)` with
//! `-lap(phi) = rho` and zero normal flux on the boundary; relays are placed
//! with density `eta = |T|^alpha`. Densities move under deterministic drift
//! (linear transport) or Brownian motion (Fokker-Planck).
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusion;
pub mod driver;
pub mod error;
pub mod fields;
pub mod flow;
pub mod pipeline1d;
pub mod poisson;
pub mod scalar;
pub mod scenario;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = fields::GridSpec<f64>;
pub type Scalar = fields::ScalarField<f64>;
pub type Vector = fields::VectorField<f64>;
pub type Snapshot = flow::SolveSnapshot<f64>;
pub type Summary = flow::RunSummary<f64>;
pub type Velocity = scenario::VelocitySpec<f64>;

pub type Grid32 = fields::GridSpec<f32>;
pub type Scalar32 = fields::ScalarField<f32>;
pub type Vector32 = fields::VectorField<f32>;
