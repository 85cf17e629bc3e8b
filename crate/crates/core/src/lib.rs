//! Differential-information asset pricing and a collateralised token economy.
//!
//! * [`stats`]: conjugate normal updates and bivariate projection.
//! * [`equilibrium`]: naive, rational-expectations and fully revealing equilibrium prices,
//!   price variance and informational efficiency, asymptotic sweeps.
//! * [`market`]: agent demand functions, numerical market clearing and seeded Monte Carlo
//!   convergence studies.
//! * [`tokenomics`]: integer-exact simulator of a vault-backed token with minting, fees,
//!   a constant-product pool, monthly rewards and a price safeguard.
//!
//! The continuous modules are generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibrium;
pub mod error;
pub mod market;
pub mod numeric;
pub mod real;
pub mod stats;
pub mod tokenomics;

pub use error::ModelError;
pub use real::Real;

pub type Gaussian = stats::Gaussian<f64>;
pub type JointGaussianPair = stats::JointGaussianPair<f64>;
pub type MarketParams = equilibrium::MarketParams<f64>;
pub type EquilibriumSolution = equilibrium::EquilibriumSolution<f64>;
pub type LimitTable = equilibrium::LimitTable<f64>;
pub type AgentPopulation = market::AgentPopulation<f64>;
pub type ClearingResult = market::ClearingResult<f64>;
pub type StudyTable = market::StudyTable<f64>;
