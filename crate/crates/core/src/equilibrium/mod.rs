//! Equilibrium prices of the single-asset differential-information market.
//!
//! Three regimes are covered:
//!
//! * [`Regime::Naive`]: nobody learns from the price. Informed agents use the
//!   conjugate posterior given their signal, uninformed agents use the prior.
//! * [`Regime::Ree`]: uninformed agents condition on the price through the linear
//!   conjecture `p = γ1·X + γ2·h`; `(γ1, γ2)` is a fixed point solved numerically.
//! * [`Regime::FullyRevealing`]: the price reveals the signal and every agent holds
//!   the signal-conditional belief; noise demand is a known constant.
//!
//! All functions are pure and operate on an immutable [`MarketParams`].

mod limits;
mod naive;
mod ree;
mod revealing;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::real::Real;
use crate::stats::Gaussian;

pub use limits::{asymptotic_limits, LimitRow, LimitTable, SweepGroup};
pub use naive::{naive_coefficients, naive_equilibrium, NaiveCoefficients};
pub use ree::{
    ree_coefficients, ree_conditional_variance, ree_price_joint, ree_residual, ree_theta,
    solve_ree, solve_ree_fixed_point, ReeSolverOptions,
};
pub use revealing::{
    fully_revealing_price, fully_revealing_price_variance, informational_efficiency,
    revealing_conditional_moments, PriceVariance,
};

/// Which equilibrium concept a computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Naive,
    Ree,
    FullyRevealing,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Naive, Regime::Ree, Regime::FullyRevealing];

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Naive => "naive",
            Regime::Ree => "ree",
            Regime::FullyRevealing => "fully_revealing",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Regime::Naive),
            "ree" => Ok(Regime::Ree),
            "fully_revealing" => Ok(Regime::FullyRevealing),
            other => Err(format!("unknown regime `{other}`")),
        }
    }
}

/// Alternative literal readings of formulas whose printed form is not consistent
/// with its own derivation. Both default to the derivation-consistent form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Conventions {
    /// Use `σ²_X + σ²_h - Cov²/Var(p)` for `Var(S|p)` instead of `Var(S) - Cov²/Var(p)`.
    pub literal_ree_conditional_variance: bool,
    /// Use `σ_S` (prior standard deviation) for `Var(S|X)` in the fully revealing regime
    /// instead of `σ²_ε`.
    pub literal_revealing_variance: bool,
}

/// Full parameter set of the market model.
///
/// Agent counts are real masses; integer counts are the special case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams<F> {
    /// Mass of informed agents `N`.
    pub n_informed: F,
    /// Mass of uninformed agents `M`.
    pub m_uninformed: F,
    /// Mass of noise traders `Z`.
    pub z_noise: F,
    /// Risk aversion `α`.
    pub risk_aversion: F,
    /// Prior on the future value `S`.
    pub prior: Gaussian<F>,
    /// `σ²_X`: noise of the signal around `S` (naive regime) or variance of the signal (REE).
    pub signal_variance: F,
    /// `σ²_h`.
    pub noise_variance: F,
    /// `σ²_ε` in `S = X + ε`.
    pub epsilon_variance: F,
    /// Realised signal `X`.
    pub realized_signal: F,
    /// Realised noise demand `h`.
    pub realized_noise: F,
    pub conventions: Conventions,
}

impl<F: Real> MarketParams<F> {
    /// Every violated invariant as `(field, reason)`.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut check = |field: &'static str, ok: bool, reason: &str| {
            if !ok {
                out.push((field, reason.to_string()));
            }
        };
        let zero = F::zero();
        let finite_nonneg = |v: F| v.is_finite() && v >= zero;
        check(
            "n_informed",
            finite_nonneg(self.n_informed),
            "must be finite and >= 0",
        );
        check(
            "m_uninformed",
            finite_nonneg(self.m_uninformed),
            "must be finite and >= 0",
        );
        check(
            "n_informed+m_uninformed",
            self.n_informed + self.m_uninformed > zero,
            "at least one informed or uninformed agent is required",
        );
        check(
            "z_noise",
            finite_nonneg(self.z_noise),
            "must be finite and >= 0",
        );
        check(
            "risk_aversion",
            self.risk_aversion.is_finite() && self.risk_aversion > zero,
            "must be > 0",
        );
        check(
            "prior.variance",
            self.prior.variance() > zero,
            "must be > 0",
        );
        check(
            "signal_variance",
            self.signal_variance.is_finite() && self.signal_variance > zero,
            "must be > 0",
        );
        check(
            "noise_variance",
            finite_nonneg(self.noise_variance),
            "must be finite and >= 0",
        );
        check(
            "epsilon_variance",
            self.epsilon_variance.is_finite() && self.epsilon_variance > zero,
            "must be > 0",
        );
        check(
            "realized_signal",
            self.realized_signal.is_finite(),
            "must be finite",
        );
        check(
            "realized_noise",
            self.realized_noise.is_finite(),
            "must be finite",
        );
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((field, reason)) => Err(ModelError::domain(field, reason)),
        }
    }

    pub fn with_sizes(mut self, n_informed: F, m_uninformed: F) -> Self {
        self.n_informed = n_informed;
        self.m_uninformed = m_uninformed;
        self
    }

    /// Total agent mass `N + M`.
    pub fn population(&self) -> F {
        self.n_informed + self.m_uninformed
    }
}

impl Default for MarketParams<f64> {
    fn default() -> Self {
        MarketParams {
            n_informed: 10.0,
            m_uninformed: 10.0,
            z_noise: 1.0,
            risk_aversion: 2.0,
            prior: Gaussian::new(10.0, 4.0).expect("valid default prior"),
            signal_variance: 1.0,
            noise_variance: 1.0,
            epsilon_variance: 1.0,
            realized_signal: 11.0,
            realized_noise: 0.5,
            conventions: Conventions::default(),
        }
    }
}

/// How a solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedForm,
    DampedIteration,
    SimplexFallback,
    /// Bisection along the ray that contains every fixed point.
    RayBisection,
}

/// Price and its coefficient decomposition.
///
/// Coefficient meaning by regime:
///
/// | regime | `coeff_informed` | `coeff_noise` |
/// |---|---|---|
/// | naive | `θ1` | `θ2` (price carries `θ2·Z·h`) |
/// | REE | `γ1` | `γ2` |
/// | fully revealing | `1` | `-α·Z·Var(S|X)/(N+M)` |
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSolution<F> {
    pub regime: Regime,
    pub price: F,
    pub coeff_informed: F,
    pub coeff_noise: F,
    /// `E(S|X)` for naive and fully revealing, `E(S|p)` for REE.
    pub conditional_mean: F,
    /// `Var(S|X)` for naive and fully revealing, `Var(S|p)` for REE.
    pub conditional_variance: F,
    /// REE only: `θ = Cov(S,p)/Var(p)`.
    pub theta: Option<F>,
    /// Fixed-point residual; zero for closed forms.
    pub residual: F,
    pub iterations: usize,
    pub method: SolveMethod,
}

/// Variance of the equilibrium price implied by the model's randomness.
///
/// Naive: `p` is affine in the signal and the noise draw,
/// `Var(p) = (θ1(1-μ1))²(σ²_S + σ²_X) + (θ2 Z)² σ²_h`. REE: `γ1²σ²_X + γ2²σ²_h`.
/// Fully revealing: the closed-form expression evaluated by
/// [`fully_revealing_price_variance`], which may be negative.
pub fn price_variance<F: Real>(
    solution: &EquilibriumSolution<F>,
    params: &MarketParams<F>,
) -> Result<F> {
    match solution.regime {
        Regime::Naive => {
            let mu1 = crate::stats::prior_weight(&params.prior, params.signal_variance)?;
            let signal_loading = solution.coeff_informed * (F::one() - mu1);
            let noise_loading = solution.coeff_noise * params.z_noise;
            Ok(
                signal_loading
                    * signal_loading
                    * (params.prior.variance() + params.signal_variance)
                    + noise_loading * noise_loading * params.noise_variance,
            )
        }
        Regime::Ree => {
            let (g1, g2) = (solution.coeff_informed, solution.coeff_noise);
            Ok(g1 * g1 * params.signal_variance + g2 * g2 * params.noise_variance)
        }
        Regime::FullyRevealing => Ok(fully_revealing_price_variance(params)?.value),
    }
}

/// Solves the requested regime with default solver settings.
pub fn solve<F: Real>(regime: Regime, params: &MarketParams<F>) -> Result<EquilibriumSolution<F>> {
    match regime {
        Regime::Naive => naive_equilibrium(params),
        Regime::Ree => solve_ree(params, &ReeSolverOptions::default()),
        Regime::FullyRevealing => fully_revealing_price(params),
    }
}
