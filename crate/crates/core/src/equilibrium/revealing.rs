use crate::error::{ModelError, Result};
use crate::real::Real;

use super::{EquilibriumSolution, MarketParams, Regime, SolveMethod};

/// `(E(S|X), Var(S|X))` shared by every agent once the price reveals the signal:
/// `(X, σ²_ε)`, or `(X, σ_S)` under `conventions.literal_revealing_variance`.
pub fn revealing_conditional_moments<F: Real>(params: &MarketParams<F>) -> (F, F) {
    let var = if params.conventions.literal_revealing_variance {
        params.prior.variance().sqrt()
    } else {
        params.epsilon_variance
    };
    (params.realized_signal, var)
}

fn risk_correction<F: Real>(params: &MarketParams<F>) -> Result<F> {
    params.validate()?;
    let population = params.population();
    if !(population > F::zero()) {
        return Err(ModelError::domain(
            "n_informed+m_uninformed",
            "must be positive",
        ));
    }
    let (_, var) = revealing_conditional_moments(params);
    Ok(params.risk_aversion * params.z_noise * var * params.realized_noise / population)
}

/// `p = E(S|X) - α·Z·Var(S|X)·h / (N+M)`.
pub fn fully_revealing_price<F: Real>(params: &MarketParams<F>) -> Result<EquilibriumSolution<F>> {
    let correction = risk_correction(params)?;
    let (mean, var) = revealing_conditional_moments(params);
    let coeff_noise = -(params.risk_aversion * params.z_noise * var) / params.population();
    Ok(EquilibriumSolution {
        regime: Regime::FullyRevealing,
        price: mean - correction,
        coeff_informed: F::one(),
        coeff_noise,
        conditional_mean: mean,
        conditional_variance: var,
        theta: None,
        residual: F::zero(),
        iterations: 0,
        method: SolveMethod::ClosedForm,
    })
}

/// Price variance of the fully revealing equilibrium,
/// `Var(S|X) + c·(c - 2·E(S|X))` with `c = α·Z·h·Var(S|X)/(N+M)`.
///
/// The formula is evaluated as stated; it goes negative when `2·E(S|X) > c` and
/// `c(2E - c) > Var(S|X)`, which `negative` flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceVariance<F> {
    pub value: F,
    /// `c`, the risk correction subtracted from `E(S|X)`.
    pub correction: F,
    /// `c - 2·E(S|X)`.
    pub bracket: F,
    pub negative: bool,
}

pub fn fully_revealing_price_variance<F: Real>(
    params: &MarketParams<F>,
) -> Result<PriceVariance<F>> {
    let c = risk_correction(params)?;
    let (mean, var) = revealing_conditional_moments(params);
    let bracket = c - F::lit(2.0) * mean;
    let value = var + c * bracket;
    Ok(PriceVariance {
        value,
        correction: c,
        bracket,
        negative: value < F::zero(),
    })
}

/// `IE = 1 / Var(p)`.
pub fn informational_efficiency<F: Real>(var_p: F) -> Result<F> {
    if !(var_p > F::zero()) || !var_p.is_finite() {
        return Err(ModelError::domain(
            "var_p",
            format!("must be positive and finite, got {var_p}"),
        ));
    }
    Ok(var_p.recip())
}
