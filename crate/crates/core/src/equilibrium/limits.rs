use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::numeric::ols_slope;
use crate::real::Real;

use super::{naive_coefficients, solve, MarketParams, Regime};

/// Which agent group grows along a sweep. `Both` sets `N = M = size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepGroup {
    Informed,
    Uninformed,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow<F> {
    pub size: F,
    pub n_informed: F,
    pub m_uninformed: F,
    pub coeff_informed: F,
    pub coeff_noise: F,
    pub price: F,
    /// `|price - limit_price|`.
    pub distance: F,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitTable<F> {
    pub regime: Regime,
    pub group: SweepGroup,
    pub rows: Vec<LimitRow<F>>,
    pub limit_price: F,
    /// Log-log slope of `distance` against `size`; `None` when fewer than two
    /// rows have a positive distance.
    pub fitted_order: Option<F>,
}

fn resize<F: Real>(params: &MarketParams<F>, group: SweepGroup, size: F) -> MarketParams<F> {
    match group {
        SweepGroup::Informed => params.with_sizes(size, params.m_uninformed),
        SweepGroup::Uninformed => params.with_sizes(params.n_informed, size),
        SweepGroup::Both => params.with_sizes(size, size),
    }
}

/// Price the sweep converges to as the chosen group grows without bound.
fn limit_price<F: Real>(params: &MarketParams<F>, regime: Regime, group: SweepGroup) -> Result<F> {
    let x = params.realized_signal;
    match regime {
        Regime::Naive => {
            let post = naive_coefficients(params)?.posterior;
            Ok(match group {
                SweepGroup::Uninformed => params.prior.mean(),
                SweepGroup::Informed => post.mean(),
                SweepGroup::Both => {
                    let (v, vc) = (params.prior.variance(), post.variance());
                    (v * post.mean() + vc * params.prior.mean()) / (v + vc)
                }
            })
        }
        Regime::Ree => Ok(match group {
            SweepGroup::Informed | SweepGroup::Both => x,
            SweepGroup::Uninformed => {
                // γ2 = κ·γ1 at every fixed point, κ = α·σ²_ε·Z/N, and γ1 → θ·γ1 = ρ
                // as M grows, ρ = σ²_X / (σ²_X + κ²σ²_h).
                if !(params.n_informed > F::zero()) {
                    return Err(ModelError::domain(
                        "n_informed",
                        "must be positive for an uninformed REE sweep",
                    ));
                }
                let kappa = params.risk_aversion * params.epsilon_variance * params.z_noise
                    / params.n_informed;
                let rho = params.signal_variance
                    / (params.signal_variance + kappa * kappa * params.noise_variance);
                rho * x + kappa * rho * params.realized_noise
            }
        }),
        Regime::FullyRevealing => Ok(x),
    }
}

/// Evaluates the regime along increasing sizes of one agent group and fits the
/// convergence order of the price.
pub fn asymptotic_limits<F: Real>(
    params: &MarketParams<F>,
    regime: Regime,
    group: SweepGroup,
    sizes: &[F],
) -> Result<LimitTable<F>> {
    if sizes.is_empty() {
        return Err(ModelError::domain("sizes", "must not be empty"));
    }
    if sizes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ModelError::domain("sizes", "must be strictly increasing"));
    }
    let limit = limit_price(params, regime, group)?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let p = resize(params, group, size);
        let s = solve(regime, &p)?;
        rows.push(LimitRow {
            size,
            n_informed: p.n_informed,
            m_uninformed: p.m_uninformed,
            coeff_informed: s.coeff_informed,
            coeff_noise: s.coeff_noise,
            price: s.price,
            distance: (s.price - limit).abs(),
        });
    }
    let (xs, ys): (Vec<F>, Vec<F>) = rows
        .iter()
        .filter(|r| r.distance > F::zero() && r.size > F::zero())
        .map(|r| (r.size.ln(), r.distance.ln()))
        .unzip();
    Ok(LimitTable {
        regime,
        group,
        rows,
        limit_price: limit,
        fitted_order: ols_slope(&xs, &ys),
    })
}
