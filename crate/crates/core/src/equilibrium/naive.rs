use crate::error::{ModelError, Result};
use crate::real::Real;
use crate::stats::{posterior, Gaussian};

use super::{EquilibriumSolution, MarketParams, Regime, SolveMethod};

/// Price weights of the naive equilibrium together with the informed posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveCoefficients<F> {
    /// Weight on `E(S|X)`; the prior mean gets `1 - theta1`.
    pub theta1: F,
    /// Coefficient on the aggregate noise demand `Z·h`.
    pub theta2: F,
    /// Informed belief `S | X`.
    pub posterior: Gaussian<F>,
}

/// Solves `N·Y_I(p) + M·Y(p) + Z·h = 0` for the weights of
/// `p = θ1·E(S|X) + (1-θ1)·E(S) + θ2·Z·h`:
///
/// ```text
/// θ1 = N·Var(S) / (N·Var(S) + M·Var(S|X))
/// θ2 = α·Var(S|X)·Var(S) / (N·Var(S) + M·Var(S|X))
/// ```
pub fn naive_coefficients<F: Real>(params: &MarketParams<F>) -> Result<NaiveCoefficients<F>> {
    params.validate()?;
    let post = posterior(
        &params.prior,
        params.signal_variance,
        params.realized_signal,
    )?;
    let var_prior = params.prior.variance();
    let var_post = post.variance();
    let denom = params.n_informed * var_prior + params.m_uninformed * var_post;
    if !(denom > F::zero()) || !denom.is_finite() {
        return Err(ModelError::domain(
            "N*Var(S)+M*Var(S|X)",
            format!("must be positive and finite, got {denom}"),
        ));
    }
    Ok(NaiveCoefficients {
        theta1: params.n_informed * var_prior / denom,
        theta2: params.risk_aversion * var_post * var_prior / denom,
        posterior: post,
    })
}

pub fn naive_equilibrium<F: Real>(params: &MarketParams<F>) -> Result<EquilibriumSolution<F>> {
    let c = naive_coefficients(params)?;
    let price = c.theta1 * c.posterior.mean()
        + (F::one() - c.theta1) * params.prior.mean()
        + c.theta2 * params.z_noise * params.realized_noise;
    Ok(EquilibriumSolution {
        regime: Regime::Naive,
        price,
        coeff_informed: c.theta1,
        coeff_noise: c.theta2,
        conditional_mean: c.posterior.mean(),
        conditional_variance: c.posterior.variance(),
        theta: None,
        residual: F::zero(),
        iterations: 0,
        method: SolveMethod::ClosedForm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MarketParams<f64> {
        MarketParams::default()
    }

    #[test]
    fn no_surprise_and_no_noise_prices_at_prior_mean() {
        let mut p = params();
        p.realized_signal = p.prior.mean();
        p.realized_noise = 0.0;
        let s = naive_equilibrium(&p).unwrap();
        assert!((s.price - p.prior.mean()).abs() < 1e-12);
    }

    #[test]
    fn uninformed_flood_drives_weights_to_zero() {
        let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for k in 2..=8 {
            let p = params().with_sizes(10.0, 10f64.powi(k));
            let s = naive_equilibrium(&p).unwrap();
            let gap = (s.price - p.prior.mean()).abs();
            assert!(s.coeff_informed < last.0 && s.coeff_noise < last.1 && gap < last.2);
            last = (s.coeff_informed, s.coeff_noise, gap);
        }
        assert!(last.0 < 1e-6 && last.1 < 1e-6);
    }

    #[test]
    fn weights_stay_inside_unit_interval() {
        for (n, m) in [(1.0, 0.0), (0.0, 1.0), (3.0, 7.0), (1e6, 1e-3)] {
            let s = naive_equilibrium(&params().with_sizes(n, m)).unwrap();
            assert!((0.0..=1.0).contains(&s.coeff_informed));
        }
    }

    #[test]
    fn zero_population_is_a_domain_error() {
        assert!(naive_equilibrium(&params().with_sizes(0.0, 0.0)).is_err());
    }

    #[test]
    fn price_is_affine_in_noise_with_slope_theta2_z() {
        let mut p = params();
        p.realized_noise = 0.0;
        let base = naive_equilibrium(&p).unwrap();
        p.realized_noise = 2.0;
        let shifted = naive_equilibrium(&p).unwrap();
        let slope = (shifted.price - base.price) / 2.0;
        assert!((slope - base.coeff_noise * p.z_noise).abs() < 1e-12);
        assert!(slope >= 0.0);
    }
}
