//! Agent demand, numerical market clearing and Monte Carlo studies.
//!
//! Every regime's aggregate excess demand is affine and, for admissible
//! parameters, strictly decreasing in the price. [`clear_market`] returns the
//! closed-form root and, independently, a bisection bracket of the same root.

mod study;

pub use study::{replication_draw, run_convergence_study, Draw, StudyRow, StudyTable};

use crate::equilibrium::{ree_conditional_variance, ree_theta, MarketParams, Regime};
use crate::error::{ModelError, Result};
use crate::numeric::{bisect, find_bracket};
use crate::real::Real;
use crate::stats::{posterior, Gaussian};

/// Mean-variance demand `(E - p) / (α·Var)` of an agent holding `belief`.
pub fn demand_uninformed<F: Real>(price: F, belief: &Gaussian<F>, risk_aversion: F) -> Result<F> {
    if !(risk_aversion > F::zero()) {
        return Err(ModelError::domain("risk_aversion", "must be positive"));
    }
    if !(belief.variance() > F::zero()) {
        return Err(ModelError::domain("belief.variance", "must be positive"));
    }
    Ok((belief.mean() - price) / (risk_aversion * belief.variance()))
}

/// Demand of an agent who treats the signal as sufficient: `(X - p) / (α·σ²_ε)`.
pub fn demand_informed<F: Real>(
    price: F,
    signal: F,
    epsilon_variance: F,
    risk_aversion: F,
) -> Result<F> {
    if !(risk_aversion > F::zero()) {
        return Err(ModelError::domain("risk_aversion", "must be positive"));
    }
    if !(epsilon_variance > F::zero()) {
        return Err(ModelError::domain("epsilon_variance", "must be positive"));
    }
    Ok((signal - price) / (risk_aversion * epsilon_variance))
}

/// Naive informed demand: the mean-variance demand at the signal posterior.
pub fn demand_informed_naive<F: Real>(
    price: F,
    prior: &Gaussian<F>,
    signal_variance: F,
    signal: F,
    risk_aversion: F,
) -> Result<F> {
    let post = posterior(prior, signal_variance, signal)?;
    demand_uninformed(price, &post, risk_aversion)
}

/// Uninformed REE demand `(θ - 1)·p / (α·Var(S|p))`: the belief mean is `θ·p`.
pub fn demand_uninformed_ree<F: Real>(
    price: F,
    theta: F,
    conditional_variance: F,
    risk_aversion: F,
) -> Result<F> {
    let belief = Gaussian::new(theta * price, conditional_variance)?;
    demand_uninformed(price, &belief, risk_aversion)
}

/// Beliefs held by each side of the market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beliefs<F> {
    /// Uninformed hold the prior, informed the signal posterior.
    Naive {
        prior: Gaussian<F>,
        posterior: Gaussian<F>,
    },
    /// Informed treat the signal as sufficient; uninformed project on the price.
    Ree {
        signal: F,
        epsilon_variance: F,
        theta: F,
        price_conditional_variance: F,
    },
    /// Every agent holds the signal-conditional belief.
    FullyRevealing { conditional: Gaussian<F> },
}

/// The non-noise agents of the market plus the noise mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentPopulation<F> {
    pub n_informed: F,
    pub m_uninformed: F,
    pub z_noise: F,
    pub risk_aversion: F,
    pub beliefs: Beliefs<F>,
}

impl<F: Real> AgentPopulation<F> {
    pub fn naive(params: &MarketParams<F>) -> Result<Self> {
        params.validate()?;
        let post = posterior(
            &params.prior,
            params.signal_variance,
            params.realized_signal,
        )?;
        Ok(Self::with_beliefs(
            params,
            Beliefs::Naive {
                prior: params.prior,
                posterior: post,
            },
        ))
    }

    /// Population facing the price conjecture `p = γ1·X + γ2·h`.
    pub fn ree(params: &MarketParams<F>, gamma1: F, gamma2: F) -> Result<Self> {
        params.validate()?;
        let beliefs = Beliefs::Ree {
            signal: params.realized_signal,
            epsilon_variance: params.epsilon_variance,
            theta: ree_theta(gamma1, gamma2, params)?,
            price_conditional_variance: ree_conditional_variance(gamma1, gamma2, params)?,
        };
        Ok(Self::with_beliefs(params, beliefs))
    }

    pub fn fully_revealing(params: &MarketParams<F>) -> Result<Self> {
        params.validate()?;
        let (mean, var) = crate::equilibrium::revealing_conditional_moments(params);
        Ok(Self::with_beliefs(
            params,
            Beliefs::FullyRevealing {
                conditional: Gaussian::new(mean, var)?,
            },
        ))
    }

    fn with_beliefs(params: &MarketParams<F>, beliefs: Beliefs<F>) -> Self {
        Self {
            n_informed: params.n_informed,
            m_uninformed: params.m_uninformed,
            z_noise: params.z_noise,
            risk_aversion: params.risk_aversion,
            beliefs,
        }
    }

    pub fn regime(&self) -> Regime {
        match self.beliefs {
            Beliefs::Naive { .. } => Regime::Naive,
            Beliefs::Ree { .. } => Regime::Ree,
            Beliefs::FullyRevealing { .. } => Regime::FullyRevealing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_informed >= F::zero() && self.m_uninformed >= F::zero())
            || !(self.n_informed + self.m_uninformed > F::zero())
        {
            return Err(ModelError::domain(
                "n_informed+m_uninformed",
                "need at least one non-noise agent",
            ));
        }
        if !(self.risk_aversion > F::zero()) {
            return Err(ModelError::domain("risk_aversion", "must be positive"));
        }
        if !(self.z_noise >= F::zero()) {
            return Err(ModelError::domain("z_noise", "must be non-negative"));
        }
        Ok(())
    }

    /// Signed noise contribution to excess demand. With a fully revealed signal the
    /// known noise mass `Z·h` is net supply the other agents absorb; otherwise it is
    /// demand.
    fn noise_term(&self, realized_noise: F) -> F {
        let flow = self.z_noise * realized_noise;
        match self.beliefs {
            Beliefs::FullyRevealing { .. } => -flow,
            _ => flow,
        }
    }

    /// `N·Y_I(p) + M·Y(p) ± Z·h`, built from the individual demand functions.
    pub fn excess_demand(&self, price: F, realized_noise: F) -> Result<F> {
        let a = self.risk_aversion;
        let (informed, uninformed) = match self.beliefs {
            Beliefs::Naive { prior, posterior } => (
                demand_uninformed(price, &posterior, a)?,
                demand_uninformed(price, &prior, a)?,
            ),
            Beliefs::Ree {
                signal,
                epsilon_variance,
                theta,
                price_conditional_variance,
            } => (
                demand_informed(price, signal, epsilon_variance, a)?,
                demand_uninformed_ree(price, theta, price_conditional_variance, a)?,
            ),
            Beliefs::FullyRevealing { conditional } => {
                let y = demand_uninformed(price, &conditional, a)?;
                (y, y)
            }
        };
        Ok(self.n_informed * informed
            + self.m_uninformed * uninformed
            + self.noise_term(realized_noise))
    }

    /// `(slope, intercept)` of the affine excess demand.
    pub fn excess_demand_line(&self, realized_noise: F) -> Result<(F, F)> {
        self.validate()?;
        let a = self.risk_aversion;
        let (n, m) = (self.n_informed, self.m_uninformed);
        let noise = self.noise_term(realized_noise);
        let line = match self.beliefs {
            Beliefs::Naive { prior, posterior } => {
                let (vi, vu) = (posterior.variance(), prior.variance());
                if !(vi > F::zero() && vu > F::zero()) {
                    return Err(ModelError::domain("belief.variance", "must be positive"));
                }
                (
                    -(n / (a * vi) + m / (a * vu)),
                    n * posterior.mean() / (a * vi) + m * prior.mean() / (a * vu) + noise,
                )
            }
            Beliefs::Ree {
                signal,
                epsilon_variance,
                theta,
                price_conditional_variance: vp,
            } => {
                if !(epsilon_variance > F::zero() && vp > F::zero()) {
                    return Err(ModelError::domain("belief.variance", "must be positive"));
                }
                (
                    -n / (a * epsilon_variance) + m * (theta - F::one()) / (a * vp),
                    n * signal / (a * epsilon_variance) + noise,
                )
            }
            Beliefs::FullyRevealing { conditional } => {
                let v = conditional.variance();
                if !(v > F::zero()) {
                    return Err(ModelError::domain("belief.variance", "must be positive"));
                }
                (
                    -(n + m) / (a * v),
                    (n + m) * conditional.mean() / (a * v) + noise,
                )
            }
        };
        Ok(line)
    }
}

/// Market-clearing price with its verification bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearingResult<F> {
    /// Closed-form root of the affine excess demand.
    pub price: F,
    pub excess_demand_at_price: F,
    /// Independent bisection estimate of the same root.
    pub bisection_price: F,
    pub iterations: usize,
    pub bracket: (F, F),
}

/// Clears the market: the closed-form root of the excess-demand line, checked by
/// bracketing and bisecting the demand functions to relative width `tol·1e-3`.
pub fn clear_market<F: Real>(
    population: &AgentPopulation<F>,
    realized_noise: F,
    tol: F,
) -> Result<ClearingResult<F>> {
    if !(tol > F::zero()) {
        return Err(ModelError::domain("tol", "must be positive"));
    }
    let (slope, intercept) = population.excess_demand_line(realized_noise)?;
    if !(slope < F::zero()) {
        return Err(ModelError::Structural {
            slope: slope.to_f64_lossy(),
        });
    }
    let price = -intercept / slope;
    let excess = population.excess_demand(price, realized_noise)?;

    let f = |p: F| {
        population
            .excess_demand(p, realized_noise)
            .unwrap_or(F::nan())
    };
    let (lo, hi) = find_bracket(f, F::zero(), F::one()).ok_or(ModelError::Structural {
        slope: slope.to_f64_lossy(),
    })?;
    let b = bisect(f, lo, hi, tol * F::lit(1e-3), 400).ok_or(ModelError::Structural {
        slope: slope.to_f64_lossy(),
    })?;
    Ok(ClearingResult {
        price,
        excess_demand_at_price: excess,
        bisection_price: b.root,
        iterations: b.iterations,
        bracket: (b.low, b.high),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{fully_revealing_price, naive_equilibrium, solve_ree_fixed_point};

    fn g(m: f64, v: f64) -> Gaussian<f64> {
        Gaussian::new(m, v).unwrap()
    }

    #[test]
    fn demand_examples() {
        assert_eq!(demand_uninformed(10.0, &g(10.0, 1.0), 2.0).unwrap(), 0.0);
        assert_eq!(demand_uninformed(10.0, &g(12.0, 1.0), 2.0).unwrap(), 1.0);
        let y1 = demand_uninformed(9.0, &g(12.0, 0.7), 1.5).unwrap();
        let y2 = demand_uninformed(9.0, &g(12.0, 0.7), 3.0).unwrap();
        assert!((y1 - 2.0 * y2).abs() < 1e-15);
        assert_eq!(demand_informed(10.0, 10.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(demand_informed(10.0, 11.0, 0.5, 1.0).unwrap(), 2.0);
        assert!(demand_uninformed(1.0, &g(1.0, 0.0), 1.0).is_err());
        assert!(demand_informed(1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn uninformative_signal_makes_informed_demand_uninformed() {
        let prior = g(10.0, 2.0);
        let yi = demand_informed_naive(9.0, &prior, f64::INFINITY, 50.0, 2.0).unwrap();
        let yu = demand_uninformed(9.0, &prior, 2.0).unwrap();
        assert_eq!(yi, yu);
    }

    #[test]
    fn only_uninformed_without_noise_clear_at_prior_mean() {
        let p = MarketParams::default().with_sizes(0.0, 7.0);
        let pop = AgentPopulation::naive(&p).unwrap();
        let c = clear_market(&pop, 0.0, 1e-12).unwrap();
        assert!((c.price - p.prior.mean()).abs() < 1e-12);
    }

    #[test]
    fn clearing_matches_closed_forms() {
        let p = MarketParams::default();
        let naive = naive_equilibrium(&p).unwrap();
        let c = clear_market(
            &AgentPopulation::naive(&p).unwrap(),
            p.realized_noise,
            1e-12,
        )
        .unwrap();
        assert!((c.price - naive.price).abs() < 1e-10);
        assert!((c.bisection_price - naive.price).abs() < 1e-10);

        let fr = fully_revealing_price(&p).unwrap();
        let c = clear_market(
            &AgentPopulation::fully_revealing(&p).unwrap(),
            p.realized_noise,
            1e-12,
        )
        .unwrap();
        assert!((c.price - fr.price).abs() < 1e-10);
        assert!((c.bisection_price - fr.price).abs() < 1e-10);

        let ree = solve_ree_fixed_point(&p, 1e-13, 10_000).unwrap();
        let pop = AgentPopulation::ree(&p, ree.coeff_informed, ree.coeff_noise).unwrap();
        let c = clear_market(&pop, p.realized_noise, 1e-12).unwrap();
        assert!(
            (c.price - ree.price).abs() < 1e-9,
            "{} vs {}",
            c.price,
            ree.price
        );
    }

    #[test]
    fn upward_sloping_demand_is_structural_error() {
        let p = MarketParams::default().with_sizes(0.0, 1.0);
        let mut pop = AgentPopulation::ree(&p, 0.5, 0.0).unwrap();
        if let Beliefs::Ree { theta, .. } = &mut pop.beliefs {
            *theta = 1.5;
        }
        assert!(
            matches!(clear_market(&pop, 0.0, 1e-9), Err(ModelError::Structural { slope }) if slope > 0.0)
        );
    }

    #[test]
    fn scaling_masses_leaves_price_unchanged() {
        let p = MarketParams::default();
        let base = clear_market(&AgentPopulation::naive(&p).unwrap(), 0.3, 1e-12).unwrap();
        let mut scaled = p.with_sizes(p.n_informed * 7.0, p.m_uninformed * 7.0);
        scaled.z_noise *= 7.0;
        let s = clear_market(&AgentPopulation::naive(&scaled).unwrap(), 0.3, 1e-12).unwrap();
        assert!((s.price - base.price).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_mass_ignores_noise_draw() {
        let mut p = MarketParams::default();
        p.z_noise = 0.0;
        let pop = AgentPopulation::naive(&p).unwrap();
        let a = clear_market(&pop, -3.0, 1e-12).unwrap();
        let b = clear_market(&pop, 5.0, 1e-12).unwrap();
        assert_eq!(a.price, b.price);
    }
}
