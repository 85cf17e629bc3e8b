//! Seeded Monte Carlo studies of equilibrium prices across population sizes.
//!
//! Stream contract: replication `r` of a study with root seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` with stream id `r`. The draws therefore do not
//! depend on evaluation order or thread count, and every grid cell sees the same
//! draws (common random numbers).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{
    fully_revealing_price, naive_equilibrium, price_variance, revealing_conditional_moments,
    solve_ree, EquilibriumSolution, MarketParams, ReeSolverOptions, Regime,
};
use crate::error::{ModelError, Result};
use crate::real::Real;

/// One replication's random inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw<F> {
    /// Future value `S`, drawn in the naive model only (`None` otherwise).
    pub value: Option<F>,
    pub signal: F,
    pub noise: F,
}

/// Draws for replication `replication`.
///
/// Naive: `S ~ N(S̄, σ²_S)`, `X = S + N(0, σ²_X)`. REE and fully revealing:
/// `X ~ N(realized_signal, σ²_X)`. Noise is `h ~ N(0, σ²_h)` in every regime.
pub fn replication_draw<F: Real>(
    regime: Regime,
    base: &MarketParams<F>,
    seed: u64,
    replication: u64,
) -> Draw<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    let mut z = || {
        F::lit(<StandardNormal as Distribution<f64>>::sample(
            &StandardNormal,
            &mut rng,
        ))
    };
    let sd_x = base.signal_variance.sqrt();
    let sd_h = base.noise_variance.sqrt();
    match regime {
        Regime::Naive => {
            let value = base.prior.mean() + base.prior.std_dev() * z();
            let signal = value + sd_x * z();
            Draw {
                value: Some(value),
                signal,
                noise: sd_h * z(),
            }
        }
        Regime::Ree | Regime::FullyRevealing => {
            let signal = base.realized_signal + sd_x * z();
            Draw {
                value: None,
                signal,
                noise: sd_h * z(),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow<F> {
    pub n_informed: F,
    pub m_uninformed: F,
    pub replications: usize,
    pub price_mean: F,
    pub price_mean_analytic: F,
    /// Monte Carlo standard error of `price_mean` (sample sd / sqrt(R)).
    pub price_se: F,
    /// Sample variance of the price across replications (zero for one replication).
    pub var_p: F,
    pub var_p_analytic: F,
    pub ie: Option<F>,
    pub ie_analytic: Option<F>,
    /// Coefficients of the cell's equilibrium (see [`EquilibriumSolution`]).
    pub coeff_informed: F,
    pub coeff_noise: F,
}

impl<F: Real> StudyRow<F> {
    /// `|price_mean - price_mean_analytic|`.
    pub fn mean_gap(&self) -> F {
        (self.price_mean - self.price_mean_analytic).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyTable<F> {
    pub regime: Regime,
    pub seed: u64,
    pub rows: Vec<StudyRow<F>>,
}

/// Equilibrium at the base draws and the analytic price moments of one cell.
struct Cell<F> {
    reference: EquilibriumSolution<F>,
    mean: F,
    variance: F,
}

fn cell_moments<F: Real>(
    regime: Regime,
    params: &MarketParams<F>,
    ree: &ReeSolverOptions<F>,
) -> Result<Cell<F>> {
    match regime {
        Regime::Naive => {
            let s = naive_equilibrium(params)?;
            let variance = price_variance(&s, params)?;
            Ok(Cell {
                mean: params.prior.mean(),
                variance,
                reference: s,
            })
        }
        Regime::Ree => {
            let s = solve_ree(params, ree)?;
            let variance = price_variance(&s, params)?;
            Ok(Cell {
                mean: s.coeff_informed * params.realized_signal,
                variance,
                reference: s,
            })
        }
        Regime::FullyRevealing => {
            let s = fully_revealing_price(params)?;
            let loading = s.coeff_noise;
            let variance = params.signal_variance + loading * loading * params.noise_variance;
            Ok(Cell {
                mean: revealing_conditional_moments(params).0,
                variance,
                reference: s,
            })
        }
    }
}

fn price_for<F: Real>(
    regime: Regime,
    params: &MarketParams<F>,
    cell: &Cell<F>,
    draw: &Draw<F>,
) -> Result<F> {
    match regime {
        Regime::Naive => {
            let mut p = *params;
            p.realized_signal = draw.signal;
            p.realized_noise = draw.noise;
            Ok(naive_equilibrium(&p)?.price)
        }
        Regime::Ree => {
            Ok(cell.reference.coeff_informed * draw.signal
                + cell.reference.coeff_noise * draw.noise)
        }
        Regime::FullyRevealing => {
            let mut p = *params;
            p.realized_signal = draw.signal;
            p.realized_noise = draw.noise;
            Ok(fully_revealing_price(&p)?.price)
        }
    }
}

/// Runs `replications` seeded draws at every `(N, M)` in `grid` and compares sample
/// price moments with their analytic counterparts.
pub fn run_convergence_study<F: Real>(
    base: &MarketParams<F>,
    regime: Regime,
    grid: &[(F, F)],
    replications: usize,
    seed: u64,
) -> Result<StudyTable<F>> {
    if replications == 0 {
        return Err(ModelError::domain("replications", "must be at least 1"));
    }
    if grid.is_empty() {
        return Err(ModelError::domain("grid", "must not be empty"));
    }
    base.validate()?;
    let draws: Vec<Draw<F>> = (0..replications as u64)
        .into_par_iter()
        .map(|r| replication_draw(regime, base, seed, r))
        .collect();

    let ree = ReeSolverOptions {
        tol: F::lit(1e-12),
        ..ReeSolverOptions::default()
    };
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &(n, m)) in grid.iter().enumerate() {
        if !(n >= F::zero() && m >= F::zero()) || !(n + m > F::zero()) {
            return Err(ModelError::domain(
                format!("grid[{i}]"),
                "cell needs N >= 0, M >= 0 and N + M > 0",
            ));
        }
        let params = base.with_sizes(n, m);
        let cell = cell_moments(regime, &params, &ree)?;
        let prices: Vec<F> = draws
            .par_iter()
            .map(|d| price_for(regime, &params, &cell, d))
            .collect::<Result<_>>()?;
        let count = F::from_usize(replications).expect("replication count fits the scalar");
        let mean = prices.iter().copied().sum::<F>() / count;
        let var = if replications > 1 {
            prices.iter().map(|&p| (p - mean) * (p - mean)).sum::<F>() / (count - F::one())
        } else {
            F::zero()
        };
        let positive_recip = |v: F| (v > F::zero()).then(|| v.recip());
        rows.push(StudyRow {
            n_informed: n,
            m_uninformed: m,
            replications,
            price_mean: mean,
            price_mean_analytic: cell.mean,
            price_se: (var / count).sqrt(),
            var_p: var,
            var_p_analytic: cell.variance,
            ie: if replications > 1 {
                positive_recip(var)
            } else {
                None
            },
            ie_analytic: positive_recip(cell.variance),
            coeff_informed: cell.reference.coeff_informed,
            coeff_noise: cell.reference.coeff_noise,
        });
    }
    Ok(StudyTable { regime, seed, rows })
}
