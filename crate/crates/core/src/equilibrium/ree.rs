//! Rational-expectations equilibrium with a linear price conjecture `p = γ1·X + γ2·h`.
//!
//! Given a conjecture, uninformed agents project `S` on `p`:
//! `E(S|p) = θ·p` with `θ = γ1σ²_X / (γ1²σ²_X + γ2²σ²_h)` and
//! `Var(S|p) = Var(S) - γ1²σ⁴_X / Var(p)`, `Var(S) = σ²_X + σ²_ε`.
//! Market clearing then yields `p = δ1·X + δ2·h`; the equilibrium is the fixed
//! point `δ(γ) = γ`.

use crate::error::{ModelError, Result};
use crate::numeric::{bisect, find_bracket, nelder_mead_2d, newton_fd_2d};
use crate::real::Real;
use crate::stats::JointGaussianPair;

use super::{EquilibriumSolution, MarketParams, Regime, SolveMethod};

fn price_variance_of_conjecture<F: Real>(
    gamma1: F,
    gamma2: F,
    params: &MarketParams<F>,
) -> Result<F> {
    let var_p = gamma1 * gamma1 * params.signal_variance + gamma2 * gamma2 * params.noise_variance;
    if !(var_p > F::zero()) || !var_p.is_finite() {
        return Err(ModelError::domain(
            "Var(p)",
            format!("γ1²σ²_X + γ2²σ²_h must be positive, got {var_p}"),
        ));
    }
    Ok(var_p)
}

/// Projection coefficient `θ = Cov(S,p)/Var(p)`.
pub fn ree_theta<F: Real>(gamma1: F, gamma2: F, params: &MarketParams<F>) -> Result<F> {
    let var_p = price_variance_of_conjecture(gamma1, gamma2, params)?;
    Ok(gamma1 * params.signal_variance / var_p)
}

/// `Var(S|p)` under the conjecture. With `conventions.literal_ree_conditional_variance`
/// the leading term is `σ²_X + σ²_h` instead of `Var(S) = σ²_X + σ²_ε`.
pub fn ree_conditional_variance<F: Real>(
    gamma1: F,
    gamma2: F,
    params: &MarketParams<F>,
) -> Result<F> {
    let var_p = price_variance_of_conjecture(gamma1, gamma2, params)?;
    let cov = gamma1 * params.signal_variance;
    let leading = if params.conventions.literal_ree_conditional_variance {
        params.signal_variance + params.noise_variance
    } else {
        params.signal_variance + params.epsilon_variance
    };
    Ok(leading - cov * cov / var_p)
}

/// Joint moments of `(S, p)` for the conjecture when the signal has mean `signal_mean`.
pub fn ree_price_joint<F: Real>(
    gamma1: F,
    gamma2: F,
    signal_mean: F,
    params: &MarketParams<F>,
) -> Result<JointGaussianPair<F>> {
    let var_p = price_variance_of_conjecture(gamma1, gamma2, params)?;
    JointGaussianPair::new(
        signal_mean,
        gamma1 * signal_mean,
        params.signal_variance + params.epsilon_variance,
        var_p,
        gamma1 * params.signal_variance,
    )
}

/// Market-clearing coefficients `(δ1, δ2)` implied by the conjecture `(γ1, γ2)`.
pub fn ree_coefficients<F: Real>(gamma1: F, gamma2: F, params: &MarketParams<F>) -> Result<(F, F)> {
    let theta = ree_theta(gamma1, gamma2, params)?;
    let var_cond = ree_conditional_variance(gamma1, gamma2, params)?;
    let n = params.n_informed;
    let m = params.m_uninformed;
    let eps = params.epsilon_variance;
    let denom = n * var_cond + (F::one() - theta) * m * eps;
    if !(denom > F::zero()) || !denom.is_finite() {
        return Err(ModelError::domain(
            "N*Var(S|p)+(1-θ)*M*σ²_ε",
            format!("must be positive, got {denom}"),
        ));
    }
    let delta1 = n * var_cond / denom;
    let delta2 = params.risk_aversion * var_cond * eps * params.z_noise / denom;
    Ok((delta1, delta2))
}

/// `δ(γ) - γ`.
pub fn ree_residual<F: Real>(gamma: [F; 2], params: &MarketParams<F>) -> Result<[F; 2]> {
    let (d1, d2) = ree_coefficients(gamma[0], gamma[1], params)?;
    Ok([d1 - gamma[0], d2 - gamma[1]])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReeSolverOptions<F> {
    pub tol: F,
    pub max_iter: usize,
    /// Weight on the new iterate in `γ ← (1-λ)γ + λδ(γ)`.
    pub damping: F,
    pub initial: [F; 2],
    /// Solve only `δ1(γ1, 0) = γ1` with `γ2` held at zero.
    pub restrict_gamma2_zero: bool,
}

impl<F: Real> Default for ReeSolverOptions<F> {
    fn default() -> Self {
        Self {
            tol: F::lit(1e-10),
            max_iter: 10_000,
            damping: F::lit(0.5),
            initial: [F::lit(0.5), F::zero()],
            restrict_gamma2_zero: false,
        }
    }
}

/// Largest residual-to-`|γ|` ratio accepted as a genuine fixed point.
const DEGENERACY: f64 = 1e-3;

/// Iterations without a 1% improvement of the best residual before giving up on
/// the damped map.
const STAGNATION_WINDOW: usize = 200;

/// Solves the fixed point with the given tolerance and iteration budget.
pub fn solve_ree_fixed_point<F: Real>(
    params: &MarketParams<F>,
    tol: F,
    max_iter: usize,
) -> Result<EquilibriumSolution<F>> {
    solve_ree(
        params,
        &ReeSolverOptions {
            tol,
            max_iter,
            ..ReeSolverOptions::default()
        },
    )
}

pub fn solve_ree<F: Real>(
    params: &MarketParams<F>,
    options: &ReeSolverOptions<F>,
) -> Result<EquilibriumSolution<F>> {
    params.validate()?;
    if !(options.tol > F::zero()) {
        return Err(ModelError::domain("tol", "must be positive"));
    }
    if options.max_iter == 0 {
        return Err(ModelError::domain("max_iter", "must be at least 1"));
    }
    if !(options.damping > F::zero() && options.damping <= F::one()) {
        return Err(ModelError::domain("damping", "must lie in (0, 1]"));
    }
    let restricted = options.restrict_gamma2_zero;
    let residual_norm = |g: [F; 2]| -> Option<F> {
        let r = ree_residual(g, params).ok()?;
        let norm = if restricted {
            r[0].abs()
        } else {
            r[0].abs().max(r[1].abs())
        };
        norm.is_finite().then_some(norm)
    };
    // Near γ = 0 the map collapses to zero faster than γ, so a small absolute residual
    // there is no fixed point; those points keep a relative residual near 1.
    let accept =
        |g: [F; 2], r: F| r <= options.tol && r <= F::lit(DEGENERACY) * g[0].abs().max(g[1].abs());

    let mut gamma = options.initial;
    if restricted {
        gamma[1] = F::zero();
    }
    let mut best: Option<([F; 2], F)> = None;
    let mut since_improvement = 0;
    let mut iterations = 0;
    let lambda = options.damping;

    while iterations < options.max_iter {
        let Ok((d1, d2)) = ree_coefficients(gamma[0], gamma[1], params) else {
            break;
        };
        let d2 = if restricted { F::zero() } else { d2 };
        let r = (d1 - gamma[0]).abs().max((d2 - gamma[1]).abs());
        if !r.is_finite() {
            break;
        }
        match best {
            Some((_, b)) if r >= b * F::lit(0.99) => since_improvement += 1,
            _ => since_improvement = 0,
        }
        if best.is_none_or(|(_, b)| r < b) {
            best = Some((gamma, r));
        }
        if accept(gamma, r) {
            return finish(params, gamma, r, iterations, SolveMethod::DampedIteration);
        }
        if since_improvement >= STAGNATION_WINDOW {
            break;
        }
        gamma = [
            (F::one() - lambda) * gamma[0] + lambda * d1,
            (F::one() - lambda) * gamma[1] + lambda * d2,
        ];
        iterations += 1;
    }

    // Fallback from the better of the best damped iterate and a coarse scan.
    let start = match (best, coarse_scan(params, restricted)) {
        (Some((g, r)), Some((gs, rs))) => {
            if r / g[0].abs().max(g[1].abs()) <= rs {
                g
            } else {
                gs
            }
        }
        (Some((g, _)), None) => g,
        (None, Some((gs, _))) => gs,
        (None, None) => options.initial,
    };
    let candidate = if restricted {
        restricted_root(params, start[0], options.tol)
    } else {
        let objective = |g: [F; 2]| match ree_residual(g, params) {
            Ok(r) => (r[0] * r[0] + r[1] * r[1]) / (g[0] * g[0] + g[1] * g[1]),
            Err(_) => F::infinity(),
        };
        let budget = options.max_iter.max(2_000) * 4;
        let f_tol = (options.tol * F::lit(1e-2)) * (options.tol * F::lit(1e-2));
        let step = F::lit(0.25) * start[0].abs().max(start[1].abs());
        let m = nelder_mead_2d(objective, start, step, f_tol, budget);
        iterations += m.evaluations;
        let g = |x: [F; 2]| ree_residual(x, params).ok();
        Some(newton_fd_2d(g, m.point, 50))
    };
    let mut best_residual = best.map(|(_, r)| r).unwrap_or(F::infinity());
    if let Some(g) = candidate {
        if let Some(r) = residual_norm(g) {
            if accept(g, r) {
                return finish(params, g, r, iterations, SolveMethod::SimplexFallback);
            }
            best_residual = best_residual.min(r);
        }
    }
    if !restricted {
        if let Some((g, evals)) = ray_root(params) {
            iterations += evals;
            if let Some(r) = residual_norm(g) {
                if accept(g, r) {
                    return finish(params, g, r, iterations, SolveMethod::RayBisection);
                }
                best_residual = best_residual.min(r);
            }
        }
    }
    Err(ModelError::Convergence {
        iterations,
        best_residual: best_residual.to_f64_lossy(),
    })
}

/// Best point of a log-spaced grid, `γ1 ∈ [1e-4, 2]` and `|γ2| ∈ {0} ∪ [1e-4, 10]` of
/// either sign, by residual norm relative to `|γ|`.
fn coarse_scan<F: Real>(params: &MarketParams<F>, restricted: bool) -> Option<([F; 2], F)> {
    let g1s = (-40..=3).map(|k| F::lit(10f64.powf(k as f64 / 10.0)));
    let g2s: Vec<F> = if restricted {
        vec![F::zero()]
    } else {
        std::iter::once(F::zero())
            .chain((-40..=10).flat_map(|k| {
                let v = F::lit(10f64.powf(k as f64 / 10.0));
                [v, -v]
            }))
            .collect()
    };
    let mut best: Option<([F; 2], F)> = None;
    for g1 in g1s {
        for &g2 in &g2s {
            let Ok(r) = ree_residual([g1, g2], params) else {
                continue;
            };
            let norm = if restricted {
                r[0].abs()
            } else {
                r[0].abs().max(r[1].abs())
            } / g1.max(g2.abs());
            if norm.is_finite() && best.is_none_or(|(_, b)| norm < b) {
                best = Some(([g1, g2], norm));
            }
        }
    }
    best
}

/// Last resort for badly conditioned cases. The map's output ratio `δ2/δ1` is the same
/// for every conjecture, so fixed points lie on the ray `γ2 = c·γ1`; along it
/// `δ1 - γ1` decreases wherever the map is defined. Bisects `γ1 ∈ (0, 1]` on
/// "defined and `δ1 < γ1`". Returns the point and the number of map evaluations.
fn ray_root<F: Real>(params: &MarketParams<F>) -> Option<([F; 2], usize)> {
    let (d1, d2) = ree_coefficients(F::one(), F::zero(), params).ok()?;
    if !(d1 > F::zero()) {
        return None;
    }
    let c = d2 / d1;
    let below = |g1: F| matches!(ree_coefficients(g1, c * g1, params), Ok((d, _)) if d < g1);
    let (mut lo, mut hi) = (F::zero(), F::one());
    if !below(hi) {
        return Some(([hi, c * hi], 1));
    }
    let mut evals = 1;
    while evals < 2_000 {
        let mid = if hi > F::lit(1e3) * lo.max(F::min_positive_value()) && lo > F::zero() {
            (lo * hi).sqrt()
        } else {
            (lo + hi) * F::lit(0.5)
        };
        if !(mid > lo && mid < hi) {
            break;
        }
        evals += 1;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // The bracket closes on the crossing; take whichever side has the smaller residual.
    let norm = |g1: F| {
        ree_residual([g1, c * g1], params).map_or(F::infinity(), |r| r[0].abs().max(r[1].abs()))
    };
    let g1 = if lo > F::zero() && norm(lo) < norm(hi) {
        lo
    } else {
        hi
    };
    Some(([g1, c * g1], evals + 2))
}

/// One-dimensional fallback for the `γ2 = 0` restriction: bracket and bisect
/// `δ1(γ1, 0) - γ1`.
fn restricted_root<F: Real>(params: &MarketParams<F>, start: F, tol: F) -> Option<[F; 2]> {
    let f = |g1: F| match ree_coefficients(g1, F::zero(), params) {
        Ok((d1, _)) => d1 - g1,
        Err(_) => F::nan(),
    };
    // Scan outward for a sign change that avoids the pole of δ1.
    let mut step = F::lit(1e-3);
    for _ in 0..60 {
        for dir in [F::one(), -F::one()] {
            let (a, b) = (start, start + dir * step);
            let (fa, fb) = (f(a), f(b));
            if fa.is_finite() && fb.is_finite() && (fa <= F::zero()) != (fb <= F::zero()) {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                if let Some(root) = bisect(f, lo, hi, tol * F::lit(1e-3), 400) {
                    if f(root.root).abs() <= tol {
                        return Some([root.root, F::zero()]);
                    }
                }
            }
        }
        step = step * F::lit(1.5);
    }
    find_bracket(f, start, F::lit(0.5))
        .and_then(|(lo, hi)| bisect(f, lo, hi, tol * F::lit(1e-3), 400))
        .map(|b| [b.root, F::zero()])
}

fn finish<F: Real>(
    params: &MarketParams<F>,
    gamma: [F; 2],
    residual: F,
    iterations: usize,
    method: SolveMethod,
) -> Result<EquilibriumSolution<F>> {
    let theta = ree_theta(gamma[0], gamma[1], params)?;
    let var_cond = ree_conditional_variance(gamma[0], gamma[1], params)?;
    let price = gamma[0] * params.realized_signal + gamma[1] * params.realized_noise;
    Ok(EquilibriumSolution {
        regime: Regime::Ree,
        price,
        coeff_informed: gamma[0],
        coeff_noise: gamma[1],
        conditional_mean: theta * price,
        conditional_variance: var_cond,
        theta: Some(theta),
        residual,
        iterations,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::project;

    fn params() -> MarketParams<f64> {
        MarketParams::default()
    }

    #[test]
    fn theta_special_cases() {
        let p = params();
        assert!((ree_theta(2.0, 0.0, &p).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(ree_theta(0.0, 1.0, &p).unwrap(), 0.0);
        let mut sym = params();
        sym.signal_variance = 2.0;
        sym.noise_variance = 2.0;
        assert_eq!(ree_theta(1.0, 1.0, &sym).unwrap(), 0.5);
        assert!(ree_theta(0.0, 0.0, &p).is_err());
    }

    #[test]
    fn conditional_variance_special_cases() {
        let p = params();
        let var_s = p.signal_variance + p.epsilon_variance;
        assert!((ree_conditional_variance(0.0, 1.0, &p).unwrap() - var_s).abs() < 1e-15);
        assert!(
            (ree_conditional_variance(0.7, 0.0, &p).unwrap() - p.epsilon_variance).abs() < 1e-15
        );
        assert!(ree_conditional_variance(0.0, 0.0, &p).is_err());
    }

    #[test]
    fn literal_variance_switch_changes_leading_term() {
        let mut p = params();
        p.noise_variance = 3.0;
        p.conventions.literal_ree_conditional_variance = true;
        let v = ree_conditional_variance(0.0, 1.0, &p).unwrap();
        assert!((v - (p.signal_variance + 3.0)).abs() < 1e-15);
    }

    #[test]
    fn conditional_moments_agree_with_projection() {
        let p = params();
        for &(g1, g2) in &[(0.3, 0.1), (1.2, -0.4), (0.9, 0.9)] {
            let joint = ree_price_joint(g1, g2, 0.0, &p).unwrap();
            let obs = 1.7;
            let c = project(&joint, obs).unwrap();
            let theta = ree_theta(g1, g2, &p).unwrap();
            assert!((c.mean() - theta * obs).abs() < 1e-12);
            assert!((c.variance() - ree_conditional_variance(g1, g2, &p).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn no_noise_mass_means_no_noise_coefficient() {
        let mut p = params();
        p.z_noise = 0.0;
        let (_, d2) = ree_coefficients(0.8, 0.2, &p).unwrap();
        assert_eq!(d2, 0.0);
    }

    #[test]
    fn theta_one_gives_unit_delta1() {
        // γ2 = 0 and γ1 = 1 make θ = 1.
        let (d1, _) = ree_coefficients(1.0, 0.0, &params()).unwrap();
        assert!((d1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn solver_reaches_tolerance() {
        let s = solve_ree_fixed_point(&params(), 1e-11, 10_000).unwrap();
        assert!(s.residual <= 1e-11);
        let r = ree_residual([s.coeff_informed, s.coeff_noise], &params()).unwrap();
        assert!(r[0].abs() <= 1e-11 && r[1].abs() <= 1e-11);
    }

    #[test]
    fn restricted_solution_without_noise_is_unit_loading() {
        let mut p = params();
        p.z_noise = 0.0;
        for m in [1.0, 10.0, 100.0] {
            let opts = ReeSolverOptions {
                restrict_gamma2_zero: true,
                tol: 1e-12,
                ..Default::default()
            };
            let s = solve_ree(&p.with_sizes(5.0, m), &opts).unwrap();
            assert!((s.coeff_informed - 1.0).abs() < 1e-9, "{s:?}");
            assert_eq!(s.coeff_noise, 0.0);
        }
    }

    #[test]
    fn heavy_uninformed_side_uses_fallback_and_still_converges() {
        // M/N large makes the damped map expansive at the fixed point.
        let p = params().with_sizes(1.0, 50.0);
        let s = solve_ree_fixed_point(&p, 1e-10, 5_000).unwrap();
        assert!(s.residual <= 1e-10);
    }

    #[test]
    fn bad_options_are_rejected() {
        assert!(solve_ree_fixed_point(&params(), 0.0, 10).is_err());
        assert!(solve_ree_fixed_point(&params(), 1e-9, 0).is_err());
    }
}
