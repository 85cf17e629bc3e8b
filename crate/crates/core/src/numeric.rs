//! Small root-finding and minimisation routines used by the equilibrium solvers.

use crate::real::Real;

/// Outcome of a bracketed bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection<F> {
    pub root: F,
    pub low: F,
    pub high: F,
    pub iterations: usize,
}

/// Expands `[center - width, center + width]` geometrically until `f` changes sign.
pub fn find_bracket<F: Real>(f: impl Fn(F) -> F, center: F, width: F) -> Option<(F, F)> {
    let mut w = width.max(F::one());
    for _ in 0..200 {
        let (lo, hi) = (center - w, center + w);
        let (flo, fhi) = (f(lo), f(hi));
        if !(flo.is_finite() && fhi.is_finite()) {
            return None;
        }
        if flo == F::zero() || fhi == F::zero() || (flo < F::zero()) != (fhi < F::zero()) {
            return Some((lo, hi));
        }
        w = w * F::lit(2.0);
    }
    None
}

/// Bisection on a sign-changing bracket. Stops when the bracket is narrower than
/// `x_tol` (relative to `max(1, |x|)`) or can no longer be split.
pub fn bisect<F: Real>(
    f: impl Fn(F) -> F,
    mut lo: F,
    mut hi: F,
    x_tol: F,
    max_iter: usize,
) -> Option<Bisection<F>> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == F::zero() {
        return Some(Bisection {
            root: lo,
            low: lo,
            high: lo,
            iterations: 0,
        });
    }
    if fhi == F::zero() {
        return Some(Bisection {
            root: hi,
            low: hi,
            high: hi,
            iterations: 0,
        });
    }
    if (flo < F::zero()) == (fhi < F::zero()) {
        return None;
    }
    let two = F::lit(2.0);
    let mut iterations = 0;
    while iterations < max_iter {
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let fm = f(mid);
        if fm == F::zero() {
            return Some(Bisection {
                root: mid,
                low: mid,
                high: mid,
                iterations,
            });
        }
        if (fm < F::zero()) == (flo < F::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= x_tol * F::one().max(mid.abs()) {
            break;
        }
    }
    Some(Bisection {
        root: lo + (hi - lo) / two,
        low: lo,
        high: hi,
        iterations,
    })
}

/// Result of a Nelder-Mead run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<F> {
    pub point: [F; 2],
    pub value: F,
    pub evaluations: usize,
}

/// Two-dimensional Nelder-Mead with the standard coefficients (1, 2, 0.5, 0.5).
///
/// Non-finite objective values are treated as `+inf`, so the simplex backs away from
/// poles of the objective.
pub fn nelder_mead_2d<F: Real>(
    f: impl Fn([F; 2]) -> F,
    start: [F; 2],
    step: F,
    f_tol: F,
    max_evals: usize,
) -> Minimum<F> {
    let eval = |p: [F; 2]| {
        let v = f(p);
        if v.is_finite() {
            v
        } else {
            F::infinity()
        }
    };
    let half = F::lit(0.5);
    let two = F::lit(2.0);
    let mut simplex = [
        start,
        [start[0] + step, start[1]],
        [start[0], start[1] + step],
    ];
    let mut values = [eval(simplex[0]), eval(simplex[1]), eval(simplex[2])];
    let mut evals = 3;

    let lerp = |a: [F; 2], b: [F; 2], t: F| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];

    while evals < max_evals {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| {
            values[i]
                .partial_cmp(&values[j])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        simplex = [simplex[order[0]], simplex[order[1]], simplex[order[2]]];
        values = [values[order[0]], values[order[1]], values[order[2]]];

        if values[0] <= f_tol {
            break;
        }
        let spread = (values[2] - values[0]).abs();
        let size = (simplex[2][0] - simplex[0][0])
            .abs()
            .max((simplex[2][1] - simplex[0][1]).abs())
            .max(
                (simplex[1][0] - simplex[0][0])
                    .abs()
                    .max((simplex[1][1] - simplex[0][1]).abs()),
            );
        if spread.is_finite() && spread <= f_tol * F::epsilon()
            || size <= F::epsilon() * F::one().max(simplex[0][0].abs())
        {
            break;
        }

        let centroid = lerp(simplex[0], simplex[1], half);
        let reflected = lerp(centroid, simplex[2], -F::one());
        let fr = eval(reflected);
        evals += 1;
        if fr < values[0] {
            let expanded = lerp(centroid, simplex[2], -two);
            let fe = eval(expanded);
            evals += 1;
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let (contracted, fc) = if fr < values[2] {
                let c = lerp(centroid, reflected, half);
                (c, eval(c))
            } else {
                let c = lerp(centroid, simplex[2], half);
                (c, eval(c))
            };
            evals += 1;
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = lerp(simplex[0], simplex[i], half);
                    values[i] = eval(simplex[i]);
                }
                evals += 2;
            }
        }
    }
    let (best, _) =
        values.iter().enumerate().fold(
            (0, F::infinity()),
            |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
        );
    Minimum {
        point: simplex[best],
        value: values[best],
        evaluations: evals,
    }
}

/// Newton iteration on `g: R^2 -> R^2` with a forward-difference Jacobian.
/// Returns the last iterate; the caller re-checks the residual.
pub fn newton_fd_2d<F: Real>(
    g: impl Fn([F; 2]) -> Option<[F; 2]>,
    start: [F; 2],
    iterations: usize,
) -> [F; 2] {
    let norm = |r: [F; 2]| r[0].abs().max(r[1].abs());
    let mut x = start;
    let Some(mut gx) = g(x) else { return start };
    for _ in 0..iterations {
        if norm(gx) == F::zero() {
            break;
        }
        let h0 = F::epsilon().sqrt() * F::one().max(x[0].abs());
        let h1 = F::epsilon().sqrt() * F::one().max(x[1].abs());
        let (Some(g0), Some(g1)) = (g([x[0] + h0, x[1]]), g([x[0], x[1] + h1])) else {
            break;
        };
        let j = [
            [(g0[0] - gx[0]) / h0, (g1[0] - gx[0]) / h1],
            [(g0[1] - gx[1]) / h0, (g1[1] - gx[1]) / h1],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == F::zero() || !det.is_finite() {
            break;
        }
        let dx0 = (j[1][1] * gx[0] - j[0][1] * gx[1]) / det;
        let dx1 = (j[0][0] * gx[1] - j[1][0] * gx[0]) / det;
        let candidate = [x[0] - dx0, x[1] - dx1];
        match g(candidate) {
            Some(gc) if norm(gc) < norm(gx) => {
                x = candidate;
                gx = gc;
            }
            _ => break,
        }
    }
    x
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope<F: Real>(xs: &[F], ys: &[F]) -> Option<F> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = F::from_usize(xs.len())?;
    let mx = xs.iter().copied().sum::<F>() / n;
    let my = ys.iter().copied().sum::<F>() / n;
    let sxx: F = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: F = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    if sxx == F::zero() {
        return None;
    }
    Some(sxy / sxx)
}
