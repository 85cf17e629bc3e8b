use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vaulteq::stats::{posterior, project, Gaussian, JointGaussianPair};

/// Posterior mean and variance of `S ~ N(m, v)` given `X | S ~ N(S, sx)` by direct
/// summation of prior times likelihood on a uniform grid.
fn grid_posterior(m: f64, v: f64, sx: f64, x: f64, points: usize) -> (f64, f64) {
    let half = 12.0 * v.sqrt().max(sx.sqrt()) + (x - m).abs();
    let (lo, step) = (m - half, 2.0 * half / points as f64);
    let log_w = |s: f64| -(s - m).powi(2) / (2.0 * v) - (x - s).powi(2) / (2.0 * sx);
    let peak = (0..=points)
        .map(|i| log_w(lo + i as f64 * step))
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for i in 0..=points {
        let s = lo + i as f64 * step;
        let w = (log_w(s) - peak).exp();
        z += w;
        s1 += w * s;
        s2 += w * s * s;
    }
    let mean = s1 / z;
    (mean, s2 / z - mean * mean)
}

#[test]
fn posterior_matches_grid_bayes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let m: f64 = rng.random_range(-5.0..5.0);
        let v: f64 = rng.random_range(0.1..5.0);
        let sx: f64 = rng.random_range(0.1..5.0);
        let x = m + rng.random_range(-3.0..3.0) * (v + sx).sqrt();
        let post = posterior(&Gaussian::new(m, v).unwrap(), sx, x).unwrap();
        let (gm, gv) = grid_posterior(m, v, sx, x, 200_000);
        assert!(
            (post.mean() - gm).abs() < 1e-6,
            "mean {} vs {gm}",
            post.mean()
        );
        assert!(
            (post.variance() - gv).abs() < 1e-6,
            "variance {} vs {gv}",
            post.variance()
        );
        assert!((post.precision() - (1.0 / v + 1.0 / sx)).abs() < 1e-12);
    }
}

#[test]
fn projection_matches_sampled_regression() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let normal = rand_distr::StandardNormal;
    // b = 0.8 a + noise; regress a on b using draws near b0.
    let (va, vn) = (2.0f64, 0.5f64);
    let joint = JointGaussianPair::new(1.0, 0.8, va, 0.64 * va + vn, 0.8 * va).unwrap();
    let b0 = 1.3;
    let cond = project(&joint, b0).unwrap();
    let (mut n, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for _ in 0..2_000_000 {
        let a: f64 = 1.0 + va.sqrt() * rng.sample::<f64, _>(normal);
        let b = 0.8 * a + vn.sqrt() * rng.sample::<f64, _>(normal);
        if (b - b0).abs() < 0.02 {
            n += 1.0;
            s1 += a;
            s2 += a * a;
        }
    }
    let mean = s1 / n;
    let var = s2 / n - mean * mean;
    assert!(
        (cond.mean() - mean).abs() < 4.0 * (var / n).sqrt() + 1e-3,
        "{} vs {mean}",
        cond.mean()
    );
    assert!((cond.variance() - var).abs() < 0.05 * cond.variance());
}
