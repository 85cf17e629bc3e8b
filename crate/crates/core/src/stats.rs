//! Normal-distribution primitives: the conjugate normal update and the
//! projection (conditioning) rule for a bivariate normal pair.
//!
//! The projection rule is the textbook one,
//! `E(A|B=b) = E(A) + Cov(A,B)/Var(B) * (b - E(B))`. Some write-ups condition on
//! `A - E(B)` instead of `B - E(B)`; that form does not reproduce the price
//! projection `E(S|p) = θ p` and is not used here.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::real::Real;

/// A normal belief `N(mean, variance)`. A variance of exactly zero is a point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gaussian<F> {
    mean: F,
    variance: F,
}

impl<F: Real> Gaussian<F> {
    pub fn new(mean: F, variance: F) -> Result<Self> {
        if !mean.is_finite() {
            return Err(ModelError::domain("mean", "must be finite"));
        }
        if !variance.is_finite() || variance < F::zero() {
            return Err(ModelError::domain(
                "variance",
                format!("must be finite and non-negative, got {variance}"),
            ));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> F {
        self.mean
    }

    pub fn variance(&self) -> F {
        self.variance
    }

    pub fn std_dev(&self) -> F {
        self.variance.sqrt()
    }

    /// `1 / variance`; infinite for a point mass.
    pub fn precision(&self) -> F {
        self.variance.recip()
    }

    pub fn is_degenerate(&self) -> bool {
        self.variance == F::zero()
    }

    /// Log density; `None` for a point mass.
    pub fn ln_pdf(&self, x: F) -> Option<F> {
        if self.is_degenerate() {
            return None;
        }
        let two = F::lit(2.0);
        let z = x - self.mean;
        Some(
            -(z * z) / (two * self.variance)
                - (two * F::lit(std::f64::consts::PI) * self.variance).ln() / two,
        )
    }
}

/// Conjugate update of a normal prior on `S` given one observation `X | S ~ N(S, signal_noise_variance)`.
///
/// Precisions add: the posterior precision is `1/prior.variance + 1/signal_noise_variance`
/// and the posterior mean is the precision-weighted average of the prior mean and the
/// observation. An infinite `signal_noise_variance` is an uninformative signal and returns
/// the prior unchanged.
pub fn posterior<F: Real>(
    prior: &Gaussian<F>,
    signal_noise_variance: F,
    observed_signal: F,
) -> Result<Gaussian<F>> {
    if prior.variance <= F::zero() {
        return Err(ModelError::domain("prior.variance", "must be positive"));
    }
    if signal_noise_variance.is_nan() || signal_noise_variance <= F::zero() {
        return Err(ModelError::domain(
            "signal_noise_variance",
            "must be positive",
        ));
    }
    if !observed_signal.is_finite() {
        return Err(ModelError::domain("observed_signal", "must be finite"));
    }
    let prior_precision = prior.precision();
    let signal_precision = signal_noise_variance.recip();
    let total = prior_precision + signal_precision;
    let mean = (prior_precision * prior.mean + signal_precision * observed_signal) / total;
    Gaussian::new(mean, total.recip())
}

/// Weight `μ1 = λ_prior / (λ_prior + λ_signal)` that the posterior mean puts on the prior mean.
pub fn prior_weight<F: Real>(prior: &Gaussian<F>, signal_noise_variance: F) -> Result<F> {
    if prior.variance <= F::zero() {
        return Err(ModelError::domain("prior.variance", "must be positive"));
    }
    if signal_noise_variance.is_nan() || signal_noise_variance <= F::zero() {
        return Err(ModelError::domain(
            "signal_noise_variance",
            "must be positive",
        ));
    }
    let lp = prior.precision();
    Ok(lp / (lp + signal_noise_variance.recip()))
}

/// Moments of a bivariate normal pair `(A, B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointGaussianPair<F> {
    pub mean_a: F,
    pub mean_b: F,
    pub var_a: F,
    pub var_b: F,
    pub cov_ab: F,
}

impl<F: Real> JointGaussianPair<F> {
    pub fn new(mean_a: F, mean_b: F, var_a: F, var_b: F, cov_ab: F) -> Result<Self> {
        let fields = [
            ("mean_a", mean_a),
            ("mean_b", mean_b),
            ("var_a", var_a),
            ("var_b", var_b),
            ("cov_ab", cov_ab),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(ModelError::domain(name, "must be finite"));
            }
        }
        if var_a < F::zero() {
            return Err(ModelError::domain("var_a", "must be non-negative"));
        }
        if var_b < F::zero() {
            return Err(ModelError::domain("var_b", "must be non-negative"));
        }
        // Cauchy-Schwarz, allowing rounding in the product.
        let bound = var_a * var_b;
        if cov_ab * cov_ab > bound + bound * F::slack() {
            return Err(ModelError::domain(
                "cov_ab",
                format!(
                    "cov^2 = {} exceeds var_a*var_b = {}",
                    cov_ab * cov_ab,
                    bound
                ),
            ));
        }
        Ok(Self {
            mean_a,
            mean_b,
            var_a,
            var_b,
            cov_ab,
        })
    }

    /// Regression slope of `A` on `B`.
    pub fn beta(&self) -> Result<F> {
        if self.var_b <= F::zero() {
            return Err(ModelError::domain(
                "var_b",
                "must be positive to condition on B",
            ));
        }
        Ok(self.cov_ab / self.var_b)
    }
}

/// Distribution of `A` given `B = observed_b`.
pub fn project<F: Real>(joint: &JointGaussianPair<F>, observed_b: F) -> Result<Gaussian<F>> {
    let beta = joint.beta()?;
    let mean = joint.mean_a + beta * (observed_b - joint.mean_b);
    // Rounding can push a perfectly correlated pair a hair below zero.
    let variance = (joint.var_a - joint.cov_ab * joint.cov_ab / joint.var_b).max(F::zero());
    Gaussian::new(mean, variance)
}
