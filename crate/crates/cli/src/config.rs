//! Run configuration: one TOML file with a section per command.
//!
//! ```toml
//! [market]         # model parameters shared by `equilibrium` and `convergence`
//! [equilibrium]    # regimes and an optional size sweep
//! [convergence]    # Monte Carlo grid and replication count
//! [scenario]       # token-economy script, see `vaulteq::tokenomics::scenario`
//! ```
//!
//! Every section and key is optional; missing ones take the values printed by
//! `vaulteq defaults`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vaulteq::equilibrium::{Conventions, Regime, SweepGroup};
use vaulteq::tokenomics::scenario::NavProcess;
use vaulteq::tokenomics::{Action, Scenario, ScriptEvent, SwapDirection};
use vaulteq::{Gaussian, MarketParams};

use crate::error::{CliError, Result};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketSection {
    pub n_informed: f64,
    pub m_uninformed: f64,
    pub z_noise: f64,
    pub risk_aversion: f64,
    pub prior_mean: f64,
    pub prior_variance: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub epsilon_variance: f64,
    pub realized_signal: f64,
    pub realized_noise: f64,
    pub literal_ree_conditional_variance: bool,
    pub literal_revealing_variance: bool,
}

impl Default for MarketSection {
    fn default() -> Self {
        let p = MarketParams::default();
        MarketSection {
            n_informed: p.n_informed,
            m_uninformed: p.m_uninformed,
            z_noise: p.z_noise,
            risk_aversion: p.risk_aversion,
            prior_mean: p.prior.mean(),
            prior_variance: p.prior.variance(),
            signal_variance: p.signal_variance,
            noise_variance: p.noise_variance,
            epsilon_variance: p.epsilon_variance,
            realized_signal: p.realized_signal,
            realized_noise: p.realized_noise,
            literal_ree_conditional_variance: p.conventions.literal_ree_conditional_variance,
            literal_revealing_variance: p.conventions.literal_revealing_variance,
        }
    }
}

impl MarketSection {
    /// Validated model parameters; errors name `market.<key>`.
    pub fn params(&self) -> Result<MarketParams> {
        let prior = Gaussian::new(self.prior_mean, self.prior_variance).map_err(|e| match e {
            vaulteq::ModelError::Domain { field, reason } => {
                CliError::invalid(format!("market.prior_{field}"), reason)
            }
            other => CliError::Numerical(other.to_string()),
        })?;
        let p = MarketParams {
            n_informed: self.n_informed,
            m_uninformed: self.m_uninformed,
            z_noise: self.z_noise,
            risk_aversion: self.risk_aversion,
            prior,
            signal_variance: self.signal_variance,
            noise_variance: self.noise_variance,
            epsilon_variance: self.epsilon_variance,
            realized_signal: self.realized_signal,
            realized_noise: self.realized_noise,
            conventions: Conventions {
                literal_ree_conditional_variance: self.literal_ree_conditional_variance,
                literal_revealing_variance: self.literal_revealing_variance,
            },
        };
        let bad: Vec<(String, String)> = p
            .violations()
            .into_iter()
            .map(|(f, r)| (format!("market.{}", f.replace("prior.", "prior_")), r))
            .collect();
        if bad.is_empty() {
            Ok(p)
        } else {
            Err(CliError::Invalid(bad))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumSection {
    pub regimes: Vec<Regime>,
    /// Group resized along `sizes`; ignored when `sizes` is empty.
    pub sweep: SweepGroup,
    /// Empty: one row per regime at the market's `N` and `M`.
    pub sizes: Vec<f64>,
    /// Fixed-point residual the rational-expectations solver must reach.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EquilibriumSection {
    fn default() -> Self {
        EquilibriumSection {
            regimes: Regime::ALL.to_vec(),
            sweep: SweepGroup::Uninformed,
            sizes: (1..=7).map(|k| 10f64.powi(k)).collect(),
            tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    pub regime: Regime,
    /// `[N, M]` cells.
    pub grid: Vec<[f64; 2]>,
    pub replications: usize,
    /// Bound on the last row's `|price - price_analytic|` reported in the summary.
    pub tolerance: f64,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        ConvergenceSection {
            regime: Regime::Naive,
            grid: (1..=7).map(|k| [10.0, 10f64.powi(k)]).collect(),
            replications: 10_000,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub market: MarketSection,
    pub equilibrium: EquilibriumSection,
    pub convergence: ConvergenceSection,
    pub scenario: Scenario,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            market: MarketSection::default(),
            equilibrium: EquilibriumSection::default(),
            convergence: ConvergenceSection::default(),
            scenario: demo_scenario(),
        }
    }
}

/// One year of purchases, pool trading and NAV drift, with a sell-off that trips the
/// safeguard in month four.
pub fn demo_scenario() -> Scenario {
    let mut s = Scenario::bootstrap_only(360);
    s.nav_process = Some(NavProcess {
        a_mean: 0.0002,
        a_vol: 0.002,
        c_mean: 0.0005,
        c_vol: 0.02,
    });
    let mut push = |day, action| s.events.push(ScriptEvent { day, action });
    push(
        0,
        Action::AddLiquidity {
            provider: "lp0".into(),
            tokens: 100_000.0,
            quote: 100_000.0,
        },
    );
    for day in (1..360).step_by(3) {
        push(
            day,
            Action::Purchase {
                fiat: 5_000.0 + 250.0 * f64::from(day % 7),
                settlement_lag: day % 3,
            },
        );
        let direction = if day % 2 == 0 {
            SwapDirection::QuoteIn
        } else {
            SwapDirection::TokenIn
        };
        push(
            day,
            Action::Swap {
                direction,
                amount: 400.0,
            },
        );
    }
    push(
        45,
        Action::AddLiquidity {
            provider: "lp1".into(),
            tokens: 20_000.0,
            quote: 20_000.0,
        },
    );
    push(
        100,
        Action::Swap {
            direction: SwapDirection::TokenIn,
            amount: 60_000.0,
        },
    );
    push(
        200,
        Action::RemoveLiquidity {
            provider: "lp1".into(),
            fraction: 0.5,
        },
    );
    s.events.sort_by_key(|e| e.day);
    s
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// Reads, parses and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg = Self::from_toml(&text, path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every violated invariant across all sections, as `(field path, reason)`.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = match self.market.params() {
            Err(CliError::Invalid(v)) => v,
            _ => Vec::new(),
        };
        let mut check = |ok: bool, field: String, reason: &str| {
            if !ok {
                out.push((field, reason.to_string()));
            }
        };
        let eq = &self.equilibrium;
        check(
            !eq.regimes.is_empty(),
            "equilibrium.regimes".into(),
            "must not be empty",
        );
        for (i, &s) in eq.sizes.iter().enumerate() {
            check(
                positive(s),
                format!("equilibrium.sizes[{i}]"),
                "must be positive",
            );
        }
        check(
            eq.sizes.windows(2).all(|w| w[1] > w[0]),
            "equilibrium.sizes".into(),
            "must be strictly increasing",
        );
        check(
            positive(eq.tolerance),
            "equilibrium.tolerance".into(),
            "must be positive",
        );
        check(
            eq.max_iterations > 0,
            "equilibrium.max_iterations".into(),
            "must be positive",
        );
        let cv = &self.convergence;
        check(
            !cv.grid.is_empty(),
            "convergence.grid".into(),
            "must not be empty",
        );
        for (i, &[n, m]) in cv.grid.iter().enumerate() {
            check(
                n.is_finite() && m.is_finite() && n >= 0.0 && m >= 0.0 && n + m > 0.0,
                format!("convergence.grid[{i}]"),
                "needs N >= 0, M >= 0 and N + M > 0",
            );
        }
        check(
            cv.replications > 0,
            "convergence.replications".into(),
            "must be positive",
        );
        check(
            positive(cv.tolerance),
            "convergence.tolerance".into(),
            "must be positive",
        );
        out.extend(
            self.scenario
                .violations()
                .into_iter()
                .map(|(f, r)| (format!("scenario.{f}"), r)),
        );
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> &'static Path {
        Path::new("test.toml")
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = Config::default();
        cfg.validate().unwrap();
        let back = Config::from_toml(&cfg.to_toml(), path()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.market.params().unwrap(), MarketParams::default());
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = Config::from_toml("[market]\nn_informed = 3.0\n", path()).unwrap();
        let p = cfg.market.params().unwrap();
        assert_eq!(p.n_informed, 3.0);
        assert_eq!(p.m_uninformed, MarketParams::default().m_uninformed);
        assert_eq!(cfg.scenario, demo_scenario());
    }

    #[test]
    fn violations_name_fields() {
        let cfg = Config::from_toml("[market]\nsignal_variance = -1.0\n", path()).unwrap();
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("market.signal_variance"), "{err}");

        let cfg = Config::from_toml("[market]\nprior_variance = -1.0\n", path()).unwrap();
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("market.prior_variance"));

        let cfg = Config::from_toml(
            "[convergence]\ngrid = [[0.0, 0.0]]\nreplications = 0\n",
            path(),
        )
        .unwrap();
        let fields: Vec<String> = cfg.violations().into_iter().map(|v| v.0).collect();
        assert_eq!(fields, ["convergence.grid[0]", "convergence.replications"]);
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let err = Config::from_toml("[market]\nsigma = 1.0\n", path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(Config::from_toml("[nonsense]\n", path()).is_err());
    }
}
