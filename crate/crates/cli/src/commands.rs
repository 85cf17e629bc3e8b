//! The three run commands and their output schemas.

use std::path::{Path, PathBuf};

use vaulteq::equilibrium::{
    fully_revealing_price, informational_efficiency, naive_equilibrium, price_variance, solve_ree,
    ReeSolverOptions, Regime, SweepGroup,
};
use vaulteq::market::run_convergence_study;
use vaulteq::tokenomics::Simulation;
use vaulteq::MarketParams;

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::table::{Cell, Format, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Equilibrium,
    Convergence,
    Tokenomics,
}

pub const EQUILIBRIUM_COLUMNS: &[&str] = &[
    "regime",
    "n",
    "m",
    "price",
    "coeff_informed",
    "coeff_noise",
    "theta",
    "conditional_mean",
    "conditional_variance",
    "var_p",
    "ie",
    "residual",
    "iterations",
    "method",
];

pub const CONVERGENCE_COLUMNS: &[&str] = &[
    "n",
    "m",
    "price",
    "price_analytic",
    "price_se",
    "gap",
    "theta1",
    "theta2",
    "var_p",
    "var_p_analytic",
    "ie",
    "ie_analytic",
];

pub const TOKENOMICS_COLUMNS: &[&str] = &[
    "day",
    "supply",
    "circulating",
    "team",
    "pledged_value",
    "redemption_value",
    "spot_price",
    "paused",
];

/// Environment variable that replaces the directory of `--out`.
pub const OUT_DIR_ENV: &str = "VAULTEQ_OUT_DIR";

/// Tables and text produced by one command, before anything is written.
pub struct Artifacts {
    pub table: Table,
    /// Tokenomics only: the JSON-lines event log.
    pub event_log: Option<String>,
    pub summary: String,
}

fn resize(p: &MarketParams, group: SweepGroup, size: f64) -> MarketParams {
    match group {
        SweepGroup::Informed => p.with_sizes(size, p.m_uninformed),
        SweepGroup::Uninformed => p.with_sizes(p.n_informed, size),
        SweepGroup::Both => p.with_sizes(size, size),
    }
}

pub fn equilibrium(cfg: &Config) -> Result<Artifacts> {
    let base = cfg.market.params()?;
    let sec = &cfg.equilibrium;
    let options = ReeSolverOptions {
        tol: sec.tolerance,
        max_iter: sec.max_iterations,
        ..ReeSolverOptions::default()
    };
    let points: Vec<MarketParams> = if sec.sizes.is_empty() {
        vec![base]
    } else {
        sec.sizes
            .iter()
            .map(|&s| resize(&base, sec.sweep, s))
            .collect()
    };
    let mut table = Table::new(EQUILIBRIUM_COLUMNS);
    for &regime in &sec.regimes {
        for p in &points {
            let solved = match regime {
                Regime::Naive => naive_equilibrium(p),
                Regime::Ree => solve_ree(p, &options),
                Regime::FullyRevealing => fully_revealing_price(p),
            };
            let s = solved.map_err(|e| {
                let e = CliError::model("market", e);
                match e {
                    CliError::Numerical(m) => CliError::Numerical(format!(
                        "{regime} at N={}, M={}: {m}",
                        p.n_informed, p.m_uninformed
                    )),
                    other => other,
                }
            })?;
            let var_p = price_variance(&s, p).map_err(|e| CliError::model("market", e))?;
            let method = serde_json::to_value(s.method).map_or(String::new(), |v| {
                v.as_str().unwrap_or_default().to_string()
            });
            table.push(vec![
                Cell::Text(regime.to_string()),
                p.n_informed.into(),
                p.m_uninformed.into(),
                s.price.into(),
                s.coeff_informed.into(),
                s.coeff_noise.into(),
                s.theta.into(),
                s.conditional_mean.into(),
                s.conditional_variance.into(),
                var_p.into(),
                informational_efficiency(var_p).ok().into(),
                s.residual.into(),
                Cell::Int(s.iterations as u64),
                Cell::Text(method),
            ]);
        }
    }
    let summary = format!(
        "equilibrium: {} rows over {} regime(s)",
        table.rows.len(),
        sec.regimes.len()
    );
    Ok(Artifacts {
        table,
        event_log: None,
        summary,
    })
}

pub fn convergence(cfg: &Config, seed: u64) -> Result<Artifacts> {
    let base = cfg.market.params()?;
    let sec = &cfg.convergence;
    let grid: Vec<(f64, f64)> = sec.grid.iter().map(|&[n, m]| (n, m)).collect();
    let study = run_convergence_study(&base, sec.regime, &grid, sec.replications, seed)
        .map_err(|e| CliError::model("convergence", e))?;
    let mut table = Table::new(CONVERGENCE_COLUMNS);
    for r in &study.rows {
        table.push(vec![
            r.n_informed.into(),
            r.m_uninformed.into(),
            r.price_mean.into(),
            r.price_mean_analytic.into(),
            r.price_se.into(),
            r.mean_gap().into(),
            r.coeff_informed.into(),
            r.coeff_noise.into(),
            r.var_p.into(),
            r.var_p_analytic.into(),
            r.ie.into(),
            r.ie_analytic.into(),
        ]);
    }
    let last = study.rows.last().expect("grid is non-empty");
    let verdict = if last.mean_gap() <= sec.tolerance {
        "within"
    } else {
        "outside"
    };
    let summary = format!(
        "convergence: {} {} cells x {} replications, seed {seed}; last gap {:e} {verdict} tolerance {:e}",
        sec.regime,
        study.rows.len(),
        sec.replications,
        last.mean_gap(),
        sec.tolerance
    );
    Ok(Artifacts {
        table,
        event_log: None,
        summary,
    })
}

pub fn tokenomics(cfg: &Config, seed: u64) -> Result<Artifacts> {
    let mut sim = Simulation::new(&cfg.scenario, seed)
        .map_err(CliError::tokenomics)?
        .with_invariant_checks();
    let mut table = Table::new(TOKENOMICS_COLUMNS);
    while !sim.is_done() {
        let r = sim.step().map_err(CliError::tokenomics)?;
        let opt = |v: Option<String>| v.map_or(Cell::Empty, Cell::Decimal);
        table.push(vec![
            Cell::Int(r.day.into()),
            Cell::Decimal(r.supply.to_string()),
            Cell::Decimal(r.circulating.to_string()),
            Cell::Decimal(r.team.to_string()),
            Cell::Decimal(r.pledged_value.to_string()),
            opt(r.redemption_value.map(|p| p.to_string())),
            opt(r.spot_price.map(|p| p.to_string())),
            Cell::Bool(r.paused),
        ]);
    }
    let e = sim.economy();
    let pauses = e.log.records.iter().filter(|r| r.op == "pause").count();
    let summary = format!(
        "tokenomics: {} days, seed {seed}; supply {}, pledged {}, {} log records, {pauses} pause(s)",
        cfg.scenario.days,
        e.ledger.total(),
        e.vault.pledged_value().map_err(CliError::tokenomics)?,
        e.log.len(),
    );
    Ok(Artifacts {
        table,
        event_log: Some(e.log.to_jsonl()),
        summary,
    })
}

/// Final output path: the `OUT_DIR_ENV` directory, if set, replaces the directory of `out`.
pub fn resolve_out(out: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => {
            PathBuf::from(dir).join(out.file_name().unwrap_or(out.as_os_str()))
        }
        _ => out.to_path_buf(),
    }
}

/// Event log path next to `out`: `results.csv` gives `results.events.jsonl`.
pub fn event_log_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or("out".into(), |s| s.to_string_lossy());
    out.with_file_name(format!("{stem}.events.jsonl"))
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Loads the configuration, runs `command` and writes its artifacts. Returns the summary line.
pub fn run(
    command: Command,
    config: &Path,
    out: &Path,
    seed: u64,
    format: Format,
) -> Result<String> {
    let cfg = Config::load(config)?;
    let out = resolve_out(out);
    let log_path = event_log_path(&out);
    for target in [&out, &log_path] {
        if same_file(target, config) {
            return Err(CliError::invalid(
                "--out",
                format!("{} would overwrite the configuration", target.display()),
            ));
        }
    }
    let artifacts = match command {
        Command::Equilibrium => equilibrium(&cfg)?,
        Command::Convergence => convergence(&cfg, seed)?,
        Command::Tokenomics => tokenomics(&cfg, seed)?,
    };
    let mut buf = Vec::new();
    artifacts
        .table
        .write(format, &mut buf)
        .map_err(|e| CliError::io(&out, e))?;
    std::fs::write(&out, buf).map_err(|e| CliError::io(&out, e))?;
    let mut summary = format!("{} -> {}", artifacts.summary, out.display());
    if let Some(log) = artifacts.event_log {
        std::fs::write(&log_path, log).map_err(|e| CliError::io(&log_path, e))?;
        summary.push_str(&format!(", {}", log_path.display()));
    }
    Ok(summary)
}
