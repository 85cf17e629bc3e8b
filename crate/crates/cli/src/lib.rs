//! Command-line front end: loads one TOML configuration per run and writes result tables.
//!
//! ```text
//! vaulteq <equilibrium|convergence|tokenomics> --config <path> --out <path> [--seed <n>] [--format csv|jsonl]
//! vaulteq defaults --out <path>
//! ```

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use commands::{run, Command};
pub use config::{Config, DEFAULT_SEED};
pub use error::CliError;
pub use table::Format;
