//! Integer-exact simulator of a vault-backed token economy.
//!
//! Money and tokens are integer micro-units, prices wad, rates nano-units; every
//! division rounds toward zero unless stated otherwise.

pub mod amount;
pub mod economy;
pub mod error;
pub mod fees;
pub mod log;
pub mod pool;
pub mod safeguard;
pub mod scenario;
pub mod supply;
pub mod vault;

pub use amount::{Money, Price, Rate, Tokens};
pub use economy::{
    distribute, Economy, EpochReport, FeeDestination, Policy, PurchaseOutcome, TickEvent,
    BOOTSTRAP_TOKENS,
};
pub use error::TokenomicsError;
pub use fees::{FeeSchedule, Tier};
pub use log::{EventLog, LogRecord};
pub use pool::{PoolState, SwapDirection, SwapOutcome};
pub use safeguard::UnpauseMode;
pub use scenario::{
    random_scenario, Action, DayRow, Scenario, ScriptEvent, Simulation, SimulationOutput,
};
pub use supply::{MintKind, MintRecord, SupplyLedger, MAX_CAP};
pub use vault::VaultState;
