//! Price safeguard: pause trading after a drop of more than 30% within a week.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Trailing window length in days, today included.
pub const WINDOW_DAYS: u32 = 7;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnpauseMode {
    /// Trading resumes as soon as the window no longer shows a breach.
    #[default]
    Automatic,
    /// Trading stays paused until explicitly released.
    Manual,
}

/// `spot < 0.7 * window_max`, exactly.
pub fn breaches(spot: u128, window_max: u128) -> bool {
    ethnum::U256::from(spot) * 10 < ethnum::U256::from(window_max) * 7
}

fn in_window(day: u32, today: u32) -> bool {
    day <= today && today - day < WINDOW_DAYS
}

/// Decision at `today` from a `(day, price)` history, scanning the whole window.
/// `None` when no price was recorded today.
pub fn breach_at(history: &[(u32, u128)], today: u32) -> Option<bool> {
    let spot = history.iter().rev().find(|(d, _)| *d == today)?.1;
    let max = history
        .iter()
        .filter(|(d, _)| in_window(*d, today))
        .map(|&(_, p)| p)
        .max()?;
    Some(breaches(spot, max))
}

/// Running window maximum over prices pushed in non-decreasing day order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlidingMax {
    window: VecDeque<(u32, u128)>,
}

impl SlidingMax {
    /// Adds today's price and returns whether it breaches the window maximum.
    pub fn push(&mut self, day: u32, price: u128) -> bool {
        while self
            .window
            .front()
            .is_some_and(|&(d, _)| !in_window(d, day))
        {
            self.window.pop_front();
        }
        while self.window.back().is_some_and(|&(_, p)| p <= price) {
            self.window.pop_back();
        }
        self.window.push_back((day, price));
        breaches(price, self.window[0].1)
    }

    pub fn max(&self) -> Option<u128> {
        self.window.front().map(|w| w.1)
    }
}
