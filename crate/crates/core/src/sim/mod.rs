//! Seeded discrete-event simulation of one sender and a receiver over a
//! slotted channel with independent losses.
//!
//! Every trial searches for a key that is absent from the round: the round
//! carries key `2r + 1` at rank `r`, and the searched key `2g` falls into
//! rank gap `g` in `[0, 2^k]`.
//!
//! Two drivers exist. [`SimMode::Bare`] runs the search engine slot by slot
//! and counts listened slots. [`SimMode::Fsm`] runs the receiver state
//! machine against a millisecond clock with optional clock skew and radio
//! switching latency.

mod bare;
mod experiment;
mod fsm_env;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use bare::simulate_bare;
pub use experiment::{
    cell_seed, run_experiment, write_csv, ExperimentRow, ExperimentSpec, CSV_HEADER,
};
pub use fsm_env::{simulate_fsm, FsmEnvironment};

use crate::bitrev::round_len;

/// Largest round simulated; keys `2r + 1` must fit a `u64`.
pub const MAX_SIM_BITS: u32 = 40;

/// Independent Bernoulli reception with success probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    p_success: f64,
}

impl ChannelModel {
    pub fn new(p_success: f64) -> Option<Self> {
        (0.0..=1.0)
            .contains(&p_success)
            .then_some(Self { p_success })
    }

    pub fn lossless() -> Self {
        Self { p_success: 1.0 }
    }

    pub fn p_success(&self) -> f64 {
        self.p_success
    }

    pub fn delivers<R: Rng>(&self, rng: &mut R) -> bool {
        self.p_success >= 1.0 || rng.random_bool(self.p_success)
    }
}

/// Where the bare receiver listens after a failed reception.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RetryPolicy {
    /// The next slot whose rank is in the (unchanged) interval.
    #[default]
    NextInInterval,
    /// The slot right after the missed one, whatever its rank.
    NextSlot,
}

impl RetryPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            RetryPolicy::NextInInterval => "next-in-interval",
            RetryPolicy::NextSlot => "next-slot",
        }
    }
}

impl fmt::Display for RetryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RetryPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "next-in-interval" => Ok(RetryPolicy::NextInInterval),
            "next-slot" => Ok(RetryPolicy::NextSlot),
            _ => Err(format!("unknown retry policy `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimMode {
    Bare,
    Fsm(FsmEnvironment),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialOutcome {
    Found,
    Absent,
    /// Gave up after too many consecutive timeouts.
    TimedOut,
    /// Radio failure or bad message.
    Failed,
    /// Hit the simulated time limit.
    Incomplete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    /// Energy units: slots listened to in search of a needed message,
    /// whether or not the reception succeeded.
    pub receptions: u64,
    /// Slots from the start slot `t0` to the last reception.
    pub elapsed_slots: u64,
    pub outcome: TrialOutcome,
    /// Extra slots heard while the radio was on early or waiting (FSM only).
    pub overhead_receptions: u64,
    /// Time the radio was switched on or switching, in sender milliseconds
    /// (FSM only).
    pub radio_on_ms: Option<f64>,
    pub timeouts: u32,
}

impl TrialMetrics {
    fn new() -> Self {
        Self {
            receptions: 0,
            elapsed_slots: 0,
            outcome: TrialOutcome::Incomplete,
            overhead_receptions: 0,
            radio_on_ms: None,
            timeouts: 0,
        }
    }
}

/// A fully seeded trial: the start slot and the rank gap are drawn from
/// `ChaCha8Rng::seed_from_u64(seed)` on stream `stream`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub k: u32,
    pub channel: ChannelModel,
    pub mode: SimMode,
    pub retry: RetryPolicy,
    pub seed: u64,
    pub stream: u64,
}

impl TrialConfig {
    pub fn bare(k: u32, p_success: f64, seed: u64) -> Self {
        Self {
            k,
            channel: ChannelModel::new(p_success).expect("probability in [0, 1]"),
            mode: SimMode::Bare,
            retry: RetryPolicy::default(),
            seed,
            stream: 0,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Runs one trial with a uniformly random absent-key gap and start slot.
///
/// # Panics
/// If `k` is outside `1..=MAX_SIM_BITS`.
pub fn run_trial(cfg: &TrialConfig) -> TrialMetrics {
    assert!(
        (1..=MAX_SIM_BITS).contains(&cfg.k),
        "k = {} outside 1..={MAX_SIM_BITS}",
        cfg.k
    );
    let mut rng = cfg.rng();
    let n = round_len(cfg.k);
    let gap = rng.random_range(0..=n);
    let t0 = rng.random_range(0..n);
    match &cfg.mode {
        SimMode::Bare => simulate_bare(cfg.k, gap, t0, cfg.channel, cfg.retry, &mut rng, None),
        SimMode::Fsm(env) => {
            let rate = if env.clock_skew > 0.0 {
                rng.random_range(1.0 - env.clock_skew..=1.0 + env.clock_skew)
            } else {
                1.0
            };
            simulate_fsm(cfg.k, gap, t0, cfg.channel, env, rate, &mut rng, None)
        }
    }
}
