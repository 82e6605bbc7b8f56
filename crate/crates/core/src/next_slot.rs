//! `nextSlotIn`: the first slot strictly after `t` (cyclically) whose rank
//! lies in `[r1, r2]`.
//!
//! Three interchangeable strategies are provided. [`Strategy::Naive`] walks
//! the slots, [`Strategy::Reverse`] walks the ranks, and
//! [`Strategy::Polylog`] descends through the level structure of the
//! bit-reversal tree in `O(k)` iterations. [`next_slot`] picks the cheapest.

use std::fmt;
use std::str::FromStr;

use crate::bitrev::{self, check_bits, level_of_slot, max_rev, min_rev, rev, round_len};
use crate::error::DomainError;

/// Density threshold: the naive scan is used while `2^k / width <= 128`.
pub const NAIVE_MAX_DENSITY: u64 = 128;
/// Width threshold: the rank scan is used while `width <= 64`.
pub const REVERSE_MAX_WIDTH: u64 = 64;

/// A validated `nextSlotIn` query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlotQuery {
    k: u32,
    t: u64,
    r1: u64,
    r2: u64,
}

impl SlotQuery {
    pub fn new(k: u32, t: u64, r1: u64, r2: u64) -> Result<Self, DomainError> {
        check_bits(k)?;
        if k == 0 {
            return Err(DomainError::WidthOutOfRange { k });
        }
        bitrev::check_value(k, t)?;
        bitrev::check_interval(k, r1, r2)?;
        Ok(Self { k, t, r1, r2 })
    }

    pub fn bits(&self) -> u32 {
        self.k
    }

    pub fn slot(&self) -> u64 {
        self.t
    }

    pub fn ranks(&self) -> (u64, u64) {
        (self.r1, self.r2)
    }

    /// Cyclic distance `d` in `[1, 2^k]` from the query slot to `slot`.
    pub fn distance_to(&self, slot: u64) -> u64 {
        cyclic_distance(self.k, self.t, slot)
    }
}

/// Distance `d` in `[1, 2^k]` with `to = (from + d) mod 2^k`.
pub fn cyclic_distance(k: u32, from: u64, to: u64) -> u64 {
    let n = round_len(k);
    match to.wrapping_sub(from) & (n - 1) {
        0 => n,
        d => d,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Strategy {
    Naive,
    Reverse,
    Polylog,
    #[default]
    Auto,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Naive,
        Strategy::Reverse,
        Strategy::Polylog,
        Strategy::Auto,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Naive => "naive",
            Strategy::Reverse => "reverse",
            Strategy::Polylog => "polylog",
            Strategy::Auto => "auto",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

/// Probes `(t+1) mod 2^k`, `(t+2) mod 2^k`, ... until a rank falls in range.
pub fn next_slot_naive(q: &SlotQuery) -> u64 {
    let mask = round_len(q.k) - 1;
    let mut s = q.t;
    loop {
        s = (s + 1) & mask;
        let r = rev(q.k, s);
        if q.r1 <= r && r <= q.r2 {
            return s;
        }
    }
}

/// Scans the slots of every rank in `[r1, r2]` for the nearest successor.
pub fn next_slot_reverse(q: &SlotQuery) -> u64 {
    let (best, _) = (q.r1..=q.r2)
        .map(|x| {
            let s = rev(q.k, x);
            (s, q.distance_to(s))
        })
        .min_by_key(|&(_, d)| d)
        .expect("interval is non-empty");
    best
}

pub fn next_slot_polylog(q: &SlotQuery) -> u64 {
    polylog_counted(q).0
}

/// Coordinates `[minL, maxL]` of the ranks of level `l` (1 <= l <= k) that
/// fall in `[r1, r2]`, or `None` when the level misses the interval.
fn level_span(k: u32, l: u32, r1: u64, r2: u64) -> Option<(u64, u64)> {
    debug_assert!(1 <= l && l <= k);
    let half = 1u64 << (k - l);
    let step = half << 1;
    if r2 < half {
        return None;
    }
    let hi = (r2 - half) / step;
    // ceil((r1 - half) / step), clamped at zero for r1 <= half
    let lo = (r1 + half - 1) / step;
    (lo <= hi).then_some((lo, hi))
}

fn first_level_from(k: u32, from: u32, r1: u64, r2: u64) -> (u32, u64, u64) {
    (from..=k)
        .find_map(|l| level_span(k, l, r1, r2).map(|(lo, hi)| (l, lo, hi)))
        .expect("some level at or below the start intersects the interval")
}

/// Polylogarithmic `nextSlotIn`; also returns the number of outer iterations
/// (one per descent into a level subtree).
pub fn polylog_counted(q: &SlotQuery) -> (u64, u32) {
    let (mut k, mut t, mut r1, mut r2) = (q.k, q.t, q.r1, q.r2);
    let mut base = 0u64;
    let mut iterations = 0u32;
    loop {
        iterations += 1;

        // The current slot cannot be its own successor unless nothing else
        // qualifies, so drop its rank when it is an endpoint.
        let rt = rev(k, t);
        if r1 < r2 {
            if rt == r1 {
                r1 += 1;
            } else if rt == r2 {
                r2 -= 1;
            }
        }
        if r1 == r2 {
            return (base + rev(k, r1), iterations);
        }

        let first = min_rev(k, r1, r2);
        if t < first {
            return (base + first, iterations);
        }
        // Past the last qualifying slot: wrap into the next round. Only the
        // outermost iteration can get here.
        let last = max_rev(k, r1, r2);
        if last <= t {
            return (base + first, iterations);
        }

        let (l, lo, hi) = first_level_from(k, level_of_slot(t).max(1), r1, r2);
        let above = 1u64 << (l - 1);
        let first_l = min_rev(l - 1, lo, hi);
        if t < above + first_l {
            return (base + above + first_l, iterations);
        }

        // `t` is on level `l` now.
        let last_l = max_rev(l - 1, lo, hi);
        if t >= above + last_l {
            let (l1, lo1, hi1) = first_level_from(k, l + 1, r1, r2);
            return (
                base + (1u64 << (l1 - 1)) + min_rev(l1 - 1, lo1, hi1),
                iterations,
            );
        }

        base += above;
        t -= above;
        k = l - 1;
        r1 = lo;
        r2 = hi;
    }
}

/// Which strategy [`Strategy::Auto`] resolves to for this query.
pub fn dispatch(q: &SlotQuery) -> Strategy {
    let width = q.r2 - q.r1 + 1;
    if u128::from(round_len(q.k)) <= u128::from(NAIVE_MAX_DENSITY) * u128::from(width) {
        Strategy::Naive
    } else if width <= REVERSE_MAX_WIDTH {
        Strategy::Reverse
    } else {
        Strategy::Polylog
    }
}

pub fn next_slot_with(q: &SlotQuery, strategy: Strategy) -> u64 {
    match strategy {
        Strategy::Naive => next_slot_naive(q),
        Strategy::Reverse => next_slot_reverse(q),
        Strategy::Polylog => next_slot_polylog(q),
        Strategy::Auto => next_slot_with(q, dispatch(q)),
    }
}

/// Cost-based dispatcher over the three strategies.
pub fn next_slot(q: &SlotQuery) -> u64 {
    next_slot_with(q, Strategy::Auto)
}

/// Unchecked entry point for callers that maintain the invariants themselves.
pub(crate) fn next_slot_raw(k: u32, t: u64, r1: u64, r2: u64) -> u64 {
    debug_assert!(SlotQuery::new(k, t, r1, r2).is_ok());
    next_slot(&SlotQuery { k, t, r1, r2 })
}
