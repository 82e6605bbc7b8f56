//! Receiver-side rank search.
//!
//! The receiver keeps the interval of ranks that can still hold the searched
//! key. Every observed `(key, rank)` pair either is the key, or lets one end
//! of the interval move past the observed rank. The search stops once the key
//! is seen or the interval is empty.

use crate::bitrev::{self, rev, round_len};
use crate::error::DomainError;
use crate::next_slot::next_slot_raw;

/// Ranks `[minr, maxr]` that may still hold the searched key.
///
/// Stored as the half-open `[minr, end)` so that `maxr = -1` and
/// `minr = 2^k` stay representable for every supported width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RankInterval {
    minr: u64,
    end: u64,
}

impl RankInterval {
    /// `[0, 2^k - 1]`.
    pub fn full(k: u32) -> Self {
        Self {
            minr: 0,
            end: round_len(k),
        }
    }

    pub fn new(minr: u64, maxr: u64) -> Self {
        Self {
            minr,
            end: maxr + 1,
        }
    }

    pub fn minr(&self) -> u64 {
        self.minr
    }

    /// `maxr + 1`; zero encodes `maxr = -1`.
    pub fn end(&self) -> u64 {
        self.end
    }

    /// `(minr, maxr)` when non-empty.
    pub fn bounds(&self) -> Option<(u64, u64)> {
        (!self.is_empty()).then(|| (self.minr, self.end - 1))
    }

    pub fn is_empty(&self) -> bool {
        self.minr >= self.end
    }

    pub fn contains(&self, rank: u64) -> bool {
        self.minr <= rank && rank < self.end
    }

    pub fn len(&self) -> u64 {
        self.end.saturating_sub(self.minr)
    }

    /// A key below the searched one was seen at `rank`.
    pub fn observe_below(&mut self, rank: u64) {
        if self.minr <= rank {
            self.minr = rank + 1;
        }
    }

    /// A key above the searched one was seen at `rank`.
    pub fn observe_above(&mut self, rank: u64) {
        if self.end > rank {
            self.end = rank;
        }
    }

    pub(crate) fn reset_min(&mut self) {
        self.minr = 0;
    }

    pub(crate) fn reset_max(&mut self, k: u32) {
        self.end = round_len(k);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchOutcome {
    /// The observed message carries the searched key.
    Found { rank: u64 },
    /// The interval became empty: no message carries the key.
    Absent,
    /// Sleep until `next_slot`, whose rank is inside the interval.
    Continue { next_slot: u64 },
}

/// State of one key search over a `2^k`-message round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchState<K> {
    k: u32,
    key: K,
    interval: RankInterval,
    receptions: u64,
    last_slot: u64,
}

impl<K: Ord> SearchState<K> {
    /// Starts a search just after `start_slot`.
    pub fn new(k: u32, key: K, start_slot: u64) -> Result<Self, DomainError> {
        if k == 0 {
            return Err(DomainError::WidthOutOfRange { k });
        }
        bitrev::check_value(k, start_slot)?;
        Ok(Self {
            k,
            key,
            interval: RankInterval::full(k),
            receptions: 0,
            last_slot: start_slot,
        })
    }

    pub fn bits(&self) -> u32 {
        self.k
    }

    pub fn key(&self) -> &K {
        &self.key
    }

    pub fn interval(&self) -> RankInterval {
        self.interval
    }

    pub fn receptions(&self) -> u64 {
        self.receptions
    }

    pub fn last_slot(&self) -> u64 {
        self.last_slot
    }

    /// The first listening slot: the one right after the start slot.
    pub fn first_slot(&self) -> u64 {
        (self.last_slot + 1) & (round_len(self.k) - 1)
    }

    /// Consumes the message of rank `rank` carrying `key`.
    ///
    /// # Panics
    /// If `rank` does not fit in `k` bits.
    pub fn observe(&mut self, key: &K, rank: u64) -> SearchOutcome {
        assert!(rank < round_len(self.k), "rank {rank} out of range");
        self.receptions += 1;
        self.last_slot = rev(self.k, rank);
        if *key == self.key {
            return SearchOutcome::Found { rank };
        }
        if *key < self.key {
            self.interval.observe_below(rank);
        } else {
            self.interval.observe_above(rank);
        }
        self.next_from(self.last_slot)
    }

    /// A reception attempt in `slot` that delivered nothing. Costs one unit of
    /// energy and leaves the interval unchanged.
    pub fn miss(&mut self, slot: u64) -> SearchOutcome {
        assert!(slot < round_len(self.k), "slot {slot} out of range");
        self.receptions += 1;
        self.last_slot = slot;
        self.next_from(slot)
    }

    fn next_from(&self, slot: u64) -> SearchOutcome {
        match self.interval.bounds() {
            None => SearchOutcome::Absent,
            Some((lo, hi)) => SearchOutcome::Continue {
                next_slot: next_slot_raw(self.k, slot, lo, hi),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceOutcome {
    Found { rank: u64 },
    Absent,
}

/// Slots used by a loss-free search, in order, and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReliableTrace {
    pub slots: Vec<u64>,
    pub outcome: TraceOutcome,
}

impl ReliableTrace {
    /// Number of receptions.
    pub fn energy(&self) -> u64 {
        self.slots.len() as u64
    }

    /// Slots from `t0` to the last reception, counted cyclically.
    pub fn elapsed(&self, k: u32, t0: u64) -> u64 {
        let mut at = t0;
        self.slots
            .iter()
            .map(|&s| {
                let d = crate::next_slot::cyclic_distance(k, at, s);
                at = s;
                d
            })
            .sum()
    }
}

/// Runs a search without losses over the round `sorted_keys` (rank order),
/// starting right after slot `t0`.
pub fn run_reliable_trace<K: Ord>(
    k: u32,
    sorted_keys: &[K],
    key: &K,
    t0: u64,
) -> Result<ReliableTrace, DomainError> {
    bitrev::check_bits(k)?;
    if sorted_keys.len() as u64 != round_len(k) {
        return Err(DomainError::LengthMismatch {
            expected: round_len(k),
            actual: sorted_keys.len(),
        });
    }
    if let Some(index) = sorted_keys.windows(2).position(|w| w[0] > w[1]) {
        return Err(DomainError::Unsorted { index: index + 1 });
    }
    let mut state = SearchState::new(k, key, t0)?;
    let mut slot = state.first_slot();
    let mut slots = Vec::new();
    loop {
        slots.push(slot);
        let rank = rev(k, slot);
        match state.observe(&&sorted_keys[rank as usize], rank) {
            SearchOutcome::Found { rank } => {
                return Ok(ReliableTrace {
                    slots,
                    outcome: TraceOutcome::Found { rank },
                })
            }
            SearchOutcome::Absent => {
                return Ok(ReliableTrace {
                    slots,
                    outcome: TraceOutcome::Absent,
                })
            }
            SearchOutcome::Continue { next_slot } => slot = next_slot,
        }
    }
}
