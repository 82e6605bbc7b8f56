//! Sender side: sorting, padding to a power of two, and the slot-to-message
//! mapping of the broadcast round.

use thiserror::Error;

use super::wire::RboMessage;
use crate::bitrev::{rev, round_len};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("cannot schedule an empty sequence")]
    Empty,
    #[error("{0} items exceed the largest supported round")]
    TooLarge(usize),
    #[error("sequence id 0 is reserved")]
    ZeroSequenceId,
}

/// A sorted, power-of-two round of `(key, payload)` entries. The entry at
/// index `r` has rank `r` and is sent in slots congruent to `rev_bits(k, r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BroadcastSchedule<K, P> {
    sequence_id: u32,
    k: u32,
    slot_length_ms: u32,
    entries: Vec<(K, P)>,
}

/// Sorted positions that get a second copy when padding `n` items up to
/// `padded` (evenly spaced, distinct because `padded < 2n`).
pub fn padding_positions(n: usize, padded: usize) -> impl Iterator<Item = usize> {
    let extra = padded - n;
    (0..extra).map(move |j| j * n / extra)
}

impl<K: Ord + Clone, P: Clone> BroadcastSchedule<K, P> {
    /// Sorts `items` by key (stable) and duplicates evenly spaced entries in
    /// place until the length is a power of two, at least 2.
    pub fn build(
        mut items: Vec<(K, P)>,
        sequence_id: u32,
        slot_length_ms: u32,
    ) -> Result<Self, ScheduleError> {
        if sequence_id == 0 {
            return Err(ScheduleError::ZeroSequenceId);
        }
        let n = items.len();
        if n == 0 {
            return Err(ScheduleError::Empty);
        }
        if n as u128 > 1u128 << 63 {
            return Err(ScheduleError::TooLarge(n));
        }
        items.sort_by(|a, b| a.0.cmp(&b.0));

        let padded = n.next_power_of_two().max(2);
        let mut entries = Vec::with_capacity(padded);
        let mut dups = padding_positions(n, padded).peekable();
        for (i, item) in items.into_iter().enumerate() {
            if dups.next_if_eq(&i).is_some() {
                entries.push(item.clone());
            }
            entries.push(item);
        }
        debug_assert_eq!(entries.len(), padded);
        Ok(Self {
            sequence_id,
            k: padded.trailing_zeros(),
            slot_length_ms,
            entries,
        })
    }
}

impl<K, P> BroadcastSchedule<K, P> {
    pub fn sequence_id(&self) -> u32 {
        self.sequence_id
    }

    pub fn bits(&self) -> u32 {
        self.k
    }

    pub fn slot_length_ms(&self) -> u32 {
        self.slot_length_ms
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in rank order.
    pub fn entries(&self) -> &[(K, P)] {
        &self.entries
    }

    /// Rank transmitted in the given (unbounded) slot counter.
    pub fn rank_at(&self, global_slot: u64) -> u64 {
        rev(self.k, global_slot & (round_len(self.k) - 1))
    }

    pub fn entry_at(&self, global_slot: u64) -> (u64, &K, &P) {
        let rank = self.rank_at(global_slot);
        let (key, payload) = &self.entries[rank as usize];
        (rank, key, payload)
    }
}

impl BroadcastSchedule<u64, Vec<u8>> {
    /// The wire message sent in `global_slot`.
    pub fn slot_message(&self, global_slot: u64) -> RboMessage {
        let (rank, key, payload) = self.entry_at(global_slot);
        RboMessage {
            sequence_id: self.sequence_id,
            log_sequence_length: self.k as u8,
            time_slot_length: self.slot_length_ms,
            key: *key,
            rank,
            payload: payload.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(keys: &[u64]) -> Vec<(u64, Vec<u8>)> {
        keys.iter().map(|&k| (k, vec![k as u8])).collect()
    }

    fn keys_of(s: &BroadcastSchedule<u64, Vec<u8>>) -> Vec<u64> {
        s.entries().iter().map(|e| e.0).collect()
    }

    #[test]
    fn power_of_two_is_untouched() {
        let s = BroadcastSchedule::build(items(&[40, 10, 30, 20]), 7, 100).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.bits(), 2);
        assert_eq!(keys_of(&s), [10, 20, 30, 40]);
    }

    #[test]
    fn three_items_pad_to_four() {
        let s = BroadcastSchedule::build(items(&[3, 1, 2]), 7, 100).unwrap();
        let keys = keys_of(&s);
        assert_eq!(keys.len(), 4);
        assert!(keys.windows(2).all(|w| w[0] <= w[1]));
        for k in [1, 2, 3] {
            assert!(keys.contains(&k));
        }
        // one extra copy at sorted position floor(0 * 3 / 1) = 0
        assert_eq!(keys, [1, 1, 2, 3]);
    }

    #[test]
    fn single_item_pads_to_two() {
        let s = BroadcastSchedule::build(items(&[9]), 7, 100).unwrap();
        assert_eq!(s.bits(), 1);
        assert_eq!(keys_of(&s), [9, 9]);
    }

    #[test]
    fn padding_is_evenly_spread() {
        let pos: Vec<usize> = padding_positions(5, 8).collect();
        assert_eq!(pos, [0, 1, 3]);
        let s = BroadcastSchedule::build(items(&[50, 40, 30, 20, 10]), 1, 10).unwrap();
        assert_eq!(keys_of(&s), [10, 10, 20, 20, 30, 40, 40, 50]);
        for n in 1..200usize {
            let padded = n.next_power_of_two().max(2);
            let pos: Vec<usize> = padding_positions(n, padded).collect();
            assert_eq!(pos.len(), padded - n);
            assert!(pos.windows(2).all(|w| w[0] < w[1]));
            assert!(pos.iter().all(|&p| p < n));
        }
    }

    #[test]
    fn build_errors() {
        assert_eq!(
            BroadcastSchedule::<u64, Vec<u8>>::build(vec![], 1, 10),
            Err(ScheduleError::Empty)
        );
        assert_eq!(
            BroadcastSchedule::build(items(&[1]), 0, 10),
            Err(ScheduleError::ZeroSequenceId)
        );
    }

    #[test]
    fn slot_messages_follow_bit_reversal() {
        let keys: Vec<u64> = (0..8).map(|r| 10 * r).collect();
        let s = BroadcastSchedule::build(items(&keys), 3, 100).unwrap();
        let m = s.slot_message(1);
        assert_eq!(m.rank, 4);
        assert_eq!(m.key, 40);
        assert_eq!(m.slot(), 1);
        assert_eq!(m.log_sequence_length, 3);
        assert_eq!(m.time_slot_length, 100);
        assert_eq!(s.slot_message(8), s.slot_message(0));
        assert_eq!(s.slot_message(0).rank, 0);
        assert_eq!(s.rank_at(u64::MAX), 7);
    }
}
