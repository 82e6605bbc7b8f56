//! Bit-reversal ordered broadcast of a sorted key sequence, and the receiver
//! side search that sleeps between the few slots it needs.
//!
//! A sender with `2^k` sorted messages transmits rank `r` in slot
//! `rev_bits(k, r)`. A receiver looking for a key keeps an interval of
//! candidate ranks and wakes up only for the next slot that can narrow it.
//!
//! ```
//! use rbo::{next_slot, SlotQuery};
//!
//! let q = SlotQuery::new(3, 0, 2, 3).unwrap();
//! assert_eq!(next_slot(&q), 2);
//! ```

pub mod bitrev;
pub mod error;
pub mod next_slot;
pub mod protocol;
pub mod search;
pub mod sim;
pub mod verify;

pub use bitrev::{
    bs_order, coordinate_in_level, level_of_rank, level_of_slot, max_rev_bits, min_rev_bits,
    rev_bits, round_len, TreeIndex, MAX_BITS,
};
pub use error::DomainError;
pub use next_slot::{dispatch, next_slot, next_slot_with, SlotQuery, Strategy};
pub use search::{run_reliable_trace, RankInterval, ReliableTrace, SearchOutcome, SearchState};
