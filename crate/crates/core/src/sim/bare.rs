use rand::Rng;

use super::{ChannelModel, RetryPolicy, TrialMetrics, TrialOutcome};
use crate::bitrev::{rev, round_len};
use crate::next_slot::cyclic_distance;
use crate::search::{SearchOutcome, SearchState};

/// Drives the search engine directly: one energy unit per listened slot, a
/// lost reception leaves the interval untouched.
///
/// Searches for the absent key in rank gap `gap` starting right after slot
/// `t0`. Listened slots are appended to `slots` when given.
pub fn simulate_bare<R: Rng>(
    k: u32,
    gap: u64,
    t0: u64,
    channel: ChannelModel,
    retry: RetryPolicy,
    rng: &mut R,
    mut slots: Option<&mut Vec<u64>>,
) -> TrialMetrics {
    let n = round_len(k);
    assert!(gap <= n && t0 < n, "gap {gap} or start {t0} out of range");
    let mut state = SearchState::new(k, 2 * gap, t0).expect("k and t0 validated");
    let mut metrics = TrialMetrics::new();
    let mut slot = state.first_slot();
    let mut prev = t0;
    loop {
        metrics.elapsed_slots += cyclic_distance(k, prev, slot);
        prev = slot;
        if let Some(v) = slots.as_deref_mut() {
            v.push(slot);
        }
        let delivered = channel.delivers(rng);
        let outcome = if delivered {
            let rank = rev(k, slot);
            state.observe(&(2 * rank + 1), rank)
        } else {
            state.miss(slot)
        };
        match outcome {
            SearchOutcome::Found { .. } => {
                metrics.outcome = TrialOutcome::Found;
                break;
            }
            SearchOutcome::Absent => {
                metrics.outcome = TrialOutcome::Absent;
                break;
            }
            SearchOutcome::Continue { next_slot } => {
                slot = match retry {
                    RetryPolicy::NextSlot if !delivered => (slot + 1) & (n - 1),
                    _ => next_slot,
                };
            }
        }
    }
    metrics.receptions = state.receptions();
    metrics
}
