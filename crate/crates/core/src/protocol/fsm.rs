//! Receiver state machine.
//!
//! The machine never touches a radio or a clock. Every entry point takes the
//! current local time (when it needs one) and returns the [`Effect`]s the
//! surrounding event loop must perform: switch the radio, arm or cancel a
//! timer, or deliver the split-phase `searchDone` completion to the user.
//!
//! Radio switching is itself split-phase. After [`Effect::RadioOn`] the
//! machine waits in LISTENING with the radio `Starting` until
//! [`ReceiverFsm::radio_start_done`], and likewise for switching off.

use thiserror::Error;

use super::wire::RboMessage;
use crate::bitrev::{rev, round_len, MAX_BITS};
use crate::next_slot::next_slot_raw;
use crate::search::RankInterval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FsmState {
    Idle,
    Listening,
    Sleeping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadioPhase {
    Off,
    Starting,
    On,
    Stopping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimerKind {
    Timeout,
    Sleeping,
}

/// Completion status delivered with `searchDone`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchStatus {
    Success,
    KeyNotPresent,
    Timeout,
    BadMessage,
    FailedRadio,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    RadioOn,
    RadioOff,
    ArmTimer {
        timer: TimerKind,
        deadline_ms: u64,
    },
    CancelTimer(TimerKind),
    SearchDone {
        status: SearchStatus,
        message: Option<RboMessage>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("relative margin divisor {0} is not a power of two")]
    DivisorNotPowerOfTwo(u64),
}

/// Timing parameters of the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolConfig {
    time_margin_ms: u64,
    relative_margin_shift: Option<u32>,
    min_sleeping_time_ms: u64,
    timeout_ms: u64,
}

impl ProtocolConfig {
    /// `relative_margin_divisor = None` disables the relative margin.
    pub fn new(
        time_margin_ms: u64,
        relative_margin_divisor: Option<u64>,
        min_sleeping_time_ms: u64,
        timeout_ms: u64,
    ) -> Result<Self, ConfigError> {
        let relative_margin_shift = match relative_margin_divisor {
            None => None,
            Some(d) if d.is_power_of_two() => Some(d.trailing_zeros()),
            Some(d) => return Err(ConfigError::DivisorNotPowerOfTwo(d)),
        };
        Ok(Self {
            time_margin_ms,
            relative_margin_shift,
            min_sleeping_time_ms,
            timeout_ms,
        })
    }

    /// 5 ms constant margin, `d = 64`, sleep only for two slots or more,
    /// time out after eight silent slots.
    pub fn for_slot_length(slot_ms: u32) -> Self {
        let slot = u64::from(slot_ms);
        Self {
            time_margin_ms: 5,
            relative_margin_shift: Some(6),
            min_sleeping_time_ms: 2 * slot,
            timeout_ms: 8 * slot,
        }
    }

    /// No margins and no minimum sleep: wake exactly at the target slot.
    pub fn exact(slot_ms: u32) -> Self {
        Self {
            time_margin_ms: 0,
            relative_margin_shift: None,
            min_sleeping_time_ms: 0,
            timeout_ms: 8 * u64::from(slot_ms),
        }
    }

    pub fn time_margin_ms(&self) -> u64 {
        self.time_margin_ms
    }

    pub fn relative_margin_divisor(&self) -> Option<u64> {
        self.relative_margin_shift.map(|s| 1u64 << s)
    }

    pub fn min_sleeping_time_ms(&self) -> u64 {
        self.min_sleeping_time_ms
    }

    pub fn timeout_ms(&self) -> u64 {
        self.timeout_ms
    }

    /// Sleep duration for `remaining_ms` until the next useful slot, or
    /// `None` if the receiver should keep listening.
    pub fn sleep_for(&self, remaining_ms: u64) -> Option<u64> {
        if remaining_ms < self.min_sleeping_time_ms {
            return None;
        }
        let relative = self.relative_margin_shift.map_or(0, |s| remaining_ms >> s);
        let sleep = remaining_ms
            .saturating_sub(relative)
            .saturating_sub(self.time_margin_ms);
        (sleep > 0).then_some(sleep)
    }
}

/// Time from the start of slot `now` to the start of slot `next`, where
/// `next == now` means a full round.
pub fn remaining_time_ms(k: u32, now: u64, next: u64, slot_ms: u32) -> u64 {
    let slots = if now < next {
        next - now
    } else {
        round_len(k) - now + next
    };
    let ms = u128::from(slots) * u128::from(slot_ms);
    u64::try_from(ms).unwrap_or(u64::MAX)
}

#[derive(Debug, Clone)]
pub struct ReceiverFsm {
    config: ProtocolConfig,
    state: FsmState,
    radio: RadioPhase,
    searched_key: Option<u64>,
    sequence_id: u32,
    log_sequence_length: u8,
    interval: RankInterval,
    timeout_deadline: Option<u64>,
    sleeping_deadline: Option<u64>,
    expected_slot: Option<u64>,
}

impl ReceiverFsm {
    pub fn new(config: ProtocolConfig) -> Self {
        Self {
            config,
            state: FsmState::Idle,
            radio: RadioPhase::Off,
            searched_key: None,
            sequence_id: 0,
            log_sequence_length: 0,
            interval: RankInterval::full(0),
            timeout_deadline: None,
            sleeping_deadline: None,
            expected_slot: None,
        }
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn state(&self) -> FsmState {
        self.state
    }

    pub fn radio(&self) -> RadioPhase {
        self.radio
    }

    pub fn searched_key(&self) -> Option<u64> {
        self.searched_key
    }

    pub fn sequence_id(&self) -> u32 {
        self.sequence_id
    }

    pub fn log_sequence_length(&self) -> u8 {
        self.log_sequence_length
    }

    pub fn interval(&self) -> RankInterval {
        self.interval
    }

    /// Slot (within the round) the receiver is waiting for; `None` right
    /// after a search starts, when any slot is useful.
    pub fn expected_slot(&self) -> Option<u64> {
        self.expected_slot
    }

    pub fn timeout_deadline(&self) -> Option<u64> {
        self.timeout_deadline
    }

    pub fn sleeping_deadline(&self) -> Option<u64> {
        self.sleeping_deadline
    }

    /// Timer arming matches the state: LISTENING has only the timeout armed,
    /// SLEEPING only the sleeping timer, IDLE neither.
    pub fn invariants_hold(&self) -> bool {
        let timers = (
            self.timeout_deadline.is_some(),
            self.sleeping_deadline.is_some(),
        );
        let radio_ok = match self.state {
            FsmState::Listening => matches!(self.radio, RadioPhase::Starting | RadioPhase::On),
            FsmState::Sleeping | FsmState::Idle => {
                matches!(self.radio, RadioPhase::Off | RadioPhase::Stopping)
            }
        };
        radio_ok
            && match self.state {
                FsmState::Listening => timers == (true, false),
                FsmState::Sleeping => timers == (false, true),
                FsmState::Idle => timers == (false, false),
            }
    }

    /// User command `search(key)`.
    pub fn search(&mut self, key: u64, now_ms: u64) -> Vec<Effect> {
        if let Some(prev) = self.searched_key {
            if key < prev {
                self.interval.reset_min();
            } else if key > prev {
                self.interval.reset_max(u32::from(self.log_sequence_length));
            }
        }
        self.searched_key = Some(key);
        self.expected_slot = None;
        let mut fx = Vec::new();
        self.enter_listening(now_ms, &mut fx);
        fx
    }

    /// User command `stop()`: pause, keeping what was learned.
    pub fn stop(&mut self) -> Vec<Effect> {
        let mut fx = Vec::new();
        self.enter_idle(&mut fx);
        fx
    }

    /// User command `reset()`: stop and forget the sequence, so the next
    /// reception reinitialises the bounds.
    pub fn reset(&mut self) -> Vec<Effect> {
        let fx = self.stop();
        self.sequence_id = 0;
        fx
    }

    /// A message arrived while the radio was on.
    pub fn received(&mut self, m: &RboMessage, now_ms: u64) -> Vec<Effect> {
        let mut fx = Vec::new();
        if self.state != FsmState::Listening {
            return fx;
        }
        let Some(searched) = self.searched_key else {
            return fx;
        };

        if self.timeout_deadline.take().is_some() {
            fx.push(Effect::CancelTimer(TimerKind::Timeout));
        }

        let k = u32::from(m.log_sequence_length);
        if m.is_bad() || k > MAX_BITS || m.rank >= round_len(k) {
            self.finish(SearchStatus::BadMessage, Some(m), &mut fx);
            return fx;
        }

        if m.sequence_id != self.sequence_id || m.log_sequence_length != self.log_sequence_length {
            self.sequence_id = m.sequence_id;
            self.log_sequence_length = m.log_sequence_length;
            self.interval = RankInterval::full(k);
        }

        if m.key == searched {
            self.finish(SearchStatus::Success, Some(m), &mut fx);
            return fx;
        }

        if m.key > searched {
            self.interval.observe_above(m.rank);
        } else {
            self.interval.observe_below(m.rank);
        }

        let Some((lo, hi)) = self.interval.bounds() else {
            self.finish(SearchStatus::KeyNotPresent, Some(m), &mut fx);
            return fx;
        };

        let now_slot = rev(k, m.rank);
        let next = next_slot_raw(k, now_slot, lo, hi);
        self.expected_slot = Some(next);
        let remaining = remaining_time_ms(k, now_slot, next, m.time_slot_length);

        match self.config.sleep_for(remaining) {
            Some(sleep) => self.enter_sleeping(now_ms, sleep, &mut fx),
            None => self.arm_timeout(now_ms, &mut fx),
        }
        fx
    }

    /// A timer fired. Timers that are not armed (cancelled, or belonging to
    /// another state) are ignored.
    pub fn timer_fired(&mut self, which: TimerKind, now_ms: u64) -> Vec<Effect> {
        let mut fx = Vec::new();
        match (which, self.state) {
            (TimerKind::Timeout, FsmState::Listening) if self.timeout_deadline.is_some() => {
                self.timeout_deadline = None;
                self.finish(SearchStatus::Timeout, None, &mut fx);
            }
            (TimerKind::Sleeping, FsmState::Sleeping) if self.sleeping_deadline.is_some() => {
                self.sleeping_deadline = None;
                self.enter_listening(now_ms, &mut fx);
            }
            _ => {}
        }
        fx
    }

    /// Completion of a radio-on request.
    pub fn radio_start_done(&mut self, ok: bool) -> Vec<Effect> {
        let mut fx = Vec::new();
        if self.radio != RadioPhase::Starting {
            return fx;
        }
        if ok {
            self.radio = RadioPhase::On;
        } else {
            self.radio = RadioPhase::Off;
            self.radio_failed(&mut fx);
        }
        fx
    }

    /// Completion of a radio-off request.
    pub fn radio_stop_done(&mut self, ok: bool) -> Vec<Effect> {
        let mut fx = Vec::new();
        if self.radio != RadioPhase::Stopping {
            return fx;
        }
        if ok {
            self.radio = RadioPhase::Off;
        } else {
            // still on; the idle transition below asks for another switch-off
            self.radio = RadioPhase::On;
            self.radio_failed(&mut fx);
        }
        fx
    }

    fn radio_failed(&mut self, fx: &mut Vec<Effect>) {
        if self.state == FsmState::Idle {
            self.enter_idle(fx);
        } else {
            self.finish(SearchStatus::FailedRadio, None, fx);
        }
    }

    fn finish(&mut self, status: SearchStatus, m: Option<&RboMessage>, fx: &mut Vec<Effect>) {
        self.enter_idle(fx);
        fx.push(Effect::SearchDone {
            status,
            message: m.cloned(),
        });
    }

    fn arm_timeout(&mut self, now_ms: u64, fx: &mut Vec<Effect>) {
        let deadline_ms = now_ms.saturating_add(self.config.timeout_ms);
        self.timeout_deadline = Some(deadline_ms);
        fx.push(Effect::ArmTimer {
            timer: TimerKind::Timeout,
            deadline_ms,
        });
    }

    fn enter_listening(&mut self, now_ms: u64, fx: &mut Vec<Effect>) {
        if self.sleeping_deadline.take().is_some() {
            fx.push(Effect::CancelTimer(TimerKind::Sleeping));
        }
        self.arm_timeout(now_ms, fx);
        if matches!(self.radio, RadioPhase::Off | RadioPhase::Stopping) {
            self.radio = RadioPhase::Starting;
            fx.push(Effect::RadioOn);
        }
        self.state = FsmState::Listening;
    }

    fn enter_sleeping(&mut self, now_ms: u64, sleep_ms: u64, fx: &mut Vec<Effect>) {
        if self.timeout_deadline.take().is_some() {
            fx.push(Effect::CancelTimer(TimerKind::Timeout));
        }
        let deadline_ms = now_ms.saturating_add(sleep_ms);
        self.sleeping_deadline = Some(deadline_ms);
        fx.push(Effect::ArmTimer {
            timer: TimerKind::Sleeping,
            deadline_ms,
        });
        self.switch_off(fx);
        self.state = FsmState::Sleeping;
    }

    fn enter_idle(&mut self, fx: &mut Vec<Effect>) {
        if self.timeout_deadline.take().is_some() {
            fx.push(Effect::CancelTimer(TimerKind::Timeout));
        }
        if self.sleeping_deadline.take().is_some() {
            fx.push(Effect::CancelTimer(TimerKind::Sleeping));
        }
        self.switch_off(fx);
        self.state = FsmState::Idle;
    }

    fn switch_off(&mut self, fx: &mut Vec<Effect>) {
        if matches!(self.radio, RadioPhase::On | RadioPhase::Starting) {
            self.radio = RadioPhase::Stopping;
            fx.push(Effect::RadioOff);
        }
    }
}
