use rand::Rng;

use super::{ChannelModel, TrialMetrics, TrialOutcome};
use crate::bitrev::{rev, round_len};
use crate::protocol::{Effect, ProtocolConfig, RboMessage, ReceiverFsm, SearchStatus, TimerKind};

/// Physical environment of the receiver state machine.
///
/// The sender transmits the message of global slot `g` at `g * slot_length_ms`
/// on its own clock. The receiver's clock runs at a constant rate drawn from
/// `[1 - clock_skew, 1 + clock_skew]`; radio switches complete after
/// `switch_latency_ms`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsmEnvironment {
    pub slot_length_ms: u32,
    pub protocol: ProtocolConfig,
    pub switch_latency_ms: f64,
    pub clock_skew: f64,
    /// Consecutive timeouts tolerated before the user gives up.
    pub max_timeouts: u32,
    /// Simulated time limit, in rounds.
    pub max_rounds: u64,
}

impl FsmEnvironment {
    pub fn new(slot_length_ms: u32) -> Self {
        Self {
            slot_length_ms,
            protocol: ProtocolConfig::for_slot_length(slot_length_ms),
            switch_latency_ms: 1.0,
            clock_skew: 0.0,
            max_timeouts: 32,
            max_rounds: 1 << 12,
        }
    }

    /// No margins, instant radio, perfect clock: the machine listens to
    /// exactly the slots the search engine asks for.
    pub fn ideal(slot_length_ms: u32) -> Self {
        Self {
            protocol: ProtocolConfig::exact(slot_length_ms),
            switch_latency_ms: 0.0,
            ..Self::new(slot_length_ms)
        }
    }
}

impl Default for FsmEnvironment {
    fn default() -> Self {
        Self::new(100)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Radio {
    Off,
    Starting(f64),
    On,
    Stopping(f64),
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Switch,
    Timer(TimerKind),
    Beacon(u64),
}

fn timer_index(t: TimerKind) -> usize {
    match t {
        TimerKind::Timeout => 0,
        TimerKind::Sleeping => 1,
    }
}

struct World<'a> {
    env: &'a FsmEnvironment,
    rate: f64,
    radio: Radio,
    on_since: Option<f64>,
    radio_on_ms: f64,
    timers: [Option<f64>; 2],
}

impl World<'_> {
    fn local(&self, real: f64) -> u64 {
        (real * self.rate).floor() as u64
    }

    fn apply(&mut self, now: f64, fx: &[Effect]) -> Option<SearchStatus> {
        let mut done = None;
        for e in fx {
            match e {
                Effect::RadioOn => {
                    self.radio = Radio::Starting(now + self.env.switch_latency_ms);
                    self.on_since.get_or_insert(now);
                }
                Effect::RadioOff => self.radio = Radio::Stopping(now + self.env.switch_latency_ms),
                Effect::ArmTimer { timer, deadline_ms } => {
                    let at = (*deadline_ms as f64 / self.rate).max(now);
                    self.timers[timer_index(*timer)] = Some(at);
                }
                Effect::CancelTimer(t) => self.timers[timer_index(*t)] = None,
                Effect::SearchDone { status, .. } => done = Some(*status),
            }
        }
        done
    }

    fn switched_off(&mut self, at: f64) {
        if let Some(since) = self.on_since.take() {
            self.radio_on_ms += at - since;
        }
    }
}

/// Runs the receiver state machine until its search for the absent key in
/// rank gap `gap` ends. The search is issued halfway through slot `t0`.
///
/// `clock_rate` is the receiver clock rate relative to the sender. Slots the
/// radio heard while the machine was listening are appended to `slots`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_fsm<R: Rng>(
    k: u32,
    gap: u64,
    t0: u64,
    channel: ChannelModel,
    env: &FsmEnvironment,
    clock_rate: f64,
    rng: &mut R,
    mut slots: Option<&mut Vec<u64>>,
) -> TrialMetrics {
    let n = round_len(k);
    assert!(gap <= n && t0 < n, "gap {gap} or start {t0} out of range");
    let slot_ms = f64::from(env.slot_length_ms);
    let key = 2 * gap;
    let start = (t0 as f64 + 0.5) * slot_ms;
    let limit = start + env.max_rounds as f64 * n as f64 * slot_ms;

    let mut fsm = ReceiverFsm::new(env.protocol);
    let mut world = World {
        env,
        rate: clock_rate,
        radio: Radio::Off,
        on_since: None,
        radio_on_ms: 0.0,
        timers: [None, None],
    };
    let mut metrics = TrialMetrics::new();
    let mut next_beacon = t0 + 1;
    let mut last_heard = t0;

    let mut now = start;
    let mut done = world.apply(now, &fsm.search(key, world.local(now)));
    while done.is_none() {
        // ties: switch completion, then timers, then the beacon
        let mut best: Option<(f64, Event)> = None;
        let mut consider = |at: f64, ev: Event| {
            if best.is_none_or(|(b, _)| at < b) {
                best = Some((at, ev));
            }
        };
        if let Radio::Starting(at) | Radio::Stopping(at) = world.radio {
            consider(at, Event::Switch);
        }
        if let Some(at) = world.timers[0] {
            consider(at, Event::Timer(TimerKind::Timeout));
        }
        if let Some(at) = world.timers[1] {
            consider(at, Event::Timer(TimerKind::Sleeping));
        }
        if world.radio == Radio::On {
            let g = next_beacon.max((now / slot_ms).ceil() as u64);
            consider(g as f64 * slot_ms, Event::Beacon(g));
        }
        let Some((at, event)) = best else {
            break;
        };
        if at > limit {
            break;
        }
        now = at;

        let fx = match event {
            Event::Switch => match world.radio {
                Radio::Starting(_) => {
                    world.radio = Radio::On;
                    fsm.radio_start_done(true)
                }
                Radio::Stopping(_) => {
                    world.radio = Radio::Off;
                    world.switched_off(now);
                    fsm.radio_stop_done(true)
                }
                _ => unreachable!("switch event without a pending switch"),
            },
            Event::Timer(kind) => {
                world.timers[timer_index(kind)] = None;
                fsm.timer_fired(kind, world.local(now))
            }
            Event::Beacon(g) => {
                next_beacon = g + 1;
                let slot = g & (n - 1);
                let targeted = fsm.expected_slot().is_none_or(|s| s == slot);
                if targeted {
                    metrics.receptions += 1;
                } else {
                    metrics.overhead_receptions += 1;
                }
                last_heard = g;
                if let Some(v) = slots.as_deref_mut() {
                    v.push(slot);
                }
                if channel.delivers(rng) {
                    let rank = rev(k, slot);
                    let m = RboMessage {
                        sequence_id: 1,
                        log_sequence_length: k as u8,
                        time_slot_length: env.slot_length_ms,
                        key: 2 * rank + 1,
                        rank,
                        payload: Vec::new(),
                    };
                    fsm.received(&m, world.local(now))
                } else {
                    Vec::new()
                }
            }
        };
        done = world.apply(now, &fx);

        if done == Some(SearchStatus::Timeout) {
            metrics.timeouts += 1;
            if metrics.timeouts <= env.max_timeouts {
                done = world.apply(now, &fsm.search(key, world.local(now)));
            }
        }
    }

    metrics.outcome = match done {
        Some(SearchStatus::Success) => TrialOutcome::Found,
        Some(SearchStatus::KeyNotPresent) => TrialOutcome::Absent,
        Some(SearchStatus::Timeout) => TrialOutcome::TimedOut,
        Some(SearchStatus::BadMessage | SearchStatus::FailedRadio) => TrialOutcome::Failed,
        None => TrialOutcome::Incomplete,
    };
    let off_at = match world.radio {
        Radio::Stopping(at) => at,
        _ => now,
    };
    world.switched_off(off_at);
    metrics.radio_on_ms = Some(world.radio_on_ms);
    metrics.elapsed_slots = last_heard - t0;
    metrics
}
