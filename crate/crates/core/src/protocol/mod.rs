//! Wire-level protocol: message codec, sender schedule and the receiver
//! state machine.

pub mod fsm;
pub mod schedule;
pub mod wire;

pub use fsm::{
    remaining_time_ms, ConfigError, Effect, FsmState, ProtocolConfig, RadioPhase, ReceiverFsm,
    SearchStatus, TimerKind,
};
pub use schedule::{BroadcastSchedule, ScheduleError};
pub use wire::{RboMessage, WireError, HEADER_LEN, MAX_PAYLOAD};
