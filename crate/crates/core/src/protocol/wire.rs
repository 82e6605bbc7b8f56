//! Fixed little-endian message layout.
//!
//! | offset | size | field                  |
//! |--------|------|------------------------|
//! | 0      | 4    | `sequence_id`          |
//! | 4      | 1    | `log_sequence_length`  |
//! | 5      | 4    | `time_slot_length` ms  |
//! | 9      | 8    | `key`                  |
//! | 17     | 8    | `rank`                 |
//! | 25     | 2    | payload length         |
//! | 27     | n    | payload                |
//!
//! Layout version 1. A sequence id of zero is legal on the wire but marks
//! the message as bad.

use thiserror::Error;

use crate::bitrev::{rev, round_len, MAX_BITS};

pub const HEADER_LEN: usize = 27;
pub const MAX_PAYLOAD: usize = 1024;
pub const WIRE_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("truncated message: need {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte limit")]
    PayloadTooLarge(usize),
    #[error("header declares a {declared}-byte payload but {actual} bytes follow")]
    PayloadLengthMismatch { declared: usize, actual: usize },
    #[error("log sequence length {0} is out of range")]
    BadLogLength(u8),
    #[error("rank {rank} does not fit a sequence of 2^{k} messages")]
    RankOverflow { k: u8, rank: u64 },
}

/// One slot's transmission.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RboMessage {
    pub sequence_id: u32,
    pub log_sequence_length: u8,
    pub time_slot_length: u32,
    pub key: u64,
    pub rank: u64,
    pub payload: Vec<u8>,
}

impl RboMessage {
    /// Sequence id zero is reserved for invalid messages.
    pub fn is_bad(&self) -> bool {
        self.sequence_id == 0
    }

    /// Slot of this message within its round.
    pub fn slot(&self) -> u64 {
        rev(u32::from(self.log_sequence_length), self.rank)
    }

    fn check(&self) -> Result<(), WireError> {
        if self.payload.len() > MAX_PAYLOAD {
            return Err(WireError::PayloadTooLarge(self.payload.len()));
        }
        check_rank(self.log_sequence_length, self.rank)
    }

    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        self.check()?;
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.sequence_id.to_le_bytes());
        out.push(self.log_sequence_length);
        out.extend_from_slice(&self.time_slot_length.to_le_bytes());
        out.extend_from_slice(&self.key.to_le_bytes());
        out.extend_from_slice(&self.rank.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        if bytes.len() < HEADER_LEN {
            return Err(WireError::Truncated {
                needed: HEADER_LEN,
                got: bytes.len(),
            });
        }
        let (header, body) = bytes.split_at(HEADER_LEN);
        let sequence_id = u32::from_le_bytes(header[0..4].try_into().unwrap());
        let log_sequence_length = header[4];
        let time_slot_length = u32::from_le_bytes(header[5..9].try_into().unwrap());
        let key = u64::from_le_bytes(header[9..17].try_into().unwrap());
        let rank = u64::from_le_bytes(header[17..25].try_into().unwrap());
        let declared = usize::from(u16::from_le_bytes(header[25..27].try_into().unwrap()));
        if declared > MAX_PAYLOAD {
            return Err(WireError::PayloadTooLarge(declared));
        }
        if body.len() < declared {
            return Err(WireError::Truncated {
                needed: HEADER_LEN + declared,
                got: bytes.len(),
            });
        }
        if body.len() != declared {
            return Err(WireError::PayloadLengthMismatch {
                declared,
                actual: body.len(),
            });
        }
        check_rank(log_sequence_length, rank)?;
        Ok(Self {
            sequence_id,
            log_sequence_length,
            time_slot_length,
            key,
            rank,
            payload: body.to_vec(),
        })
    }
}

fn check_rank(k: u8, rank: u64) -> Result<(), WireError> {
    if u32::from(k) > MAX_BITS {
        return Err(WireError::BadLogLength(k));
    }
    if rank >= round_len(u32::from(k)) {
        return Err(WireError::RankOverflow { k, rank });
    }
    Ok(())
}
