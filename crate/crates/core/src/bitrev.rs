//! Bit-reversal permutation and the geometry of the implicit binary search
//! tree it induces over one broadcast round.
//!
//! Ranks are positions in the sorted key sequence, slots are positions in
//! time. Rank `x` is transmitted in slot `rev_bits(k, x)`; because the
//! permutation is an involution the same function maps slots back to ranks.
//!
//! Slot `t` sits on level `bit_length(t)`, so level `l >= 1` occupies the
//! contiguous slot block `[2^(l-1), 2^l)`. The ranks on level `l` are the
//! arithmetic progression `2^(k-l) + i * 2^(k-l+1)`, and slot
//! `2^(l-1) + rev_bits(l-1, i)` carries the rank with coordinate `i`.

use crate::error::DomainError;

/// Largest supported bit-width. Every rank and slot fits one `u64`.
pub const MAX_BITS: u32 = 63;

/// A validated `k`-bit rank or slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreeIndex {
    k: u32,
    value: u64,
}

impl TreeIndex {
    pub fn new(k: u32, value: u64) -> Result<Self, DomainError> {
        check_value(k, value)?;
        Ok(Self { k, value })
    }

    pub fn bits(self) -> u32 {
        self.k
    }

    pub fn value(self) -> u64 {
        self.value
    }

    /// The index this rank (or slot) is mapped to by the permutation.
    pub fn reversed(self) -> Self {
        Self {
            k: self.k,
            value: rev(self.k, self.value),
        }
    }

    /// Tree level of this value read as a rank.
    pub fn rank_level(self) -> u32 {
        level_of_slot(rev(self.k, self.value))
    }
}

/// Number of slots (or ranks) in a `k`-bit round.
#[inline]
pub fn round_len(k: u32) -> u64 {
    1u64 << k
}

pub(crate) fn check_bits(k: u32) -> Result<(), DomainError> {
    if k > MAX_BITS {
        return Err(DomainError::WidthOutOfRange { k });
    }
    Ok(())
}

pub(crate) fn check_value(k: u32, value: u64) -> Result<(), DomainError> {
    check_bits(k)?;
    if value >= round_len(k) {
        return Err(DomainError::ValueOutOfRange { k, value });
    }
    Ok(())
}

pub(crate) fn check_interval(k: u32, r1: u64, r2: u64) -> Result<(), DomainError> {
    check_value(k, r1)?;
    check_value(k, r2)?;
    if r1 > r2 {
        return Err(DomainError::EmptyInterval { r1, r2 });
    }
    Ok(())
}

/// Unchecked reversal of the low `k` bits of `x`.
#[inline]
pub(crate) fn rev(k: u32, x: u64) -> u64 {
    debug_assert!(k <= MAX_BITS && x < round_len(k));
    if k == 0 {
        0
    } else {
        x.reverse_bits() >> (64 - k)
    }
}

/// Reference bit loop: one bit of `x` moved per iteration.
pub(crate) fn rev_loop(k: u32, mut x: u64) -> u64 {
    let mut out = 0;
    for _ in 0..k {
        out = (out << 1) | (x & 1);
        x >>= 1;
    }
    out
}

/// Reverses the `k`-bit binary representation of the rank `x`.
pub fn rev_bits(k: u32, x: u64) -> Result<u64, DomainError> {
    check_value(k, x)?;
    Ok(rev(k, x))
}

/// Binary-search ordering: even ranks (the upper tree) are placed, recursively
/// ordered, before the odd ranks (the leaves). Kept only as a contrast to the
/// bit-reversal schedule; the protocol never uses it.
pub fn bs_order(k: u32, x: u64) -> Result<u64, DomainError> {
    check_value(k, x)?;
    let (mut k, mut x) = (k, x);
    while k > 0 {
        if x & 1 == 1 {
            return Ok((1u64 << (k - 1)) + (x >> 1));
        }
        x >>= 1;
        k -= 1;
    }
    Ok(0)
}

/// `ceil(log2(t + 1))`, which is the bit length of `t`.
#[inline]
pub fn level_of_slot(t: u64) -> u32 {
    u64::BITS - t.leading_zeros()
}

pub fn level_of_rank(k: u32, x: u64) -> Result<u32, DomainError> {
    Ok(level_of_slot(rev_bits(k, x)?))
}

/// Coordinate of rank `x` within level `l`, i.e. the `i` such that
/// `x = 2^(k-l) + i * 2^(k-l+1)`. Fails if `x` is not on level `l`.
pub fn coordinate_in_level(k: u32, l: u32, x: u64) -> Result<u64, DomainError> {
    check_value(k, x)?;
    let off_level = DomainError::NotOnLevel {
        k,
        level: l,
        rank: x,
    };
    if l > k {
        return Err(off_level);
    }
    if l == 0 {
        return if x == 0 { Ok(0) } else { Err(off_level) };
    }
    let half = 1u64 << (k - l);
    let step = half << 1;
    if x < half || !(x - half).is_multiple_of(step) {
        return Err(off_level);
    }
    Ok(x / step)
}

/// Descends the search tree from the root (rank 0, then rank `2^(k-1)`) until
/// it enters `[r1, r2]`. The first rank met is the shallowest one, so its slot
/// is the minimum. Takes at most `k` steps.
pub(crate) fn min_rev(k: u32, r1: u64, r2: u64) -> u64 {
    debug_assert!(r1 <= r2 && r2 < round_len(k));
    let mut x = 0u64;
    let mut step = if k == 0 { 0 } else { 1u64 << (k - 1) };
    while x < r1 || x > r2 {
        if x < r1 {
            x += step;
        } else {
            x -= step;
        }
        step >>= 1;
    }
    rev(k, x)
}

/// Reflection `x -> 2^k - 1 - x` complements every bit, so it commutes with
/// the reversal and turns the maximum into a minimum.
pub(crate) fn max_rev(k: u32, r1: u64, r2: u64) -> u64 {
    let top = round_len(k) - 1;
    top - min_rev(k, top - r2, top - r1)
}

/// Smallest slot whose rank lies in `[r1, r2]`.
pub fn min_rev_bits(k: u32, r1: u64, r2: u64) -> Result<u64, DomainError> {
    check_interval(k, r1, r2)?;
    Ok(min_rev(k, r1, r2))
}

/// Largest slot whose rank lies in `[r1, r2]`.
pub fn max_rev_bits(k: u32, r1: u64, r2: u64) -> Result<u64, DomainError> {
    check_interval(k, r1, r2)?;
    Ok(max_rev(k, r1, r2))
}
