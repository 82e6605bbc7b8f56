//! Oracle suites: every fast routine is checked against a brute-force
//! counterpart, exhaustively on small rounds and on random samples above.
//!
//! The suites that depend on the permutation itself take it as a parameter,
//! so a deliberately broken implementation can be fed in to check that the
//! suites notice.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bitrev::{max_rev, min_rev, rev, rev_loop, round_len};
use crate::next_slot::{next_slot_naive, next_slot_reverse, polylog_counted, SlotQuery};
use crate::search::{run_reliable_trace, TraceOutcome};
use crate::sim::{simulate_bare, simulate_fsm, ChannelModel, FsmEnvironment, RetryPolicy};

/// `rev_bits` without range checks: `(k, x) -> reversed x`.
pub type RevFn = fn(u32, u64) -> u64;

/// The library's permutation.
pub fn library_rev(k: u32, x: u64) -> u64 {
    rev(k, x)
}

pub const MAX_RANDOM_BITS: u32 = 25;
pub const MAX_EXHAUSTIVE_BITS: u32 = 10;
const NEXT_SLOT_EXHAUSTIVE_BITS: u32 = 8;
/// Random next-slot queries keep both brute-force scans below this many steps.
const QUERY_SCAN_LIMIT: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: String,
    pub cases: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl SuiteReport {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            cases: 0,
            failures: 0,
            first_failure: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }

    fn merge(mut self, other: SuiteReport) -> Self {
        self.cases += other.cases;
        self.failures += other.failures;
        if self.first_failure.is_none() {
            self.first_failure = other.first_failure;
        }
        self
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {}: {} cases, {} failures",
            self.name, self.cases, self.failures
        )?;
        if let Some(msg) = &self.first_failure {
            write!(f, " (first: {msg})")?;
        }
        Ok(())
    }
}

/// Smallest slot whose rank lies in `[r1, r2]`, by scanning whichever side
/// is shorter.
pub fn brute_min_rev(rev: RevFn, k: u32, r1: u64, r2: u64) -> u64 {
    let n = round_len(k);
    let width = r2 - r1 + 1;
    if width <= n / width {
        (r1..=r2).map(|r| rev(k, r)).min().expect("non-empty")
    } else {
        (0..n)
            .find(|&s| (r1..=r2).contains(&rev(k, s)))
            .expect("some slot carries each rank")
    }
}

/// Largest slot whose rank lies in `[r1, r2]`.
pub fn brute_max_rev(rev: RevFn, k: u32, r1: u64, r2: u64) -> u64 {
    let n = round_len(k);
    let width = r2 - r1 + 1;
    if width <= n / width {
        (r1..=r2).map(|r| rev(k, r)).max().expect("non-empty")
    } else {
        (0..n)
            .rev()
            .find(|&s| (r1..=r2).contains(&rev(k, s)))
            .expect("some slot carries each rank")
    }
}

/// A random interval of log-uniform width in `[lo, hi]` inside `[0, 2^k)`.
fn interval_with_width<R: Rng>(k: u32, lo: u64, hi: u64, rng: &mut R) -> (u64, u64) {
    let n = round_len(k);
    let (lo, hi) = (lo.max(1) as f64, hi.min(n) as f64);
    let w = rng.random_range(lo.ln()..=hi.ln()).exp().round() as u64;
    let w = w.clamp(1, n);
    let r1 = rng.random_range(0..=n - w);
    (r1, r1 + w - 1)
}

/// A random interval with log-uniform width anywhere in `[1, 2^k]`.
pub fn random_interval<R: Rng>(k: u32, rng: &mut R) -> (u64, u64) {
    interval_with_width(k, 1, round_len(k), rng)
}

/// A random next-slot query whose width keeps both the slot scan (about
/// `n / width` steps) and the rank scan (`width` steps) short.
pub fn random_query<R: Rng>(k: u32, rng: &mut R) -> SlotQuery {
    let n = round_len(k);
    let (r1, r2) = interval_with_width(k, n / QUERY_SCAN_LIMIT, QUERY_SCAN_LIMIT, rng);
    let t = rng.random_range(0..n);
    SlotQuery::new(k, t, r1, r2).expect("valid by construction")
}

/// Involution, bijection and agreement with the bit-by-bit reference.
pub fn check_rev_bits(rev: RevFn, k: u32) -> SuiteReport {
    let mut rep = SuiteReport::new(format!("rev-bits k={k}"));
    let n = round_len(k);
    let mut seen = vec![false; n as usize];
    for x in 0..n {
        let y = rev(k, x);
        rep.check(y < n && rev(k, y) == x, || {
            format!("involution fails at x={x}")
        });
        rep.check(y == rev_loop(k, x), || {
            format!("reference differs at x={x}")
        });
        if y < n {
            rep.check(!std::mem::replace(&mut seen[y as usize], true), || {
                format!("{y} hit twice")
            });
        }
    }
    rep
}

/// Random involution checks at large `k`.
pub fn check_rev_bits_random<R: Rng>(rev: RevFn, k: u32, samples: u64, rng: &mut R) -> SuiteReport {
    let mut rep = SuiteReport::new(format!("rev-bits random k={k}"));
    let n = round_len(k);
    for _ in 0..samples {
        let x = rng.random_range(0..n);
        let y = rev(k, x);
        rep.check(y == rev_loop(k, x) && rev(k, y) == x, || format!("x={x}"));
    }
    rep
}

fn check_min_max(rep: &mut SuiteReport, rev: RevFn, k: u32, r1: u64, r2: u64) {
    let (lo, hi) = (min_rev(k, r1, r2), max_rev(k, r1, r2));
    rep.check(lo == brute_min_rev(rev, k, r1, r2), || {
        format!("min k={k} [{r1},{r2}] gave {lo}")
    });
    rep.check(hi == brute_max_rev(rev, k, r1, r2), || {
        format!("max k={k} [{r1},{r2}] gave {hi}")
    });
}

/// Every interval at `k`, against a running brute-force minimum and maximum.
pub fn check_min_max_exhaustive(rev: RevFn, k: u32) -> SuiteReport {
    let n = round_len(k);
    (0..n)
        .into_par_iter()
        .map(|r1| {
            let mut rep = SuiteReport::new(format!("min/max rev-bits k={k}"));
            let (mut lo, mut hi) = (u64::MAX, 0);
            for r2 in r1..n {
                let s = rev(k, r2);
                lo = lo.min(s);
                hi = hi.max(s);
                let (a, b) = (min_rev(k, r1, r2), max_rev(k, r1, r2));
                rep.check(a == lo && b == hi, || {
                    format!("k={k} [{r1},{r2}] gave ({a},{b}), brute force ({lo},{hi})")
                });
            }
            rep
        })
        .reduce(
            || SuiteReport::new(format!("min/max rev-bits k={k}")),
            SuiteReport::merge,
        )
}

pub fn check_min_max_random<R: Rng>(rev: RevFn, k: u32, samples: u64, rng: &mut R) -> SuiteReport {
    let mut rep = SuiteReport::new(format!("min/max rev-bits random k={k}"));
    for _ in 0..samples {
        let (r1, r2) = random_interval(k, rng);
        check_min_max(&mut rep, rev, k, r1, r2);
    }
    rep
}

fn check_query(rep: &mut SuiteReport, q: &SlotQuery) {
    let naive = next_slot_naive(q);
    let reverse = next_slot_reverse(q);
    let (poly, iterations) = polylog_counted(q);
    rep.check(naive == reverse && reverse == poly, || {
        format!("{q:?}: naive {naive}, reverse {reverse}, polylog {poly}")
    });
    rep.check(iterations <= q.bits(), || {
        format!("{q:?}: polylog took {iterations} iterations")
    });
}

/// All `(t, r1, r2)` at `k`.
pub fn check_next_slot_exhaustive(k: u32) -> SuiteReport {
    let n = round_len(k);
    (0..n)
        .into_par_iter()
        .map(|t| {
            let mut rep = SuiteReport::new(format!("next-slot k={k}"));
            for r1 in 0..n {
                for r2 in r1..n {
                    check_query(&mut rep, &SlotQuery::new(k, t, r1, r2).expect("valid"));
                }
            }
            rep
        })
        .reduce(
            || SuiteReport::new(format!("next-slot k={k}")),
            SuiteReport::merge,
        )
}

/// `samples` random queries at `k`, spread over worker threads with one
/// derived stream each.
pub fn check_next_slot_random(k: u32, samples: u64, seed: u64) -> SuiteReport {
    const CHUNK: u64 = 4096;
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(k));
            rng.set_stream(c);
            let mut rep = SuiteReport::new(format!("next-slot random k={k}"));
            for _ in 0..CHUNK.min(samples - c * CHUNK) {
                check_query(&mut rep, &random_query(k, &mut rng));
            }
            rep
        })
        .reduce(
            || SuiteReport::new(format!("next-slot random k={k}")),
            SuiteReport::merge,
        )
}

/// Reception and latency bounds for every start slot and every absent-key
/// gap, on the reliable trace.
pub fn check_reception_bound(k: u32) -> SuiteReport {
    let n = round_len(k);
    let keys: Vec<u64> = (0..n).map(|r| 2 * r + 1).collect();
    let bound = 2 * u64::from(k) + 2;
    (0..=n)
        .into_par_iter()
        .map(|gap| {
            let mut rep = SuiteReport::new(format!("reception bound k={k}"));
            for t0 in 0..n {
                let trace = run_reliable_trace(k, &keys, &(2 * gap), t0).expect("valid round");
                let (e, elapsed) = (trace.energy(), trace.elapsed(k, t0));
                rep.check(
                    trace.outcome == TraceOutcome::Absent && e <= bound && elapsed <= n,
                    || format!("gap={gap} t0={t0}: {e} receptions, {elapsed} slots"),
                );
            }
            rep
        })
        .reduce(
            || SuiteReport::new(format!("reception bound k={k}")),
            SuiteReport::merge,
        )
}

/// Receptions of the worst-case search: key just above rank `n/2`, first
/// listened slot 2.
pub fn worst_case_receptions(k: u32) -> u64 {
    let n = round_len(k);
    let keys: Vec<u64> = (0..n).map(|r| 10 * r).collect();
    let key = 10 * (n / 2) + 5;
    run_reliable_trace(k, &keys, &key, 1)
        .expect("valid round")
        .energy()
}

pub fn check_worst_case(k: u32) -> SuiteReport {
    let mut rep = SuiteReport::new(format!("worst case k={k}"));
    let e = worst_case_receptions(k);
    let want = 2 * u64::from(k) - 1;
    rep.check(e == want, || format!("{e} receptions, expected {want}"));
    rep
}

/// The state machine with no margins on a perfect channel listens to the
/// same slots as the reliable trace.
pub fn check_fsm_trace(k: u32) -> SuiteReport {
    let mut rep = SuiteReport::new(format!("fsm/trace k={k}"));
    let n = round_len(k);
    let keys: Vec<u64> = (0..n).map(|r| 2 * r + 1).collect();
    let env = FsmEnvironment::ideal(100);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for gap in 0..=n {
        for t0 in 0..n {
            let trace = run_reliable_trace(k, &keys, &(2 * gap), t0).expect("valid round");
            let mut heard = Vec::new();
            let lossless = ChannelModel::lossless();
            simulate_fsm(k, gap, t0, lossless, &env, 1.0, &mut rng, Some(&mut heard));
            rep.check(heard == trace.slots, || {
                format!("gap={gap} t0={t0}: fsm {heard:?}, trace {:?}", trace.slots)
            });
        }
    }
    rep
}

/// Lossless bare simulation at large `k` keeps the reception bound.
pub fn check_bound_random<R: Rng>(k: u32, samples: u64, rng: &mut R) -> SuiteReport {
    let mut rep = SuiteReport::new(format!("reception bound random k={k}"));
    let n = round_len(k);
    let bound = 2 * u64::from(k) + 2;
    for _ in 0..samples {
        let (gap, t0) = (rng.random_range(0..=n), rng.random_range(0..n));
        let m = simulate_bare(
            k,
            gap,
            t0,
            ChannelModel::lossless(),
            RetryPolicy::default(),
            rng,
            None,
        );
        rep.check(m.receptions <= bound && m.elapsed_slots <= n, || {
            format!("gap={gap} t0={t0}: {m:?}")
        });
    }
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    pub max_k: u32,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("max-k must be in 1..={MAX_RANDOM_BITS}, got {0}")]
pub struct VerifyRangeError(pub u32);

impl VerifyConfig {
    pub fn new(max_k: u32, samples: u64, seed: u64) -> Result<Self, VerifyRangeError> {
        if !(1..=MAX_RANDOM_BITS).contains(&max_k) {
            return Err(VerifyRangeError(max_k));
        }
        Ok(Self {
            max_k,
            samples,
            seed,
        })
    }
}

/// Runs every suite, exhaustive up to the per-suite limits and random above
/// them, folding per-`k` results into one report per suite.
pub fn run_suites(cfg: &VerifyConfig, rev: RevFn) -> Vec<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let exhaustive = cfg.max_k.min(MAX_EXHAUSTIVE_BITS);
    let randomized = exhaustive + 1..=cfg.max_k;
    let fold = |name: &str, parts: Vec<SuiteReport>| {
        parts
            .into_iter()
            .fold(SuiteReport::new(name), SuiteReport::merge)
    };

    let mut parts = Vec::new();
    for k in 1..=exhaustive.min(16) {
        parts.push(check_rev_bits(rev, k));
    }
    for k in randomized.clone() {
        parts.push(check_rev_bits_random(rev, k, cfg.samples, &mut rng));
    }
    let involution = fold("involution/bijection", parts);

    let mut parts = Vec::new();
    for k in 1..=exhaustive {
        parts.push(check_min_max_exhaustive(rev, k));
    }
    for k in randomized.clone() {
        parts.push(check_min_max_random(rev, k, cfg.samples, &mut rng));
    }
    let min_max = fold("min/max rev-bits oracle", parts);

    let mut parts = Vec::new();
    for k in 1..=cfg.max_k.min(NEXT_SLOT_EXHAUSTIVE_BITS) {
        parts.push(check_next_slot_exhaustive(k));
    }
    for k in NEXT_SLOT_EXHAUSTIVE_BITS + 1..=cfg.max_k {
        parts.push(check_next_slot_random(k, cfg.samples, cfg.seed));
    }
    let next_slot = fold("next-slot three-way agreement", parts);

    let mut parts = Vec::new();
    for k in 1..=exhaustive {
        parts.push(check_reception_bound(k));
    }
    for k in randomized {
        parts.push(check_bound_random(k, cfg.samples, &mut rng));
    }
    let bound = fold("reception bound", parts);

    let worst = fold(
        "worst-case sharpness",
        (5..=12).map(check_worst_case).collect(),
    );

    vec![involution, min_max, next_slot, bound, worst]
}
