//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the verdict lines are always shown; exits nonzero if any
//! criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbo::protocol::{RboMessage, WireError, HEADER_LEN, MAX_PAYLOAD};
use rbo::sim::{run_experiment, ExperimentSpec, RetryPolicy, SimMode};
use rbo::verify::{
    check_fsm_trace, check_min_max_exhaustive, check_min_max_random, check_next_slot_exhaustive,
    check_next_slot_random, check_reception_bound, check_worst_case, library_rev, SuiteReport,
};
use rbo::{max_rev_bits, min_rev_bits, round_len};

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn from_reports(reports: &[SuiteReport], extra: &str) -> Self {
        let cases: u64 = reports.iter().map(|r| r.cases).sum();
        let failures: u64 = reports.iter().map(|r| r.failures).sum();
        let first = reports
            .iter()
            .find_map(|r| {
                r.first_failure
                    .as_ref()
                    .map(|f| format!("; {}: {f}", r.name))
            })
            .unwrap_or_default();
        Self {
            passed: failures == 0,
            detail: format!("{cases} cases, {failures} failures{extra}{first}"),
        }
    }

    fn fail(&mut self, msg: String) {
        self.passed = false;
        self.detail.push_str("; ");
        self.detail.push_str(&msg);
    }
}

fn within(v: &mut Verdict, elapsed: Duration, limit: Duration, what: &str) {
    if elapsed > limit {
        v.fail(format!("{what} took {elapsed:.1?}, limit {limit:?}"));
    }
}

fn reception_bound() -> Verdict {
    let start = Instant::now();
    let reports: Vec<_> = (1..=8).map(check_reception_bound).collect();
    let took = start.elapsed();
    let mut v = Verdict::from_reports(&reports, &format!(", {took:.1?}"));
    within(&mut v, took, Duration::from_secs(120), "exhaustive run");
    v
}

fn worst_case() -> Verdict {
    let reports: Vec<_> = (5..=12).map(check_worst_case).collect();
    Verdict::from_reports(&reports, "")
}

fn next_slot_equivalence() -> Verdict {
    let mut reports: Vec<_> = (1..=8).map(check_next_slot_exhaustive).collect();
    let start = Instant::now();
    for k in [10, 15, 20, 25] {
        reports.push(check_next_slot_random(k, 100_000, 0x5eed));
    }
    let took = start.elapsed();
    let mut v = Verdict::from_reports(&reports, &format!(", random part {took:.1?}"));
    within(&mut v, took, Duration::from_secs(60), "randomized part");
    v
}

fn min_max_oracle() -> Verdict {
    let mut reports: Vec<_> = (1..=10)
        .map(|k| check_min_max_exhaustive(library_rev, k))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    reports.push(check_min_max_random(library_rev, 30, 100_000, &mut rng));

    // The reflection x -> 2^k - 1 - x maps max onto min; the variant without
    // the -1 disagrees with brute force.
    let mut unshifted_wrong = 0u64;
    let mut compared = 0u64;
    for k in 1..=10u32 {
        let n = round_len(k);
        for r1 in 1..n {
            for r2 in r1..n {
                let max = max_rev_bits(k, r1, r2).unwrap();
                let reflected = n - 1 - min_rev_bits(k, n - 1 - r2, n - 1 - r1).unwrap();
                assert_eq!(max, reflected);
                let unshifted = n - min_rev_bits(k, n - r2, n - r1).unwrap();
                compared += 1;
                unshifted_wrong += u64::from(unshifted != max);
            }
        }
    }
    let mut v = Verdict::from_reports(
        &reports,
        &format!(", reflection form exact, unshifted form wrong on {unshifted_wrong}/{compared}"),
    );
    if unshifted_wrong == 0 {
        v.fail("unshifted form unexpectedly agrees everywhere".into());
    }
    v
}

fn energy_regime() -> Verdict {
    let start = Instant::now();
    let ps = [0.5, 0.75, 1.0];
    let trials = 10_000u64;
    let rows = run_experiment(&ExperimentSpec {
        k_min: 10,
        k_max: 16,
        p_list: ps.to_vec(),
        trials,
        master_seed: 7,
        mode: SimMode::Bare,
        retry: RetryPolicy::NextInInterval,
    });
    let took = start.elapsed();
    let mut v = Verdict {
        passed: true,
        detail: format!("{} cells x {trials} trials, {took:.1?}", rows.len()),
    };
    let se = |std: f64| std / (trials as f64).sqrt();
    for k in 10..=16u32 {
        let cell: Vec<_> = rows.iter().filter(|r| r.k == k).collect();
        let kf = f64::from(k);
        let lossless = cell.iter().find(|r| r.p == 1.0).unwrap();
        if !(kf + 1.0..=2.0 * kf + 2.0).contains(&lossless.mean_energy) {
            v.fail(format!("k={k} p=1 mean {:.3}", lossless.mean_energy));
        }
        for w in cell.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let margin = 3.0 * se(lo.std_energy).hypot(se(hi.std_energy));
            if lo.mean_energy - hi.mean_energy <= margin {
                v.fail(format!(
                    "k={k}: mean at p={} ({:.3}) not above p={} ({:.3}) by 3 sigma",
                    lo.p, lo.mean_energy, hi.p, hi.mean_energy
                ));
            }
        }
        for r in cell.iter().filter(|r| r.p < 1.0) {
            let bound = (1.0 / (r.p * r.p) - 0.5) * round_len(k) as f64 + 3.0 * se(r.std_slots);
            if r.mean_slots > bound {
                v.fail(format!(
                    "k={k} p={}: mean slots {:.1} > {bound:.1}",
                    r.p, r.mean_slots
                ));
            }
        }
    }
    within(&mut v, took, Duration::from_secs(600), "experiment");
    v
}

fn fsm_trace_equivalence() -> Verdict {
    let reports: Vec<_> = (1..=6).map(check_fsm_trace).collect();
    Verdict::from_reports(&reports, "")
}

/// Header bytes assembled field by field from the documented layout.
fn golden_header(seq: u32, k: u8, slot_ms: u32, key: u64, rank: u64, len: u16) -> Vec<u8> {
    let mut h = Vec::new();
    h.extend(seq.to_le_bytes());
    h.push(k);
    h.extend(slot_ms.to_le_bytes());
    h.extend(key.to_le_bytes());
    h.extend(rank.to_le_bytes());
    h.extend(len.to_le_bytes());
    h
}

fn wire_codec() -> Verdict {
    let mut failures = Vec::new();
    let mut cases = 0u64;
    let mut check = |ok: bool, what: &str| {
        cases += 1;
        if !ok {
            failures.push(what.to_string());
        }
    };

    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        any::<u32>(),
        0u8..=63,
        any::<u32>(),
        any::<u64>(),
        any::<u64>(),
        proptest::collection::vec(any::<u8>(), 0..=MAX_PAYLOAD),
    );
    let random = runner.run(&strategy, |(seq, k, slot_ms, key, rank, payload)| {
        let m = RboMessage {
            sequence_id: seq,
            log_sequence_length: k,
            time_slot_length: slot_ms,
            key,
            rank: rank & (round_len(u32::from(k)) - 1),
            payload,
        };
        let bytes = m.encode().unwrap();
        prop_assert_eq!(bytes.len(), HEADER_LEN + m.payload.len());
        prop_assert_eq!(RboMessage::decode(&bytes).unwrap(), m);
        Ok(())
    });
    check(random.is_ok(), &format!("random roundtrip: {random:?}"));

    let golden = [
        (
            RboMessage {
                sequence_id: 1,
                log_sequence_length: 3,
                time_slot_length: 100,
                key: 42,
                rank: 5,
                payload: vec![],
            },
            vec![
                1, 0, 0, 0, 3, 100, 0, 0, 0, 42, 0, 0, 0, 0, 0, 0, 0, 5, 0, 0, 0, 0, 0, 0, 0, 0, 0,
            ],
        ),
        (
            RboMessage {
                sequence_id: 0x0403_0201,
                log_sequence_length: 63,
                time_slot_length: 0xdead_beef,
                key: u64::MAX,
                rank: (1 << 63) - 1,
                payload: vec![0xaa, 0xbb],
            },
            [
                golden_header(0x0403_0201, 63, 0xdead_beef, u64::MAX, (1 << 63) - 1, 2),
                vec![0xaa, 0xbb],
            ]
            .concat(),
        ),
    ];
    for (m, bytes) in &golden {
        check(m.encode().as_ref() == Ok(bytes), "golden encode");
        check(RboMessage::decode(bytes).as_ref() == Ok(m), "golden decode");
    }
    check(
        golden[0].1.len() == 27 && HEADER_LEN == 27,
        "27-byte header",
    );

    let max_payload = RboMessage {
        sequence_id: 9,
        log_sequence_length: 10,
        rank: 1023,
        payload: vec![7; MAX_PAYLOAD],
        ..Default::default()
    };
    let bytes = max_payload.encode().unwrap();
    check(
        bytes[..HEADER_LEN] == golden_header(9, 10, 0, 0, 1023, 1024)[..],
        "max payload header",
    );
    check(
        RboMessage::decode(&bytes).as_ref() == Ok(&max_payload),
        "max payload roundtrip",
    );
    let too_big = RboMessage {
        payload: vec![0; MAX_PAYLOAD + 1],
        ..max_payload.clone()
    };
    check(
        too_big.encode() == Err(WireError::PayloadTooLarge(MAX_PAYLOAD + 1)),
        "oversized payload",
    );
    let overflow = RboMessage {
        rank: 1024,
        ..max_payload.clone()
    };
    check(overflow.encode().is_err(), "rank overflow rejected");
    check(
        RboMessage::decode(&bytes[..HEADER_LEN - 1]).is_err(),
        "truncated header",
    );
    check(
        RboMessage::decode(&bytes[..bytes.len() - 1]).is_err(),
        "truncated payload",
    );

    let flagged = RboMessage {
        sequence_id: 0,
        ..golden[0].0.clone()
    };
    let decoded = RboMessage::decode(&flagged.encode().unwrap()).unwrap();
    check(
        decoded == flagged && decoded.is_bad(),
        "sequence id 0 roundtrips as bad",
    );
    check(!golden[0].0.is_bad(), "nonzero sequence id is good");

    Verdict {
        passed: failures.is_empty(),
        detail: format!(
            "{cases} checks (10000 random messages), {} failures{}",
            failures.len(),
            failures
                .first()
                .map(|f| format!("; {f}"))
                .unwrap_or_default()
        ),
    }
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_rbo"))
            .args([
                "simulate",
                "--k-min",
                "8",
                "--k-max",
                "12",
                "--p",
                "0.5,0.75,1",
            ])
            .args([
                "--trials",
                "2000",
                "--seed",
                "99",
                "--threads",
                threads,
                "--out",
            ])
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{status:?}");
        std::fs::read(out).unwrap()
    };
    let many = std::thread::available_parallelism().map_or(4, |n| n.get().max(2));
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", &many.to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = run("d.csv", &rng.random_range(2..=8usize).to_string());
    let passed = a == b && a == c && a == d && !a.is_empty();
    Verdict {
        passed,
        detail: format!(
            "{} bytes; threads 1 vs 1 {}, 1 vs {many} {}, 1 vs other {}",
            a.len(),
            a == b,
            a == c,
            a == d
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("reception bound, exhaustive k<=8", reception_bound),
        ("worst-case sharpness k=5..12", worst_case),
        ("next-slot strategies agree", next_slot_equivalence),
        ("min/max rev-bits oracle", min_max_oracle),
        ("energy regime k=10..16", energy_regime),
        ("fsm matches reliable trace k<=6", fsm_trace_equivalence),
        ("wire codec", wire_codec),
        ("simulate determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || id == *f) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let verdict = if v.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {id} ({name}): {} [{:.1?}]",
            v.detail,
            start.elapsed()
        );
        all &= v.passed;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
