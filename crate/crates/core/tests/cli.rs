use std::path::Path;
use std::process::{Command, Output};

use rbo::sim::{cell_seed, run_trial, TrialConfig, CSV_HEADER};

fn rbo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn next_slot_examples() {
    let o = rbo(&[
        "next-slot",
        "--k",
        "3",
        "--t",
        "0",
        "--r1",
        "2",
        "--r2",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    assert!(
        stdout(&o).starts_with("slot=2 distance=2 "),
        "{}",
        stdout(&o)
    );

    let o = rbo(&[
        "next-slot",
        "--k",
        "5",
        "--t",
        "13",
        "--r1",
        "0",
        "--r2",
        "31",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("slot=14 distance=1 "));

    for s in ["naive", "reverse", "polylog", "auto"] {
        let o = rbo(&[
            "next-slot",
            "--k",
            "10",
            "--t",
            "517",
            "--r1",
            "100",
            "--r2",
            "101",
            "--strategy",
            s,
        ]);
        assert_eq!(code(&o), 0);
        assert!(
            stdout(&o).starts_with("slot=664 distance=147 "),
            "{s}: {}",
            stdout(&o)
        );
    }
}

#[test]
fn next_slot_usage_errors() {
    let inverted = rbo(&[
        "next-slot",
        "--k",
        "3",
        "--t",
        "0",
        "--r1",
        "5",
        "--r2",
        "2",
    ]);
    assert_eq!(code(&inverted), 2);
    assert!(!inverted.stderr.is_empty());
    assert_eq!(
        code(&rbo(&[
            "next-slot",
            "--k",
            "3",
            "--t",
            "8",
            "--r1",
            "0",
            "--r2",
            "1"
        ])),
        2
    );
    assert_eq!(
        code(&rbo(&[
            "next-slot",
            "--k",
            "0",
            "--t",
            "0",
            "--r1",
            "0",
            "--r2",
            "0"
        ])),
        2
    );
    assert_eq!(
        code(&rbo(&["next-slot", "--k", "3", "--t", "0", "--r1", "0"])),
        2
    );
    assert_eq!(
        code(&rbo(&[
            "next-slot",
            "--k",
            "3",
            "--t",
            "0",
            "--r1",
            "0",
            "--r2",
            "1",
            "--strategy",
            "fast"
        ])),
        2
    );
    assert_eq!(code(&rbo(&["frobnicate"])), 2);
}

#[test]
fn verify_passes_and_catches_a_mutant() {
    let o = rbo(&["verify", "--max-k", "8"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(
        out.lines().filter(|l| l.starts_with("PASS ")).count(),
        5,
        "{out}"
    );

    assert_eq!(code(&rbo(&["verify", "--max-k", "8", "--samples", "0"])), 0);

    let o = rbo(&["verify", "--max-k", "6", "--inject-mutant"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL "));

    assert_eq!(code(&rbo(&["verify", "--max-k", "26"])), 2);
}

fn simulate_to(path: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    rbo(&args)
}

#[test]
fn simulate_writes_bounded_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let o = simulate_to(
        &path,
        &[
            "--k-min", "10", "--k-max", "14", "--p", "1", "--trials", "1000", "--seed", "7",
        ],
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("wrote 5 rows"));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("k,p,trials,mean_energy,std_energy,mean_slots,seed")
    );
    assert_eq!(
        CSV_HEADER,
        "k,p,trials,mean_energy,std_energy,mean_slots,seed"
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for (i, row) in rows.iter().enumerate() {
        let k: u32 = row[0].parse().unwrap();
        assert_eq!(k, 10 + i as u32);
        assert_eq!(row[2], "1000");
        assert_eq!(row[6], "7");
        let mean: f64 = row[3].parse().unwrap();
        assert!(mean <= f64::from(2 * k + 2));
    }
}

#[test]
fn single_trial_row_is_that_trial() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    let args = [
        "--k-min", "12", "--k-max", "12", "--p", "0.5", "--trials", "1", "--seed", "3",
    ];
    assert_eq!(code(&simulate_to(&path, &args)), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();

    let m = run_trial(&TrialConfig::bare(12, 0.5, cell_seed(3, 12, 0.5)));
    assert_eq!(row[3].parse::<f64>().unwrap(), m.receptions as f64);
    assert_eq!(row[4].parse::<f64>().unwrap(), 0.0);
    assert_eq!(row[5].parse::<f64>().unwrap(), m.elapsed_slots as f64);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--k-min", "6", "--k-max", "9", "--p", "0.5,1", "--trials", "500", "--seed", "5",
    ];
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(code(&simulate_to(&a, &args)), 0);
    assert_eq!(code(&simulate_to(&b, &args)), 0);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());

    let fsm = [
        "--mode",
        "fsm",
        "--skew",
        "0.001",
        "--retry-policy",
        "next-slot",
    ];
    let c = dir.path().join("c.csv");
    let d = dir.path().join("d.csv");
    assert_eq!(code(&simulate_to(&c, &[&args[..], &fsm[..]].concat())), 0);
    assert_eq!(
        code(&simulate_to(
            &d,
            &[&args[..], &fsm[..], &["--threads", "1"]].concat()
        )),
        0
    );
    assert_eq!(std::fs::read(c).unwrap(), std::fs::read(d).unwrap());
}

#[test]
fn simulate_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unwritable = dir.path().join("missing").join("x.csv");
    let small = ["--k-min", "3", "--k-max", "3", "--trials", "10"];
    assert_eq!(code(&simulate_to(&unwritable, &small)), 1);

    let ok = dir.path().join("ok.csv");
    for bad in [
        &["--k-min", "5", "--k-max", "4"][..],
        &["--k-min", "0", "--k-max", "4"],
        &["--k-min", "3", "--k-max", "41"],
        &["--p", "0"],
        &["--p", "1.5"],
        &["--trials", "0"],
        &["--mode", "radio"],
        &["--retry-policy", "never"],
        &["--skew", "0.9", "--mode", "fsm"],
    ] {
        let args = [&small[..], bad].concat();
        assert_eq!(code(&simulate_to(&ok, &args)), 2, "{bad:?}");
    }
}

#[test]
fn simulate_without_out_prints_csv() {
    let o = rbo(&[
        "simulate", "--k-min", "4", "--k-max", "4", "--p", "1", "--trials", "20",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some(CSV_HEADER));
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn schedule_dump_lists_the_permutations() {
    let o = rbo(&["schedule-dump", "--k", "3"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "rank,rev_slot,bs_slot");
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[2], "1,4,4");
    assert_eq!(lines[4], "3,6,5");
    assert_eq!(code(&rbo(&["schedule-dump", "--k", "0"])), 2);
}
