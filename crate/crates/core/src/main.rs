use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rbo::bitrev::{bs_order, round_len};
use rbo::next_slot::{dispatch, next_slot_with, SlotQuery, Strategy};
use rbo::sim::{
    run_experiment, write_csv, ExperimentSpec, FsmEnvironment, RetryPolicy, SimMode, MAX_SIM_BITS,
};
use rbo::verify::{library_rev, run_suites, VerifyConfig};

#[derive(Parser)]
#[command(
    name = "rbo",
    version,
    about = "Bit-reversal broadcast: queries, checks and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// First slot after T whose rank lies in [R1, R2].
    NextSlot {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        t: u64,
        #[arg(long)]
        r1: u64,
        #[arg(long)]
        r2: u64,
        #[arg(long, default_value = "auto")]
        strategy: Strategy,
    },
    /// Run the oracle suites.
    Verify {
        #[arg(long, default_value_t = 8)]
        max_k: u32,
        /// Random samples per suite and k above the exhaustive range.
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_mutant: bool,
    },
    /// Monte-Carlo energy experiment, one CSV row per (k, p).
    Simulate {
        #[arg(long, default_value_t = 10)]
        k_min: u32,
        #[arg(long, default_value_t = 16)]
        k_max: u32,
        /// Comma-separated reception probabilities.
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.75,1")]
        p: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Bare)]
        mode: ModeArg,
        #[arg(long, default_value = "next-in-interval")]
        retry_policy: RetryPolicy,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; all cores when omitted.
        #[arg(long)]
        threads: Option<usize>,
        /// Slot length for the fsm mode.
        #[arg(long, default_value_t = 100)]
        slot_ms: u32,
        /// Receiver clock rate spread for the fsm mode, e.g. 0.001.
        #[arg(long, default_value_t = 0.0)]
        skew: f64,
        /// Radio switching latency for the fsm mode.
        #[arg(long, default_value_t = 1.0)]
        switch_latency_ms: f64,
    },
    /// Print, for each rank, its bit-reversal slot and binary-search-order slot.
    ScheduleDump {
        #[arg(long)]
        k: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Bare,
    Fsm,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn mutant_rev(k: u32, x: u64) -> u64 {
    let y = library_rev(k, x);
    if k >= 2 {
        y ^ ((x >> 1) & 1)
    } else {
        y
    }
}

fn next_slot_cmd(k: u32, t: u64, r1: u64, r2: u64, strategy: Strategy) -> Result<(), Failure> {
    let q = SlotQuery::new(k, t, r1, r2).map_err(|e| Failure::Usage(e.to_string()))?;
    let used = match strategy {
        Strategy::Auto => dispatch(&q),
        s => s,
    };
    let slot = next_slot_with(&q, used);
    println!(
        "slot={slot} distance={} strategy={used}",
        q.distance_to(slot)
    );
    Ok(())
}

fn verify_cmd(max_k: u32, samples: u64, seed: u64, mutant: bool) -> Result<(), Failure> {
    let cfg = VerifyConfig::new(max_k, samples, seed).map_err(|e| Failure::Usage(e.to_string()))?;
    let rev = if mutant { mutant_rev } else { library_rev };
    let reports = run_suites(&cfg, rev);
    let mut failed = 0;
    for r in &reports {
        println!("{r}");
        failed += usize::from(!r.passed());
    }
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} suite(s) failed")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(
    k_min: u32,
    k_max: u32,
    p: Vec<f64>,
    trials: u64,
    seed: u64,
    mode: ModeArg,
    retry: RetryPolicy,
    out: Option<PathBuf>,
    threads: Option<usize>,
    slot_ms: u32,
    skew: f64,
    switch_latency_ms: f64,
) -> Result<(), Failure> {
    let usage = |m: String| Err(Failure::Usage(m));
    if k_min < 1 || k_min > k_max || k_max > MAX_SIM_BITS {
        return usage(format!("need 1 <= k-min <= k-max <= {MAX_SIM_BITS}"));
    }
    if p.is_empty() || p.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return usage("every p must be in (0, 1]".into());
    }
    if trials == 0 {
        return usage("trials must be positive".into());
    }
    if !(0.0..0.5).contains(&skew)
        || switch_latency_ms.is_nan()
        || switch_latency_ms < 0.0
        || slot_ms == 0
    {
        return usage("need 0 <= skew < 0.5, switch-latency-ms >= 0, slot-ms > 0".into());
    }
    let mode = match mode {
        ModeArg::Bare => SimMode::Bare,
        ModeArg::Fsm => SimMode::Fsm(FsmEnvironment {
            clock_skew: skew,
            switch_latency_ms,
            ..FsmEnvironment::new(slot_ms)
        }),
    };
    let spec = ExperimentSpec {
        k_min,
        k_max,
        p_list: p,
        trials,
        master_seed: seed,
        mode,
        retry,
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return usage("threads must be positive".into());
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Runtime(e.to_string()))?;
    let rows = pool.install(|| run_experiment(&spec));

    let csv_err = |e: csv::Error| Failure::Runtime(e.to_string());
    match &out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            write_csv(&rows, BufWriter::new(file)).map_err(csv_err)?;
            for r in &rows {
                println!(
                    "k={} p={} mean_energy={:.4} std_energy={:.4} mean_slots={:.2} bound={}",
                    r.k,
                    r.p,
                    r.mean_energy,
                    r.std_energy,
                    r.mean_slots,
                    2 * r.k + 2
                );
            }
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => write_csv(&rows, io::stdout().lock()).map_err(csv_err)?,
    }
    Ok(())
}

fn schedule_dump_cmd(k: u32) -> Result<(), Failure> {
    if !(1..=20).contains(&k) {
        return Err(Failure::Usage("k must be in 1..=20".into()));
    }
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "rank,rev_slot,bs_slot")?;
    for rank in 0..round_len(k) {
        let rev = rbo::rev_bits(k, rank).expect("in range");
        let bs = bs_order(k, rank).expect("in range");
        writeln!(out, "{rank},{rev},{bs}")?;
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::NextSlot {
            k,
            t,
            r1,
            r2,
            strategy,
        } => next_slot_cmd(k, t, r1, r2, strategy),
        Command::Verify {
            max_k,
            samples,
            seed,
            inject_mutant,
        } => verify_cmd(max_k, samples, seed, inject_mutant),
        Command::Simulate {
            k_min,
            k_max,
            p,
            trials,
            seed,
            mode,
            retry_policy,
            out,
            threads,
            slot_ms,
            skew,
            switch_latency_ms,
        } => simulate_cmd(
            k_min,
            k_max,
            p,
            trials,
            seed,
            mode,
            retry_policy,
            out,
            threads,
            slot_ms,
            skew,
            switch_latency_ms,
        ),
        Command::ScheduleDump { k } => schedule_dump_cmd(k),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
