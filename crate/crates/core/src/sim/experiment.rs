use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{run_trial, ChannelModel, RetryPolicy, SimMode, TrialConfig};

pub const CSV_HEADER: &str = "k,p,trials,mean_energy,std_energy,mean_slots,seed";

/// A grid of `(k, p)` cells, `trials` trials each.
///
/// Trial `i` of the cell for `(k, p)` draws from ChaCha8 seeded with
/// `cell_seed(master_seed, k, p)` on stream `i`, so any single trial can be
/// replayed and results do not depend on thread count or scheduling.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub k_min: u32,
    pub k_max: u32,
    pub p_list: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    pub mode: SimMode,
    pub retry: RetryPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub k: u32,
    pub p: f64,
    pub trials: u64,
    pub mean_energy: f64,
    pub std_energy: f64,
    pub mean_slots: f64,
    #[serde(skip)]
    pub std_slots: f64,
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the cell `(k, p)`.
pub fn cell_seed(master_seed: u64, k: u32, p: f64) -> u64 {
    splitmix64(splitmix64(master_seed ^ u64::from(k)) ^ p.to_bits())
}

#[derive(Default, Clone, Copy)]
struct Sums {
    n: u64,
    energy: u128,
    energy_sq: u128,
    slots: u128,
    slots_sq: u128,
}

impl Sums {
    fn add(self, o: Sums) -> Sums {
        Sums {
            n: self.n + o.n,
            energy: self.energy + o.energy,
            energy_sq: self.energy_sq + o.energy_sq,
            slots: self.slots + o.slots,
            slots_sq: self.slots_sq + o.slots_sq,
        }
    }
}

/// Mean and sample standard deviation from exact integer sums.
fn moments(n: u64, sum: u128, sum_sq: u128) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = sum as f64 / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    // n * sum_sq - sum^2 is exact in u128 for the sizes simulated here
    let num = (u128::from(n) * sum_sq).saturating_sub(sum * sum);
    let var = num as f64 / (n as f64 * (n - 1) as f64);
    (mean, var.sqrt())
}

/// Runs every cell on the current rayon pool.
///
/// # Panics
/// If a probability is outside `[0, 1]` or a `k` is not simulatable.
pub fn run_experiment(spec: &ExperimentSpec) -> Vec<ExperimentRow> {
    let mut rows = Vec::new();
    for k in spec.k_min..=spec.k_max {
        for &p in &spec.p_list {
            let channel = ChannelModel::new(p).expect("probability in [0, 1]");
            let seed = cell_seed(spec.master_seed, k, p);
            let sums = (0..spec.trials)
                .into_par_iter()
                .map(|i| {
                    let m = run_trial(&TrialConfig {
                        k,
                        channel,
                        mode: spec.mode,
                        retry: spec.retry,
                        seed,
                        stream: i,
                    });
                    let e = u128::from(m.receptions);
                    let s = u128::from(m.elapsed_slots);
                    Sums {
                        n: 1,
                        energy: e,
                        energy_sq: e * e,
                        slots: s,
                        slots_sq: s * s,
                    }
                })
                .reduce(Sums::default, Sums::add);
            let (mean_energy, std_energy) = moments(sums.n, sums.energy, sums.energy_sq);
            let (mean_slots, std_slots) = moments(sums.n, sums.slots, sums.slots_sq);
            rows.push(ExperimentRow {
                k,
                p,
                trials: spec.trials,
                mean_energy,
                std_energy,
                mean_slots,
                std_slots,
                seed: spec.master_seed,
            });
        }
    }
    rows
}

pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(trials: u64) -> ExperimentSpec {
        ExperimentSpec {
            k_min: 3,
            k_max: 4,
            p_list: vec![0.5, 1.0],
            trials,
            master_seed: 11,
            mode: SimMode::Bare,
            retry: RetryPolicy::NextInInterval,
        }
    }

    #[test]
    fn csv_header_and_shape() {
        let rows = run_experiment(&spec(50));
        assert_eq!(rows.len(), 4);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), 4);

        let mut empty = Vec::new();
        write_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim_end(), CSV_HEADER);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| run_experiment(&spec(300)));
        let b = four.install(|| run_experiment(&spec(300)));
        assert_eq!(a, b);
    }

    #[test]
    fn moments_match_direct_computation() {
        let xs = [3u128, 5, 5, 9];
        let (m, s) = moments(4, xs.iter().sum(), xs.iter().map(|x| x * x).sum());
        assert_eq!(m, 5.5);
        let var = xs.iter().map(|&x| (x as f64 - 5.5).powi(2)).sum::<f64>() / 3.0;
        assert!((s - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cells_have_distinct_seeds() {
        assert_ne!(cell_seed(1, 10, 0.5), cell_seed(1, 11, 0.5));
        assert_ne!(cell_seed(1, 10, 0.5), cell_seed(1, 10, 0.75));
        assert_ne!(cell_seed(1, 10, 0.5), cell_seed(2, 10, 0.5));
    }
}
