use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Result};
use clap::Args;
use forcelab::affinity::graph_affinities;
use forcelab::graph::{gen_erdos_renyi, gen_k_regular};
use forcelab::meanfield::{energy_stats, ring_stats, EnergyStats, RingStats};
use forcelab::tsne::{run as run_tsne, OptimizerConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::common::{probability, to_json, usage, write_atomic, OptimizerArgs};
use crate::graph_cmd::ModelArg;

pub const STATS_HEADER: &str =
    "n,p,k,trial,seed,actual,expectation,variance,sigma,mean_radius,radial_cv,annularity";

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Comma-separated vertex counts
    #[arg(long = "n", value_delimiter = ',', default_value = "1000,2000,4000")]
    pub n_values: Vec<usize>,
    /// Comma-separated edge probabilities
    #[arg(long = "p", value_delimiter = ',', default_value = "0.05,0.1", value_parser = probability)]
    pub p_values: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, value_enum, default_value = "k-regular")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Receives stats.csv, manifest.json and trials/
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn cell_seed(base: u64, n: usize, p: f64, trial: usize) -> u64 {
    [n as u64, p.to_bits(), trial as u64]
        .into_iter()
        .fold(splitmix64(base), |h, v| splitmix64(h ^ v))
}

/// `round(n·p)`, lowered by one when `n·k` is odd.
pub fn degree_for(n: usize, p: f64) -> (usize, usize) {
    let requested = (n as f64 * p).round() as usize;
    let k = if n * requested % 2 == 1 { requested - 1 } else { requested };
    (requested, k)
}

#[derive(Serialize, Clone)]
struct CellRecord {
    n: usize,
    p: f64,
    k_requested: Option<usize>,
    k: Option<usize>,
    trial: usize,
    seed: u64,
    optimizer: OptimizerConfig,
    elapsed_seconds: f64,
    energy: Option<EnergyStats>,
    ring: Option<RingStats>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepEcho<'a> {
    n_values: &'a [usize],
    p_values: &'a [f64],
    trials: usize,
    model: &'static str,
    base_seed: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    started_unix: f64,
    finished_unix: f64,
    config: SweepEcho<'a>,
    failures: usize,
    cells: &'a [CellRecord],
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn run_cell(a: &SweepArgs, n: usize, p: f64, trial: usize) -> Result<CellRecord> {
    let seed = cell_seed(a.base_seed, n, p, trial);
    let optimizer = a.optimizer.config(n, seed)?;
    let (k_requested, k) = match a.model {
        ModelArg::KRegular => {
            let (r, k) = degree_for(n, p);
            (Some(r), Some(k))
        }
        ModelArg::Er => (None, None),
    };
    let mut rec = CellRecord {
        n,
        p,
        k_requested,
        k,
        trial,
        seed,
        optimizer,
        elapsed_seconds: 0.0,
        energy: None,
        ring: None,
        error: None,
    };
    let t = Instant::now();
    let outcome = (|| -> forcelab::Result<(EnergyStats, RingStats)> {
        let g = match k {
            Some(k) => gen_k_regular(n, k, seed)?,
            None => gen_erdos_renyi(n, p, seed)?,
        };
        let aff = graph_affinities(&g, true)?;
        let traj = run_tsne(&aff, &optimizer)?;
        Ok((energy_stats(&g, &traj.final_embedding)?, ring_stats(&traj.final_embedding)?))
    })();
    rec.elapsed_seconds = t.elapsed().as_secs_f64();
    match outcome {
        Ok((e, r)) => {
            rec.energy = Some(e);
            rec.ring = Some(r);
        }
        Err(err) => {
            log::warn!("cell n={n} p={p} trial={trial} failed: {err}");
            rec.error = Some(err.to_string());
        }
    }
    let name = format!("n{n}_p{p}_t{trial}.json");
    write_atomic(&a.out_dir.join("trials").join(name), &to_json(&rec)?)?;
    Ok(rec)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn stats_csv(cells: &[CellRecord]) -> String {
    let mut s = String::from(STATS_HEADER);
    s.push('\n');
    for c in cells {
        let (Some(e), Some(r)) = (&c.energy, &c.ring) else {
            continue;
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.n,
            c.p,
            opt(c.k),
            c.trial,
            c.seed,
            e.actual,
            e.expectation,
            e.variance,
            opt(e.sigma),
            r.mean_radius,
            opt(r.radial_cv),
            r.annularity
        );
    }
    s
}

pub fn run(a: &SweepArgs) -> Result<()> {
    if a.trials == 0 {
        return usage("--trials must be at least 1");
    }
    if a.n_values.iter().any(|&n| n < 10) {
        return usage("--n values must be at least 10");
    }
    if a.model == ModelArg::KRegular {
        for &n in &a.n_values {
            for &p in &a.p_values {
                let (_, k) = degree_for(n, p);
                if k == 0 || k >= n {
                    return usage(format!("--n {n} with --p {p} gives an unusable degree {k}"));
                }
            }
        }
    }
    // validate optimizer flags once before spending time
    a.optimizer.config(a.n_values[0], 0)?;

    let started = now();
    let grid: Vec<(usize, f64, usize)> = a
        .n_values
        .iter()
        .flat_map(|&n| a.p_values.iter().flat_map(move |&p| (0..a.trials).map(move |t| (n, p, t))))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(n, p, t)| run_cell(a, n, p, t))
        .collect::<Result<Vec<_>>>()?;

    let failures = cells.iter().filter(|c| c.error.is_some()).count();
    write_atomic(&a.out_dir.join("stats.csv"), stats_csv(&cells).as_bytes())?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        started_unix: started,
        finished_unix: now(),
        config: SweepEcho {
            n_values: &a.n_values,
            p_values: &a.p_values,
            trials: a.trials,
            model: match a.model {
                ModelArg::KRegular => "k_regular",
                ModelArg::Er => "erdos_renyi",
            },
            base_seed: a.base_seed,
        },
        failures,
        cells: &cells,
    };
    write_atomic(&a.out_dir.join("manifest.json"), &to_json(&manifest)?)?;
    if failures > 0 {
        bail!("{failures} of {} sweep cells failed; see manifest.json", cells.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_is_even_adjusted() {
        assert_eq!(degree_for(1000, 0.05), (50, 50));
        assert_eq!(degree_for(101, 0.05), (5, 4));
    }

    #[test]
    fn seeds_differ_per_cell() {
        let a = cell_seed(0, 1000, 0.1, 0);
        assert_ne!(a, cell_seed(0, 1000, 0.1, 1));
        assert_ne!(a, cell_seed(0, 2000, 0.1, 0));
        assert_ne!(a, cell_seed(1, 1000, 0.1, 0));
        assert_eq!(a, cell_seed(0, 1000, 0.1, 0));
    }
}
