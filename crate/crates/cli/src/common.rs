use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use forcelab::affinity::{graph_affinities, perplexity_affinities, AffinityMatrix};
use forcelab::graph::Graph;
use forcelab::io::{read_affinity_csv, read_edge_list, read_points_csv};
use forcelab::tsne::{Init, OptimizerConfig};
use serde::Serialize;

/// Bad flags or inputs; mapped to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

pub fn probability(s: &str) -> std::result::Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err("must lie strictly between 0 and 1".into())
    }
}

pub fn positive(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err("must be a positive number".into())
    }
}

pub fn finite(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err("must be finite".into())
    }
}

/// Where pairwise affinities come from.
#[derive(Args, Debug, Clone)]
pub struct AffinitySource {
    /// Edge-list file; affinities are uniform over edges
    #[arg(long, group = "source")]
    pub graph: Option<PathBuf>,
    /// Point-cloud CSV; requires --perplexity
    #[arg(long, group = "source")]
    pub points: Option<PathBuf>,
    /// Affinity CSV with columns i,j,p
    #[arg(long, group = "source")]
    pub affinity: Option<PathBuf>,
    #[arg(long, value_parser = positive)]
    pub perplexity: Option<f64>,
}

pub enum Loaded {
    Graph(Graph, AffinityMatrix),
    Points(Vec<Vec<f64>>, AffinityMatrix),
    Affinity(AffinityMatrix),
}

impl Loaded {
    pub fn affinity(&self) -> &AffinityMatrix {
        match self {
            Loaded::Graph(_, p) | Loaded::Points(_, p) | Loaded::Affinity(p) => p,
        }
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

impl AffinitySource {
    /// `n_hint` is needed only for affinity CSV input.
    pub fn load(&self, n_hint: Option<usize>) -> Result<Loaded> {
        if self.perplexity.is_some() && self.points.is_none() {
            return usage("--perplexity only applies to --points input");
        }
        if let Some(path) = &self.graph {
            let g = read_edge_list(open(path)?).with_context(|| format!("reading {}", path.display()))?;
            let p = graph_affinities(&g, true)?;
            return Ok(Loaded::Graph(g, p));
        }
        if let Some(path) = &self.points {
            let Some(perp) = self.perplexity else {
                return usage("point-cloud input requires --perplexity");
            };
            let pts = read_points_csv(open(path)?).with_context(|| format!("reading {}", path.display()))?;
            let (p, cal) = perplexity_affinities(&pts, perp)?;
            log::info!("calibrated {} bandwidths at perplexity {}", cal.bandwidths.len(), perp);
            return Ok(Loaded::Points(pts, p));
        }
        if let Some(path) = &self.affinity {
            let Some(n) = n_hint else {
                return usage("--affinity needs the point count from another input");
            };
            let p = read_affinity_csv(open(path)?, n).with_context(|| format!("reading {}", path.display()))?;
            return Ok(Loaded::Affinity(p));
        }
        usage("one of --graph, --points or --affinity is required")
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Pca,
    Random,
}

/// Optimizer flags; unset values fall back to the size-dependent defaults.
#[derive(Args, Debug, Clone)]
pub struct OptimizerArgs {
    /// Total gradient steps
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Steps run with exaggerated attraction
    #[arg(long)]
    pub exaggeration_iters: Option<usize>,
    #[arg(long, value_parser = positive)]
    pub exaggeration: Option<f64>,
    /// Defaults to 200·n/1000
    #[arg(long, value_parser = positive)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum_early: Option<f64>,
    #[arg(long)]
    pub momentum_late: Option<f64>,
    #[arg(long, value_enum, default_value = "pca")]
    pub init: InitKind,
    /// Standard deviation of the random initialization
    #[arg(long, default_value = "1e-4", value_parser = positive)]
    pub init_scale: f64,
    #[arg(long)]
    pub snapshot_stride: Option<usize>,
}

impl OptimizerArgs {
    pub fn config(&self, n: usize, seed: u64) -> Result<OptimizerConfig> {
        let mut cfg = OptimizerConfig::for_n(n);
        cfg.seed = seed;
        if let Some(x) = self.iterations {
            cfg.total_iterations = x;
        }
        if let Some(x) = self.exaggeration_iters {
            cfg.exaggeration_iterations = x;
        }
        if let Some(x) = self.exaggeration {
            cfg.exaggeration_factor = x;
        }
        if let Some(x) = self.learning_rate {
            cfg.learning_rate = x;
        }
        if let Some(x) = self.momentum_early {
            cfg.momentum_early = x;
        }
        if let Some(x) = self.momentum_late {
            cfg.momentum_late = x;
        }
        if let Some(x) = self.snapshot_stride {
            cfg.snapshot_stride = x;
        }
        cfg.init = match self.init {
            InitKind::Pca => Init::Pca,
            InitKind::Random => Init::Random { scale: self.init_scale },
        };
        if cfg.exaggeration_iterations > cfg.total_iterations {
            return usage(format!(
                "--exaggeration-iters ({}) exceeds --iterations ({})",
                cfg.exaggeration_iterations, cfg.total_iterations
            ));
        }
        if let Err(e) = cfg.validate() {
            return usage(format!("invalid optimizer settings: {e}"));
        }
        Ok(cfg)
    }
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Output to a file, or stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

pub fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

pub fn require_n(loaded_n: usize, other_n: usize, what: &str) -> Result<()> {
    if loaded_n != other_n {
        bail!("{what} has {other_n} points but the affinity source has {loaded_n}");
    }
    Ok(())
}
