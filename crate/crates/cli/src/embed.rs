use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use forcelab::graph::GraphKind;
use forcelab::io::write_embedding_csv;
use forcelab::tsne::{pca_init, run_from, random_init, Init, OptimizerConfig, PcaInput};
use serde::Serialize;

use crate::common::{emit, to_json, write_atomic, AffinitySource, Loaded, OptimizerArgs};

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub source: AffinitySource,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Embedding CSV; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trajectory JSON with the config echo and snapshots
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
}

#[derive(Serialize)]
struct SnapshotRecord<'a> {
    iteration: usize,
    energy: f64,
    coords: &'a [[f64; 2]],
}

#[derive(Serialize)]
struct GraphEcho {
    kind: GraphKind,
    seed: u64,
    edges: usize,
}

#[derive(Serialize)]
struct TrajectoryFile<'a> {
    version: &'static str,
    input: String,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    graph: Option<GraphEcho>,
    config: &'a OptimizerConfig,
    final_energy: f64,
    snapshots: Vec<SnapshotRecord<'a>>,
}

pub fn run(a: &EmbedArgs) -> Result<()> {
    let loaded = a.source.load(None)?;
    let p = loaded.affinity();
    let n = p.n();
    let cfg = a.optimizer.config(n, a.seed)?;
    let init = match cfg.init {
        Init::Random { scale } => random_init(n, scale, cfg.seed),
        Init::Pca => match &loaded {
            Loaded::Points(pts, _) => pca_init(PcaInput::Points(pts), cfg.seed)?,
            _ => pca_init(PcaInput::Affinity(p), cfg.seed)?,
        },
    };
    let traj = run_from(p, init, &cfg).context("optimization failed")?;
    log::info!("final energy {}", traj.final_energy());

    let mut buf = Vec::new();
    write_embedding_csv(&traj.final_embedding, &mut buf)?;
    emit(a.out.as_deref(), &buf)?;

    if let Some(path) = &a.trajectory {
        let input = [&a.source.graph, &a.source.points, &a.source.affinity]
            .into_iter()
            .flatten()
            .map(|p| p.display().to_string())
            .next()
            .unwrap_or_default();
        let file = TrajectoryFile {
            version: env!("CARGO_PKG_VERSION"),
            input,
            n,
            graph: match &loaded {
                Loaded::Graph(g, _) => Some(GraphEcho {
                    kind: g.kind(),
                    seed: g.seed(),
                    edges: g.edge_count(),
                }),
                _ => None,
            },
            config: &cfg,
            final_energy: traj.final_energy(),
            snapshots: traj
                .snapshots
                .iter()
                .map(|s| SnapshotRecord {
                    iteration: s.iteration,
                    energy: s.energy,
                    coords: s.embedding.coords(),
                })
                .collect(),
        };
        write_atomic(path, &to_json(&file)?)?;
    }
    Ok(())
}
