use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use forcelab::graph::Graph;
use forcelab::io::{read_edge_list, read_embedding_csv};
use forcelab::meanfield::{energy_stats, ring_stats, EnergyStats, RingStats};
use serde::Serialize;

use crate::common::{emit, open, require_n, to_json};

#[derive(Args, Debug)]
pub struct RingStatsArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    /// Also report energy statistics against this edge list
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Report JSON; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    n: usize,
    ring: RingStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    energy: Option<EnergyStats>,
}

pub fn run(a: &RingStatsArgs) -> Result<()> {
    let e = read_embedding_csv(open(&a.embedding)?)?;
    let energy = match &a.graph {
        Some(path) => {
            let g: Graph = read_edge_list(open(path)?)?;
            require_n(g.n(), e.n(), "embedding")?;
            Some(energy_stats(&g, &e)?)
        }
        None => None,
    };
    let report = Report {
        n: e.n(),
        ring: ring_stats(&e)?,
        energy,
    };
    emit(a.out.as_deref(), &to_json(&report)?)
}
