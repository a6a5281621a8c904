use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use forcelab::graph::{gen_erdos_renyi, gen_k_regular};
use forcelab::io::write_edge_list;

use crate::common::{emit, probability, usage};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelArg {
    KRegular,
    Er,
}

#[derive(Args, Debug)]
pub struct GenGraphArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long)]
    pub n: usize,
    /// Degree, for k-regular graphs
    #[arg(long)]
    pub k: Option<usize>,
    /// Edge probability, for Erdős–Rényi graphs
    #[arg(long, value_parser = probability)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output edge list; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(a: &GenGraphArgs) -> Result<()> {
    let g = match (a.model, a.k, a.p) {
        (ModelArg::KRegular, Some(k), None) => {
            if k >= a.n || a.n * k % 2 == 1 {
                return usage(format!("--k {k} is invalid for --n {}: need k < n and n·k even", a.n));
            }
            gen_k_regular(a.n, k, a.seed)?
        }
        (ModelArg::Er, None, Some(p)) => gen_erdos_renyi(a.n, p, a.seed)?,
        (ModelArg::KRegular, _, _) => return usage("--model k-regular takes --k and not --p"),
        (ModelArg::Er, _, _) => return usage("--model er takes --p and not --k"),
    };
    let mut buf = Vec::new();
    write_edge_list(&g, &mut buf)?;
    emit(a.out.as_deref(), &buf)?;
    log::info!("wrote graph with {} vertices and {} edges", g.n(), g.edge_count());
    Ok(())
}
