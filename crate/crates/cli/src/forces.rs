use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use forcelab::forces::{
    coloring, decompose_forces, detect_sinks, homogeneity_score, wheel_color, Channel, Feature, SinkParams,
    NEUTRAL_COLOR, WHEEL_STEPS,
};
use forcelab::io::{read_embedding_csv, write_features_csv};
use forcelab::svg::scatter;

use crate::common::{emit, open, positive, require_n, write_atomic, AffinitySource};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorBy {
    Magnitude,
    Direction,
    Sink,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelArg {
    Attract,
    Repulse,
}

impl From<ChannelArg> for Channel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Attract => Channel::Attract,
            ChannelArg::Repulse => Channel::Repulse,
        }
    }
}

#[derive(Args, Debug)]
pub struct ForcesArgs {
    /// Embedding CSV (index,x,y)
    #[arg(long)]
    pub embedding: PathBuf,
    #[command(flatten)]
    pub source: AffinitySource,
    #[arg(long, value_enum, default_value = "attract")]
    pub channel: ChannelArg,
    #[arg(long, value_enum, default_value = "direction")]
    pub color: ColorBy,
    /// Draw force arrows of the selected channel
    #[arg(long)]
    pub arrows: bool,
    /// Neighbourhood radius for the homogeneity score; defaults to 5% of
    /// the bounding-box diagonal
    #[arg(long, value_parser = positive)]
    pub homogeneity_radius: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub sink_step: Option<f64>,
    #[arg(long, default_value_t = 15)]
    pub sink_neighbors: usize,
    #[arg(long, default_value_t = 500)]
    pub sink_max_steps: usize,
    #[arg(long, value_parser = positive)]
    pub merge_radius: Option<f64>,
    /// Follow the negated field, locating sources
    #[arg(long)]
    pub reverse: bool,
    /// Feature CSV; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

pub fn run(a: &ForcesArgs) -> Result<()> {
    let e = read_embedding_csv(open(&a.embedding)?)?;
    let loaded = a.source.load(Some(e.n()))?;
    let p = loaded.affinity();
    require_n(p.n(), e.n(), "embedding")?;

    let f = decompose_forces(p, &e)?;
    let channel = Channel::from(a.channel);
    let feature = if a.color == ColorBy::Magnitude {
        Feature::Magnitude
    } else {
        Feature::Direction
    };
    let col = coloring(&f, channel, feature);
    let sinks = detect_sinks(
        &f,
        &e,
        &SinkParams {
            step: a.sink_step,
            neighbors: a.sink_neighbors,
            max_steps: a.sink_max_steps,
            merge_radius: a.merge_radius,
            channel,
            reverse: a.reverse,
        },
    )?;
    let radius = match a.homogeneity_radius {
        Some(r) => r,
        None => default_radius(e.coords()),
    };
    let hom = homogeneity_score(&f, &e, radius)?;
    log::info!("{} sinks, {} unassigned points", sinks.sink_count(), sinks.unassigned());

    let mut buf = Vec::new();
    write_features_csv(&e, &f, &col, &sinks, &hom, &mut buf)?;
    emit(a.out.as_deref(), &buf)?;

    if let Some(path) = &a.svg {
        let colors: Vec<[u8; 3]> = match a.color {
            ColorBy::Sink => sinks
                .labels
                .iter()
                .map(|l| l.map_or(NEUTRAL_COLOR, |k| wheel_color(k * 137 % WHEEL_STEPS)))
                .collect(),
            _ => col.hue.clone(),
        };
        let arrows = a.arrows.then(|| f.channel(channel));
        write_atomic(path, scatter(e.coords(), &colors, arrows).as_bytes())?;
    }
    Ok(())
}

fn default_radius(y: &[[f64; 2]]) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in y {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let diag = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
    if diag > 0.0 {
        0.05 * diag
    } else {
        1.0
    }
}
