use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use forcelab::meanfield::{
    functional_j, numeric_radial_minimize, radial_minimizer, radial_reduce, taylor_check, DiscreteMeasure,
    MeanFieldParams, RadialMinimizer, RadialMoments,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::common::{emit, finite, positive, probability, to_json, usage};

#[derive(Args, Debug)]
pub struct MeanFieldArgs {
    /// Combined constant c = σδ/√p
    #[arg(long, value_parser = finite, allow_hyphen_values = true, conflicts_with_all = ["sigma", "delta", "p"])]
    pub c: Option<f64>,
    #[arg(long, value_parser = finite, allow_hyphen_values = true, requires_all = ["delta", "p"])]
    pub sigma: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub delta: Option<f64>,
    #[arg(long, value_parser = probability)]
    pub p: Option<f64>,
    /// Radial grid spacing for the numeric minimizer
    #[arg(long, default_value = "1e-3", value_parser = positive)]
    pub grid_step: f64,
    /// Largest grid radius; defaults to 3·√|c| (at least 1)
    #[arg(long, value_parser = positive)]
    pub grid_max: Option<f64>,
    /// Seed for the random measures of the scaling test
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report JSON; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct NumericReport {
    grid_points: usize,
    grid_step: f64,
    radii: Vec<f64>,
    weights: Vec<f64>,
    moments: RadialMoments,
    /// Mass within one grid step (at least 1e-3) of the closed-form radius.
    mass_near_closed_form: f64,
    pass: bool,
}

#[derive(Serialize)]
struct TaylorFamily {
    family: &'static str,
    residual_at_diameter_0_1: f64,
    residual_at_diameter_0_05: f64,
    ratio: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ScalingReport {
    lambdas: Vec<f64>,
    measures: usize,
    max_relative_error: f64,
    pass: bool,
}

#[derive(Serialize)]
struct Report {
    c: f64,
    params: Option<MeanFieldParams>,
    closed_form: RadialMinimizer,
    numeric: NumericReport,
    taylor: Vec<TaylorFamily>,
    scaling: ScalingReport,
    pass: bool,
}

fn numeric(c: f64, a: &MeanFieldArgs, closed: &RadialMinimizer) -> Result<NumericReport> {
    let top = a.grid_max.unwrap_or_else(|| (3.0 * c.abs().sqrt()).max(1.0));
    let m = (top / a.grid_step).ceil() as usize;
    if m > 200_000 {
        return usage("--grid-max / --grid-step gives more than 200000 grid points");
    }
    let grid: Vec<f64> = (0..=m).map(|i| i as f64 * a.grid_step).collect();
    let nu = numeric_radial_minimize(c, &grid)?;
    let tol = a.grid_step.max(1e-3);
    let near: f64 = nu
        .radii()
        .iter()
        .zip(nu.weights())
        .filter(|(r, _)| (*r - closed.radius).abs() <= tol)
        .map(|(_, w)| w)
        .sum();
    let (radii, weights) = nu
        .radii()
        .iter()
        .zip(nu.weights())
        .filter(|(_, w)| **w > 0.0)
        .map(|(r, w)| (*r, *w))
        .unzip();
    Ok(NumericReport {
        grid_points: grid.len(),
        grid_step: a.grid_step,
        radii,
        weights,
        moments: radial_reduce(&nu),
        mass_near_closed_form: near,
        pass: near >= 0.99,
    })
}

fn taylor() -> Vec<TaylorFamily> {
    let families: [(&'static str, fn(f64) -> DiscreteMeasure); 2] = [
        ("two_dirac", DiscreteMeasure::two_dirac),
        ("ring", |d| DiscreteMeasure::ring(0.5 * d, 400).expect("positive radius")),
    ];
    families
        .into_iter()
        .map(|(family, f)| {
            let r1 = taylor_check(&f(0.1)).residual;
            let r2 = taylor_check(&f(0.05)).residual;
            TaylorFamily {
                family,
                residual_at_diameter_0_1: r1,
                residual_at_diameter_0_05: r2,
                ratio: r1 / r2,
                pass: r1 / r2 >= 16.0,
            }
        })
        .collect()
}

fn scaling(params: &MeanFieldParams, seed: u64) -> Result<ScalingReport> {
    let lambdas = vec![0.5, 2.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measures = 20;
    let mut worst = 0.0f64;
    for _ in 0..measures {
        let m = rng.random_range(2..30);
        let mu = DiscreteMeasure::uniform((0..m).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect())?;
        for &l in &lambdas {
            let lhs = functional_j(&mu.scaled(l), params) / l.powi(4);
            let rhs = functional_j(&mu, &MeanFieldParams::new(params.sigma, params.delta / (l * l), params.p)?);
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));
        }
    }
    Ok(ScalingReport {
        lambdas,
        measures,
        max_relative_error: worst,
        pass: worst < 1e-10,
    })
}

pub fn run(a: &MeanFieldArgs) -> Result<()> {
    let (c, params) = match (a.c, a.sigma, a.delta, a.p) {
        (Some(c), None, None, None) => (c, None),
        (None, Some(s), Some(d), Some(p)) => {
            let prm = MeanFieldParams::new(s, d, p)?;
            (prm.c(), Some(prm))
        }
        _ => return usage("give either --c or all of --sigma, --delta and --p"),
    };
    let closed = radial_minimizer(c);
    let numeric = numeric(c, a, &closed)?;
    let taylor = taylor();
    // with only c given, fix δ and p and solve for σ
    let scale_params = match params {
        Some(p) => p,
        None => MeanFieldParams::new(c * 0.1f64.sqrt() / 1e-3, 1e-3, 0.1)?,
    };
    let scaling = scaling(&scale_params, a.seed)?;
    let pass = numeric.pass && taylor.iter().all(|t| t.pass) && scaling.pass;
    let report = Report {
        c,
        params,
        closed_form: closed,
        numeric,
        taylor,
        scaling,
        pass,
    };
    emit(a.out.as_deref(), &to_json(&report)?)
}
