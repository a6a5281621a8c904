//! Exact t-SNE in two dimensions.
//!
//! Every kernel here is the exact `O(n²)` sum; no space partitioning is used.
//! Row-wise work is spread over the rayon pool, but each row is summed in a
//! fixed order and the row results are combined sequentially, so results are
//! bitwise identical regardless of thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affinity::AffinityMatrix;
use crate::error::{Error, Result};

/// Lower clamp for `q_ij` inside logarithms.
pub const Q_FLOOR: f64 = 1e-12;

/// Energy above which a run is declared divergent.
pub const DIVERGENCE_ENERGY: f64 = 1e6;

/// Target per-axis standard deviation of a PCA initialisation.
pub const PCA_INIT_STD: f64 = 1e-4;

/// `n` points in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    coords: Vec<[f64; 2]>,
}

impl Embedding {
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self> {
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("embedding", "coordinates must be finite"));
        }
        Ok(Embedding { coords })
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn translated(&self, shift: [f64; 2]) -> Self {
        Embedding {
            coords: self
                .coords
                .iter()
                .map(|y| [y[0] + shift[0], y[1] + shift[1]])
                .collect(),
        }
    }

    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Embedding {
            coords: self
                .coords
                .iter()
                .map(|y| [c * y[0] - s * y[1], s * y[0] + c * y[1]])
                .collect(),
        }
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.n() as f64;
        let (sx, sy) = self
            .coords
            .iter()
            .fold((0.0, 0.0), |(a, b), y| (a + y[0], b + y[1]));
        [sx / n, sy / n]
    }
}

/// Cauchy-kernel similarities of an embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct QStats {
    /// `Z = Σ_{k≠l} (1 + ‖y_k − y_l‖²)⁻¹` over ordered pairs.
    pub z: f64,
    n: usize,
    q: Vec<f64>,
}

impl QStats {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sum(&self) -> f64 {
        self.q.iter().sum()
    }
}

#[inline]
fn kernel(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    1.0 / (1.0 + dx * dx + dy * dy)
}

fn require_pairs(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::param("embedding", format!("need at least 2 points, got {n}")));
    }
    Ok(())
}

fn check_sizes(p: &AffinityMatrix, e: &Embedding) -> Result<()> {
    if p.n() != e.n() {
        return Err(Error::DimensionMismatch(format!(
            "affinity has {} points, embedding has {}",
            p.n(),
            e.n()
        )));
    }
    require_pairs(e.n())
}

/// The normaliser `Z`.
pub fn normalizer(e: &Embedding) -> f64 {
    let y = e.coords();
    let rows: Vec<f64> = (0..y.len())
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for (j, yj) in y.iter().enumerate() {
                if j != i {
                    s += kernel(&y[i], yj);
                }
            }
            s
        })
        .collect();
    rows.iter().sum()
}

pub fn compute_q(e: &Embedding) -> Result<QStats> {
    let n = e.n();
    require_pairs(n)?;
    let y = e.coords();
    let z = normalizer(e);
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                q[i * n + j] = kernel(&y[i], &y[j]) / z;
            }
        }
    }
    Ok(QStats { z, n, q })
}

/// `KL(P‖Q) = Σ_{p_ij>0} p_ij log(p_ij / q_ij)`.
pub fn kl_energy(p: &AffinityMatrix, e: &Embedding) -> Result<f64> {
    check_sizes(p, e)?;
    let z = normalizer(e);
    Ok(kl_with_normalizer(p, e, z))
}

fn kl_with_normalizer(p: &AffinityMatrix, e: &Embedding, z: f64) -> f64 {
    let y = e.coords();
    let mut total = 0.0;
    for (i, j, pij) in p.triplets() {
        let q = (kernel(&y[i], &y[j]) / z).max(Q_FLOOR);
        total += pij * (pij.ln() - q.ln());
    }
    total
}

/// Attractive and repulsive parts of `−∂E/∂y_i`, plus `Z`.
///
/// `attract_i = 4 Σ_j p_ij q_ij Z (y_j − y_i)` and
/// `repulse_i = −4 Σ_j q_ij² Z (y_j − y_i)`.
pub(crate) fn force_terms(p: &AffinityMatrix, y: &[[f64; 2]]) -> (Vec<[f64; 2]>, Vec<[f64; 2]>, f64) {
    let n = y.len();
    // one pass: row sums of the kernel and the unnormalised repulsion
    let rows: Vec<(f64, [f64; 2])> = (0..n)
        .into_par_iter()
        .map(|i| {
            let yi = y[i];
            let mut s = 0.0;
            let mut rx = 0.0;
            let mut ry = 0.0;
            for (j, yj) in y.iter().enumerate() {
                if j == i {
                    continue;
                }
                let w = kernel(&yi, yj);
                s += w;
                let w2 = w * w;
                rx += w2 * (yj[0] - yi[0]);
                ry += w2 * (yj[1] - yi[1]);
            }
            (s, [rx, ry])
        })
        .collect();
    let z: f64 = rows.iter().map(|r| r.0).sum();

    let attract: Vec<[f64; 2]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let yi = y[i];
            let mut ax = 0.0;
            let mut ay = 0.0;
            for &(j, pij) in p.row(i) {
                let yj = y[j as usize];
                let w = kernel(&yi, &yj);
                ax += pij * w * (yj[0] - yi[0]);
                ay += pij * w * (yj[1] - yi[1]);
            }
            [4.0 * ax, 4.0 * ay]
        })
        .collect();
    let repulse = rows
        .iter()
        .map(|(_, r)| [-4.0 * r[0] / z, -4.0 * r[1] / z])
        .collect();
    (attract, repulse, z)
}

/// `∂E/∂y_i` for every point.
pub fn gradient(p: &AffinityMatrix, e: &Embedding) -> Result<Vec<[f64; 2]>> {
    check_sizes(p, e)?;
    let (a, r, _) = force_terms(p, e.coords());
    Ok(a.iter()
        .zip(&r)
        .map(|(a, r)| [-(a[0] + r[0]), -(a[1] + r[1])])
        .collect())
}

/// Rows fed to the principal component projection.
#[derive(Debug, Clone, Copy)]
pub enum PcaInput<'a> {
    Points(&'a [Vec<f64>]),
    Affinity(&'a AffinityMatrix),
}

impl PcaInput<'_> {
    fn n(&self) -> usize {
        match self {
            PcaInput::Points(x) => x.len(),
            PcaInput::Affinity(p) => p.n(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            PcaInput::Points(x) => x.first().map_or(0, Vec::len),
            PcaInput::Affinity(p) => p.n(),
        }
    }

    fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        match self {
            PcaInput::Points(x) => x[i].iter().zip(v).map(|(a, b)| a * b).sum(),
            PcaInput::Affinity(p) => p.row(i).iter().map(|&(j, w)| w * v[j as usize]).sum(),
        }
    }

    fn add_row(&self, i: usize, scale: f64, out: &mut [f64]) {
        match self {
            PcaInput::Points(x) => {
                for (o, a) in out.iter_mut().zip(&x[i]) {
                    *o += scale * a;
                }
            }
            PcaInput::Affinity(p) => {
                for &(j, w) in p.row(i) {
                    out[j as usize] += scale * w;
                }
            }
        }
    }

    fn mean(&self) -> Vec<f64> {
        let n = self.n();
        let mut m = vec![0.0; self.dim()];
        for i in 0..n {
            self.add_row(i, 1.0 / n as f64, &mut m);
        }
        m
    }

    /// Covariance–vector product `C v` with `C = X_cᵀ X_c / n`.
    fn cov_apply(&self, mean: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mv: f64 = mean.iter().zip(v).map(|(a, b)| a * b).sum();
        let u: Vec<f64> = (0..n).map(|i| self.row_dot(i, v) - mv).collect();
        let mut out = vec![0.0; self.dim()];
        for (i, &ui) in u.iter().enumerate() {
            self.add_row(i, ui, &mut out);
        }
        let su: f64 = u.iter().sum();
        for (o, m) in out.iter_mut().zip(mean) {
            *o = (*o - su * m) / n as f64;
        }
        out
    }

    fn project(&self, mean: &[f64], v: &[f64]) -> Vec<f64> {
        let mv: f64 = mean.iter().zip(v).map(|(a, b)| a * b).sum();
        (0..self.n()).map(|i| self.row_dot(i, v) - mv).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcaOptions {
    pub max_iterations: usize,
    /// Eigen-residual, relative to the top eigenvalue, that counts as converged.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions {
            max_iterations: 1000,
            tolerance: 1e-12,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// Unscaled scores on the top two principal axes.
    pub scores: Vec<[f64; 2]>,
    /// Covariance eigenvalues (divisor `n`) of the two axes.
    pub eigenvalues: [f64; 2],
    /// Number of axes replaced by seeded random scores (rank < 2 input).
    pub random_axes: usize,
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|a| *a /= norm);
    }
    norm
}

/// Removes the component along the unit vector `u`, twice for stability.
fn orthogonalize(v: &mut [f64], u: &[f64]) {
    for _ in 0..2 {
        let c = dot(v, u);
        v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigen-decomposition of a symmetric 2×2 matrix, descending.
fn sym2_eigen(a: f64, b: f64, d: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (l1, l2) = (tr + disc, tr - disc);
    let v1 = if b.abs() > 0.0 {
        let mut v = [l1 - d, b];
        let nrm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        v[0] /= nrm;
        v[1] /= nrm;
        v
    } else if a >= d {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    ([l1, l2], [v1, [-v1[1], v1[0]]])
}

/// Projects rows onto their top two principal components by subspace
/// iteration with a Rayleigh–Ritz step.
pub fn pca_project(input: PcaInput<'_>, opts: &PcaOptions) -> Result<PcaProjection> {
    let n = input.n();
    let d = input.dim();
    if n < 2 || d == 0 {
        return Err(Error::param("pca", "need at least two rows of positive dimension"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mean = input.mean();
    let mut v1: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut v2: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut v1);
    orthogonalize(&mut v2, &v1);
    normalize(&mut v2);

    for _ in 0..opts.max_iterations {
        let w1 = input.cov_apply(&mean, &v1);
        let w2 = if d > 1 { input.cov_apply(&mean, &v2) } else { vec![0.0; d] };
        // Rayleigh–Ritz on span{v1, v2}
        let (vals, vecs) = sym2_eigen(dot(&v1, &w1), dot(&v1, &w2), dot(&v2, &w2));
        let mix = |a: &[f64], b: &[f64], c: [f64; 2]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| c[0] * x + c[1] * y).collect()
        };
        let r1 = mix(&v1, &v2, vecs[0]);
        let r2 = mix(&v1, &v2, vecs[1]);
        let mut n1 = mix(&w1, &w2, vecs[0]);
        let mut n2 = mix(&w1, &w2, vecs[1]);
        // eigen-residuals ‖C r − λ r‖ of the Ritz pairs
        let res = |cr: &[f64], r: &[f64], l: f64| cr.iter().zip(r).map(|(a, b)| (a - l * b).powi(2)).sum::<f64>().sqrt();
        let scale = vals[0].abs().max(f64::MIN_POSITIVE);
        if res(&n1, &r1, vals[0]) <= opts.tolerance * scale && res(&n2, &r2, vals[1]) <= opts.tolerance * scale {
            v1 = r1;
            v2 = r2;
            break;
        }
        let norm1 = normalize(&mut n1);
        if norm1 == 0.0 {
            break;
        }
        orthogonalize(&mut n2, &n1);
        if normalize(&mut n2) <= 1e-12 * norm1 {
            // rank-deficient: any direction orthogonal to n1 will do
            n2 = v2.clone();
            orthogonalize(&mut n2, &n1);
            if normalize(&mut n2) == 0.0 {
                n2 = v1.clone();
                orthogonalize(&mut n2, &n1);
                normalize(&mut n2);
            }
        }
        v1 = n1;
        v2 = n2;
    }

    let s1 = input.project(&mean, &v1);
    let s2 = input.project(&mean, &v2);
    let var = |s: &[f64]| s.iter().map(|a| a * a).sum::<f64>() / n as f64;
    let eig = [var(&s1), var(&s2)];
    let scale = eig[0].max(f64::MIN_POSITIVE);
    let mut random_axes = 0;
    let mut axes = [s1, s2];
    for (k, axis) in axes.iter_mut().enumerate() {
        let degenerate = if k == 0 { eig[0] <= 1e-300 } else { eig[1] <= 1e-12 * scale || eig[0] <= 1e-300 };
        if degenerate {
            random_axes += 1;
            *axis = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        }
    }
    Ok(PcaProjection {
        scores: (0..n).map(|i| [axes[0][i], axes[1][i]]).collect(),
        eigenvalues: eig,
        random_axes,
    })
}

/// PCA initialisation rescaled to per-axis standard deviation `1e-4`.
pub fn pca_init(input: PcaInput<'_>, seed: u64) -> Result<Embedding> {
    let proj = pca_project(input, &PcaOptions { seed, ..PcaOptions::default() })?;
    Ok(Embedding {
        coords: rescale_axes(proj.scores, PCA_INIT_STD),
    })
}

/// Centers each axis and rescales it to the given standard deviation.
fn rescale_axes(mut coords: Vec<[f64; 2]>, target_std: f64) -> Vec<[f64; 2]> {
    let n = coords.len() as f64;
    for k in 0..2 {
        let mean = coords.iter().map(|c| c[k]).sum::<f64>() / n;
        let std = (coords.iter().map(|c| (c[k] - mean).powi(2)).sum::<f64>() / n).sqrt();
        let f = if std > 0.0 { target_std / std } else { 0.0 };
        for c in coords.iter_mut() {
            c[k] = (c[k] - mean) * f;
        }
    }
    coords
}

/// Gaussian random initialisation with the given per-axis standard deviation.
pub fn random_init(n: usize, scale: f64, seed: u64) -> Embedding {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Embedding {
        coords: (0..n)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = StandardNormal.sample(&mut rng);
                [scale * x, scale * y]
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Init {
    Pca,
    Random { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub total_iterations: usize,
    pub exaggeration_iterations: usize,
    pub exaggeration_factor: f64,
    pub learning_rate: f64,
    pub momentum_early: f64,
    pub momentum_late: f64,
    pub init: Init,
    pub seed: u64,
    pub snapshot_stride: usize,
}

impl OptimizerConfig {
    /// 250 exaggerated iterations (factor 12) followed by 500 plain ones,
    /// learning rate `200·n/1000`.
    pub fn for_n(n: usize) -> Self {
        OptimizerConfig {
            total_iterations: 750,
            exaggeration_iterations: 250,
            exaggeration_factor: 12.0,
            learning_rate: 200.0 * n as f64 / 1000.0,
            momentum_early: 0.5,
            momentum_late: 0.8,
            init: Init::Pca,
            seed: 0,
            snapshot_stride: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.exaggeration_iterations > self.total_iterations {
            return Err(Error::param("exaggeration_iterations", "exceeds total_iterations"));
        }
        if !(self.exaggeration_factor >= 1.0) {
            return Err(Error::param("exaggeration_factor", "must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        for (name, m) in [("momentum_early", self.momentum_early), ("momentum_late", self.momentum_late)] {
            if !(0.0..1.0).contains(&m) {
                return Err(Error::param(name, "must lie in [0, 1)"));
            }
        }
        if self.snapshot_stride == 0 {
            return Err(Error::param("snapshot_stride", "must be positive"));
        }
        if let Init::Random { scale } = self.init {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::param("init", "random scale must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub iteration: usize,
    pub embedding: Embedding,
    /// Unexaggerated KL energy.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub final_embedding: Embedding,
}

impl Trajectory {
    pub fn final_energy(&self) -> f64 {
        self.snapshots.last().map_or(f64::NAN, |s| s.energy)
    }

    pub fn energy_at(&self, iteration: usize) -> Option<f64> {
        self.snapshots
            .iter()
            .find(|s| s.iteration == iteration)
            .map(|s| s.energy)
    }
}

/// Runs the optimizer from the initialisation selected in `cfg`
/// (PCA over affinity rows, or seeded Gaussian).
pub fn run(p: &AffinityMatrix, cfg: &OptimizerConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let init = match cfg.init {
        Init::Pca => pca_init(PcaInput::Affinity(p), cfg.seed)?,
        Init::Random { scale } => random_init(p.n(), scale, cfg.seed),
    };
    run_from(p, init, cfg)
}

/// Gradient descent with momentum from a given starting embedding.
pub fn run_from(p: &AffinityMatrix, init: Embedding, cfg: &OptimizerConfig) -> Result<Trajectory> {
    cfg.validate()?;
    check_sizes(p, &init)?;
    let n = p.n();
    let exaggerated = p.scaled(cfg.exaggeration_factor);
    let mut y = init.coords;
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut snapshots = Vec::new();

    let snapshot = |iteration: usize, y: &[[f64; 2]], out: &mut Vec<Snapshot>| -> Result<()> {
        let e = Embedding { coords: y.to_vec() };
        let energy = kl_with_normalizer(p, &e, normalizer(&e));
        if !energy.is_finite() || energy > DIVERGENCE_ENERGY {
            return Err(Error::Divergence {
                iteration,
                reason: format!("energy {energy}"),
            });
        }
        out.push(Snapshot {
            iteration,
            embedding: e,
            energy,
        });
        Ok(())
    };
    snapshot(0, &y, &mut snapshots)?;

    for it in 1..=cfg.total_iterations {
        let early = it <= cfg.exaggeration_iterations;
        let (target, momentum) = if early {
            (&exaggerated, cfg.momentum_early)
        } else {
            (p, cfg.momentum_late)
        };
        let (attract, repulse, _) = force_terms(target, &y);
        for i in 0..n {
            for k in 0..2 {
                // the force terms are −∂E/∂y
                let grad = -(attract[i][k] + repulse[i][k]);
                velocity[i][k] = momentum * velocity[i][k] - cfg.learning_rate * grad;
                y[i][k] += velocity[i][k];
            }
            if !(y[i][0].is_finite() && y[i][1].is_finite()) {
                return Err(Error::Divergence {
                    iteration: it,
                    reason: format!("non-finite coordinate at point {i}"),
                });
            }
        }
        if it % cfg.snapshot_stride == 0 || it == cfg.total_iterations || it == cfg.exaggeration_iterations {
            snapshot(it, &y, &mut snapshots)?;
        }
    }
    Ok(Trajectory {
        snapshots,
        final_embedding: Embedding { coords: y },
    })
}
