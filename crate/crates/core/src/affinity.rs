//! Input affinities `p_ij`, either from a point cloud via perplexity
//! calibrated Gaussian kernels or from a graph adjacency matrix.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Sparse symmetric matrix of nonnegative affinities with zero diagonal.
///
/// Both `(i, j)` and `(j, i)` are stored; each row is sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

impl AffinityMatrix {
    /// Builds a matrix from unordered pairs `(i, j, p)`, mirroring each one.
    pub fn from_symmetric_pairs(
        n: usize,
        pairs: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut rows = vec![Vec::new(); n];
        for (i, j, p) in pairs {
            if i >= n || j >= n {
                return Err(Error::param("affinity", format!("index ({i}, {j}) out of range")));
            }
            if i == j {
                return Err(Error::param("affinity", format!("diagonal entry at {i}")));
            }
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::param("affinity", format!("entry ({i}, {j}) = {p} is not a finite nonnegative value")));
            }
            if p > 0.0 {
                rows[i].push((j as u32, p));
                rows[j].push((i as u32, p));
            }
        }
        Self::from_rows(n, rows)
    }

    /// Builds a matrix from ordered triplets that must already be symmetric.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut rows = vec![Vec::new(); n];
        for (i, j, p) in triplets {
            if i >= n || j >= n || i == j {
                return Err(Error::param("affinity", format!("invalid index pair ({i}, {j})")));
            }
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::param("affinity", format!("entry ({i}, {j}) = {p} is not a finite nonnegative value")));
            }
            if p > 0.0 {
                rows[i].push((j as u32, p));
            }
        }
        let m = Self::from_rows(n, rows)?;
        for (i, row) in m.rows.iter().enumerate() {
            for &(j, p) in row {
                let back = m.get(j as usize, i);
                if (back - p).abs() > 1e-15 * p.max(back) {
                    return Err(Error::param("affinity", format!("entry ({i}, {j}) has no symmetric partner")));
                }
            }
        }
        Ok(m)
    }

    fn from_rows(n: usize, mut rows: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        for row in rows.iter_mut() {
            row.sort_unstable_by_key(|&(j, _)| j);
            // merge repeated columns
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
            for &(j, p) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += p,
                    _ => merged.push((j, p)),
                }
            }
            *row = merged;
        }
        Ok(AffinityMatrix { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        match row.binary_search_by_key(&(j as u32), |&(c, _)| c) {
            Ok(pos) => row[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Number of stored ordered entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `Σ_{i≠j} p_ij`.
    pub fn total_mass(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(_, p)| p).sum::<f64>())
            .sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass() - 1.0).abs() < 1e-12
    }

    /// Ordered triplets `(i, j, p_ij)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, p)| (i, j as usize, p)))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        AffinityMatrix {
            n: self.n,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&(j, p)| (j, p * factor)).collect())
                .collect(),
        }
    }

    /// Returns a copy rescaled to total mass one.
    pub fn normalized(&self) -> Result<Self> {
        let mass = self.total_mass();
        if mass <= 0.0 {
            return Err(Error::param("affinity", "total mass is zero"));
        }
        let mut m = self.scaled(1.0 / mass);
        // absorb the last rounding error of the rescale
        let residual = m.total_mass();
        if (residual - 1.0).abs() >= 1e-12 {
            m = m.scaled(1.0 / residual);
        }
        Ok(m)
    }

    /// Dense copy of row `i`.
    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(j, p) in &self.rows[i] {
            out[j as usize] = p;
        }
        out
    }
}

/// Outcome of the per-point bandwidth search.
#[derive(Debug, Clone, PartialEq)]
pub struct PerplexityCalibration {
    pub perplexity: f64,
    pub bandwidths: Vec<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Achieved `2^H(p_{·|i})` per point.
    pub achieved: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerplexityOptions {
    /// Tolerance on `|ln(achieved) − ln(target)|`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Default for PerplexityOptions {
    fn default() -> Self {
        PerplexityOptions {
            tolerance: 1e-6,
            max_iterations: 200,
            sigma_min: 1e-12,
            sigma_max: 1e12,
        }
    }
}

/// Squared Euclidean distances from point `i` to every point.
fn squared_distances(points: &[Vec<f64>], i: usize) -> Vec<f64> {
    let xi = &points[i];
    points
        .iter()
        .map(|xj| xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect()
}

/// Conditional distribution `p_{·|i}` for bandwidth `sigma`, with its
/// Shannon entropy in nats. `d2[i]` is ignored.
pub fn conditional_row(d2: &[f64], i: usize, sigma: f64) -> (Vec<f64>, f64) {
    let beta = 1.0 / (2.0 * sigma * sigma);
    let d_min = d2
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut row: Vec<f64> = d2
        .iter()
        .enumerate()
        .map(|(j, &d)| if j == i { 0.0 } else { (-(d - d_min) * beta).exp() })
        .collect();
    let z: f64 = row.iter().sum();
    let mut weighted = 0.0;
    for (j, v) in row.iter_mut().enumerate() {
        if j != i {
            weighted += *v * (d2[j] - d_min);
            *v /= z;
        }
    }
    // H = ln Z + beta·E[d - d_min]
    let entropy = z.ln() + beta * weighted / z;
    (row, entropy)
}

/// Relative spread below which a row's distances count as equal.
const EQUAL_DISTANCE_RTOL: f64 = 1e-10;

fn calibrate_row(d2: &[f64], i: usize, target: f64, opts: &PerplexityOptions) -> Result<(Vec<f64>, f64, f64)> {
    let n = d2.len();
    // Equal distances (duplicates included) make the row independent of
    // the bandwidth; any sigma yields the uniform conditional. Rounding
    // noise in the distances is ignored.
    let (lo_d, hi_d) = d2
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .fold((f64::INFINITY, 0.0f64), |(a, b), (_, &d)| (a.min(d), b.max(d)));
    if hi_d - lo_d <= EQUAL_DISTANCE_RTOL * hi_d {
        let u = 1.0 / (n - 1) as f64;
        let row = (0..n).map(|j| if j == i { 0.0 } else { u }).collect();
        return Ok((row, opts.sigma_max, (n - 1) as f64));
    }
    let log_target = target.ln();
    let (mut lo, mut hi) = (opts.sigma_min.ln(), opts.sigma_max.ln());
    for _ in 0..opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        let sigma = mid.exp();
        let (row, h) = conditional_row(d2, i, sigma);
        let diff = h - log_target;
        if diff.abs() < opts.tolerance {
            return Ok((row, sigma, h.exp()));
        }
        if diff > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::Calibration {
        point: i,
        iterations: opts.max_iterations,
    })
}

/// Perplexity-calibrated affinities `p_ij = (p_{i|j} + p_{j|i}) / 2n`.
pub fn perplexity_affinities(
    points: &[Vec<f64>],
    perplexity: f64,
) -> Result<(AffinityMatrix, PerplexityCalibration)> {
    perplexity_affinities_with(points, perplexity, &PerplexityOptions::default())
}

pub fn perplexity_affinities_with(
    points: &[Vec<f64>],
    perplexity: f64,
    opts: &PerplexityOptions,
) -> Result<(AffinityMatrix, PerplexityCalibration)> {
    let n = points.len();
    if n < 3 {
        return Err(Error::param("points", format!("need at least 3 points, got {n}")));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("points must share a nonzero dimension".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("points", "coordinates must be finite"));
    }
    if !(perplexity > 1.0 && perplexity < n as f64) {
        return Err(Error::param("perplexity", format!("need 1 < perplexity < n = {n}, got {perplexity}")));
    }

    let rows: Vec<(Vec<f64>, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d2 = squared_distances(points, i);
            calibrate_row(&d2, i, perplexity, opts)
        })
        .collect::<Result<_>>()?;

    let two_n = 2.0 * n as f64;
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = (rows[i].0[j] + rows[j].0[i]) / two_n;
            if p > 0.0 {
                pairs.push((i, j, p));
            }
        }
    }
    let matrix = AffinityMatrix::from_symmetric_pairs(n, pairs)?.normalized()?;
    let calibration = PerplexityCalibration {
        perplexity,
        bandwidths: rows.iter().map(|r| r.1).collect(),
        tolerance: opts.tolerance,
        max_iterations: opts.max_iterations,
        achieved: rows.iter().map(|r| r.2).collect(),
    };
    Ok((matrix, calibration))
}

/// Adjacency affinities: `1` on edges, or `1/(2|E|)` when normalized.
pub fn graph_affinities(g: &Graph, normalize: bool) -> Result<AffinityMatrix> {
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    let value = if normalize { 1.0 / (2.0 * m as f64) } else { 1.0 };
    let pairs = g
        .edges()
        .iter()
        .map(|&(u, v)| (u as usize, v as usize, value));
    AffinityMatrix::from_symmetric_pairs(g.n(), pairs)
}
