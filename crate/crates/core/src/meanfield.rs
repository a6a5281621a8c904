//! Mean-field analysis of t-SNE on random-graph affinities.
//!
//! Measures are finitely supported; every integral `∬ f(x − y) dμ(x) dμ(y)`
//! is evaluated as an exact double sum over the support, diagonal included.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphKind};
use crate::tsne::{normalizer, Embedding};

/// Default constant in the k-regular variance correction.
pub const DEFAULT_C_KN: f64 = 4.0;

/// Default mass a square must capture in [`length_scale_r`].
pub const DEFAULT_MASS_THRESHOLD: f64 = 1.0 / 200.0;

/// Diameter beyond which the small-measure expansion is not trusted.
pub const TAYLOR_REGIME_LIMIT: f64 = 0.5;

const WEIGHT_TOL: f64 = 1e-12;

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::param("weights", "measure needs at least one atom"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::param("weights", "weights must be finite and nonnegative"));
    }
    let s: f64 = weights.iter().sum();
    if (s - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::param("weights", format!("weights sum to {s}, expected 1")));
    }
    Ok(())
}

/// Probability measure on the plane with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    support: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(support: Vec<[f64; 2]>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} support points, {} weights",
                support.len(),
                weights.len()
            )));
        }
        if support.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("support", "coordinates must be finite"));
        }
        check_weights(&weights)?;
        Ok(DiscreteMeasure { support, weights })
    }

    /// Equal weights on the given points.
    pub fn uniform(support: Vec<[f64; 2]>) -> Result<Self> {
        let w = 1.0 / support.len().max(1) as f64;
        let weights = vec![w; support.len()];
        Self::new(support, weights)
    }

    /// Empirical measure of an embedding.
    pub fn from_embedding(e: &Embedding) -> Result<Self> {
        Self::uniform(e.coords().to_vec())
    }

    pub fn point_mass(at: [f64; 2]) -> Self {
        DiscreteMeasure {
            support: vec![at],
            weights: vec![1.0],
        }
    }

    /// Two half-masses at distance `r`, centered at the origin.
    pub fn two_dirac(r: f64) -> Self {
        DiscreteMeasure {
            support: vec![[-0.5 * r, 0.0], [0.5 * r, 0.0]],
            weights: vec![0.5, 0.5],
        }
    }

    /// `m` equally weighted, equally spaced points on a circle.
    pub fn ring(radius: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("m", "ring needs at least one point"));
        }
        let support = (0..m)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / m as f64;
                [radius * t.cos(), radius * t.sin()]
            })
            .collect();
        Self::uniform(support)
    }

    pub fn support(&self) -> &[[f64; 2]] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Push-forward under `x ↦ λx`.
    pub fn scaled(&self, lambda: f64) -> Self {
        DiscreteMeasure {
            support: self.support.iter().map(|x| [lambda * x[0], lambda * x[1]]).collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn translated(&self, shift: [f64; 2]) -> Self {
        DiscreteMeasure {
            support: self.support.iter().map(|x| [x[0] + shift[0], x[1] + shift[1]]).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Largest distance between two atoms of positive weight.
    pub fn diameter(&self) -> f64 {
        let pts: Vec<[f64; 2]> = self
            .support
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(x, _)| *x)
            .collect();
        let mut d2 = 0.0f64;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                d2 = d2.max((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2));
            }
        }
        d2.sqrt()
    }
}

/// Probability measure on `[0, ∞)` describing a rotationally symmetric
/// planar measure.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMeasure {
    radii: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialMeasure {
    pub fn new(radii: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if radii.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} radii, {} weights",
                radii.len(),
                weights.len()
            )));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::param("radii", "radii must be finite and nonnegative"));
        }
        check_weights(&weights)?;
        Ok(RadialMeasure { radii, weights })
    }

    pub fn dirac(radius: f64) -> Result<Self> {
        Self::new(vec![radius], vec![1.0])
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Planar measure putting each radial atom on `angles` equally spaced
    /// points of its circle.
    pub fn to_planar(&self, angles: usize) -> Result<DiscreteMeasure> {
        if angles == 0 {
            return Err(Error::param("angles", "must be positive"));
        }
        let mut support = Vec::with_capacity(self.radii.len() * angles);
        let mut weights = Vec::with_capacity(self.radii.len() * angles);
        for (r, w) in self.radii.iter().zip(&self.weights) {
            for k in 0..angles {
                let t = std::f64::consts::TAU * k as f64 / angles as f64;
                support.push([r * t.cos(), r * t.sin()]);
                weights.push(w / angles as f64);
            }
        }
        DiscreteMeasure::new(support, weights)
    }
}

/// `a = E X²`, `b = E X⁴` of a radial measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialMoments {
    pub a: f64,
    pub b: f64,
}

impl RadialMoments {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let m = RadialMoments { a, b };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        if !(self.a >= 0.0 && self.b >= 0.0) {
            return Err(Error::param("moments", "a and b must be nonnegative"));
        }
        let sqrt_b = self.b.sqrt();
        if self.a > sqrt_b + WEIGHT_TOL {
            return Err(Error::MomentConstraint { a: self.a, sqrt_b });
        }
        Ok(())
    }

    /// `∬‖x−y‖² dμdμ′` of the symmetrized planar measure.
    pub fn planar_second(&self) -> f64 {
        2.0 * self.a
    }

    /// `∬‖x−y‖⁴ dμdμ′` of the symmetrized planar measure.
    pub fn planar_fourth(&self) -> f64 {
        2.0 * self.b + 4.0 * self.a * self.a
    }
}

/// The random-graph model behind an affinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    KRegular,
    ErdosRenyi,
}

impl From<GraphKind> for Model {
    fn from(k: GraphKind) -> Self {
        match k {
            GraphKind::KRegular { .. } => Model::KRegular,
            GraphKind::ErdosRenyi { .. } => Model::ErdosRenyi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyStats {
    pub actual: f64,
    pub expectation: f64,
    pub variance: f64,
    /// `(actual − expectation)/√variance`; `None` when the variance is zero
    /// and the two energies differ.
    pub sigma: Option<f64>,
    pub model: Model,
    pub n: usize,
    pub k_or_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldParams {
    pub sigma: f64,
    pub delta: f64,
    pub p: f64,
}

impl MeanFieldParams {
    pub fn new(sigma: f64, delta: f64, p: f64) -> Result<Self> {
        if !sigma.is_finite() {
            return Err(Error::param("sigma", "must be finite"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param("delta", "must be positive"));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param("p", "must lie in (0, 1)"));
        }
        Ok(MeanFieldParams { sigma, delta, p })
    }

    /// `c = σδ/√p`.
    pub fn c(&self) -> f64 {
        self.sigma * self.delta / self.p.sqrt()
    }
}

/// Pair integrals of a measure against itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairIntegrals {
    /// `∬ (1+‖x−y‖²)⁻¹ − 1`, kept separately to avoid cancellation.
    pub kernel_minus_one: f64,
    /// `∬ ‖x−y‖²`.
    pub m2: f64,
    /// `∬ ‖x−y‖⁴`.
    pub m4: f64,
    /// `∬ log(1+‖x−y‖²)`.
    pub log: f64,
    /// `∬ log(1+‖x−y‖²)²`.
    pub log_sq: f64,
}

impl PairIntegrals {
    /// `∬ (1+‖x−y‖²)⁻¹`.
    pub fn kernel(&self) -> f64 {
        1.0 + self.kernel_minus_one
    }

    pub fn log_kernel(&self) -> f64 {
        self.kernel_minus_one.ln_1p()
    }
}

pub fn pair_integrals(mu: &DiscreteMeasure) -> PairIntegrals {
    let x = &mu.support;
    let w = &mu.weights;
    let rows: Vec<[f64; 5]> = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = [0.0; 5];
            for j in 0..x.len() {
                let d2 = (x[i][0] - x[j][0]).powi(2) + (x[i][1] - x[j][1]).powi(2);
                let ww = w[i] * w[j];
                let l = d2.ln_1p();
                acc[0] -= ww * d2 / (1.0 + d2);
                acc[1] += ww * d2;
                acc[2] += ww * d2 * d2;
                acc[3] += ww * l;
                acc[4] += ww * l * l;
            }
            acc
        })
        .collect();
    let mut t = [0.0; 5];
    for r in &rows {
        for (a, b) in t.iter_mut().zip(r) {
            *a += b;
        }
    }
    PairIntegrals {
        kernel_minus_one: t[0],
        m2: t[1],
        m4: t[2],
        log: t[3],
        log_sq: t[4],
    }
}

fn choose2(n: usize) -> f64 {
    let n = n as f64;
    0.5 * n * (n - 1.0)
}

fn check_np(n: usize, p: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::param("n", "must be at least 2"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", "must lie in (0, 1)"));
    }
    Ok(())
}

/// `log(−n + n²∬(1+‖x−y‖²)⁻¹)`, erroring on a nonpositive argument.
fn log_first_term(mu: &DiscreteMeasure, n: usize) -> Result<f64> {
    let nf = n as f64;
    let arg = -nf + nf * nf * pair_integrals(mu).kernel();
    if !(arg > 0.0) {
        return Err(Error::NonPositiveLogArgument { value: arg, n: nf });
    }
    Ok(arg.ln())
}

/// `2p·C(n,2)·[log n² + log ∬(1+‖x−y‖²)⁻¹]`.
pub fn expectation_e2(mu: &DiscreteMeasure, n: usize, p: f64) -> Result<f64> {
    check_np(n, p)?;
    let nf = n as f64;
    Ok(2.0 * p * choose2(n) * ((nf * nf).ln() + pair_integrals(mu).log_kernel()))
}

/// `2p·C(n,2)·log(−n + n²∬(1+‖x−y‖²)⁻¹)`.
pub fn expectation_e(mu: &DiscreteMeasure, n: usize, p: f64) -> Result<f64> {
    check_np(n, p)?;
    Ok(2.0 * p * choose2(n) * log_first_term(mu, n)?)
}

/// Variance of the logarithmic (second) energy term.
pub fn variance_second_term(mu: &DiscreteMeasure, n: usize, p: f64, model: Model) -> Result<f64> {
    variance_second_term_with(mu, n, p, model, DEFAULT_C_KN)
}

pub fn variance_second_term_with(mu: &DiscreteMeasure, n: usize, p: f64, model: Model, c_kn: f64) -> Result<f64> {
    check_np(n, p)?;
    let nf = n as f64;
    let pi = pair_integrals(mu);
    let er = p * (1.0 - p) * nf * nf * pi.log_sq;
    match model {
        Model::ErdosRenyi => Ok(er),
        Model::KRegular => {
            let v = er - c_kn * p * (1.0 - p) * nf * pi.log * pi.log;
            if v < 0.0 {
                log::warn!("k-regular variance correction went negative ({v}); clamped to 0");
                Ok(0.0)
            } else {
                Ok(v)
            }
        }
    }
}

/// `2p(1−p)·C(n,2)·[log(−n + n²∬(1+‖x−y‖²)⁻¹)]²`.
pub fn variance_first_term_er(mu: &DiscreteMeasure, n: usize, p: f64) -> Result<f64> {
    check_np(n, p)?;
    let l = log_first_term(mu, n)?;
    Ok(2.0 * p * (1.0 - p) * choose2(n) * l * l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularVarianceBound {
    pub lower_bound: f64,
    pub independent_value: f64,
}

pub fn regular_variance_bound(x: &[Vec<f64>], n: usize, k: usize) -> Result<RegularVarianceBound> {
    regular_variance_bound_with(x, n, k, DEFAULT_C_KN)
}

/// Variance of `Σ a_ij x_ij` for independent entries, and the lower bound
/// obtained from the k-regular correlation structure.
pub fn regular_variance_bound_with(x: &[Vec<f64>], n: usize, k: usize, c_kn: f64) -> Result<RegularVarianceBound> {
    if n == 0 || k > n {
        return Err(Error::param("k", "need 0 < n and k <= n"));
    }
    if x.len() != n || x.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!("matrix must be {n}x{n}")));
    }
    if (0..n).any(|i| x[i][i] != 0.0) {
        return Err(Error::param("x", "diagonal must be zero"));
    }
    let q = k as f64 / n as f64;
    let nf = n as f64;
    let sum: f64 = x.iter().flatten().sum();
    let sum_sq: f64 = x.iter().flatten().map(|v| v * v).sum();
    let independent_value = q * (1.0 - q) * sum_sq;
    let lower_bound = independent_value - c_kn * (k as f64).powi(2) / nf.powi(3) * sum * sum;
    Ok(RegularVarianceBound {
        lower_bound,
        independent_value,
    })
}

/// `I(μ) = log ∬(1+‖x−y‖²)⁻¹ + ∬ log(1+‖x−y‖²)`; nonnegative by Jensen.
pub fn shrinkage_i(mu: &DiscreteMeasure) -> f64 {
    let pi = pair_integrals(mu);
    pi.log_kernel() + pi.log
}

/// Heaviest mass captured by a closed axis-aligned square of side `s`
/// anchored at a support point.
fn best_square_mass(mu: &DiscreteMeasure, s: f64) -> f64 {
    let x = &mu.support;
    let w = &mu.weights;
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            for off in [0.0, 0.5, 1.0] {
                let x0 = x[i][0] - off * s;
                let y0 = x[i][1] - off * s;
                let mut m = 0.0;
                for (p, wp) in x.iter().zip(w) {
                    if p[0] >= x0 && p[0] <= x0 + s && p[1] >= y0 && p[1] <= y0 + s {
                        m += wp;
                    }
                }
                best = best.max(m);
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Smallest square side capturing at least `mass_threshold` of the mass
/// (upper bound, squares anchored at the support).
pub fn length_scale_r(mu: &DiscreteMeasure, mass_threshold: f64) -> Result<f64> {
    if !(mass_threshold > 0.0 && mass_threshold <= 1.0) {
        return Err(Error::param("mass_threshold", "must lie in (0, 1]"));
    }
    // tolerate rounding in the weight sum
    let need = mass_threshold - WEIGHT_TOL;
    if best_square_mass(mu, 0.0) >= need {
        return Ok(0.0);
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &mu.support {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    let extent = (xmax - xmin).max(ymax - ymin);
    let diameter = mu.diameter().max(extent);
    let (mut lo, mut hi) = (0.0, 2.0 * extent);
    let tol = 1e-6 * diameter;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if best_square_mass(mu, mid) >= need {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `(I(μ), r⁴/(1+r²)⁴)` with `r` the default length scale.
pub fn shrinkage_bound_check(mu: &DiscreteMeasure) -> Result<(f64, f64)> {
    let r = length_scale_r(mu, DEFAULT_MASS_THRESHOLD)?;
    Ok((shrinkage_i(mu), r.powi(4) / (1.0 + r * r).powi(4)))
}

/// The two planar moments entering `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JTerms {
    pub fourth: f64,
    pub second_squared: f64,
    pub fluctuation: f64,
}

impl JTerms {
    pub fn total(&self) -> f64 {
        self.fourth - self.second_squared + self.fluctuation
    }

    /// Cauchy–Schwarz deficit `∬‖x−y‖⁴ − (∬‖x−y‖²)²`.
    pub fn deficit(&self) -> f64 {
        self.fourth - self.second_squared
    }
}

pub fn functional_j_terms(mu: &DiscreteMeasure, params: &MeanFieldParams) -> JTerms {
    let pi = pair_integrals(mu);
    JTerms {
        fourth: pi.m4,
        second_squared: pi.m2 * pi.m2,
        fluctuation: params.sigma / params.p.sqrt() * params.delta * pi.m4.sqrt(),
    }
}

/// `J_{σ,δ}(μ) = ∬‖x−y‖⁴ − (∬‖x−y‖²)² + (σ/√p)·δ·(∬‖x−y‖⁴)^{1/2}`.
pub fn functional_j(mu: &DiscreteMeasure, params: &MeanFieldParams) -> f64 {
    functional_j_terms(mu, params).total()
}

pub fn radial_reduce(nu: &RadialMeasure) -> RadialMoments {
    let (a, b) = nu
        .radii
        .iter()
        .zip(&nu.weights)
        .fold((0.0, 0.0), |(a, b), (r, w)| (a + w * r * r, b + w * r.powi(4)));
    RadialMoments { a, b }
}

/// `f(a, b) = b + c·√(b/2 + a²)`.
pub fn radial_j(m: &RadialMoments, c: f64) -> Result<f64> {
    m.check()?;
    Ok(m.b + c * (0.5 * m.b + m.a * m.a).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialMinimizer {
    pub b_star: f64,
    pub radius: f64,
}

/// Closed-form minimizer of `f`: a ring with `b* = 3c²/8` for `c < 0`,
/// a point mass otherwise.
pub fn radial_minimizer(c: f64) -> RadialMinimizer {
    if c < 0.0 {
        let b_star = 3.0 * c * c / 8.0;
        RadialMinimizer {
            b_star,
            radius: b_star.powf(0.25),
        }
    } else {
        RadialMinimizer {
            b_star: 0.0,
            radius: 0.0,
        }
    }
}

/// Ring radius minimizing `J_{σ,δ}`: `δ^{1/2}·(3σ²/(8p))^{1/4}` for `σ < 0`.
pub fn ring_radius(params: &MeanFieldParams) -> f64 {
    if params.sigma >= 0.0 {
        return 0.0;
    }
    params.delta.sqrt() * (3.0 * params.sigma * params.sigma / (8.0 * params.p)).powf(0.25)
}

/// Predicted ring radius for a k-regular graph on `n` vertices, using
/// `δ = 1/n` and `p = k/n`; scales as `k^{−1/4} n^{−1/4}`.
pub fn radius_prediction(n: usize, k: usize, sigma: f64) -> Result<f64> {
    if k == 0 || k >= n {
        return Err(Error::param("k", "need 0 < k < n"));
    }
    let params = MeanFieldParams::new(sigma, 1.0 / n as f64, k as f64 / n as f64)?;
    Ok(ring_radius(&params))
}

/// Step between mixture weights in [`numeric_radial_minimize`].
const MIXTURE_STEP: f64 = 0.05;

/// Minimizes `f` over radial measures supported on `grid` with at most two
/// atoms. Two atoms reach every moment pair realizable on the grid's
/// convex hull in the `(r², r⁴)` plane.
pub fn numeric_radial_minimize(c: f64, grid: &[f64]) -> Result<RadialMeasure> {
    if grid.is_empty() || grid.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::param("grid", "need a nonempty grid of nonnegative radii"));
    }
    if !c.is_finite() {
        return Err(Error::param("c", "must be finite"));
    }
    let f = |a: f64, b: f64| b + c * (0.5 * b + a * a).sqrt();
    let m2: Vec<f64> = grid.iter().map(|r| r * r).collect();
    let m4: Vec<f64> = m2.iter().map(|s| s * s).collect();

    let (mut best, mut best_i) = (f64::INFINITY, 0);
    for i in 0..grid.len() {
        let v = f(m2[i], m4[i]);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let steps = (1.0 / MIXTURE_STEP).round() as usize;
    let pair = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut local = (f64::INFINITY, 0, 0);
            for j in i + 1..grid.len() {
                for s in 1..steps {
                    let t = s as f64 / steps as f64;
                    let v = f(t * m2[i] + (1.0 - t) * m2[j], t * m4[i] + (1.0 - t) * m4[j]);
                    if v < local.0 {
                        local = (v, j, s);
                    }
                }
            }
            (local.0, i, local.1, local.2)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::INFINITY, 0, 0, 0), |acc, x| if x.0 < acc.0 { x } else { acc });

    if pair.0 < best {
        let t = pair.3 as f64 / steps as f64;
        RadialMeasure::new(vec![grid[pair.1], grid[pair.2]], vec![t, 1.0 - t])
    } else {
        RadialMeasure::dirac(grid[best_i])
    }
}

/// Components compared by [`taylor_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorTerms {
    /// `log ∬(1+‖x−y‖²)⁻¹`
    pub log_kernel: f64,
    /// `∬ log(1+‖x−y‖²)`
    pub mean_log: f64,
    /// Their sum, the shrinkage functional.
    pub shrinkage: f64,
    /// `∬ log(1+‖x−y‖²)²`, the variance integrand.
    pub mean_log_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorCheck {
    pub diameter: f64,
    pub exact: TaylorTerms,
    pub taylor: TaylorTerms,
    /// `|I_exact − I_taylor|`, of order `r⁶`.
    pub residual: f64,
    /// Set when the diameter exceeds [`TAYLOR_REGIME_LIMIT`].
    pub regime_warning: bool,
}

/// Compares the exact energy integrals with their fourth-order expansions
/// in the pair moments `M₂ = ∬‖x−y‖²`, `M₄ = ∬‖x−y‖⁴`.
pub fn taylor_check(mu: &DiscreteMeasure) -> TaylorCheck {
    let diameter = mu.diameter();
    let regime_warning = diameter > TAYLOR_REGIME_LIMIT;
    if regime_warning {
        log::warn!("measure diameter {diameter} exceeds {TAYLOR_REGIME_LIMIT}; expansion not reliable");
    }
    let pi = pair_integrals(mu);
    let exact = TaylorTerms {
        log_kernel: pi.log_kernel(),
        mean_log: pi.log,
        shrinkage: pi.log_kernel() + pi.log,
        mean_log_sq: pi.log_sq,
    };
    let (m2, m4) = (pi.m2, pi.m4);
    let taylor = TaylorTerms {
        log_kernel: -m2 + m4 - 0.5 * m2 * m2,
        mean_log: m2 - 0.5 * m4,
        shrinkage: 0.5 * m4 - 0.5 * m2 * m2,
        mean_log_sq: m4,
    };
    TaylorCheck {
        diameter,
        exact,
        taylor,
        residual: (exact.shrinkage - taylor.shrinkage).abs(),
        regime_warning,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingStats {
    pub mean_radius: f64,
    /// `None` when every point sits at the centroid.
    pub radial_cv: Option<f64>,
    pub annularity: f64,
}

pub fn ring_stats(e: &Embedding) -> Result<RingStats> {
    let n = e.n();
    if n < 10 {
        return Err(Error::param("embedding", format!("need at least 10 points, got {n}")));
    }
    let c = e.centroid();
    let mut r: Vec<f64> = e
        .coords()
        .iter()
        .map(|y| (y[0] - c[0]).hypot(y[1] - c[1]))
        .collect();
    let nf = n as f64;
    let mean = r.iter().sum::<f64>() / nf;
    let std = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf).sqrt();
    r.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        r[n / 2]
    } else {
        0.5 * (r[n / 2 - 1] + r[n / 2])
    };
    let annularity = r
        .iter()
        .filter(|&&x| x >= 0.5 * median && x <= 1.5 * median)
        .count() as f64
        / nf;
    Ok(RingStats {
        mean_radius: mean,
        radial_cv: (mean > 0.0).then(|| std / mean),
        annularity,
    })
}

/// Energy of an embedding under the graph affinity compared with its
/// ensemble mean and variance.
pub fn energy_stats(g: &Graph, e: &Embedding) -> Result<EnergyStats> {
    let n = g.n();
    if e.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph has {n} vertices, embedding has {} points",
            e.n()
        )));
    }
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    let y = e.coords();
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (mut s, mut s2) = (0.0, 0.0);
            for (j, yj) in y.iter().enumerate() {
                if j != i {
                    let l = ((y[i][0] - yj[0]).powi(2) + (y[i][1] - yj[1]).powi(2)).ln_1p();
                    s += l;
                    s2 += l * l;
                }
            }
            (s, s2)
        })
        .collect();
    let (sum_log, sum_log_sq) = rows.iter().fold((0.0, 0.0), |(a, b), r| (a + r.0, b + r.1));
    let edge_log: f64 = g
        .edges()
        .iter()
        .map(|&(u, v)| {
            let (a, b) = (y[u as usize], y[v as usize]);
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).ln_1p()
        })
        .sum();
    let log_z = normalizer(e).ln();
    let mf = m as f64;
    let p = g.kind().edge_probability(n);
    let actual = log_z + edge_log / mf;
    let expectation = log_z + p / (2.0 * mf) * sum_log;
    let variance = p * (1.0 - p) * sum_log_sq / (4.0 * mf * mf);
    let sigma = if variance > 0.0 {
        Some((actual - expectation) / variance.sqrt())
    } else if (actual - expectation).abs() <= 1e-12 * expectation.abs().max(1.0) {
        Some(0.0)
    } else {
        None
    };
    let k_or_p = match g.kind() {
        GraphKind::KRegular { k } => k as f64,
        GraphKind::ErdosRenyi { p } => p,
    };
    Ok(EnergyStats {
        actual,
        expectation,
        variance,
        sigma,
        model: g.kind().into(),
        n,
        k_or_p,
    })
}
