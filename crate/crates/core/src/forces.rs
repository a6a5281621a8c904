//! Attractive/repulsive decomposition of the t-SNE gradient and the
//! per-point features derived from it.

use std::f64::consts::TAU;
use std::num::NonZero;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affinity::AffinityMatrix;
use crate::error::{Error, Result};
use crate::tsne::{force_terms, Embedding};

/// Color used for points whose force vanishes.
pub const NEUTRAL_COLOR: [u8; 3] = [128, 128, 128];

/// Number of discrete hues on the color wheel.
pub const WHEEL_STEPS: usize = 360;

#[derive(Debug, Clone, PartialEq)]
pub struct ForceField {
    pub attract: Vec<[f64; 2]>,
    pub repulse: Vec<[f64; 2]>,
    pub net: Vec<[f64; 2]>,
}

impl ForceField {
    pub fn from_parts(attract: Vec<[f64; 2]>, repulse: Vec<[f64; 2]>) -> Result<Self> {
        if attract.len() != repulse.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} attractive vs {} repulsive vectors",
                attract.len(),
                repulse.len()
            )));
        }
        let net = attract
            .iter()
            .zip(&repulse)
            .map(|(a, r)| [a[0] + r[0], a[1] + r[1]])
            .collect();
        Ok(ForceField { attract, repulse, net })
    }

    pub fn n(&self) -> usize {
        self.attract.len()
    }

    pub fn channel(&self, c: Channel) -> &[[f64; 2]] {
        match c {
            Channel::Attract => &self.attract,
            Channel::Repulse => &self.repulse,
        }
    }

    pub fn max_norm(&self, c: Channel) -> f64 {
        self.channel(c).iter().map(|v| norm(*v)).fold(0.0, f64::max)
    }

    pub fn max_net_norm(&self) -> f64 {
        self.net.iter().map(|v| norm(*v)).fold(0.0, f64::max)
    }
}

#[inline]
fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Splits `−∂E/∂y_i` into its attractive and repulsive terms.
pub fn decompose_forces(p: &AffinityMatrix, e: &Embedding) -> Result<ForceField> {
    if p.n() != e.n() {
        return Err(Error::DimensionMismatch(format!(
            "affinity has {} points, embedding has {}",
            p.n(),
            e.n()
        )));
    }
    if e.n() < 2 {
        return Err(Error::param("embedding", "need at least 2 points"));
    }
    let (attract, repulse, _) = force_terms(p, e.coords());
    ForceField::from_parts(attract, repulse)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Attract,
    Repulse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Magnitude,
    Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcefulColoring {
    pub magnitude: Vec<f64>,
    /// Angle in `[0, 2π)`; `None` where the force vanishes.
    pub direction: Vec<Option<f64>>,
    pub hue: Vec<[u8; 3]>,
}

/// Angle of a vector in `[0, 2π)`, `None` for the zero vector.
pub fn direction_of(v: [f64; 2]) -> Option<f64> {
    if v[0] == 0.0 && v[1] == 0.0 {
        return None;
    }
    let a = v[1].atan2(v[0]);
    let a = if a < 0.0 { a + TAU } else { a };
    // atan2 can round to exactly 2π
    Some(if a >= TAU { 0.0 } else { a })
}

/// Wheel index of an angle, `0..WHEEL_STEPS`.
pub fn wheel_index(angle: f64) -> usize {
    let idx = (angle / TAU * WHEEL_STEPS as f64).floor() as i64;
    idx.rem_euclid(WHEEL_STEPS as i64) as usize
}

/// Fully saturated color for a wheel index; index 0 is red.
pub fn wheel_color(index: usize) -> [u8; 3] {
    let h = (index % WHEEL_STEPS) as f64 / WHEEL_STEPS as f64 * 6.0;
    let sector = h.floor() as u8;
    let f = h - h.floor();
    let up = (255.0 * f).round() as u8;
    let down = 255 - up;
    match sector {
        0 => [255, up, 0],
        1 => [down, 255, 0],
        2 => [0, 255, up],
        3 => [0, down, 255],
        4 => [up, 0, 255],
        _ => [255, 0, down],
    }
}

/// Dark blue to yellow ramp for `t ∈ [0, 1]`.
pub fn magnitude_color(t: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 3] = [[68.0, 1.0, 84.0], [33.0, 145.0, 140.0], [253.0, 231.0, 37.0]];
    let t = t.clamp(0.0, 1.0) * 2.0;
    let k = (t.floor() as usize).min(1);
    let f = t - k as f64;
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate() {
        *o = (STOPS[k][c] + f * (STOPS[k + 1][c] - STOPS[k][c])).round() as u8;
    }
    out
}

pub fn coloring(f: &ForceField, channel: Channel, feature: Feature) -> ForcefulColoring {
    let v = f.channel(channel);
    let magnitude: Vec<f64> = v.iter().map(|x| norm(*x)).collect();
    let direction: Vec<Option<f64>> = v.iter().map(|x| direction_of(*x)).collect();
    let max = magnitude.iter().copied().fold(0.0, f64::max);
    let hue = magnitude
        .iter()
        .zip(&direction)
        .map(|(&m, d)| match (feature, d) {
            (_, None) => NEUTRAL_COLOR,
            (Feature::Direction, Some(a)) => wheel_color(wheel_index(*a)),
            (Feature::Magnitude, Some(_)) => magnitude_color(m / max),
        })
        .collect();
    ForcefulColoring {
        magnitude,
        direction,
        hue,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkParams {
    /// Flow step length; defaults to 0.1 × median nearest-neighbour distance.
    pub step: Option<f64>,
    /// Neighbours used for inverse-distance interpolation.
    pub neighbors: usize,
    pub max_steps: usize,
    /// Defaults to the median nearest-neighbour distance.
    pub merge_radius: Option<f64>,
    pub channel: Channel,
    /// Follow the negated field (sources instead of sinks).
    pub reverse: bool,
}

impl Default for SinkParams {
    fn default() -> Self {
        SinkParams {
            step: None,
            neighbors: 15,
            max_steps: 500,
            merge_radius: None,
            channel: Channel::Attract,
            reverse: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSinkParams {
    pub step: f64,
    pub neighbors: usize,
    pub max_steps: usize,
    pub merge_radius: f64,
    pub channel: Channel,
    pub reverse: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkAssignment {
    /// Sorted lexicographically by coordinates.
    pub sink_points: Vec<[f64; 2]>,
    pub labels: Vec<Option<usize>>,
    pub params: ResolvedSinkParams,
}

impl SinkAssignment {
    pub fn sink_count(&self) -> usize {
        self.sink_points.len()
    }

    pub fn unassigned(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }
}

type Tree = ImmutableKdTree<f64, 2>;

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Median distance from each point to its nearest other point.
fn median_nn_distance(tree: &Tree, pts: &[[f64; 2]]) -> f64 {
    let two = NonZero::new(2).unwrap();
    let mut d: Vec<f64> = pts
        .iter()
        .map(|q| {
            tree.nearest_n::<SquaredEuclidean>(q, two)
                .last()
                .map_or(0.0, |nn| nn.distance.sqrt())
        })
        .collect();
    d.sort_by(f64::total_cmp);
    let med = d[d.len() / 2];
    if med > 0.0 {
        return med;
    }
    // many duplicates: fall back to the typical positive spacing
    let pos: Vec<f64> = d.into_iter().filter(|&x| x > 0.0).collect();
    if pos.is_empty() {
        0.0
    } else {
        pos[pos.len() / 2]
    }
}

/// Inverse-distance (power 2) interpolation of a vector field.
fn interpolate(tree: &Tree, field: &[[f64; 2]], k: NonZero<usize>, x: [f64; 2]) -> [f64; 2] {
    let nn = tree.nearest_n::<SquaredEuclidean>(&x, k);
    let mut acc = [0.0, 0.0];
    let mut wsum = 0.0;
    for hit in &nn {
        let i = hit.item as usize;
        if hit.distance == 0.0 {
            return field[i];
        }
        let w = 1.0 / hit.distance;
        acc[0] += w * field[i][0];
        acc[1] += w * field[i][1];
        wsum += w;
    }
    if wsum > 0.0 {
        [acc[0] / wsum, acc[1] / wsum]
    } else {
        [0.0, 0.0]
    }
}

/// Integrates the normalized flow from `start`; `None` if it never settles.
fn flow_terminal(
    tree: &Tree,
    field: &[[f64; 2]],
    k: NonZero<usize>,
    start: [f64; 2],
    prm: &ResolvedSinkParams,
) -> Option<[f64; 2]> {
    const MACRO: usize = 10;
    let sign = if prm.reverse { -1.0 } else { 1.0 };
    let mut x = start;
    let mut anchor = start;
    for step in 1..=prm.max_steps {
        let v = interpolate(tree, field, k, x);
        let m = norm(v);
        if m == 0.0 {
            if step == 1 {
                return None;
            }
            return Some(x);
        }
        x[0] += sign * prm.step * v[0] / m;
        x[1] += sign * prm.step * v[1] / m;
        if step % MACRO == 0 {
            if dist2(x, anchor).sqrt() < prm.merge_radius / 10.0 {
                return Some(x);
            }
            anchor = x;
        }
    }
    None
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
    }
}

/// Follows the interpolated field from every point and groups the
/// terminal positions into sinks.
pub fn detect_sinks(f: &ForceField, e: &Embedding, params: &SinkParams) -> Result<SinkAssignment> {
    let pts = e.coords();
    let n = pts.len();
    if n == 0 {
        return Err(Error::param("embedding", "empty embedding"));
    }
    if f.n() != n {
        return Err(Error::DimensionMismatch(format!("field has {} points, embedding has {n}", f.n())));
    }
    if params.neighbors == 0 || params.max_steps == 0 {
        return Err(Error::param("sink_params", "neighbors and max_steps must be positive"));
    }
    let tree = Tree::new_from_slice(pts);
    let nn = if n > 1 { median_nn_distance(&tree, pts) } else { 0.0 };
    let merge_radius = params.merge_radius.unwrap_or(nn);
    let step = params.step.unwrap_or(0.1 * nn);
    if !(merge_radius > 0.0 && merge_radius.is_finite() && step > 0.0 && step.is_finite()) {
        return Err(Error::param(
            "sink_params",
            "step and merge radius must be positive (all points coincide?)",
        ));
    }
    let prm = ResolvedSinkParams {
        step,
        neighbors: params.neighbors,
        max_steps: params.max_steps,
        merge_radius,
        channel: params.channel,
        reverse: params.reverse,
    };
    let k = NonZero::new(params.neighbors.min(n)).unwrap();
    let field = f.channel(params.channel);

    let terminals: Vec<Option<[f64; 2]>> = (0..n)
        .into_par_iter()
        .map(|i| flow_terminal(&tree, field, k, pts[i], &prm))
        .collect();

    // single linkage over terminal positions
    let ended: Vec<usize> = (0..n).filter(|&i| terminals[i].is_some()).collect();
    let tpos: Vec<[f64; 2]> = ended.iter().map(|&i| terminals[i].unwrap()).collect();
    let mut parent: Vec<usize> = (0..tpos.len()).collect();
    if !tpos.is_empty() {
        let ttree = Tree::new_from_slice(&tpos);
        let r2 = merge_radius * merge_radius;
        for (a, q) in tpos.iter().enumerate() {
            for hit in ttree.within_unsorted::<SquaredEuclidean>(q, r2) {
                union(&mut parent, a, hit.item as usize);
            }
        }
    }
    let mut centroid_of_root: Vec<Option<usize>> = vec![None; tpos.len()];
    let mut sums: Vec<([f64; 2], usize)> = Vec::new();
    let mut cluster_of = vec![0usize; tpos.len()];
    for a in 0..tpos.len() {
        let r = find(&mut parent, a);
        let c = *centroid_of_root[r].get_or_insert_with(|| {
            sums.push(([0.0, 0.0], 0));
            sums.len() - 1
        });
        cluster_of[a] = c;
        sums[c].0[0] += tpos[a][0];
        sums[c].0[1] += tpos[a][1];
        sums[c].1 += 1;
    }
    let mut centers: Vec<[f64; 2]> = sums
        .iter()
        .map(|(s, m)| [s[0] / *m as f64, s[1] / *m as f64])
        .collect();

    // merge clusters whose centers are still too close
    loop {
        let mut cparent: Vec<usize> = (0..centers.len()).collect();
        let mut merged = false;
        for a in 0..centers.len() {
            for b in a + 1..centers.len() {
                if dist2(centers[a], centers[b]) <= merge_radius * merge_radius {
                    union(&mut cparent, a, b);
                    merged = true;
                }
            }
        }
        if !merged {
            break;
        }
        let mut remap: Vec<Option<usize>> = vec![None; centers.len()];
        let mut acc: Vec<([f64; 2], usize)> = Vec::new();
        for c in 0..centers.len() {
            let r = find(&mut cparent, c);
            let id = *remap[r].get_or_insert_with(|| {
                acc.push(([0.0, 0.0], 0));
                acc.len() - 1
            });
            remap[c] = Some(id);
        }
        for (a, c) in cluster_of.iter_mut().enumerate() {
            *c = remap[*c].unwrap();
            acc[*c].0[0] += tpos[a][0];
            acc[*c].0[1] += tpos[a][1];
            acc[*c].1 += 1;
        }
        centers = acc.iter().map(|(s, m)| [s[0] / *m as f64, s[1] / *m as f64]).collect();
    }

    // canonical labels
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.sort_by(|&a, &b| {
        centers[a][0]
            .total_cmp(&centers[b][0])
            .then(centers[a][1].total_cmp(&centers[b][1]))
    });
    let mut rank = vec![0usize; centers.len()];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    let sink_points: Vec<[f64; 2]> = order.iter().map(|&c| centers[c]).collect();
    let mut labels = vec![None; n];
    for (a, &i) in ended.iter().enumerate() {
        let s = rank[cluster_of[a]];
        if dist2(tpos[a], sink_points[s]) <= merge_radius * merge_radius {
            labels[i] = Some(s);
        }
    }
    Ok(SinkAssignment {
        sink_points,
        labels,
        params: prm,
    })
}

/// Circular variance of attractive directions among neighbours within
/// `radius` (self excluded). `None` for isolated points.
pub fn homogeneity_score(f: &ForceField, e: &Embedding, radius: f64) -> Result<Vec<Option<f64>>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", "must be positive"));
    }
    let pts = e.coords();
    if f.n() != pts.len() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} points, embedding has {}",
            f.n(),
            pts.len()
        )));
    }
    if pts.is_empty() {
        return Ok(Vec::new());
    }
    let tree = Tree::new_from_slice(pts);
    let r2 = radius * radius;
    Ok((0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut hits: Vec<usize> = tree
                .within_unsorted::<SquaredEuclidean>(&pts[i], r2)
                .into_iter()
                .map(|h| h.item as usize)
                .filter(|&j| j != i)
                .collect();
            hits.sort_unstable();
            let mut sx = 0.0;
            let mut sy = 0.0;
            let mut m = 0usize;
            for j in hits {
                let v = f.attract[j];
                let r = norm(v);
                if r > 0.0 {
                    sx += v[0] / r;
                    sy += v[1] / r;
                    m += 1;
                }
            }
            (m > 0).then(|| (1.0 - sx.hypot(sy) / m as f64).clamp(0.0, 1.0))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wheel_convention() {
        assert_eq!(direction_of([1.0, 0.0]), Some(0.0));
        assert!((direction_of([0.0, 1.0]).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(direction_of([0.0, 0.0]), None);
        assert_eq!(wheel_index(0.0), 0);
        assert_eq!(wheel_index(std::f64::consts::FRAC_PI_2), 90);
        assert_eq!(wheel_color(0), [255, 0, 0]);
        assert_eq!(wheel_color(120), [0, 255, 0]);
        assert_eq!(wheel_color(240), [0, 0, 255]);
    }

    #[test]
    fn negative_angles_wrap() {
        let a = direction_of([0.0, -1.0]).unwrap();
        assert!((a - 1.5 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(wheel_index(a), 270);
    }

    #[test]
    fn zero_vectors_get_neutral_color() {
        let f = ForceField::from_parts(vec![[0.0, 0.0], [1.0, 0.0]], vec![[0.0, 0.0]; 2]).unwrap();
        for feature in [Feature::Direction, Feature::Magnitude] {
            let c = coloring(&f, Channel::Attract, feature);
            assert_eq!(c.hue[0], NEUTRAL_COLOR);
            assert_eq!(c.direction[0], None);
        }
    }

    #[test]
    fn magnitude_ramp_ends() {
        assert_eq!(magnitude_color(0.0), [68, 1, 84]);
        assert_eq!(magnitude_color(1.0), [253, 231, 37]);
    }

    #[test]
    fn mismatched_parts_are_rejected() {
        assert!(ForceField::from_parts(vec![[0.0, 0.0]], vec![]).is_err());
    }

    #[test]
    fn empty_embedding_has_no_sinks() {
        let f = ForceField::from_parts(vec![], vec![]).unwrap();
        let e = Embedding::new(vec![]).unwrap();
        assert!(detect_sinks(&f, &e, &SinkParams::default()).is_err());
    }
}
