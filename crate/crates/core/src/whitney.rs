//! Sigma-adapted ball covers and the Whitney smoothing of `delta`.
//!
//! Centers are picked greedily in order of descending `delta` (ties by index)
//! and own the ball of radius `theta(p) = xi * delta(p)`. Families are
//! assigned so that within one family the `10 theta` balls are disjoint.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretize::MetricGraph;
use crate::length::Length;
use crate::paths::{Dijkstra, SearchLimits};
use crate::sigma::SigmaField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WhitneyError {
    #[error("xi = {xi} is outside (0, {max}]")]
    XiOutOfRange { xi: f64, max: f64 },
    #[error("field is identically zero; there is nothing to cover")]
    TrivialField,
    #[error("a non-trivial field needs a cover to be smoothed")]
    MissingCover,
    #[error("field has {got} values, graph has {expected} vertices")]
    WrongLength { expected: usize, got: usize },
}

/// Largest admissible `xi` for a field with Lipschitz estimate `l_hat`.
pub fn max_xi(l_hat: f64) -> f64 {
    1.0 / (1000.0 * l_hat)
}

/// Default `xi`: 90% of [`max_xi`].
pub fn default_xi(l_hat: f64) -> f64 {
    0.9 * max_xi(l_hat)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverChecks {
    pub covered: bool,
    pub separated: bool,
    pub families_disjoint: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaCover {
    pub xi: f64,
    pub l_hat: f64,
    pub centers: Vec<usize>,
    /// `theta(p)` for each center, in center order.
    pub radii: Vec<f64>,
    pub families: Vec<u32>,
    pub family_count: u32,
    /// `aleph(z, 1)`: number of `theta` balls containing each vertex.
    pub aleph_1: Vec<u32>,
    /// `aleph(z, 10)`: number of `10 theta` balls containing each vertex.
    pub aleph_10: Vec<u32>,
    /// `max_z aleph(z, 1)`.
    pub multiplicity: u32,
    pub checks: CoverChecks,
}

impl SigmaCover {
    pub fn is_valid(&self) -> bool {
        self.checks.covered && self.checks.separated && self.checks.families_disjoint
    }

    /// Histogram `h[k]` = number of vertices with `aleph(z, 1) = k`.
    pub fn histogram_1(&self) -> Vec<usize> {
        histogram(&self.aleph_1)
    }

    pub fn histogram_10(&self) -> Vec<usize> {
        histogram(&self.aleph_10)
    }
}

fn histogram(values: &[u32]) -> Vec<usize> {
    let max = values.iter().cloned().max().unwrap_or(0) as usize;
    let mut h = vec![0; max + 1];
    for &v in values {
        h[v as usize] += 1;
    }
    h
}

/// Growable per-vertex bitsets over family indices.
struct FamilyBits {
    words: usize,
    bits: Vec<u64>,
}

impl FamilyBits {
    fn new(n: usize) -> Self {
        FamilyBits { words: 1, bits: vec![0; n] }
    }

    fn ensure(&mut self, family: u32) {
        let need = family as usize / 64 + 1;
        if need <= self.words {
            return;
        }
        let n = self.bits.len() / self.words;
        let mut bits = vec![0u64; n * need];
        for v in 0..n {
            bits[v * need..v * need + self.words].copy_from_slice(&self.bits[v * self.words..(v + 1) * self.words]);
        }
        self.bits = bits;
        self.words = need;
    }

    fn get(&self, v: usize, family: u32) -> bool {
        let w = family as usize / 64;
        w < self.words && self.bits[v * self.words + w] >> (family % 64) & 1 == 1
    }

    fn set(&mut self, v: usize, family: u32) {
        self.ensure(family);
        self.bits[v * self.words + family as usize / 64] |= 1 << (family % 64);
    }

    fn union_into(&self, v: usize, acc: &mut Vec<u64>) {
        if acc.len() < self.words {
            acc.resize(self.words, 0);
        }
        for w in 0..self.words {
            acc[w] |= self.bits[v * self.words + w];
        }
    }
}

fn lowest_clear(acc: &[u64]) -> u32 {
    for (w, &word) in acc.iter().enumerate() {
        if word != u64::MAX {
            return (w * 64) as u32 + (!word).trailing_zeros();
        }
    }
    (acc.len() * 64) as u32
}

fn ball(graph: &MetricGraph, center: usize, radius: f64, ws: &mut Dijkstra) {
    ws.run(graph, graph.lengths(), &[(center, 0.0)], SearchLimits { bound: Some(radius), ..SearchLimits::default() });
}

fn deltas(field: &SigmaField) -> Vec<f64> {
    field.deltas().iter().map(|d| d.to_f64()).collect()
}

pub fn build_cover(graph: &MetricGraph, field: &SigmaField, xi: f64) -> Result<SigmaCover, WhitneyError> {
    let n = graph.vertex_count();
    if field.len() != n {
        return Err(WhitneyError::WrongLength { expected: n, got: field.len() });
    }
    if field.is_trivial() {
        return Err(WhitneyError::TrivialField);
    }
    let l_hat = field.lipschitz_estimate(graph);
    let max = max_xi(l_hat);
    if !(xi > 0.0 && xi <= max) {
        return Err(WhitneyError::XiOutOfRange { xi, max });
    }
    let delta = deltas(field);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| delta[j].total_cmp(&delta[i]).then(i.cmp(&j)));

    let mut ws = Dijkstra::new(n);
    let mut covered = vec![false; n];
    let mut centers = Vec::new();
    for &p in &order {
        if covered[p] {
            continue;
        }
        centers.push(p);
        ball(graph, p, xi * delta[p], &mut ws);
        for &v in ws.settled() {
            covered[v as usize] = true;
        }
    }
    let radii: Vec<f64> = centers.iter().map(|&p| xi * delta[p]).collect();

    let mut is_center = vec![false; n];
    for &p in &centers {
        is_center[p] = true;
    }
    let mut aleph_1 = vec![0u32; n];
    let mut aleph_10 = vec![0u32; n];
    let mut used = FamilyBits::new(n);
    let mut families = Vec::with_capacity(centers.len());
    let mut separated = true;
    let mut acc: Vec<u64> = Vec::new();
    for (ci, &p) in centers.iter().enumerate() {
        let theta = radii[ci];
        ball(graph, p, 10.0 * theta, &mut ws);
        acc.clear();
        for &v in ws.settled() {
            used.union_into(v as usize, &mut acc);
        }
        let family = lowest_clear(&acc);
        for &v in ws.settled() {
            let v = v as usize;
            used.set(v, family);
            aleph_10[v] += 1;
            if ws.dist(v) <= theta {
                aleph_1[v] += 1;
                if v != p && is_center[v] {
                    separated = false;
                }
            }
        }
        families.push(family);
    }
    let family_count = families.iter().cloned().max().map_or(0, |f| f + 1);

    // Independent re-scan of the family invariant.
    let mut seen = FamilyBits::new(n);
    let mut families_disjoint = true;
    for (ci, &p) in centers.iter().enumerate() {
        ball(graph, p, 10.0 * radii[ci], &mut ws);
        for &v in ws.settled() {
            if seen.get(v as usize, families[ci]) {
                families_disjoint = false;
            }
        }
        for &v in ws.settled() {
            seen.set(v as usize, families[ci]);
        }
    }
    let checks = CoverChecks { covered: aleph_1.iter().all(|&c| c > 0), separated, families_disjoint };
    Ok(SigmaCover {
        xi,
        l_hat,
        centers,
        radii,
        families,
        family_count,
        multiplicity: aleph_1.iter().cloned().max().unwrap_or(0),
        aleph_1,
        aleph_10,
        checks,
    })
}

/// Quintic bump: 1 on `[0, 1]`, 0 on `[2, inf)`, `C^2` in between.
pub fn bump(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let u = s - 1.0;
        1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `sum delta(p) phi_p / sum phi_p`.
    #[default]
    PartitionOfUnity,
    /// `sum delta(p) phi_p`.
    RawSum,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothedField {
    pub normalization: Normalization,
    pub delta_star: Vec<Length>,
    pub b_star: Vec<f64>,
}

/// Whitney smoothing with bumps `phi(dist(x, p) / (2 theta(p)))`.
pub fn smooth_sigma(graph: &MetricGraph, field: &SigmaField, cover: Option<&SigmaCover>, normalization: Normalization) -> Result<SmoothedField, WhitneyError> {
    let n = graph.vertex_count();
    if field.len() != n {
        return Err(WhitneyError::WrongLength { expected: n, got: field.len() });
    }
    if field.is_trivial() {
        return Ok(SmoothedField { normalization, delta_star: vec![Length::Infinite; n], b_star: vec![0.0; n] });
    }
    let cover = cover.ok_or(WhitneyError::MissingCover)?;
    let delta = deltas(field);
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    let mut ws = Dijkstra::new(n);
    for (ci, &p) in cover.centers.iter().enumerate() {
        let support = 2.0 * cover.radii[ci];
        ball(graph, p, 2.0 * support, &mut ws);
        for &v in ws.settled() {
            let v = v as usize;
            let phi = bump(ws.dist(v) / support);
            num[v] += delta[p] * phi;
            den[v] += phi;
        }
    }
    let delta_star: Vec<Length> = (0..n)
        .map(|v| {
            let d = match normalization {
                Normalization::PartitionOfUnity if den[v] > 0.0 => num[v] / den[v],
                Normalization::PartitionOfUnity => 0.0,
                Normalization::RawSum => num[v],
            };
            Length::Finite(d)
        })
        .collect();
    let b_star = delta_star.iter().map(|d| 1.0 / d.to_f64()).collect();
    Ok(SmoothedField { normalization, delta_star, b_star })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothingReport {
    /// `min delta* / delta`.
    pub c1: f64,
    /// `max delta* / delta`.
    pub c2: f64,
    /// `max |delta*(u) - delta*(v)| / len` over edges.
    pub c3: f64,
    pub trivial: bool,
    pub pass: bool,
}

pub fn verify_smoothing(field: &SigmaField, smoothed: &SmoothedField, graph: &MetricGraph) -> Result<SmoothingReport, WhitneyError> {
    let n = graph.vertex_count();
    if field.len() != n || smoothed.delta_star.len() != n {
        return Err(WhitneyError::WrongLength { expected: n, got: smoothed.delta_star.len().min(field.len()) });
    }
    if field.is_trivial() {
        let untouched = smoothed.delta_star.iter().all(|d| !d.is_finite());
        return Ok(SmoothingReport { c1: 1.0, c2: 1.0, c3: 0.0, trivial: true, pass: untouched });
    }
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for v in 0..n {
        let ratio = smoothed.delta_star[v].to_f64() / field.delta(v).to_f64();
        c1 = c1.min(ratio);
        c2 = c2.max(ratio);
    }
    let c3 = graph
        .edges()
        .map(|(u, v, len)| (smoothed.delta_star[u].to_f64() - smoothed.delta_star[v].to_f64()).abs() / len)
        .fold(0.0, f64::max);
    Ok(SmoothingReport { c1, c2, c3, trivial: false, pass: c1 > 0.0 && c2.is_finite() && c3.is_finite() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.5), 1.0);
        assert_eq!(bump(2.5), 0.0);
        assert!((bump(1.5) - 0.5).abs() < 1e-12);
        let eps = 1e-7;
        assert!((bump(1.0 + eps) - 1.0).abs() < 1e-12);
        assert!(bump(2.0 - eps).abs() < 1e-12);
    }

    #[test]
    fn family_bits_grow() {
        let mut b = FamilyBits::new(3);
        b.set(1, 3);
        b.set(1, 130);
        assert!(b.get(1, 3) && b.get(1, 130) && !b.get(0, 130));
        let mut acc = Vec::new();
        b.union_into(1, &mut acc);
        assert_eq!(lowest_clear(&acc), 0);
        acc[0] = u64::MAX;
        assert_eq!(lowest_clear(&acc), 64);
    }
}
