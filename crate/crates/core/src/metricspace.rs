//! Conformal path metrics on a graph: intrinsic, quasi-hyperbolic, sigma and
//! smoothed sigma, plus the comparison inequalities between them.
//!
//! An edge `(u, v)` under density `w` costs `len * (w(u) + w(v)) / 2`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;
use thiserror::Error;

use crate::discretize::MetricGraph;
use crate::length::Length;
use crate::par;
use crate::sampling;
use crate::paths::{Dijkstra, SearchLimits};
use crate::sigma::SigmaField;
use crate::tolerance::Tolerance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("vertex {0} is not in the graph")]
    InvalidVertex(usize),
    #[error("endpoints must be distinct")]
    SameEndpoints,
    #[error("vertex {q} is unreachable from {p}")]
    Unreachable { p: usize, q: usize },
    #[error("quasi-hyperbolic weight needs a singular set")]
    NoSigma,
    #[error("field is identically zero on a totally geodesic graph")]
    TrivialField,
    #[error("expected {expected} weights, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("weights must be finite and nonnegative (vertex {0})")]
    InvalidWeight(usize),
    #[error("no sources given")]
    NoSources,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Intrinsic,
    QuasiHyperbolic,
    Sigma,
    SigmaSmoothed,
}

impl WeightKind {
    pub fn label(self) -> &'static str {
        match self {
            WeightKind::Intrinsic => "intrinsic",
            WeightKind::QuasiHyperbolic => "quasi_hyperbolic",
            WeightKind::Sigma => "sigma",
            WeightKind::SigmaSmoothed => "sigma_smoothed",
        }
    }
}

/// Per-vertex density with the derived per-slot edge costs.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightField {
    kind: WeightKind,
    weights: Vec<f64>,
    costs: Vec<f64>,
}

impl WeightField {
    pub fn from_weights(graph: &MetricGraph, kind: WeightKind, weights: Vec<f64>) -> Result<Self, MetricError> {
        if weights.len() != graph.vertex_count() {
            return Err(MetricError::WrongLength { expected: graph.vertex_count(), got: weights.len() });
        }
        if let Some(v) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(MetricError::InvalidWeight(v));
        }
        let mut costs = vec![0.0; graph.slot_count()];
        for u in 0..graph.vertex_count() {
            for slot in graph.slots(u) {
                let v = graph.slot_target(slot);
                costs[slot] = graph.lengths()[slot] * 0.5 * (weights[u] + weights[v]);
            }
        }
        Ok(WeightField { kind, weights, costs })
    }

    pub fn intrinsic(graph: &MetricGraph) -> Self {
        WeightField { kind: WeightKind::Intrinsic, weights: vec![1.0; graph.vertex_count()], costs: graph.lengths().to_vec() }
    }

    /// Density `1 / dist_sigma`.
    pub fn quasi_hyperbolic(graph: &MetricGraph) -> Result<Self, MetricError> {
        if !graph.has_sigma() {
            return Err(MetricError::NoSigma);
        }
        let w = (0..graph.vertex_count())
            .map(|v| match graph.dist_sigma(v) {
                Length::Finite(d) if d > 0.0 => 1.0 / d,
                _ => 0.0,
            })
            .collect();
        WeightField::from_weights(graph, WeightKind::QuasiHyperbolic, w)
    }

    /// Density `b` of a sigma field.
    pub fn sigma(graph: &MetricGraph, field: &SigmaField) -> Result<Self, MetricError> {
        if field.is_trivial() {
            return Err(MetricError::TrivialField);
        }
        WeightField::from_weights(graph, WeightKind::Sigma, field.b_values().to_vec())
    }

    /// Density `b* = 1 / delta*` of a smoothed field.
    pub fn smoothed(graph: &MetricGraph, b_star: &[f64]) -> Result<Self, MetricError> {
        if b_star.iter().all(|&b| b == 0.0) {
            return Err(MetricError::TrivialField);
        }
        WeightField::from_weights(graph, WeightKind::SigmaSmoothed, b_star.to_vec())
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }
}

/// A shortest vertex path with per-segment lengths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicPath {
    pub vertices: Vec<usize>,
    /// Intrinsic length of each segment.
    pub segment_lengths: Vec<f64>,
    /// Weighted length of each segment.
    pub segment_costs: Vec<f64>,
    pub intrinsic_length: f64,
    pub weighted_length: f64,
}

impl GeodesicPath {
    /// Builds the record for an arbitrary vertex path (consecutive vertices must be adjacent).
    pub fn from_vertices(graph: &MetricGraph, weight: &WeightField, vertices: Vec<usize>) -> Result<Self, MetricError> {
        let mut segment_lengths = Vec::with_capacity(vertices.len().saturating_sub(1));
        let mut segment_costs = Vec::with_capacity(vertices.len().saturating_sub(1));
        for w in vertices.windows(2) {
            let len = graph.edge_length(w[0], w[1]).ok_or(MetricError::Unreachable { p: w[0], q: w[1] })?;
            segment_lengths.push(len);
            segment_costs.push(len * 0.5 * (weight.weight(w[0]) + weight.weight(w[1])));
        }
        Ok(GeodesicPath {
            intrinsic_length: segment_lengths.iter().sum(),
            weighted_length: segment_costs.iter().sum(),
            vertices,
            segment_lengths,
            segment_costs,
        })
    }

    pub fn source(&self) -> usize {
        self.vertices[0]
    }

    pub fn target(&self) -> usize {
        *self.vertices.last().expect("path is nonempty")
    }

    /// Intrinsic arclength from the source to each vertex.
    pub fn arclengths(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.vertices.len());
        let mut acc = 0.0;
        out.push(0.0);
        for l in &self.segment_lengths {
            acc += l;
            out.push(acc);
        }
        out
    }

    /// Sub-path between vertex positions `i..=j`.
    pub fn subpath(&self, i: usize, j: usize) -> GeodesicPath {
        let segment_lengths = self.segment_lengths[i..j].to_vec();
        let segment_costs = self.segment_costs[i..j].to_vec();
        GeodesicPath {
            intrinsic_length: segment_lengths.iter().sum(),
            weighted_length: segment_costs.iter().sum(),
            vertices: self.vertices[i..=j].to_vec(),
            segment_lengths,
            segment_costs,
        }
    }
}

fn check_vertex(graph: &MetricGraph, v: usize) -> Result<(), MetricError> {
    if v < graph.vertex_count() {
        Ok(())
    } else {
        Err(MetricError::InvalidVertex(v))
    }
}

/// Single-source search under `weight`, optionally stopping at `target`.
pub fn search(graph: &MetricGraph, weight: &WeightField, source: usize, target: Option<usize>, ws: &mut Dijkstra) {
    ws.run(graph, weight.costs(), &[(source, 0.0)], SearchLimits { target, ..SearchLimits::default() });
}

pub fn shortest_path(graph: &MetricGraph, weight: &WeightField, p: usize, q: usize) -> Result<GeodesicPath, MetricError> {
    let mut ws = Dijkstra::new(graph.vertex_count());
    shortest_path_with(graph, weight, p, q, &mut ws)
}

/// [`shortest_path`] reusing caller scratch space.
pub fn shortest_path_with(
    graph: &MetricGraph,
    weight: &WeightField,
    p: usize,
    q: usize,
    ws: &mut Dijkstra,
) -> Result<GeodesicPath, MetricError> {
    check_vertex(graph, p)?;
    check_vertex(graph, q)?;
    if p == q {
        return Err(MetricError::SameEndpoints);
    }
    search(graph, weight, p, Some(q), ws);
    let verts = ws.path_to(q).ok_or(MetricError::Unreachable { p, q })?;
    GeodesicPath::from_vertices(graph, weight, verts)
}

/// Rows of exact distances, one per source, in source order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceMatrix {
    pub sources: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn get(&self, row: usize, v: usize) -> f64 {
        self.rows[row][v]
    }
}

pub fn distance_matrix(graph: &MetricGraph, weight: &WeightField, sources: &[usize]) -> Result<DistanceMatrix, MetricError> {
    if sources.is_empty() {
        return Err(MetricError::NoSources);
    }
    for &s in sources {
        check_vertex(graph, s)?;
    }
    let n = graph.vertex_count();
    let rows = par::map_with(sources.len(), || Dijkstra::new(n), |ws, i| {
        search(graph, weight, sources[i], None, ws);
        ws.dense()
    });
    Ok(DistanceMatrix { sources: sources.to_vec(), rows })
}

/// Distances from a set of sources taken together (e.g. the near-singular ring).
pub fn multi_source_distances(graph: &MetricGraph, weight: &WeightField, sources: &[usize]) -> Result<Vec<f64>, MetricError> {
    if sources.is_empty() {
        return Err(MetricError::NoSources);
    }
    for &s in sources {
        check_vertex(graph, s)?;
    }
    let mut ws = Dijkstra::new(graph.vertex_count());
    let src: Vec<(usize, f64)> = sources.iter().map(|&s| (s, 0.0)).collect();
    ws.run(graph, weight.costs(), &src, SearchLimits::default());
    Ok(ws.dense())
}

/// Vertices usable as sample endpoints: unflagged, and when a singular set
/// exists, outside the collar where truncation caps `b` at `max a`.
pub fn sample_pool(graph: &MetricGraph, alpha: f64) -> Vec<usize> {
    let collar = if graph.has_sigma() {
        let d_min = (0..graph.vertex_count()).map(|v| graph.dist_sigma(v).to_f64()).fold(f64::INFINITY, f64::min);
        let max_a = graph.a_values().iter().cloned().fold(0.0, f64::max);
        2.0 * (d_min + if max_a > 0.0 { alpha / max_a } else { 0.0 })
    } else {
        0.0
    };
    (0..graph.vertex_count())
        .filter(|&v| graph.flags(v).is_empty() && graph.dist_sigma(v).to_f64() >= collar)
        .collect()
}

/// `count` seeded pairs with distinct endpoints drawn from `pool`.
pub fn sample_pairs(pool: &[usize], count: usize, seed: u64) -> Vec<(usize, usize)> {
    sampling::pairs(pool, count, seed)
}

/// Inputs to [`check_inequality_suite`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteOptions {
    pub l_hat: f64,
    /// Uniformity estimate; the upper-bound clause is skipped without it.
    pub a_hat: Option<f64>,
    pub tolerance: Tolerance,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClauseReport {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    /// Smallest `(rhs * (1 + eps) - lhs) / rhs` seen.
    pub min_margin: f64,
    pub mean_margin: f64,
    pub skipped: Option<String>,
}

impl ClauseReport {
    fn new(name: &str) -> Self {
        ClauseReport { name: name.into(), checked: 0, violations: 0, min_margin: f64::INFINITY, mean_margin: 0.0, skipped: None }
    }

    fn record(&mut self, lhs: f64, rhs: f64, eps: f64) {
        let scale = rhs.abs().max(1e-300);
        let margin = if lhs == 0.0 && rhs == 0.0 { 0.0 } else { (rhs * (1.0 + eps) - lhs) / scale };
        self.checked += 1;
        if margin < 0.0 {
            self.violations += 1;
        }
        self.min_margin = self.min_margin.min(margin);
        self.mean_margin += margin;
    }

    fn finish(&mut self) {
        if self.checked > 0 {
            self.mean_margin /= self.checked as f64;
        } else {
            self.min_margin = 0.0;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub pairs: usize,
    pub l_hat: f64,
    pub a_hat: Option<f64>,
    pub tolerance: Tolerance,
    pub clauses: Vec<ClauseReport>,
    pub violations: usize,
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn clause(&self, name: &str) -> Option<&ClauseReport> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

/// Checks the comparison inequalities between `d`, `k` and `d_b` on sampled pairs.
///
/// Clauses, with `d` intrinsic, `k` quasi-hyperbolic, `d_b` sigma distance:
/// - `sigma_vs_quasi_hyperbolic`: `d_b >= k / L` and
///   `k >= log((1 + d / dist(x)) (1 + d / dist(y))) / 2`
/// - `log_lower`: `log(1 + d max b) <= d_b`
/// - `log_delta`: `|log delta(x) - log delta(y)| <= d_b`
/// - `upper`: `d_b <= 4 a^2 log(1 + d max b)`
pub fn check_inequality_suite(
    graph: &MetricGraph,
    field: &SigmaField,
    pairs: &[(usize, usize)],
    opts: &SuiteOptions,
) -> Result<SuiteReport, MetricError> {
    for &(x, y) in pairs {
        check_vertex(graph, x)?;
        check_vertex(graph, y)?;
    }
    let eps = opts.tolerance.eps_h;
    let intrinsic = WeightField::intrinsic(graph);
    let sigma = WeightField::sigma(graph, field)?;
    let qh = WeightField::quasi_hyperbolic(graph).ok();

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by_key(|&i| (pairs[i].0, i));
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some((src, list)) if *src == pairs[i].0 => list.push(pairs[i].1),
            _ => groups.push((pairs[i].0, vec![pairs[i].1])),
        }
    }
    let n = graph.vertex_count();
    // Per group: (x, y, d, d_b, k) for every target.
    let rows: Vec<Vec<(usize, usize, f64, f64, Option<f64>)>> = par::map_with(
        groups.len(),
        || Dijkstra::new(n),
        |ws, gi| {
            let (x, ref ys) = groups[gi];
            search(graph, &intrinsic, x, None, ws);
            let d: Vec<f64> = ys.iter().map(|&y| ws.dist(y)).collect();
            search(graph, &sigma, x, None, ws);
            let db: Vec<f64> = ys.iter().map(|&y| ws.dist(y)).collect();
            let k: Vec<Option<f64>> = match &qh {
                Some(q) => {
                    search(graph, q, x, None, ws);
                    ys.iter().map(|&y| Some(ws.dist(y))).collect()
                }
                None => vec![None; ys.len()],
            };
            ys.iter().enumerate().map(|(i, &y)| (x, y, d[i], db[i], k[i])).collect()
        },
    );

    let mut c1a = ClauseReport::new("sigma_vs_quasi_hyperbolic");
    let mut c1b = ClauseReport::new("quasi_hyperbolic_lower");
    let mut c2 = ClauseReport::new("log_lower");
    let mut c3 = ClauseReport::new("log_delta");
    let mut c4 = ClauseReport::new("upper");
    let mut notes = Vec::new();
    for &(x, y, d, db, k) in rows.iter().flatten() {
        let bmax = field.b(x).max(field.b(y));
        if let Some(k) = k {
            if opts.l_hat > 0.0 {
                c1a.record(k / opts.l_hat, db, eps);
            }
            let dx = graph.dist_sigma(x).to_f64();
            let dy = graph.dist_sigma(y).to_f64();
            c1b.record(0.5 * libm::log((1.0 + d / dx) * (1.0 + d / dy)), k, eps);
        }
        let log_term = libm::log1p(d * bmax);
        c2.record(log_term, db, eps);
        let ld = (libm::log(field.b(y)) - libm::log(field.b(x))).abs();
        c3.record(ld, db, eps);
        if let Some(a) = opts.a_hat {
            c4.record(db, 4.0 * a * a * log_term, eps);
        }
    }
    if qh.is_none() {
        let msg = String::from("no singular set: quasi-hyperbolic clauses skipped");
        c1a.skipped = Some(msg.clone());
        c1b.skipped = Some(msg.clone());
        notes.push(msg);
    }
    if opts.a_hat.is_none() {
        let msg = String::from("no uniformity estimate: upper clause skipped");
        c4.skipped = Some(msg.clone());
        notes.push(msg);
    }
    notes.push(format!("sigma_vs_quasi_hyperbolic uses the factor 1/L_hat (L_hat = {})", opts.l_hat));
    let mut clauses = vec![c1a, c1b, c2, c3, c4];
    clauses.iter_mut().for_each(ClauseReport::finish);
    let violations = clauses.iter().map(|c| c.violations).sum();
    Ok(SuiteReport { pairs: pairs.len(), l_hat: opts.l_hat, a_hat: opts.a_hat, tolerance: opts.tolerance.clone(), clauses, violations, notes })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundedGeometryReport {
    pub radius: f64,
    pub centers: usize,
    /// Centers whose ball contains fewer than 7 vertices; excluded from the band.
    pub under_resolved: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub band: (f64, f64),
    pub within_band: bool,
}

/// Ratio of weighted ball volume `sum area * w^n` to the Euclidean volume of a
/// ball of the same radius, for balls of radius `radius` under `weight`.
pub fn bounded_geometry(graph: &MetricGraph, weight: &WeightField, centers: &[usize], radius: f64) -> Result<BoundedGeometryReport, MetricError> {
    if centers.is_empty() {
        return Err(MetricError::NoSources);
    }
    let n = graph.intrinsic_dim() as i32;
    let unit = match n {
        1 => 2.0,
        2 => core::f64::consts::PI,
        _ => 4.0 / 3.0 * core::f64::consts::PI,
    };
    let euclid = unit * libm::pow(radius, n as f64);
    let vc = graph.vertex_count();
    let results: Vec<(usize, f64)> = par::map_with(centers.len(), || Dijkstra::new(vc), |ws, i| {
        ws.run(graph, weight.costs(), &[(centers[i], 0.0)], SearchLimits { bound: Some(radius), ..SearchLimits::default() });
        let vol: f64 = ws.settled().iter().map(|&v| graph.area(v as usize) * libm::pow(weight.weight(v as usize), n as f64)).sum();
        (ws.settled().len(), vol / euclid)
    });
    let band = (0.2, 5.0);
    let resolved: Vec<f64> = results.iter().filter(|r| r.0 >= 7).map(|r| r.1).collect();
    let min_ratio = resolved.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_ratio = resolved.iter().cloned().fold(0.0, f64::max);
    Ok(BoundedGeometryReport {
        radius,
        centers: centers.len(),
        under_resolved: results.len() - resolved.len(),
        min_ratio: if resolved.is_empty() { 0.0 } else { min_ratio },
        max_ratio,
        band,
        within_band: !resolved.is_empty() && min_ratio >= band.0 && max_ratio <= band.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::path_graph;

    #[test]
    fn intrinsic_path_on_path_graph() {
        let g = path_graph(10, 1.0).unwrap();
        let w = WeightField::intrinsic(&g);
        let p = shortest_path(&g, &w, 2, 7).unwrap();
        assert_eq!(p.vertices, vec![2, 3, 4, 5, 6, 7]);
        assert_eq!(p.weighted_length, 5.0);
        assert_eq!(shortest_path(&g, &w, 3, 3).unwrap_err(), MetricError::SameEndpoints);
        assert_eq!(shortest_path(&g, &w, 3, 4).unwrap().weighted_length, 1.0);
    }

    #[test]
    fn trapezoidal_costs() {
        let g = path_graph(3, 1.0).unwrap();
        let w = WeightField::from_weights(&g, WeightKind::Sigma, vec![1.0, 3.0, 5.0]).unwrap();
        let p = shortest_path(&g, &w, 0, 2).unwrap();
        assert_eq!(p.segment_costs, vec![2.0, 4.0]);
    }

    #[test]
    fn quasi_hyperbolic_needs_sigma() {
        let g = path_graph(3, 1.0).unwrap();
        assert_eq!(WeightField::quasi_hyperbolic(&g).unwrap_err(), MetricError::NoSigma);
    }
}
