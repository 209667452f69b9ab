//! Sigma-uniform curves: certificates, quasi-geodesic pipelines and the
//! sampled uniformity constant.

use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;
use thiserror::Error;

use crate::discretize::MetricGraph;
use crate::length::Length;
use crate::linalg;
use crate::metricspace::{self, MetricError, WeightField};
use crate::par;
use crate::paths::{Dijkstra, SearchLimits};
use crate::sigma::SigmaField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UniformityError {
    #[error("totally geodesic graph: uniformity is trivial")]
    TrivialField,
    #[error("curve needs at least two vertices")]
    ShortCurve,
    #[error("curve endpoints coincide")]
    ClosedCurve,
    #[error("curve leaves the graph between vertices {0} and {1}")]
    NotAPath(usize, usize),
    #[error("vertex {0} is not in the graph")]
    InvalidVertex(usize),
    #[error("pipeline parameters need 0 < tau < t (got t = {t}, tau = {tau})")]
    InvalidParams { t: f64, tau: f64 },
    #[error("no hub candidate with enough room between the endpoints")]
    EmptyHub,
    #[error("annulus {k} contains no admissible waypoint")]
    EmptyAnnulus { k: u32 },
    #[error("constrained subgraph disconnects the waypoints at level {k}; lower tau")]
    Disconnected { k: u32 },
    #[error("n_samples must be at least 1")]
    NoSamples,
    #[error("not enough interior vertices to sample from")]
    EmptyPool,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformityCertificate {
    pub endpoints: (usize, usize),
    pub vertices: usize,
    pub intrinsic_length: f64,
    pub intrinsic_distance: f64,
    /// Curve length over the intrinsic distance of its endpoints.
    pub quasigeodesic_ratio: f64,
    /// `max l_min(z) / delta(z)` over interior vertices and segment midpoints.
    pub cone_ratio: f64,
    pub c_hat: f64,
}

fn finite_delta(field: &SigmaField, v: usize) -> f64 {
    match field.delta(v) {
        Length::Finite(d) => d,
        Length::Infinite => f64::INFINITY,
    }
}

/// Certifies a vertex path against both uniformity clauses.
pub fn verify_sigma_uniform(curve: &[usize], field: &SigmaField, graph: &MetricGraph) -> Result<UniformityCertificate, UniformityError> {
    let mut ws = Dijkstra::new(graph.vertex_count());
    certify_with(curve, field, graph, &mut ws)
}

fn certify_with(curve: &[usize], field: &SigmaField, graph: &MetricGraph, ws: &mut Dijkstra) -> Result<UniformityCertificate, UniformityError> {
    if field.is_trivial() {
        return Err(UniformityError::TrivialField);
    }
    if curve.len() < 2 {
        return Err(UniformityError::ShortCurve);
    }
    if let Some(&v) = curve.iter().find(|&&v| v >= graph.vertex_count()) {
        return Err(UniformityError::InvalidVertex(v));
    }
    let (p, q) = (curve[0], curve[curve.len() - 1]);
    if p == q {
        return Err(UniformityError::ClosedCurve);
    }
    let mut arcs = Vec::with_capacity(curve.len());
    arcs.push(0.0);
    for w in curve.windows(2) {
        let len = graph.edge_length(w[0], w[1]).ok_or(UniformityError::NotAPath(w[0], w[1]))?;
        arcs.push(arcs[arcs.len() - 1] + len);
    }
    let total = arcs[arcs.len() - 1];
    ws.run(graph, graph.lengths(), &[(p, 0.0)], SearchLimits { target: Some(q), ..SearchLimits::default() });
    let intrinsic_distance = ws.dist(q);

    let mut cone_ratio = 0.0f64;
    for i in 1..curve.len() - 1 {
        let l_min = arcs[i].min(total - arcs[i]);
        cone_ratio = cone_ratio.max(l_min / finite_delta(field, curve[i]));
    }
    for i in 0..curve.len() - 1 {
        let mid = 0.5 * (arcs[i] + arcs[i + 1]);
        let l_min = mid.min(total - mid);
        let delta = finite_delta(field, curve[i]).min(finite_delta(field, curve[i + 1]));
        cone_ratio = cone_ratio.max(l_min / delta);
    }
    let quasigeodesic_ratio = total / intrinsic_distance;
    Ok(UniformityCertificate {
        endpoints: (p, q),
        vertices: curve.len(),
        intrinsic_length: total,
        intrinsic_distance,
        quasigeodesic_ratio,
        cone_ratio,
        c_hat: quasigeodesic_ratio.max(cone_ratio),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PipelineParams {
    /// Room parameter for hub and waypoints: `delta >= 2^-k t R`.
    pub t: f64,
    /// Room parameter for the connecting segments: `delta >= 2^-k tau R`.
    pub tau: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams { t: 0.25, tau: 0.05 }
    }
}

/// One dyadic level on one side of a pipeline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineLevel {
    pub k: u32,
    pub waypoint: usize,
    pub segment_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pipeline {
    pub curve: Vec<usize>,
    pub hub: usize,
    /// Unit scale: two thirds of the extrinsic distance between the endpoints.
    pub scale: f64,
    pub levels_p: Vec<PipelineLevel>,
    pub levels_q: Vec<PipelineLevel>,
    /// Realized `max 2^k l_k / R` over both sides.
    pub pi_hat: f64,
    /// `4 pi_hat / tau + 4 pi_hat`, the cone-ratio bound implied by `pi_hat`.
    pub bound: f64,
    pub certificate: UniformityCertificate,
}

fn extrinsic(graph: &MetricGraph, u: usize, v: usize) -> f64 {
    linalg::distance(graph.position(u), graph.position(v))
}

/// Intrinsic shortest path from `a` to `b` through vertices with `delta >= floor`.
fn constrained_path(graph: &MetricGraph, field: &SigmaField, a: usize, b: usize, floor: f64, ws: &mut Dijkstra) -> Option<(Vec<usize>, f64)> {
    let mut allowed: Vec<bool> = (0..graph.vertex_count()).map(|v| finite_delta(field, v) >= floor).collect();
    allowed[a] = true;
    allowed[b] = true;
    ws.run(graph, graph.lengths(), &[(a, 0.0)], SearchLimits { target: Some(b), allowed: Some(&allowed), ..SearchLimits::default() });
    let path = ws.path_to(b)?;
    Some((path, ws.dist(b)))
}

/// Builds the two-sided dyadic pipeline from `p` to `q` through a hub.
pub fn build_pipeline(graph: &MetricGraph, field: &SigmaField, p: usize, q: usize, params: &PipelineParams) -> Result<Pipeline, UniformityError> {
    let PipelineParams { t, tau } = *params;
    if !(tau > 0.0 && tau < t && t.is_finite()) {
        return Err(UniformityError::InvalidParams { t, tau });
    }
    if field.is_trivial() {
        return Err(UniformityError::TrivialField);
    }
    for v in [p, q] {
        if v >= graph.vertex_count() {
            return Err(UniformityError::InvalidVertex(v));
        }
    }
    if p == q {
        return Err(UniformityError::ClosedCurve);
    }
    let mut ws = Dijkstra::new(graph.vertex_count());
    if graph.edge_length(p, q).is_some() {
        let certificate = certify_with(&[p, q], field, graph, &mut ws)?;
        return Ok(Pipeline {
            curve: vec![p, q],
            hub: p,
            scale: extrinsic(graph, p, q),
            levels_p: Vec::new(),
            levels_q: Vec::new(),
            pi_hat: 0.0,
            bound: 0.0,
            certificate,
        });
    }
    let r = 2.0 / 3.0 * extrinsic(graph, p, q);
    let hub = (0..graph.vertex_count())
        .filter(|&z| extrinsic(graph, z, p) <= r && extrinsic(graph, z, q) <= r && finite_delta(field, z) >= 0.5 * t * r)
        .max_by(|&x, &y| finite_delta(field, x).total_cmp(&finite_delta(field, y)).then(y.cmp(&x)))
        .ok_or(UniformityError::EmptyHub)?;

    let (side_p, levels_p) = build_side(graph, field, hub, p, r, params, &mut ws)?;
    let (side_q, levels_q) = build_side(graph, field, hub, q, r, params, &mut ws)?;
    let mut curve: Vec<usize> = side_p.into_iter().rev().collect();
    curve.extend(side_q.into_iter().skip(1));
    let curve = remove_loops(curve);

    let pi_hat = levels_p
        .iter()
        .chain(&levels_q)
        .map(|l| libm::exp2(l.k as f64) * l.segment_length / r)
        .fold(0.0, f64::max);
    let certificate = certify_with(&curve, field, graph, &mut ws)?;
    Ok(Pipeline { curve, hub, scale: r, levels_p, levels_q, pi_hat, bound: 4.0 * pi_hat / tau + 4.0 * pi_hat, certificate })
}

/// Path from the hub down to `end`; level 0 is the hub itself.
fn build_side(
    graph: &MetricGraph,
    field: &SigmaField,
    hub: usize,
    end: usize,
    r: f64,
    params: &PipelineParams,
    ws: &mut Dijkstra,
) -> Result<(Vec<usize>, Vec<PipelineLevel>), UniformityError> {
    let h_end = graph.local_h(end);
    let mut path = vec![hub];
    let mut levels = Vec::new();
    let mut current = hub;
    let mut k = 1u32;
    loop {
        let scale = libm::exp2(-(k as f64)) * r;
        if scale < 4.0 * h_end || current == end {
            break;
        }
        let waypoint = (0..graph.vertex_count())
            .filter(|&z| {
                let d = extrinsic(graph, z, end);
                d >= scale && d < 2.0 * scale && finite_delta(field, z) >= params.t * scale
            })
            .max_by(|&x, &y| finite_delta(field, x).total_cmp(&finite_delta(field, y)).then(y.cmp(&x)))
            .ok_or(UniformityError::EmptyAnnulus { k })?;
        let (seg, len) = constrained_path(graph, field, current, waypoint, params.tau * scale, ws).ok_or(UniformityError::Disconnected { k })?;
        path.extend(seg.into_iter().skip(1));
        levels.push(PipelineLevel { k, waypoint, segment_length: len });
        current = waypoint;
        k += 1;
    }
    if current != end {
        let floor = libm::exp2(-(k as f64)) * params.tau * r;
        let (seg, len) = constrained_path(graph, field, current, end, floor, ws).ok_or(UniformityError::Disconnected { k })?;
        path.extend(seg.into_iter().skip(1));
        levels.push(PipelineLevel { k, waypoint: end, segment_length: len });
    }
    Ok((path, levels))
}

/// Drops closed excursions so every vertex appears once.
fn remove_loops(curve: Vec<usize>) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(curve.len());
    for v in curve {
        if let Some(pos) = out.iter().position(|&u| u == v) {
            out.truncate(pos + 1);
        } else {
            out.push(v);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformityEstimate {
    pub samples: usize,
    pub seed: u64,
    pub a_hat: f64,
    pub median: f64,
    pub q90: f64,
    pub q99: f64,
    pub c_hats: Vec<f64>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = libm::ceil(q * sorted.len() as f64) as usize;
    sorted[idx.clamp(1, sorted.len()) - 1]
}

/// Certifies `d_b`-geodesics between seeded random pairs and reports the largest `c_hat`.
pub fn estimate_uniformity_constant(graph: &MetricGraph, field: &SigmaField, n_samples: usize, seed: u64) -> Result<UniformityEstimate, UniformityError> {
    if field.is_trivial() {
        return Err(UniformityError::TrivialField);
    }
    if n_samples == 0 {
        return Err(UniformityError::NoSamples);
    }
    let pool = metricspace::sample_pool(graph, field.alpha());
    if pool.len() < 2 {
        return Err(UniformityError::EmptyPool);
    }
    let pairs = metricspace::sample_pairs(&pool, n_samples, seed);
    let weight = WeightField::sigma(graph, field)?;
    let n = graph.vertex_count();
    let results = par::map_with(pairs.len(), || Dijkstra::new(n), |ws, i| {
        let (p, q) = pairs[i];
        let path = metricspace::shortest_path_with(graph, &weight, p, q, ws)?;
        certify_with(&path.vertices, field, graph, ws).map(|c| c.c_hat)
    });
    let c_hats: Vec<f64> = results.into_iter().collect::<Result<_, _>>()?;
    let mut sorted = c_hats.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(UniformityEstimate {
        samples: c_hats.len(),
        seed,
        a_hat: sorted[sorted.len() - 1],
        median: quantile(&sorted, 0.5),
        q90: quantile(&sorted, 0.9),
        q99: quantile(&sorted, 0.99),
        c_hats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::path_graph;
    use crate::sigma::{compute_sigma_field, LadderSpec};

    #[test]
    fn loops_are_removed() {
        assert_eq!(remove_loops(vec![1, 2, 3, 2, 4]), vec![1, 2, 4]);
    }

    #[test]
    fn single_edge_certificate() {
        let g = path_graph(10, 0.5).unwrap();
        let f = compute_sigma_field(&g, 1.0, &LadderSpec::default()).unwrap();
        let c = verify_sigma_uniform(&[3, 4], &f, &g).unwrap();
        assert_eq!(c.quasigeodesic_ratio, 1.0);
        assert!((c.cone_ratio - 0.5 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn detour_is_detected() {
        let g = path_graph(10, 0.5).unwrap();
        let f = compute_sigma_field(&g, 1.0, &LadderSpec::default()).unwrap();
        let c = verify_sigma_uniform(&[2, 3, 4, 3, 2, 3, 4, 5], &f, &g).unwrap();
        assert!((c.quasigeodesic_ratio - 7.0 / 3.0).abs() < 1e-12);
        assert_eq!(verify_sigma_uniform(&[2, 4], &f, &g).unwrap_err(), UniformityError::NotAPath(2, 4));
    }

    #[test]
    fn params_are_checked() {
        let g = path_graph(10, 0.5).unwrap();
        let f = compute_sigma_field(&g, 1.0, &LadderSpec::default()).unwrap();
        let err = build_pipeline(&g, &f, 0, 9, &PipelineParams { t: 0.1, tau: 0.2 }).unwrap_err();
        assert!(matches!(err, UniformityError::InvalidParams { .. }));
    }
}
