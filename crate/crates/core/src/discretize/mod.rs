//! Weighted graphs approximating a hypersurface with its singular set removed.

mod fixtures;
mod grid;
mod mesh;

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use bitflags::bitflags;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::length::Length;
use crate::models::ModelError;
use crate::paths::{Dijkstra, SearchLimits};

pub use fixtures::{path_graph, product_grid, star_tree, ProductGridSpec};
pub use grid::{build_graph, GridSpec};
pub use mesh::{estimate_shape_operator, graph_from_mesh, icosphere, two_tip_spindle, ShapeEstimate, TriangleMesh};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("resolution too coarse: {count} vertices along chart axis {axis} (need at least 16)")]
    TooCoarse { axis: usize, count: usize },
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("graph has no vertices")]
    Empty,
    #[error("edge ({u}, {v}) is invalid: {reason}")]
    InvalidEdge { u: usize, v: usize, reason: &'static str },
    #[error("innermost ring r_min = {r_min} is closer than 2h = {two_h} to the tip")]
    TipTooClose { r_min: f64, two_h: f64 },
    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    BadIndex { face: usize, index: usize, count: usize },
    #[error("face {face} is degenerate (zero area)")]
    DegenerateFace { face: usize },
    #[error("singular vertex {index} is out of range")]
    SingularOutOfRange { index: usize },
    #[error("a-value array has {got} entries, graph has {expected} vertices")]
    WrongLength { expected: usize, got: usize },
    #[error("a-values must be finite and non-negative (vertex {vertex})")]
    InvalidCurvature { vertex: usize },
}

bitflags! {
    /// Boundary markers on graph vertices.
    #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
    pub struct VertexFlags: u8 {
        /// Frontier of the punctured singular set.
        const NEAR_SIGMA_RING = 1;
        /// Frontier of the truncated domain.
        const OUTER_TRUNCATION = 2;
    }
}

/// Layout of a geometrically graded cone grid: vertex `ring * cols + col`
/// sits at radius `scale * r_min * exp(ring * du)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeGrid {
    pub rings: usize,
    pub cols: usize,
    pub r_min: f64,
    pub du: f64,
    pub scale: f64,
    pub cone_constant: f64,
}

impl ConeGrid {
    pub fn ring_radius(&self, ring: usize) -> f64 {
        self.scale * self.r_min * libm::exp(ring as f64 * self.du)
    }

    pub fn ring_of(&self, v: usize) -> usize {
        v / self.cols
    }

    pub fn vertex(&self, ring: usize, col: usize) -> usize {
        ring * self.cols + col
    }
}

/// Finite metric graph with per-vertex curvature and boundary data.
///
/// Adjacency is stored in CSR form; each undirected edge occupies two
/// directed slots.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    label: String,
    ambient_dim: usize,
    intrinsic_dim: usize,
    chart_stride: usize,
    positions: Vec<f64>,
    chart: Vec<f64>,
    a: Vec<f64>,
    a_reliable: Vec<bool>,
    dist_sigma_model: Vec<Length>,
    dist_sigma: Vec<Length>,
    sigma_sources: Vec<(usize, f64)>,
    flags: Vec<VertexFlags>,
    area: Vec<f64>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    lengths: Vec<f64>,
    h: f64,
    totally_geodesic: bool,
    cone: Option<ConeGrid>,
}

/// Per-vertex input to [`GraphBuilder::add_vertex`].
#[derive(Clone, Copy, Debug)]
pub struct VertexData<'a> {
    pub position: &'a [f64],
    pub chart: &'a [f64],
    pub a: f64,
    pub a_reliable: bool,
    pub dist_sigma: Length,
    pub flags: VertexFlags,
    pub area: f64,
    /// Distance from this vertex to the singular set, if it borders it.
    pub sigma_offset: Option<f64>,
}

/// Incremental constructor for [`MetricGraph`].
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    label: String,
    ambient_dim: usize,
    intrinsic_dim: usize,
    chart_stride: usize,
    positions: Vec<f64>,
    chart: Vec<f64>,
    a: Vec<f64>,
    a_reliable: Vec<bool>,
    dist_sigma_model: Vec<Length>,
    flags: Vec<VertexFlags>,
    area: Vec<f64>,
    sigma_sources: Vec<(usize, f64)>,
    edges: Vec<(u32, u32, f64)>,
    cone: Option<ConeGrid>,
}

impl GraphBuilder {
    pub fn new(label: impl Into<String>, ambient_dim: usize, intrinsic_dim: usize, chart_stride: usize) -> Self {
        GraphBuilder {
            label: label.into(),
            ambient_dim,
            intrinsic_dim,
            chart_stride,
            positions: Vec::new(),
            chart: Vec::new(),
            a: Vec::new(),
            a_reliable: Vec::new(),
            dist_sigma_model: Vec::new(),
            flags: Vec::new(),
            area: Vec::new(),
            sigma_sources: Vec::new(),
            edges: Vec::new(),
            cone: None,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.a.len()
    }

    pub fn add_vertex(&mut self, v: VertexData<'_>) -> usize {
        let id = self.a.len();
        debug_assert_eq!(v.position.len(), self.ambient_dim);
        self.positions.extend_from_slice(v.position);
        if self.chart_stride > 0 {
            debug_assert_eq!(v.chart.len(), self.chart_stride);
            self.chart.extend_from_slice(v.chart);
        }
        self.a.push(v.a);
        self.a_reliable.push(v.a_reliable);
        self.dist_sigma_model.push(v.dist_sigma);
        self.flags.push(v.flags);
        self.area.push(v.area);
        if let Some(off) = v.sigma_offset {
            self.sigma_sources.push((id, off));
        }
        id
    }

    pub fn add_edge(&mut self, u: usize, v: usize, length: f64) {
        self.edges.push((u as u32, v as u32, length));
    }

    pub fn set_cone_grid(&mut self, cone: ConeGrid) {
        self.cone = Some(cone);
    }

    pub fn finish(self) -> Result<MetricGraph, GraphError> {
        let n = self.a.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        for (i, &a) in self.a.iter().enumerate() {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(GraphError::InvalidCurvature { vertex: i });
            }
        }
        let mut directed: Vec<(u32, u32, f64)> = Vec::with_capacity(2 * self.edges.len());
        for &(u, v, len) in &self.edges {
            let (ui, vi) = (u as usize, v as usize);
            if ui >= n || vi >= n {
                return Err(GraphError::InvalidEdge { u: ui, v: vi, reason: "endpoint out of range" });
            }
            if u == v {
                return Err(GraphError::InvalidEdge { u: ui, v: vi, reason: "self loop" });
            }
            if !(len > 0.0 && len.is_finite()) {
                return Err(GraphError::InvalidEdge { u: ui, v: vi, reason: "length must be positive" });
            }
            directed.push((u, v, len));
            directed.push((v, u, len));
        }
        directed.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
        directed.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
        let mut offsets = vec![0usize; n + 1];
        for &(u, _, _) in &directed {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets: Vec<u32> = directed.iter().map(|e| e.1).collect();
        let lengths: Vec<f64> = directed.iter().map(|e| e.2).collect();
        let h = lengths.iter().cloned().fold(0.0, f64::max);
        let totally_geodesic = self.a.iter().all(|&a| a == 0.0);

        let mut graph = MetricGraph {
            label: self.label,
            ambient_dim: self.ambient_dim,
            intrinsic_dim: self.intrinsic_dim,
            chart_stride: self.chart_stride,
            positions: self.positions,
            chart: self.chart,
            a: self.a,
            a_reliable: self.a_reliable,
            dist_sigma_model: self.dist_sigma_model,
            dist_sigma: Vec::new(),
            sigma_sources: self.sigma_sources,
            flags: self.flags,
            area: self.area,
            offsets,
            targets,
            lengths,
            h,
            totally_geodesic,
            cone: self.cone,
        };
        let components = graph.component_count();
        if components != 1 {
            return Err(GraphError::Disconnected { components });
        }
        graph.dist_sigma = graph.recompute_dist_sigma();
        Ok(graph)
    }
}

impl MetricGraph {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn vertex_count(&self) -> usize {
        self.a.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn slot_count(&self) -> usize {
        self.targets.len()
    }

    pub fn slots(&self, u: usize) -> Range<usize> {
        self.offsets[u]..self.offsets[u + 1]
    }

    pub fn slot_target(&self, slot: usize) -> usize {
        self.targets[slot] as usize
    }

    /// Directed-slot lengths, aligned with [`MetricGraph::slots`].
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.slots(u).map(move |s| (self.targets[s] as usize, self.lengths[s]))
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn edge_length(&self, u: usize, v: usize) -> Option<f64> {
        let row = &self.targets[self.slots(u)];
        row.binary_search(&(v as u32)).ok().map(|k| self.lengths[self.offsets[u] + k])
    }

    /// Undirected edges `(u, v, length)` with `u < v`, in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u).filter(move |&(v, _)| u < v).map(move |(v, len)| (u, v, len))
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Dimension used for volume statistics.
    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn position(&self, v: usize) -> &[f64] {
        &self.positions[v * self.ambient_dim..(v + 1) * self.ambient_dim]
    }

    /// Chart coordinates (empty for mesh-backed graphs).
    pub fn chart_coords(&self, v: usize) -> &[f64] {
        &self.chart[v * self.chart_stride..(v + 1) * self.chart_stride]
    }

    pub fn a(&self, v: usize) -> f64 {
        self.a[v]
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a
    }

    pub fn a_reliable(&self, v: usize) -> bool {
        self.a_reliable[v]
    }

    pub fn dist_sigma(&self, v: usize) -> Length {
        self.dist_sigma[v]
    }

    pub fn dist_sigma_model(&self, v: usize) -> Length {
        self.dist_sigma_model[v]
    }

    pub fn flags(&self, v: usize) -> VertexFlags {
        self.flags[v]
    }

    pub fn area(&self, v: usize) -> f64 {
        self.area[v]
    }

    /// Largest edge length.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Largest edge length incident to `v`.
    pub fn local_h(&self, v: usize) -> f64 {
        self.neighbors(v).map(|(_, l)| l).fold(0.0, f64::max)
    }

    pub fn totally_geodesic(&self) -> bool {
        self.totally_geodesic
    }

    pub fn has_sigma(&self) -> bool {
        !self.sigma_sources.is_empty()
    }

    /// Ring vertices with their distance to the singular set.
    pub fn sigma_sources(&self) -> &[(usize, f64)] {
        &self.sigma_sources
    }

    pub fn cone_grid(&self) -> Option<&ConeGrid> {
        self.cone.as_ref()
    }

    pub fn vertices_with(&self, flag: VertexFlags) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.flags[v].contains(flag)).collect()
    }

    /// Connected components of the subgraph induced by `members`, each sorted.
    pub fn induced_components(&self, members: &[usize]) -> Vec<Vec<usize>> {
        let mut inside = vec![false; self.vertex_count()];
        for &v in members {
            inside[v] = true;
        }
        let mut seen = vec![false; self.vertex_count()];
        let mut out = Vec::new();
        for &start in members {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for (v, _) in self.neighbors(u) {
                    if inside[v] && !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out.sort_by_key(|c| c[0]);
        out
    }

    fn component_count(&self) -> usize {
        let all: Vec<usize> = (0..self.vertex_count()).collect();
        self.induced_components(&all).len()
    }

    fn recompute_dist_sigma(&self) -> Vec<Length> {
        if self.sigma_sources.is_empty() {
            return vec![Length::Infinite; self.vertex_count()];
        }
        let mut search = Dijkstra::new(self.vertex_count());
        search.run(self, &self.lengths, &self.sigma_sources, SearchLimits::default());
        (0..self.vertex_count()).map(|v| Length::from_f64(search.dist(v))).collect()
    }

    /// The rescaled graph `lambda * G`: lengths and positions times `lambda`,
    /// curvature divided by `lambda`.
    pub fn scaled(&self, lambda: f64) -> MetricGraph {
        let mut g = self.clone();
        g.positions.iter_mut().for_each(|x| *x *= lambda);
        g.lengths.iter_mut().for_each(|x| *x *= lambda);
        g.a.iter_mut().for_each(|x| *x /= lambda);
        g.dist_sigma_model.iter_mut().for_each(|d| *d = d.scale(lambda));
        g.sigma_sources.iter_mut().for_each(|s| s.1 *= lambda);
        let p = libm::pow(lambda, self.intrinsic_dim as f64);
        g.area.iter_mut().for_each(|x| *x *= p);
        g.h = self.h * lambda;
        if let Some(c) = g.cone.as_mut() {
            c.scale *= lambda;
        }
        g.dist_sigma = g.recompute_dist_sigma();
        g
    }

    /// Same graph with replaced curvature values.
    pub fn with_a_values(&self, a: Vec<f64>) -> Result<MetricGraph, GraphError> {
        if a.len() != self.vertex_count() {
            return Err(GraphError::WrongLength { expected: self.vertex_count(), got: a.len() });
        }
        if let Some(v) = a.iter().position(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(GraphError::InvalidCurvature { vertex: v });
        }
        let mut g = self.clone();
        g.totally_geodesic = a.iter().all(|&x| x == 0.0);
        g.a = a;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> GraphBuilder {
        let mut b = GraphBuilder::new("tiny", 1, 1, 0);
        for i in 0..3 {
            b.add_vertex(VertexData {
                position: &[i as f64],
                chart: &[],
                a: 1.0,
                a_reliable: true,
                dist_sigma: Length::Infinite,
                flags: VertexFlags::empty(),
                area: 1.0,
                sigma_offset: None,
            });
        }
        b
    }

    #[test]
    fn rejects_disconnected_and_bad_edges() {
        let mut b = tiny();
        b.add_edge(0, 1, 1.0);
        assert_eq!(b.finish().unwrap_err(), GraphError::Disconnected { components: 2 });
        let mut b = tiny();
        b.add_edge(0, 1, 0.0);
        assert!(matches!(b.finish(), Err(GraphError::InvalidEdge { .. })));
    }

    #[test]
    fn csr_is_symmetric() {
        let mut b = tiny();
        b.add_edge(0, 1, 1.0);
        b.add_edge(2, 1, 2.0);
        let g = b.finish().unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edge_length(1, 2), Some(2.0));
        assert_eq!(g.edge_length(2, 1), Some(2.0));
        assert_eq!(g.edge_length(0, 2), None);
        assert_eq!(g.h(), 2.0);
        assert!(!g.has_sigma());
    }
}
