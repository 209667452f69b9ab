//! Multi-source Dijkstra with reusable scratch space.
//!
//! Costs are given per directed CSR slot of a [`MetricGraph`]. The heap pops
//! equal distances by ascending vertex index and predecessors prefer the
//! smaller index on ties, so every search is deterministic.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::discretize::MetricGraph;

const NO_PRED: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Entry {
    dist: f64,
    vertex: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so that `BinaryHeap` yields the smallest distance first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Optional restrictions on a search.
#[derive(Clone, Copy, Debug, Default)]
pub struct SearchLimits<'a> {
    /// Stop once the smallest tentative distance exceeds this value.
    pub bound: Option<f64>,
    /// Only vertices with `allowed[v]` are entered (sources always are).
    pub allowed: Option<&'a [bool]>,
    /// Stop as soon as this vertex is settled.
    pub target: Option<usize>,
}

/// Scratch buffers for repeated searches on graphs of one size.
#[derive(Clone, Debug)]
pub struct Dijkstra {
    dist: Vec<f64>,
    pred: Vec<u32>,
    stamp: Vec<u32>,
    done: Vec<u32>,
    epoch: u32,
    heap: BinaryHeap<Entry>,
    settled: Vec<u32>,
}

impl Dijkstra {
    pub fn new(n: usize) -> Self {
        Dijkstra {
            dist: vec![f64::INFINITY; n],
            pred: vec![NO_PRED; n],
            stamp: vec![0; n],
            done: vec![0; n],
            epoch: 0,
            heap: BinaryHeap::new(),
            settled: Vec::new(),
        }
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.done.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.heap.clear();
        self.settled.clear();
    }

    /// Runs a search from `sources` (vertex, initial offset) with per-slot `costs`.
    pub fn run(&mut self, graph: &MetricGraph, costs: &[f64], sources: &[(usize, f64)], limits: SearchLimits<'_>) {
        debug_assert_eq!(costs.len(), graph.slot_count());
        if self.dist.len() != graph.vertex_count() {
            *self = Dijkstra::new(graph.vertex_count());
        }
        self.next_epoch();
        let epoch = self.epoch;
        for &(v, d0) in sources {
            if self.stamp[v] != epoch || d0 < self.dist[v] {
                self.stamp[v] = epoch;
                self.dist[v] = d0;
                self.pred[v] = NO_PRED;
                self.heap.push(Entry { dist: d0, vertex: v as u32 });
            }
        }
        let bound = limits.bound.unwrap_or(f64::INFINITY);
        while let Some(Entry { dist, vertex }) = self.heap.pop() {
            let u = vertex as usize;
            if self.done[u] == epoch || dist > self.dist[u] {
                continue;
            }
            if dist > bound {
                break;
            }
            self.done[u] = epoch;
            self.settled.push(vertex);
            if limits.target == Some(u) {
                break;
            }
            for slot in graph.slots(u) {
                let v = graph.slot_target(slot);
                if self.done[v] == epoch {
                    continue;
                }
                if let Some(mask) = limits.allowed {
                    if !mask[v] {
                        continue;
                    }
                }
                let nd = dist + costs[slot];
                if self.stamp[v] != epoch {
                    self.stamp[v] = epoch;
                    self.dist[v] = nd;
                    self.pred[v] = vertex;
                    self.heap.push(Entry { dist: nd, vertex: v as u32 });
                } else if nd < self.dist[v] {
                    self.dist[v] = nd;
                    self.pred[v] = vertex;
                    self.heap.push(Entry { dist: nd, vertex: v as u32 });
                } else if nd == self.dist[v] && vertex < self.pred[v] {
                    self.pred[v] = vertex;
                }
            }
        }
    }

    /// Settled distance of `v`, or infinity when `v` was not settled.
    pub fn dist(&self, v: usize) -> f64 {
        if self.done[v] == self.epoch {
            self.dist[v]
        } else {
            f64::INFINITY
        }
    }

    /// Vertices in settling order.
    pub fn settled(&self) -> &[u32] {
        &self.settled
    }

    /// Vertex sequence from a source to `v` (inclusive), if `v` was settled.
    pub fn path_to(&self, v: usize) -> Option<Vec<usize>> {
        if self.done[v] != self.epoch {
            return None;
        }
        let mut out = vec![v];
        let mut cur = v;
        while self.pred[cur] != NO_PRED {
            cur = self.pred[cur] as usize;
            out.push(cur);
        }
        out.reverse();
        Some(out)
    }

    /// Copies all settled distances into a dense array (infinity elsewhere).
    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![f64::INFINITY; self.dist.len()];
        for &v in &self.settled {
            out[v as usize] = self.dist[v as usize];
        }
        out
    }
}
