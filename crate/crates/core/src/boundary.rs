//! Geodesic rays of the sigma metric and their equivalence classes.
//!
//! Rays run from a base vertex to vertices on the near-singular ring (rays
//! towards the singular set) or on the outer truncation (rays to infinity).
//! Two rays of the same family are linked when their `d_b`-Hausdorff distance
//! is within the threshold; rays towards the singular set must also end
//! within `10 h` of each other. Classes are the linked components.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;
use thiserror::Error;

use crate::discretize::{MetricGraph, VertexFlags};
use crate::metricspace::{GeodesicPath, MetricError, WeightField};
use crate::par;
use crate::paths::{Dijkstra, SearchLimits};
use crate::sigma::SigmaField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("vertex {0} is not in the graph")]
    InvalidVertex(usize),
    #[error("base vertex {0} lies on a ring or truncation boundary")]
    BaseNotInterior(usize),
    #[error("at least one target family and one target per component are required")]
    EmptyTargetSpec,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RayFamily {
    /// Ends on the near-singular ring.
    Sigma,
    /// Ends on the outer truncation.
    Infinity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TargetSpec {
    pub near_sigma: bool,
    pub outer: bool,
    /// Targets per connected component of each target set, evenly strided.
    pub per_component: usize,
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec { near_sigma: true, outer: true, per_component: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ray {
    pub target: usize,
    pub family: RayFamily,
    /// Index of the target's component within its family.
    pub component: usize,
    pub path: GeodesicPath,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayBundle {
    pub base: usize,
    pub rays: Vec<Ray>,
    pub sigma_components: usize,
    pub outer_components: usize,
    pub notes: Vec<String>,
}

fn pick_strided(component: &[usize], k: usize) -> Vec<usize> {
    let k = k.min(component.len());
    (0..k).map(|i| component[i * component.len() / k]).collect()
}

pub fn trace_rays(graph: &MetricGraph, field: &SigmaField, base: usize, spec: &TargetSpec) -> Result<RayBundle, BoundaryError> {
    if base >= graph.vertex_count() {
        return Err(BoundaryError::InvalidVertex(base));
    }
    if !graph.flags(base).is_empty() {
        return Err(BoundaryError::BaseNotInterior(base));
    }
    if spec.per_component == 0 || !(spec.near_sigma || spec.outer) {
        return Err(BoundaryError::EmptyTargetSpec);
    }
    if field.is_trivial() {
        return Ok(RayBundle {
            base,
            rays: Vec::new(),
            sigma_components: 0,
            outer_components: 0,
            notes: vec!["trivial gauge: the unfolding is a single point and the Gromov boundary is empty".into()],
        });
    }
    let near = graph.induced_components(&graph.vertices_with(VertexFlags::NEAR_SIGMA_RING));
    let outer = graph.induced_components(&graph.vertices_with(VertexFlags::OUTER_TRUNCATION));
    let mut targets: Vec<(usize, RayFamily, usize)> = Vec::new();
    if spec.near_sigma {
        for (ci, comp) in near.iter().enumerate() {
            targets.extend(pick_strided(comp, spec.per_component).into_iter().map(|t| (t, RayFamily::Sigma, ci)));
        }
    }
    if spec.outer {
        for (ci, comp) in outer.iter().enumerate() {
            // A vertex flagged both ways counts as a singular target only.
            let comp: Vec<usize> = comp.iter().cloned().filter(|&v| !graph.flags(v).contains(VertexFlags::NEAR_SIGMA_RING)).collect();
            targets.extend(pick_strided(&comp, spec.per_component).into_iter().map(|t| (t, RayFamily::Infinity, ci)));
        }
    }
    let weight = WeightField::sigma(graph, field)?;
    let mut ws = Dijkstra::new(graph.vertex_count());
    ws.run(graph, weight.costs(), &[(base, 0.0)], SearchLimits::default());
    let mut rays = Vec::with_capacity(targets.len());
    for (target, family, component) in targets {
        let verts = ws.path_to(target).ok_or(MetricError::Unreachable { p: base, q: target })?;
        let path = GeodesicPath::from_vertices(graph, &weight, verts)?;
        rays.push(Ray { target, family, component, path });
    }
    let mut notes = Vec::new();
    if rays.is_empty() {
        notes.push("no near-singular or truncation vertices: the Gromov boundary is empty".into());
    }
    Ok(RayBundle { base, rays, sigma_components: near.len(), outer_components: outer.len(), notes })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryOptions {
    /// Explicit equivalence threshold; otherwise `8 a_hat^2 + 2 delta_thin`.
    pub threshold: Option<f64>,
    pub a_hat: f64,
    pub delta_thin: f64,
    pub eps_h: f64,
}

impl BoundaryOptions {
    pub fn resolved_threshold(&self) -> f64 {
        self.threshold.unwrap_or(8.0 * self.a_hat * self.a_hat + 2.0 * self.delta_thin)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryClass {
    pub family: RayFamily,
    pub rays: Vec<usize>,
    pub components: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub classes: Vec<BoundaryClass>,
    pub sigma_classes: usize,
    pub infinity_classes: usize,
    pub total_classes: usize,
    pub threshold: f64,
    pub threshold_explicit: bool,
    /// Every near-singular component is reached by a ray.
    pub surjective: bool,
    /// Singular rays ending more than `10 h` apart are farther apart than the threshold.
    pub injective: bool,
    /// All rays to infinity form one class.
    pub infinity_unique: bool,
    /// Largest Hausdorff distance between two rays of one class.
    pub max_within_class: f64,
    /// Smallest Hausdorff distance between rays of different classes.
    pub min_between_classes: Option<f64>,
    /// Smallest Hausdorff distance between singular rays ending more than `10 h` apart.
    pub min_between_far_sigma: Option<f64>,
    /// Smallest `(d_b (1 + eps) - |log delta(x) - log delta(y)|) / d_b` over ray segments.
    pub log_delta_margin: f64,
    pub hausdorff: Vec<Vec<f64>>,
    pub notes: Vec<String>,
    pub pass: bool,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// `d_b`-Hausdorff distances between all rays, on every 4th ray vertex plus the end.
pub fn ray_hausdorff(graph: &MetricGraph, field: &SigmaField, rays: &[Ray]) -> Result<Vec<Vec<f64>>, BoundaryError> {
    let weight = WeightField::sigma(graph, field)?;
    let n = graph.vertex_count();
    let to_ray: Vec<Vec<f64>> = par::map_with(rays.len(), || Dijkstra::new(n), |ws, i| {
        let src: Vec<(usize, f64)> = rays[i].path.vertices.iter().map(|&v| (v, 0.0)).collect();
        ws.run(graph, weight.costs(), &src, SearchLimits::default());
        ws.dense()
    });
    let samples: Vec<Vec<usize>> = rays
        .iter()
        .map(|r| {
            let v = &r.path.vertices;
            let mut s: Vec<usize> = v.iter().step_by(4).cloned().collect();
            if s.last() != v.last() {
                s.push(v[v.len() - 1]);
            }
            s
        })
        .collect();
    let k = rays.len();
    let mut h = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let a = samples[i].iter().map(|&x| to_ray[j][x]).fold(0.0, f64::max);
            let b = samples[j].iter().map(|&y| to_ray[i][y]).fold(0.0, f64::max);
            h[i][j] = a.max(b);
            h[j][i] = h[i][j];
        }
    }
    Ok(h)
}

pub fn verify_boundary_map(bundle: &RayBundle, graph: &MetricGraph, field: &SigmaField, opts: &BoundaryOptions) -> Result<BoundaryReport, BoundaryError> {
    let threshold = opts.resolved_threshold();
    let rays = &bundle.rays;
    let k = rays.len();
    let mut notes = bundle.notes.clone();
    if k == 0 {
        return Ok(BoundaryReport {
            classes: Vec::new(),
            sigma_classes: 0,
            infinity_classes: 0,
            total_classes: 0,
            threshold,
            threshold_explicit: opts.threshold.is_some(),
            surjective: bundle.sigma_components == 0,
            injective: true,
            infinity_unique: true,
            max_within_class: 0.0,
            min_between_classes: None,
            min_between_far_sigma: None,
            log_delta_margin: 0.0,
            hausdorff: Vec::new(),
            notes,
            pass: true,
        });
    }
    let hd = ray_hausdorff(graph, field, rays)?;

    // Intrinsic distances between endpoints of singular rays.
    let sigma_idx: Vec<usize> = (0..k).filter(|&i| rays[i].family == RayFamily::Sigma).collect();
    let n = graph.vertex_count();
    let end_dist: Vec<Vec<f64>> = par::map_with(sigma_idx.len(), || Dijkstra::new(n), |ws, a| {
        ws.run(graph, graph.lengths(), &[(rays[sigma_idx[a]].target, 0.0)], SearchLimits::default());
        sigma_idx.iter().map(|&j| ws.dist(rays[j].target)).collect()
    });
    let near_h = 10.0 * graph.h();

    let mut parent: Vec<usize> = (0..k).collect();
    let mut min_far: Option<f64> = None;
    let mut injective = true;
    for i in 0..k {
        for j in i + 1..k {
            if rays[i].family != rays[j].family {
                continue;
            }
            let close_ends = match rays[i].family {
                RayFamily::Sigma => {
                    let (a, b) = (sigma_idx.binary_search(&i).unwrap(), sigma_idx.binary_search(&j).unwrap());
                    let d = end_dist[a][b];
                    if d > near_h {
                        min_far = Some(min_far.map_or(hd[i][j], |m: f64| m.min(hd[i][j])));
                        if hd[i][j] <= threshold {
                            injective = false;
                        }
                    }
                    d <= near_h
                }
                RayFamily::Infinity => true,
            };
            if close_ends && hd[i][j] <= threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut classes: Vec<BoundaryClass> = Vec::new();
    let mut root_class: Vec<Option<usize>> = vec![None; k];
    for i in 0..k {
        let r = find(&mut parent, i);
        let ci = *root_class[r].get_or_insert_with(|| {
            classes.push(BoundaryClass { family: rays[i].family, rays: Vec::new(), components: Vec::new() });
            classes.len() - 1
        });
        classes[ci].rays.push(i);
        if !classes[ci].components.contains(&rays[i].component) {
            classes[ci].components.push(rays[i].component);
        }
    }
    let class_of: Vec<usize> = {
        let mut c = vec![0; k];
        for (ci, cl) in classes.iter().enumerate() {
            for &r in &cl.rays {
                c[r] = ci;
            }
        }
        c
    };
    let mut max_within = 0.0f64;
    let mut min_between: Option<f64> = None;
    for i in 0..k {
        for j in i + 1..k {
            if class_of[i] == class_of[j] {
                max_within = max_within.max(hd[i][j]);
            } else {
                min_between = Some(min_between.map_or(hd[i][j], |m: f64| m.min(hd[i][j])));
            }
        }
    }
    let sigma_classes = classes.iter().filter(|c| c.family == RayFamily::Sigma).count();
    let infinity_classes = classes.len() - sigma_classes;

    let mut reached = vec![false; bundle.sigma_components];
    for r in rays.iter().filter(|r| r.family == RayFamily::Sigma) {
        reached[r.component] = true;
    }
    let surjective = reached.iter().all(|&x| x);
    let infinity_unique = infinity_classes <= 1;

    let mut log_delta_margin = f64::INFINITY;
    for r in rays {
        for (s, w) in r.path.vertices.windows(2).enumerate() {
            let cost = r.path.segment_costs[s];
            let jump = (libm::log(field.b(w[0])) - libm::log(field.b(w[1]))).abs();
            if cost > 0.0 {
                log_delta_margin = log_delta_margin.min((cost * (1.0 + opts.eps_h) - jump) / cost);
            }
        }
    }
    if !log_delta_margin.is_finite() {
        log_delta_margin = 0.0;
    }
    if !injective {
        notes.push(format!("threshold {threshold} does not separate singular rays ending more than 10h apart"));
    }
    let pass = surjective && injective && infinity_unique && log_delta_margin >= 0.0;
    Ok(BoundaryReport {
        total_classes: classes.len(),
        classes,
        sigma_classes,
        infinity_classes,
        threshold,
        threshold_explicit: opts.threshold.is_some(),
        surjective,
        injective,
        infinity_unique,
        max_within_class: max_within,
        min_between_classes: min_between,
        min_between_far_sigma: min_far,
        log_delta_margin,
        hausdorff: hd,
        notes,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strided_picks() {
        assert_eq!(pick_strided(&[1, 2, 3, 4, 5, 6, 7, 8], 4), vec![1, 3, 5, 7]);
        assert_eq!(pick_strided(&[1, 2], 4), vec![1, 2]);
    }

    #[test]
    fn union_find_compresses() {
        let mut p = vec![0, 0, 1, 2];
        assert_eq!(find(&mut p, 3), 0);
    }
}
