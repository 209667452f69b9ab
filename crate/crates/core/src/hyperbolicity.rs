//! Gromov hyperbolicity estimates for a weighted graph metric.

use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;
use thiserror::Error;

use crate::discretize::{MetricGraph, VertexFlags};
use crate::metricspace::{self, WeightField, WeightKind};
use crate::par;
use crate::paths::{Dijkstra, SearchLimits};
use crate::sampling;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperbolicityError {
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("need at least {needed} sample vertices, found {found}")]
    PoolTooSmall { needed: usize, found: usize },
    #[error("vertex {0} is not in the graph")]
    InvalidVertex(usize),
    #[error("no ray targets: the graph has no near-singular or truncation vertices")]
    NoTargets,
    #[error("the explicit constant needs a >= 1, got {0}")]
    BelowOne(f64),
}

fn pool(graph: &MetricGraph) -> Vec<usize> {
    let p = metricspace::sample_pool(graph, 1.0);
    if p.len() >= 4 {
        p
    } else {
        (0..graph.vertex_count()).collect()
    }
}

fn dists_from(graph: &MetricGraph, weight: &WeightField, sources: &[usize], ws: &mut Dijkstra) {
    let src: Vec<(usize, f64)> = sources.iter().map(|&s| (s, 0.0)).collect();
    ws.run(graph, weight.costs(), &src, SearchLimits::default());
}

/// Largest distance from a point of one side of the geodesic triangle
/// `x, y, z` to the union of the other two sides.
pub fn triangle_defect(graph: &MetricGraph, weight: &WeightField, x: usize, y: usize, z: usize) -> f64 {
    let mut ws = Dijkstra::new(graph.vertex_count());
    defect_with(graph, weight, [x, y, z], &mut ws)
}

fn defect_with(graph: &MetricGraph, weight: &WeightField, [x, y, z]: [usize; 3], ws: &mut Dijkstra) -> f64 {
    dists_from(graph, weight, &[x], ws);
    let xy = ws.path_to(y).unwrap_or_default();
    let xz = ws.path_to(z).unwrap_or_default();
    dists_from(graph, weight, &[y], ws);
    let yz = ws.path_to(z).unwrap_or_default();
    let sides = [xy, yz, xz];
    let mut worst = 0.0f64;
    for i in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&j| j != i).flat_map(|j| sides[j].iter().cloned()).collect();
        dists_from(graph, weight, &others, ws);
        for &w in &sides[i] {
            worst = worst.max(ws.dist(w));
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThinnessEstimate {
    pub triangles: usize,
    pub seed: u64,
    pub delta_thin: f64,
    /// Running maximum after each triangle, in sample order.
    pub running_max: Vec<f64>,
}

/// Thin-triangle constant over seeded random vertex triples.
pub fn estimate_thinness(graph: &MetricGraph, weight: &WeightField, n_triangles: usize, seed: u64) -> Result<ThinnessEstimate, HyperbolicityError> {
    if n_triangles == 0 {
        return Err(HyperbolicityError::NoSamples);
    }
    let pool = pool(graph);
    if pool.len() < 3 {
        return Err(HyperbolicityError::PoolTooSmall { needed: 3, found: pool.len() });
    }
    let triples = sampling::tuples(&pool, n_triangles, 3, seed);
    let n = graph.vertex_count();
    let defects = par::map_with(triples.len(), || Dijkstra::new(n), |ws, i| {
        let t = &triples[i];
        defect_with(graph, weight, [t[0], t[1], t[2]], ws)
    });
    let mut running_max = Vec::with_capacity(defects.len());
    let mut m = 0.0f64;
    for d in defects {
        m = m.max(d);
        running_max.push(m);
    }
    Ok(ThinnessEstimate { triangles: n_triangles, seed, delta_thin: m, running_max })
}

/// Four-point defect of the distances among `p, q, r, s`: with the three
/// pair sums sorted `L >= M >= S`, this is `(L - M) / 2`.
pub fn four_point_defect(d: impl Fn(usize, usize) -> f64, p: usize, q: usize, r: usize, s: usize) -> f64 {
    let mut sums = [d(p, q) + d(r, s), d(p, r) + d(q, s), d(p, s) + d(q, r)];
    sums.sort_by(|a, b| b.total_cmp(a));
    0.5 * (sums[0] - sums[1])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourPointEstimate {
    pub quadruples: usize,
    pub pool_size: usize,
    pub exhaustive: bool,
    pub seed: u64,
    pub delta_4pt: f64,
}

/// Largest four-point defect over quadruples drawn from a seeded pool of
/// vertices (all quadruples when that is no more than `n_quadruples`).
pub fn four_point_delta(graph: &MetricGraph, weight: &WeightField, n_quadruples: usize, seed: u64) -> Result<FourPointEstimate, HyperbolicityError> {
    if n_quadruples == 0 {
        return Err(HyperbolicityError::NoSamples);
    }
    let full = pool(graph);
    if full.len() < 4 {
        return Err(HyperbolicityError::PoolTooSmall { needed: 4, found: full.len() });
    }
    let picks = sampling::subset(full.len(), 64, seed);
    let sources: Vec<usize> = picks.iter().map(|&i| full[i]).collect();
    let m = sources.len();
    let dm = metricspace::distance_matrix(graph, weight, &sources).expect("sources are valid vertices");
    let d = |i: usize, j: usize| dm.get(i, sources[j]);

    let total = m * (m - 1) * (m - 2) * (m - 3) / 24;
    let (mut best, count, exhaustive) = if total <= n_quadruples {
        let mut best = 0.0f64;
        for a in 0..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    for e in c + 1..m {
                        best = best.max(four_point_defect(d, a, b, c, e));
                    }
                }
            }
        }
        (best, total, true)
    } else {
        let local: Vec<usize> = (0..m).collect();
        let quads = sampling::tuples(&local, n_quadruples, 4, seed ^ 0x9e37_79b9_7f4a_7c15);
        let best = quads.iter().map(|q| four_point_defect(d, q[0], q[1], q[2], q[3])).fold(0.0, f64::max);
        (best, n_quadruples, false)
    };
    if best < 0.0 {
        best = 0.0;
    }
    Ok(FourPointEstimate { quadruples: count, pool_size: m, exhaustive, seed, delta_4pt: best })
}

/// The explicit hyperbolicity constant for uniformity constant `a` and unit
/// Lipschitz constant: `4 a^2 log(1 + c (2c + 3))` with
/// `c = 1 + b* (4a^2 + 1) + 8a^2`, `b* = exp(4a^2 log(1 + 4b)) - 1` and
/// `b = 64 a^4 exp(32 a^4)`. Every step runs in log space.
pub fn delta_formula(a: f64) -> Result<f64, HyperbolicityError> {
    if !(a >= 1.0 && a.is_finite()) {
        return Err(HyperbolicityError::BelowOne(a));
    }
    let ln = libm::log;
    let a2 = a * a;
    let ln_b = ln(64.0) + 4.0 * ln(a) + 32.0 * a2 * a2;
    let ln_4b = ln(4.0) + ln_b;
    let ln_1p_4b = ln_4b + libm::log1p(libm::exp(-ln_4b));
    let e = 4.0 * a2 * ln_1p_4b;
    let ln_bstar = e + libm::log1p(-libm::exp(-e));
    let ln_prod = ln_bstar + ln(4.0 * a2 + 1.0);
    let ln_c = ln_prod + libm::log1p(libm::exp(ln(1.0 + 8.0 * a2) - ln_prod));
    let inv_c = libm::exp(-ln_c);
    // 1 + c(2c + 3) = 2c^2 (1 + 3/(2c) + 1/(2c^2))
    let ln_term = core::f64::consts::LN_2 + 2.0 * ln_c + libm::log1p(1.5 * inv_c + 0.5 * inv_c * inv_c);
    Ok(4.0 * a2 * ln_term)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarlikeEstimate {
    pub base: usize,
    pub targets: Vec<usize>,
    pub beta: f64,
}

/// Rough starlikeness about `base`: geodesics to near-singular and truncation
/// targets, then the largest distance of any vertex to their union.
pub fn check_rough_starlike(graph: &MetricGraph, weight: &WeightField, base: usize, n_targets: usize) -> Result<StarlikeEstimate, HyperbolicityError> {
    if base >= graph.vertex_count() {
        return Err(HyperbolicityError::InvalidVertex(base));
    }
    if n_targets == 0 {
        return Err(HyperbolicityError::NoSamples);
    }
    let near = graph.vertices_with(VertexFlags::NEAR_SIGMA_RING);
    let outer = graph.vertices_with(VertexFlags::OUTER_TRUNCATION);
    let targets = spread_targets(&near, &outer, n_targets, base);
    if targets.is_empty() {
        return Err(HyperbolicityError::NoTargets);
    }
    let mut ws = Dijkstra::new(graph.vertex_count());
    dists_from(graph, weight, &[base], &mut ws);
    let mut on_rays = vec![false; graph.vertex_count()];
    for &t in &targets {
        for v in ws.path_to(t).unwrap_or_default() {
            on_rays[v] = true;
        }
    }
    let union: Vec<usize> = (0..graph.vertex_count()).filter(|&v| on_rays[v]).collect();
    dists_from(graph, weight, &union, &mut ws);
    let beta = (0..graph.vertex_count()).map(|v| ws.dist(v)).fold(0.0, f64::max);
    Ok(StarlikeEstimate { base, targets, beta })
}

/// Evenly strided picks from both families, half the budget each when both exist.
fn spread_targets(near: &[usize], outer: &[usize], n: usize, base: usize) -> Vec<usize> {
    let stride_pick = |set: &[usize], k: usize| -> Vec<usize> {
        if set.is_empty() || k == 0 {
            return Vec::new();
        }
        let k = k.min(set.len());
        (0..k).map(|i| set[i * set.len() / k]).collect()
    };
    let (kn, ko) = match (near.is_empty(), outer.is_empty()) {
        (false, false) => (n.div_ceil(2), n / 2),
        (false, true) => (n, 0),
        _ => (0, n),
    };
    let mut out = stride_pick(near, kn);
    out.extend(stride_pick(outer, ko));
    out.retain(|&t| t != base);
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HyperbolicityReport {
    pub weight: WeightKind,
    pub n_triangles: usize,
    pub n_quadruples: usize,
    pub seed: u64,
    pub delta_thin: f64,
    pub delta_4pt: f64,
    pub beta: Option<f64>,
    pub base: Option<usize>,
    /// Explicit constant at the supplied uniformity estimate.
    pub paper_bound: Option<f64>,
    /// `paper_bound - delta_thin`.
    pub margin: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HyperbolicityOptions {
    pub n_triangles: usize,
    pub n_quadruples: usize,
    pub n_targets: usize,
    pub seed: u64,
}

impl Default for HyperbolicityOptions {
    fn default() -> Self {
        HyperbolicityOptions { n_triangles: 64, n_quadruples: 20_000, n_targets: 32, seed: 7 }
    }
}

/// Runs all three estimators. The starlikeness base is the middle vertex of
/// the sample pool.
pub fn analyze(graph: &MetricGraph, weight: &WeightField, opts: &HyperbolicityOptions, a_hat: Option<f64>) -> Result<HyperbolicityReport, HyperbolicityError> {
    let thin = estimate_thinness(graph, weight, opts.n_triangles, opts.seed)?;
    let four = four_point_delta(graph, weight, opts.n_quadruples, opts.seed)?;
    let p = pool(graph);
    let base = p[p.len() / 2];
    let star = match check_rough_starlike(graph, weight, base, opts.n_targets) {
        Ok(s) => Some(s),
        Err(HyperbolicityError::NoTargets) => None,
        Err(e) => return Err(e),
    };
    let paper_bound = match a_hat {
        Some(a) => Some(delta_formula(a.max(1.0))?),
        None => None,
    };
    Ok(HyperbolicityReport {
        weight: weight.kind(),
        n_triangles: opts.n_triangles,
        n_quadruples: four.quadruples,
        seed: opts.seed,
        delta_thin: thin.delta_thin,
        delta_4pt: four.delta_4pt,
        beta: star.as_ref().map(|s| s.beta),
        base: star.map(|s| s.base),
        paper_bound,
        margin: paper_bound.map(|b| b - thin.delta_thin),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{path_graph, star_tree};

    #[test]
    fn tree_is_zero_hyperbolic() {
        let g = star_tree(3, 8, 1.0).unwrap();
        let w = WeightField::intrinsic(&g);
        let e = four_point_delta(&g, &w, 100_000, 1).unwrap();
        assert_eq!(e.delta_4pt, 0.0);
    }

    #[test]
    fn four_point_of_a_square() {
        let d = |i: usize, j: usize| if (i + j) % 2 == 1 { 1.0 } else { 2.0 };
        assert_eq!(four_point_defect(d, 0, 1, 2, 3), 1.0);
    }

    #[test]
    fn path_is_starlike() {
        let g = path_graph(20, 1.0).unwrap();
        let w = WeightField::intrinsic(&g);
        assert_eq!(check_rough_starlike(&g, &w, 7, 4).unwrap().beta, 0.0);
        assert_eq!(triangle_defect(&g, &w, 2, 9, 15), 0.0);
    }

    #[test]
    fn formula_rejects_small_a() {
        assert_eq!(delta_formula(0.5), Err(HyperbolicityError::BelowOne(0.5)));
        assert!(delta_formula(1.0).unwrap() < delta_formula(1.1).unwrap());
    }
}
