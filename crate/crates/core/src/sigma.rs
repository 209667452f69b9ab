//! The metric sigma-transform `b` and its reciprocal `delta` on a graph.
//!
//! `b(x)` is the largest level `c` such that `x` lies within graph distance
//! `alpha / c` of the superlevel set `{a >= c}`. Superlevel sets are taken on
//! the piecewise-linear interpolation of `a` along edges, so an edge crossing
//! level `c` contributes a source at the interpolated crossing point.
//!
//! Levels are swept from the top of a geometric ladder downwards with one
//! bounded multi-source search per level. The bracket found for each vertex
//! can then be refined.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretize::{MetricGraph, VertexFlags};
use crate::length::Length;
use crate::par;
use crate::paths::{Dijkstra, SearchLimits};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SigmaError {
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("superlevel sets are empty for every level but the graph is not totally geodesic")]
    EmptySuperlevel,
    #[error("invalid ladder: {0}")]
    InvalidLadder(&'static str),
    #[error("ladder extension did not reach every vertex")]
    LadderExhausted,
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("field has {got} values, graph has {expected} vertices")]
    WrongLength { expected: usize, got: usize },
}

/// How a vertex's ladder bracket is narrowed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Refinement {
    /// Keep the ladder value.
    None,
    /// Solve `c * D(c) = alpha` with `D` linear between the bracketing levels.
    Interpolate,
    /// Bisect the exact tube predicate to a relative tolerance.
    Bisection { rel_tol: f64 },
}

/// Recipe for a ladder built from a graph's curvature range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    pub ratio: f64,
    /// Explicit `[c_lo, c_hi]`; defaults to `[min a / 4, 4 max a]`.
    pub span: Option<(f64, f64)>,
    pub refinement: Refinement,
}

impl Default for LadderSpec {
    fn default() -> Self {
        LadderSpec { ratio: libm::exp2(0.125), span: None, refinement: Refinement::Interpolate }
    }
}

/// Sorted positive level values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    values: Vec<f64>,
}

impl Ladder {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self, SigmaError> {
        if values.is_empty() || values.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(SigmaError::InvalidLadder("levels must be positive and finite"));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Ladder { values })
    }

    /// Geometric ladder `lo * ratio^k` covering `[lo, hi]`.
    pub fn geometric(lo: f64, hi: f64, ratio: f64) -> Result<Self, SigmaError> {
        if !(ratio > 1.0 && ratio.is_finite()) {
            return Err(SigmaError::InvalidLadder("ratio must exceed 1"));
        }
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(SigmaError::InvalidLadder("span must be positive and increasing"));
        }
        let steps = libm::ceil(libm::log(hi / lo) / libm::log(ratio)) as i32;
        let values = (0..=steps.max(0)).map(|k| lo * libm::pow(ratio, k as f64)).collect();
        Ladder::from_values(values)
    }

    /// Default ladder for a graph: geometric over the spec span, plus the
    /// maximum curvature value itself (above it every superlevel set is empty).
    pub fn for_graph(graph: &MetricGraph, spec: &LadderSpec) -> Result<Self, SigmaError> {
        let max_a = graph.a_values().iter().cloned().fold(0.0, f64::max);
        let min_pos = graph.a_values().iter().cloned().filter(|&a| a > 0.0).fold(f64::INFINITY, f64::min);
        if max_a == 0.0 {
            return Err(SigmaError::EmptySuperlevel);
        }
        let (lo, hi) = spec.span.unwrap_or((min_pos / 4.0, 4.0 * max_a));
        let mut l = Ladder::geometric(lo, hi, spec.ratio)?;
        l.values.push(max_a);
        Ladder::from_values(l.values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Ladder transported to `lambda * G`: every level divided by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Ladder {
        Ladder { values: self.values.iter().map(|c| c / lambda).collect() }
    }

    /// Largest ratio between consecutive levels.
    pub fn max_ratio(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] / w[0]).fold(1.0, f64::max)
    }
}

/// Per-vertex `b` and `delta = 1/b` with the data that produced them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaField {
    alpha: f64,
    b: Vec<f64>,
    delta: Vec<Length>,
    ladder: Ladder,
    refinement: Refinement,
    graph_label: String,
    bisected: usize,
}

/// JSON-friendly summary of how a field was computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaProvenance {
    pub graph: String,
    pub alpha: f64,
    pub refinement: Refinement,
    pub ladder: Vec<f64>,
    /// Vertices refined by local bisection because the interpolation bracket was incomplete.
    pub bisected_vertices: usize,
}

impl SigmaField {
    /// Rebuilds a field from stored values (e.g. read back from disk).
    pub fn from_parts(provenance: SigmaProvenance, b: Vec<f64>) -> Result<Self, SigmaError> {
        if !(provenance.alpha > 0.0 && provenance.alpha.is_finite()) {
            return Err(SigmaError::InvalidAlpha(provenance.alpha));
        }
        let ladder = Ladder::from_values(provenance.ladder)?;
        let delta = b.iter().map(|&v| Length::reciprocal_of(v)).collect();
        Ok(SigmaField {
            alpha: provenance.alpha,
            b,
            delta,
            ladder,
            refinement: provenance.refinement,
            graph_label: provenance.graph,
            bisected: provenance.bisected_vertices,
        })
    }

    fn trivial(graph: &MetricGraph, alpha: f64, refinement: Refinement) -> Self {
        SigmaField {
            alpha,
            b: vec![0.0; graph.vertex_count()],
            delta: vec![Length::Infinite; graph.vertex_count()],
            ladder: Ladder { values: Vec::new() },
            refinement,
            graph_label: graph.label().into(),
            bisected: 0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn b(&self, v: usize) -> f64 {
        self.b[v]
    }

    pub fn b_values(&self) -> &[f64] {
        &self.b
    }

    pub fn delta(&self, v: usize) -> Length {
        self.delta[v]
    }

    pub fn deltas(&self) -> &[Length] {
        &self.delta
    }

    pub fn ladder(&self) -> &Ladder {
        &self.ladder
    }

    pub fn refinement(&self) -> Refinement {
        self.refinement
    }

    pub fn is_trivial(&self) -> bool {
        self.b.iter().all(|&b| b == 0.0)
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn provenance(&self) -> SigmaProvenance {
        SigmaProvenance {
            graph: self.graph_label.clone(),
            alpha: self.alpha,
            refinement: self.refinement,
            ladder: self.ladder.values.clone(),
            bisected_vertices: self.bisected,
        }
    }

    /// Edgewise Lipschitz estimate `max |delta(u) - delta(v)| / len`.
    pub fn lipschitz_estimate(&self, graph: &MetricGraph) -> f64 {
        let mut best = 0.0f64;
        for (u, v, len) in graph.edges() {
            if let (Length::Finite(du), Length::Finite(dv)) = (self.delta[u], self.delta[v]) {
                best = best.max((du - dv).abs() / len);
            }
        }
        best
    }
}

/// Distances to `{a >= c}` from every vertex (0 inside), bounded by `bound`.
fn superlevel_search(graph: &MetricGraph, c: f64, order: &[usize], ws: &mut Dijkstra, bound: f64) -> bool {
    let a = graph.a_values();
    let mut sources: Vec<(usize, f64)> = Vec::new();
    let mut any = false;
    for &y in order {
        if a[y] < c {
            break;
        }
        any = true;
        for (z, len) in graph.neighbors(y) {
            if a[z] < c {
                let s = (a[y] - c) / (a[y] - a[z]);
                sources.push((z, (1.0 - s) * len));
            }
        }
    }
    sources.sort_by(|p, q| p.0.cmp(&q.0).then(p.1.total_cmp(&q.1)));
    sources.dedup_by_key(|p| p.0);
    ws.run(graph, graph.lengths(), &sources, SearchLimits { bound: Some(bound), ..SearchLimits::default() });
    any
}

/// Graph distance from `x` to `{a >= c}`, looking no further than `bound`.
fn tube_distance(graph: &MetricGraph, x: usize, c: f64, ws: &Dijkstra) -> f64 {
    let a = graph.a_values();
    if a[x] >= c {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for &z in ws.settled() {
        let z = z as usize;
        if a[z] >= c {
            continue;
        }
        let dz = ws.dist(z);
        if dz >= best {
            continue;
        }
        for (y, len) in graph.neighbors(z) {
            if a[y] >= c {
                let s = (a[y] - c) / (a[y] - a[z]);
                best = best.min(dz + (1.0 - s) * len);
            }
        }
    }
    best
}

fn vertices_by_descending_a(graph: &MetricGraph) -> Vec<usize> {
    let a = graph.a_values();
    let mut order: Vec<usize> = (0..graph.vertex_count()).collect();
    order.sort_by(|&i, &j| a[j].total_cmp(&a[i]).then(i.cmp(&j)));
    order
}

pub fn compute_sigma_field(graph: &MetricGraph, alpha: f64, spec: &LadderSpec) -> Result<SigmaField, SigmaError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(SigmaError::InvalidAlpha(alpha));
    }
    if graph.totally_geodesic() {
        return Ok(SigmaField::trivial(graph, alpha, spec.refinement));
    }
    let ladder = Ladder::for_graph(graph, spec)?;
    compute_sigma_field_with_ladder(graph, alpha, &ladder, spec.refinement)
}

const FALLBACK_REL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
struct Bracket {
    c: f64,
    d: f64,
    c_above: f64,
    d_above: f64,
}

/// Sweep with an explicit ladder (extended downwards if some vertex is
/// still outside every tube at the lowest level).
pub fn compute_sigma_field_with_ladder(
    graph: &MetricGraph,
    alpha: f64,
    ladder: &Ladder,
    refinement: Refinement,
) -> Result<SigmaField, SigmaError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(SigmaError::InvalidAlpha(alpha));
    }
    if graph.totally_geodesic() {
        return Ok(SigmaField::trivial(graph, alpha, refinement));
    }
    let n = graph.vertex_count();
    let a = graph.a_values();
    let order = vertices_by_descending_a(graph);
    let mut levels: Vec<f64> = ladder.values.iter().rev().cloned().collect();
    let ratio = ladder.max_ratio().max(libm::exp2(0.125));
    let mut bracket: Vec<Option<Bracket>> = vec![None; n];
    let mut remaining = n;
    let mut prev = Dijkstra::new(n);
    let mut cur = Dijkstra::new(n);
    let mut prev_c = f64::INFINITY;
    let mut prev_any = false;
    let mut k = 0;
    let mut extensions = 0;
    while remaining > 0 {
        if k == levels.len() {
            if extensions > 4096 {
                return Err(SigmaError::LadderExhausted);
            }
            let last = levels[k - 1];
            levels.push(last / ratio);
            extensions += 1;
        }
        let c = levels[k];
        let radius = alpha / c;
        let next_c = levels.get(k + 1).cloned().unwrap_or(c / ratio);
        let bound = 1.5 * alpha / next_c;
        let any = superlevel_search(graph, c, &order, &mut cur, bound);
        if any {
            for (x, slot) in bracket.iter_mut().enumerate() {
                if slot.is_some() {
                    continue;
                }
                let d = if a[x] >= c { 0.0 } else { cur.dist(x) };
                if d <= radius {
                    let d_above = if prev_any { prev.dist(x) } else { f64::INFINITY };
                    *slot = Some(Bracket { c, d, c_above: prev_c, d_above });
                    remaining -= 1;
                }
            }
        }
        core::mem::swap(&mut prev, &mut cur);
        prev_any = any;
        prev_c = c;
        k += 1;
    }
    if levels.iter().all(|&c| !order.first().is_some_and(|&v| a[v] >= c)) {
        return Err(SigmaError::EmptySuperlevel);
    }
    let brackets: Vec<Bracket> = bracket.into_iter().map(|b| b.expect("all vertices bracketed")).collect();

    let (b, bisected) = match refinement {
        Refinement::None => (brackets.iter().map(|br| br.c).collect(), 0),
        Refinement::Interpolate => {
            let mut b: Vec<f64> = (0..n).map(|x| interpolate(a[x], alpha, &brackets[x]).unwrap_or(f64::NAN)).collect();
            // The upper level's bounded search missed these vertices (small alpha
            // against the ladder ratio); bisect them locally instead.
            let missed: Vec<usize> = (0..n).filter(|&x| b[x].is_nan()).collect();
            let exact = par::map_with(missed.len(), || Dijkstra::new(n), |ws, i| bisect(graph, missed[i], alpha, &brackets[missed[i]], FALLBACK_REL_TOL, ws));
            for (&x, v) in missed.iter().zip(exact) {
                b[x] = v.max(a[x]);
            }
            (b, missed.len())
        }
        Refinement::Bisection { rel_tol } => {
            let b = par::map_with(n, || Dijkstra::new(n), |ws, x| bisect(graph, x, alpha, &brackets[x], rel_tol, ws));
            (b, 0)
        }
    };
    let delta = b.iter().map(|&v: &f64| Length::reciprocal_of(v)).collect();
    levels.reverse();
    Ok(SigmaField {
        alpha,
        b,
        delta,
        ladder: Ladder { values: levels },
        refinement,
        graph_label: graph.label().into(),
        bisected,
    })
}

/// Root of `c * D(c) = alpha` for `D` linear through the bracket ends.
fn interpolate(a_x: f64, alpha: f64, br: &Bracket) -> Option<f64> {
    if !br.c_above.is_finite() {
        return None;
    }
    if !br.d_above.is_finite() {
        return None;
    }
    let (c_l, d_l) = if a_x >= br.c { (a_x, 0.0) } else { (br.c, br.d) };
    let (c_r, d_r) = (br.c_above, br.d_above);
    if c_r <= c_l {
        return Some(c_l);
    }
    let s = ((d_r - d_l) / (c_r - c_l)).max(0.0);
    let bb = d_l - s * c_l;
    let root = if s == 0.0 {
        if d_l == 0.0 {
            return Some(c_r);
        }
        alpha / d_l
    } else {
        2.0 * alpha / (bb + libm::sqrt(bb * bb + 4.0 * s * alpha))
    };
    Some(root.clamp(c_l, c_r))
}

fn bisect(graph: &MetricGraph, x: usize, alpha: f64, br: &Bracket, rel_tol: f64, ws: &mut Dijkstra) -> f64 {
    let a = graph.a_values();
    let mut lo = br.c.max(a[x].min(br.c_above));
    let mut hi = br.c_above;
    if !hi.is_finite() {
        return lo;
    }
    ws.run(graph, graph.lengths(), &[(x, 0.0)], SearchLimits { bound: Some(1.01 * alpha / lo), ..SearchLimits::default() });
    while hi - lo > rel_tol * lo {
        let mid = 0.5 * (lo + hi);
        if tube_distance(graph, x, mid, ws) <= alpha / mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Checks by full scan that the tube predicate is true-then-false along the
/// ladder at every vertex. Returns the number of vertices where it is not.
pub fn count_nonmonotone_membership(graph: &MetricGraph, alpha: f64, ladder: &Ladder) -> usize {
    let n = graph.vertex_count();
    let a = graph.a_values();
    let order = vertices_by_descending_a(graph);
    let mut ws = Dijkstra::new(n);
    let mut seen_false = vec![false; n];
    let mut bad = vec![false; n];
    for &c in ladder.values() {
        superlevel_search(graph, c, &order, &mut ws, f64::INFINITY);
        for x in 0..n {
            let d = if a[x] >= c { 0.0 } else { ws.dist(x) };
            let member = d <= alpha / c;
            if member && seen_false[x] {
                bad[x] = true;
            }
            if !member {
                seen_false[x] = true;
            }
        }
    }
    bad.iter().filter(|&&b| b).count()
}

/// Options for [`verify_axioms`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxiomOptions {
    /// Relative discretization slack for the Lipschitz axiom.
    pub eps_h: f64,
    pub scalings: [f64; 2],
    pub check_blowup: bool,
}

impl Default for AxiomOptions {
    fn default() -> Self {
        AxiomOptions { eps_h: 0.15, scalings: [2.0, 1.0 / 3.0], check_blowup: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct S1Report {
    pub totally_geodesic: bool,
    pub b_identically_zero: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct S2Report {
    /// `min (b - a) / a` over reliable vertices with `a > 0`.
    pub min_relative_margin: f64,
    pub slack: f64,
    pub dominance_pass: bool,
    /// Minimum of `b` over dyadic bands of distance to the singular set,
    /// nearest band first. Empty when there is no singular set.
    pub band_minima: Vec<f64>,
    pub divergence_pass: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct S3Report {
    pub l_hat: f64,
    pub bound: f64,
    pub vacuous: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingCheck {
    pub lambda: f64,
    pub mismatches: usize,
    pub bitwise_equal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupCheck {
    pub lambda: f64,
    pub ring_shift: usize,
    pub compared: usize,
    pub max_rel_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct S4Report {
    pub scaling: Vec<ScalingCheck>,
    pub blowup: Option<BlowupCheck>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub s1: S1Report,
    pub s2: S2Report,
    pub s3: S3Report,
    pub s4: S4Report,
    pub violations: Vec<String>,
    pub pass: bool,
}

pub fn verify_axioms(field: &SigmaField, graph: &MetricGraph, opts: &AxiomOptions) -> Result<AxiomReport, SigmaError> {
    let n = graph.vertex_count();
    if field.len() != n {
        return Err(SigmaError::WrongLength { expected: n, got: field.len() });
    }
    let mut violations = Vec::new();

    let b_zero = field.is_trivial();
    let s1 = S1Report { totally_geodesic: graph.totally_geodesic(), b_identically_zero: b_zero, pass: b_zero == graph.totally_geodesic() };
    if !s1.pass {
        violations.push(format!("S1: totally_geodesic = {} but b identically zero = {}", s1.totally_geodesic, b_zero));
    }

    let slack = match field.refinement() {
        Refinement::None => field.ladder().max_ratio() - 1.0,
        Refinement::Interpolate => 1e-12,
        Refinement::Bisection { rel_tol } => rel_tol,
    };
    let mut min_margin = f64::INFINITY;
    let mut worst = None;
    for v in 0..n {
        let a = graph.a(v);
        if !graph.a_reliable(v) || a <= 0.0 {
            continue;
        }
        let m = (field.b(v) - a) / a;
        if m < min_margin {
            min_margin = m;
            worst = Some(v);
        }
    }
    let dominance_pass = !(min_margin < -slack);
    if !dominance_pass {
        let v = worst.unwrap_or(0);
        violations.push(format!("S2: b < a at vertex {v} (b = {}, a = {})", field.b(v), graph.a(v)));
    }
    let band_minima = divergence_bands(field, graph);
    let mut divergence_pass = true;
    for (j, w) in band_minima.windows(2).enumerate() {
        if w[0] < w[1] * (1.0 - slack.max(1e-9)) {
            divergence_pass = false;
            violations.push(format!("S2: band {j} minimum {} below band {} minimum {}", w[0], j + 1, w[1]));
        }
    }
    let s2 = S2Report {
        min_relative_margin: if min_margin.is_finite() { min_margin } else { 0.0 },
        slack,
        dominance_pass,
        band_minima,
        divergence_pass,
        pass: dominance_pass && divergence_pass,
    };

    let l_hat = field.lipschitz_estimate(graph);
    let bound = (1.0 + opts.eps_h) / field.alpha();
    let vacuous = b_zero;
    let s3 = S3Report { l_hat, bound, vacuous, pass: vacuous || l_hat <= bound };
    if !s3.pass {
        violations.push(format!("S3: L_hat = {l_hat} exceeds {bound}"));
    }

    let s4 = scaling_checks(field, graph, opts)?;
    for sc in &s4.scaling {
        if !sc.bitwise_equal {
            violations.push(format!("S4: {} mismatches under scaling by {}", sc.mismatches, sc.lambda));
        }
    }
    if let Some(bu) = &s4.blowup {
        if !bu.pass {
            violations.push(format!("S4: blow-up differs by {} (tolerance {})", bu.max_rel_diff, bu.tolerance));
        }
    }
    let pass = s1.pass && s2.pass && s3.pass && s4.pass;
    Ok(AxiomReport { s1, s2, s3, s4, violations, pass })
}

fn divergence_bands(field: &SigmaField, graph: &MetricGraph) -> Vec<f64> {
    if !graph.has_sigma() || field.is_trivial() {
        return Vec::new();
    }
    let dist: Vec<f64> = (0..graph.vertex_count()).map(|v| graph.dist_sigma(v).to_f64()).collect();
    let d0 = dist.iter().cloned().fold(f64::INFINITY, f64::min).max(1e-300);
    let dmax = dist.iter().cloned().filter(|d| d.is_finite()).fold(0.0, f64::max);
    let mut minima = Vec::new();
    let mut lo = d0;
    while lo < dmax {
        let hi = 2.0 * lo;
        let m = (0..graph.vertex_count())
            .filter(|&v| dist[v] >= lo && dist[v] < hi && !graph.flags(v).contains(VertexFlags::OUTER_TRUNCATION))
            .map(|v| field.b(v))
            .fold(f64::INFINITY, f64::min);
        if m.is_finite() {
            minima.push(m);
        }
        lo = hi;
    }
    minima
}

fn scaling_checks(field: &SigmaField, graph: &MetricGraph, opts: &AxiomOptions) -> Result<S4Report, SigmaError> {
    if field.is_trivial() {
        let scaling = opts.scalings.iter().map(|&lambda| ScalingCheck { lambda, mismatches: 0, bitwise_equal: true }).collect();
        return Ok(S4Report { scaling, blowup: None, pass: true });
    }
    let base = compute_sigma_field_with_ladder(graph, field.alpha(), field.ladder(), Refinement::None)?;
    let mut scaling = Vec::new();
    for &lambda in &opts.scalings {
        let scaled_graph = graph.scaled(lambda);
        let scaled = compute_sigma_field_with_ladder(&scaled_graph, field.alpha(), &field.ladder().scaled(lambda), Refinement::None)?;
        let mismatches = (0..graph.vertex_count()).filter(|&v| scaled.b(v) != base.b(v) / lambda).count();
        scaling.push(ScalingCheck { lambda, mismatches, bitwise_equal: mismatches == 0 });
    }
    let blowup = if opts.check_blowup { blowup_check(field, graph)? } else { None };
    let pass = scaling.iter().all(|s| s.bitwise_equal) && blowup.as_ref().is_none_or(|b| b.pass);
    Ok(S4Report { scaling, blowup, pass })
}

/// Rescales a graded cone graph by a whole number of rings and compares `b`
/// at matching radii away from the inner truncation.
fn blowup_check(field: &SigmaField, graph: &MetricGraph) -> Result<Option<BlowupCheck>, SigmaError> {
    let Some(cone) = graph.cone_grid().copied() else {
        return Ok(None);
    };
    let shift = libm::round(core::f64::consts::LN_2 / cone.du).max(1.0) as usize;
    if shift >= cone.rings {
        return Ok(None);
    }
    let lambda = libm::exp(shift as f64 * cone.du);
    let spec = LadderSpec { refinement: field.refinement(), ..LadderSpec::default() };
    let blown = graph.scaled(lambda);
    let other = compute_sigma_field(&blown, field.alpha(), &spec)?;
    let margin = 1.25 * (1.0 + field.alpha() / cone.cone_constant);
    let first = libm::ceil(libm::log(margin) / cone.du) as usize;
    let mut max_rel = 0.0f64;
    let mut compared = 0;
    for ring in first..cone.rings.saturating_sub(shift) {
        for col in 0..cone.cols {
            let v_blown = cone.vertex(ring, col);
            let v_orig = cone.vertex(ring + shift, col);
            let (x, y) = (other.b(v_blown), field.b(v_orig));
            max_rel = max_rel.max((x - y).abs() / y.abs().max(1e-300));
            compared += 1;
        }
    }
    let tolerance = field.ladder().max_ratio() - 1.0;
    Ok(Some(BlowupCheck { lambda, ring_shift: shift, compared, max_rel_diff: max_rel, tolerance, pass: max_rel <= tolerance }))
}

/// Compact interior region used by [`interpolation_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    /// Unflagged vertices whose model distance to the singular set lies in `[lo, hi]`.
    DistSigma { lo: f64, hi: f64 },
    Vertices(Vec<usize>),
}

impl Band {
    pub fn vertices(&self, graph: &MetricGraph) -> Result<Vec<usize>, SigmaError> {
        let verts: Vec<usize> = match self {
            Band::DistSigma { lo, hi } => (0..graph.vertex_count())
                .filter(|&v| graph.flags(v).is_empty() && graph.dist_sigma_model(v).finite().is_some_and(|d| d >= *lo && d <= *hi))
                .collect(),
            Band::Vertices(v) => v.clone(),
        };
        if verts.is_empty() {
            return Err(SigmaError::InvalidBand("band contains no vertices".into()));
        }
        for &v in &verts {
            if v >= graph.vertex_count() {
                return Err(SigmaError::InvalidBand(format!("vertex {v} out of range")));
            }
            if !graph.flags(v).is_empty() {
                return Err(SigmaError::InvalidBand(format!("vertex {v} lies on a ring or truncation boundary")));
            }
        }
        Ok(verts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpolationRow {
    pub alpha: f64,
    /// `sup |b - a|` over the band.
    pub sup_b_minus_a: f64,
    /// `sup |b / alpha - 1 / dist_sigma|` over the band, when a singular set exists.
    pub sup_b_over_alpha_minus_inverse_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpolationTable {
    pub band_vertices: usize,
    pub rows: Vec<InterpolationRow>,
    /// Worst relative violation of `b_alpha >= b_beta` for `alpha > beta`.
    pub worst_monotonicity_violation: f64,
    pub monotone: bool,
}

pub fn interpolation_sweep(graph: &MetricGraph, alphas: &[f64], band: &Band, spec: &LadderSpec) -> Result<InterpolationTable, SigmaError> {
    if graph.totally_geodesic() {
        return Err(SigmaError::EmptySuperlevel);
    }
    if let Some(&bad) = alphas.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
        return Err(SigmaError::InvalidAlpha(bad));
    }
    let verts = band.vertices(graph)?;
    let mut sorted: Vec<f64> = alphas.to_vec();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let fields: Vec<SigmaField> = sorted.iter().map(|&al| compute_sigma_field(graph, al, spec)).collect::<Result<_, _>>()?;
    let rows = sorted
        .iter()
        .zip(&fields)
        .map(|(&alpha, f)| {
            let sup_b_minus_a = verts.iter().map(|&v| (f.b(v) - graph.a(v)).abs()).fold(0.0, f64::max);
            let third = graph.has_sigma().then(|| {
                verts
                    .iter()
                    .map(|&v| (f.b(v) / alpha - 1.0 / graph.dist_sigma_model(v).to_f64()).abs())
                    .fold(0.0, f64::max)
            });
            InterpolationRow { alpha, sup_b_minus_a, sup_b_over_alpha_minus_inverse_distance: third }
        })
        .collect();
    let mut worst = 0.0f64;
    for w in fields.windows(2) {
        for v in 0..graph.vertex_count() {
            let (big, small) = (w[0].b(v), w[1].b(v));
            if big < small {
                worst = worst.max((small - big) / small);
            }
        }
    }
    let slack = spec.ratio - 1.0;
    Ok(InterpolationTable { band_vertices: verts.len(), rows, worst_monotonicity_violation: worst, monotone: worst <= slack })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnackReport {
    pub edges_checked: usize,
    /// Largest `|b(v)/b(u) - 1| / (2 L b(u) len (1 + eps))`; at most 1 when the bound holds.
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Checks `|b(v)/b(u) - 1| <= 2 L b(u) len (1 + eps)` on edges with
/// `len <= 1 / (2 L b(u))`.
pub fn harnack_check(field: &SigmaField, graph: &MetricGraph, l_hat: f64, eps_h: f64) -> HarnackReport {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for u in 0..graph.vertex_count() {
        let bu = field.b(u);
        if bu <= 0.0 {
            continue;
        }
        for (v, len) in graph.neighbors(u) {
            if len > 1.0 / (2.0 * l_hat * bu) {
                continue;
            }
            checked += 1;
            let lhs = (field.b(v) / bu - 1.0).abs();
            let rhs = 2.0 * l_hat * bu * len * (1.0 + eps_h);
            worst = worst.max(lhs / rhs);
        }
    }
    HarnackReport { edges_checked: checked, worst_ratio: worst, pass: worst <= 1.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{build_graph, path_graph, GridSpec};
    use crate::models::simons_cone;

    #[test]
    fn ladder_construction() {
        let l = Ladder::geometric(1.0, 8.0, 2.0).unwrap();
        assert_eq!(l.values(), &[1.0, 2.0, 4.0, 8.0]);
        assert!(Ladder::geometric(1.0, 8.0, 1.0).is_err());
        assert_eq!(l.scaled(2.0).values(), &[0.5, 1.0, 2.0, 4.0]);
    }

    #[test]
    fn constant_curvature_gives_constant_b() {
        let g = path_graph(20, 0.5).unwrap();
        let f = compute_sigma_field(&g, 1.0, &LadderSpec::default()).unwrap();
        for v in 0..20 {
            assert!((f.b(v) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_alpha() {
        let g = path_graph(20, 0.5).unwrap();
        assert_eq!(compute_sigma_field(&g, 0.0, &LadderSpec::default()).unwrap_err(), SigmaError::InvalidAlpha(0.0));
    }

    #[test]
    fn cone_field_close_to_closed_form() {
        let g = build_graph(&simons_cone(0.1, 10.0).unwrap(), &GridSpec::with_resolution(48)).unwrap();
        let f = compute_sigma_field(&g, 1.0, &LadderSpec::default()).unwrap();
        let c = libm::sqrt(6.0) + 1.0;
        for v in 0..g.vertex_count() {
            let r = g.dist_sigma_model(v).finite().unwrap();
            if (0.3..=5.0).contains(&r) {
                assert!((f.b(v) * r / c - 1.0).abs() < 0.05, "r = {r}, b = {}", f.b(v));
            }
        }
    }
}
