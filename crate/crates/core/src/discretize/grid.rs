//! Chart grids for the analytic models.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::mesh::{graph_from_triangles_analytic, icosphere};
use super::{ConeGrid, GraphBuilder, GraphError, MetricGraph, VertexData, VertexFlags};
use crate::length::Length;
use crate::models::{link_radii, ModelSpec, ModelSurface};

const MIN_PER_AXIS: usize = 16;

/// Resolution and slicing of a chart grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Vertices around the angular axis (or per side for flat charts).
    pub resolution: usize,
    /// Chart dimension of the grid: 2 (8-neighbour stencil) or 3 (18-neighbour).
    pub slice_dim: usize,
    /// Restrict cone grids to the angular sector `[0, span]` instead of a full circle.
    pub angular_span: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { resolution: 96, slice_dim: 2, angular_span: None }
    }
}

impl GridSpec {
    pub fn with_resolution(resolution: usize) -> Self {
        GridSpec { resolution, ..GridSpec::default() }
    }
}

/// Discretizes a model chart. Truncation bounds come from the model parameters.
pub fn build_graph(model: &ModelSurface, spec: &GridSpec) -> Result<MetricGraph, GraphError> {
    if spec.resolution < MIN_PER_AXIS {
        return Err(GraphError::TooCoarse { axis: 1, count: spec.resolution });
    }
    let unscaled = model.scale_model(1.0 / model.scale())?;
    let graph = match model.spec() {
        ModelSpec::Hyperplane { dim, half_width } => flat_grid(dim, half_width, spec)?,
        ModelSpec::Sphere { radius } => sphere_graph(radius, spec.resolution)?,
        ModelSpec::Catenoid { neck, t_min, t_max } => catenoid_grid(&unscaled, neck, t_min, t_max, spec)?,
        ModelSpec::ConeOverSphereProducts { p, q, r_min, r_max } => cone_grid(&unscaled, p, q, r_min, r_max, spec)?,
        ModelSpec::CliffordCone { r_min, r_max } => cone_grid(&unscaled, 1, 1, r_min, r_max, spec)?,
    };
    if model.scale() == 1.0 {
        Ok(graph)
    } else {
        Ok(graph.scaled(model.scale()))
    }
}

/// Distance between points at radii `r1`, `r2` of a cone whose link points
/// are `link` apart along a link geodesic.
fn cone_chord(r1: f64, r2: f64, link: f64) -> f64 {
    let s = libm::sin(0.5 * link);
    libm::sqrt((r1 - r2) * (r1 - r2) + 4.0 * r1 * r2 * s * s)
}

fn flat_grid(dim: usize, half_width: f64, spec: &GridSpec) -> Result<MetricGraph, GraphError> {
    let n = spec.resolution;
    let d3 = spec.slice_dim >= 3 && dim >= 3;
    let gdim = if d3 { 3 } else { dim.min(2) };
    if gdim < 2 {
        return Err(GraphError::TooCoarse { axis: 1, count: 1 });
    }
    let step = 2.0 * half_width / (n - 1) as f64;
    let nz = if d3 { n } else { 1 };
    let mut b = GraphBuilder::new(format!("hyperplane(dim={dim}) res={n}"), dim + 1, gdim, gdim);
    let mut pos = vec![0.0; dim + 1];
    let cell = libm::pow(step, gdim as f64);
    for k in 0..nz {
        for j in 0..n {
            for i in 0..n {
                let coords = [-half_width + i as f64 * step, -half_width + j as f64 * step, -half_width + k as f64 * step];
                pos[..gdim].copy_from_slice(&coords[..gdim]);
                let edge = i == 0 || j == 0 || i == n - 1 || j == n - 1 || (d3 && (k == 0 || k == n - 1));
                b.add_vertex(VertexData {
                    position: &pos,
                    chart: &coords[..gdim],
                    a: 0.0,
                    a_reliable: true,
                    dist_sigma: Length::Infinite,
                    flags: if edge { VertexFlags::OUTER_TRUNCATION } else { VertexFlags::empty() },
                    area: cell,
                    sigma_offset: None,
                });
            }
        }
    }
    let idx = |i: usize, j: usize, k: usize| (k * n + j) * n + i;
    for (di, dj, dk) in stencil(d3) {
        for k in 0..nz {
            for j in 0..n {
                for i in 0..n {
                    let (ii, jj, kk) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                    if ii < 0 || jj < 0 || kk < 0 || ii >= n as i64 || jj >= n as i64 || kk >= nz as i64 {
                        continue;
                    }
                    let len = step * libm::sqrt((di * di + dj * dj + dk * dk) as f64);
                    b.add_edge(idx(i, j, k), idx(ii as usize, jj as usize, kk as usize), len);
                }
            }
        }
    }
    b.finish()
}

/// Forward half of the 8-neighbour (2D) or 18-neighbour (3D) stencil.
fn stencil(d3: bool) -> Vec<(i64, i64, i64)> {
    let mut out = Vec::new();
    let kr: &[i64] = if d3 { &[-1, 0, 1] } else { &[0] };
    for &dk in kr {
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let nz = (di != 0) as u8 + (dj != 0) as u8 + (dk != 0) as u8;
                if nz == 0 || nz == 3 {
                    continue;
                }
                if (dk, dj, di) > (0, 0, 0) {
                    out.push((di, dj, dk));
                }
            }
        }
    }
    out
}

fn sphere_graph(radius: f64, resolution: usize) -> Result<MetricGraph, GraphError> {
    let mut level = 0;
    while 5 * (1usize << level) < resolution {
        level += 1;
    }
    let mesh = icosphere(level);
    let positions: Vec<[f64; 3]> = mesh.positions().iter().map(|p| [p[0] * radius, p[1] * radius, p[2] * radius]).collect();
    let a = core::f64::consts::SQRT_2 / radius;
    graph_from_triangles_analytic(
        format!("sphere(R={radius}) level={level}"),
        &positions,
        mesh.faces(),
        |_| a,
        |p, q| {
            let c = (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]) / (radius * radius);
            radius * libm::acos(c.clamp(-1.0, 1.0))
        },
    )
}

fn catenoid_grid(model: &ModelSurface, neck: f64, t_min: f64, t_max: f64, spec: &GridSpec) -> Result<MetricGraph, GraphError> {
    let nth = spec.resolution;
    let dth = 2.0 * PI / nth as f64;
    let rows = (libm::ceil((t_max - t_min) / (neck * dth)) as usize + 1).max(2);
    if rows < MIN_PER_AXIS {
        return Err(GraphError::TooCoarse { axis: 0, count: rows });
    }
    let dt = (t_max - t_min) / (rows - 1) as f64;
    let mut b = GraphBuilder::new(format!("catenoid(c={neck}) t=[{t_min},{t_max}] res={nth}"), 3, 2, 2);
    let mut pos = [0.0; 3];
    for i in 0..rows {
        let t = if i == rows - 1 { t_max } else { t_min + i as f64 * dt };
        let ch = libm::cosh(t / neck);
        for j in 0..nth {
            let x = [t, j as f64 * dth];
            model.position_unchecked(&x, &mut pos);
            let flags = if i == 0 || i == rows - 1 { VertexFlags::OUTER_TRUNCATION } else { VertexFlags::empty() };
            b.add_vertex(VertexData {
                position: &pos,
                chart: &x,
                a: model.second_fundamental_norm_unchecked(&x),
                a_reliable: true,
                dist_sigma: Length::Infinite,
                flags,
                area: ch * ch * neck * dt * dth,
                sigma_offset: None,
            });
        }
    }
    let t_of = |i: usize| if i == rows - 1 { t_max } else { t_min + i as f64 * dt };
    // Length of the chart segment (t0, th0) -> (t1, th0 + k dth) under cosh^2(t/c)(dt^2 + c^2 dth^2).
    let seg = |t0: f64, t1: f64, k: i64| {
        let planar = libm::sqrt((t1 - t0) * (t1 - t0) + (neck * k as f64 * dth) * (neck * k as f64 * dth));
        let mean_cosh = if (t1 - t0).abs() < 1e-300 {
            libm::cosh(t0 / neck)
        } else {
            neck * (libm::sinh(t1 / neck) - libm::sinh(t0 / neck)) / (t1 - t0)
        };
        planar * mean_cosh
    };
    for i in 0..rows {
        for j in 0..nth {
            let u = i * nth + j;
            let jn = (j + 1) % nth;
            b.add_edge(u, i * nth + jn, seg(t_of(i), t_of(i), 1));
            if i + 1 < rows {
                let jp = (j + nth - 1) % nth;
                b.add_edge(u, (i + 1) * nth + j, seg(t_of(i), t_of(i + 1), 0));
                b.add_edge(u, (i + 1) * nth + jn, seg(t_of(i), t_of(i + 1), 1));
                b.add_edge(u, (i + 1) * nth + jp, seg(t_of(i), t_of(i + 1), -1));
            }
        }
    }
    b.finish()
}

fn cone_grid(model: &ModelSurface, p: usize, q: usize, r_min: f64, r_max: f64, spec: &GridSpec) -> Result<MetricGraph, GraphError> {
    let (rho1, rho2) = link_radii(p, q);
    let d3 = spec.slice_dim >= 3;
    let (n1, dth, periodic) = match spec.angular_span {
        Some(span) => (spec.resolution, span / (spec.resolution - 1) as f64, false),
        None => (spec.resolution, 2.0 * PI / spec.resolution as f64, true),
    };
    let (n2, dph) = if d3 {
        let n2 = libm::round(spec.resolution as f64 * rho2 / rho1).max(MIN_PER_AXIS as f64) as usize;
        (n2, 2.0 * PI / n2 as f64)
    } else {
        (1, 0.0)
    };
    let span_u = libm::log(r_max / r_min);
    let rings = (libm::ceil(span_u / (rho1 * dth)) as usize + 1).max(2);
    if rings < MIN_PER_AXIS {
        return Err(GraphError::TooCoarse { axis: 0, count: rings });
    }
    let du = span_u / (rings - 1) as f64;
    let a0 = libm::sqrt((p + q) as f64);
    let cols = n1 * n2;
    let dim = model.dim();
    let label = format!(
        "cone(p={p},q={q}) r=[{r_min},{r_max}] res={} slice={}{}",
        spec.resolution,
        if d3 { 3 } else { 2 },
        if periodic { "" } else { " sector" }
    );
    let mut b = GraphBuilder::new(label, dim + 1, if d3 { 3 } else { 2 }, dim);
    b.set_cone_grid(ConeGrid { rings, cols, r_min, du, scale: 1.0, cone_constant: a0 });
    let radius = |i: usize| if i == rings - 1 { r_max } else { r_min * libm::exp(i as f64 * du) };
    let mut x = vec![PI / 2.0; dim];
    let mut pos = vec![0.0; dim + 1];
    let vol = if d3 { rho1 * rho2 * du * dth * dph } else { rho1 * du * dth };
    for i in 0..rings {
        let r = radius(i);
        for k in 0..n2 {
            for j in 0..n1 {
                x[0] = r;
                x[p] = j as f64 * dth;
                x[p + q] = k as f64 * dph;
                model.position_unchecked(&x, &mut pos);
                let mut flags = VertexFlags::empty();
                if i == 0 {
                    flags |= VertexFlags::NEAR_SIGMA_RING;
                }
                if i == rings - 1 || (!periodic && (j == 0 || j == n1 - 1)) {
                    flags |= VertexFlags::OUTER_TRUNCATION;
                }
                b.add_vertex(VertexData {
                    position: &pos,
                    chart: &x,
                    a: a0 / r,
                    a_reliable: true,
                    dist_sigma: Length::Finite(r),
                    flags,
                    area: libm::pow(r, if d3 { 3.0 } else { 2.0 }) * vol,
                    sigma_offset: if i == 0 { Some(r_min) } else { None },
                });
            }
        }
    }
    let idx = |i: usize, j: usize, k: usize| i * cols + k * n1 + j;
    for (dj, di, dk) in stencil(d3) {
        for i in 0..rings {
            let ii = i as i64 + di;
            if ii < 0 || ii >= rings as i64 {
                continue;
            }
            for k in 0..n2 {
                for j in 0..n1 {
                    let mut jj = j as i64 + dj;
                    if periodic {
                        jj = jj.rem_euclid(n1 as i64);
                    } else if jj < 0 || jj >= n1 as i64 {
                        continue;
                    }
                    let kk = (k as i64 + dk).rem_euclid(n2 as i64) as usize;
                    let link = libm::hypot(rho1 * dj as f64 * dth, rho2 * dk as f64 * dph);
                    let len = cone_chord(radius(i), radius(ii as usize), link);
                    b.add_edge(idx(i, j, k), idx(ii as usize, jj as usize, kk), len);
                }
            }
        }
    }
    let graph = b.finish()?;
    let inner_h = (0..cols).map(|v| graph.local_h(v)).fold(0.0, f64::max);
    if r_min < 2.0 * inner_h {
        return Err(GraphError::TipTooClose { r_min, two_h: 2.0 * inner_h });
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_model, simons_cone};

    #[test]
    fn stencil_sizes() {
        assert_eq!(stencil(false).len(), 4);
        assert_eq!(stencil(true).len(), 9);
    }

    #[test]
    fn cone_graph_contract() {
        let m = simons_cone(0.1, 10.0).unwrap();
        let g = build_graph(&m, &GridSpec::with_resolution(32)).unwrap();
        let cone = *g.cone_grid().unwrap();
        assert_eq!(g.vertex_count(), cone.rings * cone.cols);
        assert!(g.has_sigma() && !g.totally_geodesic());
        assert_eq!(g.vertices_with(VertexFlags::NEAR_SIGMA_RING).len(), 32);
        for v in 0..g.vertex_count() {
            let r = g.dist_sigma_model(v).finite().unwrap();
            assert!((g.a(v) * r - libm::sqrt(6.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn hyperplane_is_totally_geodesic() {
        let m = make_model(ModelSpec::Hyperplane { dim: 2, half_width: 1.0 }).unwrap();
        let g = build_graph(&m, &GridSpec::with_resolution(16)).unwrap();
        assert!(g.totally_geodesic());
        assert!(!g.has_sigma());
        assert!((g.h() - libm::sqrt(2.0) * 2.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn catenoid_has_two_outer_rings() {
        let m = make_model(ModelSpec::Catenoid { neck: 1.0, t_min: -5.0, t_max: 5.0 }).unwrap();
        let g = build_graph(&m, &GridSpec::with_resolution(32)).unwrap();
        let outer = g.vertices_with(VertexFlags::OUTER_TRUNCATION);
        assert_eq!(g.induced_components(&outer).len(), 2);
        assert!(!g.has_sigma());
        assert_eq!(g.dist_sigma(0), Length::Infinite);
    }

    #[test]
    fn rejects_coarse_and_tip_too_close() {
        let m = simons_cone(0.1, 10.0).unwrap();
        assert!(matches!(build_graph(&m, &GridSpec::with_resolution(8)), Err(GraphError::TooCoarse { .. })));
    }
}
