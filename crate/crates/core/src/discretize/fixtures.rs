//! Small synthetic graphs used as controls.

use alloc::format;
use core::f64::consts::PI;

use super::{GraphBuilder, GraphError, MetricGraph, VertexData, VertexFlags};
use crate::length::Length;

/// Flat `nx x ny` grid with constant curvature `a`. With `periodic_y` the
/// second axis closes into a circle of circumference `ny * spacing`, giving a
/// product cylinder embedded in `R^3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductGridSpec {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub a: f64,
    pub periodic_y: bool,
}

pub fn product_grid(spec: ProductGridSpec) -> Result<MetricGraph, GraphError> {
    let ProductGridSpec { nx, ny, spacing, a, periodic_y } = spec;
    let label = format!("{}({nx}x{ny}, h={spacing})", if periodic_y { "cylinder" } else { "grid" });
    let mut b = GraphBuilder::new(label, 3, 2, 2);
    let circ = ny as f64 * spacing;
    let radius = circ / (2.0 * PI);
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (i as f64 * spacing, j as f64 * spacing);
            let pos = if periodic_y {
                let th = y / radius;
                [radius * libm::cos(th), radius * libm::sin(th), x]
            } else {
                [x, y, 0.0]
            };
            let edge = i == 0 || i == nx - 1 || (!periodic_y && (j == 0 || j == ny - 1));
            b.add_vertex(VertexData {
                position: &pos,
                chart: &[x, y],
                a,
                a_reliable: true,
                dist_sigma: Length::Infinite,
                flags: if edge { VertexFlags::OUTER_TRUNCATION } else { VertexFlags::empty() },
                area: spacing * spacing,
                sigma_offset: None,
            });
        }
    }
    let diag = spacing * core::f64::consts::SQRT_2;
    for j in 0..ny {
        for i in 0..nx {
            let u = j * nx + i;
            let up = if j + 1 < ny {
                Some(j + 1)
            } else if periodic_y {
                Some(0)
            } else {
                None
            };
            if i + 1 < nx {
                b.add_edge(u, u + 1, spacing);
            }
            if let Some(jn) = up {
                b.add_edge(u, jn * nx + i, spacing);
                if i + 1 < nx {
                    b.add_edge(u, jn * nx + i + 1, diag);
                }
                if i > 0 {
                    b.add_edge(u, jn * nx + i - 1, diag);
                }
            }
        }
    }
    b.finish()
}

/// Path of `n` vertices with unit edges and constant curvature `a`.
pub fn path_graph(n: usize, a: f64) -> Result<MetricGraph, GraphError> {
    let mut b = GraphBuilder::new(format!("path({n})"), 1, 1, 1);
    for i in 0..n {
        let x = i as f64;
        b.add_vertex(VertexData {
            position: &[x],
            chart: &[x],
            a,
            a_reliable: true,
            dist_sigma: Length::Infinite,
            flags: if i == 0 || i + 1 == n { VertexFlags::OUTER_TRUNCATION } else { VertexFlags::empty() },
            area: 1.0,
            sigma_offset: None,
        });
    }
    for i in 1..n {
        b.add_edge(i - 1, i, 1.0);
    }
    b.finish()
}

/// Star of `arms` unit-edge paths of `arm_len` edges around a centre vertex 0.
pub fn star_tree(arms: usize, arm_len: usize, a: f64) -> Result<MetricGraph, GraphError> {
    let mut b = GraphBuilder::new(format!("star({arms}x{arm_len})"), 2, 1, 0);
    let add = |b: &mut GraphBuilder, pos: [f64; 2], leaf: bool| {
        b.add_vertex(VertexData {
            position: &pos,
            chart: &[],
            a,
            a_reliable: true,
            dist_sigma: Length::Infinite,
            flags: if leaf { VertexFlags::OUTER_TRUNCATION } else { VertexFlags::empty() },
            area: 1.0,
            sigma_offset: None,
        })
    };
    let centre = add(&mut b, [0.0, 0.0], false);
    for k in 0..arms {
        let th = 2.0 * PI * k as f64 / arms as f64;
        let mut prev = centre;
        for s in 1..=arm_len {
            let r = s as f64;
            let v = add(&mut b, [r * libm::cos(th), r * libm::sin(th)], s == arm_len);
            b.add_edge(prev, v, 1.0);
            prev = v;
        }
    }
    b.finish()
}
