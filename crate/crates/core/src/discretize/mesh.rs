//! Triangle meshes: validation, curvature estimation and graph ingest.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use super::{GraphBuilder, GraphError, MetricGraph, VertexData, VertexFlags};
use crate::length::Length;
use crate::linalg::{self, cross, dot, norm, sub, Vec3};

/// Validated triangle mesh in `R^3`.
#[derive(Clone, Debug)]
pub struct TriangleMesh {
    positions: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    adjacency: Vec<Vec<usize>>,
}

impl TriangleMesh {
    pub fn new(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, GraphError> {
        let n = positions.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut scale2 = 0.0f64;
        for (fi, f) in faces.iter().enumerate() {
            for &i in f {
                if i >= n {
                    return Err(GraphError::BadIndex { face: fi, index: i, count: n });
                }
            }
            for k in 0..3 {
                let e = sub(positions[f[(k + 1) % 3]], positions[f[k]]);
                scale2 = scale2.max(dot(e, e));
            }
        }
        for (fi, f) in faces.iter().enumerate() {
            let n2 = face_normal(&positions, f);
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] || norm(n2) <= f64::EPSILON * scale2 {
                return Err(GraphError::DegenerateFace { face: fi });
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for f in &faces {
            for k in 0..3 {
                let (u, v) = (f[k], f[(k + 1) % 3]);
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        for row in &mut adjacency {
            row.sort_unstable();
            row.dedup();
        }
        Ok(TriangleMesh { positions, faces, adjacency })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Undirected edges `(u, v)` with `u < v` and their incident face counts.
    fn edge_face_counts(&self) -> BTreeMap<(usize, usize), u32> {
        let mut out = BTreeMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (u, v) = (f[k], f[(k + 1) % 3]);
                *out.entry((u.min(v), u.max(v))).or_insert(0) += 1;
            }
        }
        out
    }
}

/// Twice-area normal of a face.
fn face_normal(p: &[Vec3], f: &[usize; 3]) -> Vec3 {
    cross(sub(p[f[1]], p[f[0]]), sub(p[f[2]], p[f[0]]))
}

/// Result of the local quadratic fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShapeEstimate {
    /// Norm of the fitted shape operator (0 when unreliable).
    pub value: f64,
    pub reliable: bool,
    pub neighbors_used: usize,
}

/// Fits `z = A x^2 + B xy + C y^2 + D x + E y` over the two-ring of `vertex`
/// in a frame aligned with the averaged face normal and returns the norm of
/// the shape operator of the fitted graph at the origin.
pub fn estimate_shape_operator(mesh: &TriangleMesh, vertex: usize) -> ShapeEstimate {
    let p = mesh.positions[vertex];
    let mut ring: Vec<usize> = Vec::new();
    for &u in mesh.neighbors(vertex) {
        ring.push(u);
        ring.extend_from_slice(mesh.neighbors(u));
    }
    ring.sort_unstable();
    ring.dedup();
    ring.retain(|&u| u != vertex);
    let unreliable = ShapeEstimate { value: 0.0, reliable: false, neighbors_used: ring.len() };
    if ring.len() < 5 {
        return unreliable;
    }

    let mut normal = [0.0; 3];
    let mut reference: Option<Vec3> = None;
    for f in mesh.faces.iter().filter(|f| f.contains(&vertex)) {
        let mut fnrm = face_normal(&mesh.positions, f);
        match reference {
            None => reference = Some(fnrm),
            Some(r) if dot(r, fnrm) < 0.0 => fnrm = linalg::scale(fnrm, -1.0),
            _ => {}
        }
        normal = [normal[0] + fnrm[0], normal[1] + fnrm[1], normal[2] + fnrm[2]];
    }
    let nn = norm(normal);
    if nn == 0.0 {
        return unreliable;
    }
    let n = linalg::scale(normal, 1.0 / nn);
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = {
        let c = cross(n, helper);
        linalg::scale(c, 1.0 / norm(c))
    };
    let e2 = cross(n, e1);

    let mut local: Vec<Vec3> = Vec::with_capacity(ring.len());
    let mut mean = 0.0;
    for &u in &ring {
        let d = sub(mesh.positions[u], p);
        local.push([dot(d, e1), dot(d, e2), dot(d, n)]);
        mean += norm(d);
    }
    let s = mean / ring.len() as f64;
    let mut ata = vec![0.0; 25];
    let mut atz = vec![0.0; 5];
    for q in &local {
        let (x, y, z) = (q[0] / s, q[1] / s, q[2] / s);
        let row = [x * x, x * y, y * y, x, y];
        for i in 0..5 {
            atz[i] += row[i] * z;
            for j in 0..5 {
                ata[i * 5 + j] += row[i] * row[j];
            }
        }
    }
    let Some(c) = linalg::solve(ata, atz, 5, 1e-10) else {
        return unreliable;
    };
    // Second derivatives in unscaled coordinates.
    let (fxx, fxy, fyy) = (2.0 * c[0] / s, c[1] / s, 2.0 * c[2] / s);
    let (fx, fy) = (c[3], c[4]);
    let w = 1.0 + fx * fx + fy * fy;
    let sw = libm::sqrt(w);
    // Shape operator S = G^{-1} II with G = I + grad grad^T, II = Hess / sqrt(w).
    let ginv = [[(1.0 + fy * fy) / w, -fx * fy / w], [-fx * fy / w, (1.0 + fx * fx) / w]];
    let ii = [[fxx / sw, fxy / sw], [fxy / sw, fyy / sw]];
    let mut sop = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            sop[i][j] = ginv[i][0] * ii[0][j] + ginv[i][1] * ii[1][j];
        }
    }
    let tr_s2 = sop[0][0] * sop[0][0] + 2.0 * sop[0][1] * sop[1][0] + sop[1][1] * sop[1][1];
    ShapeEstimate { value: libm::sqrt(tr_s2.max(0.0)), reliable: true, neighbors_used: ring.len() }
}

/// Ingests a mesh: chord edge lengths, fitted curvature, singular vertices
/// punctured and their neighbours flagged as the singular ring.
pub fn graph_from_mesh(mesh: &TriangleMesh, singular: &[usize], label: impl Into<String>) -> Result<MetricGraph, GraphError> {
    let n = mesh.positions.len();
    let mut is_sing = vec![false; n];
    for &s in singular {
        if s >= n {
            return Err(GraphError::SingularOutOfRange { index: s });
        }
        is_sing[s] = true;
    }
    let estimates: Vec<ShapeEstimate> = (0..n).map(|v| estimate_shape_operator(mesh, v)).collect();
    let counts = mesh.edge_face_counts();
    let mut outer = vec![false; n];
    for (&(u, v), &c) in &counts {
        if c == 1 {
            outer[u] = true;
            outer[v] = true;
        }
    }
    let mut area = vec![0.0; n];
    for f in &mesh.faces {
        let a = 0.5 * norm(face_normal(&mesh.positions, f));
        for &v in f {
            area[v] += a / 3.0;
        }
    }
    let mut new_index = vec![usize::MAX; n];
    let mut b = GraphBuilder::new(label, 3, 2, 0);
    for v in 0..n {
        if is_sing[v] {
            continue;
        }
        let offset = mesh
            .neighbors(v)
            .iter()
            .filter(|&&s| is_sing[s])
            .map(|&s| norm(sub(mesh.positions[s], mesh.positions[v])))
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |m| m.min(d))));
        let mut flags = VertexFlags::empty();
        if offset.is_some() {
            flags |= VertexFlags::NEAR_SIGMA_RING;
        }
        if outer[v] {
            flags |= VertexFlags::OUTER_TRUNCATION;
        }
        let est = estimates[v];
        new_index[v] = b.add_vertex(VertexData {
            position: &mesh.positions[v],
            chart: &[],
            a: est.value,
            a_reliable: est.reliable,
            dist_sigma: Length::Infinite,
            flags,
            area: area[v],
            sigma_offset: offset,
        });
    }
    for &(u, v) in counts.keys() {
        if is_sing[u] || is_sing[v] {
            continue;
        }
        b.add_edge(new_index[u], new_index[v], norm(sub(mesh.positions[u], mesh.positions[v])));
    }
    let g = b.finish()?;
    let model: Vec<Length> = (0..g.vertex_count()).map(|v| g.dist_sigma(v)).collect();
    let mut g = g;
    g.dist_sigma_model = model;
    Ok(g)
}

/// Graph on mesh connectivity with analytic curvature and edge lengths.
pub(crate) fn graph_from_triangles_analytic(
    label: String,
    positions: &[Vec3],
    faces: &[[usize; 3]],
    a_of: impl Fn(Vec3) -> f64,
    len_of: impl Fn(Vec3, Vec3) -> f64,
) -> Result<MetricGraph, GraphError> {
    let mesh = TriangleMesh::new(positions.to_vec(), faces.to_vec())?;
    let mut area = vec![0.0; positions.len()];
    for f in faces {
        let a = 0.5 * norm(face_normal(positions, f));
        for &v in f {
            area[v] += a / 3.0;
        }
    }
    let mut b = GraphBuilder::new(label, 3, 2, 0);
    for (v, p) in positions.iter().enumerate() {
        b.add_vertex(VertexData {
            position: p,
            chart: &[],
            a: a_of(*p),
            a_reliable: true,
            dist_sigma: Length::Infinite,
            flags: VertexFlags::empty(),
            area: area[v],
            sigma_offset: None,
        });
    }
    for &(u, v) in mesh.edge_face_counts().keys() {
        b.add_edge(u, v, len_of(positions[u], positions[v]));
    }
    b.finish()
}

/// Unit icosphere after `level` midpoint subdivisions (`10 * 4^level + 2` vertices).
pub fn icosphere(level: usize) -> TriangleMesh {
    let t = (1.0 + libm::sqrt(5.0)) / 2.0;
    let mut pos: Vec<Vec3> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    for p in &mut pos {
        *p = linalg::scale(*p, 1.0 / norm(*p));
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut mid = |a: usize, b: usize, pos: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            if let Some(&m) = cache.get(&key) {
                return m;
            }
            let (pa, pb) = (pos[a], pos[b]);
            let m = [pa[0] + pb[0], pa[1] + pb[1], pa[2] + pb[2]];
            pos.push(linalg::scale(m, 1.0 / norm(m)));
            let id = pos.len() - 1;
            cache.insert(key, id);
            id
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let ab = mid(f[0], f[1], &mut pos);
            let bc = mid(f[1], f[2], &mut pos);
            let ca = mid(f[2], f[0], &mut pos);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    TriangleMesh::new(pos, faces).expect("icosphere is a valid mesh")
}

/// Surface of revolution with conical tips at both poles and a puncture on
/// the equator. Rings are graded geometrically from `s_min` towards each tip.
/// Returns the mesh and the two tip vertices.
pub fn two_tip_spindle(around: usize, s_min: f64) -> Result<(TriangleMesh, Vec<usize>), GraphError> {
    if around < 8 {
        return Err(GraphError::TooCoarse { axis: 1, count: around });
    }
    if !(s_min > 0.0 && s_min < 0.5) {
        return Err(GraphError::TipTooClose { r_min: s_min, two_h: 0.0 });
    }
    let q = 1.0 + core::f64::consts::PI / around as f64;
    let half = libm::ceil(libm::log(1.0 / s_min) / libm::log(q)) as usize;
    let mut heights: Vec<f64> = (0..=half).map(|k| s_min * libm::pow(1.0 / s_min, k as f64 / half as f64)).collect();
    let lower: Vec<f64> = heights.iter().rev().skip(1).map(|s| 2.0 - s).collect();
    heights.extend(lower);
    let equator = half;
    let radius = |s: f64| libm::sin(core::f64::consts::FRAC_PI_2 * s) / core::f64::consts::PI;

    let mut positions: Vec<Vec3> = vec![[0.0, 0.0, 0.0]];
    let mut index = vec![vec![usize::MAX; around]; heights.len()];
    for (i, &s) in heights.iter().enumerate() {
        let rho = radius(s);
        for (j, slot) in index[i].iter_mut().enumerate() {
            if i == equator && j == 0 {
                continue;
            }
            let th = 2.0 * core::f64::consts::PI * j as f64 / around as f64;
            *slot = positions.len();
            positions.push([rho * libm::cos(th), rho * libm::sin(th), s]);
        }
    }
    let bottom = positions.len();
    positions.push([0.0, 0.0, 2.0]);

    let mut faces = Vec::new();
    let mut push = |f: [usize; 3]| {
        if f.iter().all(|&v| v != usize::MAX) {
            faces.push(f);
        }
    };
    let last = heights.len() - 1;
    for j in 0..around {
        let k = (j + 1) % around;
        push([0, index[0][k], index[0][j]]);
        push([bottom, index[last][j], index[last][k]]);
        for i in 0..last {
            push([index[i][j], index[i][k], index[i + 1][k]]);
            push([index[i][j], index[i + 1][k], index[i + 1][j]]);
        }
    }
    Ok((TriangleMesh::new(positions, faces)?, vec![0, bottom]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts_and_curvature() {
        let m = icosphere(4);
        assert_eq!(m.positions().len(), 2562);
        for v in (0..2562).step_by(37) {
            let e = estimate_shape_operator(&m, v);
            assert!(e.reliable);
            assert!((e.value / core::f64::consts::SQRT_2 - 1.0).abs() < 0.1, "{}", e.value);
        }
    }

    #[test]
    fn degenerate_face_rejected() {
        let p = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert_eq!(TriangleMesh::new(p, vec![[0, 1, 2]]).unwrap_err(), GraphError::DegenerateFace { face: 0 });
        let p = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(matches!(TriangleMesh::new(p, vec![[0, 1, 3]]), Err(GraphError::BadIndex { .. })));
    }
}
