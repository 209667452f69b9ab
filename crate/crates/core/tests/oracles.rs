use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unfold_core::discretize::{build_graph, product_grid, GridSpec, MetricGraph, ProductGridSpec};
use unfold_core::hyperbolicity::delta_formula;
use unfold_core::metricspace::{shortest_path, WeightField};
use unfold_core::models::{make_model, simons_cone, ModelSpec, ModelSurface};
use unfold_core::sigma::{compute_sigma_field, LadderSpec, Refinement};

/// `|A|` from finite differences of the embedding.
fn fd_shape_norm(m: &ModelSurface, x: &[f64]) -> (f64, DMatrix<f64>) {
    let n = x.len();
    let h = 1e-4;
    let pos = |y: &[f64]| DVector::from_vec(m.position(y).unwrap());
    let shifted = |i: usize, di: f64, j: usize, dj: f64| {
        let mut y = x.to_vec();
        y[i] += di;
        y[j] += dj;
        pos(&y)
    };
    let d = n + 1;
    let mut jac = DMatrix::zeros(d, n);
    for i in 0..n {
        jac.set_column(i, &((shifted(i, h, i, 0.0) - shifted(i, -h, i, 0.0)) / (2.0 * h)));
    }
    let g = jac.transpose() * &jac;
    let svd = jac.clone().svd(true, false);
    let u = svd.u.unwrap();
    let mut normal = DVector::zeros(d);
    // The column of the full left basis orthogonal to the tangent space.
    let full = DMatrix::from_fn(d, d, |r, c| if c < n { u[(r, c)] } else if r == c { 1.0 } else { 0.0 });
    let qr = full.qr().q();
    normal.copy_from(&qr.column(n));
    let mut second = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let dij = if i == j {
                (shifted(i, h, i, 0.0) - 2.0 * pos(x) + shifted(i, -h, i, 0.0)) / (h * h)
            } else {
                (shifted(i, h, j, h) - shifted(i, h, j, -h) - shifted(i, -h, j, h) + shifted(i, -h, j, -h)) / (4.0 * h * h)
            };
            second[(i, j)] = dij.dot(&normal);
        }
    }
    let ginv = g.clone().try_inverse().unwrap();
    let s = &ginv * &second;
    ((&s * &s).trace().sqrt(), g)
}

#[test]
fn shape_operator_matches_finite_differences() {
    let cases: Vec<(ModelSurface, Vec<f64>)> = vec![
        (make_model(ModelSpec::Sphere { radius: 2.0 }).unwrap(), vec![0.9, 0.4]),
        (make_model(ModelSpec::Catenoid { neck: 1.5, t_min: -3.0, t_max: 3.0 }).unwrap(), vec![0.7, 1.1]),
        (make_model(ModelSpec::CliffordCone { r_min: 0.1, r_max: 5.0 }).unwrap(), vec![1.3, 0.5, 2.0]),
        (make_model(ModelSpec::ConeOverSphereProducts { p: 1, q: 2, r_min: 0.1, r_max: 5.0 }).unwrap(), vec![0.8, 0.3, 1.2, 0.9]),
        (simons_cone(0.1, 5.0).unwrap(), vec![2.1, 1.0, 1.2, 0.4, 0.9, 1.4, 2.5]),
        (make_model(ModelSpec::Hyperplane { dim: 3, half_width: 1.0 }).unwrap(), vec![0.1, -0.2, 0.3]),
    ];
    for (m, x) in cases {
        let (fd, g) = fd_shape_norm(&m, &x);
        let exact = m.second_fundamental_norm(&x).unwrap();
        assert!((fd - exact).abs() <= 1e-5 * exact.max(1.0), "{:?}: fd {fd} vs {exact}", m.kind());
        let metric = m.metric(&x).unwrap();
        for (i, v) in metric.iter().enumerate() {
            assert!((g[(i / x.len(), i % x.len())] - v).abs() < 1e-6, "{:?} metric entry {i}", m.kind());
        }
    }
}

/// `b(x) = sup_y min(a(y), alpha / d(x, y))` with `y` ranging over edge points
/// and `a` linear along edges; all-pairs distances by Floyd-Warshall.
fn brute_b(g: &MetricGraph, alpha: f64, samples: usize) -> Vec<f64> {
    let n = g.vertex_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let edges: Vec<(usize, usize, f64)> = g.edges().collect();
    for &(u, v, l) in &edges {
        d[u][v] = d[u][v].min(l);
        d[v][u] = d[v][u].min(l);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    (0..n)
        .map(|x| {
            let mut best = g.a(x);
            for &(u, v, l) in &edges {
                for k in 0..=samples {
                    let s = k as f64 / samples as f64;
                    let ay = g.a(u) + (g.a(v) - g.a(u)) * s;
                    let dy = (d[x][u] + s * l).min(d[x][v] + (1.0 - s) * l);
                    let c = if dy > 0.0 { ay.min(alpha / dy) } else { ay };
                    best = best.max(c);
                }
            }
            best
        })
        .collect()
}

fn random_grid(seed: u64, side: usize, spacing: f64) -> MetricGraph {
    let g = product_grid(ProductGridSpec { nx: side, ny: side, spacing, a: 1.0, periodic_y: false }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..g.vertex_count()).map(|_| rng.gen_range(0.2..6.0)).collect();
    g.with_a_values(a).unwrap()
}

#[test]
fn sweep_matches_brute_force_sup() {
    for seed in 0..4 {
        let g = random_grid(seed, 7, 0.3);
        let oracle = brute_b(&g, 1.0, 4000);
        let spec = |refinement| LadderSpec { refinement, ..LadderSpec::default() };
        let bis = compute_sigma_field(&g, 1.0, &spec(Refinement::Bisection { rel_tol: 1e-7 })).unwrap();
        let interp = compute_sigma_field(&g, 1.0, &spec(Refinement::Interpolate)).unwrap();
        for v in 0..g.vertex_count() {
            let o = oracle[v];
            assert!((bis.b(v) - o).abs() <= 1e-3 * o, "seed {seed} v {v}: bisection {} vs {o}", bis.b(v));
            // Interpolation stays inside the bracketing ladder step.
            let q = LadderSpec::default().ratio;
            assert!(interp.b(v) <= o * q * (1.0 + 1e-9) && interp.b(v) >= o / q * (1.0 - 1e-9), "seed {seed} v {v}: interpolate {} vs {o}", interp.b(v));
        }
    }
}

#[test]
fn interpolation_agrees_with_bisection_on_cone() {
    let g = build_graph(&simons_cone(0.1, 10.0).unwrap(), &GridSpec::with_resolution(32)).unwrap();
    let spec = |refinement| LadderSpec { refinement, ..LadderSpec::default() };
    let bis = compute_sigma_field(&g, 1.0, &spec(Refinement::Bisection { rel_tol: 1e-6 })).unwrap();
    let interp = compute_sigma_field(&g, 1.0, &spec(Refinement::Interpolate)).unwrap();
    let worst = (0..g.vertex_count()).map(|v| (bis.b(v) / interp.b(v) - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst < 5e-3, "worst relative gap {worst}");
}

#[test]
fn cone_sigma_follows_closed_form() {
    // b = (a0 + alpha) / r with a0 = sqrt(6) on the Simons cone.
    let g = build_graph(&simons_cone(0.1, 10.0).unwrap(), &GridSpec::with_resolution(64)).unwrap();
    let f = compute_sigma_field(&g, 1.0, &LadderSpec::default()).unwrap();
    let c = 6f64.sqrt() + 1.0;
    for v in 0..g.vertex_count() {
        let r = g.dist_sigma_model(v).to_f64();
        if (0.5..=5.0).contains(&r) {
            let rel = (f.b(v) * r / c - 1.0).abs();
            assert!(rel < 0.01, "r {r}: b r = {}", f.b(v) * r);
        }
    }
    // Same-ray d_b between r1 and r2 is (a0 + alpha) log(r2 / r1).
    let cg = *g.cone_grid().unwrap();
    let (i1, i2) = ((0..cg.rings).find(|&i| cg.ring_radius(i) >= 0.5).unwrap(), (0..cg.rings).find(|&i| cg.ring_radius(i) >= 1.5).unwrap());
    let (r1, r2) = (cg.ring_radius(i1), cg.ring_radius(i2));
    let w = WeightField::sigma(&g, &f).unwrap();
    let path = shortest_path(&g, &w, cg.vertex(i1, 0), cg.vertex(i2, 0)).unwrap();
    let expected = c * (r2 / r1).ln();
    assert!((path.weighted_length / expected - 1.0).abs() < 0.02, "{} vs {expected}", path.weighted_length);
}

#[test]
fn delta_formula_reference_values() {
    // Reference values evaluated independently at 60 significant digits.
    let cases = [
        (1.0, 1217.09377024505858502830711988),
        (1.1, 2493.13217057831706574619352882),
        (1.5, 27452.7449923587119706235642635),
        (2.0, 266504.449459259062020578134976),
        (3.5, 23110312.355653629283101655892),
    ];
    for (a, want) in cases {
        let got = delta_formula(a).unwrap();
        assert!((got / want - 1.0).abs() < 1e-12, "a = {a}: {got} vs {want}");
    }
    assert!(delta_formula(0.5).is_err());
}
