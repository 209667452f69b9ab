use unfold_core::discretize::{build_graph, product_grid, GridSpec, MetricGraph, ProductGridSpec};
use unfold_core::models::simons_cone;
use unfold_core::sigma::{Refinement, SigmaField, SigmaProvenance};
use unfold_core::whitney::{build_cover, smooth_sigma, verify_smoothing, Normalization, SigmaCover};

const A0_PLUS_ONE: f64 = 3.449489742783178;

fn field(g: &MetricGraph, b: Vec<f64>) -> SigmaField {
    let prov = SigmaProvenance { graph: g.label().into(), alpha: 1.0, refinement: Refinement::None, ladder: vec![1.0], bisected_vertices: 0 };
    SigmaField::from_parts(prov, b).unwrap()
}

/// Narrow Simons-cone sector carrying the closed-form field `b = (a0 + 1) / r`.
/// The sector is thinner than one cover radius, so the cover is a radial chain.
fn sector(res: usize) -> (MetricGraph, SigmaField) {
    let span = 3e-5;
    let g = build_graph(&simons_cone(1.0, 1.004).unwrap(), &GridSpec { resolution: res, slice_dim: 2, angular_span: Some(span) }).unwrap();
    let b = (0..g.vertex_count()).map(|v| A0_PLUS_ONE / g.dist_sigma_model(v).to_f64()).collect();
    let f = field(&g, b);
    (g, f)
}

fn center_radii(g: &MetricGraph, cover: &SigmaCover) -> Vec<f64> {
    let mut r: Vec<f64> = cover.centers.iter().map(|&p| g.dist_sigma_model(p).to_f64()).collect();
    r.sort_by(f64::total_cmp);
    r.dedup();
    r
}

#[test]
fn cone_centers_are_geometrically_spaced() {
    let xi = 1e-4;
    let (g, f) = sector(16);
    let cover = build_cover(&g, &f, xi).unwrap();
    assert!(cover.is_valid());
    let radii = center_radii(&g, &cover);
    assert!(radii.len() > 100);
    let (lo, hi) = (xi / (2.0 * A0_PLUS_ONE), 4.0 * xi / A0_PLUS_ONE);
    for w in radii.windows(2) {
        let step = w[1] / w[0] - 1.0;
        assert!(step >= lo && step <= hi, "step {step} outside [{lo}, {hi}]");
    }
}

#[test]
fn cone_smoothing_sandwich_is_stable_under_refinement() {
    let xi = 1e-4;
    let mut c3 = Vec::new();
    for res in [16, 31] {
        let (g, f) = sector(res);
        let cover = build_cover(&g, &f, xi).unwrap();
        assert!(cover.multiplicity > 1, "cover must be non-trivial");
        let s = smooth_sigma(&g, &f, Some(&cover), Normalization::PartitionOfUnity).unwrap();
        let rep = verify_smoothing(&f, &s, &g).unwrap();
        assert!(rep.pass && !rep.trivial);
        assert!(rep.c1 > 0.0 && rep.c1 <= 1.0 && rep.c2 >= 1.0);
        assert!(rep.c2 <= cover.multiplicity as f64 * 1.2);
        c3.push(rep.c3);
    }
    // delta = r / (a0 + 1) has slope 1 / (a0 + 1) along rays; smoothing can only steepen it by a bounded factor.
    for c in &c3 {
        assert!(c.is_finite() && c * A0_PLUS_ONE >= 0.99 && c * A0_PLUS_ONE <= 1.5, "c3 {c}");
    }
    assert!((c3[1] / c3[0] - 1.0).abs() < 0.05, "c3 {c3:?}");
}

#[test]
fn constant_strip_is_a_uniform_packing() {
    let spacing = 0.01;
    let g = product_grid(ProductGridSpec { nx: 30, ny: 30, spacing, a: 1.0, periodic_y: false }).unwrap();
    let f = field(&g, vec![2.0; g.vertex_count()]);
    // theta = 2.5 spacing
    let xi = 2.5 * spacing / 0.5;
    let cover = build_cover(&g, &f, xi).unwrap();
    assert!(cover.is_valid());
    assert!(cover.multiplicity >= 1 && cover.multiplicity <= 9, "multiplicity {}", cover.multiplicity);
    let raw = smooth_sigma(&g, &f, Some(&cover), Normalization::RawSum).unwrap();
    // Bumps reach out to 2 theta, so the overlap count is bounded by the 10 theta multiplicity, not the theta one.
    let c = cover.aleph_10.iter().cloned().max().unwrap() as f64;
    for d in &raw.delta_star {
        let d = d.to_f64();
        assert!(d >= 0.5 * (1.0 - 1e-12) && d <= c * 0.5 * (1.0 + 1e-12), "raw delta* {d}");
    }
    let pou = smooth_sigma(&g, &f, Some(&cover), Normalization::PartitionOfUnity).unwrap();
    let rep = verify_smoothing(&f, &pou, &g).unwrap();
    assert!((rep.c1 - 1.0).abs() < 1e-12 && (rep.c2 - 1.0).abs() < 1e-12);
}

#[test]
fn smoothing_composes() {
    let (g, f) = sector(16);
    let cover = build_cover(&g, &f, 1e-4).unwrap();
    let s = smooth_sigma(&g, &f, Some(&cover), Normalization::PartitionOfUnity).unwrap();
    let rep = verify_smoothing(&f, &s, &g).unwrap();
    let f2 = field(&g, s.b_star.clone());
    let cover2 = build_cover(&g, &f2, 1e-4).unwrap();
    let s2 = smooth_sigma(&g, &f2, Some(&cover2), Normalization::PartitionOfUnity).unwrap();
    let rep2 = verify_smoothing(&f2, &s2, &g).unwrap();
    for v in 0..g.vertex_count() {
        let ratio = s2.delta_star[v].to_f64() / f.delta(v).to_f64();
        assert!(ratio >= rep.c1 * rep2.c1 * (1.0 - 1e-12) && ratio <= rep.c2 * rep2.c2 * (1.0 + 1e-12));
    }
}
