//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails. Suite-level numbers come from `unfold verify` runs;
//! the closed-form oracles are evaluated here directly.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use serde_json::Value;

use unfold_core::discretize::{build_graph, product_grid, star_tree, GridSpec, MetricGraph, ProductGridSpec};
use unfold_core::hyperbolicity::{delta_formula, estimate_thinness, four_point_delta};
use unfold_core::metricspace::WeightField;
use unfold_core::models::simons_cone;
use unfold_core::sigma::{compute_sigma_field, LadderSpec, Refinement, SigmaField, SigmaProvenance};
use unfold_core::whitney::{build_cover, smooth_sigma, verify_smoothing, Normalization};

const A0_PLUS_ONE: f64 = 3.449489742783178;
const EPS_H: f64 = 0.15;
const DELTA_AT_ONE: &str = "1217.09377024505858502830711988";

type Outcome = Result<(bool, String), String>;

struct Runs {
    root: tempfile::TempDir,
}

impl Runs {
    /// Runs `unfold <args> --out <name>` inside the scratch directory and returns the out dir.
    fn run(&self, name: &str, args: &[&str]) -> Result<PathBuf, String> {
        let out = self.root.path().join(name);
        if out.join("report.json").exists() || out.join("boundary.json").exists() {
            return Ok(out);
        }
        let o = Command::new(env!("CARGO_BIN_EXE_unfold"))
            .args(args)
            .args(["--out", name])
            .current_dir(self.root.path())
            .output()
            .map_err(|e| e.to_string())?;
        match o.status.code() {
            Some(0) | Some(2) => Ok(out),
            c => Err(format!("unfold {args:?} exited {c:?}: {}", String::from_utf8_lossy(&o.stderr))),
        }
    }

    fn verify(&self, model: &str) -> Result<Value, String> {
        let (name, args) = model_args(model);
        let mut all = vec!["verify", "--all", "--refine"];
        all.extend(args);
        let out = self.run(&name, &all)?;
        read_json(&out.join("report.json"))
    }
}

const MODELS: [&str; 8] = ["simons", "clifford", "cone", "catenoid", "hyperplane", "sphere", "spindle", "icosphere"];

fn model_args(model: &str) -> (String, Vec<&'static str>) {
    let args: Vec<&'static str> = match model {
        "simons" => vec!["--model", "simons"],
        "simons_fine" => vec!["--model", "simons", "--res", "192"],
        "clifford" => vec!["--model", "clifford"],
        "cone" => vec!["--model", "cone", "--p", "2", "--q", "4"],
        "catenoid" => vec!["--model", "catenoid"],
        "hyperplane" => vec!["--model", "hyperplane"],
        "sphere" => vec!["--model", "sphere"],
        "spindle" => vec!["--model", "spindle", "--threshold", "10"],
        "icosphere" => vec!["--model", "icosphere"],
        other => panic!("unknown model {other}"),
    };
    (format!("verify_{model}"), args)
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn num(v: &Value, path: &[&str]) -> Result<f64, String> {
    let mut cur = v;
    for k in path {
        cur = &cur[*k];
    }
    cur.as_f64().ok_or_else(|| format!("missing number at {}", path.join(".")))
}

fn trivial(v: &Value) -> bool {
    v["trivial_gauge"].as_bool().unwrap_or(false)
}

fn simons(res: usize) -> Result<MetricGraph, String> {
    build_graph(&simons_cone(0.1, 10.0).map_err(|e| e.to_string())?, &GridSpec::with_resolution(res)).map_err(|e| e.to_string())
}

/// Worst `|b r / (a0 + 1) - 1|` over unflagged vertices with `r` in `[0.3, 5]`.
fn closed_form_error(g: &MetricGraph, f: &SigmaField) -> f64 {
    (0..g.vertex_count())
        .filter(|&v| g.flags(v).is_empty())
        .filter_map(|v| {
            let r = g.dist_sigma_model(v).to_f64();
            (0.3..=5.0).contains(&r).then(|| (f.b(v) * r / A0_PLUS_ONE - 1.0).abs())
        })
        .fold(0.0, f64::max)
}

fn c1_cone_oracle() -> Outcome {
    let coarse = simons(108)?;
    let fc = compute_sigma_field(&coarse, 1.0, &LadderSpec::default()).map_err(|e| e.to_string())?;
    let g = simons(216)?;
    let start = Instant::now();
    let f = compute_sigma_field(&g, 1.0, &LadderSpec::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (e_coarse, e_fine) = (closed_form_error(&coarse, &fc), closed_form_error(&g, &f));
    let pass = e_fine <= 0.05 && e_fine <= e_coarse && secs <= 60.0 && g.vertex_count() >= 45_000;
    Ok((pass, format!("{} vertices, max rel error {:.3}% (res 108: {:.3}%), sweep {secs:.1}s", g.vertex_count(), 100.0 * e_fine, 100.0 * e_coarse)))
}

fn c2_interpolation(runs: &Runs) -> Outcome {
    let r = runs.verify("simons")?;
    let rows = r["interpolation"]["rows"].as_array().ok_or("no interpolation rows")?;
    let mut worst: f64 = 0.0;
    for row in rows {
        worst = worst.max(num(row, &["rel_error_b_minus_a"])?.abs()).max(num(row, &["rel_error_inverse"])?.abs());
    }
    let alphas: Vec<f64> = rows.iter().filter_map(|r| r["alpha"].as_f64()).collect();
    let pass = worst <= 0.10 && alphas == [4.0, 2.0, 1.0, 0.5, 0.25, 0.125];
    Ok((pass, format!("{} alphas, worst closed-form error {:.2}%", alphas.len(), 100.0 * worst)))
}

fn c3_lipschitz(runs: &Runs) -> Outcome {
    let mut worst = String::new();
    let mut worst_ratio: f64 = 0.0;
    let mut pass = true;
    for m in MODELS {
        let r = runs.verify(m)?;
        let (l, alpha) = (num(&r["axiom"], &["s3", "l_hat"])?, num(&r["run_config"], &["alpha"])?);
        let ratio = l * alpha / 1.15;
        pass &= ratio <= 1.0;
        if ratio >= worst_ratio {
            worst_ratio = ratio;
            worst = format!("{m} L_hat = {l:.4}");
        }
        if m == "hyperplane" {
            pass &= r["axiom"]["s1"]["pass"] == true && r["axiom"]["s1"]["b_identically_zero"] == true;
        }
    }
    Ok((pass, format!("{} models, worst {worst} (bound 1.15 / alpha), hyperplane S1 exact", MODELS.len())))
}

fn c4_scaling(runs: &Runs) -> Outcome {
    let mut checked = 0;
    let mut mismatches = 0;
    for m in MODELS {
        let r = runs.verify(m)?;
        for s in r["axiom"]["s4"]["scaling"].as_array().ok_or("no scaling checks")? {
            checked += 1;
            if s["bitwise_equal"] != true {
                mismatches += 1;
            }
        }
    }
    Ok((mismatches == 0 && checked == 2 * MODELS.len(), format!("{checked} transports (lambda 2 and 1/3), {mismatches} not bitwise equal")))
}

fn c5_sigma_metric(runs: &Runs) -> Outcome {
    let r = runs.verify("simons")?;
    let o = &r["inequalities"]["cone_ray_oracle"];
    let (n, db, k) = (num(o, &["pairs"])?, num(o, &["max_rel_error_d_b"])?, num(o, &["max_rel_error_k"])?);
    Ok((n >= 50.0 && db <= 0.05 && k <= 0.05, format!("{n} same-ray pairs, d_b error {:.2}%, k error {:.2}%", 100.0 * db, 100.0 * k)))
}

fn c6_inequalities(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in MODELS {
        let r = runs.verify(m)?;
        let s = &r["inequalities"];
        if trivial(s) {
            parts.push(format!("{m} trivial"));
            continue;
        }
        let (pairs, v) = (num(s, &["pairs"])?, num(s, &["violations"])?);
        let worst = s["clauses"].as_array().ok_or("no clauses")?.iter().filter(|c| c["checked"].as_u64().unwrap_or(0) > 0).filter_map(|c| c["min_margin"].as_f64()).fold(f64::INFINITY, f64::min);
        pass &= pairs >= 200.0 && v == 0.0 && r["tolerances"]["certified"] == true;
        parts.push(format!("{m} {v}/{pairs} (margin {worst:.3})"));
    }
    Ok((pass, parts.join(", ")))
}

fn c7_uniformity(runs: &Runs) -> Outcome {
    let base = runs.verify("simons")?;
    let fine = runs.verify("simons_fine")?;
    let u = &base["uniformity"];
    let a = num(u, &["a_hat"])?;
    let reseed = num(u, &["reseeded", "rel_change"])?;
    let refine = num(&fine["uniformity"], &["a_hat"])? / a - 1.0;
    let p = &u["pipelines"];
    let (built, attempted, max_c) = (num(p, &["built"])?, num(p, &["attempted"])?, num(p, &["max_c_hat"])?);
    let pass = num(u, &["samples"])? >= 200.0
        && u["all_finite"] == true
        && reseed.abs() <= 0.10
        && refine.abs() <= 0.10
        && attempted >= 50.0
        && built == attempted
        && p["pairs"] == "antipodal"
        && max_c <= 10.0 * a;
    Ok((pass, format!("a_hat {a:.3}, reseed {:+.1}%, h/2 {:+.1}%, pipelines {built}/{attempted} max c_hat {max_c:.2} <= {:.1}", 100.0 * reseed, 100.0 * refine, 10.0 * a)))
}

fn flat_delta(r: f64) -> Result<f64, String> {
    let side = 40;
    let g = product_grid(ProductGridSpec { nx: side, ny: side, spacing: r / (side - 1) as f64, a: 1.0, periodic_y: false }).map_err(|e| e.to_string())?;
    Ok(four_point_delta(&g, &WeightField::intrinsic(&g), 20_000, 7).map_err(|e| e.to_string())?.delta_4pt)
}

fn c8_hyperbolicity(runs: &Runs) -> Outcome {
    let r = runs.verify("simons")?;
    let cone: Vec<f64> = r["hyperbolicity"]["ranges"].as_array().ok_or("no range curve")?.iter().filter_map(|x| x["delta_4pt"].as_f64()).collect();
    let mean = cone.iter().sum::<f64>() / cone.len() as f64;
    let spread = cone.iter().map(|d| (d / mean - 1.0).abs()).fold(0.0, f64::max);
    let flat = [flat_delta(4.0)?, flat_delta(8.0)?, flat_delta(16.0)?];
    let growth = (flat[1] / flat[0] - 1.0).min(flat[2] / flat[1] - 1.0);
    let tree = star_tree(3, 12, 1.0).map_err(|e| e.to_string())?;
    let tree_delta = four_point_delta(&tree, &WeightField::intrinsic(&tree), 20_000, 7).map_err(|e| e.to_string())?.delta_4pt;
    let n = 64;
    let cyl = product_grid(ProductGridSpec { nx: n, ny: n, spacing: 2.0 * std::f64::consts::PI / n as f64, a: 1.0, periodic_y: true }).map_err(|e| e.to_string())?;
    let cyl_thin = estimate_thinness(&cyl, &WeightField::intrinsic(&cyl), 200, 7).map_err(|e| e.to_string())?.delta_thin;
    let pass = cone.len() == 3 && spread <= 0.15 && growth >= 0.5 && tree_delta == 0.0 && cyl_thin <= std::f64::consts::PI + EPS_H;
    Ok((
        pass,
        format!(
            "cone delta_4pt {:.2}/{:.2}/{:.2} (spread {:.1}%), flat {:.2}/{:.2}/{:.2} (min growth {:.0}%), tree {tree_delta}, cylinder delta_thin {cyl_thin:.3}",
            cone[0],
            cone[1],
            cone[2],
            100.0 * spread,
            flat[0],
            flat[1],
            flat[2],
            100.0 * growth
        ),
    ))
}

fn c9_explicit_constant(runs: &Runs) -> Outcome {
    let got = delta_formula(1.0).map_err(|e| e.to_string())?;
    let reference: f64 = DELTA_AT_ONE.parse().unwrap();
    let digits = -((got / reference - 1.0).abs().max(1e-17)).log10();
    let mut pass = digits >= 12.0;
    let mut parts = vec![format!("delta(1) = {got:.12} ({digits:.1} digits)")];
    for m in MODELS {
        let r = runs.verify(m)?;
        let h = &r["hyperbolicity"];
        if trivial(h) {
            continue;
        }
        let margin = num(h, &["margin"])?;
        pass &= margin >= 0.0;
        parts.push(format!("{m} {:.2} <= {:.3e}", num(h, &["delta_thin"])?, num(h, &["paper_bound"])?));
    }
    Ok((pass, parts.join(", ")))
}

/// Narrow Simons sector carrying `b = (a0 + 1) / r`, fine enough that the
/// cover radius spans several edges.
fn sector_c3(res: usize) -> Result<(u32, f64, f64, f64), String> {
    let g = build_graph(&simons_cone(1.0, 1.004).map_err(|e| e.to_string())?, &GridSpec { resolution: res, slice_dim: 2, angular_span: Some(3e-5) }).map_err(|e| e.to_string())?;
    let b = (0..g.vertex_count()).map(|v| A0_PLUS_ONE / g.dist_sigma_model(v).to_f64()).collect();
    let prov = SigmaProvenance { graph: g.label().into(), alpha: 1.0, refinement: Refinement::None, ladder: vec![1.0], bisected_vertices: 0 };
    let f = SigmaField::from_parts(prov, b).map_err(|e| e.to_string())?;
    let cover = build_cover(&g, &f, 1e-4).map_err(|e| e.to_string())?;
    if !cover.is_valid() {
        return Err("sector cover invariants failed".into());
    }
    let s = smooth_sigma(&g, &f, Some(&cover), Normalization::PartitionOfUnity).map_err(|e| e.to_string())?;
    let rep = verify_smoothing(&f, &s, &g).map_err(|e| e.to_string())?;
    Ok((cover.multiplicity, rep.c1, rep.c2, rep.c3))
}

fn sandwich(c1: f64, c2: f64, mult: f64) -> bool {
    c1 > 0.0 && c1 <= 1.0 && 1.0 <= c2 && c2 <= mult.max(1.0) * 1.2
}

fn c10_whitney(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in MODELS {
        let w = runs.verify(m)?["whitney"].clone();
        if trivial(&w) {
            pass &= w["pass"] == true;
            continue;
        }
        let checks = w["checks"].as_object().ok_or("no cover checks")?.values().all(|v| v == true);
        let (c1, c2, c3, mult) = (num(&w, &["c1"])?, num(&w, &["c2"])?, num(&w, &["c3"])?, num(&w, &["multiplicity"])?);
        let ok = checks && w["bands_uniform"] == true && sandwich(c1, c2, mult) && c3.is_finite();
        pass &= ok;
        if !ok {
            parts.push(format!("{m} failed"));
        }
    }
    let (c3, c3_fine) = (num(&runs.verify("simons")?["whitney"], &["c3"])?, num(&runs.verify("simons_fine")?["whitney"], &["c3"])?);
    let (sm, s1, s2, s3) = sector_c3(16)?;
    let (_, _, _, s3_fine) = sector_c3(31)?;
    pass &= (c3_fine / c3 - 1.0).abs() <= 0.10 && sm > 1 && sandwich(s1, s2, sm as f64) && (s3_fine / s3 - 1.0).abs() <= 0.10;
    parts.push(format!("simons c3 {c3:.4} -> {c3_fine:.4} under h/2"));
    parts.push(format!("sector cover multiplicity {sm}, c1 {s1:.5}, c2 {s2:.5}, c3 {s3:.4} -> {s3_fine:.4}"));
    Ok((pass, parts.join(", ")))
}

fn boundary_classes(runs: &Runs, name: &str, args: &[&str]) -> Result<(f64, bool), String> {
    let mut all = vec!["boundary"];
    all.extend_from_slice(args);
    let out = runs.run(name, &all)?;
    let b = read_json(&out.join("boundary.json"))?;
    Ok((num(&b, &["total_classes"])?, b["pass"] == true))
}

fn c11_boundary(runs: &Runs) -> Outcome {
    let (simons, sp) = boundary_classes(runs, "b_simons", &["--model", "simons"])?;
    let mut cat = Vec::new();
    for t in ["5", "7", "9"] {
        cat.push(boundary_classes(runs, &format!("b_catenoid_{t}"), &["--model", "catenoid", "--tmax", t])?.0);
    }
    let (spindle, spp) = boundary_classes(runs, "b_spindle", &["--model", "spindle", "--threshold", "10"])?;
    let (ico, _) = boundary_classes(runs, "b_icosphere", &["--model", "icosphere"])?;
    let pass = simons == 2.0 && sp && cat.iter().all(|&c| c == 1.0) && spindle == 3.0 && spp && ico == 0.0;
    Ok((pass, format!("simons {simons}, catenoid {:?} at t_max 5/7/9, spindle {spindle}, icosphere {ico}", cat)))
}

fn c12_determinism(runs: &Runs) -> Outcome {
    let mut dirs = Vec::new();
    for name in ["det_a", "det_b"] {
        let d = runs.root.path().join(name);
        fs::create_dir_all(&d).map_err(|e| e.to_string())?;
        let o = Command::new(env!("CARGO_BIN_EXE_unfold"))
            .args(["verify", "--all", "--model", "simons", "--out", "out"])
            .current_dir(&d)
            .output()
            .map_err(|e| e.to_string())?;
        if o.status.code() != Some(0) {
            return Err(String::from_utf8_lossy(&o.stderr).into_owned());
        }
        dirs.push(d.join("out"));
    }
    let mut names: Vec<_> = fs::read_dir(&dirs[0]).map_err(|e| e.to_string())?.map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let differing: Vec<String> = names
        .iter()
        .filter(|n| fs::read(dirs[0].join(n)).ok() != fs::read(dirs[1].join(n)).ok())
        .map(|n| n.to_string_lossy().into_owned())
        .collect();
    Ok((differing.is_empty() && names.len() > 10, format!("{} files compared, differing: {differing:?}", names.len())))
}

fn main() {
    let runs = Runs { root: tempfile::tempdir().expect("scratch dir") };
    let criteria: [(&str, &dyn Fn(&Runs) -> Outcome); 12] = [
        ("cone closed-form oracle", &|_| c1_cone_oracle()),
        ("interpolation limits", &c2_interpolation),
        ("Lipschitz axiom", &c3_lipschitz),
        ("exact scaling", &c4_scaling),
        ("sigma-metric oracle", &c5_sigma_metric),
        ("inequality suite", &c6_inequalities),
        ("sigma-uniformity", &c7_uniformity),
        ("hyperbolicity separation", &c8_hyperbolicity),
        ("explicit constant", &c9_explicit_constant),
        ("Whitney suite", &c10_whitney),
        ("boundary identification", &c11_boundary),
        ("determinism", &c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check(&runs) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} criterion {:>2} {name}: {detail} [{:.1}s]", if pass { "PASS" } else { "FAIL" }, i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
