//! Verification suites run against one graph and one field.
//!
//! Each suite writes its own `<section>.json` plus CSV/SVG plot data into the
//! output directory and appends any failed check to the session's violations.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use unfold_core::boundary::{trace_rays, verify_boundary_map, BoundaryOptions, RayFamily, TargetSpec};
use unfold_core::discretize::{build_graph, GridSpec};
use unfold_core::hyperbolicity::{analyze, estimate_thinness, four_point_delta, HyperbolicityOptions};
use unfold_core::metricspace::{
    bounded_geometry, check_inequality_suite, multi_source_distances, sample_pairs, sample_pool, shortest_path, SuiteOptions, WeightField,
};
use unfold_core::models::{make_model, ModelSpec};
use unfold_core::sigma::{compute_sigma_field, harnack_check, interpolation_sweep, verify_axioms, AxiomOptions, Band, SigmaError, SigmaField};
use unfold_core::tolerance::{RefinementEvidence, Tolerance};
use unfold_core::uniformity::{build_pipeline, estimate_uniformity_constant, PipelineParams, UniformityEstimate};
use unfold_core::whitney::{build_cover, default_xi, smooth_sigma, verify_smoothing, Normalization};
use unfold_core::{MetricGraph, VertexFlags};

use crate::config::{build_surface, RunConfig, Surface, SurfaceConfig};
use crate::error::CliError;
use crate::svg::{Mark, Plot, Series};
use crate::{graph_io, json_bytes, sigma_io, write_file};

fn trivial(reason: &str) -> Value {
    json!({ "trivial_gauge": true, "reason": reason })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

pub struct Session {
    pub cfg: RunConfig,
    pub surface: Surface,
    field: Option<SigmaField>,
    uniform: Option<UniformityEstimate>,
    delta_thin: Option<f64>,
    tolerance: Option<Tolerance>,
    pub violations: Vec<String>,
    pub summary: Vec<String>,
}

impl Session {
    pub fn open(cfg: RunConfig, sigma: Option<&Path>) -> Result<Self, CliError> {
        let surface = build_surface(&cfg, 1)?;
        let field = match sigma {
            Some(p) => {
                let f = sigma_io::read_sigma(p)?;
                let n = surface.graph.vertex_count();
                if f.len() != n {
                    return Err(SigmaError::WrongLength { expected: n, got: f.len() }.into());
                }
                Some(f)
            }
            None => None,
        };
        Ok(Session { cfg, surface, field, uniform: None, delta_thin: None, tolerance: None, violations: Vec::new(), summary: Vec::new() })
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.surface.graph
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_file(&self.out(name), bytes)
    }

    fn section(&self, key: &str, value: &Value) -> Result<(), CliError> {
        self.write(&format!("{key}.json"), &json_bytes(value))
    }

    fn violate(&mut self, section: &str, msg: impl Into<String>) {
        self.violations.push(format!("{section}: {}", msg.into()));
    }

    fn ensure_field(&mut self) -> Result<(), CliError> {
        if self.field.is_none() {
            self.field = Some(compute_sigma_field(&self.surface.graph, self.cfg.alpha, &self.cfg.ladder)?);
        }
        Ok(())
    }

    fn parts(&mut self) -> Result<(&MetricGraph, &SigmaField), CliError> {
        self.ensure_field()?;
        Ok((&self.surface.graph, self.field.as_ref().expect("field computed")))
    }

    pub fn field(&mut self) -> Result<&SigmaField, CliError> {
        Ok(self.parts()?.1)
    }

    fn uniformity(&mut self) -> Result<Option<UniformityEstimate>, CliError> {
        if self.uniform.is_none() {
            let (n, seed) = (self.cfg.samples.geodesics, self.cfg.seed);
            let (g, f) = self.parts()?;
            if f.is_trivial() {
                return Ok(None);
            }
            let est = estimate_uniformity_constant(g, f, n, seed)?;
            self.uniform = Some(est);
        }
        Ok(self.uniform.clone())
    }

    fn thinness(&mut self) -> Result<f64, CliError> {
        if let Some(d) = self.delta_thin {
            return Ok(d);
        }
        let (n, seed) = (self.cfg.samples.triangles, self.cfg.seed);
        let (g, f) = self.parts()?;
        let d = if f.is_trivial() { 0.0 } else { estimate_thinness(g, &WeightField::sigma(g, f)?, n, seed)?.delta_thin };
        self.delta_thin = Some(d);
        Ok(d)
    }

    /// `eps_h` backed by an `h -> h/2` rebuild when refinement is requested.
    pub fn tolerance(&mut self) -> Result<Tolerance, CliError> {
        if let Some(t) = &self.tolerance {
            return Ok(t.clone());
        }
        let eps = self.cfg.tolerance.eps_h;
        let refinable = !matches!(self.cfg.surface, SurfaceConfig::Mesh { .. } | SurfaceConfig::Graph { .. });
        let t = if self.cfg.tolerance.refine && refinable {
            Tolerance::with_evidence(eps, self.refinement_evidence()?)
        } else {
            Tolerance::assumed(eps)
        };
        self.tolerance = Some(t.clone());
        Ok(t)
    }

    fn refinement_evidence(&mut self) -> Result<RefinementEvidence, CliError> {
        let fine = build_surface(&self.cfg, 2)?.graph;
        let ffine = compute_sigma_field(&fine, self.cfg.alpha, &self.cfg.ladder)?;
        let alpha = self.cfg.alpha;
        let (g, f) = self.parts()?;
        let mut ev = RefinementEvidence::new(g.h(), fine.h());
        let pool = sample_pool(g, alpha);
        let fine_pool = sample_pool(&fine, alpha);
        if pool.len() < 3 || fine_pool.is_empty() {
            return Ok(ev);
        }
        let nearest = |v: usize| -> usize {
            let p = g.position(v);
            *fine_pool
                .iter()
                .min_by(|&&x, &&y| dist2(fine.position(x), p).total_cmp(&dist2(fine.position(y), p)).then(x.cmp(&y)))
                .expect("pool is non-empty")
        };
        let (p, q) = (pool[pool.len() / 3], pool[2 * pool.len() / 3]);
        let (fp, fq) = (nearest(p), nearest(q));
        let d = shortest_path(g, &WeightField::intrinsic(g), p, q)?.intrinsic_length;
        let dfine = shortest_path(&fine, &WeightField::intrinsic(&fine), fp, fq)?.intrinsic_length;
        ev.push("intrinsic_distance", d, dfine);
        if !f.is_trivial() {
            // L_hat is only ever compared against 1/alpha.
            ev.push_against("l_hat", f.lipschitz_estimate(g), ffine.lipschitz_estimate(&fine), 1.0 / alpha);
            ev.push("b_anchor_p", f.b(p), ffine.b(fp));
            ev.push("b_anchor_q", f.b(q), ffine.b(fq));
            let db = shortest_path(g, &WeightField::sigma(g, f)?, p, q)?.weighted_length;
            let dbf = shortest_path(&fine, &WeightField::sigma(&fine, &ffine)?, fp, fq)?.weighted_length;
            ev.push("sigma_distance", db, dbf);
        }
        Ok(ev)
    }

    pub fn write_run_config(&self) -> Result<(), CliError> {
        self.write("run_config.toml", self.cfg.to_toml().as_bytes())?;
        self.section("run_config", &to_value(&self.cfg))
    }

    pub fn write_graph(&self) -> Result<(), CliError> {
        graph_io::write_graph(&self.cfg.out, self.graph())?;
        let m = graph_io::Manifest::of(self.graph());
        let mut s = format!("graph: {} vertices, {} edges, h = {:.4}", m.vertices, m.edges, m.h);
        if m.has_sigma {
            s += &format!(", {} near-singular vertices", m.near_sigma_ring);
        }
        println!("{s}");
        Ok(())
    }

    pub fn write_tolerances(&mut self, strict: bool) -> Result<(), CliError> {
        let t = self.tolerance()?;
        self.section("tolerances", &json!({ "eps_h": t.eps_h, "status": t.status, "certified": t.is_certified() }))?;
        let ev = match &t.evidence {
            Some(e) => to_value(e),
            None => json!({ "status": "assumed", "reason": "no h -> h/2 refinement was run" }),
        };
        self.section("refinement_evidence", &ev)?;
        if strict && !t.is_certified() {
            self.violate("tolerances", format!("eps_h = {} is {:?}, not certified by refinement", t.eps_h, t.status).to_lowercase());
        }
        Ok(())
    }

    /// Axioms, Lipschitz bound, field CSV and the `delta` profile.
    pub fn sigma_suite(&mut self) -> Result<(), CliError> {
        let eps_h = self.cfg.tolerance.eps_h;
        let (g, f) = self.parts()?;
        let report = verify_axioms(f, g, &AxiomOptions { eps_h, ..AxiomOptions::default() })?;
        let l_hat = f.lipschitz_estimate(g);
        let lipschitz = if f.is_trivial() {
            json!({ "L_hat": 0.0, "bound": report.s3.bound, "trivial_gauge": true, "pass": true })
        } else {
            json!({ "L_hat": l_hat, "bound": report.s3.bound, "alpha": f.alpha(), "harnack": harnack_check(f, g, l_hat, eps_h), "pass": report.s3.pass })
        };
        let csv = sigma_io::sigma_csv(f);
        let profile = sigma_io::profile_csv(g, f);
        let svg = profile_plot(g, f).render();
        let axiom = to_value(&report);
        self.write("sigma.csv", &csv)?;
        self.write("profile.csv", &profile)?;
        self.write("profile.svg", svg.as_bytes())?;
        self.section("axiom", &axiom)?;
        self.section("lipschitz", &lipschitz)?;
        self.summary.push(format!("axiom: {} (L_hat = {l_hat:.4}, bound {:.4})", pass_str(report.pass), report.s3.bound));
        for v in report.violations {
            self.violate("axiom", v);
        }
        Ok(())
    }

    /// `alpha -> infinity` and `alpha -> 0` limits on a compact band.
    pub fn interpolation_suite(&mut self) -> Result<(), CliError> {
        let (lo, hi) = self.cfg.interpolation.band;
        let alphas = self.cfg.interpolation.alphas.clone();
        let ladder = self.cfg.ladder;
        let g = self.graph();
        if g.totally_geodesic() {
            return self.section("interpolation", &trivial("totally geodesic: b = 0 for every alpha"));
        }
        if !g.has_sigma() {
            self.summary.push("interpolation: skipped (no singular set)".into());
            return self.section("interpolation", &json!({ "skipped": "no singular set to measure the band from" }));
        }
        let table = interpolation_sweep(g, &alphas, &Band::DistSigma { lo, hi }, &ladder)?;
        let a0 = g.cone_grid().map(|c| c.cone_constant);
        let mut rows = Vec::new();
        let mut csv = String::from("alpha,sup_b_minus_a,predicted_b_minus_a,sup_b_over_alpha_minus_inverse_distance,predicted_inverse\n");
        let mut worst: f64 = 0.0;
        for r in &table.rows {
            // On a cone b = (a0 + alpha) / r, so both sups sit at the inner band edge.
            let pred = a0.map(|a0| (r.alpha / lo, a0 / (r.alpha * lo)));
            let third = r.sup_b_over_alpha_minus_inverse_distance.unwrap_or(f64::NAN);
            let (rel_a, rel_b) = pred.map_or((None, None), |(p1, p2)| (Some(r.sup_b_minus_a / p1 - 1.0), Some(third / p2 - 1.0)));
            if let (Some(x), Some(y)) = (rel_a, rel_b) {
                worst = worst.max(x.abs()).max(y.abs());
            }
            csv += &format!(
                "{},{},{},{},{}\n",
                r.alpha,
                r.sup_b_minus_a,
                pred.map_or(String::new(), |p| p.0.to_string()),
                third,
                pred.map_or(String::new(), |p| p.1.to_string())
            );
            rows.push(json!({
                "alpha": r.alpha,
                "sup_b_minus_a": r.sup_b_minus_a,
                "sup_b_over_alpha_minus_inverse_distance": r.sup_b_over_alpha_minus_inverse_distance,
                "predicted_b_minus_a": pred.map(|p| p.0),
                "predicted_inverse": pred.map(|p| p.1),
                "rel_error_b_minus_a": rel_a,
                "rel_error_inverse": rel_b,
            }));
        }
        let monotone = table.monotone;
        let value = json!({
            "band": [lo, hi],
            "band_vertices": table.band_vertices,
            "rows": rows,
            "worst_monotonicity_violation": table.worst_monotonicity_violation,
            "monotone": monotone,
            "worst_rel_error": a0.map(|_| worst),
        });
        self.write("interpolation.csv", csv.as_bytes())?;
        self.section("interpolation", &value)?;
        self.summary.push(format!("interpolation: monotone = {monotone}{}", a0.map_or(String::new(), |_| format!(", worst closed-form error {:.2}%", 100.0 * worst))));
        if !monotone {
            self.violate("interpolation", format!("b_alpha not monotone in alpha (worst {})", table.worst_monotonicity_violation));
        }
        Ok(())
    }

    /// Comparison inequalities on sampled pairs, plus same-ray checks on cones.
    pub fn inequality_suite(&mut self) -> Result<(), CliError> {
        if self.field()?.is_trivial() {
            return self.section("inequalities", &trivial("totally geodesic: the sigma metric vanishes"));
        }
        let a_hat = self.uniformity()?.map(|u| u.a_hat);
        let tolerance = self.tolerance()?;
        let (n_pairs, seed, alpha) = (self.cfg.samples.pairs, self.cfg.seed, self.cfg.alpha);
        let (g, f) = self.parts()?;
        let pairs = sample_pairs(&sample_pool(g, alpha), n_pairs, seed);
        let l_hat = f.lipschitz_estimate(g);
        let report = check_inequality_suite(g, f, &pairs, &SuiteOptions { l_hat, a_hat, tolerance })?;
        let sigma = WeightField::sigma(g, f)?;
        let traces = geodesic_traces(g, &sigma, &pairs[..pairs.len().min(8)])?;
        let centers: Vec<usize> = pairs.iter().take(20).map(|p| p.0).collect();
        let geometry = if centers.is_empty() { None } else { Some(bounded_geometry(g, &WeightField::smoothed(g, f.b_values())?, &centers, 0.1)?) };
        let oracle = cone_ray_oracle(g, f)?;
        let mut value = to_value(&report);
        value["bounded_geometry"] = to_value(&geometry);
        value["cone_ray_oracle"] = oracle;
        let violations = report.violations;
        let worst = report.clauses.iter().filter(|c| c.checked > 0).map(|c| c.min_margin).fold(f64::INFINITY, f64::min);
        let failing: Vec<String> = report.clauses.iter().filter(|c| c.violations > 0).map(|c| format!("{} violated on {} of {} pairs", c.name, c.violations, c.checked)).collect();
        self.write("geodesics.csv", &traces)?;
        self.section("inequalities", &value)?;
        self.summary.push(format!("inequalities: {violations} violation(s) over {} pairs, worst margin {worst:.4}", pairs.len()));
        for msg in failing {
            self.violate("inequalities", msg);
        }
        Ok(())
    }

    /// `a_hat` from sampled geodesics, reseeding, and antipodal pipelines.
    pub fn uniformity_suite(&mut self) -> Result<(), CliError> {
        let Some(est) = self.uniformity()? else {
            return self.section("uniformity", &trivial("totally geodesic: every curve is trivially uniform"));
        };
        let (n, seed, n_pipes) = (self.cfg.samples.geodesics, self.cfg.seed, self.cfg.samples.pipelines);
        let (g, f) = self.parts()?;
        let reseeded = estimate_uniformity_constant(g, f, n, seed.wrapping_add(1))?;
        let ends = pipeline_pairs(g, f.alpha(), n_pipes, seed);
        let g_is_cone = g.cone_grid().is_some();
        let params = PipelineParams::default();
        let mut built = Vec::new();
        let mut failures = Vec::new();
        for &(p, q) in &ends {
            match build_pipeline(g, f, p, q, &params) {
                Ok(pl) => built.push(json!({ "p": p, "q": q, "hub": pl.hub, "scale": pl.scale, "pi_hat": pl.pi_hat, "c_hat": pl.certificate.c_hat })),
                Err(e) => failures.push(json!({ "p": p, "q": q, "error": e.to_string() })),
            }
        }
        let max_c = built.iter().map(|b| b["c_hat"].as_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
        let bound = 10.0 * est.a_hat;
        let finite = est.c_hats.iter().all(|c| c.is_finite());
        let value = json!({
            "a_hat": est.a_hat,
            "quantiles": { "median": est.median, "q90": est.q90, "q99": est.q99 },
            "samples": est.samples,
            "seed": est.seed,
            "all_finite": finite,
            "reseeded": { "seed": reseeded.seed, "a_hat": reseeded.a_hat, "rel_change": reseeded.a_hat / est.a_hat - 1.0 },
            "pipelines": { "pairs": if g_is_cone { "antipodal" } else { "sampled" }, "gated": g_is_cone, "attempted": ends.len(), "built": built.len(), "max_c_hat": max_c, "bound": bound, "within_bound": max_c <= bound, "failures": failures, "certificates": built },
        });
        let mut csv = String::from("sample,c_hat\n");
        for (i, c) in est.c_hats.iter().enumerate() {
            csv += &format!("{i},{c}\n");
        }
        self.write("uniformity.csv", csv.as_bytes())?;
        self.section("uniformity", &value)?;
        self.summary.push(format!("uniformity: a_hat = {:.3} (median {:.3}), pipelines {}/{} built, max c_hat {max_c:.3}", est.a_hat, est.median, built.len(), ends.len()));
        if !finite {
            self.violate("uniformity", "a sampled geodesic has an infinite certificate");
        }
        // Antipodal cone pairs are the certified construction; seeded pool pairs
        // on other graphs are reported without gating.
        if !failures.is_empty() && g_is_cone {
            self.violate("uniformity", format!("{} of {} pipelines could not be built", failures.len(), ends.len()));
        }
        if max_c > bound {
            self.violate("uniformity", format!("pipeline certificate {max_c} exceeds 10 a_hat = {bound}"));
        }
        Ok(())
    }

    /// Thin triangles, four-point defect, starlikeness and the explicit bound.
    pub fn hyperbolicity_suite(&mut self) -> Result<(), CliError> {
        let Some(est) = self.uniformity()? else {
            return self.section("hyperbolicity", &trivial("totally geodesic: the sigma metric vanishes"));
        };
        let s = &self.cfg.samples;
        let opts = HyperbolicityOptions { n_triangles: s.triangles, n_quadruples: s.quadruples, n_targets: s.starlike_targets, seed: self.cfg.seed };
        let ranges = self.range_curve()?;
        let (g, f) = self.parts()?;
        let report = analyze(g, &WeightField::sigma(g, f)?, &opts, Some(est.a_hat))?;
        self.delta_thin = Some(report.delta_thin);
        let mut value = to_value(&report);
        value["a_hat"] = json!(est.a_hat);
        if let Some((rows, _)) = &ranges {
            value["ranges"] = json!(rows.iter().map(|&(r, d)| json!({ "r_max": r, "delta_4pt": d })).collect::<Vec<_>>());
        }
        if let Some((rows, plot)) = ranges {
            let mut csv = String::from("r_max,delta_4pt\n");
            for (r, d) in rows {
                csv += &format!("{r},{d}\n");
            }
            self.write("hyper_ranges.csv", csv.as_bytes())?;
            self.write("hyper_ranges.svg", plot.render().as_bytes())?;
        }
        self.section("hyperbolicity", &value)?;
        self.summary.push(format!(
            "hyperbolicity: delta_thin = {:.3}, delta_4pt = {:.3}, beta = {}, bound {:.4e}",
            report.delta_thin,
            report.delta_4pt,
            report.beta.map_or("n/a".into(), |b| format!("{b:.3}")),
            report.paper_bound.unwrap_or(f64::NAN)
        ));
        if report.margin.is_some_and(|m| m < 0.0) {
            self.violate("hyperbolicity", format!("delta_thin = {} exceeds the explicit bound", report.delta_thin));
        }
        Ok(())
    }

    /// Four-point defect of cone unfoldings truncated at several outer radii.
    fn range_curve(&self) -> Result<Option<(Vec<(f64, f64)>, Plot)>, CliError> {
        let spec = match self.cfg.surface.model_spec() {
            Some(s @ (ModelSpec::ConeOverSphereProducts { .. } | ModelSpec::CliffordCone { .. })) => s,
            _ => return Ok(None),
        };
        if self.cfg.hyperbolicity.ranges.is_empty() {
            return Ok(None);
        }
        let mut rows = Vec::new();
        for &r_max in &self.cfg.hyperbolicity.ranges {
            let spec = match spec {
                ModelSpec::ConeOverSphereProducts { p, q, r_min, .. } => ModelSpec::ConeOverSphereProducts { p, q, r_min, r_max },
                ModelSpec::CliffordCone { r_min, .. } => ModelSpec::CliffordCone { r_min, r_max },
                other => other,
            };
            let g = build_graph(&make_model(spec)?, &GridSpec { ..self.cfg.grid })?;
            let f = compute_sigma_field(&g, self.cfg.alpha, &self.cfg.ladder)?;
            let e = four_point_delta(&g, &WeightField::sigma(&g, &f)?, self.cfg.samples.quadruples, self.cfg.seed)?;
            rows.push((r_max, e.delta_4pt));
        }
        let plot = Plot {
            title: "four-point delta against truncation radius".into(),
            x_label: "r_max".into(),
            y_label: "delta_4pt".into(),
            log_x: true,
            log_y: false,
            series: vec![Series { label: "sigma metric".into(), points: rows.clone(), mark: Mark::Line }],
        };
        Ok(Some((rows, plot)))
    }

    /// Cover invariants, multiplicity per band, and the smoothing sandwich.
    pub fn whitney_suite(&mut self) -> Result<(), CliError> {
        let (xi_cfg, norm) = (self.cfg.whitney.xi, self.cfg.whitney.normalization);
        let (g, f) = self.parts()?;
        if f.is_trivial() {
            let s = smooth_sigma(g, f, None, norm)?;
            let rep = verify_smoothing(f, &s, g)?;
            let mut v = trivial("totally geodesic: delta = infinity is left unchanged");
            v["c1"] = json!(rep.c1);
            v["c2"] = json!(rep.c2);
            v["c3"] = json!(rep.c3);
            v["multiplicity"] = json!(0);
            v["pass"] = json!(rep.pass);
            let pass = rep.pass;
            self.section("whitney", &v)?;
            if !pass {
                self.violate("whitney", "trivial field was modified by smoothing");
            }
            return Ok(());
        }
        let l_hat = f.lipschitz_estimate(g);
        let xi = xi_cfg.unwrap_or_else(|| default_xi(l_hat));
        let cover = build_cover(g, f, xi)?;
        let smoothed = smooth_sigma(g, f, Some(&cover), norm)?;
        let rep = verify_smoothing(f, &smoothed, g)?;
        let bands = multiplicity_bands(g, &cover.aleph_1);
        let (bmin, bmax) = bands.iter().fold((u32::MAX, 0), |(lo, hi), b| (lo.min(b.1), hi.max(b.1)));
        let bands_uniform = bands.is_empty() || bmax - bmin <= 2;
        let c = cover.multiplicity as f64;
        let tol = 1e-12;
        let sandwich = rep.c1 > 0.0 && rep.c1 <= 1.0 + tol && rep.c2 >= 1.0 - tol && rep.c2 <= 1.2 * c;
        let value = json!({
            "xi": xi,
            "l_hat": l_hat,
            "centers": cover.centers.len(),
            "family_count": cover.family_count,
            "multiplicity": cover.multiplicity,
            "checks": cover.checks,
            "histogram_1": cover.histogram_1(),
            "histogram_10": cover.histogram_10(),
            "band_multiplicity": bands.iter().map(|&(lo, m)| json!({ "dist_sigma_from": lo, "max_aleph_1": m })).collect::<Vec<_>>(),
            "bands_uniform": bands_uniform,
            "normalization": norm,
            "c1": rep.c1,
            "c2": rep.c2,
            "c3": rep.c3,
            "sandwich": sandwich,
            "pass": rep.pass && cover.is_valid(),
        });
        let cover_csv = sigma_io::cover_csv(&cover);
        let smoothed_csv = sigma_io::smoothed_csv(f, &smoothed, Some(&cover));
        self.write("cover.csv", &cover_csv)?;
        self.write("smoothed.csv", &smoothed_csv)?;
        self.section("whitney", &value)?;
        self.summary.push(format!(
            "whitney: {} centers, multiplicity {}, c1 = {:.4}, c2 = {:.4}, c3 = {:.4}",
            cover.centers.len(),
            cover.multiplicity,
            rep.c1,
            rep.c2,
            rep.c3
        ));
        if !cover.is_valid() {
            self.violate("whitney", format!("cover checks failed: {:?}", cover.checks));
        }
        if !rep.pass {
            self.violate("whitney", "smoothed field is not positive and Lipschitz");
        }
        if norm == Normalization::PartitionOfUnity && !sandwich {
            self.violate("whitney", format!("sandwich 0 < c1 <= 1 <= c2 <= 1.2 c fails (c1 = {}, c2 = {}, c = {c})", rep.c1, rep.c2));
        }
        if !bands_uniform {
            self.violate("whitney", format!("multiplicity varies from {bmin} to {bmax} across bands"));
        }
        Ok(())
    }

    /// Rays from an interior base, classified into boundary points.
    pub fn boundary_suite(&mut self) -> Result<(), CliError> {
        let trivial_field = self.field()?.is_trivial();
        let (a_hat, delta_thin) = if trivial_field { (1.0, 0.0) } else { (self.uniformity()?.map_or(1.0, |u| u.a_hat), self.thinness()?) };
        let spec = TargetSpec { per_component: self.cfg.samples.rays_per_component, ..TargetSpec::default() };
        let opts = BoundaryOptions { threshold: self.cfg.boundary.threshold, a_hat, delta_thin, eps_h: self.cfg.tolerance.eps_h };
        let (g, f) = self.parts()?;
        let base = boundary_base(g)?;
        let bundle = trace_rays(g, f, base, &spec)?;
        let report = verify_boundary_map(&bundle, g, f, &opts)?;
        let mut csv = String::from("ray,family,component,step,vertex,dist_sigma,d_b\n");
        for (i, ray) in bundle.rays.iter().enumerate() {
            let fam = match ray.family {
                RayFamily::Sigma => "sigma",
                RayFamily::Infinity => "infinity",
            };
            let mut acc = 0.0;
            for (k, &v) in ray.path.vertices.iter().enumerate() {
                if k > 0 {
                    acc += ray.path.segment_costs[k - 1];
                }
                csv += &format!("{i},{fam},{},{k},{v},{},{acc}\n", ray.component, graph_io::length_to_str(g.dist_sigma(v)));
            }
        }
        let mut value = to_value(&report);
        value["base"] = json!(base);
        value["rays"] = json!(bundle.rays.len());
        value["sigma_components"] = json!(bundle.sigma_components);
        value["outer_components"] = json!(bundle.outer_components);
        value["bundle_notes"] = json!(bundle.notes);
        value["a_hat"] = json!(a_hat);
        value["delta_thin"] = json!(delta_thin);
        self.write("rays.csv", csv.as_bytes())?;
        self.section("boundary", &value)?;
        self.summary.push(format!(
            "boundary: {} class(es) ({} singular, {} at infinity), threshold {:.3}, {}",
            report.total_classes,
            report.sigma_classes,
            report.infinity_classes,
            report.threshold,
            pass_str(report.pass)
        ));
        if !report.pass {
            self.violate(
                "boundary",
                format!(
                    "surjective = {}, injective = {}, single class at infinity = {}, log-delta margin = {}",
                    report.surjective, report.injective, report.infinity_unique, report.log_delta_margin
                ),
            );
        }
        Ok(())
    }
}

fn pass_str(p: bool) -> &'static str {
    if p {
        "pass"
    } else {
        "FAIL"
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn profile_plot(g: &MetricGraph, f: &SigmaField) -> Plot {
    let with_sigma = g.has_sigma();
    let x = |v: usize| if with_sigma { g.dist_sigma(v).to_f64() } else { v as f64 };
    let step = (g.vertex_count() / 2000).max(1);
    let pts = |val: &dyn Fn(usize) -> f64| (0..g.vertex_count()).step_by(step).map(|v| (x(v), val(v))).collect::<Vec<_>>();
    Plot {
        title: format!("sigma transform on {}", g.label()),
        x_label: if with_sigma { "distance to singular set".into() } else { "vertex".into() },
        y_label: "value".into(),
        log_x: with_sigma,
        log_y: true,
        series: vec![
            Series { label: "b".into(), points: pts(&|v| f.b(v)), mark: Mark::Dots },
            Series { label: "|A|".into(), points: pts(&|v| g.a(v)), mark: Mark::Dots },
            Series { label: "delta".into(), points: pts(&|v| f.delta(v).to_f64()), mark: Mark::Dots },
        ],
    }
}

fn geodesic_traces(g: &MetricGraph, w: &WeightField, pairs: &[(usize, usize)]) -> Result<Vec<u8>, CliError> {
    let mut s = String::from("pair,step,vertex,x0,x1,x2,dist_sigma,d_b\n");
    for (i, &(p, q)) in pairs.iter().enumerate() {
        let path = shortest_path(g, w, p, q)?;
        let mut acc = 0.0;
        for (k, &v) in path.vertices.iter().enumerate() {
            if k > 0 {
                acc += path.segment_costs[k - 1];
            }
            let x = g.position(v);
            let c = |j: usize| x.get(j).copied().unwrap_or(0.0);
            s += &format!("{i},{k},{v},{},{},{},{},{acc}\n", c(0), c(1), c(2), graph_io::length_to_str(g.dist_sigma(v)));
        }
    }
    Ok(s.into_bytes())
}

/// Same-column pairs on a cone grid: `d_b` against `(a0 + alpha) log(r2/r1)`
/// and `k` against `log(r2/r1)`.
fn cone_ray_oracle(g: &MetricGraph, f: &SigmaField) -> Result<Value, CliError> {
    let Some(cg) = g.cone_grid().copied() else {
        return Ok(Value::Null);
    };
    let r_out = cg.ring_radius(cg.rings - 1);
    let rings: Vec<usize> = (0..cg.rings).filter(|&i| cg.ring_radius(i) >= 0.3 && cg.ring_radius(i) <= 0.5 * r_out).collect();
    if rings.len() < 2 {
        return Ok(Value::Null);
    }
    let sigma = WeightField::sigma(g, f)?;
    let qh = WeightField::quasi_hyperbolic(g)?;
    let c = cg.cone_constant + f.alpha();
    let (mut worst_db, mut worst_k) = (0.0f64, 0.0f64);
    let mut n = 0;
    for i in 0..50 {
        let r1 = rings[(7 * i) % rings.len()];
        let r2 = rings[(7 * i + rings.len() / 2) % rings.len()];
        if r1 == r2 {
            continue;
        }
        let col = (i * cg.cols / 50) % cg.cols;
        let (p, q) = (cg.vertex(r1, col), cg.vertex(r2, col));
        let log_ratio = (cg.ring_radius(r2) / cg.ring_radius(r1)).ln().abs();
        let db = shortest_path(g, &sigma, p, q)?.weighted_length;
        let k = shortest_path(g, &qh, p, q)?.weighted_length;
        worst_db = worst_db.max((db / (c * log_ratio) - 1.0).abs());
        worst_k = worst_k.max((k / log_ratio - 1.0).abs());
        n += 1;
    }
    Ok(json!({ "pairs": n, "constant": c, "max_rel_error_d_b": worst_db, "max_rel_error_k": worst_k, "pass": worst_db <= 0.05 && worst_k <= 0.05 }))
}

/// Antipodal pairs on the rings nearest `r = 1` for cone grids; seeded pool
/// pairs otherwise.
fn pipeline_pairs(g: &MetricGraph, alpha: f64, n: usize, seed: u64) -> Vec<(usize, usize)> {
    let Some(cg) = g.cone_grid().copied() else {
        return sample_pairs(&sample_pool(g, alpha), n, seed.wrapping_add(2));
    };
    let mut rings: Vec<usize> = (0..cg.rings).filter(|&i| g.flags(cg.vertex(i, 0)).is_empty()).collect();
    if rings.is_empty() {
        return Vec::new();
    }
    rings.sort_by(|&i, &j| (cg.ring_radius(i) - 1.0).abs().total_cmp(&(cg.ring_radius(j) - 1.0).abs()).then(i.cmp(&j)));
    let half = cg.cols / 2;
    let full_circle = g.edge_length(cg.vertex(rings[0], 0), cg.vertex(rings[0], cg.cols - 1)).is_some();
    let mut out = Vec::new();
    for &ring in &rings {
        for j in 0..half.max(1) {
            if out.len() == n {
                return out;
            }
            let other = if full_circle { j + half } else { cg.cols - 1 - j };
            if other != j {
                out.push((cg.vertex(ring, j), cg.vertex(ring, other)));
            }
        }
    }
    out
}

/// Ring nearest `r = 1`, first column, on cone grids; otherwise the vertex
/// farthest from every flagged vertex.
pub fn boundary_base(g: &MetricGraph) -> Result<usize, CliError> {
    if let Some(cg) = g.cone_grid() {
        let ring = (0..cg.rings)
            .filter(|&i| g.flags(cg.vertex(i, 0)).is_empty())
            .min_by(|&i, &j| (cg.ring_radius(i) - 1.0).abs().total_cmp(&(cg.ring_radius(j) - 1.0).abs()));
        if let Some(ring) = ring {
            return Ok(cg.vertex(ring, 0));
        }
    }
    let flagged: Vec<usize> = (0..g.vertex_count()).filter(|&v| !g.flags(v).is_empty()).collect();
    if flagged.is_empty() {
        return Ok(0);
    }
    let d = multi_source_distances(g, &WeightField::intrinsic(g), &flagged)?;
    Ok((0..g.vertex_count()).filter(|&v| g.flags(v).is_empty()).max_by(|&u, &v| d[u].total_cmp(&d[v]).then(v.cmp(&u))).unwrap_or(0))
}

/// Largest `aleph_1` in each dyadic band of distance to the singular set.
fn multiplicity_bands(g: &MetricGraph, aleph: &[u32]) -> Vec<(f64, u32)> {
    if !g.has_sigma() {
        return vec![(0.0, aleph.iter().copied().max().unwrap_or(0))];
    }
    let dist: Vec<f64> = (0..g.vertex_count()).map(|v| g.dist_sigma(v).to_f64()).collect();
    let dmax = dist.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max);
    let mut lo = dist.iter().copied().fold(f64::INFINITY, f64::min).max(1e-300);
    let mut out = Vec::new();
    while lo < dmax {
        let hi = 2.0 * lo;
        let m = (0..g.vertex_count())
            .filter(|&v| dist[v] >= lo && dist[v] < hi && !g.flags(v).contains(VertexFlags::OUTER_TRUNCATION))
            .map(|v| aleph[v])
            .max();
        if let Some(m) = m {
            out.push((lo, m));
        }
        lo = hi;
    }
    out
}
