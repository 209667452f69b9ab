//! Run configuration: TOML file, command-line overrides, surface construction.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use unfold_core::discretize::{build_graph, graph_from_mesh, icosphere, two_tip_spindle, GridSpec, MetricGraph, TriangleMesh};
use unfold_core::models::{make_model, ModelSpec, ModelSurface};
use unfold_core::sigma::{LadderSpec, Refinement};
use unfold_core::whitney::Normalization;

use crate::error::CliError;
use crate::graph_io;
use crate::off;

/// Where the graph comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceConfig {
    Simons { r_min: f64, r_max: f64 },
    Clifford { r_min: f64, r_max: f64 },
    Cone { p: usize, q: usize, r_min: f64, r_max: f64 },
    Catenoid { neck: f64, t_min: f64, t_max: f64 },
    Hyperplane { dim: usize, half_width: f64 },
    Sphere { radius: f64 },
    /// Two conical tips joined by a neck, punctured on the equator.
    Spindle { around: usize, s_min: f64 },
    Icosphere { level: usize },
    /// OFF mesh with an optional singular-vertex sidecar.
    Mesh { path: PathBuf, singular: Option<PathBuf> },
    /// Graph previously written by `gen`.
    Graph { dir: PathBuf },
}

impl SurfaceConfig {
    pub fn model_spec(&self) -> Option<ModelSpec> {
        Some(match *self {
            SurfaceConfig::Simons { r_min, r_max } => ModelSpec::ConeOverSphereProducts { p: 3, q: 3, r_min, r_max },
            SurfaceConfig::Clifford { r_min, r_max } => ModelSpec::CliffordCone { r_min, r_max },
            SurfaceConfig::Cone { p, q, r_min, r_max } => ModelSpec::ConeOverSphereProducts { p, q, r_min, r_max },
            SurfaceConfig::Catenoid { neck, t_min, t_max } => ModelSpec::Catenoid { neck, t_min, t_max },
            SurfaceConfig::Hyperplane { dim, half_width } => ModelSpec::Hyperplane { dim, half_width },
            SurfaceConfig::Sphere { radius } => ModelSpec::Sphere { radius },
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Samples {
    pub pairs: usize,
    pub geodesics: usize,
    pub pipelines: usize,
    pub triangles: usize,
    pub quadruples: usize,
    pub starlike_targets: usize,
    pub rays_per_component: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Samples { pairs: 200, geodesics: 200, pipelines: 50, triangles: 200, quadruples: 20_000, starlike_targets: 32, rays_per_component: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TolerancePolicy {
    pub eps_h: f64,
    /// Measure `h -> h/2` evidence by rebuilding at double resolution.
    pub refine: bool,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy { eps_h: 0.15, refine: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterpolationConfig {
    pub alphas: Vec<f64>,
    /// Band `[lo, hi]` of distance to the singular set.
    pub band: (f64, f64),
}

impl Default for InterpolationConfig {
    fn default() -> Self {
        InterpolationConfig { alphas: vec![4.0, 2.0, 1.0, 0.5, 0.25, 0.125], band: (1.0, 2.0) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WhitneyConfig {
    /// Defaults to 90% of the admissible maximum `1 / (1000 L)`.
    pub xi: Option<f64>,
    pub normalization: Normalization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperbolicityConfig {
    /// Outer radii for the four-point curve on cone models; empty disables it.
    pub ranges: Vec<f64>,
}

impl Default for HyperbolicityConfig {
    fn default() -> Self {
        HyperbolicityConfig { ranges: vec![4.0, 8.0, 16.0] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundaryConfig {
    /// Defaults to `8 a^2 + 2 delta_thin`.
    pub threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub surface: SurfaceConfig,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub ladder: LadderSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub tolerance: TolerancePolicy,
    #[serde(default)]
    pub interpolation: InterpolationConfig,
    #[serde(default)]
    pub hyperbolicity: HyperbolicityConfig,
    #[serde(default)]
    pub whitney: WhitneyConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    7
}

fn default_out() -> PathBuf {
    PathBuf::from("unfold-out")
}

impl RunConfig {
    pub fn new(surface: SurfaceConfig) -> Self {
        RunConfig {
            surface,
            grid: GridSpec::default(),
            alpha: default_alpha(),
            ladder: LadderSpec::default(),
            seed: default_seed(),
            samples: Samples::default(),
            tolerance: TolerancePolicy::default(),
            interpolation: InterpolationConfig::default(),
            hyperbolicity: HyperbolicityConfig::default(),
            whitney: WhitneyConfig::default(),
            boundary: BoundaryConfig::default(),
            out: default_out(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        toml::from_str(&text).map_err(|e| CliError::parse(path, e))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Simons,
    Clifford,
    Cone,
    Catenoid,
    Hyperplane,
    Sphere,
    Spindle,
    Icosphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RefinementName {
    None,
    Interpolate,
    Bisection,
}

/// Options shared by every computing subcommand. Flags override `--config`.
#[derive(Args, Clone, Debug, Default)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// OFF mesh input.
    #[arg(long, conflicts_with_all = ["model", "graph"])]
    pub mesh: Option<PathBuf>,
    /// Sidecar listing singular vertex indices of the mesh.
    #[arg(long, requires = "mesh")]
    pub singular: Option<PathBuf>,
    /// Directory holding vertices.csv, edges.csv and manifest.json from `gen`.
    #[arg(long, conflicts_with = "model")]
    pub graph: Option<PathBuf>,
    /// Stored field (sigma.csv) to use instead of recomputing it.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    #[arg(long)]
    pub rmin: Option<f64>,
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub neck: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub around: Option<usize>,
    #[arg(long)]
    pub smin: Option<f64>,
    #[arg(long)]
    pub level: Option<usize>,
    /// Grid resolution (vertices around the angular axis).
    #[arg(long)]
    pub res: Option<usize>,
    #[arg(long)]
    pub slice_dim: Option<usize>,
    /// Restrict cone grids to an angular sector of this width.
    #[arg(long)]
    pub span: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Geometric ladder ratio.
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long, value_enum)]
    pub refinement: Option<RefinementName>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub geodesics: Option<usize>,
    #[arg(long)]
    pub pipelines: Option<usize>,
    #[arg(long)]
    pub triangles: Option<usize>,
    #[arg(long)]
    pub quadruples: Option<usize>,
    #[arg(long)]
    pub rays: Option<usize>,
    /// Outer radii for the four-point range curve (comma separated, empty disables).
    #[arg(long, value_delimiter = ',')]
    pub ranges: Option<Vec<f64>>,
    #[arg(long)]
    pub xi: Option<f64>,
    /// Ray equivalence threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub eps_h: Option<f64>,
    /// Certify tolerances from an h -> h/2 rebuild.
    #[arg(long)]
    pub refine: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn need<T>(v: Option<T>, flag: &str, model: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --model {model}")))
}

impl RunArgs {
    fn surface(&self) -> Result<Option<SurfaceConfig>, CliError> {
        if let Some(path) = &self.mesh {
            return Ok(Some(SurfaceConfig::Mesh { path: path.clone(), singular: self.singular.clone() }));
        }
        if let Some(dir) = &self.graph {
            return Ok(Some(SurfaceConfig::Graph { dir: dir.clone() }));
        }
        let Some(model) = self.model else { return Ok(None) };
        let rmin = self.rmin.unwrap_or(0.1);
        let rmax = self.rmax.unwrap_or(10.0);
        Ok(Some(match model {
            ModelName::Simons => SurfaceConfig::Simons { r_min: rmin, r_max: rmax },
            ModelName::Clifford => SurfaceConfig::Clifford { r_min: rmin, r_max: rmax },
            ModelName::Cone => SurfaceConfig::Cone { p: need(self.p, "p", "cone")?, q: need(self.q, "q", "cone")?, r_min: rmin, r_max: rmax },
            ModelName::Catenoid => {
                let tmax = self.tmax.unwrap_or(5.0);
                SurfaceConfig::Catenoid { neck: self.neck.unwrap_or(1.0), t_min: self.tmin.unwrap_or(-tmax), t_max: tmax }
            }
            ModelName::Hyperplane => SurfaceConfig::Hyperplane { dim: self.dim.unwrap_or(2), half_width: self.half_width.unwrap_or(1.0) },
            ModelName::Sphere => SurfaceConfig::Sphere { radius: self.radius.unwrap_or(1.0) },
            ModelName::Spindle => SurfaceConfig::Spindle { around: self.around.unwrap_or(32), s_min: self.smin.unwrap_or(1e-4) },
            ModelName::Icosphere => SurfaceConfig::Icosphere { level: self.level.unwrap_or(3) },
        }))
    }

    /// Config file (if any) with flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let surface = self.surface()?;
        let mut cfg = match (&self.config, surface) {
            (Some(path), s) => {
                let mut c = RunConfig::load(path)?;
                if let Some(s) = s {
                    c.surface = s;
                }
                c
            }
            (None, Some(s)) => RunConfig::new(s),
            (None, None) => return Err(CliError::Usage("one of --config, --model, --mesh or --graph is required".into())),
        };
        if let Some(v) = self.res {
            cfg.grid.resolution = v;
        }
        if let Some(v) = self.slice_dim {
            cfg.grid.slice_dim = v;
        }
        if self.span.is_some() {
            cfg.grid.angular_span = self.span;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.ratio {
            cfg.ladder.ratio = v;
        }
        match (self.refinement, self.rel_tol) {
            (Some(RefinementName::None), _) => cfg.ladder.refinement = Refinement::None,
            (Some(RefinementName::Interpolate), _) => cfg.ladder.refinement = Refinement::Interpolate,
            (Some(RefinementName::Bisection), tol) => cfg.ladder.refinement = Refinement::Bisection { rel_tol: tol.unwrap_or(1e-3) },
            (None, Some(tol)) => {
                if let Refinement::Bisection { rel_tol } = &mut cfg.ladder.refinement {
                    *rel_tol = tol;
                }
            }
            (None, None) => {}
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        let s = &mut cfg.samples;
        for (flag, slot) in [
            (self.pairs, &mut s.pairs),
            (self.geodesics, &mut s.geodesics),
            (self.pipelines, &mut s.pipelines),
            (self.triangles, &mut s.triangles),
            (self.quadruples, &mut s.quadruples),
            (self.rays, &mut s.rays_per_component),
        ] {
            if let Some(v) = flag {
                *slot = v;
            }
        }
        if let Some(r) = &self.ranges {
            cfg.hyperbolicity.ranges = r.clone();
        }
        if self.xi.is_some() {
            cfg.whitney.xi = self.xi;
        }
        if self.threshold.is_some() {
            cfg.boundary.threshold = self.threshold;
        }
        if let Some(v) = self.eps_h {
            cfg.tolerance.eps_h = v;
        }
        if self.refine {
            cfg.tolerance.refine = true;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

/// A built graph together with what it came from.
pub struct Surface {
    pub graph: MetricGraph,
    pub model: Option<ModelSurface>,
    pub mesh: Option<(TriangleMesh, Vec<usize>)>,
}

fn read_mesh(path: &Path, singular: Option<&Path>) -> Result<(TriangleMesh, Vec<usize>), CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let m = off::parse_off(&text).map_err(|source| CliError::Off { path: path.into(), source })?;
    let sing = match singular {
        Some(sp) => {
            let t = fs::read_to_string(sp).map_err(CliError::io(sp))?;
            off::parse_singular(&t).map_err(|source| CliError::Off { path: sp.into(), source })?
        }
        None => Vec::new(),
    };
    Ok((TriangleMesh::new(m.positions, m.faces)?, sing))
}

/// Builds the graph at the configured resolution times `refine` (1 or 2).
pub fn build_surface(cfg: &RunConfig, refine: usize) -> Result<Surface, CliError> {
    let mut grid = cfg.grid;
    grid.resolution *= refine;
    if let Some(spec) = cfg.surface.model_spec() {
        let model = make_model(spec)?;
        let graph = build_graph(&model, &grid)?;
        return Ok(Surface { graph, model: Some(model), mesh: None });
    }
    let (mesh, singular, label) = match &cfg.surface {
        SurfaceConfig::Spindle { around, s_min } => {
            let (m, s) = two_tip_spindle(around * refine, *s_min)?;
            (m, s, format!("spindle(around={}, s_min={s_min})", around * refine))
        }
        SurfaceConfig::Icosphere { level } => (icosphere(level + refine.trailing_zeros() as usize), Vec::new(), format!("icosphere({level})")),
        SurfaceConfig::Mesh { path, singular } => {
            if refine > 1 {
                return Err(CliError::Usage("mesh inputs cannot be refined".into()));
            }
            let (m, s) = read_mesh(path, singular.as_deref())?;
            (m, s, format!("mesh({})", path.display()))
        }
        SurfaceConfig::Graph { dir } => {
            if refine > 1 {
                return Err(CliError::Usage("stored graphs cannot be refined".into()));
            }
            return Ok(Surface { graph: graph_io::read_graph(dir)?, model: None, mesh: None });
        }
        _ => unreachable!("analytic models handled above"),
    };
    let graph = graph_from_mesh(&mesh, &singular, label)?;
    Ok(Surface { graph, model: None, mesh: Some((mesh, singular)) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::new(SurfaceConfig::Catenoid { neck: 1.0, t_min: -5.0, t_max: 5.0 });
        c.ladder.refinement = Refinement::Bisection { rel_tol: 1e-4 };
        c.whitney.xi = Some(1e-4);
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn minimal_toml_uses_defaults() {
        let c: RunConfig = toml::from_str("[surface]\nkind = \"simons\"\nr_min = 0.1\nr_max = 10.0\n").unwrap();
        assert_eq!(c.alpha, 1.0);
        assert_eq!(c.samples.pairs, 200);
        assert_eq!(c.interpolation.alphas.len(), 6);
    }

    #[test]
    fn flags_override() {
        let args = RunArgs { model: Some(ModelName::Simons), res: Some(24), alpha: Some(2.0), refinement: Some(RefinementName::Bisection), ..RunArgs::default() };
        let c = args.resolve().unwrap();
        assert_eq!(c.grid.resolution, 24);
        assert_eq!(c.alpha, 2.0);
        assert_eq!(c.ladder.refinement, Refinement::Bisection { rel_tol: 1e-3 });
        assert!(RunArgs::default().resolve().is_err());
    }
}
