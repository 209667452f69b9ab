//! Analytic model hypersurfaces with closed-form geometry.
//!
//! Every model is a chart with evaluators for the embedding into Euclidean
//! space, the induced metric, the norm of the second fundamental form and the
//! intrinsic distance to the singular set.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::length::Length;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("chart point has {got} coordinates, expected {expected}")]
    WrongDimension { expected: usize, got: usize },
    #[error("chart coordinate {axis} = {value} lies outside the chart domain")]
    OutsideChart { axis: usize, value: f64 },
}

/// Model family together with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Flat `dim`-plane in `R^{dim+1}`, chart `[-half_width, half_width]^dim`.
    Hyperplane { dim: usize, half_width: f64 },
    /// Round 2-sphere in `R^3`.
    Sphere { radius: f64 },
    /// Catenoid with neck radius `neck`, height range `[t_min, t_max]`.
    Catenoid { neck: f64, t_min: f64, t_max: f64 },
    /// Cone over `S^p(sqrt(p/(p+q))) x S^q(sqrt(q/(p+q)))` in `R^{p+q+2}`.
    ConeOverSphereProducts { p: usize, q: usize, r_min: f64, r_max: f64 },
    /// Cone over the Clifford torus in `R^4`.
    CliffordCone { r_min: f64, r_max: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Hyperplane,
    Sphere,
    Catenoid,
    ConeOverSphereProducts,
    CliffordCone,
    MeshBacked,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Hyperplane => "hyperplane",
            ModelKind::Sphere => "sphere",
            ModelKind::Catenoid => "catenoid",
            ModelKind::ConeOverSphereProducts => "cone_over_sphere_products",
            ModelKind::CliffordCone => "clifford_cone",
            ModelKind::MeshBacked => "mesh",
        }
    }
}

/// One factor of the chart domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ChartAxis {
    Interval { lo: f64, hi: f64 },
    /// Periodic angle with period `2 pi`.
    Circle,
}

/// A model hypersurface, possibly rescaled by `scale`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSurface {
    spec: ModelSpec,
    scale: f64,
    domain: Vec<ChartAxis>,
}

/// Simons cone `C(S^3 x S^3)` in `R^8` on `r in [r_min, r_max]`.
pub fn simons_cone(r_min: f64, r_max: f64) -> Result<ModelSurface, ModelError> {
    make_model(ModelSpec::ConeOverSphereProducts { p: 3, q: 3, r_min, r_max })
}

pub fn make_model(spec: ModelSpec) -> Result<ModelSurface, ModelError> {
    let domain = match spec {
        ModelSpec::Hyperplane { dim, half_width } => {
            if dim == 0 {
                return Err(ModelError::InvalidParameter("hyperplane dimension must be positive"));
            }
            if !(half_width > 0.0 && half_width.is_finite()) {
                return Err(ModelError::InvalidParameter("hyperplane half width must be positive"));
            }
            vec![ChartAxis::Interval { lo: -half_width, hi: half_width }; dim]
        }
        ModelSpec::Sphere { radius } => {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(ModelError::InvalidParameter("sphere radius must be positive"));
            }
            vec![ChartAxis::Interval { lo: 0.0, hi: PI }, ChartAxis::Circle]
        }
        ModelSpec::Catenoid { neck, t_min, t_max } => {
            if !(neck > 0.0 && neck.is_finite()) {
                return Err(ModelError::InvalidParameter("catenoid neck must be positive"));
            }
            if !(t_min < t_max && t_min.is_finite() && t_max.is_finite()) {
                return Err(ModelError::InvalidParameter("catenoid height range must be increasing"));
            }
            vec![ChartAxis::Interval { lo: t_min, hi: t_max }, ChartAxis::Circle]
        }
        ModelSpec::ConeOverSphereProducts { p, q, r_min, r_max } => {
            if p == 0 || q == 0 {
                return Err(ModelError::InvalidParameter("sphere factor dimensions must be positive"));
            }
            cone_domain(p, q, r_min, r_max)?
        }
        ModelSpec::CliffordCone { r_min, r_max } => cone_domain(1, 1, r_min, r_max)?,
    };
    Ok(ModelSurface { spec, scale: 1.0, domain })
}

fn cone_domain(p: usize, q: usize, r_min: f64, r_max: f64) -> Result<Vec<ChartAxis>, ModelError> {
    if !(r_min > 0.0 && r_max.is_finite()) {
        return Err(ModelError::InvalidParameter("cone radii must be positive"));
    }
    if r_min >= r_max {
        return Err(ModelError::InvalidParameter("cone needs r_min < r_max"));
    }
    let mut axes = vec![ChartAxis::Interval { lo: r_min, hi: r_max }];
    for factor in [p, q] {
        for _ in 1..factor {
            axes.push(ChartAxis::Interval { lo: 0.0, hi: PI });
        }
        axes.push(ChartAxis::Circle);
    }
    Ok(axes)
}

/// Writes the unit-sphere embedding of hyperspherical angles into `out`
/// (`out.len() == angles.len() + 1`).
fn sphere_embed(angles: &[f64], out: &mut [f64]) {
    let mut s = 1.0;
    for (i, &a) in angles.iter().enumerate() {
        out[i] = s * libm::cos(a);
        s *= libm::sin(a);
    }
    out[angles.len()] = s;
}

/// Diagonal of the round metric in hyperspherical angles.
fn sphere_metric_diag(angles: &[f64], out: &mut [f64]) {
    let mut s2 = 1.0;
    for (i, &a) in angles.iter().enumerate() {
        out[i] = s2;
        let s = libm::sin(a);
        s2 *= s * s;
    }
}

impl ModelSurface {
    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn kind(&self) -> ModelKind {
        match self.spec {
            ModelSpec::Hyperplane { .. } => ModelKind::Hyperplane,
            ModelSpec::Sphere { .. } => ModelKind::Sphere,
            ModelSpec::Catenoid { .. } => ModelKind::Catenoid,
            ModelSpec::ConeOverSphereProducts { .. } => ModelKind::ConeOverSphereProducts,
            ModelSpec::CliffordCone { .. } => ModelKind::CliffordCone,
        }
    }

    /// Dimension of the hypersurface.
    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim() + 1
    }

    pub fn domain(&self) -> &[ChartAxis] {
        &self.domain
    }

    pub fn is_totally_geodesic(&self) -> bool {
        matches!(self.spec, ModelSpec::Hyperplane { .. })
    }

    /// Sphere factor dimensions for cone models.
    pub fn cone_factors(&self) -> Option<(usize, usize)> {
        match self.spec {
            ModelSpec::ConeOverSphereProducts { p, q, .. } => Some((p, q)),
            ModelSpec::CliffordCone { .. } => Some((1, 1)),
            _ => None,
        }
    }

    /// Scale-invariant product `|A| * r` on cone models.
    pub fn cone_constant(&self) -> Option<f64> {
        self.cone_factors().map(|(p, q)| libm::sqrt((p + q) as f64))
    }

    /// Singular points as chart points (the tip `r = 0` for cones).
    pub fn singular_points(&self) -> Vec<Vec<f64>> {
        if self.cone_factors().is_some() {
            vec![vec![0.0; self.dim()]]
        } else {
            Vec::new()
        }
    }

    pub fn has_sigma(&self) -> bool {
        self.cone_factors().is_some()
    }

    pub fn scale_model(&self, lambda: f64) -> Result<ModelSurface, ModelError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ModelError::InvalidParameter("scale factor must be positive"));
        }
        let mut out = self.clone();
        out.scale *= lambda;
        Ok(out)
    }

    fn check(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::WrongDimension { expected: self.dim(), got: x.len() });
        }
        for (axis, (&v, dom)) in x.iter().zip(&self.domain).enumerate() {
            let ok = match *dom {
                ChartAxis::Interval { lo, hi } => {
                    let slack = 1e-12 * (hi - lo).abs().max(1.0);
                    v >= lo - slack && v <= hi + slack
                }
                ChartAxis::Circle => v.is_finite(),
            };
            if !ok {
                return Err(ModelError::OutsideChart { axis, value: v });
            }
        }
        Ok(())
    }

    /// Embedding into `R^{dim+1}`.
    pub fn position(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check(x)?;
        let mut out = vec![0.0; self.ambient_dim()];
        self.position_unchecked(x, &mut out);
        Ok(out)
    }

    pub(crate) fn position_unchecked(&self, x: &[f64], out: &mut [f64]) {
        let s = self.scale;
        match self.spec {
            ModelSpec::Hyperplane { dim, .. } => {
                out[..dim].copy_from_slice(x);
                out[dim] = 0.0;
            }
            ModelSpec::Sphere { radius } => {
                let (phi, theta) = (x[0], x[1]);
                out[0] = radius * libm::sin(phi) * libm::cos(theta);
                out[1] = radius * libm::sin(phi) * libm::sin(theta);
                out[2] = radius * libm::cos(phi);
            }
            ModelSpec::Catenoid { neck, .. } => {
                let (t, theta) = (x[0], x[1]);
                let rad = neck * libm::cosh(t / neck);
                out[0] = rad * libm::cos(theta);
                out[1] = rad * libm::sin(theta);
                out[2] = t;
            }
            ModelSpec::ConeOverSphereProducts { .. } | ModelSpec::CliffordCone { .. } => {
                let (p, q) = self.cone_factors().unwrap_or((1, 1));
                let r = x[0];
                let (rho1, rho2) = link_radii(p, q);
                sphere_embed(&x[1..1 + p], &mut out[..p + 1]);
                sphere_embed(&x[1 + p..], &mut out[p + 1..]);
                for v in &mut out[..p + 1] {
                    *v *= r * rho1;
                }
                for v in &mut out[p + 1..] {
                    *v *= r * rho2;
                }
            }
        }
        for v in out.iter_mut() {
            *v *= s;
        }
    }

    /// Induced metric coefficients, row-major `dim x dim`.
    pub fn metric(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check(x)?;
        let n = self.dim();
        let mut diag = vec![0.0; n];
        match self.spec {
            ModelSpec::Hyperplane { .. } => diag.iter_mut().for_each(|d| *d = 1.0),
            ModelSpec::Sphere { radius } => {
                let sp = libm::sin(x[0]);
                diag[0] = radius * radius;
                diag[1] = radius * radius * sp * sp;
            }
            ModelSpec::Catenoid { neck, .. } => {
                let ch = libm::cosh(x[0] / neck);
                diag[0] = ch * ch;
                diag[1] = ch * ch * neck * neck;
            }
            ModelSpec::ConeOverSphereProducts { .. } | ModelSpec::CliffordCone { .. } => {
                let (p, _) = self.cone_factors().unwrap_or((1, 1));
                let (rho1, rho2) = link_radii(p, n - 1 - p);
                let r = x[0];
                diag[0] = 1.0;
                sphere_metric_diag(&x[1..1 + p], &mut diag[1..1 + p]);
                sphere_metric_diag(&x[1 + p..], &mut diag[1 + p..]);
                for d in &mut diag[1..1 + p] {
                    *d *= r * r * rho1 * rho1;
                }
                for d in &mut diag[1 + p..] {
                    *d *= r * r * rho2 * rho2;
                }
            }
        }
        let s2 = self.scale * self.scale;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            g[i * n + i] = diag[i] * s2;
        }
        Ok(g)
    }

    /// Norm of the second fundamental form (units 1/length).
    pub fn second_fundamental_norm(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.check(x)?;
        Ok(self.second_fundamental_norm_unchecked(x))
    }

    pub(crate) fn second_fundamental_norm_unchecked(&self, x: &[f64]) -> f64 {
        let a = match self.spec {
            ModelSpec::Hyperplane { .. } => 0.0,
            ModelSpec::Sphere { radius } => core::f64::consts::SQRT_2 / radius,
            ModelSpec::Catenoid { neck, .. } => {
                let ch = libm::cosh(x[0] / neck);
                core::f64::consts::SQRT_2 / (neck * ch * ch)
            }
            ModelSpec::ConeOverSphereProducts { .. } | ModelSpec::CliffordCone { .. } => {
                self.cone_constant().unwrap_or(0.0) / x[0]
            }
        };
        a / self.scale
    }

    /// Intrinsic distance to the singular set.
    pub fn dist_to_sigma(&self, x: &[f64]) -> Result<Length, ModelError> {
        self.check(x)?;
        Ok(self.dist_to_sigma_unchecked(x))
    }

    pub(crate) fn dist_to_sigma_unchecked(&self, x: &[f64]) -> Length {
        if self.has_sigma() {
            Length::Finite(x[0] * self.scale)
        } else {
            Length::Infinite
        }
    }
}

/// Radii of the two sphere factors of the link of a cone over `S^p x S^q`.
pub fn link_radii(p: usize, q: usize) -> (f64, f64) {
    let n = (p + q) as f64;
    (libm::sqrt(p as f64 / n), libm::sqrt(q as f64 / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_model(ModelSpec::CliffordCone { r_min: 1.0, r_max: 1.0 }).is_err());
        assert!(make_model(ModelSpec::Catenoid { neck: 0.0, t_min: -1.0, t_max: 1.0 }).is_err());
        assert!(make_model(ModelSpec::Sphere { radius: -1.0 }).is_err());
        let m = simons_cone(0.1, 10.0).unwrap();
        assert!(m.scale_model(0.0).is_err());
        assert!(m.dist_to_sigma(&[20.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn cone_link_sits_on_unit_sphere() {
        let m = simons_cone(0.1, 10.0).unwrap();
        let x = [1.0, 0.3, 1.1, 2.0, 0.7, 2.5, -1.0];
        let pos = m.position(&x).unwrap();
        let norm2: f64 = pos.iter().map(|v| v * v).sum();
        assert!((norm2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scaled_values() {
        let m = simons_cone(0.1, 10.0).unwrap().scale_model(2.0).unwrap();
        let x = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let a = m.second_fundamental_norm(&x).unwrap();
        assert!((a - libm::sqrt(6.0) / 2.0).abs() < 1e-15);
        assert_eq!(m.dist_to_sigma(&x).unwrap(), Length::Finite(2.0));
    }
}
