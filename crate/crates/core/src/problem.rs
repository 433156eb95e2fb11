//! Physical parameters, boundary-condition selection and problem data.

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::PolyMesh;

/// Material and flow parameters. `kappa[r]` is the permeability of region `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub mu: f64,
    pub lambda: f64,
    pub c0: f64,
    pub kappa: Vec<f64>,
    /// SWIP penalty; `None` selects `(N_faces + 0.1) k^2`.
    #[serde(default)]
    pub sigma: Option<f64>,
}

impl Physics {
    pub fn new(mu: f64, lambda: f64, c0: f64, kappa: f64) -> Self {
        Self { mu, lambda, c0, kappa: vec![kappa], sigma: None }
    }

    /// Lamé coefficients from Young's modulus and Poisson ratio.
    pub fn lame_from_young(young: f64, poisson: f64) -> (f64, f64) {
        let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        let mu = young / (2.0 * (1.0 + poisson));
        (mu, lambda)
    }

    /// Per-element permeability; fails on missing or nonpositive regions.
    pub fn element_kappa(&self, mesh: &PolyMesh) -> Result<Vec<f64>> {
        for (region, &value) in self.kappa.iter().enumerate() {
            if !(value > 0.0) {
                return Err(Error::NonPositivePermeability { region, value });
            }
        }
        mesh.elements()
            .iter()
            .map(|el| self.kappa.get(el.region).copied().ok_or(Error::MissingRegion(el.region)))
            .collect()
    }

    pub fn penalty(&self, mesh: &PolyMesh, k: usize) -> Result<f64> {
        let sigma = self.sigma.unwrap_or_else(|| default_penalty(mesh, k));
        if !(sigma > 0.0) {
            return Err(Error::NonPositivePenalty(sigma));
        }
        Ok(sigma)
    }
}

/// `(N_faces + 0.1) k^2` with `N_faces` the largest face count of any element.
pub fn default_penalty(mesh: &PolyMesh, k: usize) -> f64 {
    (mesh.max_faces_per_element() as f64 + 0.1) * (k * k) as f64
}

/// Displacement condition applied on every boundary face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisplacementBc {
    /// Strongly imposed `u = u_D` (projected data).
    Clamped,
    /// Zero tangential displacement, free normal displacement and zero normal traction.
    Sliding,
}

/// Pressure condition applied on every boundary face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PressureBc {
    /// Prescribed flux `kappa grad p . n` (zero unless the data say otherwise).
    Neumann,
    /// Homogeneous `p = 0`, weakly imposed through boundary SWIP terms.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    pub displacement: DisplacementBc,
    pub pressure: PressureBc,
}

impl Default for BoundaryConditions {
    fn default() -> Self {
        Self { displacement: DisplacementBc::Clamped, pressure: PressureBc::Neumann }
    }
}

/// Time-dependent loads and boundary data. Every method defaults to zero.
pub trait BiotData: Sync {
    /// Volume load `f`.
    fn load(&self, _x: &Point2<f64>, _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Fluid source `g`.
    fn source(&self, _x: &Point2<f64>, _t: f64) -> f64 {
        0.0
    }

    /// Point sources `(x0, strength)` added to `g`.
    fn point_sources(&self, _t: f64) -> Vec<(Point2<f64>, f64)> {
        Vec::new()
    }

    /// Displacement on clamped boundaries.
    fn boundary_displacement(&self, _x: &Point2<f64>, _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Flux `kappa grad p . n` on Neumann boundaries.
    fn boundary_flux(&self, _x: &Point2<f64>, _n: &Vector2<f64>, _t: f64) -> f64 {
        0.0
    }

    /// Initial pressure `p^0`.
    fn initial_pressure(&self, _x: &Point2<f64>) -> f64 {
        0.0
    }

    /// Load at the initial time, used to compute the initial displacement.
    fn initial_load(&self, x: &Point2<f64>) -> [f64; 2] {
        self.load(x, 0.0)
    }
}

/// Homogeneous data.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroData;

impl BiotData for ZeroData {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_cartesian;

    #[test]
    fn young_poisson_conversion() {
        let (mu, lambda) = Physics::lame_from_young(1e5, 0.1);
        assert!((lambda - 1e5 * 0.1 / (1.1 * 0.8)).abs() < 1e-9);
        assert!((mu - 1e5 / 2.2).abs() < 1e-9);
    }

    #[test]
    fn permeability_validation() {
        let mut mesh = generate_cartesian(2).unwrap();
        let mut p = Physics::new(1.0, 1.0, 0.0, 1.0);
        assert_eq!(p.element_kappa(&mesh).unwrap(), vec![1.0; 4]);
        mesh.tag_regions(|c| usize::from(c.x > 0.5));
        assert!(matches!(p.element_kappa(&mesh), Err(Error::MissingRegion(1))));
        p.kappa = vec![1.0, -2.0];
        assert!(matches!(p.element_kappa(&mesh), Err(Error::NonPositivePermeability { region: 1, .. })));
    }

    #[test]
    fn penalty_default() {
        let mesh = generate_cartesian(2).unwrap();
        let p = Physics::new(1.0, 1.0, 0.0, 1.0);
        assert!((p.penalty(&mesh, 2).unwrap() - 4.1 * 4.0).abs() < 1e-14);
        let bad = Physics { sigma: Some(0.0), ..p };
        assert!(bad.penalty(&mesh, 1).is_err());
    }
}
