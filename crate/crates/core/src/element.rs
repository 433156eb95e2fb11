//! Per-element geometric and basis data shared by the local operators.

use nalgebra::{Cholesky, DMatrix, Dyn, Point2, Vector2};

use crate::basis::{num_monomials, weighted_product, ElementBasis, FaceBasis};
use crate::error::{Error, Result};
use crate::mesh::{PolyMesh, SubTriangulation, Triangle};
use crate::quadrature::{polygon_rule, segment_rule, QuadratureRule};

/// Face of an element seen from that element.
#[derive(Debug, Clone)]
pub struct LocalFace {
    pub global: usize,
    /// Outward normal `n_TF`.
    pub normal: Vector2<f64>,
    /// `+1` if the element owns the face.
    pub orientation: f64,
    pub h: f64,
    pub basis: FaceBasis,
    pub rule: QuadratureRule,
    /// Face basis values, `nf x nq`.
    pub phi: DMatrix<f64>,
    /// Element basis (degree `k + 1`) values at the face points, `nk1 x nq`.
    pub psi: DMatrix<f64>,
    pub dpsi: [DMatrix<f64>; 2],
    pub mass: DMatrix<f64>,
    pub mass_chol: Cholesky<f64, Dyn>,
    pub is_boundary: bool,
    pub endpoints: (Point2<f64>, Point2<f64>),
}

#[derive(Debug, Clone)]
pub struct LocalElement {
    pub index: usize,
    pub k: usize,
    /// Degree `k + 1` basis; its first `nk` functions span `P^k`.
    pub basis: ElementBasis,
    pub rule: QuadratureRule,
    pub psi: DMatrix<f64>,
    pub dpsi: [DMatrix<f64>; 2],
    pub faces: Vec<LocalFace>,
    pub measure: f64,
    pub diameter: f64,
    /// Degree-`k` mass matrix.
    pub mass_k: DMatrix<f64>,
    pub mass_k_chol: Cholesky<f64, Dyn>,
    pub triangles: Vec<Triangle>,
}

impl LocalElement {
    pub fn new(mesh: &PolyMesh, sub: &SubTriangulation, e: usize, k: usize) -> Result<Self> {
        if !(1..=3).contains(&k) {
            return Err(Error::UnsupportedDegree(k));
        }
        let el = mesh.element(e);
        let basis = ElementBasis::new(k + 1, el.centroid, el.diameter);
        let rule = polygon_rule(sub.element(e), 2 * k + 2);
        let psi = basis.tabulate(&rule);
        let (dx, dy) = basis.tabulate_grad(&rule);
        let nk = num_monomials(k);
        let mass_k = weighted_product(&psi.rows(0, nk).into_owned(), &psi.rows(0, nk).into_owned(), &rule.weights);
        let mass_k_chol =
            mass_k.clone().cholesky().ok_or(Error::RankDeficientMass { element: e, degree: k })?;
        let faces = el
            .faces
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                let face = mesh.face(f);
                let (a, b) = mesh.face_endpoints(f);
                let fb = FaceBasis::new(face, k);
                let frule = segment_rule(&a, &b, 2 * k + 2);
                let phi = fb.tabulate(&frule);
                let mass = weighted_product(&phi, &phi, &frule.weights);
                let mass_chol = mass.clone().cholesky().ok_or(Error::RankDeficientMass { element: e, degree: k })?;
                let (fdx, fdy) = basis.tabulate_grad(&frule);
                Ok(LocalFace {
                    global: f,
                    normal: mesh.outward_normal(e, i),
                    orientation: el.orientations[i],
                    h: face.measure,
                    psi: basis.tabulate(&frule),
                    dpsi: [fdx, fdy],
                    basis: fb,
                    rule: frule,
                    phi,
                    mass,
                    mass_chol,
                    is_boundary: face.is_boundary(),
                    endpoints: (a, b),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            index: e,
            k,
            basis,
            rule,
            psi,
            dpsi: [dx, dy],
            faces,
            measure: el.measure,
            diameter: el.diameter,
            mass_k,
            mass_k_chol,
            triangles: sub.element(e).to_vec(),
        })
    }

    /// `dim P^k`.
    pub fn nk(&self) -> usize {
        num_monomials(self.k)
    }

    /// `dim P^{k+1}`.
    pub fn nk1(&self) -> usize {
        num_monomials(self.k + 1)
    }

    /// `dim P^k(F)`.
    pub fn nf(&self) -> usize {
        self.k + 1
    }

    /// Local displacement unknowns: `2 nk` element plus `2 nf` per face.
    pub fn ndof(&self) -> usize {
        2 * self.nk() + 2 * self.nf() * self.faces.len()
    }

    /// Offset of component `c` of face `i` in the local displacement vector.
    pub fn face_offset(&self, i: usize, c: usize) -> usize {
        2 * self.nk() + (2 * i + c) * self.nf()
    }

    pub fn basis_k(&self) -> ElementBasis {
        ElementBasis::new(self.k, self.basis.center, self.basis.scale)
    }

    /// Trace of degree-`k` element polynomials on face `i`, as face coefficients (`nf x nk`).
    pub fn trace(&self, i: usize) -> DMatrix<f64> {
        let f = &self.faces[i];
        let nk = self.nk();
        let rhs = weighted_product(&f.phi, &f.psi.rows(0, nk).into_owned(), &f.rule.weights);
        f.mass_chol.solve(&rhs)
    }

    /// L2 projection of degree-`k + 1` element polynomials onto face `i` (`nf x nk1`).
    pub fn face_projection(&self, i: usize) -> DMatrix<f64> {
        let f = &self.faces[i];
        let rhs = weighted_product(&f.phi, &f.psi, &f.rule.weights);
        f.mass_chol.solve(&rhs)
    }

    /// L2 projection from `P^{k+1}(T)` onto `P^k(T)` (`nk x nk1`).
    pub fn element_projection(&self) -> DMatrix<f64> {
        let nk = self.nk();
        let rhs = weighted_product(&self.psi.rows(0, nk).into_owned(), &self.psi, &self.rule.weights);
        self.mass_k_chol.solve(&rhs)
    }
}

/// Builds the local data of every element in parallel (deterministic order).
pub fn build_local_elements(mesh: &PolyMesh, sub: &SubTriangulation, k: usize) -> Result<Vec<LocalElement>> {
    use rayon::prelude::*;
    (0..mesh.num_elements()).into_par_iter().map(|e| LocalElement::new(mesh, sub, e, k)).collect()
}
