//! Symmetric weighted interior penalty (SWIP) discretization of the Darcy operator.
//!
//! With `[[q]] = q_T1 - q_T2` and `{kappa grad q}_w = w_T1 kappa_T1 grad q_T1 + w_T2 kappa_T2 grad q_T2`:
//!
//! ```text
//! c_h(p, q) = sum_T (kappa grad p, grad q)_T
//!           - sum_F [ ({kappa grad p}_w . n_F, [[q]])_F + ([[p]], {kappa grad q}_w . n_F)_F
//!                     - sigma lambda_F / h_F ([[p]], [[q]])_F ]
//! ```
//!
//! over interior faces (and boundary faces, with one-sided traces, when the
//! pressure is prescribed there).

use nalgebra::{DMatrix, DVector};

use crate::basis::{num_monomials, weighted_product};
use crate::element::{LocalElement, LocalFace};
use crate::error::{Error, Result};
use crate::mesh::PolyMesh;
use crate::sparse::{matvec, SparseMatrix, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceWeights {
    /// `(w_T1, w_T2)`; `(1, 0)` on boundary faces.
    pub omega: [f64; 2],
    /// Harmonic-type permeability `2 k1 k2 / (k1 + k2)` (`k1` on boundary faces).
    pub lambda: f64,
}

impl FaceWeights {
    pub fn new(k1: f64, k2: f64) -> Self {
        Self { omega: [k2 / (k1 + k2), k1 / (k1 + k2)], lambda: 2.0 * k1 * k2 / (k1 + k2) }
    }
}

pub fn face_weights(mesh: &PolyMesh, kappa: &[f64]) -> Vec<FaceWeights> {
    mesh.faces()
        .iter()
        .map(|f| match f.neighbor {
            Some(t2) => FaceWeights::new(kappa[f.owner], kappa[t2]),
            None => FaceWeights { omega: [1.0, 0.0], lambda: kappa[f.owner] },
        })
        .collect()
}

/// Position of global face `f` among the faces of `le`.
pub(crate) fn local_index(le: &LocalElement, f: usize) -> usize {
    le.faces.iter().position(|lf| lf.global == f).expect("face belongs to element")
}

/// Normal derivative `grad psi . n` of the degree-`k` basis at the face points, `nk x nq`.
fn normal_derivative(lf: &LocalFace, nk: usize, n: &nalgebra::Vector2<f64>) -> DMatrix<f64> {
    lf.dpsi[0].rows(0, nk) * n.x + lf.dpsi[1].rows(0, nk) * n.y
}

/// Assembles `c_h` on the pressure unknowns (`|T| nk` square).
///
/// `dirichlet` adds the boundary-face terms of a homogeneous pressure condition.
pub fn assemble_ch(
    mesh: &PolyMesh,
    locals: &[LocalElement],
    kappa: &[f64],
    sigma: f64,
    dirichlet: bool,
) -> Result<SparseMatrix> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositivePenalty(sigma));
    }
    let k = locals[0].k;
    let nk = num_monomials(k);
    let n = mesh.num_elements() * nk;
    let mut t = TripletBuilder::new(n, n);
    let dofs = |e: usize| (e * nk..(e + 1) * nk).collect::<Vec<_>>();
    for (e, le) in locals.iter().enumerate() {
        let dx = le.dpsi[0].rows(0, nk).into_owned();
        let dy = le.dpsi[1].rows(0, nk).into_owned();
        let w = &le.rule.weights;
        let vol = (weighted_product(&dx, &dx, w) + weighted_product(&dy, &dy, w)) * kappa[e];
        t.add_block(&dofs(e), &dofs(e), &vol, 1.0);
    }
    let weights = face_weights(mesh, kappa);
    for (f, face) in mesh.faces().iter().enumerate() {
        let t1 = face.owner;
        let le1 = &locals[t1];
        let lf1 = &le1.faces[local_index(le1, f)];
        let nrm = face.normal;
        let wts = &lf1.rule.weights;
        let pen = sigma * weights[f].lambda / face.measure;
        match face.neighbor {
            Some(t2) => {
                let le2 = &locals[t2];
                let lf2 = &le2.faces[local_index(le2, f)];
                let mut jump = DMatrix::zeros(2 * nk, wts.len());
                jump.rows_mut(0, nk).copy_from(&lf1.psi.rows(0, nk));
                jump.rows_mut(nk, nk).copy_from(&(-lf2.psi.rows(0, nk)));
                let mut avg = DMatrix::zeros(2 * nk, wts.len());
                avg.rows_mut(0, nk).copy_from(&(normal_derivative(lf1, nk, &nrm) * (weights[f].omega[0] * kappa[t1])));
                avg.rows_mut(nk, nk).copy_from(&(normal_derivative(lf2, nk, &nrm) * (weights[f].omega[1] * kappa[t2])));
                let aj = weighted_product(&avg, &jump, wts);
                let local = -&aj - aj.transpose() + weighted_product(&jump, &jump, wts) * pen;
                let idx: Vec<usize> = dofs(t1).into_iter().chain(dofs(t2)).collect();
                t.add_block(&idx, &idx, &local, 1.0);
            }
            None if dirichlet => {
                let jump = lf1.psi.rows(0, nk).into_owned();
                let avg = normal_derivative(lf1, nk, &nrm) * kappa[t1];
                let aj = weighted_product(&avg, &jump, wts);
                let local = -&aj - aj.transpose() + weighted_product(&jump, &jump, wts) * pen;
                t.add_block(&dofs(t1), &dofs(t1), &local, 1.0);
            }
            None => {}
        }
    }
    t.build()
}

/// `sqrt(c_h(q, q))`; a clearly negative value means the penalty is too small.
pub fn ch_seminorm(c: &SparseMatrix, q: &[f64]) -> Result<f64> {
    let cq = matvec(c, q);
    let v: f64 = cq.iter().zip(q).map(|(a, b)| a * b).sum();
    let scale = crate::sparse::norm(&cq) * crate::sparse::norm(q);
    if v < -1e-12 * scale.max(1.0) {
        return Err(Error::IndefinitePenalty(v));
    }
    Ok(v.max(0.0).sqrt())
}

/// Lifting of pressure jumps into `P^{k-1}(T)^2`:
/// `(R q, xi)_T = sum_{F in F_T interior} ([[q]], w_T kappa_T xi . n_F)_F`.
/// For each element, the list of `(element, 2 n_{k-1} x nk)` blocks acting on that element's pressure.
#[derive(Debug, Clone)]
pub struct Lifting {
    pub blocks: Vec<Vec<(usize, DMatrix<f64>)>>,
    pub degree: usize,
}

impl Lifting {
    /// Coefficients (x block then y block) of `R q` on element `e`.
    pub fn apply(&self, e: usize, q: &[f64], nk: usize) -> DVector<f64> {
        let m = num_monomials(self.degree);
        let mut out = DVector::zeros(2 * m);
        for (t, b) in &self.blocks[e] {
            out += b * DVector::from_column_slice(&q[t * nk..(t + 1) * nk]);
        }
        out
    }
}

pub fn assemble_lifting(mesh: &PolyMesh, locals: &[LocalElement], kappa: &[f64]) -> Lifting {
    let k = locals[0].k;
    let (nk, nl) = (num_monomials(k), num_monomials(k - 1));
    let weights = face_weights(mesh, kappa);
    let blocks = locals
        .iter()
        .enumerate()
        .map(|(e, le)| {
            let psi_l = le.psi.rows(0, nl).into_owned();
            let ml = weighted_product(&psi_l, &psi_l, &le.rule.weights);
            let chol = ml.cholesky().expect("mass matrix is positive definite");
            let mut out: Vec<(usize, DMatrix<f64>)> = Vec::new();
            let mut push = |t: usize, m: DMatrix<f64>| match out.iter_mut().find(|(s, _)| *s == t) {
                Some((_, b)) => *b += m,
                None => out.push((t, m)),
            };
            for lf in &le.faces {
                let face = mesh.face(lf.global);
                let Some(t2) = face.neighbor else { continue };
                let (side, other, sign) = if face.owner == e { (0, t2, 1.0) } else { (1, face.owner, -1.0) };
                let scale = weights[lf.global].omega[side] * kappa[e];
                let wts = &lf.rule.weights;
                let xi = lf.psi.rows(0, nl).into_owned();
                let q_self = lf.psi.rows(0, nk).into_owned();
                let le_o = &locals[other];
                let q_other = le_o.faces[local_index(le_o, lf.global)].psi.rows(0, nk).into_owned();
                for c in 0..2 {
                    let nc = face.normal[c] * scale;
                    let mself = weighted_product(&xi, &q_self, wts) * (nc * sign);
                    let mother = weighted_product(&xi, &q_other, wts) * (-nc * sign);
                    let mut bs = DMatrix::zeros(2 * nl, nk);
                    bs.rows_mut(c * nl, nl).copy_from(&chol.solve(&mself));
                    push(e, bs);
                    let mut bo = DMatrix::zeros(2 * nl, nk);
                    bo.rows_mut(c * nl, nl).copy_from(&chol.solve(&mother));
                    push(other, bo);
                }
            }
            out
        })
        .collect();
    Lifting { blocks, degree: k - 1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::build_local_elements;
    use crate::mesh::{generate_cartesian, subtriangulate};
    use crate::sparse::to_dense;

    #[test]
    fn weights_for_contrasting_permeability() {
        let w = FaceWeights::new(1.0, 3.0);
        assert_eq!(w.omega, [0.75, 0.25]);
        assert_eq!(w.lambda, 1.5);
        let h = FaceWeights::new(2.0, 2.0);
        assert_eq!(h.omega, [0.5, 0.5]);
        assert_eq!(h.lambda, 2.0);
        let big = FaceWeights::new(1e-6, 1.0);
        assert!((big.lambda - 2e-6).abs() < 1e-11);
    }

    #[test]
    fn two_cell_coercivity_and_constant_kernel() {
        let mesh = PolyMesh::from_polygons(
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0]],
            vec![vec![0, 1, 4, 3], vec![1, 2, 5, 4]],
            None,
        )
        .unwrap();
        let sub = subtriangulate(&mesh).unwrap();
        let locals = build_local_elements(&mesh, &sub, 1).unwrap();
        let c = assemble_ch(&mesh, &locals, &[1.0, 3.0], crate::problem::default_penalty(&mesh, 1), false).unwrap();
        let d = to_dense(&c);
        assert!((&d - d.transpose()).amax() < 1e-12);
        let one = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        assert!(crate::sparse::matvec(&c, &one).iter().all(|v| v.abs() < 1e-12));
        let eig = d.symmetric_eigen();
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0].abs() < 1e-12 && ev[1] > 1e-6);
    }

    #[test]
    fn tiny_penalty_is_detected() {
        let mesh = generate_cartesian(3).unwrap();
        let sub = subtriangulate(&mesh).unwrap();
        let locals = build_local_elements(&mesh, &sub, 2).unwrap();
        let kappa = vec![1.0; mesh.num_elements()];
        let c = assemble_ch(&mesh, &locals, &kappa, 0.05, false).unwrap();
        let eig = to_dense(&c).symmetric_eigen();
        let (i, _) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let q: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        assert!(matches!(ch_seminorm(&c, &q), Err(Error::IndefinitePenalty(_))));
        assert!(assemble_ch(&mesh, &locals, &kappa, 0.0, false).is_err());
    }
}
