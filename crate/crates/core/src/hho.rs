//! Local HHO elasticity operators: displacement reconstruction, discrete
//! divergence, stabilization and the local stiffness.
//!
//! Local displacement unknowns are ordered as the element block (x then y
//! component, `nk` each) followed by one block per face (x then y, `nf` each).
//! The reconstruction is vector-valued of degree `k + 1`, stored as the x then
//! y coefficient blocks of length `nk1`.

use nalgebra::{DMatrix, DVector, Point2};

use crate::basis::weighted_product;
use crate::element::LocalElement;
use crate::error::{Error, Result};
use crate::quadrature::{polygon_rule, segment_rule, QuadratureRule};

#[derive(Debug, Clone)]
pub struct ElasticityKernel {
    /// Reconstruction `r_T`, `2 nk1 x ndof`.
    pub reconstruction: DMatrix<f64>,
    /// Discrete divergence `D_T`, `nk x ndof`.
    pub divergence: DMatrix<f64>,
    /// Stabilization `s_T`, `ndof x ndof`.
    pub stabilization: DMatrix<f64>,
    /// `(grad_s r_T u, grad_s r_T v)_T`.
    pub consistency: DMatrix<f64>,
    /// `(D_T u, D_T v)_T`.
    pub div_gram: DMatrix<f64>,
    /// Symmetric-gradient Gram matrix on `P^{k+1}(T)^2`.
    pub strain_gram: DMatrix<f64>,
}

/// Symmetric gradient components `(xx, yy, xy)` of the vector basis, each `2 nk1 x nq`.
pub(crate) fn sym_grad(dpsi: &[DMatrix<f64>; 2]) -> [DMatrix<f64>; 3] {
    let (n, nq) = dpsi[0].shape();
    let mut exx = DMatrix::zeros(2 * n, nq);
    let mut eyy = DMatrix::zeros(2 * n, nq);
    let mut exy = DMatrix::zeros(2 * n, nq);
    exx.rows_mut(0, n).copy_from(&dpsi[0]);
    eyy.rows_mut(n, n).copy_from(&dpsi[1]);
    exy.rows_mut(0, n).copy_from(&(&dpsi[1] * 0.5));
    exy.rows_mut(n, n).copy_from(&(&dpsi[0] * 0.5));
    [exx, eyy, exy]
}

impl ElasticityKernel {
    pub fn build(le: &LocalElement) -> Result<Self> {
        let (nk, nk1, nf, ndof) = (le.nk(), le.nk1(), le.nf(), le.ndof());
        let w = &le.rule.weights;
        let [exx, eyy, exy] = sym_grad(&le.dpsi);
        let strain_gram = weighted_product(&exx, &exx, w)
            + weighted_product(&eyy, &eyy, w)
            + weighted_product(&exy, &exy, w) * 2.0;

        // right-hand side of the local traction problem
        let mut rhs = DMatrix::zeros(2 * nk1, ndof);
        for c in 0..2 {
            rhs.columns_mut(c * nk, nk).copy_from(&strain_gram.columns(c * nk1, nk));
        }
        // closure rows: mean value (2) and mean rotation (1)
        let mut closure = DMatrix::zeros(3, 2 * nk1);
        let mut closure_rhs = DMatrix::zeros(3, ndof);
        let inv = 1.0 / le.measure;
        let rot_scale = le.diameter / le.measure;
        for i in 0..nk1 {
            let m = le.rule.iter().enumerate().map(|(q, (_, wq))| wq * le.psi[(i, q)]).sum::<f64>();
            let dx: f64 = le.rule.iter().enumerate().map(|(q, (_, wq))| wq * le.dpsi[0][(i, q)]).sum();
            let dy: f64 = le.rule.iter().enumerate().map(|(q, (_, wq))| wq * le.dpsi[1][(i, q)]).sum();
            closure[(0, i)] = m * inv;
            closure[(1, nk1 + i)] = m * inv;
            closure[(2, i)] = -dy * rot_scale;
            closure[(2, nk1 + i)] = dx * rot_scale;
            if i < nk {
                closure_rhs[(0, i)] = m * inv;
                closure_rhs[(1, nk + i)] = m * inv;
            }
        }
        for (fi, f) in le.faces.iter().enumerate() {
            let fw = &f.rule.weights;
            let [fxx, fyy, fxy] = sym_grad(&f.dpsi);
            let (nx, ny) = (f.normal.x, f.normal.y);
            let tx = &fxx * nx + &fxy * ny;
            let ty = &fxy * nx + &fyy * ny;
            let psi_k = f.psi.rows(0, nk).into_owned();
            for (c, t) in [(0, &tx), (1, &ty)] {
                let vol = weighted_product(t, &psi_k, fw);
                let mut cols = rhs.columns_mut(c * nk, nk);
                cols -= vol;
                rhs.columns_mut(le.face_offset(fi, c), nf).copy_from(&weighted_product(t, &f.phi, fw));
            }
            let phi_int: Vec<f64> = (0..nf).map(|j| f.phi.row(j).iter().zip(fw).map(|(a, b)| a * b).sum()).collect();
            for j in 0..nf {
                closure_rhs[(2, le.face_offset(fi, 0) + j)] = -ny * phi_int[j] * rot_scale;
                closure_rhs[(2, le.face_offset(fi, 1) + j)] = nx * phi_int[j] * rot_scale;
            }
        }
        let nb = 2 * nk1 + 3;
        let mut bordered = DMatrix::zeros(nb, nb);
        bordered.view_mut((0, 0), (2 * nk1, 2 * nk1)).copy_from(&strain_gram);
        bordered.view_mut((2 * nk1, 0), (3, 2 * nk1)).copy_from(&closure);
        bordered.view_mut((0, 2 * nk1), (2 * nk1, 3)).copy_from(&closure.transpose());
        let mut full_rhs = DMatrix::zeros(nb, ndof);
        full_rhs.rows_mut(0, 2 * nk1).copy_from(&rhs);
        full_rhs.rows_mut(2 * nk1, 3).copy_from(&closure_rhs);
        let lu = bordered.lu();
        let sol = lu.solve(&full_rhs).ok_or(Error::SingularReconstruction { element: le.index })?;
        if !sol.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularReconstruction { element: le.index });
        }
        let reconstruction = sol.rows(0, 2 * nk1).into_owned();

        let divergence = le.mass_k_chol.solve(&divergence_rhs(le));

        let proj_t = le.element_projection();
        let mut stabilization = DMatrix::zeros(ndof, ndof);
        for (fi, f) in le.faces.iter().enumerate() {
            let proj_f = le.face_projection(fi);
            let trace = le.trace(fi);
            let mut delta = DMatrix::zeros(2 * nf, ndof);
            for c in 0..2 {
                let r_c = reconstruction.rows(c * nk1, nk1);
                let mut elem_res = &proj_t * r_c;
                let mut sel = elem_res.columns_mut(c * nk, nk);
                for i in 0..nk {
                    sel[(i, i)] -= 1.0;
                }
                let mut d = &proj_f * r_c - &trace * elem_res;
                let off = le.face_offset(fi, c);
                for j in 0..nf {
                    d[(j, off + j)] -= 1.0;
                }
                delta.rows_mut(c * nf, nf).copy_from(&d);
            }
            let mut mf = DMatrix::zeros(2 * nf, 2 * nf);
            mf.view_mut((0, 0), (nf, nf)).copy_from(&f.mass);
            mf.view_mut((nf, nf), (nf, nf)).copy_from(&f.mass);
            stabilization += delta.transpose() * mf * &delta / f.h;
        }

        let consistency = reconstruction.transpose() * &strain_gram * &reconstruction;
        let div_gram = divergence.transpose() * &le.mass_k * &divergence;
        Ok(Self { reconstruction, divergence, stabilization, consistency, div_gram, strain_gram })
    }

    /// `A(T) = 2 mu (G_T + S_T) + lambda D_T^T M D_T`.
    pub fn stiffness(&self, mu: f64, lambda: f64) -> DMatrix<f64> {
        (&self.consistency + &self.stabilization) * (2.0 * mu) + &self.div_gram * lambda
    }
}

/// `(v_T, -grad q)_T + sum_F (v_F . n_TF, q)_F` for all `q` in `P^k(T)`, `nk x ndof`.
pub(crate) fn divergence_rhs(le: &LocalElement) -> DMatrix<f64> {
    let (nk, nf, ndof) = (le.nk(), le.nf(), le.ndof());
    let w = &le.rule.weights;
    let psi_k = le.psi.rows(0, nk).into_owned();
    let mut rhs = DMatrix::zeros(nk, ndof);
    for c in 0..2 {
        let dq = le.dpsi[c].rows(0, nk).into_owned();
        rhs.columns_mut(c * nk, nk).copy_from(&(-weighted_product(&dq, &psi_k, w)));
    }
    for (fi, f) in le.faces.iter().enumerate() {
        let m = weighted_product(&f.psi.rows(0, nk).into_owned(), &f.phi, &f.rule.weights);
        for c in 0..2 {
            rhs.columns_mut(le.face_offset(fi, c), nf).copy_from(&(&m * f.normal[c]));
        }
    }
    rhs
}

/// Volume form `(div v_T, q)_T + sum_F ((v_F - v_T) . n_TF, q)_F`, `nk x ndof`.
pub fn divergence_rhs_volume_form(le: &LocalElement) -> DMatrix<f64> {
    let (nk, nf, ndof) = (le.nk(), le.nf(), le.ndof());
    let psi_k = le.psi.rows(0, nk).into_owned();
    let mut rhs = DMatrix::zeros(nk, ndof);
    for c in 0..2 {
        let dv = le.dpsi[c].rows(0, nk).into_owned();
        rhs.columns_mut(c * nk, nk).copy_from(&weighted_product(&psi_k, &dv, &le.rule.weights));
    }
    for (fi, f) in le.faces.iter().enumerate() {
        let fq = f.psi.rows(0, nk).into_owned();
        let face_part = weighted_product(&fq, &f.phi, &f.rule.weights);
        let elem_part = weighted_product(&fq, &fq, &f.rule.weights);
        for c in 0..2 {
            let n = f.normal[c];
            let mut cols = rhs.columns_mut(le.face_offset(fi, c), nf);
            cols += &face_part * n;
            let mut ecols = rhs.columns_mut(c * nk, nk);
            ecols -= &elem_part * n;
        }
    }
    rhs
}

/// Local matrix of `|grad_s v_T|^2_T + sum_F h_F^{-1} |v_F - v_T|^2_F`.
pub fn strain_seminorm_matrix(le: &LocalElement, kernel: &ElasticityKernel) -> DMatrix<f64> {
    let (nk, nk1, nf, ndof) = (le.nk(), le.nk1(), le.nf(), le.ndof());
    let mut m = DMatrix::zeros(ndof, ndof);
    for c in 0..2 {
        for d in 0..2 {
            m.view_mut((c * nk, d * nk), (nk, nk))
                .copy_from(&kernel.strain_gram.view((c * nk1, d * nk1), (nk, nk)));
        }
    }
    for (fi, f) in le.faces.iter().enumerate() {
        let trace = le.trace(fi);
        let mut jump = DMatrix::zeros(2 * nf, ndof);
        for c in 0..2 {
            jump.view_mut((c * nf, c * nk), (nf, nk)).copy_from(&(-&trace));
            let off = le.face_offset(fi, c);
            for j in 0..nf {
                jump[(c * nf + j, off + j)] = 1.0;
            }
        }
        let mut mf = DMatrix::zeros(2 * nf, 2 * nf);
        mf.view_mut((0, 0), (nf, nf)).copy_from(&f.mass);
        mf.view_mut((nf, nf), (nf, nf)).copy_from(&f.mass);
        m += jump.transpose() * mf * jump / f.h;
    }
    m
}

/// Local interpolate `I_T w` of a vector field (element projection onto `P^k`,
/// face projections onto `P^k(F)`), using the operator quadrature.
pub fn interpolate(le: &LocalElement, w: impl Fn(&Point2<f64>) -> [f64; 2]) -> DVector<f64> {
    let face_rules: Vec<_> = le.faces.iter().map(|f| f.rule.clone()).collect();
    interpolate_on(le, &le.rule, &face_rules, w)
}

/// As [`interpolate`], with quadrature exact to `degree` for the moments of `w`.
pub fn interpolate_with_degree(
    le: &LocalElement,
    degree: usize,
    w: impl Fn(&Point2<f64>) -> [f64; 2],
) -> DVector<f64> {
    let rule = polygon_rule(&le.triangles, degree);
    let face_rules: Vec<_> = le.faces.iter().map(|f| segment_rule(&f.endpoints.0, &f.endpoints.1, degree)).collect();
    interpolate_on(le, &rule, &face_rules, w)
}

fn interpolate_on(
    le: &LocalElement,
    rule: &QuadratureRule,
    face_rules: &[QuadratureRule],
    w: impl Fn(&Point2<f64>) -> [f64; 2],
) -> DVector<f64> {
    let (nk, nf) = (le.nk(), le.nf());
    let mut v = DVector::zeros(le.ndof());
    let bk = le.basis_k();
    let mut vals = vec![0.0; nk];
    let mut b = [DVector::zeros(nk), DVector::zeros(nk)];
    for (p, wq) in rule.iter() {
        bk.eval_into(p, &mut vals);
        let wp = w(p);
        for c in 0..2 {
            for (bi, vi) in b[c].iter_mut().zip(&vals) {
                *bi += wq * wp[c] * vi;
            }
        }
    }
    for c in 0..2 {
        v.rows_mut(c * nk, nk).copy_from(&le.mass_k_chol.solve(&b[c]));
    }
    let mut fvals = vec![0.0; nf];
    for (fi, (f, frule)) in le.faces.iter().zip(face_rules).enumerate() {
        let mut b = [DVector::zeros(nf), DVector::zeros(nf)];
        for (p, wq) in frule.iter() {
            f.basis.eval_into(p, &mut fvals);
            let wp = w(p);
            for c in 0..2 {
                for (bi, vi) in b[c].iter_mut().zip(&fvals) {
                    *bi += wq * wp[c] * vi;
                }
            }
        }
        for c in 0..2 {
            v.rows_mut(le.face_offset(fi, c), nf).copy_from(&f.mass_chol.solve(&b[c]));
        }
    }
    v
}
