//! Conservative reformulation: boundary operator `L_T`, discrete stress,
//! numerical tractions and mass fluxes, and the local balance residuals.

use std::io::Write;

use nalgebra::{DMatrix, DVector, Point2};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{face_mass_matrix, num_monomials, weighted_product, ElementBasis, FaceBasis};
use crate::element::LocalElement;
use crate::error::Result;
use crate::hho::ElasticityKernel;
use crate::problem::BiotData;
use crate::quadrature::segment_rule;
use crate::system::{Discretization, Solution};
use crate::timestepping::TransientState;

/// `L_T` on broken face polynomials (`2 nf` coefficients per face) and its `L2(dT)` adjoint.
#[derive(Debug, Clone)]
pub struct BoundaryOperator {
    pub l: DMatrix<f64>,
    pub adjoint: DMatrix<f64>,
    /// Block-diagonal face mass matrix on `dT`.
    pub mass: DMatrix<f64>,
    /// `v -> v_dT - v_T|dT` on local DOFs.
    pub jump: DMatrix<f64>,
}

pub fn boundary_operator(le: &LocalElement, kernel: &ElasticityKernel) -> BoundaryOperator {
    let (nk, nk1, nf) = (le.nk(), le.nk1(), le.nf());
    let nt = 2 * nk;
    let nb = le.ndof() - nt;
    // r_T(0, phi)
    let r0 = kernel.reconstruction.columns(nt, nb);
    let pt = le.element_projection();
    let mut l = DMatrix::identity(nb, nb);
    let mut mass = DMatrix::zeros(nb, nb);
    let mut jump = DMatrix::zeros(nb, le.ndof());
    for (i, lf) in le.faces.iter().enumerate() {
        let pf = le.face_projection(i);
        let tr = le.trace(i);
        let tpt = &tr * &pt;
        for c in 0..2 {
            let row = le.face_offset(i, c) - nt;
            let rc = r0.rows(c * nk1, nk1);
            let block = -(&pf * rc) + &tpt * rc;
            let mut lr = l.rows_mut(row, nf);
            lr += block;
            mass.view_mut((row, row), (nf, nf)).copy_from(&lf.mass);
            jump.view_mut((row, nt + row), (nf, nf)).fill_with_identity();
            jump.view_mut((row, c * nk), (nf, nk)).copy_from(&(-&tr));
        }
    }
    let chol = mass.clone().cholesky().expect("face mass matrices are positive definite");
    let adjoint = chol.solve(&(l.transpose() * &mass));
    BoundaryOperator { l, adjoint, mass, jump }
}

/// `h_dT^{-1}` as a diagonal on the broken face coefficients.
fn inverse_face_size(le: &LocalElement) -> DVector<f64> {
    let nf = le.nf();
    DVector::from_iterator(2 * nf * le.faces.len(), le.faces.iter().flat_map(|lf| std::iter::repeat_n(1.0 / lf.h, 2 * nf)))
}

/// `s_T(w, v) = sum_F (L_T*(h_F^{-1} L_T(w_dT - w_T)), v_F - v_T)_F` as a matrix.
pub fn stabilization_from_boundary_operator(le: &LocalElement, op: &BoundaryOperator) -> DMatrix<f64> {
    let hinv = DMatrix::from_diagonal(&inverse_face_size(le));
    op.jump.transpose() * &op.mass * &op.adjoint * hinv * &op.l * &op.jump
}

/// `S_T v = 2 mu grad_s r_T v + lambda (D_T v) I` as `[xx; yy; xy]` coefficient blocks (`3 nk x ndof`).
pub fn discrete_stress(le: &LocalElement, kernel: &ElasticityKernel, mu: f64, lambda: f64) -> DMatrix<f64> {
    let nk = le.nk();
    let nk1 = le.nk1();
    let dx = le.basis.derivative_matrix(0);
    let dy = le.basis.derivative_matrix(1);
    let r = &kernel.reconstruction;
    let rx = r.rows(0, nk1);
    let ry = r.rows(nk1, nk1);
    let d = &kernel.divergence;
    let mut s = DMatrix::zeros(3 * nk, le.ndof());
    s.rows_mut(0, nk).copy_from(&((&dx * rx) * (2.0 * mu) + d * lambda));
    s.rows_mut(nk, nk).copy_from(&((&dy * ry) * (2.0 * mu) + d * lambda));
    s.rows_mut(2 * nk, nk).copy_from(&((&dy * rx + &dx * ry) * mu));
    s
}

/// Per-element data for flux evaluation.
pub struct FluxOperators {
    pub boundary: Vec<BoundaryOperator>,
    pub stress: Vec<DMatrix<f64>>,
}

impl FluxOperators {
    pub fn new(disc: &Discretization) -> Self {
        let (mu, lambda) = (disc.physics.mu, disc.physics.lambda);
        let boundary = disc.locals.par_iter().zip(&disc.kernels).map(|(le, k)| boundary_operator(le, k)).collect();
        let stress =
            disc.locals.par_iter().zip(&disc.kernels).map(|(le, k)| discrete_stress(le, k, mu, lambda)).collect();
        Self { boundary, stress }
    }

    /// Numerical tractions `Phi_TF` of element `e` (face coefficients, x block then y block, per local face).
    pub fn tractions(&self, disc: &Discretization, e: usize, u: &DVector<f64>, p: &[f64]) -> Vec<DVector<f64>> {
        let le = &disc.locals[e];
        let (nk, nf) = (le.nk(), le.nf());
        let nt = 2 * nk;
        let op = &self.boundary[e];
        let sigma = &self.stress[e] * u;
        let hinv = inverse_face_size(le);
        let stab = &op.adjoint * (op.l.clone() * (&op.jump * u)).component_mul(&hinv) * (2.0 * disc.physics.mu);
        le.faces
            .iter()
            .enumerate()
            .map(|(i, lf)| {
                let psi = lf.psi.rows(0, nk);
                let sxx = psi.transpose() * sigma.rows(0, nk);
                let syy = psi.transpose() * sigma.rows(nk, nk);
                let sxy = psi.transpose() * sigma.rows(2 * nk, nk);
                let pv = psi.transpose() * DVector::from_column_slice(p);
                let n = lf.normal;
                let tx = (&sxx - &pv) * n.x + &sxy * n.y;
                let ty = &sxy * n.x + (&syy - &pv) * n.y;
                let mut out = DVector::zeros(2 * nf);
                for (c, tc) in [tx, ty].into_iter().enumerate() {
                    let rhs = &lf.phi * tc.component_mul(&DVector::from_column_slice(&lf.rule.weights));
                    let coef = lf.mass_chol.solve(&rhs);
                    let row = le.face_offset(i, c) - nt;
                    out.rows_mut(c * nf, nf).copy_from(&(coef + stab.rows(row, nf)));
                }
                out
            })
            .collect()
    }

    /// Residual of the local equilibrium `(S_T u - p I, grad_s v_T) - sum_F (Phi_TF, v_T)_F - (f, v_T)`,
    /// together with the magnitude of its largest term.
    pub fn equilibrium_residual(
        &self,
        disc: &Discretization,
        e: usize,
        u: &DVector<f64>,
        p: &[f64],
        load: &DVector<f64>,
    ) -> (DVector<f64>, f64) {
        let le = &disc.locals[e];
        let nk = le.nk();
        let nf = le.nf();
        let sigma = &self.stress[e] * u;
        let w = DVector::from_column_slice(&le.rule.weights);
        let psi = le.psi.rows(0, nk);
        let dpx = le.dpsi[0].rows(0, nk);
        let dpy = le.dpsi[1].rows(0, nk);
        let pv = psi.transpose() * DVector::from_column_slice(p);
        let sxx = (psi.transpose() * sigma.rows(0, nk) - &pv).component_mul(&w);
        let syy = (psi.transpose() * sigma.rows(nk, nk) - &pv).component_mul(&w);
        let sxy = (psi.transpose() * sigma.rows(2 * nk, nk)).component_mul(&w);
        let mut vol = DVector::zeros(2 * nk);
        vol.rows_mut(0, nk).copy_from(&(dpx * &sxx + dpy * &sxy));
        vol.rows_mut(nk, nk).copy_from(&(dpx * &sxy + dpy * &syy));
        let mut surf = DVector::zeros(2 * nk);
        for (i, phi) in self.tractions(disc, e, u, p).iter().enumerate() {
            let lf = &le.faces[i];
            let tr_mass = weighted_product(&lf.psi.rows(0, nk).into_owned(), &lf.phi, &lf.rule.weights);
            for c in 0..2 {
                let mut s = surf.rows_mut(c * nk, nk);
                s += &tr_mass * phi.rows(c * nf, nf);
            }
        }
        let scale = vol.amax().max(surf.amax()).max(load.amax());
        (vol - surf - load, scale)
    }
}

/// Mass flux `phi_TF` on face `f` seen from `e`, given `delta_t u_F` on that face.
pub fn mass_flux(disc: &Discretization, e: usize, f: usize, du_face: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
    let face = disc.mesh.face(f);
    let k = disc.k;
    let nk = disc.nk();
    let nf = disc.nf();
    let basis = FaceBasis::new(face, k);
    let Some(t2) = face.neighbor else {
        return DVector::zeros(nf);
    };
    let (a, b) = disc.mesh.face_endpoints(f);
    let rule = segment_rule(&a, &b, 2 * k + 2);
    let sign = if face.owner == e { 1.0 } else { -1.0 };
    let n_f = face.normal;
    let n_tf = n_f * sign;
    let wts = disc.weights[f];
    let sigma_term = disc.sigma * wts.lambda / face.measure;
    let sides = [face.owner, t2];
    let bases = sides.map(|t| disc.locals[t].basis_k());
    let coef = |t: usize| &p.as_slice()[t * nk..(t + 1) * nk];
    let mut rhs = DVector::zeros(nf);
    let mut vals = vec![0.0; nf];
    for (x, w) in rule.iter() {
        basis.eval_into(x, &mut vals);
        let dux = basis.evaluate(&du_face.as_slice()[..nf], x);
        let duy = basis.evaluate(&du_face.as_slice()[nf..], x);
        let mut avg = [0.0; 2];
        let mut pv = [0.0; 2];
        for s in 0..2 {
            let t = sides[s];
            let g = grad_at(&bases[s], coef(t), x);
            avg[0] += wts.omega[s] * disc.kappa[t] * g[0];
            avg[1] += wts.omega[s] * disc.kappa[t] * g[1];
            pv[s] = bases[s].evaluate(coef(t), x);
        }
        let jump = pv[0] - pv[1];
        let phi = (avg[0] - dux) * n_tf.x + (avg[1] - duy) * n_tf.y - sigma_term * jump * n_tf.dot(&n_f);
        for j in 0..nf {
            rhs[j] += w * phi * vals[j];
        }
    }
    let mass = face_mass_matrix(&basis, &rule);
    mass.cholesky().expect("face mass matrix is positive definite").solve(&rhs)
}

fn grad_at(basis: &ElementBasis, c: &[f64], x: &Point2<f64>) -> [f64; 2] {
    let n = c.len();
    let mut dx = vec![0.0; basis.dim()];
    let mut dy = vec![0.0; basis.dim()];
    basis.grad_into(x, &mut dx, &mut dy);
    let gx = (0..n).map(|i| c[i] * dx[i]).sum();
    let gy = (0..n).map(|i| c[i] * dy[i]).sum();
    [gx, gy]
}

/// Local mass balance residual on element `e`:
/// `(c0 dt p, q) - (dt u_T - kappa grad p + R p, grad q) - sum_F (phi_TF, q)_F + lambda (1, q) - G_T`.
///
/// The returned scale also includes the undifferenced terms of every level in `levels`, each
/// multiplied by the absolute value of its backward-difference weight, since cancellation in
/// `dt` sets the attainable precision.
#[allow(clippy::too_many_arguments)]
pub fn mass_balance_residual(
    disc: &Discretization,
    e: usize,
    sol: &Solution,
    du_elem: &DVector<f64>,
    du_faces: &[DVector<f64>],
    dp: &DVector<f64>,
    flow_source: &DVector<f64>,
    levels: &[(f64, &Solution)],
) -> (DVector<f64>, f64) {
    let le = &disc.locals[e];
    let nk = le.nk();
    let p = &sol.pressure;
    let pe = p.rows(e * nk, nk);
    let w = DVector::from_column_slice(&le.rule.weights);
    let psi = le.psi.rows(0, nk);
    let dpx = le.dpsi[0].rows(0, nk);
    let dpy = le.dpsi[1].rows(0, nk);
    let kappa = disc.kappa[e];
    let lifted = disc.lifting.apply(e, p.as_slice(), nk);
    let nl = num_monomials(disc.k - 1);
    let psil = le.psi.rows(0, nl);
    let rx = psil.transpose() * lifted.rows(0, nl);
    let ry = psil.transpose() * lifted.rows(nl, nl);
    let vx = psi.transpose() * du_elem.rows(0, nk) - (dpx.transpose() * pe) * kappa + rx;
    let vy = psi.transpose() * du_elem.rows(nk, nk) - (dpy.transpose() * pe) * kappa + ry;
    let vol = dpx * vx.component_mul(&w) + dpy * vy.component_mul(&w);
    let storage = &le.mass_k * dp.rows(e * nk, nk) * disc.physics.c0;
    let bk = le.basis_k();
    let nf = le.nf();
    let mut surf = DVector::zeros(nk);
    for lf in &le.faces {
        let phi = mass_flux(disc, e, lf.global, &du_faces[lf.global], p);
        let basis = FaceBasis::new(disc.mesh.face(lf.global), disc.k);
        let (a, b) = disc.mesh.face_endpoints(lf.global);
        for (x, wq) in segment_rule(&a, &b, 2 * disc.k + 2).iter() {
            surf += bk.eval(x) * (wq * basis.evaluate(phi.as_slice(), x));
        }
    }
    // magnitudes of the terms entering the backward differences, level by level
    let differenced: f64 = levels
        .iter()
        .map(|&(weight, level)| {
            let ut = &level.element_displacement[e];
            let ux = (psi.transpose() * ut.rows(0, nk)).component_mul(&w);
            let uy = (psi.transpose() * ut.rows(nk, nk)).component_mul(&w);
            let vol_u = dpx * ux + dpy * uy;
            let storage_u = &le.mass_k * level.pressure.rows(e * nk, nk) * disc.physics.c0;
            let mut surf_u = DVector::zeros(nk);
            for lf in &le.faces {
                let basis = FaceBasis::new(disc.mesh.face(lf.global), disc.k);
                let uf = level.face_values[lf.global].as_slice();
                let (a, b) = disc.mesh.face_endpoints(lf.global);
                for (x, wq) in segment_rule(&a, &b, 2 * disc.k + 2).iter() {
                    let un = basis.evaluate(&uf[..nf], x) * lf.normal.x + basis.evaluate(&uf[nf..], x) * lf.normal.y;
                    surf_u += bk.eval(x) * (wq * un);
                }
            }
            weight.abs() * vol_u.amax().max(storage_u.amax()).max(surf_u.amax())
        })
        .sum();
    let mult = disc.mean.rows(e * nk, nk) * sol.multiplier;
    let g = flow_source.rows(e * nk, nk);
    let scale = [storage.amax(), vol.amax(), surf.amax(), g.amax(), differenced].into_iter().fold(0.0, f64::max);
    (storage - vol - surf + mult - g, scale)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct FluxReport {
    pub step: usize,
    pub t: f64,
    /// Per interior face.
    pub traction_mismatch: Vec<f64>,
    pub mass_flux_mismatch: Vec<f64>,
    /// Per element.
    pub equilibrium: Vec<f64>,
    /// Per element without boundary faces; `None` elsewhere.
    pub mass_balance: Vec<Option<f64>>,
    pub traction_scale: f64,
    pub flux_scale: f64,
    pub equilibrium_scale: f64,
    pub mass_balance_scale: f64,
}

impl FluxReport {
    pub fn max_traction_mismatch(&self) -> f64 {
        self.traction_mismatch.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_mass_flux_mismatch(&self) -> f64 {
        self.mass_flux_mismatch.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_equilibrium(&self) -> f64 {
        self.equilibrium.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_mass_balance(&self) -> f64 {
        self.mass_balance.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Largest of the four residual families, each relative to its own scale.
    pub fn max_relative(&self) -> f64 {
        let rel = |r: f64, s: f64| if s > 0.0 { r / s } else { r };
        [
            rel(self.max_traction_mismatch(), self.traction_scale),
            rel(self.max_mass_flux_mismatch(), self.flux_scale),
            rel(self.max_equilibrium(), self.equilibrium_scale),
            rel(self.max_mass_balance(), self.mass_balance_scale),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn write_csv_header(mut out: impl Write) -> Result<()> {
        writeln!(
            out,
            "step,t,max_traction_mismatch,max_mass_flux_mismatch,max_equilibrium,max_mass_balance,max_relative"
        )?;
        Ok(())
    }

    pub fn write_csv_row(&self, mut out: impl Write) -> Result<()> {
        writeln!(
            out,
            "{},{},{:e},{:e},{:e},{:e},{:e}",
            self.step,
            self.t,
            self.max_traction_mismatch(),
            self.max_mass_flux_mismatch(),
            self.max_equilibrium(),
            self.max_mass_balance(),
            self.max_relative()
        )?;
        Ok(())
    }
}

/// Flux and balance residuals for the current level of `state`.
pub fn flux_report(
    disc: &Discretization,
    ops: &FluxOperators,
    data: &dyn BiotData,
    state: &TransientState,
    tau: f64,
) -> FluxReport {
    let sol = &state.current.solution;
    let t = state.t();
    let ne = disc.mesh.num_elements();
    let nf = disc.nf();
    let mech = disc.mechanical_data(data, t, state.n == 0);
    let locals: Vec<DVector<f64>> = (0..ne).map(|e| disc.local_displacement(sol, e)).collect();
    let nk = disc.nk();
    let tractions: Vec<Vec<DVector<f64>>> = (0..ne)
        .into_par_iter()
        .map(|e| ops.tractions(disc, e, &locals[e], &sol.pressure.as_slice()[e * nk..(e + 1) * nk]))
        .collect();
    let eq: Vec<(DVector<f64>, f64)> = (0..ne)
        .into_par_iter()
        .map(|e| {
            ops.equilibrium_residual(disc, e, &locals[e], &sol.pressure.as_slice()[e * nk..(e + 1) * nk], &mech.load[e])
        })
        .collect();
    let mut report = FluxReport { step: state.n, t, ..Default::default() };
    report.equilibrium = eq.iter().map(|(r, _)| r.amax()).collect();
    report.equilibrium_scale = eq.iter().map(|(_, s)| *s).fold(0.0, f64::max);
    for (f, face) in disc.mesh.faces().iter().enumerate() {
        let Some(t2) = face.neighbor else { continue };
        let side = |t: usize| {
            let le = &disc.locals[t];
            &tractions[t][crate::swip::local_index(le, f)]
        };
        let (a, b) = (side(face.owner), side(t2));
        let mass = &disc.locals[face.owner].faces[crate::swip::local_index(&disc.locals[face.owner], f)].mass;
        let l2 = |v: DVector<f64>| {
            (0..2)
                .map(|c| {
                    let x = v.rows(c * nf, nf).into_owned();
                    x.dot(&(mass * &x))
                })
                .sum::<f64>()
                .sqrt()
        };
        report.traction_scale = report.traction_scale.max(l2(a.clone())).max(l2(b.clone()));
        report.traction_mismatch.push(l2(a + b));
    }
    let Some(du_faces) = state.derivative(tau, |l| Stack(l.solution.face_values.clone())).map(|s| s.0) else {
        return report;
    };
    let du_elem: Vec<DVector<f64>> = state
        .derivative(tau, |l| Stack(l.solution.element_displacement.clone()))
        .map(|s| s.0)
        .unwrap_or_default();
    let dp = state.derivative(tau, |l| l.solution.pressure.clone()).unwrap_or_else(|| DVector::zeros(0));
    let g = disc.flow_source(data, t);
    let levels: Vec<(f64, &Solution)> = state
        .derivative_weights(tau)
        .into_iter()
        .zip(std::iter::once(&state.current).chain(&state.history))
        .map(|(w, l)| (w, &l.solution))
        .collect();
    for (f, face) in disc.mesh.faces().iter().enumerate() {
        let Some(t2) = face.neighbor else { continue };
        let a = mass_flux(disc, face.owner, f, &du_faces[f], &sol.pressure);
        let b = mass_flux(disc, t2, f, &du_faces[f], &sol.pressure);
        report.flux_scale = report.flux_scale.max(a.amax());
        report.mass_flux_mismatch.push((a + b).amax());
    }
    let mb: Vec<Option<(f64, f64)>> = (0..ne)
        .into_par_iter()
        .map(|e| {
            if disc.locals[e].faces.iter().any(|lf| lf.is_boundary) {
                return None;
            }
            let (r, s) = mass_balance_residual(disc, e, sol, &du_elem[e], &du_faces, &dp, &g, &levels);
            Some((r.amax(), s))
        })
        .collect();
    report.mass_balance_scale = mb.iter().flatten().map(|(_, s)| *s).fold(0.0, f64::max);
    report.mass_balance = mb.into_iter().map(|x| x.map(|(r, _)| r)).collect();
    report
}

/// Vector of per-entity coefficient vectors, with the linear operations needed for differencing.
struct Stack(Vec<DVector<f64>>);

impl std::ops::Mul<f64> for Stack {
    type Output = Stack;
    fn mul(self, s: f64) -> Stack {
        Stack(self.0.into_iter().map(|v| v * s).collect())
    }
}

impl std::ops::Add for Stack {
    type Output = Stack;
    fn add(self, o: Stack) -> Stack {
        Stack(self.0.into_iter().zip(o.0).map(|(a, b)| a + b).collect())
    }
}
