//! Global coupling form `b_h(v, q) = -(D_T v, q)` and an inf-sup probe.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hho::strain_seminorm_matrix;
use crate::sparse::{to_dense, SparseMatrix, TripletBuilder};
use crate::system::Discretization;

/// Largest mesh accepted by the dense inf-sup probe.
pub const INFSUP_ELEMENT_LIMIT: usize = 200;

/// Global `b_h` as a `(U_T + U_F) x P` matrix in the full displacement layout.
pub fn assemble_bh(disc: &Discretization) -> Result<SparseMatrix> {
    let nu = displacement_size(disc);
    let np = disc.dofmap.num_pressure();
    let mut t = TripletBuilder::new(nu, np);
    for e in 0..disc.mesh.num_elements() {
        let (r, rows) = reduction(disc, e);
        let p: Vec<usize> = disc.dofmap.pressure_dofs(e).collect();
        t.add_block(&rows, &p, &(r.transpose() * &disc.coupling[e]), 1.0);
    }
    t.build()
}

/// Global `||.||_{eps,h}^2` Gram matrix on the displacement unknowns.
pub fn assemble_strain_norm(disc: &Discretization) -> Result<SparseMatrix> {
    let nu = displacement_size(disc);
    let mut t = TripletBuilder::new(nu, nu);
    for e in 0..disc.mesh.num_elements() {
        let (r, rows) = reduction(disc, e);
        let m = strain_seminorm_matrix(&disc.locals[e], &disc.kernels[e]);
        t.add_block(&rows, &rows, &(r.transpose() * m * &r), 1.0);
    }
    t.build()
}

fn displacement_size(disc: &Discretization) -> usize {
    disc.dofmap.num_element_displacement() + disc.dofmap.num_face_unknowns
}

/// Local-to-global reduction `[I 0; 0 E_T]` and the global rows of its columns.
fn reduction(disc: &Discretization, e: usize) -> (DMatrix<f64>, Vec<usize>) {
    let le = &disc.locals[e];
    let nt = 2 * le.nk();
    let ec = &disc.condensation[e];
    let m = ec.face_index.len();
    let mut r = DMatrix::zeros(le.ndof(), nt + m);
    r.view_mut((0, 0), (nt, nt)).fill_with_identity();
    r.view_mut((nt, nt), (le.ndof() - nt, m)).copy_from(&ec.face_map);
    let net = disc.dofmap.num_element_displacement();
    let rows = disc.dofmap.element_dofs(e).chain(ec.face_index.iter().map(|&i| net + i)).collect();
    (r, rows)
}

/// Discrete inf-sup constant
/// `inf_q sup_v b_h(v, q) / (||v||_{eps,h} ||q||)` over zero-mean pressures
/// (all pressures when `zero_mean` is false).
///
/// Dense; meshes above [`INFSUP_ELEMENT_LIMIT`] elements are refused.
pub fn infsup_probe(disc: &Discretization, zero_mean: bool) -> Result<f64> {
    let ne = disc.mesh.num_elements();
    if ne > INFSUP_ELEMENT_LIMIT {
        return Err(Error::MeshTooLarge { elements: ne, limit: INFSUP_ELEMENT_LIMIT });
    }
    let a = to_dense(&assemble_strain_norm(disc)?);
    let b = to_dense(&assemble_bh(disc)?);
    let m = to_dense(&disc.mass);
    let chol_a = a.cholesky().ok_or_else(|| Error::Solver("strain norm matrix is singular".into()))?;
    let mut s = b.transpose() * chol_a.solve(&b);
    if zero_mean {
        // Shift the constant mode, which lies in the kernel of b_h, out of the bottom of the spectrum.
        let m1 = &disc.mean;
        let alpha = 10.0 * (1.0 + s.amax());
        let area: f64 = (0..ne).map(|e| m1[e * disc.nk()]).sum();
        s += m1 * m1.transpose() * (alpha / area);
    }
    let chol_m = m.cholesky().ok_or_else(|| Error::Solver("pressure mass matrix is singular".into()))?;
    let l = chol_m.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::Solver("pressure mass factor is singular".into()))?;
    let sym = &linv * s * linv.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    let min = sym.symmetric_eigenvalues().min();
    Ok(min.max(0.0).sqrt())
}
