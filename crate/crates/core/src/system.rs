//! Global discretization: element kernels, full and statically condensed
//! systems, right-hand sides, solves and element recovery.
//!
//! Full system (flow rows as in the time-discrete mass balance):
//!
//! ```text
//! [ A_TT   A_TF   B_T               ] [U_T]   [F_T]
//! [ A_FT   A_FF   B_F               ] [U_F] = [F_F]
//! [-B_T^T -B_F^T  (tau/theta) C + c0 M] [ P ]   [G~ ]
//! ```
//!
//! The condensed system eliminates `U_T` element by element and negates the
//! flow rows so that the reduced matrix is symmetric.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Point2};
use rayon::prelude::*;

use crate::basis::{num_monomials, ElementBasis};
use crate::dofmap::{DofMap, FaceKind};
use crate::element::{build_local_elements, LocalElement};
use crate::error::{Error, Result};
use crate::hho::ElasticityKernel;
use crate::mesh::{subtriangulate, PolyMesh, SubTriangulation};
use crate::problem::{BiotData, BoundaryConditions, PressureBc, Physics};
use crate::quadrature::{polygon_rule, segment_rule, QuadratureRule};
use crate::sparse::{LinearSolver, SolverKind, SparseMatrix, TripletBuilder};
use crate::swip::{assemble_ch, assemble_lifting, face_weights, FaceWeights, Lifting};

/// Element-local Schur complement data.
#[derive(Debug, Clone)]
pub struct ElementCondensation {
    pub chol: Cholesky<f64, Dyn>,
    /// Face map `E_T` and the face unknowns of its columns.
    pub face_map: DMatrix<f64>,
    pub face_index: Vec<usize>,
    /// `A_TT^{-1} A_TF E_T`.
    pub y_face: DMatrix<f64>,
    /// `A_TT^{-1} B_T`.
    pub y_p: DMatrix<f64>,
    pub k_ff: DMatrix<f64>,
    pub k_fp: DMatrix<f64>,
    pub k_pp: DMatrix<f64>,
}

/// Load and prescribed boundary values for one time level.
#[derive(Debug, Clone)]
pub struct MechanicalData {
    /// Per element, `(f, v_T)_T` for the `2 nk` element unknowns.
    pub load: Vec<DVector<f64>>,
    /// Per face, prescribed `2 nf` coefficients (zero on non-clamped faces).
    pub prescribed: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub element_displacement: Vec<DVector<f64>>,
    pub face_unknowns: Vec<f64>,
    /// Per face, full `2 nf` coefficients including prescribed values.
    pub face_values: Vec<DVector<f64>>,
    pub pressure: DVector<f64>,
    /// Zero-mean multiplier (`0` when absent).
    pub multiplier: f64,
}

/// Reduced matrix for a given `(tau, theta)` with its factorization.
pub struct CondensedSystem {
    pub tau: f64,
    pub theta: f64,
    solver: LinearSolver,
}

impl CondensedSystem {
    pub fn matrix(&self) -> &SparseMatrix {
        self.solver.matrix()
    }

    pub fn size(&self) -> usize {
        self.solver.size()
    }
}

pub struct Discretization {
    pub mesh: PolyMesh,
    pub sub: SubTriangulation,
    pub k: usize,
    pub physics: Physics,
    pub bc: BoundaryConditions,
    pub dofmap: DofMap,
    pub locals: Vec<LocalElement>,
    pub kernels: Vec<ElasticityKernel>,
    pub kappa: Vec<f64>,
    pub sigma: f64,
    /// Local stiffness `A(T)`.
    pub stiffness: Vec<DMatrix<f64>>,
    /// Local coupling `-D_T^T M_T` (`ndof x nk`), so that `b_T(v, q) = v^T B q`.
    pub coupling: Vec<DMatrix<f64>>,
    pub condensation: Vec<ElementCondensation>,
    /// SWIP matrix on the pressure unknowns.
    pub c: SparseMatrix,
    pub weights: Vec<FaceWeights>,
    pub lifting: Lifting,
    /// Pressure mass matrix.
    pub mass: SparseMatrix,
    /// `(1, q_i)` for every pressure basis function.
    pub mean: DVector<f64>,
    pub solver: SolverKind,
    /// Element rules of degree `2k + 4` for data integrals.
    pub data_rules: Vec<QuadratureRule>,
}

impl Discretization {
    pub fn new(mesh: PolyMesh, k: usize, physics: Physics, bc: BoundaryConditions) -> Result<Self> {
        Self::with_solver(mesh, k, physics, bc, SolverKind::Direct)
    }

    pub fn with_solver(
        mesh: PolyMesh,
        k: usize,
        physics: Physics,
        bc: BoundaryConditions,
        solver: SolverKind,
    ) -> Result<Self> {
        if !(1..=3).contains(&k) {
            return Err(Error::UnsupportedDegree(k));
        }
        let kappa = physics.element_kappa(&mesh)?;
        let sigma = physics.penalty(&mesh, k)?;
        let sub = subtriangulate(&mesh)?;
        let locals = build_local_elements(&mesh, &sub, k)?;
        let kernels = locals.par_iter().map(ElasticityKernel::build).collect::<Result<Vec<_>>>()?;
        let dofmap = DofMap::new(&mesh, k, &bc, physics.c0);
        let (mu, lambda) = (physics.mu, physics.lambda);
        let stiffness: Vec<DMatrix<f64>> = kernels.par_iter().map(|ker| ker.stiffness(mu, lambda)).collect();
        let coupling: Vec<DMatrix<f64>> = kernels
            .iter()
            .zip(&locals)
            .map(|(ker, le)| -(ker.divergence.transpose() * &le.mass_k))
            .collect();
        let condensation = (0..mesh.num_elements())
            .into_par_iter()
            .map(|e| condense_element(&dofmap, &locals[e], &stiffness[e], &coupling[e]))
            .collect::<Result<Vec<_>>>()?;
        let c = assemble_ch(&mesh, &locals, &kappa, sigma, bc.pressure == PressureBc::Dirichlet)?;
        let weights = face_weights(&mesh, &kappa);
        let lifting = assemble_lifting(&mesh, &locals, &kappa);
        let nk = num_monomials(k);
        let np = dofmap.num_pressure();
        let mut mt = TripletBuilder::new(np, np);
        let mut mean = DVector::zeros(np);
        for (e, le) in locals.iter().enumerate() {
            let idx: Vec<usize> = dofmap.pressure_dofs(e).collect();
            mt.add_block(&idx, &idx, &le.mass_k, 1.0);
            for i in 0..nk {
                mean[e * nk + i] = le.mass_k[(i, 0)];
            }
        }
        let mass = mt.build()?;
        let data_rules = locals.par_iter().map(|le| polygon_rule(&le.triangles, 2 * k + 4)).collect();
        Ok(Self {
            mesh,
            sub,
            k,
            physics,
            bc,
            dofmap,
            locals,
            kernels,
            kappa,
            sigma,
            stiffness,
            coupling,
            condensation,
            c,
            weights,
            lifting,
            mass,
            mean,
            solver,
            data_rules,
        })
    }

    pub fn nk(&self) -> usize {
        self.dofmap.nk
    }

    pub fn nf(&self) -> usize {
        self.dofmap.nf
    }

    fn element_blocks(&self, e: usize) -> (usize, usize) {
        (2 * self.nk(), self.locals[e].ndof())
    }

    /// Local face coefficients (`2 nf` per face) of element `e` gathered from per-face vectors.
    pub fn gather_faces(&self, e: usize, per_face: &[DVector<f64>]) -> DVector<f64> {
        let nf2 = 2 * self.nf();
        let le = &self.locals[e];
        let mut out = DVector::zeros(nf2 * le.faces.len());
        for (i, f) in le.faces.iter().enumerate() {
            out.rows_mut(i * nf2, nf2).copy_from(&per_face[f.global]);
        }
        out
    }

    /// Full local displacement vector of element `e`.
    pub fn local_displacement(&self, sol: &Solution, e: usize) -> DVector<f64> {
        let (nt, ndof) = self.element_blocks(e);
        let mut u = DVector::zeros(ndof);
        u.rows_mut(0, nt).copy_from(&sol.element_displacement[e]);
        u.rows_mut(nt, ndof - nt).copy_from(&self.gather_faces(e, &sol.face_values));
        u
    }

    /// Assembles and factorizes the reduced matrix for step `tau` and scheme weight `theta`.
    pub fn condensed_system(&self, tau: f64, theta: f64) -> Result<CondensedSystem> {
        let matrix = self.condensed_matrix(tau, theta)?;
        let nfu = self.dofmap.num_face_unknowns;
        let mut blocks: Vec<std::ops::Range<usize>> =
            (0..self.mesh.num_faces()).map(|f| self.dofmap.face_dofs(f)).filter(|r| !r.is_empty()).collect();
        blocks.extend((0..self.mesh.num_elements()).map(|e| {
            let r = self.dofmap.pressure_dofs(e);
            nfu + r.start..nfu + r.end
        }));
        let solver = LinearSolver::new(matrix, self.solver, &blocks)?;
        Ok(CondensedSystem { tau, theta, solver })
    }

    /// Symmetrized reduced matrix.
    pub fn condensed_matrix(&self, tau: f64, theta: f64) -> Result<SparseMatrix> {
        let n = self.dofmap.condensed_size();
        let nfu = self.dofmap.num_face_unknowns;
        let nk = self.nk();
        let per_element: Vec<TripletBuilder> = self
            .condensation
            .par_iter()
            .enumerate()
            .map(|(e, ec)| {
                let mut t = TripletBuilder::new(n, n);
                let p: Vec<usize> = self.dofmap.pressure_dofs(e).map(|i| nfu + i).collect();
                t.add_block(&ec.face_index, &ec.face_index, &ec.k_ff, 1.0);
                t.add_block(&ec.face_index, &p, &ec.k_fp, 1.0);
                t.add_block(&p, &ec.face_index, &ec.k_fp.transpose(), 1.0);
                t.add_block(&p, &p, &ec.k_pp, -1.0);
                t
            })
            .collect();
        let mut t = TripletBuilder::new(n, n);
        for b in per_element {
            t.append(b);
        }
        add_sparse(&mut t, &self.c, nfu, -tau / theta);
        if self.physics.c0 != 0.0 {
            add_sparse(&mut t, &self.mass, nfu, -self.physics.c0);
        }
        if self.dofmap.multiplier {
            let m = n - 1;
            for i in 0..self.dofmap.num_pressure() {
                t.add(nfu + i, m, -tau / theta * self.mean[i]);
                t.add(m, nfu + i, -tau / theta * self.mean[i]);
            }
        }
        let _ = nk;
        t.build()
    }

    /// Right-hand side of the reduced system for the given mechanical data and flow right-hand side `G~`.
    pub fn condensed_rhs(&self, mech: &MechanicalData, flow: &DVector<f64>) -> DVector<f64> {
        let n = self.dofmap.condensed_size();
        let nfu = self.dofmap.num_face_unknowns;
        let nk = self.nk();
        let mut rhs = DVector::zeros(n);
        for e in 0..self.mesh.num_elements() {
            let ec = &self.condensation[e];
            let (ft, ff, gt) = self.reduced_local_rhs(e, mech, flow);
            let face = ff - ec.y_face.transpose() * &ft;
            for (a, &i) in ec.face_index.iter().enumerate() {
                rhs[i] += face[a];
            }
            let g = -(gt + ec.y_p.transpose() * &ft);
            rhs.rows_mut(nfu + e * nk, nk).copy_from(&g);
        }
        rhs
    }

    /// `(F_T - A_TF d, E^T(-A_FF d), G~_T + B_F^T d)` for element `e`.
    fn reduced_local_rhs(
        &self,
        e: usize,
        mech: &MechanicalData,
        flow: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let (nt, ndof) = self.element_blocks(e);
        let nb = ndof - nt;
        let nk = self.nk();
        let a = &self.stiffness[e];
        let b = &self.coupling[e];
        let d = self.gather_faces(e, &mech.prescribed);
        let ec = &self.condensation[e];
        let ft = &mech.load[e] - a.view((0, nt), (nt, nb)) * &d;
        let ff = ec.face_map.transpose() * (-(a.view((nt, nt), (nb, nb)) * &d));
        let gt = flow.rows(e * nk, nk) + b.view((nt, 0), (nb, nk)).transpose() * &d;
        (ft, ff, gt)
    }

    /// Solves the reduced system and recovers element displacements.
    pub fn solve_condensed(
        &self,
        sys: &CondensedSystem,
        mech: &MechanicalData,
        flow: &DVector<f64>,
    ) -> Result<Solution> {
        let rhs = self.condensed_rhs(mech, flow);
        let x = sys.solver.solve(rhs.as_slice())?;
        Ok(self.recover(&x, mech, flow))
    }

    /// Element recovery `U_T = A_TT^{-1}(F_T - A_TF U_F - B_T P_T)` from a reduced solution vector.
    pub fn recover(&self, x: &[f64], mech: &MechanicalData, flow: &DVector<f64>) -> Solution {
        let nfu = self.dofmap.num_face_unknowns;
        let nk = self.nk();
        let face_unknowns = x[..nfu].to_vec();
        let pressure = DVector::from_column_slice(&x[nfu..nfu + self.dofmap.num_pressure()]);
        let multiplier = if self.dofmap.multiplier { x[x.len() - 1] } else { 0.0 };
        let element_displacement = (0..self.mesh.num_elements())
            .into_par_iter()
            .map(|e| {
                let ec = &self.condensation[e];
                let (ft, _, _) = self.reduced_local_rhs(e, mech, flow);
                let uf = DVector::from_iterator(ec.face_index.len(), ec.face_index.iter().map(|&i| face_unknowns[i]));
                ec.chol.solve(&ft) - &ec.y_face * uf - &ec.y_p * pressure.rows(e * nk, nk)
            })
            .collect();
        let face_values = self.face_values(&face_unknowns, &mech.prescribed);
        Solution { element_displacement, face_unknowns, face_values, pressure, multiplier }
    }

    fn face_values(&self, face_unknowns: &[f64], prescribed: &[DVector<f64>]) -> Vec<DVector<f64>> {
        (0..self.mesh.num_faces())
            .map(|f| {
                let r = self.dofmap.face_dofs(f);
                let u = DVector::from_column_slice(&face_unknowns[r]);
                self.dofmap.face_map(f) * u + &prescribed[f]
            })
            .collect()
    }

    /// Assembles the unsymmetric full system and its right-hand side.
    pub fn full_system(
        &self,
        tau: f64,
        theta: f64,
        mech: &MechanicalData,
        flow: &DVector<f64>,
    ) -> Result<(SparseMatrix, DVector<f64>)> {
        let n = self.dofmap.full_size();
        let net = self.dofmap.num_element_displacement();
        let nfu = self.dofmap.num_face_unknowns;
        let np = self.dofmap.num_pressure();
        let poff = net + nfu;
        let nk = self.nk();
        let mut t = TripletBuilder::new(n, n);
        let mut rhs = DVector::zeros(n);
        for e in 0..self.mesh.num_elements() {
            let (nt, ndof) = self.element_blocks(e);
            let ec = &self.condensation[e];
            let m = ec.face_index.len();
            let mut r = DMatrix::zeros(ndof, nt + m);
            r.view_mut((0, 0), (nt, nt)).fill_with_identity();
            r.view_mut((nt, nt), (ndof - nt, m)).copy_from(&ec.face_map);
            let a = r.transpose() * &self.stiffness[e] * &r;
            let b = r.transpose() * &self.coupling[e];
            let rows: Vec<usize> =
                self.dofmap.element_dofs(e).chain(ec.face_index.iter().map(|&i| net + i)).collect();
            let p: Vec<usize> = self.dofmap.pressure_dofs(e).map(|i| poff + i).collect();
            t.add_block(&rows, &rows, &a, 1.0);
            t.add_block(&rows, &p, &b, 1.0);
            t.add_block(&p, &rows, &b.transpose(), -1.0);
            let (ft, ff, gt) = self.reduced_local_rhs(e, mech, flow);
            for (i, &row) in rows.iter().enumerate() {
                rhs[row] += if i < nt { ft[i] } else { ff[i - nt] };
            }
            for (i, &row) in p.iter().enumerate() {
                rhs[row] += gt[i];
            }
        }
        add_sparse(&mut t, &self.c, poff, tau / theta);
        if self.physics.c0 != 0.0 {
            add_sparse(&mut t, &self.mass, poff, self.physics.c0);
        }
        if self.dofmap.multiplier {
            for i in 0..np {
                t.add(poff + i, n - 1, tau / theta * self.mean[i]);
                t.add(n - 1, poff + i, self.mean[i]);
            }
        }
        let _ = nk;
        Ok((t.build()?, rhs))
    }

    /// Solves the full system directly (reference path for the condensed solver).
    pub fn solve_full(&self, tau: f64, theta: f64, mech: &MechanicalData, flow: &DVector<f64>) -> Result<Solution> {
        let (a, b) = self.full_system(tau, theta, mech, flow)?;
        let x = LinearSolver::new(a, SolverKind::Direct, &[])?.solve(b.as_slice())?;
        let net = self.dofmap.num_element_displacement();
        let nfu = self.dofmap.num_face_unknowns;
        let np = self.dofmap.num_pressure();
        let nt = 2 * self.nk();
        let element_displacement =
            (0..self.mesh.num_elements()).map(|e| DVector::from_column_slice(&x[e * nt..(e + 1) * nt])).collect();
        let face_unknowns = x[net..net + nfu].to_vec();
        let face_values = self.face_values(&face_unknowns, &mech.prescribed);
        Ok(Solution {
            element_displacement,
            face_unknowns,
            face_values,
            pressure: DVector::from_column_slice(&x[net + nfu..net + nfu + np]),
            multiplier: if self.dofmap.multiplier { x[x.len() - 1] } else { 0.0 },
        })
    }

    /// `B^T U`: per pressure unknown, `b_h(u, q_i)` including prescribed face values.
    pub fn coupling_product(&self, sol: &Solution) -> DVector<f64> {
        let nk = self.nk();
        let mut out = DVector::zeros(self.dofmap.num_pressure());
        for e in 0..self.mesh.num_elements() {
            let u = self.local_displacement(sol, e);
            out.rows_mut(e * nk, nk).copy_from(&(self.coupling[e].transpose() * u));
        }
        out
    }

    /// Pressure mass matrix times `p`.
    pub fn mass_product(&self, p: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(crate::sparse::matvec(&self.mass, p.as_slice()))
    }

    /// `sum_T u_T^T A(T) u_T + c0 p^T M p`.
    pub fn energy(&self, sol: &Solution) -> f64 {
        let mech: f64 = (0..self.mesh.num_elements())
            .map(|e| {
                let u = self.local_displacement(sol, e);
                u.dot(&(&self.stiffness[e] * &u))
            })
            .sum();
        mech + self.physics.c0 * sol.pressure.dot(&self.mass_product(&sol.pressure))
    }

    /// Load vectors and prescribed boundary values at time `t`.
    pub fn mechanical_data(&self, data: &dyn BiotData, t: f64, initial: bool) -> MechanicalData {
        let nk = self.nk();
        let degree = 2 * self.k + 4;
        let load = self
            .locals
            .par_iter()
            .zip(&self.data_rules)
            .map(|(le, rule)| {
                let b = le.basis_k();
                let mut v = DVector::zeros(2 * nk);
                let mut vals = vec![0.0; nk];
                for (p, w) in rule.iter() {
                    let f = if initial { data.initial_load(p) } else { data.load(p, t) };
                    b.eval_into(p, &mut vals);
                    for i in 0..nk {
                        v[i] += w * f[0] * vals[i];
                        v[nk + i] += w * f[1] * vals[i];
                    }
                }
                v
            })
            .collect();
        let nf = self.nf();
        let prescribed = (0..self.mesh.num_faces())
            .map(|f| {
                if self.dofmap.face_kind[f] != FaceKind::Clamped {
                    return DVector::zeros(2 * nf);
                }
                let face = self.mesh.face(f);
                let (a, b) = self.mesh.face_endpoints(f);
                let rule = segment_rule(&a, &b, degree);
                let basis = crate::basis::FaceBasis::new(face, self.k);
                let mut out = DVector::zeros(2 * nf);
                for c in 0..2 {
                    let coef = crate::basis::l2_project_face(&basis, &rule, |p| data.boundary_displacement(p, t)[c]);
                    out.rows_mut(c * nf, nf).copy_from(&coef);
                }
                out
            })
            .collect();
        MechanicalData { load, prescribed }
    }

    /// Flow right-hand side `G`: `(g, q)` plus Neumann flux data and point sources.
    pub fn flow_source(&self, data: &dyn BiotData, t: f64) -> DVector<f64> {
        let nk = self.nk();
        let degree = 2 * self.k + 4;
        let neumann = self.bc.pressure == PressureBc::Neumann;
        let blocks: Vec<DVector<f64>> = self
            .locals
            .par_iter()
            .zip(&self.data_rules)
            .map(|(le, rule)| {
                let b = le.basis_k();
                let mut v = DVector::zeros(nk);
                let mut vals = vec![0.0; nk];
                for (p, w) in rule.iter() {
                    b.eval_into(p, &mut vals);
                    let g = data.source(p, t);
                    for i in 0..nk {
                        v[i] += w * g * vals[i];
                    }
                }
                if neumann {
                    for lf in le.faces.iter().filter(|lf| lf.is_boundary) {
                        for (p, w) in segment_rule(&lf.endpoints.0, &lf.endpoints.1, degree).iter() {
                            b.eval_into(p, &mut vals);
                            let g = data.boundary_flux(p, &lf.normal, t);
                            for i in 0..nk {
                                v[i] += w * g * vals[i];
                            }
                        }
                    }
                }
                v
            })
            .collect();
        let mut out = DVector::zeros(self.dofmap.num_pressure());
        for (e, b) in blocks.into_iter().enumerate() {
            out.rows_mut(e * nk, nk).copy_from(&b);
        }
        for (x0, strength) in data.point_sources(t) {
            let owners = self.mesh.locate(&x0);
            let share = strength / owners.len().max(1) as f64;
            for e in owners {
                let v = self.locals[e].basis_k().eval(&x0);
                for i in 0..nk {
                    out[e * nk + i] += share * v[i];
                }
            }
        }
        out
    }

    /// Element-wise L2 projection of a scalar field onto the pressure space.
    pub fn project_pressure(&self, f: impl Fn(&Point2<f64>) -> f64 + Sync) -> DVector<f64> {
        let nk = self.nk();
        let blocks: Vec<DVector<f64>> = self
            .locals
            .par_iter()
            .zip(&self.data_rules)
            .map(|(le, rule)| crate::basis::l2_project_element(&le.basis_k(), rule, &f))
            .collect();
        let mut out = DVector::zeros(self.dofmap.num_pressure());
        for (e, b) in blocks.into_iter().enumerate() {
            out.rows_mut(e * nk, nk).copy_from(&b);
        }
        out
    }

    /// Initial state: `p~0 = pi p0` and `u~0` solving `a_h(u, v) = (f0, v) - b_h(v, p~0)`.
    pub fn initial_condition(&self, data: &dyn BiotData) -> Result<Solution> {
        let p0 = self.project_pressure(|x| data.initial_pressure(x));
        let mech = self.mechanical_data(data, 0.0, true);
        let nfu = self.dofmap.num_face_unknowns;
        let nk = self.nk();
        let mut t = TripletBuilder::new(nfu, nfu);
        let mut rhs = DVector::zeros(nfu);
        let mut loads = Vec::with_capacity(self.mesh.num_elements());
        for e in 0..self.mesh.num_elements() {
            let (nt, ndof) = self.element_blocks(e);
            let nb = ndof - nt;
            let ec = &self.condensation[e];
            let a = &self.stiffness[e];
            let b = &self.coupling[e];
            let d = self.gather_faces(e, &mech.prescribed);
            let pe = p0.rows(e * nk, nk);
            let ft = &mech.load[e] - a.view((0, nt), (nt, nb)) * &d - b.view((0, 0), (nt, nk)) * pe;
            let ff = ec.face_map.transpose() * (-(a.view((nt, nt), (nb, nb)) * &d) - b.view((nt, 0), (nb, nk)) * pe);
            let face = ff - ec.y_face.transpose() * &ft;
            t.add_block(&ec.face_index, &ec.face_index, &ec.k_ff, 1.0);
            for (i, &row) in ec.face_index.iter().enumerate() {
                rhs[row] += face[i];
            }
            loads.push(ft);
        }
        let uf = if nfu == 0 {
            Vec::new()
        } else {
            LinearSolver::new(t.build()?, self.solver, &[])?.solve(rhs.as_slice())?
        };
        let element_displacement = (0..self.mesh.num_elements())
            .map(|e| {
                let ec = &self.condensation[e];
                let u = DVector::from_iterator(ec.face_index.len(), ec.face_index.iter().map(|&i| uf[i]));
                ec.chol.solve(&loads[e]) - &ec.y_face * u
            })
            .collect();
        let face_values = self.face_values(&uf, &mech.prescribed);
        Ok(Solution { element_displacement, face_unknowns: uf, face_values, pressure: p0, multiplier: 0.0 })
    }

    /// Interpolate `I_h w` of a vector field as a [`Solution`] displacement (pressure zero).
    pub fn interpolate_displacement(&self, w: impl Fn(&Point2<f64>) -> [f64; 2] + Sync) -> Solution {
        let degree = 2 * self.k + 4;
        let locals: Vec<DVector<f64>> =
            self.locals.par_iter().map(|le| crate::hho::interpolate_with_degree(le, degree, &w)).collect();
        let nt = 2 * self.nk();
        let nf2 = 2 * self.nf();
        let mut face_values = vec![DVector::zeros(nf2); self.mesh.num_faces()];
        for (f, face) in self.mesh.faces().iter().enumerate() {
            let le = &self.locals[face.owner];
            let i = crate::swip::local_index(le, f);
            face_values[f] = locals[face.owner].rows(nt + i * nf2, nf2).into_owned();
        }
        Solution {
            element_displacement: locals.iter().map(|u| u.rows(0, nt).into_owned()).collect(),
            face_unknowns: Vec::new(),
            face_values,
            pressure: DVector::zeros(self.dofmap.num_pressure()),
            multiplier: 0.0,
        }
    }

    /// Value of the pressure polynomial of element `e` at `x`.
    pub fn pressure_at(&self, p: &DVector<f64>, e: usize, x: &Point2<f64>) -> f64 {
        let nk = self.nk();
        let b: ElementBasis = self.locals[e].basis_k();
        b.evaluate(&p.as_slice()[e * nk..(e + 1) * nk], x)
    }

    /// Value of the element displacement polynomial of element `e` at `x`.
    pub fn displacement_at(&self, sol: &Solution, e: usize, x: &Point2<f64>) -> [f64; 2] {
        let nk = self.nk();
        let b = self.locals[e].basis_k();
        let u = sol.element_displacement[e].as_slice();
        [b.evaluate(&u[..nk], x), b.evaluate(&u[nk..], x)]
    }
}

fn add_sparse(t: &mut TripletBuilder, a: &SparseMatrix, offset: usize, scale: f64) {
    let r = a.as_ref();
    let (cp, ri, val) = (r.symbolic().col_ptr(), r.symbolic().row_idx(), r.val());
    for j in 0..a.ncols() {
        for p in cp[j]..cp[j + 1] {
            t.add(offset + ri[p], offset + j, scale * val[p]);
        }
    }
}

fn condense_element(
    dofmap: &DofMap,
    le: &LocalElement,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<ElementCondensation> {
    let nt = 2 * le.nk();
    let ndof = le.ndof();
    let nb = ndof - nt;
    let nk = le.nk();
    let (face_map, face_index) = dofmap.local_face_map(le);
    let chol = a
        .view((0, 0), (nt, nt))
        .into_owned()
        .cholesky()
        .ok_or(Error::SingularElementBlock { element: le.index })?;
    let a_tf = a.view((0, nt), (nt, nb)) * &face_map;
    let a_ff = face_map.transpose() * a.view((nt, nt), (nb, nb)) * &face_map;
    let b_t = b.view((0, 0), (nt, nk)).into_owned();
    let b_f = face_map.transpose() * b.view((nt, 0), (nb, nk));
    let y_face = chol.solve(&a_tf);
    let y_p = chol.solve(&b_t);
    let k_ff = &a_ff - a_tf.transpose() * &y_face;
    let k_fp = &b_f - a_tf.transpose() * &y_p;
    let k_pp = b_t.transpose() * &y_p;
    Ok(ElementCondensation { chol, face_map, face_index, y_face, y_p, k_ff, k_fp, k_pp })
}
