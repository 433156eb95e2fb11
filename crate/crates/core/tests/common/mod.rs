#![allow(dead_code)]

use biot_hho::element::{build_local_elements, LocalElement};
use biot_hho::mesh::{subtriangulate, MeshFamily, PolyMesh};
use nalgebra::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Coarse member of each polygonal family used by the operator checks.
pub fn suite_meshes() -> Vec<(&'static str, PolyMesh)> {
    vec![
        ("cartesian", MeshFamily::Cartesian.generate(0).unwrap()),
        ("triangular", MeshFamily::Triangular.generate(0).unwrap()),
        ("hexagonal", MeshFamily::Hexagonal.generate(0).unwrap()),
        ("voronoi", MeshFamily::Voronoi.generate(0).unwrap()),
        ("nonmatching", MeshFamily::Nonmatching.generate(0).unwrap()),
    ]
}

pub fn locals(mesh: &PolyMesh, k: usize) -> Vec<LocalElement> {
    let sub = subtriangulate(mesh).unwrap();
    build_local_elements(mesh, &sub, k).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random vector polynomial of total degree `deg` in global coordinates.
pub struct RandomPoly {
    pub deg: usize,
    pub coef: Vec<[f64; 2]>,
}

impl RandomPoly {
    pub fn new(deg: usize, rng: &mut ChaCha8Rng) -> Self {
        let n = (deg + 1) * (deg + 2) / 2;
        Self { deg, coef: (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect() }
    }

    pub fn eval(&self, p: &Point2<f64>) -> [f64; 2] {
        let mut out = [0.0; 2];
        let mut i = 0;
        for n in 0..=self.deg {
            for b in 0..=n {
                let m = p.x.powi((n - b) as i32) * p.y.powi(b as i32);
                out[0] += self.coef[i][0] * m;
                out[1] += self.coef[i][1] * m;
                i += 1;
            }
        }
        out
    }

    pub fn div(&self, p: &Point2<f64>) -> f64 {
        let mut d = 0.0;
        let mut i = 0;
        for n in 0..=self.deg {
            for b in 0..=n {
                let a = n - b;
                if a > 0 {
                    d += self.coef[i][0] * a as f64 * p.x.powi(a as i32 - 1) * p.y.powi(b as i32);
                }
                if b > 0 {
                    d += self.coef[i][1] * b as f64 * p.x.powi(a as i32) * p.y.powi(b as i32 - 1);
                }
                i += 1;
            }
        }
        d
    }
}

/// Worst violations of the operator identities on one mesh and degree.
#[derive(Debug, Default, Clone, Copy)]
pub struct OperatorErrors {
    /// `D_T I_T w - pi_T^k div w` at quadrature points for a smooth `w`.
    pub commuting: f64,
    /// `s_T(I_T w, .)` for a degree `k+1` field `w`.
    pub stabilization_kernel: f64,
    /// `a_T` applied to rigid motions, relative to `max |a_T|`.
    pub rigid_kernel: f64,
    /// `b_h(v, 1)` over all displacement unknowns.
    pub coupling_constant: f64,
    /// `c_h(1, q)` with homogeneous Neumann data.
    pub swip_constant: f64,
    /// `(L_T phi, psi) - (phi, L_T* psi)`, relative.
    pub adjoint: f64,
    /// Stabilization rewritten through `L_T` minus the assembled one, relative.
    pub rewrite: f64,
}

impl OperatorErrors {
    pub fn max(self, o: Self) -> Self {
        Self {
            commuting: self.commuting.max(o.commuting),
            stabilization_kernel: self.stabilization_kernel.max(o.stabilization_kernel),
            rigid_kernel: self.rigid_kernel.max(o.rigid_kernel),
            coupling_constant: self.coupling_constant.max(o.coupling_constant),
            swip_constant: self.swip_constant.max(o.swip_constant),
            adjoint: self.adjoint.max(o.adjoint),
            rewrite: self.rewrite.max(o.rewrite),
        }
    }
}

pub fn operator_errors(mesh: &PolyMesh, k: usize, seed: u64) -> OperatorErrors {
    use biot_hho::basis::{l2_project_element, ElementBasis};
    use biot_hho::coupling::assemble_bh;
    use biot_hho::fluxes::{boundary_operator, stabilization_from_boundary_operator};
    use biot_hho::hho::{interpolate, interpolate_with_degree};
    use biot_hho::problem::{BoundaryConditions, Physics};
    use biot_hho::quadrature::polygon_rule;
    use biot_hho::sparse::matvec;
    use biot_hho::system::Discretization;
    use nalgebra::DVector;

    let mut g = rng(seed);
    let mut out = OperatorErrors::default();
    let disc = Discretization::new(mesh.clone(), k, Physics::new(1.3, 0.7, 0.0, 1.0), BoundaryConditions::default())
        .expect("discretization");
    for (le, ker) in disc.locals.iter().zip(&disc.kernels) {
        let bk = ElementBasis::new(k, le.basis.center, le.basis.scale);
        let (a, b) = (g.random_range(0.5..2.0), g.random_range(0.5..2.0));
        let w = |p: &Point2<f64>| [(a * p.x).sin() * p.y.exp(), (b * p.y).cos() + p.x * p.x];
        let divw = |p: &Point2<f64>| a * (a * p.x).cos() * p.y.exp() - b * (b * p.y).sin();
        let d = &ker.divergence * interpolate_with_degree(le, 24, w);
        let proj = l2_project_element(&bk, &polygon_rule(&le.triangles, 24), divw);
        for (p, _) in le.rule.iter() {
            let diff = bk.evaluate(d.as_slice(), p) - bk.evaluate(proj.as_slice(), p);
            out.commuting = out.commuting.max(diff.abs());
        }
        let poly = RandomPoly::new(k + 1, &mut g);
        let v = interpolate(le, |p| poly.eval(p));
        out.stabilization_kernel = out.stabilization_kernel.max((&ker.stabilization * &v).amax());
        let stiff = ker.stiffness(1.3, 0.7);
        let scale = stiff.amax();
        for rigid in [interpolate(le, |_| [1.0, 0.0]), interpolate(le, |_| [0.0, 1.0]), interpolate(le, |p| [-p.y, p.x])] {
            out.rigid_kernel = out.rigid_kernel.max((&stiff * rigid).amax() / scale);
        }
        let op = boundary_operator(le, ker);
        let nb = op.l.nrows();
        for _ in 0..3 {
            let phi = DVector::from_fn(nb, |_, _| g.random_range(-1.0..1.0));
            let psi = DVector::from_fn(nb, |_, _| g.random_range(-1.0..1.0));
            let lhs = (&op.l * &phi).dot(&(&op.mass * &psi));
            let rhs = phi.dot(&(&op.mass * (&op.adjoint * &psi)));
            let norm = |x: &DVector<f64>| x.dot(&(&op.mass * x)).sqrt();
            let s = norm(&(&op.l * &phi)) * norm(&psi) + norm(&phi) * norm(&(&op.adjoint * &psi));
            out.adjoint = out.adjoint.max((lhs - rhs).abs() / s);
        }
        let rewritten = stabilization_from_boundary_operator(le, &op);
        out.rewrite = out.rewrite.max((&rewritten - &ker.stabilization).amax() / ker.stabilization.amax());
    }
    let bh = assemble_bh(&disc).expect("b_h");
    let ones: Vec<f64> = disc.project_pressure(|_| 1.0).iter().copied().collect();
    out.coupling_constant = matvec(&bh, &ones).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    out.swip_constant = matvec(&disc.c, &ones).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    out
}
