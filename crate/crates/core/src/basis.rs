//! Scaled monomial bases on elements and faces, mass matrices and L2 projectors.
//!
//! Element basis functions are `((x - x_T) / h_T)^a ((y - y_T) / h_T)^b`,
//! ordered by total degree and then by decreasing `a`, so the degree-`k` basis
//! is a prefix of the degree-`k + 1` basis. Face basis functions are powers of
//! `(x - x_F) . t_F / h_F`, where `t_F` is the face tangent fixed by its owner.

use nalgebra::{DMatrix, DVector, Point2, Vector2};

use crate::error::{Error, Result};
use crate::mesh::Face;
use crate::quadrature::QuadratureRule;

/// `dim P^k` in two variables.
pub fn num_monomials(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponents `(a, b)` of the element basis of degree `k`.
pub fn exponents(k: usize) -> Vec<(usize, usize)> {
    (0..=k).flat_map(|n| (0..=n).map(move |b| (n - b, b))).collect()
}

/// Position of the monomial with exponents `(a, b)` in the element basis.
pub fn monomial_index(a: usize, b: usize) -> usize {
    let n = a + b;
    n * (n + 1) / 2 + b
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementBasis {
    pub degree: usize,
    pub center: Point2<f64>,
    pub scale: f64,
}

impl ElementBasis {
    pub fn new(degree: usize, center: Point2<f64>, scale: f64) -> Self {
        Self { degree, center, scale }
    }

    pub fn dim(&self) -> usize {
        num_monomials(self.degree)
    }

    fn powers(&self, p: &Point2<f64>) -> (Vec<f64>, Vec<f64>) {
        let xi = (p.x - self.center.x) / self.scale;
        let eta = (p.y - self.center.y) / self.scale;
        let mut px = vec![1.0; self.degree + 1];
        let mut py = vec![1.0; self.degree + 1];
        for i in 1..=self.degree {
            px[i] = px[i - 1] * xi;
            py[i] = py[i - 1] * eta;
        }
        (px, py)
    }

    pub fn eval_into(&self, p: &Point2<f64>, out: &mut [f64]) {
        let (px, py) = self.powers(p);
        let mut i = 0;
        for n in 0..=self.degree {
            for b in 0..=n {
                out[i] = px[n - b] * py[b];
                i += 1;
            }
        }
    }

    pub fn eval(&self, p: &Point2<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        self.eval_into(p, v.as_mut_slice());
        v
    }

    /// Partial derivatives of every basis function at `p`.
    pub fn grad_into(&self, p: &Point2<f64>, dx: &mut [f64], dy: &mut [f64]) {
        let (px, py) = self.powers(p);
        let s = 1.0 / self.scale;
        let mut i = 0;
        for n in 0..=self.degree {
            for b in 0..=n {
                let a = n - b;
                dx[i] = if a > 0 { a as f64 * s * px[a - 1] * py[b] } else { 0.0 };
                dy[i] = if b > 0 { b as f64 * s * px[a] * py[b - 1] } else { 0.0 };
                i += 1;
            }
        }
    }

    pub fn grad(&self, p: &Point2<f64>) -> Vec<Vector2<f64>> {
        let n = self.dim();
        let (mut dx, mut dy) = (vec![0.0; n], vec![0.0; n]);
        self.grad_into(p, &mut dx, &mut dy);
        dx.into_iter().zip(dy).map(|(x, y)| Vector2::new(x, y)).collect()
    }

    /// Values of a polynomial with coefficients `c` at `p`.
    pub fn evaluate(&self, c: &[f64], p: &Point2<f64>) -> f64 {
        let mut v = vec![0.0; self.dim()];
        self.eval_into(p, &mut v);
        v.iter().zip(c).map(|(a, b)| a * b).sum()
    }

    /// Basis values (`dim x npoints`) at the points of `rule`.
    pub fn tabulate(&self, rule: &QuadratureRule) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), rule.len());
        for (q, p) in rule.points.iter().enumerate() {
            self.eval_into(p, m.column_mut(q).as_mut_slice());
        }
        m
    }

    /// Basis partial derivatives (`dim x npoints` each) at the points of `rule`.
    pub fn tabulate_grad(&self, rule: &QuadratureRule) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut dx = DMatrix::zeros(self.dim(), rule.len());
        let mut dy = DMatrix::zeros(self.dim(), rule.len());
        for (q, p) in rule.points.iter().enumerate() {
            let mut cx = vec![0.0; self.dim()];
            let mut cy = vec![0.0; self.dim()];
            self.grad_into(p, &mut cx, &mut cy);
            dx.column_mut(q).copy_from_slice(&cx);
            dy.column_mut(q).copy_from_slice(&cy);
        }
        (dx, dy)
    }

    /// Exact differentiation in `dir` (0 for x, 1 for y) as a map from the
    /// coefficients of this basis to those of the degree-`degree - 1` basis.
    pub fn derivative_matrix(&self, dir: usize) -> DMatrix<f64> {
        let k = self.degree;
        let rows = if k == 0 { 1 } else { num_monomials(k - 1) };
        let mut m = DMatrix::zeros(rows, self.dim());
        for (j, (a, b)) in exponents(k).into_iter().enumerate() {
            let (e, (ta, tb)) = if dir == 0 { (a, (a.wrapping_sub(1), b)) } else { (b, (a, b.wrapping_sub(1))) };
            if e > 0 {
                m[(monomial_index(ta, tb), j)] = e as f64 / self.scale;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceBasis {
    pub degree: usize,
    pub center: Point2<f64>,
    pub tangent: Vector2<f64>,
    pub scale: f64,
}

impl FaceBasis {
    pub fn new(face: &Face, degree: usize) -> Self {
        Self { degree, center: face.midpoint, tangent: face.tangent, scale: face.measure }
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn eval_into(&self, p: &Point2<f64>, out: &mut [f64]) {
        let s = (p - self.center).dot(&self.tangent) / self.scale;
        out[0] = 1.0;
        for j in 1..=self.degree {
            out[j] = out[j - 1] * s;
        }
    }

    pub fn eval(&self, p: &Point2<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        self.eval_into(p, v.as_mut_slice());
        v
    }

    pub fn evaluate(&self, c: &[f64], p: &Point2<f64>) -> f64 {
        let mut v = vec![0.0; self.dim()];
        self.eval_into(p, &mut v);
        v.iter().zip(c).map(|(a, b)| a * b).sum()
    }

    pub fn tabulate(&self, rule: &QuadratureRule) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), rule.len());
        for (q, p) in rule.points.iter().enumerate() {
            self.eval_into(p, m.column_mut(q).as_mut_slice());
        }
        m
    }
}

/// `sum_q w_q a(:, q) b(:, q)^T` for tabulated bases `a`, `b`.
pub fn weighted_product(a: &DMatrix<f64>, b: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let mut bw = b.clone();
    for (q, w) in weights.iter().enumerate() {
        bw.column_mut(q).scale_mut(*w);
    }
    a * bw.transpose()
}

/// Gram matrix of tabulated basis values; fails when not positive definite.
pub fn checked_mass(values: &DMatrix<f64>, weights: &[f64], element: usize) -> Result<DMatrix<f64>> {
    let m = weighted_product(values, values, weights);
    if m.clone().cholesky().is_none() {
        return Err(Error::RankDeficientMass { element, degree: values.nrows() });
    }
    Ok(m)
}

/// Element mass matrix of `basis` under `rule`.
pub fn element_mass_matrix(basis: &ElementBasis, rule: &QuadratureRule, element: usize) -> Result<DMatrix<f64>> {
    checked_mass(&basis.tabulate(rule), &rule.weights, element).map_err(|_| Error::RankDeficientMass {
        element,
        degree: basis.degree,
    })
}

pub fn face_mass_matrix(basis: &FaceBasis, rule: &QuadratureRule) -> DMatrix<f64> {
    let v = basis.tabulate(rule);
    weighted_product(&v, &v, &rule.weights)
}

fn project(values: DMatrix<f64>, rule: &QuadratureRule, f: impl Fn(&Point2<f64>) -> f64) -> DVector<f64> {
    let mass = weighted_product(&values, &values, &rule.weights);
    let mut rhs = DVector::zeros(values.nrows());
    for (q, (p, w)) in rule.iter().enumerate() {
        rhs.axpy(w * f(p), &values.column(q), 1.0);
    }
    mass.cholesky().expect("mass matrix is positive definite").solve(&rhs)
}

/// Coefficients of the L2 projection of `f` onto the element basis.
pub fn l2_project_element(
    basis: &ElementBasis,
    rule: &QuadratureRule,
    f: impl Fn(&Point2<f64>) -> f64,
) -> DVector<f64> {
    project(basis.tabulate(rule), rule, f)
}

/// Coefficients of the L2 projection of `f` onto the face basis.
pub fn l2_project_face(basis: &FaceBasis, rule: &QuadratureRule, f: impl Fn(&Point2<f64>) -> f64) -> DVector<f64> {
    project(basis.tabulate(rule), rule, f)
}
