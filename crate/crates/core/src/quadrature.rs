//! Gauss quadrature on segments and on polygon sub-triangulations.
//!
//! Triangle rules are tensor Gauss-Legendre rules collapsed onto the triangle
//! (Duffy transform). A rule built for `degree` integrates every polynomial of
//! total degree `<= degree` exactly.

use nalgebra::Point2;

use crate::mesh::Triangle;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point2<f64>>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point2<f64>) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point2<f64>, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]` with `n` points (exact to degree `2n - 1`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n starting from the Chebyshev-like guess
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Rule on the segment `a`-`b` exact to `degree`.
pub fn segment_rule(a: &Point2<f64>, b: &Point2<f64>, degree: usize) -> QuadratureRule {
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    let len = (b - a).norm();
    QuadratureRule {
        points: x.iter().map(|&s| a + (b - a) * s).collect(),
        weights: w.iter().map(|&wi| wi * len).collect(),
        degree,
    }
}

/// Collapsed Gauss rule on one triangle exact to `degree`.
pub fn triangle_rule(t: &Triangle, degree: usize) -> QuadratureRule {
    let mut rule = QuadratureRule { points: Vec::new(), weights: Vec::new(), degree };
    append_triangle(&mut rule, t, degree);
    rule
}

fn append_triangle(rule: &mut QuadratureRule, t: &Triangle, degree: usize) {
    // the collapse adds one power of the first variable
    let n = (degree + 2).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let jac = 2.0 * t.area();
    for (&u, &wu) in x.iter().zip(&w) {
        for (&v, &wv) in x.iter().zip(&w) {
            rule.points.push(t.map(u, v * (1.0 - u)));
            rule.weights.push(wu * wv * (1.0 - u) * jac);
        }
    }
}

/// Composite rule over a list of sub-triangles.
pub fn polygon_rule(triangles: &[Triangle], degree: usize) -> QuadratureRule {
    let mut rule = QuadratureRule { points: Vec::new(), weights: Vec::new(), degree };
    for t in triangles {
        append_triangle(&mut rule, t, degree);
    }
    rule
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn gauss_legendre_weights_and_nodes() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for d in 0..(2 * n) as i32 {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d)).sum();
                assert!((q - 1.0 / (d + 1) as f64).abs() < 1e-14, "n={n} d={d}");
            }
        }
        let (x, _) = gauss_legendre(2);
        assert!((x[0] - (0.5 - 0.5 / 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn reference_triangle_monomials() {
        let t = Triangle::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0));
        for degree in 0..=10 {
            let r = triangle_rule(&t, degree);
            assert!((r.measure() - 0.5).abs() < 1e-15);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    // int x^a y^b over the unit simplex = a! b! / (a+b+2)!
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let q = r.integrate(|p| p.x.powi(a as i32) * p.y.powi(b as i32));
                    assert!((q - exact).abs() < 1e-14 * (1.0 + exact), "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn segment_exactness() {
        let (a, b) = (Point2::new(0.2, -1.0), Point2::new(1.4, 0.6));
        for degree in 0..=9 {
            let r = segment_rule(&a, &b, degree);
            assert!((r.measure() - 2.0).abs() < 1e-14);
            for d in 0..=degree as i32 {
                let q = r.integrate(|p| ((p - a).norm() / 2.0).powi(d));
                assert!((q - 2.0 / (d + 1) as f64).abs() < 1e-13);
            }
        }
    }

    proptest! {
        #[test]
        fn random_polynomial_pairs_on_triangles(
            coords in prop::array::uniform6(-2.0f64..2.0),
            ca in prop::collection::vec(-1.0f64..1.0, 10),
            cb in prop::collection::vec(-1.0f64..1.0, 10),
        ) {
            let t = Triangle::new(
                Point2::new(coords[0], coords[1]),
                Point2::new(coords[2], coords[3]),
                Point2::new(coords[4], coords[5]),
            );
            prop_assume!(t.area().abs() > 1e-2);
            // cubic times cubic: degree 6, integrated by a degree-6 rule vs. a degree-12 rule
            let exps = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];
            let f = |p: &Point2<f64>| {
                let pa: f64 = exps.iter().zip(&ca).map(|(&(i, j), c)| c * p.x.powi(i) * p.y.powi(j)).sum();
                let pb: f64 = exps.iter().zip(&cb).map(|(&(i, j), c)| c * p.x.powi(i) * p.y.powi(j)).sum();
                pa * pb
            };
            let lo = triangle_rule(&t, 6).integrate(f);
            let hi = triangle_rule(&t, 12).integrate(f);
            prop_assert!((lo - hi).abs() <= 1e-12 * (1.0 + hi.abs()));
        }
    }
}
