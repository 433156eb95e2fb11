//! Checks the manufactured loads against the equations using automatic differentiation.
#![allow(clippy::needless_range_loop)]

use biot_hho::harness::Manufactured;
use biot_hho::problem::BiotData;
use nalgebra::Point2;
use num_dual::{first_derivative, second_derivative, second_partial_derivative, DualNum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Exact fields written independently of the library: `(u_x, u_y, p)`.
fn field<D: DualNum<Primitive = f64>>(i: usize, x: D, y: D, t: D) -> D {
    let (px, py, pt) = (x * PI, y * PI, t * PI);
    match i {
        0 => -pt.clone().sin() * px.cos() * py.cos(),
        1 => pt.sin() * px.sin() * py.sin(),
        _ => -pt.cos() * px.sin() * py.cos(),
    }
}

fn eval_at<D: DualNum<Primitive = f64>>(i: usize, pt: [f64; 3], subs: &[(usize, D)]) -> D {
    let mut a: [D; 3] = pt.map(D::from);
    for (v, d) in subs {
        a[*v] = d.clone();
    }
    let [x, y, t] = a;
    field(i, x, y, t)
}

fn d1(i: usize, a: usize, pt: [f64; 3]) -> f64 {
    first_derivative(|z| eval_at(i, pt, &[(a, z)]), pt[a]).1
}

fn d2(i: usize, a: usize, b: usize, pt: [f64; 3]) -> f64 {
    if a == b {
        second_derivative(|z| eval_at(i, pt, &[(a, z)]), pt[a]).2
    } else {
        second_partial_derivative(|(z1, z2)| eval_at(i, pt, &[(a, z1), (b, z2)]), (pt[a], pt[b])).3
    }
}

#[test]
fn loads_satisfy_the_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cases = [
        Manufactured::default(),
        Manufactured { mu: 2.5, lambda: 0.3, kappa: 0.1, c0: 1.7 },
    ];
    for m in cases {
        for _ in 0..200 {
            let pt = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let (mu, lambda) = (m.mu, m.lambda);
            let mut f = [0.0; 2];
            for c in 0..2 {
                let lap = d2(c, 0, 0, pt) + d2(c, 1, 1, pt);
                let grad_div = d2(0, c, 0, pt) + d2(1, c, 1, pt);
                f[c] = -mu * lap - (mu + lambda) * grad_div + d1(2, c, pt);
            }
            let g = m.c0 * d1(2, 2, pt) + d2(0, 2, 0, pt) + d2(1, 2, 1, pt) - m.kappa * (d2(2, 0, 0, pt) + d2(2, 1, 1, pt));
            let x = Point2::new(pt[0], pt[1]);
            let lf = m.load(&x, pt[2]);
            for c in 0..2 {
                assert!((lf[c] - f[c]).abs() < 1e-10 * (1.0 + f[c].abs()), "{m:?} {pt:?} {} vs {}", lf[c], f[c]);
            }
            assert!((m.source(&x, pt[2]) - g).abs() < 1e-10 * (1.0 + g.abs()));
            assert!((m.pressure(&x, pt[2]) - field(2, pt[0], pt[1], pt[2])).abs() < 1e-14);
            let u = m.displacement(&x, pt[2]);
            assert!((u[0] - field(0, pt[0], pt[1], pt[2])).abs() < 1e-14);
            assert!((u[1] - field(1, pt[0], pt[1], pt[2])).abs() < 1e-14);
            let gp = m.pressure_gradient(&x, pt[2]);
            assert!((gp[0] - d1(2, 0, pt)).abs() < 1e-12 && (gp[1] - d1(2, 1, pt)).abs() < 1e-12);
        }
    }
}

#[test]
fn unit_parameters_give_zero_fluid_source() {
    let m = Manufactured::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let x = Point2::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        assert_eq!(m.source(&x, rng.random_range(0.0..1.0)), 0.0);
    }
    // the load is ((4 mu + 2 lambda) pi^2 sin(pi t) + pi cos(pi t)) w, not 6 pi^2 (sin(pi t) + pi cos(pi t)) w
    let x = Point2::new(0.2, 0.3);
    let f = m.load(&x, 0.0);
    let w0 = -(PI * 0.2).cos() * (PI * 0.3).cos();
    assert!((f[0] - PI * w0).abs() < 1e-13);
}
