mod common;

use biot_hho::coupling::infsup_probe;
use biot_hho::dofmap::DofMap;
use biot_hho::fluxes::{discrete_stress, FluxOperators};
use biot_hho::hho::interpolate;
use biot_hho::mesh::generate_cartesian;
use biot_hho::problem::{BoundaryConditions, DisplacementBc, PressureBc, Physics};
use biot_hho::swip::{face_weights, FaceWeights};
use biot_hho::system::Discretization;
use common::{operator_errors, suite_meshes};
use nalgebra::DVector;

#[test]
fn operator_identities_hold_on_all_families() {
    for (name, mesh) in suite_meshes() {
        for k in 1..=3 {
            let e = operator_errors(&mesh, k, 7 + k as u64);
            let ctx = format!("{name} k={k}: {e:?}");
            assert!(e.commuting <= 1e-11, "{ctx}");
            assert!(e.stabilization_kernel <= 1e-11, "{ctx}");
            assert!(e.rigid_kernel <= 1e-12, "{ctx}");
            assert!(e.coupling_constant <= 1e-12, "{ctx}");
            assert!(e.swip_constant <= 1e-12, "{ctx}");
            assert!(e.adjoint <= 1e-12, "{ctx}");
            assert!(e.rewrite <= 1e-12, "{ctx}");
        }
    }
}

#[test]
fn swip_weights_are_robust_to_contrast() {
    let w = FaceWeights::new(1.0, 1e-6);
    assert!((w.omega[0] + w.omega[1] - 1.0).abs() < 1e-15);
    assert!(w.omega[1] > 0.999);
    assert!(w.lambda < 2.0 * 1e-6 && w.lambda > 1e-6);
    let mesh = generate_cartesian(2).unwrap();
    let weights = face_weights(&mesh, &[3.0; 4]);
    for (f, w) in mesh.faces().iter().zip(&weights) {
        if f.neighbor.is_some() {
            assert_eq!(w.omega, [0.5, 0.5]);
            assert!((w.lambda - 3.0).abs() < 1e-15);
        } else {
            assert_eq!(w.omega, [1.0, 0.0]);
        }
    }
}

#[test]
fn coupling_of_identity_field_is_minus_twice_the_area() {
    for (name, mesh) in suite_meshes() {
        for k in 1..=3 {
            let disc =
                Discretization::new(mesh.clone(), k, Physics::new(1.0, 1.0, 0.0, 1.0), BoundaryConditions::default())
                    .unwrap();
            let sol = disc.interpolate_displacement(|p| [p.x, p.y]);
            let b = disc.coupling_product(&sol);
            let ones = disc.project_pressure(|_| 1.0);
            let nk = disc.nk();
            for (e, le) in disc.locals.iter().enumerate() {
                let bt = b.rows(e * nk, nk).dot(&ones.rows(e * nk, nk));
                assert!((bt + 2.0 * le.measure).abs() < 1e-12, "{name} k={k} element {e}: {bt}");
            }
        }
    }
}

#[test]
fn discrete_stress_of_rigid_and_identity_fields() {
    let (mu, lambda) = (1.3, 0.7);
    for (name, mesh) in suite_meshes() {
        for k in 1..=3 {
            for le in common::locals(&mesh, k) {
                let ker = biot_hho::hho::ElasticityKernel::build(&le).unwrap();
                let s = discrete_stress(&le, &ker, mu, lambda);
                let nk = le.nk();
                let bk = le.basis_k();
                for rigid in [interpolate(&le, |_| [1.0, -2.0]), interpolate(&le, |p| [-p.y, p.x])] {
                    let sr = &s * rigid;
                    for (p, _) in le.rule.iter() {
                        for b in 0..3 {
                            let v = bk.evaluate(&sr.as_slice()[b * nk..(b + 1) * nk], p);
                            assert!(v.abs() < 1e-11, "{name} k={k}: {v:e}");
                        }
                    }
                }
                let sx = &s * interpolate(&le, |p| [p.x, p.y]);
                for (p, _) in le.rule.iter() {
                    let at = |b: usize| bk.evaluate(&sx.as_slice()[b * nk..(b + 1) * nk], p);
                    let expect = 2.0 * mu + 2.0 * lambda;
                    assert!((at(0) - expect).abs() < 1e-11 && (at(1) - expect).abs() < 1e-11, "{name} k={k}");
                    assert!(at(2).abs() < 1e-11, "{name} k={k}");
                }
                // random v: pointwise recomposition from r_T and D_T
                let v = DVector::from_fn(le.ndof(), |i, _| ((i * 37 % 11) as f64 - 5.0) / 5.0);
                let r = &ker.reconstruction * &v;
                let d = &ker.divergence * &v;
                let sv = &s * &v;
                let nk1 = le.nk1();
                for (p, _) in le.rule.iter() {
                    let (mut gx, mut gy) = (vec![0.0; nk1], vec![0.0; nk1]);
                    le.basis.grad_into(p, &mut gx, &mut gy);
                    let dot = |c: &[f64], g: &[f64]| c.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
                    let (rx, ry) = (&r.as_slice()[..nk1], &r.as_slice()[nk1..]);
                    let div = bk.evaluate(d.as_slice(), p);
                    let at = |b: usize| bk.evaluate(&sv.as_slice()[b * nk..(b + 1) * nk], p);
                    assert!((at(0) - (2.0 * mu * dot(rx, &gx) + lambda * div)).abs() < 1e-10);
                    assert!((at(1) - (2.0 * mu * dot(ry, &gy) + lambda * div)).abs() < 1e-10);
                    assert!((at(2) - mu * (dot(rx, &gy) + dot(ry, &gx))).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn traction_of_constant_pressure_at_rest() {
    for (name, mesh) in suite_meshes() {
        for k in 1..=2 {
            let disc =
                Discretization::new(mesh.clone(), k, Physics::new(1.0, 2.0, 0.0, 1.0), BoundaryConditions::default())
                    .unwrap();
            let ops = FluxOperators::new(&disc);
            let p = disc.project_pressure(|_| 2.5);
            let nk = disc.nk();
            let nf = disc.nf();
            for (e, le) in disc.locals.iter().enumerate() {
                let u = DVector::zeros(le.ndof());
                let phis = ops.tractions(&disc, e, &u, &p.as_slice()[e * nk..(e + 1) * nk]);
                for (lf, phi) in le.faces.iter().zip(&phis) {
                    for q in 0..lf.rule.weights.len() {
                        let val = |c: usize| (0..nf).map(|j| phi[c * nf + j] * lf.phi[(j, q)]).sum::<f64>();
                        assert!((val(0) + 2.5 * lf.normal.x).abs() < 1e-12, "{name} k={k}");
                        assert!((val(1) + 2.5 * lf.normal.y).abs() < 1e-12, "{name} k={k}");
                    }
                }
            }
        }
    }
}

#[test]
fn infsup_constant_does_not_degenerate() {
    let values: Vec<f64> = [2, 4, 8]
        .into_iter()
        .map(|n| {
            let disc = Discretization::new(
                generate_cartesian(n).unwrap(),
                1,
                Physics::new(1.0, 1.0, 0.0, 1.0),
                BoundaryConditions::default(),
            )
            .unwrap();
            infsup_probe(&disc, true).unwrap()
        })
        .collect();
    assert!(values.iter().all(|&v| v > 0.0), "{values:?}");
    let drop = 1.0 - values.iter().copied().fold(f64::INFINITY, f64::min) / values[0];
    assert!(drop < 0.2, "{values:?}");
}

#[test]
fn infsup_probe_refuses_large_meshes() {
    let disc = Discretization::new(
        generate_cartesian(16).unwrap(),
        1,
        Physics::new(1.0, 1.0, 0.0, 1.0),
        BoundaryConditions::default(),
    )
    .unwrap();
    assert!(matches!(infsup_probe(&disc, true), Err(biot_hho::Error::MeshTooLarge { .. })));
}

#[test]
fn condensed_size_matches_closed_formula() {
    for (name, mesh) in suite_meshes() {
        for k in 1..=3 {
            for c0 in [0.0, 1.0] {
                let bc = BoundaryConditions { displacement: DisplacementBc::Clamped, pressure: PressureBc::Neumann };
                let disc = Discretization::new(mesh.clone(), k, Physics::new(1.0, 1.0, c0, 1.0), bc).unwrap();
                let multiplier = c0 == 0.0;
                assert_eq!(disc.dofmap.multiplier, multiplier);
                let expected = DofMap::predicted_condensed_size(&mesh, k, multiplier);
                assert_eq!(disc.condensed_matrix(0.1, 1.0).unwrap().nrows(), expected, "{name} k={k}");
                if k == 1 {
                    // four unknowns per interior face and three per element
                    let lowest = 4 * mesh.num_interior_faces() + 3 * mesh.num_elements() + usize::from(multiplier);
                    assert_eq!(expected, lowest);
                }
            }
        }
    }
}
