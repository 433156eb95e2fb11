use std::sync::OnceLock;

use biot_hho::harness::barry_mercer::{correlation, oscillation_indicator, Profile};
use biot_hho::harness::convergence::{eoc, TauRule};
use biot_hho::harness::export::{read_vtk, sample_fields, write_vtk};
use biot_hho::mesh::MeshFamily;
use biot_hho::problem::{BoundaryConditions, Physics};
use biot_hho::swip::FaceWeights;
use biot_hho::system::{Discretization, MechanicalData};
use biot_hho::timestepping::uniform_steps;
use nalgebra::{DVector, Point2};
use proptest::prelude::*;

fn shared_disc() -> &'static Discretization {
    static DISC: OnceLock<Discretization> = OnceLock::new();
    DISC.get_or_init(|| {
        Discretization::new(
            MeshFamily::Voronoi.generate(0).unwrap(),
            2,
            Physics::new(1.0, 2.0, 0.2, 0.5),
            BoundaryConditions::default(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eoc_ignores_common_error_scale(e1 in 1e-8f64..1.0, ratio in 1.01f64..20.0, h in 1e-3f64..1.0, c in 1e-6f64..1e6) {
        let e2 = e1 / ratio;
        let r = eoc(e1, e2, h, h / 2.0);
        prop_assert!((eoc(c * e1, c * e2, h, h / 2.0) - r).abs() < 1e-9 * r.abs().max(1.0));
        prop_assert!((r - ratio.log2()).abs() < 1e-9 * r.abs().max(1.0));
    }

    #[test]
    fn uniform_steps_cover_the_interval(t_final in 0.01f64..10.0, frac in 1e-3f64..1.0) {
        let target = t_final * frac;
        let (n, tau) = uniform_steps(t_final, target);
        prop_assert!(n >= 1);
        prop_assert!(tau <= target * (1.0 + 1e-9));
        prop_assert!((n as f64 * tau - t_final).abs() < 1e-12 * t_final);
    }

    #[test]
    fn scaled_tau_rule_follows_mesh_halving(base in 1e-3f64..1.0, k in 1usize..4, level in 0u32..5) {
        let rule = TauRule::Scaled { base };
        let ratio = rule.tau(k, level) / rule.tau(k, level + 1);
        prop_assert!((ratio - 2f64.powf((k + 1) as f64 / 2.0)).abs() < 1e-12 * ratio);
    }

    #[test]
    fn swip_weights_are_convex_and_harmonic(k1 in 1e-8f64..1e4, k2 in 1e-8f64..1e4) {
        let w = FaceWeights::new(k1, k2);
        let s = FaceWeights::new(k2, k1);
        prop_assert!((w.omega[0] + w.omega[1] - 1.0).abs() < 1e-14);
        prop_assert!(w.omega.iter().all(|&o| (0.0..=1.0).contains(&o)));
        prop_assert!((w.lambda - s.lambda).abs() <= 1e-14 * w.lambda);
        prop_assert!(w.lambda >= k1.min(k2) * (1.0 - 1e-14) && w.lambda <= 2.0 * k1.min(k2) * (1.0 + 1e-14));
        // w_1 kappa_1 is half the harmonic mean
        prop_assert!((w.omega[0] * k1 - w.lambda / 2.0).abs() <= 1e-12 * w.lambda);
    }

    #[test]
    fn lame_conversion_recovers_young_and_poisson(e in 1.0f64..1e7, nu in 0.0f64..0.49) {
        let (mu, lambda) = Physics::lame_from_young(e, nu);
        let young = mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu);
        let poisson = lambda / (2.0 * (lambda + mu));
        prop_assert!((young - e).abs() < 1e-10 * e);
        prop_assert!((poisson - nu).abs() < 1e-12);
    }

    #[test]
    fn correlation_is_affine_invariant(v in prop::collection::vec(-10.0f64..10.0, 3..40), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let spread = v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
        prop_assume!(spread > 1e-3);
        let w: Vec<f64> = v.iter().map(|x| a * x + b).collect();
        let neg: Vec<f64> = v.iter().map(|x| -a * x + b).collect();
        prop_assert!((correlation(&v, &w) - 1.0).abs() < 1e-9);
        prop_assert!((correlation(&v, &neg) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn unimodal_profiles_have_no_spurious_extrema(rise in prop::collection::vec(0.0f64..1.0, 60), fall in prop::collection::vec(0.0f64..1.0, 60)) {
        // increasing up to the source at s = 0.3, decreasing afterwards
        let mut values = Vec::new();
        let mut acc = 0.0;
        for r in &rise {
            acc += r;
            values.push(acc);
        }
        for f in &fall {
            acc -= f;
            values.push(acc);
        }
        let s: Vec<f64> = (0..120).map(|i| 0.3 * (i as f64 + 0.5) / 60.0).map(|x| if x > 0.3 { 0.3 + (x - 0.3) * 7.0 / 3.0 } else { x }).collect();
        let profile = Profile { s, values };
        let r = oscillation_indicator(&profile, &Point2::new(0.3, 0.3), 0.0, 1e-6);
        prop_assert_eq!(r.extrema, 0);
    }

    #[test]
    fn condensed_solve_is_linear(alpha in -3.0f64..3.0, seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let d = shared_disc();
        let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let sys = d.condensed_system(0.1, 1.5).unwrap();
        let nt = 2 * d.nk();
        let ne = d.mesh.num_elements();
        let nf = 2 * d.nf();
        let mech = MechanicalData {
            load: (0..ne).map(|_| DVector::from_fn(nt, |_, _| g.random_range(-1.0..1.0))).collect(),
            prescribed: (0..d.mesh.num_faces()).map(|_| DVector::zeros(nf)).collect(),
        };
        let flow = DVector::from_fn(d.dofmap.num_pressure(), |_, _| g.random_range(-1.0..1.0));
        let a = d.solve_condensed(&sys, &mech, &flow).unwrap();
        let scaled = MechanicalData { load: mech.load.iter().map(|l| l * alpha).collect(), prescribed: mech.prescribed.clone() };
        let b = d.solve_condensed(&sys, &scaled, &(&flow * alpha)).unwrap();
        let tol = 1e-9 * (1.0 + a.pressure.amax());
        prop_assert!((&b.pressure - &a.pressure * alpha).amax() < tol);
        for (x, y) in a.face_unknowns.iter().zip(&b.face_unknowns) {
            prop_assert!((y - alpha * x).abs() < tol);
        }
    }

    #[test]
    fn export_roundtrip_for_any_scale(scale in -1e3f64..1e3, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let d = shared_disc();
        let mut sol = d.interpolate_displacement(|p| [a * p.x * p.y, b * (p.x - p.y)]);
        sol.pressure = d.project_pressure(|p| a * p.x.sin() + b);
        let samples = sample_fields(d, &sol);
        let mut buf = Vec::new();
        write_vtk(&samples, scale, &mut buf).unwrap();
        prop_assert_eq!(read_vtk(buf.as_slice()).unwrap(), samples);
    }
}
