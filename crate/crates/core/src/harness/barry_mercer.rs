//! Barry–Mercer benchmark: periodic point source in a square with sliding
//! walls and zero boundary pressure.

use std::f64::consts::PI;

use nalgebra::{DVector, Point2};
use serde::Serialize;

use crate::error::Result;
use crate::mesh::PolyMesh;
use crate::problem::{BiotData, BoundaryConditions, DisplacementBc, PressureBc, Physics};
use crate::sparse::SolverKind;
use crate::system::{Discretization, Solution};
use crate::timestepping::{Scheme, TimeStepper};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarryMercer {
    pub young: f64,
    pub poisson: f64,
    pub kappa: f64,
    pub source: Point2<f64>,
}

impl Default for BarryMercer {
    fn default() -> Self {
        Self { young: 1e5, poisson: 0.1, kappa: 1e-2, source: Point2::new(0.25, 0.25) }
    }
}

impl BarryMercer {
    pub fn lame(&self) -> (f64, f64) {
        Physics::lame_from_young(self.young, self.poisson)
    }

    /// `beta = (lambda + 2 mu) kappa`, so that the normalized time is `beta t`.
    pub fn beta(&self) -> f64 {
        let (mu, lambda) = self.lame();
        (lambda + 2.0 * mu) * self.kappa
    }

    pub fn physics(&self) -> Physics {
        let (mu, lambda) = self.lame();
        Physics::new(mu, lambda, 0.0, self.kappa)
    }

    pub fn boundary_conditions() -> BoundaryConditions {
        BoundaryConditions { displacement: DisplacementBc::Sliding, pressure: PressureBc::Dirichlet }
    }

    /// One hundred steps per source period.
    pub fn default_tau(&self) -> f64 {
        2.0 * PI / self.beta() * 1e-2
    }
}

impl BiotData for BarryMercer {
    fn point_sources(&self, t: f64) -> Vec<(Point2<f64>, f64)> {
        vec![(self.source, (self.beta() * t).sin())]
    }
}

/// Pressure sampled along the diagonal `(0,0)-(1,1)` at `s = (i + 1/2) / n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
}

/// Broken pressure at `x`, averaged over the elements that contain it.
pub fn pressure_at_point(disc: &Discretization, p: &DVector<f64>, x: &Point2<f64>) -> f64 {
    let owners = disc.mesh.locate(x);
    if owners.is_empty() {
        return f64::NAN;
    }
    owners.iter().map(|&e| disc.pressure_at(p, e, x)).sum::<f64>() / owners.len() as f64
}

pub fn diagonal_profile(disc: &Discretization, p: &DVector<f64>, samples: usize) -> Profile {
    let s: Vec<f64> = (0..samples).map(|i| (i as f64 + 0.5) / samples as f64).collect();
    let values = s.iter().map(|&si| pressure_at_point(disc, p, &Point2::new(si, si))).collect();
    Profile { s, values }
}

/// Pearson correlation of two equally sampled profiles.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationReport {
    /// Trend reversals outside the exclusion zone larger than the tolerance.
    pub extrema: usize,
    /// Largest reversal relative to `max |p|`.
    pub max_amplitude: f64,
}

/// Counts spurious local extrema of a profile on the two sides of the source.
///
/// Along the diagonal the pressure should rise monotonically towards the
/// source and fall monotonically beyond it. Samples within `exclusion` of the
/// source (distance measured in the plane) are skipped. On each side the
/// profile is split into monotone runs; a run against the expected trend whose
/// total variation exceeds `tol * max |p|` counts as one spurious extremum.
pub fn oscillation_indicator(profile: &Profile, source: &Point2<f64>, exclusion: f64, tol: f64) -> OscillationReport {
    let peak = profile.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return OscillationReport { extrema: 0, max_amplitude: 0.0 };
    }
    let dist = |s: f64| ((s - source.x).powi(2) + (s - source.y).powi(2)).sqrt();
    let s0 = 0.5 * (source.x + source.y);
    let mut report = OscillationReport { extrema: 0, max_amplitude: 0.0 };
    // expected sign of the derivative along s: +1 before the source, -1 after
    let sign_at_peak = profile
        .s
        .iter()
        .zip(&profile.values)
        .min_by(|a, b| dist(*a.0).total_cmp(&dist(*b.0)))
        .map(|(_, v)| v.signum())
        .unwrap_or(1.0);
    for (side, trend) in [(true, sign_at_peak), (false, -sign_at_peak)] {
        let vals: Vec<f64> = profile
            .s
            .iter()
            .zip(&profile.values)
            .filter(|(s, _)| (**s < s0) == side && dist(**s) > exclusion)
            .map(|(_, v)| *v)
            .collect();
        let mut run = 0.0;
        for w in vals.windows(2) {
            let d = (w[1] - w[0]) * trend;
            if d < 0.0 {
                run -= d;
            } else if run > 0.0 {
                close_run(&mut report, run, peak, tol);
                run = 0.0;
            }
        }
        close_run(&mut report, run, peak, tol);
    }
    report
}

fn close_run(report: &mut OscillationReport, run: f64, peak: f64, tol: f64) {
    let rel = run / peak;
    if rel > tol {
        report.extrema += 1;
    }
    report.max_amplitude = report.max_amplitude.max(rel);
}

/// Relative L2 difference between the computed profile and reference samples `(s, p)`.
pub fn profile_error(disc: &Discretization, p: &DVector<f64>, reference: &[(f64, f64)]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &(s, r) in reference {
        let v = pressure_at_point(disc, p, &Point2::new(s, s));
        num += (v - r) * (v - r);
        den += r * r;
    }
    (num / den).sqrt()
}

pub fn read_reference_profile(path: &std::path::Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        let (s, p): (f64, f64) = rec?;
        out.push((s, p));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t_hat: f64,
    pub profile: Profile,
    pub solution: Solution,
}

#[derive(Debug, Clone)]
pub struct BarryMercerOptions {
    pub k: usize,
    pub tau: f64,
    pub scheme: Scheme,
    /// Normalized times at which profiles are taken.
    pub snapshots: Vec<f64>,
    /// Step indices at which profiles are taken, in addition to `snapshots`.
    pub snapshot_steps: Vec<usize>,
    /// Final normalized time.
    pub t_hat_final: f64,
    /// Overrides `t_hat_final` with a fixed number of steps.
    pub steps: Option<usize>,
    pub samples: usize,
    pub solver: SolverKind,
}

impl BarryMercerOptions {
    pub fn standard(case: &BarryMercer) -> Self {
        Self {
            k: 1,
            tau: case.default_tau(),
            scheme: Scheme::Bdf2,
            snapshots: vec![PI / 2.0, 1.5 * PI],
            snapshot_steps: Vec::new(),
            t_hat_final: 2.0 * PI,
            steps: None,
            samples: 400,
            solver: SolverKind::Direct,
        }
    }
}

pub struct BarryMercerRun {
    pub disc: Discretization,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    pub final_t_hat: f64,
}

/// Marches to `t_hat_final` and records a profile at the step closest to each snapshot time.
pub fn run_barry_mercer(mesh: PolyMesh, case: &BarryMercer, opts: &BarryMercerOptions) -> Result<BarryMercerRun> {
    let disc = Discretization::with_solver(mesh, opts.k, case.physics(), BarryMercer::boundary_conditions(), opts.solver)?;
    let beta = case.beta();
    let steps = opts.steps.unwrap_or_else(|| (opts.t_hat_final / (beta * opts.tau) - 1e-9).ceil().max(1.0) as usize);
    let mut wanted: Vec<usize> = opts.snapshots.iter().map(|th| (th / (beta * opts.tau)).round() as usize).collect();
    wanted.extend(&opts.snapshot_steps);
    let mut snapshots = Vec::new();
    let last = {
        let stepper = TimeStepper::new(&disc, case, opts.tau, opts.scheme)?;
        stepper.run(steps, |state| {
            if wanted.contains(&state.n) {
                snapshots.push(Snapshot {
                    step: state.n,
                    t_hat: beta * state.t(),
                    profile: diagonal_profile(&disc, &state.current.solution.pressure, opts.samples),
                    solution: state.current.solution.clone(),
                });
            }
            Ok(())
        })?
    };
    let final_t_hat = beta * last.t();
    Ok(BarryMercerRun { disc, snapshots, steps, final_t_hat })
}
