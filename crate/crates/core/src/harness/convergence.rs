//! Space and time convergence studies on the manufactured solution.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fluxes::{flux_report, FluxOperators, FluxReport};
use crate::harness::manufactured::Manufactured;
use crate::mesh::PolyMesh;
use crate::problem::BoundaryConditions;
use crate::sparse::SolverKind;
use crate::system::{Discretization, Solution};
use crate::timestepping::{uniform_steps, Scheme, TimeStepper, TransientState};

/// Time step per refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum TauRule {
    Fixed { tau: f64 },
    /// `tau = base / 2^((k+1)/2)` on the first level, divided by `2^((k+1)/2)` at each halving of `h`.
    Scaled { base: f64 },
}

impl Default for TauRule {
    fn default() -> Self {
        TauRule::Scaled { base: 0.1 }
    }
}

impl TauRule {
    /// Target step for the level `refinements` halvings above the first.
    pub fn tau(&self, k: usize, refinements: u32) -> f64 {
        match *self {
            TauRule::Fixed { tau } => tau,
            TauRule::Scaled { base } => base * 2f64.powf(-((k + 1) as f64) / 2.0 * (refinements as f64 + 1.0)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub label: String,
    pub elements: usize,
    pub h: f64,
    pub tau: f64,
    pub steps: usize,
    pub unknowns: usize,
    pub pressure_error: f64,
    pub displacement_error: f64,
    pub pressure_eoc: Option<f64>,
    pub displacement_eoc: Option<f64>,
    /// Largest relative conservation residual over all steps, when requested.
    pub max_flux_residual: Option<f64>,
    pub seconds: f64,
}

/// `log(e1 / e2) / log(h1 / h2)`.
pub fn eoc(e1: f64, e2: f64, h1: f64, h2: f64) -> f64 {
    (e1 / e2).ln() / (h1 / h2).ln()
}

/// Fills EOC columns between consecutive records, using `h` or (for time studies) `tau`.
pub fn fill_eoc(records: &mut [ErrorRecord], in_time: bool) {
    for i in 1..records.len() {
        let (a, b) = (&records[i - 1], &records[i]);
        let (s1, s2) = if in_time { (a.tau, b.tau) } else { (a.h, b.h) };
        let pe = eoc(a.pressure_error, b.pressure_error, s1, s2);
        let de = eoc(a.displacement_error, b.displacement_error, s1, s2);
        records[i].pressure_eoc = Some(pe);
        records[i].displacement_eoc = Some(de);
    }
}

/// `||p_h - pi^k p||` and `||u_h - I_h u||_{a,h}` at time `t`.
pub fn errors(disc: &Discretization, exact: &Manufactured, sol: &Solution, t: f64) -> (f64, f64) {
    let dp: DVector<f64> = &sol.pressure - disc.project_pressure(|x| exact.pressure(x, t));
    let pe = dp.dot(&disc.mass_product(&dp)).max(0.0).sqrt();
    let iu = disc.interpolate_displacement(|x| exact.displacement(x, t));
    let ue: f64 = (0..disc.mesh.num_elements())
        .map(|e| {
            let d = disc.local_displacement(sol, e) - disc.local_displacement(&iu, e);
            d.dot(&(&disc.stiffness[e] * &d))
        })
        .sum();
    (pe, ue.max(0.0).sqrt())
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub k: usize,
    pub scheme: Scheme,
    pub t_final: f64,
    pub solver: SolverKind,
    pub check_fluxes: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { k: 1, scheme: Scheme::Bdf2, t_final: 1.0, solver: SolverKind::Direct, check_fluxes: false }
    }
}

/// Runs the manufactured case on one mesh with target step `tau_target`.
pub fn run_level(
    label: &str,
    mesh: PolyMesh,
    exact: &Manufactured,
    tau_target: f64,
    opts: &RunOptions,
) -> Result<ErrorRecord> {
    run_level_observed(label, mesh, exact, tau_target, opts, |_, _, _| Ok(()))
}

/// As [`run_level`], calling `observe` after every step with the flux report when fluxes are checked.
pub fn run_level_observed(
    label: &str,
    mesh: PolyMesh,
    exact: &Manufactured,
    tau_target: f64,
    opts: &RunOptions,
    mut observe: impl FnMut(&Discretization, &TransientState, Option<&FluxReport>) -> Result<()>,
) -> Result<ErrorRecord> {
    let start = Instant::now();
    let elements = mesh.num_elements();
    let h = mesh.mesh_size();
    let disc = Discretization::with_solver(mesh, opts.k, exact.physics(), BoundaryConditions::default(), opts.solver)?;
    let (steps, tau) = uniform_steps(opts.t_final, tau_target);
    let stepper = TimeStepper::new(&disc, exact, tau, opts.scheme)?;
    let ops = opts.check_fluxes.then(|| FluxOperators::new(&disc));
    let mut worst: Option<f64> = None;
    let last = stepper.run(steps, |state| {
        let report = match (&ops, state.n > 0) {
            (Some(ops), true) => Some(flux_report(&disc, ops, exact, state, tau)),
            _ => None,
        };
        if let Some(r) = &report {
            let r = r.max_relative();
            worst = Some(worst.map_or(r, |w: f64| w.max(r)));
        }
        observe(&disc, state, report.as_ref())
    })?;
    let (pressure_error, displacement_error) = errors(&disc, exact, &last.current.solution, last.t());
    Ok(ErrorRecord {
        label: label.to_string(),
        elements,
        h,
        tau,
        steps,
        unknowns: disc.dofmap.condensed_size(),
        pressure_error,
        displacement_error,
        pressure_eoc: None,
        displacement_eoc: None,
        max_flux_residual: worst,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Spatial study over `meshes` (coarse to fine, `h` halving) with the given step rule.
pub fn run_convergence(
    meshes: Vec<(String, PolyMesh)>,
    exact: &Manufactured,
    rule: TauRule,
    opts: &RunOptions,
) -> Result<Vec<ErrorRecord>> {
    let mut out = Vec::new();
    for (i, (label, mesh)) in meshes.into_iter().enumerate() {
        let tau = rule.tau(opts.k, i as u32);
        out.push(run_level(&label, mesh, exact, tau, opts)?);
    }
    fill_eoc(&mut out, false);
    Ok(out)
}

/// Temporal study on a fixed mesh.
pub fn run_time_convergence(
    mesh: &PolyMesh,
    exact: &Manufactured,
    taus: &[f64],
    opts: &RunOptions,
) -> Result<Vec<ErrorRecord>> {
    let mut out = Vec::new();
    for &tau in taus {
        out.push(run_level(&format!("tau={tau}"), mesh.clone(), exact, tau, opts)?);
    }
    fill_eoc(&mut out, true);
    Ok(out)
}

pub fn write_records_csv(records: &[ErrorRecord], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
