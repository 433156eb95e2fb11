//! Python bindings for the Biot HHO solver.

use pyo3::prelude::*;

#[pymodule]
pub mod pybiot {
    use std::f64::consts::PI;

    use biot_hho::harness::barry_mercer::{run_barry_mercer, BarryMercer, BarryMercerOptions};
    use biot_hho::harness::checks::check_barry_mercer;
    use biot_hho::harness::convergence::{run_convergence, run_time_convergence, ErrorRecord, RunOptions, TauRule};
    use biot_hho::harness::Manufactured;
    use biot_hho::mesh::{regularity_report, MeshFamily, PolyMesh};
    use biot_hho::problem::{BoundaryConditions, Physics};
    use biot_hho::system::Discretization;
    use biot_hho::timestepping::Scheme;
    use pyo3::exceptions::{PyRuntimeError, PyValueError};
    use pyo3::prelude::*;
    use pyo3::types::PyDict;

    fn runtime(e: biot_hho::Error) -> PyErr {
        PyRuntimeError::new_err(e.to_string())
    }

    fn value(e: biot_hho::Error) -> PyErr {
        PyValueError::new_err(e.to_string())
    }

    fn family(name: &str) -> PyResult<MeshFamily> {
        name.parse().map_err(value)
    }

    fn scheme(name: &str) -> PyResult<Scheme> {
        name.parse().map_err(value)
    }

    fn generate(name: &str, level: u32) -> PyResult<PolyMesh> {
        family(name)?.generate(level).map_err(value)
    }

    fn record_dict<'py>(py: Python<'py>, r: &ErrorRecord) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        d.set_item("label", &r.label)?;
        d.set_item("elements", r.elements)?;
        d.set_item("h", r.h)?;
        d.set_item("tau", r.tau)?;
        d.set_item("steps", r.steps)?;
        d.set_item("unknowns", r.unknowns)?;
        d.set_item("pressure_error", r.pressure_error)?;
        d.set_item("displacement_error", r.displacement_error)?;
        d.set_item("pressure_eoc", r.pressure_eoc)?;
        d.set_item("displacement_eoc", r.displacement_eoc)?;
        d.set_item("max_flux_residual", r.max_flux_residual)?;
        d.set_item("seconds", r.seconds)?;
        Ok(d)
    }

    /// Statistics of a generated mesh.
    #[pyfunction]
    #[pyo3(signature = (family, level = 0))]
    fn mesh_info<'py>(py: Python<'py>, family: &str, level: u32) -> PyResult<Bound<'py, PyDict>> {
        let mesh = generate(family, level)?;
        let report = regularity_report(&mesh).map_err(value)?;
        let d = PyDict::new(py);
        d.set_item("elements", mesh.num_elements())?;
        d.set_item("faces", mesh.num_faces())?;
        d.set_item("interior_faces", mesh.num_interior_faces())?;
        d.set_item("boundary_faces", mesh.num_boundary_faces())?;
        d.set_item("h", report.h)?;
        d.set_item("max_faces_per_element", report.max_faces_per_element)?;
        d.set_item("min_inradius_ratio", report.min_inradius_ratio)?;
        Ok(d)
    }

    /// Size of the statically condensed system with clamped displacement and Neumann pressure.
    #[pyfunction]
    #[pyo3(signature = (family, level, k, c0 = 0.0))]
    fn condensed_size(py: Python<'_>, family: &str, level: u32, k: usize, c0: f64) -> PyResult<usize> {
        let mesh = generate(family, level)?;
        py.detach(|| {
            let disc = Discretization::new(mesh, k, Physics::new(1.0, 1.0, c0, 1.0), BoundaryConditions::default())?;
            Ok(disc.dofmap.condensed_size())
        })
        .map_err(runtime)
    }

    /// Manufactured-solution study on consecutive levels of a mesh family.
    #[pyfunction]
    #[pyo3(signature = (family, levels, k = 1, scheme = "bdf2", t_final = 1.0, tau_base = 0.1, check_fluxes = false, c0 = 0.0))]
    #[allow(clippy::too_many_arguments)]
    fn convergence<'py>(
        py: Python<'py>,
        family: &str,
        levels: Vec<u32>,
        k: usize,
        scheme: &str,
        t_final: f64,
        tau_base: f64,
        check_fluxes: bool,
        c0: f64,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let fam = self::family(family)?;
        let opts = RunOptions { k, scheme: self::scheme(scheme)?, t_final, check_fluxes, ..Default::default() };
        let exact = Manufactured { c0, ..Default::default() };
        let records = py
            .detach(|| {
                let meshes = levels
                    .iter()
                    .map(|&l| Ok((format!("{}-{l}", fam.name()), fam.generate(l)?)))
                    .collect::<biot_hho::Result<Vec<_>>>()?;
                run_convergence(meshes, &exact, TauRule::Scaled { base: tau_base }, &opts)
            })
            .map_err(runtime)?;
        records.iter().map(|r| record_dict(py, r)).collect()
    }

    /// Temporal study on one mesh for a list of step sizes.
    #[pyfunction]
    #[pyo3(signature = (family, level, taus, k = 2, scheme = "bdf2", t_final = 1.0))]
    fn time_convergence<'py>(
        py: Python<'py>,
        family: &str,
        level: u32,
        taus: Vec<f64>,
        k: usize,
        scheme: &str,
        t_final: f64,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let mesh = generate(family, level)?;
        let opts = RunOptions { k, scheme: self::scheme(scheme)?, t_final, ..Default::default() };
        let records = py
            .detach(|| run_time_convergence(&mesh, &Manufactured::default(), &taus, &opts))
            .map_err(runtime)?;
        records.iter().map(|r| record_dict(py, r)).collect()
    }

    /// Barry–Mercer run; returns diagonal profiles at the requested normalized times and shape checks.
    #[pyfunction]
    #[pyo3(signature = (family = "hexagonal", level = 3, kappa = 1e-2, samples = 400, snapshots = vec![PI / 2.0, 1.5 * PI], oscillation_tol = 1e-2))]
    fn barry_mercer<'py>(
        py: Python<'py>,
        family: &str,
        level: u32,
        kappa: f64,
        samples: usize,
        snapshots: Vec<f64>,
        oscillation_tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mesh = generate(family, level)?;
        let h = mesh.mesh_size();
        let case = BarryMercer { kappa, ..Default::default() };
        let opts = BarryMercerOptions { samples, snapshots, ..BarryMercerOptions::standard(&case) };
        let run = py.detach(|| run_barry_mercer(mesh, &case, &opts)).map_err(runtime)?;
        let out = PyDict::new(py);
        out.set_item("steps", run.steps)?;
        out.set_item("final_t_hat", run.final_t_hat)?;
        let profiles = run
            .snapshots
            .iter()
            .map(|s| {
                let d = PyDict::new(py);
                d.set_item("step", s.step)?;
                d.set_item("t_hat", s.t_hat)?;
                d.set_item("s", s.profile.s.clone())?;
                d.set_item("pressure", s.profile.values.clone())?;
                Ok(d)
            })
            .collect::<PyResult<Vec<_>>>()?;
        out.set_item("profiles", profiles)?;
        let checks: Vec<(String, bool, String)> = check_barry_mercer(&run.snapshots, &case, h, oscillation_tol)
            .into_iter()
            .map(|c| (c.name, c.passed, c.detail))
            .collect();
        out.set_item("checks", checks)?;
        Ok(out)
    }

    #[pymodule_init]
    fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
        m.add("__version__", env!("CARGO_PKG_VERSION"))
    }
}
