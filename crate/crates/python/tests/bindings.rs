use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn with_module<R>(f: impl FnOnce(Python<'_>, &Bound<'_, PyModule>) -> R) -> R {
    Python::initialize();
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(pybiot::pybiot)(py);
        f(py, m.bind(py))
    })
}

#[test]
fn mesh_info_reports_counts() {
    with_module(|_, m| {
        let info = m.getattr("mesh_info").unwrap().call1(("triangular", 1)).unwrap();
        let info = info.cast::<PyDict>().unwrap();
        let elements: usize = info.get_item("elements").unwrap().unwrap().extract().unwrap();
        let interior: usize = info.get_item("interior_faces").unwrap().unwrap().extract().unwrap();
        let boundary: usize = info.get_item("boundary_faces").unwrap().unwrap().extract().unwrap();
        assert_eq!(elements, 128);
        assert_eq!(3 * elements, 2 * interior + boundary);
    });
}

#[test]
fn unknown_family_raises_value_error() {
    with_module(|py, m| {
        let err = m.getattr("mesh_info").unwrap().call1(("pentagonal", 0)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
    });
}

#[test]
fn convergence_returns_one_record_per_level() {
    with_module(|_, m| {
        let kwargs = PyDict::new(m.py());
        kwargs.set_item("check_fluxes", true).unwrap();
        let out = m.getattr("convergence").unwrap().call(("triangular", vec![1u32, 2]), Some(&kwargs)).unwrap();
        let out = out.cast::<PyList>().unwrap();
        assert_eq!(out.len(), 2);
        let last = out.get_item(1).unwrap();
        let last = last.cast::<PyDict>().unwrap();
        let eoc: f64 = last.get_item("pressure_eoc").unwrap().unwrap().extract().unwrap();
        let flux: f64 = last.get_item("max_flux_residual").unwrap().unwrap().extract().unwrap();
        assert!(eoc > 1.5, "pressure EOC {eoc}");
        assert!(flux < 1e-10, "flux residual {flux}");
    });
}

#[test]
fn version_is_exposed() {
    with_module(|_, m| {
        let v: String = m.getattr("__version__").unwrap().extract().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    });
}
