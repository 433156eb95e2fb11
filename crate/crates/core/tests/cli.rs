use std::path::Path;
use std::process::Command;

use biot_hho::harness::export::read_vtk;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_biot-hho"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn converge_writes_tables_and_passes_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "tri.toml",
        &format!(
            "version = 1\ncase = \"manufactured\"\ndegree = 1\nfluxes = true\nexport_scale = 0.0\noutput = {:?}\n\
             [mesh]\nfamily = \"triangular\"\nlevels = [0, 1, 2]\n",
            out
        ),
    );
    let res = bin().args(["converge", cfg.to_str().unwrap(), "--check"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(res.status.success(), "{stdout}\n{}", String::from_utf8_lossy(&res.stderr));
    assert!(stdout.contains("PASS k=1 spatial EOC"));
    assert!(stdout.contains("PASS k=1 conservation"));
    let table = std::fs::read_to_string(out.join("errors.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let steps = std::fs::read_to_string(out.join("steps_triangular-2.csv")).unwrap();
    // header, initial level and 80 steps
    assert_eq!(steps.lines().count(), 82);
    let fluxes = std::fs::read_to_string(out.join("fluxes_triangular-0.csv")).unwrap();
    assert_eq!(fluxes.lines().count(), 21);
    // exact pressure at t = 1 ranges over [-1, 1]
    let vtk = read_vtk(std::io::BufReader::new(std::fs::File::open(out.join("final_triangular-2.vtk")).unwrap())).unwrap();
    let (lo, hi) = vtk.pressure.iter().fold((f64::MAX, f64::MIN), |(a, b), &p| (a.min(p), b.max(p)));
    assert!(lo >= -1.1 && hi <= 1.1 && hi - lo > 1.8, "pressure range [{lo}, {hi}]");
}

#[test]
fn failed_check_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "one.toml",
        &format!(
            "version = 1\ncase = \"manufactured\"\noutput = {:?}\n[mesh]\nfamily = \"cartesian\"\nlevels = [0]\n",
            dir.path().join("out")
        ),
    );
    let res = bin().args(["converge", cfg.to_str().unwrap(), "--check"]).output().unwrap();
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stdout).contains("FAIL"));
    let res = bin().args(["converge", cfg.to_str().unwrap()]).output().unwrap();
    assert!(res.status.success());
}

#[test]
fn invalid_configs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "version = 7\ncase = \"manufactured\"\n[mesh]\nfamily = \"cartesian\"\nlevels = [0]\n");
    let res = bin().args(["converge", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("version"));
    let bm = write_config(
        dir.path(),
        "bm.toml",
        &format!("version = 1\ncase = \"barry-mercer\"\noutput = {:?}\n[mesh]\nfamily = \"hexagonal\"\nlevels = [1]\n", dir.path()),
    );
    let res = bin().args(["converge", bm.to_str().unwrap()]).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn barry_mercer_writes_profiles_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bm");
    let cfg = write_config(
        dir.path(),
        "bm.toml",
        &format!(
            "version = 1\ncase = \"barry-mercer\"\noutput = {:?}\nexport_scale = 100.0\n\
             [mesh]\nfamily = \"hexagonal\"\nlevels = [2]\n[barry_mercer]\nsamples = 50\nsnapshots = [1.5707963267948966, 4.71238898038469]\noscillation_tol = 0.01\n",
            out
        ),
    );
    let res = bin().args(["barry-mercer", cfg.to_str().unwrap(), "--check"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(res.status.success(), "{stdout}\n{}", String::from_utf8_lossy(&res.stderr));
    assert!(stdout.contains("antisymmetry"));
    let profiles = std::fs::read_to_string(out.join("profiles_hexagonal-2.csv")).unwrap();
    assert_eq!(profiles.lines().next(), Some("s,p_step25,p_step75"));
    assert_eq!(profiles.lines().count(), 51);
    assert!(out.join("fields_hexagonal-2_step25.vtk").exists());
}

#[test]
fn mesh_info_prints_statistics() {
    let res = bin().args(["mesh-info", "--family", "hexagonal", "--level", "1"]).output().unwrap();
    assert!(res.status.success());
    let text = String::from_utf8_lossy(&res.stdout);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("mesh,elements"));
    assert!(lines.next().unwrap().starts_with("hexagonal-1,"));
    let res = bin().args(["mesh-info"]).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn shipped_configs_are_valid() {
    use biot_hho::harness::config::{CaseId, RunConfig};
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap();
            match cfg.case {
                CaseId::Manufactured => drop(cfg.manufactured().unwrap()),
                CaseId::BarryMercer => drop(cfg.barry_mercer_case().unwrap()),
            }
            seen += 1;
        }
    }
    assert!(seen >= 5, "found {seen} configs");
}
