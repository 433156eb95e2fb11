use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biot_hho::fluxes::FluxReport;
use biot_hho::harness::barry_mercer::{profile_error, read_reference_profile, run_barry_mercer, BarryMercerOptions};
use biot_hho::harness::checks::{all_passed, check_barry_mercer, check_space_convergence, check_time_convergence, Check};
use biot_hho::harness::config::{CaseId, RunConfig, TauSpec};
use biot_hho::harness::convergence::{fill_eoc, run_level_observed, write_records_csv, ErrorRecord};
use biot_hho::harness::export::{sample_fields, write_vtk};
use biot_hho::mesh::{load_mesh, regularity_report, write_stats_csv, MeshFamily, MeshFormat, PolyMesh};
use biot_hho::timestepping::{uniform_steps, StepRecord};
use biot_hho::{Error, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "biot-hho", version, about = "HHO/SWIP solver for quasi-static Biot poroelasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence study in space or in time.
    Converge {
        config: PathBuf,
        /// Exit with a nonzero status when an acceptance check fails.
        #[arg(long)]
        check: bool,
    },
    /// Barry–Mercer point-source benchmark.
    BarryMercer {
        config: PathBuf,
        #[arg(long)]
        check: bool,
    },
    /// Mesh statistics as CSV.
    MeshInfo {
        /// Generated family.
        #[arg(long, conflicts_with = "file")]
        family: Option<MeshFamily>,
        #[arg(long, default_value_t = 0)]
        level: u32,
        /// Mesh file to read instead of a generated family.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, default_value = "fvca5")]
        format: MeshFormat,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Returns `false` when a requested check failed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Converge { config, check } => {
            let cfg = load_config(&config, CaseId::Manufactured)?;
            report(converge(&cfg)?, check)
        }
        Command::BarryMercer { config, check } => {
            let cfg = load_config(&config, CaseId::BarryMercer)?;
            report(barry_mercer(&cfg)?, check)
        }
        Command::MeshInfo { family, level, file, format } => {
            let (name, mesh) = match (family, file) {
                (_, Some(f)) => (f.display().to_string(), load_mesh(&f, format)?),
                (Some(fam), None) => (format!("{}-{level}", fam.name()), fam.generate(level)?),
                (None, None) => return Err(Error::Config("give --family or --file".into())),
            };
            write_stats_csv(&mesh, &name, std::io::stdout().lock())?;
            Ok(true)
        }
    }
}

fn load_config(path: &Path, expected: CaseId) -> Result<RunConfig> {
    let cfg = RunConfig::load(path)?;
    if cfg.case != expected {
        return Err(Error::Config(format!("config case is {:?}, this command runs {expected:?}", cfg.case)));
    }
    fs::create_dir_all(&cfg.output)?;
    Ok(cfg)
}

fn report(checks: Vec<Check>, enforce: bool) -> Result<bool> {
    for c in &checks {
        println!("{c}");
    }
    Ok(!enforce || all_passed(&checks))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn converge(cfg: &RunConfig) -> Result<Vec<Check>> {
    let exact = cfg.manufactured()?;
    let opts = cfg.run_options();
    let meshes = cfg.meshes()?;
    let levels: Vec<(String, PolyMesh, f64)> = match (&cfg.tau, cfg.tau_rule()) {
        (Some(TauSpec::Sweep { values }), _) => {
            let (label, mesh) = &meshes[0];
            values.iter().map(|&tau| (format!("{label}-tau{tau}"), mesh.clone(), tau)).collect()
        }
        (_, Some(rule)) => meshes
            .into_iter()
            .enumerate()
            .map(|(i, (label, mesh))| (label, mesh, rule.tau(opts.k, i as u32)))
            .collect(),
        (_, None) => unreachable!("a tau sweep is the only rule without a spatial schedule"),
    };
    let mut records: Vec<ErrorRecord> = Vec::new();
    for (label, mesh, tau) in levels {
        let (steps, _) = uniform_steps(opts.t_final, tau);
        let mut step_csv = csv::Writer::from_writer(create(&cfg.output, &format!("steps_{label}.csv"))?);
        let mut flux_csv = match cfg.fluxes {
            true => {
                let mut w = create(&cfg.output, &format!("fluxes_{label}.csv"))?;
                FluxReport::write_csv_header(&mut w)?;
                Some(w)
            }
            false => None,
        };
        let record = run_level_observed(&label, mesh, &exact, tau, &opts, |disc, state, flux| {
            step_csv.serialize(StepRecord::from_state(disc, state))?;
            if let (Some(w), Some(r)) = (&mut flux_csv, flux) {
                r.write_csv_row(&mut *w)?;
            }
            if state.n == steps {
                if let Some(scale) = cfg.export_scale {
                    let samples = sample_fields(disc, &state.current.solution);
                    write_vtk(&samples, scale, create(&cfg.output, &format!("final_{label}.vtk"))?)?;
                }
            }
            Ok(())
        })?;
        step_csv.flush()?;
        if let Some(mut w) = flux_csv {
            w.flush()?;
        }
        eprintln!(
            "{label}: {} elements, h = {:.4e}, tau = {:.4e}, |p err| = {:.4e}, |u err| = {:.4e}, {:.1} s",
            record.elements, record.h, record.tau, record.pressure_error, record.displacement_error, record.seconds
        );
        records.push(record);
    }
    let in_time = matches!(cfg.tau, Some(TauSpec::Sweep { .. }));
    fill_eoc(&mut records, in_time);
    write_records_csv(&records, create(&cfg.output, "errors.csv")?)?;
    for r in &records {
        println!(
            "{:<24} h={:.4e} tau={:.4e} p_err={:.4e} u_err={:.4e} eoc_p={} eoc_u={}",
            r.label,
            r.h,
            r.tau,
            r.pressure_error,
            r.displacement_error,
            r.pressure_eoc.map_or("-".into(), |e| format!("{e:.3}")),
            r.displacement_eoc.map_or("-".into(), |e| format!("{e:.3}")),
        );
    }
    let label = format!("k={}", opts.k);
    Ok(if in_time { check_time_convergence(&records, &label) } else { check_space_convergence(&records, opts.k, &label) })
}

fn barry_mercer(cfg: &RunConfig) -> Result<Vec<Check>> {
    let case = cfg.barry_mercer_case()?;
    let spec = &cfg.barry_mercer;
    let mut opts = BarryMercerOptions::standard(&case);
    opts.k = cfg.degree;
    opts.scheme = cfg.scheme();
    opts.solver = cfg.solver;
    opts.samples = spec.samples;
    opts.snapshots = spec.snapshots.clone();
    opts.snapshot_steps = spec.snapshot_steps.clone();
    opts.steps = spec.steps;
    if let Some(t) = cfg.t_final {
        opts.t_hat_final = t;
    }
    if let Some(TauSpec::Fixed { tau }) = cfg.tau {
        opts.tau = tau;
    }
    let reference = spec.reference_profile.as_deref().map(read_reference_profile).transpose()?;
    let mut checks = Vec::new();
    for (label, mesh) in cfg.meshes()? {
        let h = mesh.mesh_size();
        let reg = regularity_report(&mesh)?;
        eprintln!("{label}: {} elements, h = {h:.4e}, min inradius ratio {:.3}", mesh.num_elements(), reg.min_inradius_ratio);
        let run = run_barry_mercer(mesh, &case, &opts)?;
        eprintln!("{label}: {} steps to t_hat = {:.4}", run.steps, run.final_t_hat);
        let mut w = create(&cfg.output, &format!("profiles_{label}.csv"))?;
        write!(w, "s")?;
        for snap in &run.snapshots {
            write!(w, ",p_step{}", snap.step)?;
        }
        writeln!(w)?;
        if let Some(first) = run.snapshots.first() {
            for (i, s) in first.profile.s.iter().enumerate() {
                write!(w, "{s}")?;
                for snap in &run.snapshots {
                    write!(w, ",{}", snap.profile.values[i])?;
                }
                writeln!(w)?;
            }
        }
        w.flush()?;
        for snap in &run.snapshots {
            let samples = sample_fields(&run.disc, &snap.solution);
            let scale = cfg.export_scale.unwrap_or(1.0);
            write_vtk(&samples, scale, create(&cfg.output, &format!("fields_{label}_step{}.vtk", snap.step))?)?;
        }
        if let (Some(reference), Some(first)) = (&reference, run.snapshots.first()) {
            let err = profile_error(&run.disc, &first.solution.pressure, reference);
            println!("{label}: relative L2 error against reference profile at t_hat = {:.4}: {err:.4e}", first.t_hat);
        }
        let mut c = check_barry_mercer(&run.snapshots, &case, h, spec.oscillation_tol);
        for check in &mut c {
            check.name = format!("{label} {}", check.name);
        }
        checks.extend(c);
    }
    Ok(checks)
}
