//! Versioned TOML run configuration shared by the CLI drivers.
//!
//! ```toml
//! version = 1
//! case = "manufactured"
//! degree = 1
//! scheme = "bdf2"
//! t_final = 1.0
//! output = "out/tri-k1"
//! fluxes = true
//!
//! [mesh]
//! family = "triangular"
//! levels = [0, 1, 2]
//!
//! [tau]
//! rule = "scaled"
//! base = 0.1
//!
//! [physics]
//! mu = 1.0
//! lambda = 1.0
//! c0 = 0.0
//! kappa = 1.0
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::barry_mercer::BarryMercer;
use crate::harness::convergence::{RunOptions, TauRule};
use crate::harness::manufactured::Manufactured;
use crate::mesh::{load_mesh, MeshFamily, MeshFormat, PolyMesh};
use crate::problem::Physics;
use crate::sparse::SolverKind;
use crate::timestepping::Scheme;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseId {
    Manufactured,
    BarryMercer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub case: CaseId,
    pub mesh: MeshSource,
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Defaults to BDF2.
    pub scheme: Option<Scheme>,
    /// Final time; for Barry–Mercer this is the normalized time and defaults to `2 pi`.
    pub t_final: Option<f64>,
    pub tau: Option<TauSpec>,
    #[serde(default)]
    pub physics: PhysicsSpec,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Computes conservation residuals at every step and writes them as CSV.
    #[serde(default)]
    pub fluxes: bool,
    /// Displacement magnification for the deformed-configuration export.
    pub export_scale: Option<f64>,
    #[serde(default)]
    pub barry_mercer: BarryMercerSpec,
}

fn default_degree() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

/// Either a generated family at several levels or a list of mesh files (coarse to fine).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSource {
    pub family: Option<MeshFamily>,
    #[serde(default)]
    pub levels: Vec<u32>,
    #[serde(default)]
    pub files: Vec<PathBuf>,
    pub format: Option<MeshFormat>,
    /// Axis-aligned boxes assigning permeability regions; later boxes win.
    #[serde(default)]
    pub regions: Vec<RegionBox>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionBox {
    pub region: usize,
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl RegionBox {
    fn contains(&self, x: f64, y: f64) -> bool {
        (self.min[0]..=self.max[0]).contains(&x) && (self.min[1]..=self.max[1]).contains(&y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TauSpec {
    Fixed { tau: f64 },
    /// Halves with `h` at the rate `2^((k+1)/2)` starting from `base / 2^((k+1)/2)`.
    Scaled { base: f64 },
    /// Temporal study on a single mesh.
    Sweep { values: Vec<f64> },
}

/// Permeability given as one value or one value per region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Permeability {
    Uniform(f64),
    PerRegion(Vec<f64>),
}

impl Permeability {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Permeability::Uniform(v) => vec![*v],
            Permeability::PerRegion(v) => v.clone(),
        }
    }
}

/// Material parameters. Either `(mu, lambda)` or `(young, poisson)` may be given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSpec {
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub young: Option<f64>,
    pub poisson: Option<f64>,
    pub c0: Option<f64>,
    pub kappa: Option<Permeability>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarryMercerSpec {
    /// Normalized times at which diagonal profiles are recorded.
    pub snapshots: Vec<f64>,
    /// Step indices at which profiles are recorded, in addition to `snapshots`.
    pub snapshot_steps: Vec<usize>,
    /// Stops after this many steps instead of at `t_final`.
    pub steps: Option<usize>,
    pub samples: usize,
    /// Reversal threshold of the oscillation indicator, relative to the profile maximum.
    pub oscillation_tol: f64,
    /// Optional `s,p` CSV reference profile at the first snapshot.
    pub reference_profile: Option<PathBuf>,
}

impl Default for BarryMercerSpec {
    fn default() -> Self {
        Self {
            snapshots: vec![PI / 2.0, 1.5 * PI],
            snapshot_steps: Vec::new(),
            steps: None,
            samples: 400,
            oscillation_tol: 1e-2,
            reference_profile: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a configuration; relative mesh and reference paths are resolved against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for f in &mut cfg.mesh.files {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        if let Some(r) = &mut cfg.barry_mercer.reference_profile {
            if r.is_relative() {
                *r = base.join(&*r);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if !(1..=3).contains(&self.degree) {
            return bad(format!("degree must be 1, 2 or 3, got {}", self.degree));
        }
        match (&self.mesh.family, self.mesh.files.is_empty()) {
            (Some(_), true) if self.mesh.levels.is_empty() => return bad("mesh.levels is empty".into()),
            (Some(_), false) => return bad("give either mesh.family or mesh.files, not both".into()),
            (None, true) => return bad("mesh needs a family or files".into()),
            _ => {}
        }
        if let Some(TauSpec::Sweep { values }) = &self.tau {
            if self.num_meshes() != 1 {
                return bad("a tau sweep needs exactly one mesh".into());
            }
            if values.is_empty() {
                return bad("tau sweep is empty".into());
            }
        }
        let p = &self.physics;
        if p.mu.is_some() != p.lambda.is_some() || p.young.is_some() != p.poisson.is_some() {
            return bad("give mu with lambda and young with poisson".into());
        }
        if p.mu.is_some() && p.young.is_some() {
            return bad("give either (mu, lambda) or (young, poisson)".into());
        }
        if self.case == CaseId::BarryMercer {
            if p.c0.is_some_and(|c| c != 0.0) {
                return bad("the Barry–Mercer case has c0 = 0".into());
            }
            if matches!(self.tau, Some(TauSpec::Sweep { .. } | TauSpec::Scaled { .. })) {
                return bad("the Barry–Mercer case takes a fixed tau".into());
            }
        }
        self.physics()?;
        Ok(())
    }

    fn num_meshes(&self) -> usize {
        if self.mesh.family.is_some() {
            self.mesh.levels.len()
        } else {
            self.mesh.files.len()
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme.unwrap_or(Scheme::Bdf2)
    }

    /// Labelled meshes, coarse to fine, with permeability regions applied.
    pub fn meshes(&self) -> Result<Vec<(String, PolyMesh)>> {
        let mut out = Vec::new();
        if let Some(family) = self.mesh.family {
            for &level in &self.mesh.levels {
                out.push((format!("{}-{level}", family.name()), family.generate(level)?));
            }
        } else {
            for f in &self.mesh.files {
                let format = self.mesh.format.unwrap_or_else(|| guess_format(f));
                let label = f.file_stem().map_or_else(|| "mesh".into(), |s| s.to_string_lossy().into_owned());
                out.push((label, load_mesh(f, format)?));
            }
        }
        if !self.mesh.regions.is_empty() {
            for (_, mesh) in &mut out {
                let boxes = &self.mesh.regions;
                mesh.tag_regions(|c| boxes.iter().rev().find(|b| b.contains(c.x, c.y)).map_or(0, |b| b.region));
            }
        }
        Ok(out)
    }

    fn uniform_kappa(&self, default: f64) -> Result<f64> {
        let values = self.physics.kappa.as_ref().map_or(vec![default], Permeability::values);
        match values.as_slice() {
            [v] => Ok(*v),
            _ => Err(Error::Config("this test case needs a single permeability value".into())),
        }
    }

    pub fn manufactured(&self) -> Result<Manufactured> {
        let p = &self.physics;
        let (mu, lambda) = match (p.mu, p.lambda, p.young, p.poisson) {
            (Some(mu), Some(lambda), _, _) => (mu, lambda),
            (_, _, Some(e), Some(nu)) => Physics::lame_from_young(e, nu),
            _ => (1.0, 1.0),
        };
        Ok(Manufactured { mu, lambda, kappa: self.uniform_kappa(1.0)?, c0: p.c0.unwrap_or(0.0) })
    }

    pub fn barry_mercer_case(&self) -> Result<BarryMercer> {
        let p = &self.physics;
        if p.mu.is_some() {
            return Err(Error::Config("the Barry–Mercer case takes young and poisson".into()));
        }
        let d = BarryMercer::default();
        Ok(BarryMercer {
            young: p.young.unwrap_or(d.young),
            poisson: p.poisson.unwrap_or(d.poisson),
            kappa: self.uniform_kappa(d.kappa)?,
            source: d.source,
        })
    }

    /// The physical parameters handed to the discretization.
    pub fn physics(&self) -> Result<Physics> {
        let mut physics = match self.case {
            CaseId::Manufactured => self.manufactured()?.physics(),
            CaseId::BarryMercer => self.barry_mercer_case()?.physics(),
        };
        physics.sigma = self.physics.sigma;
        Ok(physics)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            k: self.degree,
            scheme: self.scheme(),
            t_final: self.t_final.unwrap_or(1.0),
            solver: self.solver,
            check_fluxes: self.fluxes,
        }
    }

    /// Step rule for a spatial study; `None` for a temporal sweep.
    pub fn tau_rule(&self) -> Option<TauRule> {
        match &self.tau {
            None => Some(TauRule::default()),
            Some(TauSpec::Fixed { tau }) => Some(TauRule::Fixed { tau: *tau }),
            Some(TauSpec::Scaled { base }) => Some(TauRule::Scaled { base: *base }),
            Some(TauSpec::Sweep { .. }) => None,
        }
    }
}

fn guess_format(path: &Path) -> MeshFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => MeshFormat::NativeJson,
        _ => MeshFormat::Fvca5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MANUFACTURED: &str = r#"
version = 1
case = "manufactured"
degree = 2
fluxes = true

[mesh]
family = "hexagonal"
levels = [0, 1]

[tau]
rule = "scaled"
base = 0.1

[physics]
mu = 2.0
lambda = 3.0
c0 = 0.5
"#;

    #[test]
    fn parses_manufactured() {
        let cfg = RunConfig::from_toml(MANUFACTURED).unwrap();
        assert_eq!(cfg.scheme(), Scheme::Bdf2);
        let m = cfg.manufactured().unwrap();
        assert_eq!((m.mu, m.lambda, m.c0, m.kappa), (2.0, 3.0, 0.5, 1.0));
        assert_eq!(cfg.tau_rule(), Some(TauRule::Scaled { base: 0.1 }));
        let meshes = cfg.meshes().unwrap();
        assert_eq!(meshes.len(), 2);
        assert_eq!(meshes[0].0, "hexagonal-0");
        assert!(cfg.run_options().check_fluxes);
    }

    #[test]
    fn barry_mercer_defaults_and_young_conversion() {
        let cfg = RunConfig::from_toml(
            "version = 1\ncase = \"barry-mercer\"\n[mesh]\nfamily = \"cartesian\"\nlevels = [0]\n",
        )
        .unwrap();
        let case = cfg.barry_mercer_case().unwrap();
        assert_eq!(case, BarryMercer::default());
        let p = cfg.physics().unwrap();
        assert!((p.lambda - 1e5 * 0.1 / (1.1 * 0.8)).abs() < 1e-9);
        assert!((p.mu - 1e5 / 2.2).abs() < 1e-9);
        assert_eq!(cfg.barry_mercer.oscillation_tol, 1e-2);
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let with = |extra: &str| RunConfig::from_toml(&format!("{MANUFACTURED}{extra}"));
        assert!(with("young = 1.0\npoisson = 0.2\n").is_err());
        assert!(RunConfig::from_toml(&MANUFACTURED.replace("version = 1", "version = 2")).is_err());
        assert!(RunConfig::from_toml(&MANUFACTURED.replace("degree = 2", "degree = 4")).is_err());
        assert!(RunConfig::from_toml(&MANUFACTURED.replace("levels = [0, 1]", "levels = []")).is_err());
        assert!(with("kappa = [1.0, 2.0]\n").and_then(|c| c.manufactured()).is_err());
        assert!(with("unknown = 1\n").is_err());
        let sweep = MANUFACTURED.replace("rule = \"scaled\"\nbase = 0.1", "rule = \"sweep\"\nvalues = [0.1, 0.05]");
        assert!(RunConfig::from_toml(&sweep).is_err());
        let sweep = sweep.replace("levels = [0, 1]", "levels = [1]");
        assert_eq!(RunConfig::from_toml(&sweep).unwrap().tau_rule(), None);
    }

    #[test]
    fn region_boxes_tag_elements() {
        let text = MANUFACTURED.replace(
            "levels = [0, 1]",
            "levels = [0]\nregions = [{ region = 1, min = [0.5, 0.0], max = [1.0, 1.0] }]",
        );
        let cfg = RunConfig::from_toml(&text).unwrap();
        let (_, mesh) = cfg.meshes().unwrap().remove(0);
        assert_eq!(mesh.num_regions(), 2);
    }
}
