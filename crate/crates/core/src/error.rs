use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building meshes, operators and solving the coupled system.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse mesh {path}: {message}")]
    MeshParse { path: PathBuf, message: String },

    #[error("element {element} is degenerate (area {area:e})")]
    DegenerateElement { element: usize, area: f64 },

    #[error("element {element} is not counterclockwise or shares an edge with the same orientation as a neighbor")]
    InconsistentOrientation { element: usize },

    #[error("edge ({0}, {1}) is shared by more than two elements")]
    NonManifoldEdge(usize, usize),

    #[error("could not triangulate element {element}: {message}")]
    Triangulation { element: usize, message: String },

    #[error("mass matrix of element {element} is not positive definite (degree {degree})")]
    RankDeficientMass { element: usize, degree: usize },

    #[error("local reconstruction system is singular on element {element}")]
    SingularReconstruction { element: usize },

    #[error("element block A_TT of element {element} is singular")]
    SingularElementBlock { element: usize },

    #[error("polynomial degree {0} is not supported (expected 1 <= k <= 4)")]
    UnsupportedDegree(usize),

    #[error("permeability must be positive, got {value} in region {region}")]
    NonPositivePermeability { region: usize, value: f64 },

    #[error("no permeability configured for region {0}")]
    MissingRegion(usize),

    #[error("penalty parameter must be positive, got {0}")]
    NonPositivePenalty(f64),

    #[error("c_h(q, q) = {0:e} is negative: penalty parameter too small")]
    IndefinitePenalty(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("relative residual {residual:e} above tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("BDF2 step requested at step index {0}, needs two previous states")]
    Bdf2NotBootstrapped(usize),

    #[error("mesh with {elements} elements is too large for the dense inf-sup probe (limit {limit})")]
    MeshTooLarge { elements: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
