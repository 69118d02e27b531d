//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Validation failures carry the
//! offending cell ids so callers (and the CLI's machine-readable error output)
//! can point at the exact defect.

use thiserror::Error;

/// Alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("face {face} is not a triangle ({arity} vertices)")]
    NonTriangularFace { face: usize, arity: usize },

    #[error("face {face} references vertex {vertex}, but the mesh has {vertex_count} vertices")]
    VertexOutOfRange {
        face: usize,
        vertex: usize,
        vertex_count: usize,
    },

    #[error("edge ({u}, {v}) is incident to {count} faces; a closed surface needs exactly 2")]
    NonManifoldEdge { u: usize, v: usize, count: usize },

    #[error("edge ({u}, {v}) is traversed twice in the same direction; face orientations are inconsistent")]
    InconsistentOrientation { u: usize, v: usize },

    #[error("vertex {vertex} has a disconnected star; the surface is not a manifold there")]
    NonManifoldVertex { vertex: usize },

    #[error("face {face} is degenerate (area {area:.3e} below threshold {threshold:.3e})")]
    DegenerateFace {
        face: usize,
        area: f64,
        threshold: f64,
    },

    #[error("mesh has odd Euler characteristic {chi}; not a closed surface")]
    OddEulerCharacteristic { chi: i64 },

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("operation requires genus {expected}, mesh has genus {actual}")]
    GenusMismatch { expected: usize, actual: usize },

    #[error("cycle is not closed: vertex {vertex} has odd/unbalanced incidence")]
    NotACycle { vertex: usize },

    #[error("cycles cross {count} times; slicing requires exactly one transversal crossing")]
    NotSingleCrossing { count: i64 },

    #[error("pairing matrix is singular; the supplied cycles are not a homology basis")]
    SingularPairing,

    #[error("intersection matrix is not unimodular (det {det}); cycles do not form a basis")]
    NotUnimodular { det: String },

    #[error("cycle is not null-homologous; class vector {class:?}")]
    NotNullHomologous { class: Vec<f64> },

    #[error("could not make basis cycles edge-disjoint after {rounds} rounds; {shared} shared edges remain")]
    PerturbationFailed { rounds: usize, shared: usize },

    #[error("linear solver did not reach residual {target:.3e} (achieved {achieved:.3e} after {iterations} iterations)")]
    SolverStalled {
        target: f64,
        achieved: f64,
        iterations: usize,
    },

    #[error("descent diverged at iteration {iteration}; energy trace {trace:?}")]
    Divergence { iteration: usize, trace: Vec<f64> },

    #[error("{what} is singular and cannot be inverted")]
    SingularMatrix { what: String },

    #[error("cut surface is not a disk (Euler characteristic {chi})")]
    NotADisk { chi: i64 },

    #[error("boundary of the sliced mesh has {runs} runs; expected the four-run word a b a' b'")]
    BadBoundaryWord { runs: usize },

    #[error("{context}: {msg}")]
    Unsupported { context: String, msg: String },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("stage '{stage}': {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Open a file-backed i/o error with the path attached.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Parse failure at a known line (1-based) of a file.
    pub fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// A machine-readable JSON rendering used by the CLI on stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut value = serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
            }
        });
        if let Error::Stage { stage, .. } = self {
            value["error"]["stage"] = serde_json::json!(stage);
        }
        value
    }

    fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::NonTriangularFace { .. } => "non_triangular_face",
            Error::VertexOutOfRange { .. } => "vertex_out_of_range",
            Error::NonManifoldEdge { .. } => "non_manifold_edge",
            Error::InconsistentOrientation { .. } => "inconsistent_orientation",
            Error::NonManifoldVertex { .. } => "non_manifold_vertex",
            Error::DegenerateFace { .. } => "degenerate_face",
            Error::OddEulerCharacteristic { .. } => "odd_euler_characteristic",
            Error::EmptyMesh => "empty_mesh",
            Error::GenusMismatch { .. } => "genus_mismatch",
            Error::NotACycle { .. } => "not_a_cycle",
            Error::NotSingleCrossing { .. } => "not_single_crossing",
            Error::SingularPairing => "singular_pairing",
            Error::NotUnimodular { .. } => "not_unimodular",
            Error::NotNullHomologous { .. } => "not_null_homologous",
            Error::PerturbationFailed { .. } => "perturbation_failed",
            Error::SolverStalled { .. } => "solver_stalled",
            Error::Divergence { .. } => "divergence",
            Error::SingularMatrix { .. } => "singular_matrix",
            Error::NotADisk { .. } => "not_a_disk",
            Error::BadBoundaryWord { .. } => "bad_boundary_word",
            Error::Unsupported { .. } => "unsupported",
            Error::Json(_) => "json",
            Error::Config(_) => "config",
            Error::Stage { source, .. } => source.kind(),
        }
    }

    /// Wrap an error with the pipeline stage it occurred in.
    pub fn at_stage(stage: &'static str) -> impl Fn(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
