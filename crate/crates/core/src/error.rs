use std::path::PathBuf;

/// Errors produced by the reconstruction pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header {path}: {message}")]
    Header { path: PathBuf, message: String },

    #[error("payload size mismatch: header implies {expected} bytes, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("invalid label value {value} at voxel {index}")]
    InvalidLabel { value: u8, index: usize },

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-manifold edge ({0}, {1}) has {2} incident faces")]
    NonManifoldEdge(u32, u32, usize),

    #[error("mesh file {path}: {message}")]
    MeshFormat { path: PathBuf, message: String },

    #[error("non-finite sample point ({0}, {1}, {2})")]
    NonFinitePoint(f64, f64, f64),

    #[error("open surface: {odd} of {total} columns have odd crossing parity")]
    OpenSurface { odd: usize, total: usize },

    #[error("degenerate triangle {face}: {reason}")]
    DegenerateFace { face: usize, reason: &'static str },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimMismatch([usize; 3], [usize; 3]),

    #[error("degenerate swing projection: centroid lies on the Z axis")]
    DegenerateProjection,

    #[error("missing gradient field for surface {0}")]
    MissingField(&'static str),

    #[error("non-finite value in {stage} (layer {layer}, index {index})")]
    NonFinite {
        stage: &'static str,
        layer: usize,
        index: usize,
    },

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize, history: Vec<f64> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
