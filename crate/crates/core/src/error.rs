use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by mesh construction, energy evaluation and solves.
///
/// Admissibility *violations* are not errors: they are reported as data by
/// [`crate::geometry::validate_admissible`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("triangle {tri} is degenerate (area {area:.3e})")]
    DegenerateTriangle { tri: usize, area: f64 },

    #[error("vertex index {index} out of bounds (mesh has {len} vertices)")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("field has {got} entries, mesh has {expected} vertices")]
    FieldLengthMismatch { expected: usize, got: usize },

    #[error("mask has {got} entries, mesh has {expected} triangles")]
    MaskLengthMismatch { expected: usize, got: usize },

    #[error("fields live on different meshes ({a} vs {b} triangles)")]
    MeshMismatch { a: usize, b: usize },

    #[error("projection direction xi is orthogonal to nu (nu.xi = {dot:.3e})")]
    ParallelProjection { dot: f64 },

    #[error("iterative solve did not converge: residual {residual:.3e} after {iters} iterations")]
    NonConvergence { residual: f64, iters: usize },

    #[error("move proposal is not admissible: {reason}")]
    InadmissibleMove { reason: String },

    #[error("strip construction failed: {0}")]
    StripConstruction(String),

    #[error("vertex {vertex} lies on the crack (distance {dist:.3e})")]
    VertexOnCrack { vertex: usize, dist: f64 },

    #[error("component is rank deficient (collinear vertices), cannot fit a rigid motion")]
    CollinearComponent,

    #[error("negative argument to dissipation profile: {0}")]
    NegativeProfileArgument(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
