use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid side {0} is not a positive power of two")]
    NotPowerOfTwo(usize),

    #[error("expected {expected} cells for the grid, got {found}")]
    CellCount { expected: usize, found: usize },

    #[error("cell ({x}, {y}) holds an inadmissible value (must be finite and nonnegative)")]
    InvalidCell { x: usize, y: usize },

    #[error("rectangle [{x0},{x1})x[{y0},{y1}) is empty or exceeds a grid of side {side}")]
    OutOfBounds {
        x0: usize,
        x1: usize,
        y0: usize,
        y1: usize,
        side: usize,
    },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("unsupported exponent p = {0}")]
    UnsupportedExponent(f64),

    #[error("threshold must be positive, got {0}")]
    InvalidThreshold(f64),

    #[error("rectangle {index} has its long side along x2 (|P1| = {p1} < |P2| = {p2})")]
    Orientation { index: usize, p1: usize, p2: usize },

    #[error("family spans an angular range of {0:.6} rad, more than pi/4")]
    SectorSpan(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown kind `{0}`")]
    UnknownKind(String),

    #[error("parse error: {0}")]
    Parse(String),
}
