use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample grid is empty")]
    EmptyGrid,

    #[error("u-range is empty or inverted: [{0}, {1}]")]
    EmptyRange(f64, f64),

    #[error("face {0} has zero measure")]
    DegenerateFace(usize),

    #[error("bad mesh dimensions: {0}")]
    BadDimensions(String),

    #[error("time grid is not strictly increasing at index {0}")]
    NonMonotoneGrid(usize),

    #[error("shear {shear} makes lateral faces non-time-like or crossing ({reason})")]
    ShearTooLarge { shear: f64, reason: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("element {elem} has no neighbor across face {face}")]
    NeighborMissing { elem: usize, face: usize },

    #[error("cannot invert face average at {target}: no bracket within [{lo}, {hi}]")]
    InversionOutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("diffusion constant {d} on face {face} is below the required {required}")]
    DTooSmall { face: usize, d: f64, required: f64 },

    #[error("CFL condition violated: max ratio {0}")]
    CflViolated(f64),

    #[error("test function support reaches the final slice (t = {0})")]
    UnsupportedPhi(f64),

    #[error("entropy pair has zero modulus of convexity; the dissipation bound does not apply")]
    ZeroConvexity,

    #[error("inconsistent convergence family: {0}")]
    InconsistentFamily(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
