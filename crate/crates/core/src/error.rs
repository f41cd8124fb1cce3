use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported dimension {0} (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("point {point:?} lies outside the domain box of half-width {half_width}")]
    DomainViolation { point: Vec<f64>, half_width: f64 },

    #[error("negative argument t = {0}")]
    NegativeArgument(f64),

    #[error("degenerate sample grid: {0}")]
    DegenerateGrid(String),

    #[error("function vanishes on every sample; report is undefined")]
    AllZero,

    #[error("supremum of s*t - phi(t) is unbounded at s = {s} (sublinear phi)")]
    UnboundedConjugate { s: f64 },

    #[error("support margin {available} is below the required {needed}")]
    MarginViolation { needed: f64, available: f64 },

    #[error("under-resolved ball: radius {radius} is below the minimum {min}")]
    UnderResolved { radius: f64, min: f64 },

    #[error("ball stencil overflows the grid at index {index}")]
    StencilOverflow { index: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("modular is not monotone in lambda: rho(f/{lambda_small}) = {rho_small} < rho(f/{lambda_large}) = {rho_large}")]
    NonMonotone {
        lambda_small: f64,
        rho_small: f64,
        lambda_large: f64,
        rho_large: f64,
    },

    #[error("no bracket for the unit level set found after {0} expansions")]
    BracketNotFound(usize),

    #[error("ball {index} is entirely singular")]
    EntirelySingular { index: usize },

    #[error("assumption {assumption} failed: {detail}")]
    AssumptionFailed { assumption: String, detail: String },

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
