use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),

    #[error("word length must be at least 1")]
    EmptyDepth,

    #[error("word of length {0} cannot be shifted (need at least 2 symbols)")]
    ShortWord(usize),

    #[error("symbol sequence is not admissible at position {position}")]
    Inadmissible { position: usize },

    #[error("enumeration of {requested} words exceeds the budget of {budget}")]
    Budget { requested: u128, budget: u128 },

    #[error("transition matrix is not mixing within {0} powers")]
    NotMixing(usize),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("potential is not eventually positive within {0} Birkhoff steps")]
    NotEventuallyPositive(usize),

    #[error("root bracket not found: {0}")]
    Bracket(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("base matrix is not hyperbolic: {0}")]
    NotHyperbolic(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("Markov partition construction failed: {0}")]
    Partition(String),

    #[error("orbit passes within tolerance of a rectangle corner at step {step}")]
    DegenerateOrbit { step: usize },

    #[error("points are not on a common local stable plaque: {0}")]
    OffPlaque(String),

    #[error("tail bound {bound:e} exceeds tolerance {tol:e}; try t_max >= {suggested_t_max}")]
    TailBound {
        bound: f64,
        tol: f64,
        suggested_t_max: f64,
    },

    #[error("resolution too coarse: {0}; increase N or decrease depth")]
    Resolution(String),

    #[error("window escapes the chart atlas: {0}")]
    Atlas(String),

    #[error("integrity violation: {0}")]
    Integrity(String),

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMatrix(_) => "invalid_matrix",
            Error::EmptyDepth => "empty_depth",
            Error::ShortWord(_) => "short_word",
            Error::Inadmissible { .. } => "inadmissible",
            Error::Budget { .. } => "budget",
            Error::NotMixing(_) => "not_mixing",
            Error::InvalidPotential(_) => "invalid_potential",
            Error::NotEventuallyPositive(_) => "not_eventually_positive",
            Error::Bracket(_) => "bracket",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NotHyperbolic(_) => "not_hyperbolic",
            Error::InvalidSystem(_) => "invalid_system",
            Error::Partition(_) => "partition",
            Error::DegenerateOrbit { .. } => "degenerate_orbit",
            Error::OffPlaque(_) => "off_plaque",
            Error::TailBound { .. } => "tail_bound",
            Error::Resolution(_) => "resolution",
            Error::Atlas(_) => "atlas",
            Error::Integrity(_) => "integrity",
            Error::Grid(_) => "grid",
            Error::Parameter(_) => "parameter",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
