use thiserror::Error;

/// Errors produced by operator construction, solvers, and sweeps.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operators live on different spaces: {0} vs {1}")]
    SpaceMismatch(String, String),

    #[error("invalid cavity mode index {0} (expected 1 or 2)")]
    InvalidMode(usize),

    #[error("Hamiltonian is not Hermitian (max deviation {0:.3e})")]
    NonHermitian(f64),

    #[error("negative jump rate {0}")]
    NegativeRate(f64),

    #[error("Liouvillian dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("state is not a valid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("steady state is not unique (estimated null-space dimension {nullity})")]
    SingularSteadyState { nullity: usize },

    #[error("steady-state residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("g2(0) undefined: mean photon number {0:.3e} below floor")]
    ZeroMeanPhoton(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("truncation too small: subspace with {needed} excitations requires n_max >= {needed}")]
    TruncationTooSmall { needed: usize },

    #[error("integrator step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("bisection failed to converge")]
    BisectionFailed,

    #[error("degenerate denominator in analytic formula: {0}")]
    DegenerateDenominator(String),

    #[error("optimum lies on the search-box boundary at ({0}, {1})")]
    BoundaryOptimum(f64, f64),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unsupported observable {observable} for backend {backend}")]
    UnsupportedObservable { observable: String, backend: String },

    #[error("power-law fit window invalid: {0}")]
    FitWindow(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
