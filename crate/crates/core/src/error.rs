use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("polynomial is not homogeneous of degree {0}")]
    NotHomogeneous(u32),

    #[error("zero map: every component vanishes identically")]
    ZeroMap,

    #[error("term cap exceeded: {terms} terms in one component, cap is {cap}")]
    TermCapExceeded { terms: usize, cap: usize },

    #[error("term cap {cap} exceeded computing f^{n} ({terms} terms); degrees so far: {partial:?}")]
    DegreeTermCap { n: usize, terms: usize, cap: usize, partial: Vec<u32> },

    #[error("not an inverse pair: {0}")]
    NotInverse(String),

    #[error("no indeterminacy witnesses found in {budget} numerical starts (heuristic search; emptiness is not proven)")]
    NoneFound { budget: usize },

    #[error("singular matrix")]
    SingularMatrix,

    #[error("contraction not verified: {0}")]
    ContractionNotVerified(String),

    #[error("point lies on the indeterminacy locus")]
    AtIndeterminacy,

    #[error("orbit hits indeterminacy at step {step}")]
    OrbitHitsIndeterminacy { step: usize },

    #[error("all samples rejected near indeterminacy")]
    AllSamplesRejected,

    #[error("too few surviving orbits: {survivors} < {required}")]
    TooFewOrbits { survivors: usize, required: usize },

    #[error("insufficient good probes: {found} < {required}")]
    InsufficientProbes { found: usize, required: usize },

    #[error("every observable value is a -inf sentinel")]
    AllSentinel,

    #[error("degenerate parametrization: zero area element")]
    DegenerateParametrization,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
