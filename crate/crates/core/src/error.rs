use thiserror::Error;

/// A single violated invariant, located by a dotted path into the instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("scenario explosion: {count} joint scenarios exceed the cap of {cap}")]
    ScenarioExplosion { count: u128, cap: usize },

    #[error("search space of {size} first-stage points exceeds the cap of {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },

    #[error("penalty weight must be positive, got {0}")]
    NonPositivePenalty(f64),

    #[error("scenario-dependent quadratic term on decision variables ({0}, {1})")]
    ScenarioQuadratic(usize, usize),

    #[error("qubit count {requested} exceeds the cap of {cap}")]
    TooManyQubits { requested: usize, cap: usize },

    #[error("qubit index {index} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("a two-qubit gate needs distinct qubits, got {0} twice")]
    SameQubit(usize),

    #[error("amplitude preparation: {0}")]
    Preparation(String),

    #[error(
        "parameter length mismatch: expected {expected} layers, got gamma={gammas} beta={betas}"
    )]
    ParamLength {
        expected: usize,
        gammas: usize,
        betas: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("objective is not finite ({value}) at evaluation {evaluation}")]
    NonFinite { value: f64, evaluation: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
