use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("register of {0} qubits exceeds the 3-qubit limit")]
    TooManyQubits(usize),
    #[error("amplitude vector of length {0} is not a register of 1 to 3 qubits")]
    BadDimension(usize),
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("qubit pair is not in a Bell state")]
    NotBellState,
    #[error("measurement outcome {0} has zero probability")]
    ImpossibleOutcome(u8),
    #[error("invalid mixture weights: {0}")]
    BadWeights(String),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("position {position} out of range for a sequence of {len} slots")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("not a permutation of {0} positions")]
    NotAPermutation(usize),
    #[error("cannot test {requested} slots, only {available} remain")]
    TooManyTests { requested: usize, available: usize },
    #[error("malformed publication: {0}")]
    MalformedPublication(String),
    #[error("cannot realize intended choices: {0}")]
    ReorderImpossible(String),
    #[error("invalid bit value {0}")]
    InvalidBit(u8),
    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid entangling-attack parameters: {0}")]
    InvalidUeParams(String),
    #[error("scenario {0} is not supported here")]
    UnsupportedScenario(String),

    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("sweep range is empty")]
    EmptyRange,
    #[error("R must be nonnegative, got {0}")]
    NegativeR(i64),
    #[error("R_max must be at least 1")]
    EmptyCurve,

    #[error("transcript line {line}: {reason}")]
    CorruptTranscript { line: usize, reason: String },
    #[error("transcript line {line}: format version {found}, this tool writes {expected}")]
    VersionMismatch {
        line: usize,
        found: String,
        expected: String,
    },
}
