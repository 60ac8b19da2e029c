use std::fmt;

/// Everything that can go wrong in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("entity code must be non-empty")]
    EmptyCode,
    #[error("entity code `{0}` appears more than once in the registry")]
    DuplicateEntity(String),
    #[error("a flow matrix needs at least 2 entities, got {0}")]
    TooFewEntities(usize),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("negative amount {amount} for flow {from} -> {to}")]
    NegativeAmount { from: String, to: String, amount: f64 },
    #[error("non-finite amount for flow {from} -> {to}")]
    NonFiniteAmount { from: String, to: String },
    #[error("self-flow of {amount} on entity `{code}`")]
    SelfFlow { code: String, amount: f64 },
    #[error("invalid merge spec: {0}")]
    InvalidMergeSpec(String),
    #[error("entity `{0}` has no flows; its ratio score is undefined")]
    IsolatedEntity(String),
    #[error("matches graph is disconnected: {}", Components(.components))]
    DisconnectedGraph { components: Vec<Vec<String>> },
    #[error("invalid clone spec: {0}")]
    InvalidCloneSpec(String),
    #[error("entity `{0}` appears on both sides but is not the bridge")]
    SharedNonBridgeEntity(String),
    #[error("bridge `{0}` is missing from one of the sides")]
    UnknownBridge(String),
    #[error("perturbed side does not have the same entities as the original side two")]
    PerturbationMismatch,
    #[error("rankings are defined over different registries")]
    RegistryMismatch,
    #[error("nothing to report")]
    EmptyReport,
    #[error("input has no data rows")]
    EmptyInput,
    #[error("matrix is not square: {0}")]
    NonSquare(String),
    #[error("row labels and column labels differ: {0}")]
    LabelMismatch(String),
    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("linear solver failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Strips any [`Error::AtLine`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLine { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

struct Components<'a>(&'a [Vec<String>]);

impl fmt::Display for Components<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, comp) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{{{}}}", comp.join(","))?;
        }
        Ok(())
    }
}
