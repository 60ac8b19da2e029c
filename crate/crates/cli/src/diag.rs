use flowrank::Error;

pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_DISCONNECTED: u8 = 3;

/// A failed command: exit status plus one `code|message` line.
#[derive(Debug)]
pub struct Failure {
    pub exit: u8,
    pub code: &'static str,
    pub message: String,
    /// The diagnostic has already been written.
    pub reported: bool,
}

impl Failure {
    pub fn new(exit: u8, code: &'static str, message: impl Into<String>) -> Self {
        Failure { exit, code, message: message.into(), reported: false }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Failure::new(EXIT_INVALID, "usage", message)
    }

    pub fn line(&self) -> String {
        format!("{}|{}", self.code, self.message.replace('\n', " "))
    }

    pub fn report(&self) {
        if self.reported {
            return;
        }
        eprintln!("{}", self.line());
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (exit, code) = classify(e.root());
        let message = match e.root() {
            Error::DisconnectedGraph { components } => components
                .iter()
                .map(|c| format!("{{{}}}", c.join(",")))
                .collect::<Vec<_>>()
                .join(" "),
            _ => e.to_string(),
        };
        Failure::new(exit, code, message)
    }
}

fn classify(e: &Error) -> (u8, &'static str) {
    match e {
        Error::DisconnectedGraph { .. } => (EXIT_DISCONNECTED, "disconnected"),
        Error::IsolatedEntity(_) => (EXIT_DISCONNECTED, "isolated_entity"),
        Error::EmptyCode => (EXIT_INVALID, "empty_code"),
        Error::DuplicateEntity(_) => (EXIT_INVALID, "duplicate_entity"),
        Error::TooFewEntities(_) => (EXIT_INVALID, "too_few_entities"),
        Error::UnknownEntity(_) => (EXIT_INVALID, "unknown_entity"),
        Error::NegativeAmount { .. } => (EXIT_INVALID, "negative_amount"),
        Error::NonFiniteAmount { .. } => (EXIT_INVALID, "non_finite_amount"),
        Error::SelfFlow { .. } => (EXIT_INVALID, "self_flow"),
        Error::InvalidMergeSpec(_) => (EXIT_INVALID, "invalid_merge_spec"),
        Error::InvalidCloneSpec(_) => (EXIT_INVALID, "invalid_clone_spec"),
        Error::EmptyInput => (EXIT_INVALID, "empty_input"),
        Error::NonSquare(_) => (EXIT_INVALID, "non_square"),
        Error::LabelMismatch(_) => (EXIT_INVALID, "label_mismatch"),
        Error::Parse { .. } => (EXIT_INVALID, "parse"),
        Error::Io(_) => (EXIT_INVALID, "io"),
        Error::AtLine { source, .. } => classify(source),
        Error::SharedNonBridgeEntity(_)
        | Error::UnknownBridge(_)
        | Error::PerturbationMismatch
        | Error::RegistryMismatch
        | Error::EmptyReport
        | Error::Solver(_) => (EXIT_INTERNAL, "internal"),
    }
}
