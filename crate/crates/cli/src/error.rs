use std::fmt;
use std::process::ExitCode;

/// Failure class; each maps to its own exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    Config,
    Data,
    Numeric,
    /// Upstream artifacts missing or changed.
    Stale,
    Io,
}

impl FailureKind {
    pub fn exit_code(self) -> u8 {
        match self {
            FailureKind::Io => 1,
            FailureKind::Config => 3,
            FailureKind::Data => 4,
            FailureKind::Numeric => 5,
            FailureKind::Stale => 6,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: FailureKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: FailureKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(FailureKind::Config, message)
    }

    pub fn stale(message: impl Into<String>) -> Self {
        Self::new(FailureKind::Stale, message)
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind.exit_code())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            FailureKind::Config => "config error",
            FailureKind::Data => "data error",
            FailureKind::Numeric => "numeric error",
            FailureKind::Stale => "stale artifacts",
            FailureKind::Io => "i/o error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<d2nn::Error> for CliError {
    fn from(e: d2nn::Error) -> Self {
        use d2nn::Error as E;
        let kind = match &e {
            E::InvalidArgument(_) | E::GridMismatch { .. } | E::Geometry(_) | E::OracleTooLarge { .. } => {
                FailureKind::Config
            }
            E::DegenerateSignal { .. } | E::NonFinite(_) => FailureKind::Numeric,
            E::Data { .. }
            | E::CorruptRecord { .. }
            | E::EmptySplit(_)
            | E::Format(_)
            | E::Version { .. }
            | E::Checksum
            | E::Serialization(_) => FailureKind::Data,
            E::Io(_) => FailureKind::Io,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(FailureKind::Io, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
