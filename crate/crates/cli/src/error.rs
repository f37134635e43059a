use std::fmt;

/// Process exit status for a failed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Config = 2,
    Data = 3,
    Numeric = 4,
}

/// Failure reported as `error: <kind>: <detail>` on stderr.
#[derive(Debug)]
pub struct CliError {
    pub status: ExitStatus,
    pub kind: String,
    pub detail: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(detail: impl Into<String>) -> Self {
        CliError {
            status: ExitStatus::Config,
            kind: "config".into(),
            detail: detail.into(),
        }
    }

    pub fn data(kind: &str, detail: impl Into<String>) -> Self {
        CliError {
            status: ExitStatus::Data,
            kind: kind.into(),
            detail: detail.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.status as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error: {}: {}", self.kind, self.detail.replace('\n', " "))
    }
}

impl std::error::Error for CliError {}

impl From<brainkit::Error> for CliError {
    fn from(e: brainkit::Error) -> Self {
        use brainkit::Error as E;
        let status = match &e {
            E::NoConvergence { .. } | E::SingularSystem(_) | E::DegenerateCorrelation(_) => ExitStatus::Numeric,
            E::BadParameter(_)
            | E::BadK(_)
            | E::BadFraction(_)
            | E::BadBand(_)
            | E::BadComponentCount(_)
            | E::TooManyClusters { .. }
            | E::BadSlice(_) => ExitStatus::Config,
            _ => ExitStatus::Data,
        };
        CliError {
            status,
            kind: e.kind().into(),
            detail: e.to_string(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::data("csv", e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data("io_failure", e.to_string())
    }
}
