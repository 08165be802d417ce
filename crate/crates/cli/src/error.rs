use crate::edgelist::ParseError;
use crate::report::{ErrorBody, ErrorReport};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_IN_BRANCHING: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Analysis(#[from] edgemargin::Error),
    #[error("self-check failed: {0}")]
    SelfCheck(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use edgemargin::Error as E;
        match self {
            CliError::Usage(_) | CliError::Parse(_) => EXIT_USAGE,
            CliError::SelfCheck(_) => EXIT_NUMERIC,
            CliError::Analysis(e) => match e {
                E::NoInBranching | E::RootNotReachable(_) => EXIT_NO_IN_BRANCHING,
                E::SelfLoop(_)
                | E::ParallelEdge { .. }
                | E::NonPositiveWeight { .. }
                | E::NodeOutOfRange { .. }
                | E::EdgeOutOfRange { .. }
                | E::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_NUMERIC,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse(_) => "parse",
            CliError::SelfCheck(_) => "self_check",
            CliError::Analysis(_) => match self.exit_code() {
                EXIT_NO_IN_BRANCHING => "no_in_branching",
                EXIT_NUMERIC => "numeric",
                _ => "invalid_input",
            },
        }
    }

    pub fn report(&self) -> ErrorReport {
        let message = match self {
            CliError::Analysis(edgemargin::Error::NoInBranching) => format!(
                "{self}; every node must reach a common node for the analysis to apply"
            ),
            _ => self.to_string(),
        };
        ErrorReport {
            error: ErrorBody {
                kind: self.kind(),
                message,
                line: match self {
                    CliError::Parse(p) if p.line > 0 => Some(p.line),
                    _ => None,
                },
                exit_code: self.exit_code(),
            },
        }
    }
}
