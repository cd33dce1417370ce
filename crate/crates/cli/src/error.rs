use std::io;
use std::path::PathBuf;

use abkem_auth::abkem::AbkemError;
use abkem_auth::authority::AuthorityError;
use abkem_auth::policy::{ParseError, PolicyError};
use abkem_auth::protocol::{ClientError, ProtocolError, RejectReason};
use abkem_auth::wire::WireError;
use thiserror::Error;

/// Process exit codes. These are a stable contract for scripts.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_ANONYMITY: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    KeyFile {
        path: PathBuf,
        #[source]
        source: WireError,
    },
    #[error("{0} already exists (pass --force to overwrite)")]
    Exists(PathBuf),
    #[error("{} holds mock-suite keys; the mock suite is insecure and needs an explicit --suite mock", .0.display())]
    MockNotSelected(PathBuf),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Abkem(#[from] AbkemError),
    #[error(transparent)]
    Authority(#[from] AuthorityError),
    #[error(transparent)]
    Protocol(ProtocolError),
    #[error("network: {0}")]
    Net(#[source] io::Error),
    #[error("rejected ({0})")]
    Rejected(RejectReason),
    #[error("refused: {0}")]
    Refused(ClientError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Rejected(_) => EXIT_REJECTED,
            CliError::Refused(ClientError::AnonymityRefused { .. }) => EXIT_ANONYMITY,
            CliError::Refused(_) => EXIT_REJECTED,
            _ => EXIT_USAGE,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Client(c) => CliError::Refused(c),
            ProtocolError::Wire(WireError::Io(io)) => CliError::Net(io),
            other => CliError::Protocol(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::Rejected(RejectReason::BadConfirmation).exit_code(), EXIT_REJECTED);
        assert_eq!(CliError::Refused(ClientError::NotSatisfied).exit_code(), EXIT_REJECTED);
        let anon = ClientError::AnonymityRefused { satisfying: 1, required: 3 };
        assert_eq!(CliError::Refused(anon).exit_code(), EXIT_ANONYMITY);
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::from(ProtocolError::Client(ClientError::NotSatisfied)).exit_code(), EXIT_REJECTED);
    }
}
