use std::fmt;

use utsgan::Error;

/// A command failure with its exit code: 1 for bad input or configuration,
/// 2 for failures while running.
#[derive(Debug)]
pub enum Failure {
    User(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::User(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn user(msg: impl fmt::Display) -> Self {
        Failure::User(anyhow::anyhow!("{msg}"))
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        Failure::Runtime(anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::User(e) | Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

/// Input and configuration problems are the user's; numerical, checkpoint
/// and I/O failures happen at run time.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::NonFinite { .. }
            | Error::EmptyFile(_)
            | Error::UnknownClass { .. }
            | Error::SeriesTooShort { .. }
            | Error::Config(_)
            | Error::Shape(_) => Failure::User(e.into()),
            Error::NonFiniteLoss { .. } | Error::Numerical(_) | Error::Checkpoint { .. } | Error::Io { .. } => {
                Failure::Runtime(e.into())
            }
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

/// Marks an error as the user's, whatever its kind.
pub trait UserError<T> {
    fn user(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> UserError<T> for Result<T, E> {
    fn user(self) -> CmdResult<T> {
        self.map_err(|e| Failure::User(e.into()))
    }
}
