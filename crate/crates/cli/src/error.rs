use std::fmt;

/// Process exit status per failure category.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Usage = 1,
    Data = 2,
    Training = 3,
    Evaluation = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub error: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait OrExit<T> {
    fn or_exit(self, exit: Exit) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> OrExit<T> for Result<T, E> {
    fn or_exit(self, exit: Exit) -> CliResult<T> {
        self.map_err(|e| CliError { exit, error: e.into() })
    }
}

pub fn fail<T>(exit: Exit, msg: impl fmt::Display) -> CliResult<T> {
    Err(CliError {
        exit,
        error: anyhow::anyhow!("{msg}"),
    })
}
