use std::fmt;

use hetune::annealer::AnnealError;
use hetune::evaluators::EvalError;
use hetune::harness::HarnessError;
use hetune::metrics::log::LogError;
use hetune::space::SpaceError;
use hetune::surrogate::SurrogateError;

pub const USAGE: u8 = 1;
pub const EVALUATION: u8 = 2;
pub const DATA: u8 = 3;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl fmt::Display) -> Self {
        CliError {
            code: DATA,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let code = match &e {
            EvalError::Setup(_) => USAGE,
            EvalError::Log(_) => DATA,
            _ => EVALUATION,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SpaceError> for CliError {
    fn from(e: SpaceError) -> Self {
        let code = match e {
            SpaceError::Io(_) | SpaceError::Parse(_) | SpaceError::Definition(_) => DATA,
            _ => USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<LogError> for CliError {
    fn from(e: LogError) -> Self {
        CliError::data(e)
    }
}

impl From<SurrogateError> for CliError {
    fn from(e: SurrogateError) -> Self {
        let code = match e {
            SurrogateError::InvalidParameter(_) => USAGE,
            _ => DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<AnnealError> for CliError {
    fn from(e: AnnealError) -> Self {
        match e {
            AnnealError::Evaluation { source, .. } => CliError {
                code: EVALUATION,
                message: source.to_string(),
            },
            AnnealError::Space(s) => s.into(),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Space(e) => e.into(),
            HarnessError::Eval(e) => e.into(),
            HarnessError::Anneal(e) => e.into(),
            HarnessError::Log(e) => e.into(),
            HarnessError::Model(e) => e.into(),
            HarnessError::Partial { source, partial } => CliError {
                code: EVALUATION,
                message: format!("{source} (after {} evaluations)", partial.records.len()),
            },
            HarnessError::Metrics(_) | HarnessError::Mismatch(_) | HarnessError::Report(_) | HarnessError::Io(_) => {
                CliError::data(e)
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(format!("i/o error: {e}"))
    }
}
