use thiserror::Error;

/// Exit code for bad arguments, configuration or input files.
pub const EXIT_INPUT: u8 = 2;
/// Exit code for failures during computation on valid inputs.
pub const EXIT_COMPUTE: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] occfair::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Core(e) if e.is_input_error() => EXIT_INPUT,
            CliError::Core(_) => EXIT_COMPUTE,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub fn input(message: impl Into<String>) -> CliError {
    CliError::Input(message.into())
}
