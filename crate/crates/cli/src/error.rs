use thiserror::Error;

use logconc_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for anything the user can fix in the config, 3 for an exhausted
    /// oracle budget, 1 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                CoreError::BudgetExhausted { .. } => 3,
                CoreError::InvalidSpec(_)
                | CoreError::InvalidArgument(_)
                | CoreError::MomentDoesNotExist { .. }
                | CoreError::NotIsotropic
                | CoreError::NotUniform
                | CoreError::DimensionMismatch { .. }
                | CoreError::ScaleLimit(_)
                | CoreError::DegenerateProjection { .. } => 2,
                _ => 1,
            },
        }
    }
}
