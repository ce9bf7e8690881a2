use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] pgd_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use pgd_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) | CliError::Csv(_) => EXIT_IO,
            CliError::Core(e) => match e {
                E::Parse { .. } | E::Dimension { .. } | E::InvalidParameter(_) | E::Contract(_) => EXIT_CONFIG,
                E::NotIrreducible { .. } | E::Infeasible { .. } | E::Inapplicable(_) => EXIT_INFEASIBLE,
                E::Capacity { .. } | E::Horizon { .. } | E::NotConverged { .. } => EXIT_RESOURCE,
            },
        }
    }
}
