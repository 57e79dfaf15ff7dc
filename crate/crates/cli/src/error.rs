use ndt_core::bounds::BoundsError;
use ndt_core::cachesim::SimError;
use ndt_core::model::ModelError;
use ndt_core::phy::PhyError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("infeasible input: {0}")]
    Infeasible(String),
    #[error("decoding failed at {failed} of {receivers} receivers")]
    Decode { failed: usize, receivers: usize },
    #[error("PHY verification failed for {failed} of {seeds} seeds")]
    PhyCheck { failed: usize, seeds: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Sim(SimError),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error("{0}")]
    Usage(String),
    #[error("ratios file: {0}")]
    RatiosFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Ratios(v) => CliError::Infeasible(v.to_string()),
            other => CliError::Sim(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Infeasible(_) => 2,
            CliError::Decode { .. } => 3,
            CliError::PhyCheck { .. } => 4,
            _ => 1,
        }
    }
}
