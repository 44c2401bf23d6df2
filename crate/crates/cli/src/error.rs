use thiserror::Error;
use turnover_spectra::conditioning::ConditioningError;
use turnover_spectra::ingest::IngestError;
use turnover_spectra::sim::SimError;
use turnover_spectra::spectral::SpectralError;

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NUMERIC: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag values, environment, or auxiliary input files.
    #[error("{0}")]
    Usage(String),

    /// The inputs parse but the numerics cannot be trusted.
    #[error("{0}")]
    Refusal(String),
}

/// 1 for I/O, parse and usage problems; 2 when the numbers are refused.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Usage(_) => EXIT_INPUT,
                CliError::Refusal(_) => EXIT_NUMERIC,
            };
        }
        if let Some(e) = cause.downcast_ref::<IngestError>() {
            return ingest_code(e);
        }
        if let Some(e) = cause.downcast_ref::<SimError>() {
            return match e {
                SimError::InvalidConfig(_) | SimError::InvalidGrid(_) | SimError::Io(_) => EXIT_INPUT,
                SimError::Ingest(e) => ingest_code(e),
                _ => EXIT_NUMERIC,
            };
        }
        if let Some(e) = cause.downcast_ref::<ConditioningError>() {
            return conditioning_code(e);
        }
        if let Some(e) = cause.downcast_ref::<SpectralError>() {
            return match e {
                SpectralError::Conditioning(e) => conditioning_code(e),
                _ => EXIT_NUMERIC,
            };
        }
    }
    EXIT_INPUT
}

fn ingest_code(e: &IngestError) -> u8 {
    match e {
        IngestError::DegenerateSeries { .. } | IngestError::CollinearFactors { .. } => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

fn conditioning_code(e: &ConditioningError) -> u8 {
    match e {
        ConditioningError::InvalidFloor(_)
        | ConditioningError::InvalidBound(_)
        | ConditioningError::InvalidTolerance(_) => EXIT_INPUT,
        _ => EXIT_NUMERIC,
    }
}
