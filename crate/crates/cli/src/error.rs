use std::fmt;

use fringebos::baselines::BaselineError;
use fringebos::demodulate::DemodError;
use fringebos::diffusion::DiffusionError;
use fringebos::metrics::SweepError;
use fringebos::normalize::NormError;
use fringebos::pipeline::PipelineError;
use fringebos::unwrap::UnwrapError;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Bad flags or missing inputs named on the command line.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// A check that ran but did not pass.
#[derive(Debug)]
pub struct NumericFailure(pub String);

impl fmt::Display for NumericFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericFailure {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn pipeline_is_numeric(e: &PipelineError) -> bool {
    match e {
        PipelineError::Normalize(n) => matches!(n, NormError::NoCarrier),
        PipelineError::Baseline(b) => !matches!(b, BaselineError::BadConfig(_)),
        PipelineError::Demodulate(d) => !matches!(d, DemodError::BadConfig(_)),
        PipelineError::Unwrap(_) => true,
    }
}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<NumericFailure>() || cause.is::<UnwrapError>() {
            return EXIT_NUMERIC;
        }
        if let Some(e) = cause.downcast_ref::<PipelineError>() {
            return if pipeline_is_numeric(e) { EXIT_NUMERIC } else { EXIT_DATA };
        }
        if let Some(SweepError::Pipeline(e)) = cause.downcast_ref::<SweepError>() {
            return if pipeline_is_numeric(e) { EXIT_NUMERIC } else { EXIT_DATA };
        }
        if let Some(e) = cause.downcast_ref::<DiffusionError>() {
            return match e {
                DiffusionError::NoConvergence | DiffusionError::DegenerateWindow => EXIT_NUMERIC,
                _ => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<DemodError>() {
            return if matches!(e, DemodError::BadConfig(_)) { EXIT_USAGE } else { EXIT_NUMERIC };
        }
        if let Some(NormError::NoCarrier) = cause.downcast_ref::<NormError>() {
            return EXIT_NUMERIC;
        }
    }
    EXIT_DATA
}
