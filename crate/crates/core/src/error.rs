use thiserror::Error;

/// Errors surfaced by the geometry, simulation, and statistics layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("path grid invalid: {0}")]
    BadGrid(&'static str),

    #[error("step [{t0}, {t1}] crosses a dyadic breakpoint; the stepper must split first")]
    StepCrossesBreakpoint { t0: f64, t1: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("need at least {min} samples, got {n}")]
    NotEnoughSamples { n: usize, min: usize },

    #[error("weights must be nonnegative and sum to 1 (sum = {sum})")]
    BadWeights { sum: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("estimated memory {bytes} bytes exceeds limit {limit} bytes")]
    ResourceLimit { bytes: u64, limit: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
