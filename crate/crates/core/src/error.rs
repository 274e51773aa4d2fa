use thiserror::Error;

/// Errors reported by the waveform, statistics and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid waveform parameters: {0}")]
    InvalidSpec(String),

    #[error("waveform index {index} out of range, family has {count} waveforms")]
    IndexOutOfRange { index: u128, count: u128 },

    #[error("invalid frequency sequence: {0}")]
    InvalidFreqSequence(String),

    #[error("sample rate {rate} Hz unusable: {reason}")]
    InvalidSampleRate { rate: f64, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("grid point (k={k}, r={r}) outside the sidelobe domain")]
    PointOutsideDomain { k: usize, r: i32 },

    #[error("surface oversampling {got} too coarse, need at least {min}")]
    SurfaceTooCoarse { got: u32, min: u32 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("enumeration of {required} waveforms exceeds budget {budget}; use Monte Carlo sampling instead")]
    EnumerationBudget { required: u128, budget: u128 },

    #[error("phase table problem: {0}")]
    PhaseTable(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
