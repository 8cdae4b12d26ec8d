use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("gamma function pole at z = {0}")]
    GammaPole(f64),

    #[error("range error: {0}")]
    Range(String),

    #[error("step-size control failed at t = {t}")]
    StepControl { t: f64 },

    #[error("profile does not decay before the radial grid end (relative tail {tail:.3e})")]
    SupportTruncation { tail: f64 },

    #[error("spectrum does not decay before the spectral grid end (relative tail {tail:.3e})")]
    SpectralTruncation { tail: f64 },

    #[error("normalization calibration failed (round-trip residual {residual:.3e})")]
    Calibration { residual: f64 },

    #[error("space {0} has no calibrated normalization; call calibrate_normalization first")]
    NotCalibrated(String),

    #[error("Sobolev integral diverges: tail carries {tail_fraction:.3e} of the total")]
    Divergence { tail_fraction: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
