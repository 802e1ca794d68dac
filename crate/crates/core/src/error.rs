use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument fell outside its admissible interval.
    #[error("{quantity} = {value} is outside [{min}, {max}]")]
    Domain {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// Linkage dimensions cannot realise the requested configuration.
    #[error("linkage geometry: {0}")]
    Geometry(String),

    /// A gait mode was combined with a terrain it cannot act on.
    #[error("{mode} gait cannot operate on {terrain}")]
    Mode { mode: String, terrain: String },

    #[error("integration fault at t = {time} s: {reason}")]
    Integration { time: f64, reason: String },

    /// Bracketed calibration target is outside what the bracket can produce.
    #[error("target {target} s is unreachable; bracket yields [{min}, {max}] s")]
    Unreachable { target: f64, min: f64, max: f64 },

    /// A residual that must be monotone across the bracket is not.
    #[error("residual is not monotone over the bracket: {0}")]
    NotMonotone(String),

    #[error("average current {current_ma} mA exceeds the {limit_ma} mA discharge limit")]
    Overload { current_ma: f64, limit_ma: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64, min: f64, max: f64) -> Self {
        Error::Domain {
            quantity,
            value,
            min,
            max,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Fails with [`Error::Domain`] unless `min <= value <= max` and `value` is finite.
pub(crate) fn check_range(quantity: &'static str, value: f64, min: f64, max: f64) -> Result<f64> {
    if value.is_finite() && value >= min && value <= max {
        Ok(value)
    } else {
        Err(Error::domain(quantity, value, min, max))
    }
}
