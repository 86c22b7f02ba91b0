use std::fmt;

/// Bad configuration or arguments. Exits with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Too many frames failed. Exits with status 3.
#[derive(Debug)]
pub struct ErrorRateExceeded {
    pub failed: usize,
    pub total: usize,
    pub limit: f64,
}

impl fmt::Display for ErrorRateExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} of {} frames failed, above the allowed rate {}",
            self.failed, self.total, self.limit
        )
    }
}

impl std::error::Error for ErrorRateExceeded {}

/// Shorthand for returning a [`ConfigError`] through `anyhow`.
macro_rules! config_bail {
    ($($arg:tt)*) => {
        return Err(anyhow::Error::new($crate::error::ConfigError(format!($($arg)*))))
    };
}
pub(crate) use config_bail;

pub fn check_error_rate(failed: usize, total: usize, limit: Option<f64>) -> anyhow::Result<()> {
    match limit {
        Some(limit) if total > 0 && failed as f64 / total as f64 > limit => {
            Err(ErrorRateExceeded { failed, total, limit }.into())
        }
        _ => Ok(()),
    }
}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ConfigError>().is_some() {
        2
    } else if err.downcast_ref::<ErrorRateExceeded>().is_some() {
        3
    } else {
        1
    }
}
