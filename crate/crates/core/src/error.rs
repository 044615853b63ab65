use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("`{name}` = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error(
        "tunnel voltage {u_t} V leaves the intermediate Simmons regime \
         (|u_t| must stay below {limit} V)"
    )]
    OutOfRegime { u_t: f64, limit: f64 },

    #[error("operating-point solve failed at e = {e} V, z = {z}: {reason}")]
    SolverFailure { e: f64, z: f64, reason: String },

    #[error("integration failed at t = {t} s (last good z = {z}): {reason}")]
    IntegrationFailure { t: f64, z: f64, reason: String },

    #[error("calibration error: {0}")]
    Calibration(String),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
