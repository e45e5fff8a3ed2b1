use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The step period is zero, so `sinh(T/T_c)` vanishes and the balance
    /// bounds are undefined.
    #[error("degenerate step period: T must be > 0 (got {period})")]
    DegeneratePeriod { period: f64 },

    /// The fixed-point system is singular; `bound` names the parameter value
    /// that makes it so (e.g. `b_min`).
    #[error("no isolated fixed point: b sits at {bound} (denominator {denominator:e})")]
    NoIsolatedFixedPoint {
        bound: &'static str,
        denominator: f64,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
