use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two modes (or a mode and a filter) were sampled on different grids.
    #[error("incompatible time grids: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    /// |gamma| is too close to one for the perpendicular mode to be defined.
    #[error("mode-matched limit: |gamma| = {magnitude} leaves the perpendicular mode undefined")]
    ModeMatched { magnitude: f64 },

    #[error("mode has no support on the detection interval")]
    Unnormalizable,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("photon number {n} exceeds the Fock truncation N_max = {n_max}")]
    Truncation { n: usize, n_max: usize },

    #[error("unsupported state for this operation: {0}")]
    UnsupportedState(&'static str),

    #[error("x grid [{min}, {max}] does not cover the distribution support [{need_min}, {need_max}]")]
    GridCoverage {
        min: f64,
        max: f64,
        need_min: f64,
        need_max: f64,
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
