//! Crate-wide error type.

use thiserror::Error;

/// Failures surfaced by constructors, validation, and estimator updates.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value failed validation. `path` names the offending
    /// key the way the JSON config document spells it, e.g. `rwls.forgetting`.
    #[error("config key `{path}`: {reason}")]
    Config { path: String, reason: String },

    /// The config document could not be deserialized at all.
    #[error("malformed config at `{path}`: {detail}")]
    ConfigSyntax { path: String, detail: String },

    /// An update hit a value that valid state makes impossible. Checked
    /// defensively so a corrupted covariance fails loudly instead of
    /// propagating NaN.
    #[error("numerical breakdown in {context}: {reason}")]
    NumericalBreakdown {
        context: &'static str,
        reason: String,
    },

    /// A record stream could not be reduced to summary metrics.
    #[error("summary input: {reason}")]
    SummaryInput { reason: String },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
