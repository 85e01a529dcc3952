use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Gamma function evaluated at a nonpositive integer.
    #[error("gamma pole at x = {0}")]
    GammaPole(f64),
    /// Operation requires an exactly samplable (stable) Laplace exponent.
    #[error("no exact sampler for this Bernstein function: {0}")]
    NoExactSampler(String),
    /// The driving subordinator path ends before the requested calendar time.
    #[error("path exhausted: subordinator reaches {reached}, needed {needed}")]
    PathExhausted { reached: f64, needed: f64 },
    /// A ratio function could not be inverted on the requested range.
    #[error("ratio not invertible on range: {0}")]
    RatioNotInvertible(String),
    /// A power series failed to converge within its term budget.
    #[error("series did not converge after {0} terms")]
    SeriesNonConvergence(usize),
    /// A predictor was requested without its finite-mean certificate.
    #[error("missing finite-mean certificate: {0}")]
    MissingCertificate(String),
    /// The survival estimate cannot support the requested diagnostic.
    #[error("diagnostic unavailable: {0}")]
    Diagnostic(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
