use thiserror::Error;

/// Crate-wide error type.
///
/// Range and precondition violations carry enough context to state what the
/// caller must change; accuracy failures report the bound that was actually
/// achieved so a run can be retried with a longer contour or finer step.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sieve limit {limit} outside supported range [{min}, {max}]")]
    SieveLimit { limit: u64, min: u64, max: u64 },

    #[error("sieve covers {limit} but the computation needs primes up to {required}")]
    SieveRange { limit: u64, required: u64 },

    #[error("kronecker(0, 0) is undefined")]
    KroneckerUndefined,

    #[error("d = {0} must be odd, positive, and square-free")]
    BadTwist(u64),

    #[error("n = {0} exceeds the Mobius table range {1}")]
    MoebiusRange(u64, u64),

    #[error("tau table bound {0} outside the supported range [1, {1}]")]
    TauLimit(u64, u64),

    #[error("tau series coefficient overflowed 128-bit storage at index {0}")]
    TauOverflow(usize),

    #[error("tau cache {path}: {reason}")]
    TauCache { path: String, reason: String },

    #[error("prime cache {path}: {reason}")]
    PrimeCache { path: String, reason: String },

    #[error("n = {0} is outside the coefficient table range {1}")]
    CoefficientRange(u64, u64),

    #[error("p = {0} is not an odd prime")]
    NotOddPrime(u64),

    #[error("q = {0} must be odd and positive")]
    BadModulus(u64),

    #[error("sigma = {0} outside the admissible range {1}")]
    BadSigma(f64, &'static str),

    #[error("weight support [{0}, {1}] must satisfy 0 < a < b")]
    BadSupport(f64, f64),

    #[error("scale X = {0} must be at least 3")]
    BadScale(f64),

    #[error("argument x = {0} must be positive and finite")]
    BadArgument(f64),

    #[error("contour parameter {name} = {value} violates {constraint}")]
    BadContour {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("quadrature did not reach tolerance {tol:e} (deepest interval error {achieved:e})")]
    QuadratureDepth { tol: f64, achieved: f64 },

    #[error("{what}: achieved bound {achieved:e} exceeds required {required:e}")]
    Accuracy {
        what: &'static str,
        achieved: f64,
        required: f64,
    },

    #[error("alpha = {alpha} must be coprime to 2p = {two_p}")]
    BadAlpha { alpha: u64, two_p: u64 },

    #[error("empty family: no odd square-free d with d/X in ({0}, {1})")]
    EmptyFamily(f64, f64),

    #[error("pMax = {0} exceeds the verification bound {1}")]
    DualRange(u64, u64),
}

pub type Result<T> = std::result::Result<T, Error>;
