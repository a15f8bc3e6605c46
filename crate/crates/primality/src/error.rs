use num_bigint::BigUint;

/// Crate-wide error type.
///
/// `NotPrime` is a signal, not a failure: operations that assume a prime
/// modulus (modular square roots, point sampling) return it when the
/// arithmetic itself contradicts primality, and callers treat it as
/// compositeness evidence.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// A precondition on the arguments was violated.
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// A computation that is only meaningful for a prime modulus ran into
    /// an internal contradiction; the modulus is certainly composite.
    #[error("modulus is not prime: {0}")]
    NotPrime(&'static str),
    /// Ring elements from two different rings were combined.
    #[error("ring mismatch: operands belong to different rings")]
    RingMismatch,
    /// A configured capacity (table, list, scale guard) was exhausted.
    #[error("capacity exceeded: {0}")]
    Capacity(&'static str),
}

/// A nontrivial factor of the modulus, surfaced by arithmetic that only a
/// composite modulus can produce (failed inversion, shared gcd).
///
/// Invariant: `1 < factor < n` for the modulus `n` in play.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSurprise {
    pub factor: BigUint,
}

impl FactorSurprise {
    pub fn new(factor: BigUint) -> Self {
        FactorSurprise { factor }
    }
}

impl std::fmt::Display for FactorSurprise {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "surprise factor {}", self.factor)
    }
}
