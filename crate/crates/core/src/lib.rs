//! Exact computational objects around Liouville correlations under an
//! exceptional quadratic character: the Liouville table, quadratic
//! characters, the `λ_z` proxy, sieve weights and the CRT/polynomial
//! decomposition of restricted correlation sums.

pub mod arith;
pub mod characters;
pub mod decomposition;
pub mod proxy;
pub mod sieve;
pub mod weights;

/// Any error raised by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Arith(#[from] arith::ArithError),
    #[error(transparent)]
    Sieve(#[from] sieve::SieveError),
    #[error(transparent)]
    Character(#[from] characters::CharacterError),
    #[error(transparent)]
    Proxy(#[from] proxy::ProxyError),
    #[error(transparent)]
    Weight(#[from] weights::WeightError),
    #[error(transparent)]
    Decomposition(#[from] decomposition::DecompError),
}
