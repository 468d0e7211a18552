//! Opinion recommendation engine: given the existing reviews of a
//! target product, a user's review history and the histories of that
//! user's neighbors, jointly generate a customized review and predict a
//! customized rating score.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`corpus`]: JSONL ingestion, tokenization, vocabulary and
//!   per-(user, product) instance assembly,
//! - [`nn`]: dense tensors with reverse-mode autodiff, LSTM, Adagrad,
//! - [`embeddings`]: skip-gram word vectors and review averaging,
//! - [`neighbors`]: rating-matrix tri-factorization and neighbor search,
//! - [`encoders`] / [`memory`] / [`generator`]: the model itself,
//! - [`training`]: the joint online training loop,
//! - [`evaluation`]: metrics, rating baselines and the experiment grid,
//! - [`synthetic`]: a planted-bias corpus generator for benchmarks,
//! - [`checkpoint`]: the binary tensor container.

pub mod checkpoint;
pub mod corpus;
pub mod embeddings;
pub mod encoders;
pub mod evaluation;
pub mod generator;
pub mod memory;
pub mod model;
pub mod neighbors;
pub mod nn;
pub mod synthetic;
pub mod training;

use rand_chacha::rand_core::SeedableRng;

/// The deterministic RNG used everywhere a seed is accepted.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate's RNG from a seed.
pub fn seeded_rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

#[cfg(test)]
pub(crate) fn test_rng(seed: u64) -> Rng {
    seeded_rng(seed)
}
