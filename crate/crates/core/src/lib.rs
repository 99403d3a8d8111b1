//! Codebook-based analog beamforming for mmWave massive MIMO.
//!
//! Precoders and combiners are drawn from beamsteering codebooks of ULA
//! steering vectors. Two searches pick a pair that maximizes the achievable
//! rate: an exhaustive search over every valid pair, and a turbo-like
//! alternation where each end runs a solution-tabu search over its own
//! codebook while the other end's choice is held fixed.
//!
//! Module map:
//!
//! - [`channel`]: ULA responses and the sparse geometric channel.
//! - [`codebook`]: quantized angles, solution indexing, neighborhoods.
//! - [`metric`]: effective channel, determinant cost and rate.
//! - [`probe`]: per-side effective-channel access used by the searches.
//! - [`search_fs`]: exhaustive search and its evaluation count.
//! - [`search_ts`]: tabu search over one side.
//! - [`turbo`]: alternation between the two sides and its budget.
//! - [`harness`]: seeded Monte-Carlo runs, sweeps and CSV.

pub mod channel;
pub mod codebook;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metric;
pub mod probe;
pub mod search_fs;
pub mod search_ts;
pub mod turbo;

pub use error::{Error, Result};
