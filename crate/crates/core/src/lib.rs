//! Extraction of signed actor-claim dyads from newspaper text and their
//! aggregation into time-sliced discourse networks.

pub mod actors;
pub mod categorizer;
pub mod claims;
pub mod codebook;
pub mod dyads;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod network;
pub mod remote;
pub mod stance;

pub use error::{Error, Result};
