use super::EmbeddingVector;
use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

/// Deterministic offline embedding: signed hashing of character trigrams.
///
/// The lower-cased text is padded with one space on each side, every
/// character trigram is hashed with FNV-1a, the low bits pick a bucket and
/// the top bit picks the sign. The result is L2-normalised.
pub fn mock_embed(text: &str, dim: usize) -> Result<EmbeddingVector> {
    if dim == 0 {
        return Err(Error::Config("embedding dim must be positive".into()));
    }
    if text.is_empty() {
        return Err(Error::EmptyInput("text to embed"));
    }
    let padded: Vec<char> = format!(" {} ", text.to_lowercase()).chars().collect();
    let mut values = vec![0.0f64; dim];
    let mut buf = [0u8; 12];
    for window in padded.windows(3) {
        let mut len = 0;
        for c in window {
            len += c.encode_utf8(&mut buf[len..]).len();
        }
        let h = fnv1a(&buf[..len]);
        let bucket = (h % dim as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        values[bucket] += sign;
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    values.iter_mut().for_each(|v| *v /= norm);
    EmbeddingVector::new(values)
}
