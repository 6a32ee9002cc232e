//! Embedding-provider contract, a deterministic trigram-hash embedder for
//! hermetic runs, and the vector utilities used by few-shot training and
//! intent filtering.
//!
//! All providers return unit-norm vectors, so cosine similarity reduces to a
//! dot product.

use serde::{Deserialize, Serialize};

use crate::llm_gateway::{ProviderError, RemoteConfig};
use crate::rng::fnv1a64;

const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("empty vector list")]
    EmptyInput,
    #[error("vector is not unit-norm (|v| = {norm})")]
    NotUnitNorm { norm: f64 },
    #[error("vector contains a non-finite component")]
    NotFinite,
}

/// A unit-norm embedding. The constructor enforces finiteness and
/// `| |v| - 1 | <= 1e-6`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn unit(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NotFinite);
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(EmbeddingError::NotUnitNorm { norm });
        }
        Ok(Self(values))
    }

    /// Normalize to unit length. A (near-)zero vector degenerates to `e_0`.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NotFinite);
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Ok(Self::basis(values.len()));
        }
        for v in &mut values {
            *v /= norm;
        }
        Ok(Self(values))
    }

    /// The basis vector `e_0` of the given dimension.
    pub fn basis(dim: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[0] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Dot product of unit vectors, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let dot: f64 = a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

/// Arithmetic mean re-normalized to unit length; a zero mean (e.g. `v` and
/// `-v`) degenerates to `e_0`.
pub fn centroid(vectors: &[EmbeddingVector]) -> Result<EmbeddingVector, EmbeddingError> {
    let first = vectors.first().ok_or(EmbeddingError::EmptyInput)?;
    let dim = first.dim();
    let mut mean = vec![0.0; dim];
    for v in vectors {
        if v.dim() != dim {
            return Err(EmbeddingError::DimensionMismatch {
                left: dim,
                right: v.dim(),
            });
        }
        for (m, x) in mean.iter_mut().zip(v.values()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= vectors.len() as f64;
    }
    EmbeddingVector::normalized(mean)
}

/// Deterministic trigram-hash embedding.
///
/// Procedure: trim and lowercase the text; if nothing remains, return `e_0`.
/// Otherwise wrap the character sequence in `^`/`$` boundary markers, take
/// every window of three consecutive characters, hash its UTF-8 bytes with
/// FNV-1a 64, and add `+1`/`-1` (bit 63 of the hash clear/set) to bucket
/// `hash mod D`. The bucket counts are then L2-normalized.
pub fn hash_embed(text: &str, dim: usize) -> EmbeddingVector {
    assert!(dim >= 8, "hash_embed requires dimension >= 8");
    let normalized = text.trim().to_lowercase();
    if normalized.is_empty() {
        return EmbeddingVector::basis(dim);
    }
    let mut chars: Vec<char> = Vec::with_capacity(normalized.chars().count() + 2);
    chars.push('^');
    chars.extend(normalized.chars());
    chars.push('$');

    let mut acc = vec![0.0f64; dim];
    let mut buf = String::new();
    for window in chars.windows(3) {
        buf.clear();
        buf.extend(window);
        let h = fnv1a64(buf.as_bytes());
        let bucket = (h % dim as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign;
    }
    EmbeddingVector::normalized(acc).expect("bucket counts are finite")
}

/// Read-only embedding backend. Implementations must be deterministic per
/// instance and return one unit-norm vector per input, in input order.
pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        let mut out = self.embed_batch(std::slice::from_ref(&text.to_string()))?;
        Ok(out.remove(0))
    }
}

/// Local deterministic provider backed by [`hash_embed`].
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 8, "HashEmbedder requires dimension >= 8");
        Self { dim }
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn id(&self) -> &str {
        "hash"
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        Ok(texts.iter().map(|t| hash_embed(t, self.dim)).collect())
    }
}

#[derive(Debug, Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
    dimension: usize,
}

/// HTTP embedding backend speaking the shared wire contract:
/// request `{"texts": [...]}`, response `{"vectors": [[...]], "dimension": n}`.
pub struct RemoteEmbeddingProvider {
    config: RemoteConfig,
    dim: usize,
    client: reqwest::blocking::Client,
}

impl RemoteEmbeddingProvider {
    pub fn new(config: RemoteConfig, dim: usize) -> Result<Self, ProviderError> {
        let client = config.build_client("remote-embedding")?;
        Ok(Self {
            config,
            dim,
            client,
        })
    }
}

impl EmbeddingProvider for RemoteEmbeddingProvider {
    fn id(&self) -> &str {
        "remote-embedding"
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        let id = self.id();
        let op = "embed_batch";
        let body = serde_json::to_value(EmbedRequest { texts }).expect("serialize request");
        let value = self.config.post_json(&self.client, id, op, &body)?;
        let resp: EmbedResponse =
            serde_json::from_value(value).map_err(|e| ProviderError::MalformedResponse {
                provider_id: id.into(),
                op: op.into(),
                message: e.to_string(),
            })?;
        if resp.dimension != self.dim {
            return Err(ProviderError::MalformedResponse {
                provider_id: id.into(),
                op: op.into(),
                message: format!("dimension {} != expected {}", resp.dimension, self.dim),
            });
        }
        if resp.vectors.len() != texts.len() {
            return Err(ProviderError::MalformedResponse {
                provider_id: id.into(),
                op: op.into(),
                message: format!("{} vectors for {} texts", resp.vectors.len(), texts.len()),
            });
        }
        resp.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(ProviderError::MalformedResponse {
                        provider_id: id.into(),
                        op: op.into(),
                        message: format!("vector dimension {} != {}", v.len(), self.dim),
                    });
                }
                EmbeddingVector::unit(v).map_err(|e| ProviderError::MalformedResponse {
                    provider_id: id.into(),
                    op: op.into(),
                    message: e.to_string(),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    #[test]
    fn cosine_identity_is_one() {
        let v = hash_embed("reset password", 64);
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_orthogonal_is_zero() {
        let a = EmbeddingVector::unit(vec![1.0, 0.0]).unwrap();
        let b = EmbeddingVector::unit(vec![0.0, 1.0]).unwrap();
        assert_eq!(cosine_similarity(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn cosine_dot_product_example() {
        let a = EmbeddingVector::unit(vec![0.6, 0.8]).unwrap();
        let b = EmbeddingVector::unit(vec![1.0, 0.0]).unwrap();
        assert!((cosine_similarity(&a, &b).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn cosine_dimension_mismatch() {
        let a = EmbeddingVector::basis(8);
        let b = EmbeddingVector::basis(16);
        assert!(matches!(
            cosine_similarity(&a, &b),
            Err(EmbeddingError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hash_embed_deterministic() {
        assert_eq!(
            hash_embed("reset password", 256),
            hash_embed("reset password", 256)
        );
    }

    #[test]
    fn hash_embed_unit_norm() {
        for text in ["reset password", "a", "Ω snow", "  padded  "] {
            let v = hash_embed(text, 64);
            let norm: f64 = v.values().iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6, "{text}: norm {norm}");
        }
    }

    #[test]
    fn hash_embed_empty_is_basis() {
        assert_eq!(hash_embed("", 16), EmbeddingVector::basis(16));
        assert_eq!(hash_embed("   \t ", 16), EmbeddingVector::basis(16));
    }

    /// Independent reference: accumulate signed trigram counts in a map, then
    /// compute the cosine by explicit normalization.
    fn reference_embed(text: &str, dim: usize) -> Vec<f64> {
        let s = text.trim().to_lowercase();
        if s.is_empty() {
            let mut v = vec![0.0; dim];
            v[0] = 1.0;
            return v;
        }
        let wrapped: Vec<char> = std::iter::once('^')
            .chain(s.chars())
            .chain(std::iter::once('$'))
            .collect();
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for i in 0..wrapped.len().saturating_sub(2) {
            let gram: String = wrapped[i..i + 3].iter().collect();
            let h = fnv1a64(gram.as_bytes());
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            *counts.entry((h % dim as u64) as usize).or_insert(0.0) += sign;
        }
        let mut v = vec![0.0; dim];
        for (bucket, c) in counts {
            v[bucket] = c;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            v = vec![0.0; dim];
            v[0] = 1.0;
        } else {
            for x in &mut v {
                *x /= norm;
            }
        }
        v
    }

    fn reference_cosine(a: &str, b: &str, dim: usize) -> f64 {
        let va = reference_embed(a, dim);
        let vb = reference_embed(b, dim);
        va.iter().zip(&vb).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn hash_embed_matches_reference_procedure() {
        for text in ["reset my password", "book a flight", "ab", "x"] {
            let got = hash_embed(text, 256);
            let want = reference_embed(text, 256);
            for (g, w) in got.values().iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "{text}");
            }
        }
    }

    #[test]
    fn related_texts_score_higher_than_unrelated() {
        let near = reference_cosine("reset my password", "reset password", 256);
        let far = reference_cosine("reset my password", "book a flight", 256);
        assert!(near > far, "expected {near} > {far}");
        let near_impl =
            cosine_similarity(&hash_embed("reset my password", 256), &hash_embed("reset password", 256))
                .unwrap();
        assert!((near_impl - near).abs() < 1e-9);
    }

    #[test]
    fn centroid_of_single_vector_is_itself() {
        let v = hash_embed("hello world", 32);
        let c = centroid(std::slice::from_ref(&v)).unwrap();
        for (a, b) in c.values().iter().zip(v.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn centroid_of_opposites_degenerates_to_basis() {
        let v = hash_embed("hello", 16);
        let neg = EmbeddingVector::normalized(v.values().iter().map(|x| -x).collect()).unwrap();
        let c = centroid(&[v, neg]).unwrap();
        assert_eq!(c, EmbeddingVector::basis(16));
    }

    #[test]
    fn centroid_diagonal_example() {
        let a = EmbeddingVector::unit(vec![1.0, 0.0]).unwrap();
        let b = EmbeddingVector::unit(vec![0.0, 1.0]).unwrap();
        let c = centroid(&[a, b]).unwrap();
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert!((c.values()[0] - inv_sqrt2).abs() < 1e-12);
        assert!((c.values()[1] - inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn centroid_rejects_empty_input() {
        assert!(matches!(centroid(&[]), Err(EmbeddingError::EmptyInput)));
    }

    proptest! {
        #[test]
        fn hash_embed_ignores_case_and_outer_whitespace(text in "[ a-zA-Z0-9]{0,24}") {
            let a = hash_embed(&text, 64);
            let b = hash_embed(&format!("  {}  ", text.to_uppercase()), 64);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn cosine_symmetric_and_bounded(x in "[a-z ]{1,16}", y in "[a-z ]{1,16}") {
            let a = hash_embed(&x, 32);
            let b = hash_embed(&y, 32);
            let ab = cosine_similarity(&a, &b).unwrap();
            let ba = cosine_similarity(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab.abs() <= 1.0 + 1e-9);
        }

        #[test]
        fn embed_batch_matches_single_calls(texts in proptest::collection::vec("[a-z ]{0,12}", 0..6)) {
            let provider = HashEmbedder::new(32);
            let batch = provider.embed_batch(&texts).unwrap();
            for (text, vec) in texts.iter().zip(&batch) {
                prop_assert_eq!(&provider.embed(text).unwrap(), vec);
            }
        }
    }
}
