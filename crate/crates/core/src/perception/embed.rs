use std::cell::RefCell;
use std::collections::HashMap;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{tokenize, PerceptionError};
use crate::gridworld::Scene;
use crate::rng::rng_from_seed;

pub const DEFAULT_DIM: usize = 64;

/// A unit-norm feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Normalizes `v`. Returns `None` for a zero vector.
    pub fn from_vec(v: Vec<f64>) -> Option<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (norm > 0.0 && norm.is_finite()).then(|| Self(v.into_iter().map(|x| x / norm).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Cosine similarity clamped to `[0, 1]`.
    pub fn similarity(&self, other: &Embedding) -> f64 {
        self.dot(other).clamp(0.0, 1.0)
    }
}

/// Stable 64-bit token hash (first eight bytes of SHA-256).
pub fn token_hash(token: &str) -> u64 {
    let digest = Sha256::digest(token.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Hashed-token text embedder: every token maps to a fixed pseudo-random
/// Gaussian direction and a text embeds as the normalized sum of its tokens.
#[derive(Debug)]
pub struct Embedder {
    dim: usize,
    cache: RefCell<HashMap<String, Vec<f64>>>,
}

impl Default for Embedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIM)
    }
}

impl Clone for Embedder {
    fn clone(&self) -> Self {
        Self::new(self.dim)
    }
}

impl Embedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self {
            dim,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Raw (unnormalized) Gaussian vector for one token.
    pub fn token_vector(&self, token: &str) -> Vec<f64> {
        if let Some(v) = self.cache.borrow().get(token) {
            return v.clone();
        }
        let mut rng = rng_from_seed(token_hash(token));
        let v: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        self.cache.borrow_mut().insert(token.to_string(), v.clone());
        v
    }

    pub fn embed_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Embedding, PerceptionError> {
        if tokens.is_empty() {
            return Err(PerceptionError::EmptyInput);
        }
        let mut sum = vec![0.0; self.dim];
        for t in tokens {
            for (acc, x) in sum.iter_mut().zip(self.token_vector(t.as_ref())) {
                *acc += x;
            }
        }
        Embedding::from_vec(sum).ok_or(PerceptionError::EmptyInput)
    }

    pub fn embed_text(&self, text: &str) -> Result<Embedding, PerceptionError> {
        self.embed_tokens(&tokenize(text))
    }

    /// Embeds the object an image reference depicts, by its appearance.
    pub fn embed_image(&self, scene: &Scene, image_ref: &str) -> Result<Embedding, PerceptionError> {
        let obj = scene
            .object_by_image(image_ref)
            .ok_or_else(|| PerceptionError::UnknownImage(image_ref.to_string()))?;
        self.embed_text(&obj.appearance_text())
    }
}
