/// Maps text to a unit vector. Implementations must be deterministic.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<f64>;
}

pub const DEFAULT_EMBED_DIM: usize = 256;

/// Character 3-gram term frequencies hashed into `dim` buckets, L2-normalized.
///
/// Text is lowercased and runs of whitespace collapse to one space before
/// the 3-grams are taken over Unicode scalar values. Each gram is hashed with
/// 64-bit FNV-1a over its UTF-8 bytes; the bucket is `hash % dim`. Inputs
/// shorter than three characters form a single gram. Empty input yields the
/// zero vector.
#[derive(Debug, Clone, Copy)]
pub struct HashedTrigramEmbedder {
    dim: usize,
}

impl Default for HashedTrigramEmbedder {
    fn default() -> Self {
        Self {
            dim: DEFAULT_EMBED_DIM,
        }
    }
}

impl HashedTrigramEmbedder {
    pub fn with_dim(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Embedder for HashedTrigramEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let normalized = text
            .to_lowercase()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        let chars: Vec<char> = normalized.chars().collect();
        let mut v = vec![0.0; self.dim];
        if chars.is_empty() {
            return v;
        }
        let mut buf = String::new();
        let mut add = |gram: &[char]| {
            buf.clear();
            buf.extend(gram);
            v[(fnv1a64(buf.as_bytes()) % self.dim as u64) as usize] += 1.0;
        };
        if chars.len() < 3 {
            add(&chars);
        } else {
            chars.windows(3).for_each(&mut add);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
