//! Cell text embedders.

use serde::{Deserialize, Serialize};

use crate::numerics::Tensor;
use crate::table::Table;

/// Maps cell text to a fixed-size vector.
pub trait CellEmbedder {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<f64>;
    /// Identifies the embedder inside checkpoints.
    fn spec(&self) -> EmbedderSpec;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderSpec {
    pub kind: String,
    pub dim: usize,
    pub seed: u64,
}

pub const FEATURE_HASH_KIND: &str = "char-ngram-hash";

/// Signed feature hashing of character 1-, 2- and 3-grams, L2-normalized.
///
/// The text is wrapped in boundary sentinels first, so the empty string and
/// prefixes/suffixes get their own features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureHashEmbedder {
    dim: usize,
    seed: u64,
}

const NGRAM_SIZES: [usize; 3] = [1, 2, 3];
const BOS: char = '\u{2}';
const EOS: char = '\u{3}';

impl FeatureHashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim, seed }
    }

    pub fn from_spec(spec: &EmbedderSpec) -> Option<Self> {
        (spec.kind == FEATURE_HASH_KIND && spec.dim > 0).then(|| Self::new(spec.dim, spec.seed))
    }

    fn hash(&self, gram: &[char]) -> u64 {
        // FNV-1a over the UTF-8 bytes, seeded, then a splitmix finalizer so
        // both the bucket and the sign bit are well mixed.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut buf = [0u8; 4];
        for ch in gram {
            for &b in ch.encode_utf8(&mut buf).as_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h ^= gram.len() as u64;
        splitmix(h)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl CellEmbedder for FeatureHashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let chars: Vec<char> = std::iter::once(BOS)
            .chain(text.chars())
            .chain(std::iter::once(EOS))
            .collect();
        let mut v = vec![0.0; self.dim];
        for n in NGRAM_SIZES {
            for gram in chars.windows(n) {
                let h = self.hash(gram);
                let idx = (h % self.dim as u64) as usize;
                v[idx] += if h >> 63 == 1 { -1.0 } else { 1.0 };
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    fn spec(&self) -> EmbedderSpec {
        EmbedderSpec {
            kind: FEATURE_HASH_KIND.to_string(),
            dim: self.dim,
            seed: self.seed,
        }
    }
}

/// Embeds every cell's rendered text (Missing renders as ""), giving an
/// `[m, n, d]` tensor.
pub fn embed_cells(t: &Table, phi: &dyn CellEmbedder) -> Tensor {
    let d = phi.dim();
    let mut data = Vec::with_capacity(t.n_rows() * t.n_cols() * d);
    for row in t.rows() {
        for cell in row {
            data.extend(phi.embed(&cell.render()));
        }
    }
    Tensor::new(vec![t.n_rows(), t.n_cols(), d], data).expect("embedder output is finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        let phi = FeatureHashEmbedder::new(64, 7);
        let a = phi.embed("Paris");
        assert_eq!(a, phi.embed("Paris"));
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm <= 1.0 + 1e-12);
        assert!(phi.embed("").iter().any(|&x| x != 0.0));
    }

    #[test]
    fn near_strings_differ() {
        let phi = FeatureHashEmbedder::new(64, 0);
        assert_ne!(phi.embed("abc"), phi.embed("abd"));
    }

    #[test]
    fn seed_changes_features() {
        assert_ne!(
            FeatureHashEmbedder::new(32, 1).embed("x"),
            FeatureHashEmbedder::new(32, 2).embed("x")
        );
    }

    #[test]
    fn spec_round_trip() {
        let phi = FeatureHashEmbedder::new(16, 5);
        assert_eq!(FeatureHashEmbedder::from_spec(&phi.spec()), Some(phi));
    }

    #[test]
    fn cell_tensor_shape_and_sharing() {
        let t = Table::from_text("t", &["a", "b"], &[vec!["x", "x"]]).unwrap();
        let phi = FeatureHashEmbedder::new(8, 0);
        let e = embed_cells(&t, &phi);
        assert_eq!(e.shape(), &[1, 2, 8]);
        assert_eq!(e.data()[..8], e.data()[8..]);
    }
}
