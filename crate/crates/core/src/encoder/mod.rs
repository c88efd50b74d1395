//! Cell embedding and the bi-dimensional attention encoder.
//!
//! Each module applies, in order, row attention (every cell attends over the
//! cells of its row), column attention (every cell attends over the cells of
//! its column) and a position-wise feed-forward layer. Each sublayer is
//! pre-normalized and residual; a final layer norm closes the stack. Nothing
//! depends on row or column position, so the encoder is equivariant under
//! row and column permutations.

mod embed;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{embed_cells, CellEmbedder, EmbedderSpec, FeatureHashEmbedder, FEATURE_HASH_KIND};

use crate::layers;
use crate::numerics::{BoundParams, NumericsError, ParamStore, Tape, Tensor, Var};

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("invalid encoder config: {0}")]
    InvalidConfig(String),
    #[error("input shape {found:?} does not match encoder width {expected}")]
    ShapeMismatch { expected: usize, found: Vec<usize> },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    /// Cell embedding width.
    pub d: usize,
    pub layers: usize,
    pub heads: usize,
    pub ffn_mult: usize,
    /// Row attention before column attention within each module.
    pub row_first: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            d: 64,
            layers: 2,
            heads: 4,
            ffn_mult: 4,
            row_first: true,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), EncoderError> {
        if self.d == 0 || self.heads == 0 || !self.d.is_multiple_of(self.heads) {
            return Err(EncoderError::InvalidConfig(format!(
                "d = {} must be a positive multiple of heads = {}",
                self.d, self.heads
            )));
        }
        if self.layers == 0 || self.ffn_mult == 0 {
            return Err(EncoderError::InvalidConfig(
                "layers and ffn_mult must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Encoder weights, all named under `encoder.`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    pub store: ParamStore,
}

impl EncoderParams {
    pub fn init<R: Rng + ?Sized>(config: EncoderConfig, rng: &mut R) -> Result<Self, EncoderError> {
        config.validate()?;
        let d = config.d;
        let mut store = ParamStore::new();
        for l in 0..config.layers {
            let p = format!("encoder.layers.{l}");
            layers::init_norm(&mut store, &format!("{p}.row_norm"), d);
            layers::init_self_attention(&mut store, &format!("{p}.row_attn"), d, rng);
            layers::init_norm(&mut store, &format!("{p}.col_norm"), d);
            layers::init_self_attention(&mut store, &format!("{p}.col_attn"), d, rng);
            layers::init_norm(&mut store, &format!("{p}.ffn_norm"), d);
            layers::init_ffn(&mut store, &format!("{p}.ffn"), d, d * config.ffn_mult, rng);
        }
        layers::init_norm(&mut store, "encoder.final_norm", d);
        Ok(Self { config, store })
    }

    /// Rebuilds from a parameter store, checking every expected tensor.
    pub fn from_store(config: EncoderConfig, store: &ParamStore) -> Result<Self, EncoderError> {
        let reference = Self::init(config.clone(), &mut ChaCha8Rng::seed_from_u64(0))?;
        let store = reference.store.take_matching(store)?;
        Ok(Self { config, store })
    }
}

fn check_input(shape: &[usize], d: usize) -> Result<(), EncoderError> {
    if shape.len() != 3 || shape[2] != d {
        return Err(EncoderError::ShapeMismatch {
            expected: d,
            found: shape.to_vec(),
        });
    }
    Ok(())
}

fn row_sublayer<'t>(
    x: Var<'t>,
    p: &BoundParams<'t>,
    prefix: &str,
    heads: usize,
) -> Result<Var<'t>, NumericsError> {
    let h = layers::norm(x, p, &format!("{prefix}.row_norm"))?;
    x.add(layers::self_attention(
        h,
        p,
        &format!("{prefix}.row_attn"),
        heads,
    )?)
}

fn col_sublayer<'t>(
    x: Var<'t>,
    p: &BoundParams<'t>,
    prefix: &str,
    heads: usize,
) -> Result<Var<'t>, NumericsError> {
    let h = layers::norm(x, p, &format!("{prefix}.col_norm"))?.permute(&[1, 0, 2])?;
    let a =
        layers::self_attention(h, p, &format!("{prefix}.col_attn"), heads)?.permute(&[1, 0, 2])?;
    x.add(a)
}

/// Differentiable encoder forward on `[m, n, d]`.
pub fn encode_var<'t>(
    e: Var<'t>,
    p: &BoundParams<'t>,
    config: &EncoderConfig,
) -> Result<Var<'t>, EncoderError> {
    check_input(&e.shape(), config.d)?;
    let mut x = e;
    for l in 0..config.layers {
        let prefix = format!("encoder.layers.{l}");
        x = if config.row_first {
            col_sublayer(
                row_sublayer(x, p, &prefix, config.heads)?,
                p,
                &prefix,
                config.heads,
            )?
        } else {
            row_sublayer(
                col_sublayer(x, p, &prefix, config.heads)?,
                p,
                &prefix,
                config.heads,
            )?
        };
        let h = layers::norm(x, p, &format!("{prefix}.ffn_norm"))?;
        x = x.add(layers::ffn(h, p, &format!("{prefix}.ffn"))?)?;
    }
    Ok(layers::norm(x, p, "encoder.final_norm")?)
}

/// Structure-aware cell embeddings `[m, n, d]` for cell embeddings `[m, n, d]`.
pub fn encode(e: &Tensor, params: &EncoderParams) -> Result<Tensor, EncoderError> {
    let tape = Tape::new();
    let p = params.store.bind_frozen(&tape);
    let out = encode_var(tape.constant(e.clone()), &p, &params.config)?;
    Ok(out.value().as_ref().clone())
}
