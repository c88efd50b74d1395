//! Learnable-query cross-attention adapter compressing each column of
//! encoder output into `k` vectors of width `d'`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layers;
use crate::numerics::{BoundParams, NumericsError, ParamStore, Tape, Tensor, Var};

pub const QUERY_INIT_STD: f64 = 0.02;

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("invalid adapter config: {0}")]
    InvalidConfig(String),
    #[error("input shape {found:?} does not match adapter input width {expected}")]
    ShapeMismatch { expected: usize, found: Vec<usize> },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdapterConfig {
    /// Width of the incoming cell embeddings.
    pub d_in: usize,
    /// Number of learnable queries.
    pub k: usize,
    /// Output width d'.
    pub d_out: usize,
    pub heads: usize,
    /// Number of cross-attention + FFN blocks.
    pub depth: usize,
    pub ffn_mult: usize,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        Self {
            d_in: 64,
            k: 4,
            d_out: 128,
            heads: 4,
            depth: 1,
            ffn_mult: 4,
        }
    }
}

impl AdapterConfig {
    pub fn validate(&self) -> Result<(), AdapterError> {
        if self.k == 0 || self.d_in == 0 || self.depth == 0 || self.ffn_mult == 0 {
            return Err(AdapterError::InvalidConfig(
                "k, d_in, depth and ffn_mult must be >= 1".into(),
            ));
        }
        if self.heads == 0 || self.d_out == 0 || !self.d_out.is_multiple_of(self.heads) {
            return Err(AdapterError::InvalidConfig(format!(
                "d_out = {} must be a positive multiple of heads = {}",
                self.d_out, self.heads
            )));
        }
        Ok(())
    }
}

/// Adapter weights, all named under `adapter.`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterParams {
    pub config: AdapterConfig,
    pub store: ParamStore,
}

impl AdapterParams {
    pub fn init<R: Rng + ?Sized>(config: AdapterConfig, rng: &mut R) -> Result<Self, AdapterError> {
        config.validate()?;
        let (d, dp) = (config.d_in, config.d_out);
        let mut store = ParamStore::new();
        store.insert(
            "adapter.queries",
            Tensor::randn(&[config.k, dp], QUERY_INIT_STD, rng),
        );
        layers::init_norm(&mut store, "adapter.kv_norm", d);
        for b in 0..config.depth {
            let p = format!("adapter.blocks.{b}");
            layers::init_norm(&mut store, &format!("{p}.query_norm"), dp);
            layers::init_attention(&mut store, &format!("{p}.cross_attn"), dp, d, dp, rng);
            layers::init_norm(&mut store, &format!("{p}.ffn_norm"), dp);
            layers::init_ffn(
                &mut store,
                &format!("{p}.ffn"),
                dp,
                dp * config.ffn_mult,
                rng,
            );
        }
        layers::init_norm(&mut store, "adapter.out_norm", dp);
        Ok(Self { config, store })
    }

    pub fn from_store(config: AdapterConfig, store: &ParamStore) -> Result<Self, AdapterError> {
        let reference = Self::init(config.clone(), &mut ChaCha8Rng::seed_from_u64(0))?;
        let store = reference.store.take_matching(store)?;
        Ok(Self { config, store })
    }
}

/// Differentiable adapter over a batch of columns `[n, m, d]` (column-major
/// batch), giving `[n, k, d']`.
pub fn adapt_columns_var<'t>(
    cols: Var<'t>,
    p: &BoundParams<'t>,
    config: &AdapterConfig,
) -> Result<Var<'t>, AdapterError> {
    let shape = cols.shape();
    if shape.len() != 3 || shape[2] != config.d_in {
        return Err(AdapterError::ShapeMismatch {
            expected: config.d_in,
            found: shape,
        });
    }
    let kv = layers::norm(cols, p, "adapter.kv_norm")?;
    let mut q = p
        .get("adapter.queries")?
        .reshape(&[1, config.k, config.d_out])?;
    for b in 0..config.depth {
        let prefix = format!("adapter.blocks.{b}");
        let qn = layers::norm(q, p, &format!("{prefix}.query_norm"))?;
        let a = layers::attention(qn, kv, p, &format!("{prefix}.cross_attn"), config.heads)?;
        // The first residual broadcasts the shared query bank over columns.
        q = q.add(a)?;
        let h = layers::norm(q, p, &format!("{prefix}.ffn_norm"))?;
        q = q.add(layers::ffn(h, p, &format!("{prefix}.ffn"))?)?;
    }
    Ok(layers::norm(q, p, "adapter.out_norm")?)
}

/// Differentiable `[m, n, d] -> [n, k, d']`.
pub fn adapt_table_var<'t>(
    e_prime: Var<'t>,
    p: &BoundParams<'t>,
    config: &AdapterConfig,
) -> Result<Var<'t>, AdapterError> {
    if e_prime.shape().len() != 3 {
        return Err(AdapterError::ShapeMismatch {
            expected: config.d_in,
            found: e_prime.shape(),
        });
    }
    adapt_columns_var(e_prime.permute(&[1, 0, 2])?, p, config)
}

/// Column representation `[k, d']` for one column's cells `[m, d]`.
pub fn adapt_column(col_cells: &Tensor, params: &AdapterParams) -> Result<Tensor, AdapterError> {
    let s = col_cells.shape();
    if s.len() != 2 || s[1] != params.config.d_in {
        return Err(AdapterError::ShapeMismatch {
            expected: params.config.d_in,
            found: s.to_vec(),
        });
    }
    let x = col_cells.reshape(&[1, s[0], s[1]])?;
    let tape = Tape::new();
    let p = params.store.bind_frozen(&tape);
    let out = adapt_columns_var(tape.constant(x), &p, &params.config)?;
    Ok(out
        .value()
        .reshape(&[params.config.k, params.config.d_out])?)
}

/// Column representations `[n, k, d']` for encoder output `[m, n, d]`.
pub fn adapt_table(e_prime: &Tensor, params: &AdapterParams) -> Result<Tensor, AdapterError> {
    let tape = Tape::new();
    let p = params.store.bind_frozen(&tape);
    let out = adapt_table_var(tape.constant(e_prime.clone()), &p, &params.config)?;
    Ok(out.value().as_ref().clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: usize, d_out: usize) -> AdapterParams {
        let cfg = AdapterConfig {
            d_in: 8,
            k,
            d_out,
            heads: 2,
            depth: 1,
            ffn_mult: 2,
        };
        AdapterParams::init(cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap()
    }

    #[test]
    fn output_shape_is_fixed() {
        let p = params(3, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in [1, 5, 100] {
            let col = Tensor::randn(&[m, 8], 1.0, &mut rng);
            assert_eq!(adapt_column(&col, &p).unwrap().shape(), &[3, 16]);
        }
    }

    #[test]
    fn identical_cells_independent_of_count() {
        let p = params(2, 16);
        let cell = Tensor::randn(&[1, 8], 1.0, &mut ChaCha8Rng::seed_from_u64(2));
        let seven = cell.index_select(0, &[0; 7]).unwrap();
        let a = adapt_column(&cell, &p).unwrap();
        let b = adapt_column(&seven, &p).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn table_matches_per_column() {
        let p = params(2, 16);
        let e = Tensor::randn(&[4, 3, 8], 1.0, &mut ChaCha8Rng::seed_from_u64(3));
        let c = adapt_table(&e, &p).unwrap();
        assert_eq!(c.shape(), &[3, 2, 16]);
        for j in 0..3 {
            let col = e.index_select(1, &[j]).unwrap().reshape(&[4, 8]).unwrap();
            let single = adapt_column(&col, &p).unwrap();
            let slice = c.index_select(0, &[j]).unwrap().reshape(&[2, 16]).unwrap();
            assert!(single.max_abs_diff(&slice) < 1e-12);
        }
    }

    #[test]
    fn row_permutation_invariant() {
        let p = params(2, 16);
        let e = Tensor::randn(&[5, 2, 8], 1.0, &mut ChaCha8Rng::seed_from_u64(4));
        let shuffled = e.index_select(0, &[3, 0, 4, 2, 1]).unwrap();
        let a = adapt_table(&e, &p).unwrap();
        let b = adapt_table(&shuffled, &p).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        let p = params(2, 16);
        assert!(matches!(
            adapt_column(&Tensor::zeros(&[3, 5]), &p),
            Err(AdapterError::ShapeMismatch { .. })
        ));
        let bad = AdapterConfig {
            d_out: 10,
            heads: 4,
            ..AdapterConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn deeper_stack_runs() {
        let cfg = AdapterConfig {
            d_in: 8,
            k: 2,
            d_out: 8,
            heads: 2,
            depth: 2,
            ffn_mult: 1,
        };
        let p = AdapterParams::init(cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let e = Tensor::randn(&[3, 2, 8], 1.0, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(adapt_table(&e, &p).unwrap().shape(), &[2, 2, 8]);
        let back = AdapterParams::from_store(p.config.clone(), &p.store).unwrap();
        assert_eq!(back, p);
    }
}
