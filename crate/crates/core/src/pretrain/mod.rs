//! Contrastive column pretraining over snapshot pairs and retrieval-based
//! evaluation of the learned column embeddings.
//!
//! Each step samples two row snapshots of every table in a mini-batch,
//! encodes them, pools each column to one vector and scores the pool with an
//! InfoNCE objective whose positives are the same column seen through the
//! sibling snapshot. Every other pool entry, from any table, is a negative.

pub mod synthetic;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapter::{adapt_table_var, AdapterError, AdapterParams};
use crate::encoder::{embed_cells, encode_var, CellEmbedder, EncoderError, EncoderParams};
use crate::numerics::{Adam, AdamConfig, BoundParams, NumericsError, Tape, Tensor, Var};
use crate::table::{sample_pair_indices, PairMode, Table, TableError};

#[derive(Debug, Error)]
pub enum PretrainError {
    #[error("embedding pool needs at least 2 entries, got {0}")]
    PoolTooSmall(usize),
    #[error("pool entry {0} has no valid positive")]
    MissingPositive(usize),
    #[error("invalid contrastive config: {0}")]
    InvalidConfig(String),
    #[error("no tables given")]
    NoTables,
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContrastiveConfig {
    pub tau: f64,
    /// Tables per mini-batch.
    pub batch_size: usize,
    /// Rows per snapshot; `None` means `min(8, m)` per table.
    pub rows_per_snapshot: Option<usize>,
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
    pub normalize: bool,
    pub disjoint: bool,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        Self {
            tau: 0.07,
            batch_size: 8,
            rows_per_snapshot: None,
            steps: 200,
            lr: 1e-3,
            seed: 0,
            normalize: true,
            disjoint: false,
        }
    }
}

impl ContrastiveConfig {
    pub fn validate(&self) -> Result<(), PretrainError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(PretrainError::InvalidConfig(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        if self.batch_size == 0 {
            return Err(PretrainError::InvalidConfig(
                "batch_size must be >= 1".into(),
            ));
        }
        if self.rows_per_snapshot == Some(0) {
            return Err(PretrainError::InvalidConfig(
                "rows_per_snapshot must be >= 1".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(PretrainError::InvalidConfig(format!(
                "lr must be > 0, got {}",
                self.lr
            )));
        }
        Ok(())
    }

    pub fn mode(&self) -> PairMode {
        if self.disjoint {
            PairMode::Disjoint
        } else {
            PairMode::Independent
        }
    }

    /// Snapshot size for a table with `m` rows.
    pub fn rows_for(&self, m: usize) -> usize {
        self.rows_per_snapshot.unwrap_or_else(|| m.min(8))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SnapshotId {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolEntry {
    pub table: usize,
    pub snapshot: SnapshotId,
    pub column: usize,
}

/// Column vectors from both snapshots of every table in a mini-batch.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingPool {
    pub entries: Vec<PoolEntry>,
    /// `[entries.len(), d]`.
    pub vectors: Tensor,
    /// `positives[i]` is the index of entry `i`'s positive.
    pub positives: Vec<usize>,
}

impl EmbeddingPool {
    pub fn new(
        entries: Vec<PoolEntry>,
        vectors: Tensor,
        positives: Vec<usize>,
    ) -> Result<Self, PretrainError> {
        let n = entries.len();
        if vectors.rank() != 2 || vectors.shape()[0] != n {
            return Err(NumericsError::ShapeMismatch {
                op: "embedding_pool",
                lhs: vectors.shape().to_vec(),
                rhs: vec![n],
            }
            .into());
        }
        check_positives(&positives, n)?;
        Ok(Self {
            entries,
            vectors,
            positives,
        })
    }

    /// Pool over column vectors listed per table as `(a, b)` pairs of
    /// `[n_t, d]` tensors; entries are ordered table by table, A before B.
    pub fn from_pairs(pairs: &[(Tensor, Tensor)]) -> Result<Self, PretrainError> {
        let layout = pool_layout(pairs.iter().map(|(a, _)| a.shape()[0]));
        let mut rows = Vec::new();
        for (a, b) in pairs {
            rows.extend(a.data().chunks(a.shape()[1]).map(<[f64]>::to_vec));
            rows.extend(b.data().chunks(b.shape()[1]).map(<[f64]>::to_vec));
        }
        let vectors = Tensor::from_rows(&rows)?;
        Self::new(layout.0, vectors, layout.1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn check_positives(positives: &[usize], n: usize) -> Result<(), PretrainError> {
    if n < 2 {
        return Err(PretrainError::PoolTooSmall(n));
    }
    if positives.len() != n {
        return Err(PretrainError::MissingPositive(positives.len().min(n)));
    }
    for (i, &p) in positives.iter().enumerate() {
        if p >= n || p == i || positives[p] != i {
            return Err(PretrainError::MissingPositive(i));
        }
    }
    Ok(())
}

/// Entries and positives for tables with the given column counts.
fn pool_layout(cols: impl Iterator<Item = usize>) -> (Vec<PoolEntry>, Vec<usize>) {
    let mut entries = Vec::new();
    let mut positives = Vec::new();
    for (t, n) in cols.enumerate() {
        let base = entries.len();
        for (snapshot, offset) in [(SnapshotId::A, n), (SnapshotId::B, 0)] {
            for column in 0..n {
                entries.push(PoolEntry {
                    table: t,
                    snapshot,
                    column,
                });
                positives.push(base + offset + column);
            }
        }
    }
    (entries, positives)
}

/// Mean over rows of `[m, n, d]`, optionally L2-normalized: `[n, d]`.
pub fn pool_columns_var<'t>(e_prime: Var<'t>, normalize: bool) -> Result<Var<'t>, NumericsError> {
    let pooled = e_prime.mean(0)?;
    if normalize {
        pooled.l2_normalize(1)
    } else {
        Ok(pooled)
    }
}

/// One pooled vector per column.
pub fn pool_columns(e_prime: &Tensor, normalize: bool) -> Result<Vec<Vec<f64>>, NumericsError> {
    let tape = Tape::new();
    let out = pool_columns_var(tape.constant(e_prime.clone()), normalize)?.value();
    let d = out.shape()[1];
    Ok(out.data().chunks(d).map(<[f64]>::to_vec).collect())
}

/// InfoNCE over a pool `[N, d]`: mean over entries of
/// `-log(exp(e.e+ / tau) / sum_{e' != e} exp(e.e' / tau))`.
pub fn contrastive_loss_var<'t>(
    vectors: Var<'t>,
    positives: &[usize],
    tau: f64,
) -> Result<Var<'t>, PretrainError> {
    let n = vectors.shape()[0];
    check_positives(positives, n)?;
    let sims = vectors.matmul(vectors.transpose()?)?.scale(1.0 / tau)?;
    Ok(sims.softmax_nll_excluding_self(positives)?)
}

pub fn contrastive_loss(pool: &EmbeddingPool, tau: f64) -> Result<f64, PretrainError> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(PretrainError::InvalidConfig(format!(
            "tau must be > 0, got {tau}"
        )));
    }
    let tape = Tape::new();
    let loss = contrastive_loss_var(tape.constant(pool.vectors.clone()), &pool.positives, tau)?;
    Ok(loss.value().item()?)
}

/// How a table's encoder output becomes per-column vectors.
#[derive(Debug, Clone, Copy)]
pub enum ColumnHead<'a> {
    /// Mean-pool encoder output over rows.
    EncoderPool,
    /// Adapter output averaged over its `k` queries.
    Adapter(&'a AdapterParams),
}

/// Per-column vectors `[n, d]` for cell embeddings `[r, n, d]`.
fn column_vectors<'t>(
    cells: Var<'t>,
    enc: &BoundParams<'t>,
    enc_params: &EncoderParams,
    head: Option<(&BoundParams<'t>, &AdapterParams)>,
    normalize: bool,
) -> Result<Var<'t>, PretrainError> {
    let e_prime = encode_var(cells, enc, &enc_params.config)?;
    match head {
        None => Ok(pool_columns_var(e_prime, normalize)?),
        Some((p, adapter)) => {
            let c = adapt_table_var(e_prime, p, &adapter.config)?.mean(1)?;
            Ok(if normalize { c.l2_normalize(1)? } else { c })
        }
    }
}

/// Cell embeddings of every table, computed once.
fn embed_all(tables: &[Table], phi: &dyn CellEmbedder) -> Vec<Tensor> {
    tables.iter().map(|t| embed_cells(t, phi)).collect()
}

/// Row indices of snapshots A and B.
type SnapshotRows = (Vec<usize>, Vec<usize>);

/// Snapshot row indices for every table in `batch`.
fn sample_batch(
    tables: &[Table],
    batch: &[usize],
    cfg: &ContrastiveConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SnapshotRows>, PretrainError> {
    batch
        .iter()
        .map(|&t| {
            let m = tables[t].n_rows();
            Ok(sample_pair_indices(m, cfg.rows_for(m), rng, cfg.mode())?)
        })
        .collect()
}

/// Mini-batches of table indices: seeded shuffles concatenated epoch after
/// epoch, cut into groups of `batch_size` (smaller only if there are fewer
/// tables than that).
struct BatchStream {
    order: Vec<usize>,
    pos: usize,
    size: usize,
}

impl BatchStream {
    fn new(n_tables: usize, size: usize) -> Self {
        Self {
            order: (0..n_tables).collect(),
            pos: n_tables,
            size: size.min(n_tables),
        }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.size);
        while out.len() < self.size {
            if self.pos == self.order.len() {
                self.order.shuffle(rng);
                self.pos = 0;
            }
            let t = self.order[self.pos];
            self.pos += 1;
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }
}

fn check_inputs(tables: &[Table], cfg: &ContrastiveConfig) -> Result<(), PretrainError> {
    cfg.validate()?;
    if tables.is_empty() {
        return Err(PretrainError::NoTables);
    }
    for t in tables {
        let m = t.n_rows();
        let r = cfg.rows_for(m);
        let needed = if cfg.disjoint { 2 * r } else { r };
        if needed > m {
            return Err(TableError::InvalidSampleSize {
                requested: r,
                available: m,
            }
            .into());
        }
    }
    Ok(())
}

fn training_loop(
    tables: &[Table],
    phi: &dyn CellEmbedder,
    cfg: &ContrastiveConfig,
    enc: &EncoderParams,
    adapter: Option<&AdapterParams>,
) -> Result<(crate::numerics::ParamStore, Vec<f64>), PretrainError> {
    check_inputs(tables, cfg)?;
    let cells = embed_all(tables, phi);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut batches = BatchStream::new(tables.len(), cfg.batch_size);
    let mut trained = match adapter {
        None => enc.store.clone(),
        Some(a) => a.store.clone(),
    };
    let mut adam = Adam::new(AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    });
    let mut losses = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let batch = batches.next(&mut rng);
        let snaps = sample_batch(tables, &batch, cfg, &mut rng)?;
        let tape = Tape::new();
        let (enc_vars, head_vars);
        let head = match adapter {
            None => {
                enc_vars = trained.bind(&tape);
                None
            }
            Some(a) => {
                enc_vars = enc.store.bind_frozen(&tape);
                head_vars = trained.bind(&tape);
                Some((&head_vars, a))
            }
        };
        let mut parts = Vec::with_capacity(2 * batch.len());
        for (&t, (ia, ib)) in batch.iter().zip(&snaps) {
            for rows in [ia, ib] {
                let x = tape.constant(cells[t].index_select(0, rows)?);
                parts.push(column_vectors(x, &enc_vars, enc, head, cfg.normalize)?);
            }
        }
        let pool = tape.concat(&parts, 0)?;
        let (_, positives) = pool_layout(batch.iter().map(|&t| tables[t].n_cols()));
        let loss = contrastive_loss_var(pool, &positives, cfg.tau)?;
        let grads = tape.backward(loss)?;
        let trainable = match head {
            None => &enc_vars,
            Some((p, _)) => p,
        };
        adam.step(&mut trained, &trainable.gradients(&grads))?;
        losses.push(loss.value().item()?);
    }
    Ok((trained, losses))
}

/// Trains the encoder with the contrastive objective. Returns the updated
/// parameters and the per-step loss.
pub fn pretrain(
    tables: &[Table],
    phi: &dyn CellEmbedder,
    cfg: &ContrastiveConfig,
    enc: &EncoderParams,
) -> Result<(EncoderParams, Vec<f64>), PretrainError> {
    let (store, losses) = training_loop(tables, phi, cfg, enc, None)?;
    Ok((
        EncoderParams {
            config: enc.config.clone(),
            store,
        },
        losses,
    ))
}

/// Trains only the adapter, with the encoder frozen, using the same
/// objective on adapter outputs averaged over the `k` queries. This is a
/// stand-in for alignment against a language model.
pub fn train_adapter_proxy(
    tables: &[Table],
    phi: &dyn CellEmbedder,
    cfg: &ContrastiveConfig,
    enc: &EncoderParams,
    adapter: &AdapterParams,
) -> Result<(AdapterParams, Vec<f64>), PretrainError> {
    if adapter.config.d_in != enc.config.d {
        return Err(PretrainError::InvalidConfig(format!(
            "adapter input width {} differs from encoder width {}",
            adapter.config.d_in, enc.config.d
        )));
    }
    let (store, losses) = training_loop(tables, phi, cfg, enc, Some(adapter))?;
    Ok((
        AdapterParams {
            config: adapter.config.clone(),
            store,
        },
        losses,
    ))
}

/// Top-1 cross-snapshot column retrieval accuracy.
///
/// Tables are visited in order in groups of `batch_size`; in each group, two
/// fresh snapshots per table are drawn (seeded by `cfg.seed`) and every
/// snapshot-A column vector is matched to its most cosine-similar snapshot-B
/// vector in the group.
pub fn retrieval_eval(
    tables: &[Table],
    phi: &dyn CellEmbedder,
    enc: &EncoderParams,
    head: ColumnHead<'_>,
    cfg: &ContrastiveConfig,
) -> Result<f64, PretrainError> {
    check_inputs(tables, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut hits = 0usize;
    let mut total = 0usize;
    let all: Vec<usize> = (0..tables.len()).collect();
    for batch in all.chunks(cfg.batch_size) {
        let snaps = sample_batch(tables, batch, cfg, &mut rng)?;
        let mut a_vecs: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        let mut b_vecs: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        for (&t, (ia, ib)) in batch.iter().zip(&snaps) {
            let cells = embed_cells(&tables[t], phi);
            for (rows, out) in [(ia, &mut a_vecs), (ib, &mut b_vecs)] {
                let v = column_vectors_frozen(&cells.index_select(0, rows)?, enc, head)?;
                out.extend(v.into_iter().enumerate().map(|(j, v)| (t, j, v)));
            }
        }
        for (t, j, va) in &a_vecs {
            let best = b_vecs
                .iter()
                .map(|(tb, jb, vb)| (cosine(va, vb), *tb, *jb))
                .fold(None, |acc: Option<(f64, usize, usize)>, c| match acc {
                    Some(a) if a.0 >= c.0 => Some(a),
                    _ => Some(c),
                });
            if let Some((_, tb, jb)) = best {
                hits += usize::from(tb == *t && jb == *j);
            }
            total += 1;
        }
    }
    Ok(if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    })
}

/// Per-column vectors of one table's cell embeddings with frozen weights.
pub fn column_vectors_frozen(
    cells: &Tensor,
    enc: &EncoderParams,
    head: ColumnHead<'_>,
) -> Result<Vec<Vec<f64>>, PretrainError> {
    let tape = Tape::new();
    let enc_vars = enc.store.bind_frozen(&tape);
    let head_vars;
    let head = match head {
        ColumnHead::EncoderPool => None,
        ColumnHead::Adapter(a) => {
            head_vars = a.store.bind_frozen(&tape);
            Some((&head_vars, a))
        }
    };
    let out = column_vectors(tape.constant(cells.clone()), &enc_vars, enc, head, true)?.value();
    let d = out.shape()[1];
    Ok(out.data().chunks(d).map(<[f64]>::to_vec).collect())
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb).max(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderConfig, FeatureHashEmbedder};

    fn pool_of(rows: &[Vec<f64>], positives: Vec<usize>) -> EmbeddingPool {
        let entries = (0..rows.len())
            .map(|i| PoolEntry {
                table: 0,
                snapshot: if i % 2 == 0 {
                    SnapshotId::A
                } else {
                    SnapshotId::B
                },
                column: i / 2,
            })
            .collect();
        EmbeddingPool::new(entries, Tensor::from_rows(rows).unwrap(), positives).unwrap()
    }

    #[test]
    fn two_entry_pool_has_zero_loss() {
        let pool = pool_of(&[vec![0.3, -1.2], vec![2.0, 0.5]], vec![1, 0]);
        assert_eq!(contrastive_loss(&pool, 0.07).unwrap(), 0.0);
    }

    #[test]
    fn orthonormal_pair_closed_form() {
        let pool = pool_of(
            &[
                vec![1.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, 1.0],
            ],
            vec![1, 0, 3, 2],
        );
        let expected = (1.0 + 2.0 / std::f64::consts::E).ln();
        assert!((contrastive_loss(&pool, 1.0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn malformed_pools_rejected() {
        let v = Tensor::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let entries = vec![
            PoolEntry {
                table: 0,
                snapshot: SnapshotId::A,
                column: 0
            };
            3
        ];
        assert!(matches!(
            EmbeddingPool::new(entries.clone(), v.clone(), vec![1, 0, 0]),
            Err(PretrainError::MissingPositive(2))
        ));
        assert!(matches!(
            EmbeddingPool::new(
                entries[..1].to_vec(),
                Tensor::from_rows(&[vec![1.0]]).unwrap(),
                vec![0]
            ),
            Err(PretrainError::PoolTooSmall(1))
        ));
    }

    #[test]
    fn layout_pairs_snapshots() {
        let (entries, pos) = pool_layout([2, 1].into_iter());
        assert_eq!(pos, vec![2, 3, 0, 1, 5, 4]);
        assert_eq!(entries[4].table, 1);
        assert_eq!(entries[5].snapshot, SnapshotId::B);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn pooling_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = Tensor::randn(&[4, 2, 8], 1.0, &mut rng);
        let got = pool_columns(&e, true).unwrap();
        for j in 0..2 {
            let mut mean = [0.0; 8];
            for i in 0..4 {
                for k in 0..8 {
                    mean[k] += e.data()[(i * 2 + j) * 8 + k] / 4.0;
                }
            }
            let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
            for k in 0..8 {
                assert!((got[j][k] - mean[k] / norm).abs() < 1e-12);
            }
        }
    }

    fn tiny_setup() -> (Vec<Table>, FeatureHashEmbedder, EncoderParams) {
        let tables = synthetic::synthetic_corpus(
            synthetic::CorpusSpec {
                tables: 3,
                rows: 6,
                cities_per_table: 3,
            },
            1,
        );
        let cfg = EncoderConfig {
            d: 8,
            layers: 1,
            heads: 2,
            ffn_mult: 1,
            row_first: true,
        };
        let enc = EncoderParams::init(cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        (tables, FeatureHashEmbedder::new(8, 0), enc)
    }

    #[test]
    fn zero_steps_is_identity() {
        let (tables, phi, enc) = tiny_setup();
        let cfg = ContrastiveConfig {
            steps: 0,
            ..ContrastiveConfig::default()
        };
        let (out, losses) = pretrain(&tables, &phi, &cfg, &enc).unwrap();
        assert_eq!(out, enc);
        assert!(losses.is_empty());
    }

    #[test]
    fn training_is_reproducible() {
        let (tables, phi, enc) = tiny_setup();
        let cfg = ContrastiveConfig {
            steps: 3,
            batch_size: 2,
            rows_per_snapshot: Some(3),
            ..ContrastiveConfig::default()
        };
        let (a, la) = pretrain(&tables, &phi, &cfg, &enc).unwrap();
        let (b, lb) = pretrain(&tables, &phi, &cfg, &enc).unwrap();
        assert_eq!(la.len(), 3);
        assert_eq!(
            la.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            lb.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(a, b);
        assert_ne!(a, enc);
    }

    #[test]
    fn identical_snapshots_retrieve_perfectly() {
        let (tables, phi, enc) = tiny_setup();
        let cfg = ContrastiveConfig {
            rows_per_snapshot: Some(6),
            ..ContrastiveConfig::default()
        };
        let acc = retrieval_eval(&tables, &phi, &enc, ColumnHead::EncoderPool, &cfg).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn disjoint_mode_needs_rows() {
        let (tables, phi, enc) = tiny_setup();
        let cfg = ContrastiveConfig {
            rows_per_snapshot: Some(4),
            disjoint: true,
            ..ContrastiveConfig::default()
        };
        assert!(matches!(
            pretrain(&tables, &phi, &cfg, &enc),
            Err(PretrainError::Table(TableError::InvalidSampleSize { .. }))
        ));
        let bad_tau = ContrastiveConfig {
            tau: 0.0,
            ..ContrastiveConfig::default()
        };
        assert!(bad_tau.validate().is_err());
    }

    #[test]
    fn adapter_proxy_zero_steps_and_width_check() {
        let (tables, phi, enc) = tiny_setup();
        let acfg = crate::adapter::AdapterConfig {
            d_in: 8,
            k: 2,
            d_out: 8,
            heads: 2,
            depth: 1,
            ffn_mult: 1,
        };
        let ad = AdapterParams::init(acfg.clone(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let cfg = ContrastiveConfig {
            steps: 0,
            ..ContrastiveConfig::default()
        };
        let (same, _) = train_adapter_proxy(&tables, &phi, &cfg, &enc, &ad).unwrap();
        assert_eq!(same, ad);
        let wide = AdapterParams::init(
            crate::adapter::AdapterConfig { d_in: 16, ..acfg },
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        assert!(train_adapter_proxy(&tables, &phi, &cfg, &enc, &wide).is_err());
    }
}
