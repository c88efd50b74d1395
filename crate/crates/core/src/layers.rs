//! Shared transformer building blocks addressed by parameter-name prefix.

use rand::Rng;

use crate::numerics::{BoundParams, NumericsError, ParamStore, Tensor, Var};

pub(crate) fn init_linear<R: Rng + ?Sized>(
    store: &mut ParamStore,
    prefix: &str,
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) {
    let std = 1.0 / (fan_in as f64).sqrt();
    store.insert(
        format!("{prefix}.weight"),
        Tensor::randn(&[fan_in, fan_out], std, rng),
    );
    store.insert(format!("{prefix}.bias"), Tensor::zeros(&[fan_out]));
}

pub(crate) fn init_norm(store: &mut ParamStore, prefix: &str, dim: usize) {
    store.insert(format!("{prefix}.gain"), Tensor::full(&[dim], 1.0));
    store.insert(format!("{prefix}.bias"), Tensor::zeros(&[dim]));
}

pub(crate) fn linear<'t>(
    x: Var<'t>,
    p: &BoundParams<'t>,
    prefix: &str,
) -> Result<Var<'t>, NumericsError> {
    x.matmul(p.get(&format!("{prefix}.weight"))?)?
        .add(p.get(&format!("{prefix}.bias"))?)
}

/// Layer norm over the last axis.
pub(crate) fn norm<'t>(
    x: Var<'t>,
    p: &BoundParams<'t>,
    prefix: &str,
) -> Result<Var<'t>, NumericsError> {
    let axis = x.shape().len() - 1;
    x.layer_norm(
        p.get(&format!("{prefix}.gain"))?,
        p.get(&format!("{prefix}.bias"))?,
        axis,
    )
}

pub(crate) fn init_ffn<R: Rng + ?Sized>(
    store: &mut ParamStore,
    prefix: &str,
    dim: usize,
    hidden: usize,
    rng: &mut R,
) {
    init_linear(store, &format!("{prefix}.up"), dim, hidden, rng);
    init_linear(store, &format!("{prefix}.down"), hidden, dim, rng);
}

pub(crate) fn ffn<'t>(
    x: Var<'t>,
    p: &BoundParams<'t>,
    prefix: &str,
) -> Result<Var<'t>, NumericsError> {
    let h = linear(x, p, &format!("{prefix}.up"))?.gelu()?;
    linear(h, p, &format!("{prefix}.down"))
}

pub(crate) fn init_self_attention<R: Rng + ?Sized>(
    store: &mut ParamStore,
    prefix: &str,
    dim: usize,
    rng: &mut R,
) {
    init_attention(store, prefix, dim, dim, dim, rng);
}

/// Projections for queries of width `d_q` attending over keys/values of
/// width `d_kv`, with model width `d_model`.
pub(crate) fn init_attention<R: Rng + ?Sized>(
    store: &mut ParamStore,
    prefix: &str,
    d_q: usize,
    d_kv: usize,
    d_model: usize,
    rng: &mut R,
) {
    init_linear(store, &format!("{prefix}.query"), d_q, d_model, rng);
    init_linear(store, &format!("{prefix}.key"), d_kv, d_model, rng);
    init_linear(store, &format!("{prefix}.value"), d_kv, d_model, rng);
    init_linear(store, &format!("{prefix}.output"), d_model, d_model, rng);
}

/// Splits the last axis into heads: `[B, T, h*dh] -> [B, h, T, dh]`.
fn split_heads<'t>(x: Var<'t>, heads: usize) -> Result<Var<'t>, NumericsError> {
    let s = x.shape();
    let (b, t, d) = (s[0], s[1], s[2]);
    x.reshape(&[b, t, heads, d / heads])?.permute(&[0, 2, 1, 3])
}

fn merge_heads<'t>(x: Var<'t>) -> Result<Var<'t>, NumericsError> {
    let s = x.shape();
    let (b, h, t, dh) = (s[0], s[1], s[2], s[3]);
    x.permute(&[0, 2, 1, 3])?.reshape(&[b, t, h * dh])
}

/// Bidirectional multi-head self-attention over axis 1 of `[B, T, d]`,
/// each batch entry independently. No positional information is used.
pub(crate) fn self_attention<'t>(
    x: Var<'t>,
    p: &BoundParams<'t>,
    prefix: &str,
    heads: usize,
) -> Result<Var<'t>, NumericsError> {
    attention(x, x, p, prefix, heads)
}

/// Multi-head attention of queries `[Bq, Tq, d_q]` over keys/values
/// `[B, Tk, d_kv]`; a query batch of 1 is shared across all `B`.
pub(crate) fn attention<'t>(
    q_in: Var<'t>,
    kv_in: Var<'t>,
    p: &BoundParams<'t>,
    prefix: &str,
    heads: usize,
) -> Result<Var<'t>, NumericsError> {
    let q = linear(q_in, p, &format!("{prefix}.query"))?;
    let d = q.shape()[2];
    let q = split_heads(q, heads)?;
    let k = split_heads(linear(kv_in, p, &format!("{prefix}.key"))?, heads)?;
    let v = split_heads(linear(kv_in, p, &format!("{prefix}.value"))?, heads)?;
    let scale = 1.0 / ((d / heads) as f64).sqrt();
    let weights = q.matmul(k.transpose()?)?.scale(scale)?.softmax(3)?;
    let ctx = merge_heads(weights.matmul(v)?)?;
    linear(ctx, p, &format!("{prefix}.output"))
}
