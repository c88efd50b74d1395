//! Finite-difference checks of every differentiable operation and of the
//! composed encoder, adapter and contrastive-loss graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adapter::{adapt_table_var, AdapterConfig, AdapterParams};
use crate::encoder::{embed_cells, encode_var, EncoderConfig, EncoderParams, FeatureHashEmbedder};
use crate::numerics::gradcheck::{check_gradients, GradCheckReport};
use crate::numerics::{BoundParams, NumericsError, ParamStore, Tape, Tensor, Var};
use crate::pretrain::{contrastive_loss_var, pool_columns_var};
use crate::table::Table;

/// Largest accepted relative error.
pub const TOLERANCE: f64 = 1e-4;

fn randn(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::randn(shape, 1.0, rng)
}

/// `sum(v * w)` for a fixed random `w`, so every output element matters.
fn head<'t>(v: Var<'t>, w: &Tensor) -> Result<Var<'t>, NumericsError> {
    v.mul(v.tape().constant(w.clone()))?.sum()
}

fn weights_for(shape: &[usize], seed: u64) -> Tensor {
    Tensor::randn(shape, 1.0, &mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed))
}

/// Checks `f` with a random projection head on its (non-scalar) output.
fn check_op<F>(
    name: &str,
    inputs: Vec<Tensor>,
    out_shape: &[usize],
    seed: u64,
    f: F,
) -> Result<GradCheckReport, NumericsError>
where
    F: for<'t> Fn(&[Var<'t>]) -> Result<Var<'t>, NumericsError>,
{
    let w = weights_for(out_shape, seed);
    check_gradients(name, &inputs, TOLERANCE, |_, xs| head(f(xs)?, &w))
}

/// Checks `f` jointly in its data inputs and every tensor of `store`.
fn check_with_params<F>(
    name: &str,
    data: Vec<Tensor>,
    store: &ParamStore,
    f: F,
) -> Result<GradCheckReport, NumericsError>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>], &BoundParams<'t>) -> Result<Var<'t>, NumericsError>,
{
    let names: Vec<String> = store.iter().map(|(n, _)| n.to_string()).collect();
    let n_data = data.len();
    let mut inputs = data;
    inputs.extend(store.iter().map(|(_, t)| t.clone()));
    check_gradients(name, &inputs, TOLERANCE, |tape, xs| {
        let params =
            BoundParams::from_vars(names.iter().cloned().zip(xs[n_data..].iter().copied()));
        f(tape, &xs[..n_data], &params)
    })
}

fn numerics_err(e: impl std::fmt::Display) -> NumericsError {
    NumericsError::Model(e.to_string())
}

/// Runs every check on shapes drawn from `seed` (m <= 4, n <= 5, d = 8,
/// k <= 2, d' = 16).
pub fn gradient_suite(seed: u64) -> Result<Vec<GradCheckReport>, NumericsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=4);
    let n = rng.random_range(2..=5);
    let (d, k, dp) = (8, rng.random_range(1..=2), 16);
    let mut out = Vec::new();

    let (a, b) = (randn(&[m, d], &mut rng), randn(&[d, n], &mut rng));
    out.push(check_op("matmul", vec![a, b], &[m, n], seed, |x| {
        x[0].matmul(x[1])
    })?);
    let (a, b) = (randn(&[2, m, d], &mut rng), randn(&[d, n], &mut rng));
    out.push(check_op(
        "matmul_broadcast",
        vec![a, b],
        &[2, m, n],
        seed,
        |x| x[0].matmul(x[1]),
    )?);
    let (a, b) = (randn(&[m, n, d], &mut rng), randn(&[d], &mut rng));
    out.push(check_op(
        "add_broadcast",
        vec![a.clone(), b.clone()],
        &[m, n, d],
        seed,
        |x| x[0].add(x[1]),
    )?);
    out.push(check_op(
        "sub_broadcast",
        vec![a.clone(), b.clone()],
        &[m, n, d],
        seed,
        |x| x[0].sub(x[1]),
    )?);
    out.push(check_op(
        "mul_broadcast",
        vec![a.clone(), b],
        &[m, n, d],
        seed,
        |x| x[0].mul(x[1]),
    )?);
    out.push(check_op("scale", vec![a.clone()], &[m, n, d], seed, |x| {
        x[0].scale(-0.7)
    })?);
    out.push(check_gradients(
        "sum",
        std::slice::from_ref(&a),
        TOLERANCE,
        |_, x| x[0].mul(x[0])?.sum(),
    )?);
    out.push(check_op("mean", vec![a.clone()], &[n, d], seed, |x| {
        x[0].mean(0)
    })?);
    out.push(check_op(
        "reshape",
        vec![a.clone()],
        &[n, m * d],
        seed,
        |x| x[0].reshape(&[n, m * d]),
    )?);
    out.push(check_op(
        "permute",
        vec![a.clone()],
        &[d, m, n],
        seed,
        |x| x[0].permute(&[2, 0, 1]),
    )?);
    out.push(check_op(
        "transpose",
        vec![a.clone()],
        &[m, d, n],
        seed,
        |x| x[0].transpose(),
    )?);
    out.push(check_op(
        "index_select",
        vec![a.clone()],
        &[3, n, d],
        seed,
        |x| x[0].index_select(0, &[0, m - 1, 0]),
    )?);
    let c = randn(&[m, 2, d], &mut rng);
    out.push(check_op(
        "concat",
        vec![a.clone(), c],
        &[m, n + 2, d],
        seed,
        |x| x[0].tape().concat(&[x[0], x[1]], 1),
    )?);
    out.push(check_op(
        "softmax",
        vec![a.clone()],
        &[m, n, d],
        seed,
        |x| x[0].softmax(1),
    )?);
    let (g, bias) = (randn(&[d], &mut rng), randn(&[d], &mut rng));
    out.push(check_op(
        "layer_norm",
        vec![a.clone(), g, bias],
        &[m, n, d],
        seed,
        |x| x[0].layer_norm(x[1], x[2], 2),
    )?);
    out.push(check_op(
        "l2_normalize",
        vec![a.clone()],
        &[m, n, d],
        seed,
        |x| x[0].l2_normalize(2),
    )?);
    out.push(check_op("gelu", vec![a], &[m, n, d], seed, |x| {
        x[0].gelu()
    })?);
    let logits = randn(&[2 * n, 2 * n], &mut rng);
    let targets: Vec<usize> = (0..2 * n).map(|i| i ^ 1).collect();
    out.push(check_gradients(
        "softmax_nll_excluding_self",
        &[logits],
        TOLERANCE,
        |_, x| x[0].softmax_nll_excluding_self(&targets),
    )?);

    let enc_cfg = EncoderConfig {
        d,
        layers: 1,
        heads: 2,
        ffn_mult: 2,
        row_first: true,
    };
    for row_first in [true, false] {
        let cfg = EncoderConfig {
            row_first,
            ..enc_cfg.clone()
        };
        let enc = EncoderParams::init(cfg.clone(), &mut rng).map_err(numerics_err)?;
        let e = randn(&[m, n, d], &mut rng);
        let w = weights_for(&[m, n, d], seed);
        let name = if row_first {
            "encoder"
        } else {
            "encoder_column_first"
        };
        out.push(check_with_params(name, vec![e], &enc.store, |_, x, p| {
            head(encode_var(x[0], p, &cfg).map_err(numerics_err)?, &w)
        })?);
    }

    let ad_cfg = AdapterConfig {
        d_in: d,
        k,
        d_out: dp,
        heads: 2,
        depth: 1,
        ffn_mult: 2,
    };
    let adapter = AdapterParams::init(ad_cfg.clone(), &mut rng).map_err(numerics_err)?;
    let e = randn(&[m, n, d], &mut rng);
    let w = weights_for(&[n, k, dp], seed);
    out.push(check_with_params(
        "adapter",
        vec![e],
        &adapter.store,
        |_, x, p| head(adapt_table_var(x[0], p, &ad_cfg).map_err(numerics_err)?, &w),
    )?);

    let pool = randn(&[2 * n, d], &mut rng);
    out.push(check_gradients(
        "contrastive_loss",
        &[pool],
        TOLERANCE,
        |_, x| contrastive_loss_var(x[0].l2_normalize(1)?, &targets, 0.5).map_err(numerics_err),
    )?);

    // Whole pretraining objective for one table, in the encoder weights.
    let enc = EncoderParams::init(enc_cfg.clone(), &mut rng).map_err(numerics_err)?;
    let rows: Vec<Vec<String>> = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| format!("v{}", rng.random_range(0..100) + 100 * (i + j)))
                .collect()
        })
        .collect();
    let headers: Vec<String> = (0..n).map(|j| format!("c{j}")).collect();
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let row_refs: Vec<Vec<&str>> = rows
        .iter()
        .map(|r| r.iter().map(String::as_str).collect())
        .collect();
    let table = Table::from_text("t", &header_refs, &row_refs).map_err(numerics_err)?;
    let cells = embed_cells(&table, &FeatureHashEmbedder::new(d, seed));
    let a_rows: Vec<usize> = (0..m).collect();
    let b_rows: Vec<usize> = (0..m).rev().chain([0]).collect();
    let positives: Vec<usize> = (0..2 * n).map(|i| (i + n) % (2 * n)).collect();
    out.push(check_with_params(
        "pretrain_objective",
        vec![],
        &enc.store,
        |tape, _, p| {
            let mut parts = Vec::new();
            for rows in [&a_rows, &b_rows] {
                let x = tape.constant(cells.index_select(0, rows)?);
                let e_prime = encode_var(x, p, &enc_cfg).map_err(numerics_err)?;
                parts.push(pool_columns_var(e_prime, true)?);
            }
            contrastive_loss_var(tape.concat(&parts, 0)?, &positives, 0.07).map_err(numerics_err)
        },
    )?);
    Ok(out)
}
