//! Forward and backward kernels on plain tensors.
//!
//! All reductions run sequentially in index order so results are bitwise
//! reproducible for identical inputs.

use super::tensor::{check_axis, Tensor};
use super::NumericsError;

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Numpy-style broadcast of two shapes, aligned from the right.
pub(crate) fn broadcast_shapes(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i + a.len() >= rank {
            a[i + a.len() - rank]
        } else {
            1
        };
        let db = if i + b.len() >= rank {
            b[i + b.len() - rank]
        } else {
            1
        };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return None,
        };
    }
    Some(out)
}

/// For every flat index of `out`, the flat index of the broadcast source `inp`.
pub(crate) fn broadcast_map(out: &[usize], inp: &[usize]) -> Vec<usize> {
    let rank = out.len();
    let offset = rank - inp.len();
    let in_strides = strides(inp);
    // Effective stride per output axis: zero where the input is broadcast.
    let eff: Vec<usize> = (0..rank)
        .map(|i| {
            if i < offset || inp[i - offset] == 1 {
                0
            } else {
                in_strides[i - offset]
            }
        })
        .collect();
    let total: usize = out.iter().product();
    let mut map = Vec::with_capacity(total);
    let mut idx = vec![0usize; rank];
    let mut pos = 0usize;
    for _ in 0..total {
        map.push(pos);
        for ax in (0..rank).rev() {
            idx[ax] += 1;
            pos += eff[ax];
            if idx[ax] < out[ax] {
                break;
            }
            pos -= eff[ax] * idx[ax];
            idx[ax] = 0;
        }
    }
    map
}

/// Sums a broadcast gradient back down to `shape`.
pub(crate) fn reduce_to_shape(grad: &Tensor, shape: &[usize]) -> Tensor {
    if grad.shape() == shape {
        return grad.clone();
    }
    let map = broadcast_map(grad.shape(), shape);
    let mut out = Tensor::zeros(shape);
    let od = out.data_mut();
    for (g, &m) in grad.data().iter().zip(&map) {
        od[m] += g;
    }
    out
}

pub(crate) fn binary_broadcast(
    op: &'static str,
    a: &Tensor,
    b: &Tensor,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Tensor, NumericsError> {
    if a.shape() == b.shape() {
        let data = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        return Ok(Tensor::from_parts(a.shape().to_vec(), data));
    }
    let out =
        broadcast_shapes(a.shape(), b.shape()).ok_or_else(|| NumericsError::ShapeMismatch {
            op,
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        })?;
    let ma = broadcast_map(&out, a.shape());
    let mb = broadcast_map(&out, b.shape());
    let (ad, bd) = (a.data(), b.data());
    let data = ma.iter().zip(&mb).map(|(&i, &j)| f(ad[i], bd[j])).collect();
    Ok(Tensor::from_parts(out, data))
}

pub(crate) fn map(a: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_parts(a.shape().to_vec(), a.data().iter().map(|&x| f(x)).collect())
}

/// Batched matrix product over the last two axes, optionally transposing
/// either operand's matrix part. Batch axes broadcast.
pub(crate) fn matmul_t(
    a: &Tensor,
    b: &Tensor,
    trans_a: bool,
    trans_b: bool,
) -> Result<Tensor, NumericsError> {
    let mismatch = || NumericsError::ShapeMismatch {
        op: "matmul",
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    };
    if a.rank() < 2 || b.rank() < 2 {
        return Err(mismatch());
    }
    let (ra, rb) = (a.rank(), b.rank());
    let (a0, a1) = (a.shape()[ra - 2], a.shape()[ra - 1]);
    let (b0, b1) = (b.shape()[rb - 2], b.shape()[rb - 1]);
    let (p, q) = if trans_a { (a1, a0) } else { (a0, a1) };
    let (q2, r) = if trans_b { (b1, b0) } else { (b0, b1) };
    if q != q2 {
        return Err(mismatch());
    }
    let batch_a = &a.shape()[..ra - 2];
    let batch_b = &b.shape()[..rb - 2];
    let batch = broadcast_shapes(batch_a, batch_b).ok_or_else(mismatch)?;
    let map_a = broadcast_map(&batch, batch_a);
    let map_b = broadcast_map(&batch, batch_b);
    let nb = map_a.len();
    let mut out = vec![0.0; nb * p * r];
    let (ad, bd) = (a.data(), b.data());
    for bi in 0..nb {
        let ao = map_a[bi] * p * q;
        let bo = map_b[bi] * q * r;
        let am = &ad[ao..ao + p * q];
        let bm = &bd[bo..bo + q * r];
        let om = &mut out[bi * p * r..(bi + 1) * p * r];
        let a_at = |i: usize, k: usize| {
            if trans_a {
                am[k * p + i]
            } else {
                am[i * q + k]
            }
        };
        if trans_b {
            // b stored as (r, q): dot products along contiguous rows.
            for i in 0..p {
                for j in 0..r {
                    let brow = &bm[j * q..(j + 1) * q];
                    let mut acc = 0.0;
                    for (k, &bv) in brow.iter().enumerate() {
                        acc += a_at(i, k) * bv;
                    }
                    om[i * r + j] = acc;
                }
            }
        } else {
            for i in 0..p {
                let orow = &mut om[i * r..(i + 1) * r];
                for k in 0..q {
                    let av = a_at(i, k);
                    let brow = &bm[k * r..(k + 1) * r];
                    for (o, &bv) in orow.iter_mut().zip(brow) {
                        *o += av * bv;
                    }
                }
            }
        }
    }
    let mut shape = batch;
    shape.push(p);
    shape.push(r);
    Ok(Tensor::from_parts(shape, out))
}

pub(crate) fn permute(a: &Tensor, perm: &[usize]) -> Result<Tensor, NumericsError> {
    let rank = a.rank();
    let mut seen = vec![false; rank];
    if perm.len() != rank
        || perm
            .iter()
            .any(|&p| p >= rank || std::mem::replace(&mut seen[p], true))
    {
        return Err(NumericsError::InvalidPermutation(perm.to_vec()));
    }
    let in_strides = strides(a.shape());
    let out_shape: Vec<usize> = perm.iter().map(|&p| a.shape()[p]).collect();
    let eff: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let total = a.numel();
    let ad = a.data();
    let mut data = Vec::with_capacity(total);
    let mut idx = vec![0usize; rank];
    let mut pos = 0usize;
    for _ in 0..total {
        data.push(ad[pos]);
        for ax in (0..rank).rev() {
            idx[ax] += 1;
            pos += eff[ax];
            if idx[ax] < out_shape[ax] {
                break;
            }
            pos -= eff[ax] * idx[ax];
            idx[ax] = 0;
        }
    }
    Ok(Tensor::from_parts(out_shape, data))
}

pub(crate) fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// (outer, len, inner) decomposition of a shape around `axis`.
pub(crate) fn axis_split(
    shape: &[usize],
    axis: usize,
) -> Result<(usize, usize, usize), NumericsError> {
    check_axis(axis, shape.len())?;
    Ok((
        shape[..axis].iter().product(),
        shape[axis],
        shape[axis + 1..].iter().product(),
    ))
}

pub(crate) fn softmax(a: &Tensor, axis: usize) -> Result<Tensor, NumericsError> {
    let (outer, len, inner) = axis_split(a.shape(), axis)?;
    let ad = a.data();
    let mut out = vec![0.0; a.numel()];
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| (o * len + k) * inner + i;
            let mut max = f64::NEG_INFINITY;
            for k in 0..len {
                max = max.max(ad[at(k)]);
            }
            let mut sum = 0.0;
            for k in 0..len {
                let e = (ad[at(k)] - max).exp();
                out[at(k)] = e;
                sum += e;
            }
            for k in 0..len {
                out[at(k)] /= sum;
            }
        }
    }
    Ok(Tensor::from_parts(a.shape().to_vec(), out))
}

pub(crate) fn softmax_backward(y: &Tensor, dy: &Tensor, axis: usize) -> Tensor {
    let (outer, len, inner) = axis_split(y.shape(), axis).expect("axis checked in forward");
    let (yd, gd) = (y.data(), dy.data());
    let mut dx = vec![0.0; y.numel()];
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| (o * len + k) * inner + i;
            let mut dot = 0.0;
            for k in 0..len {
                dot += yd[at(k)] * gd[at(k)];
            }
            for k in 0..len {
                dx[at(k)] = yd[at(k)] * (gd[at(k)] - dot);
            }
        }
    }
    Tensor::from_parts(y.shape().to_vec(), dx)
}

/// Saved statistics from a layer-norm forward pass.
pub(crate) struct NormCache {
    pub xhat: Tensor,
    pub inv_std: Vec<f64>,
}

pub(crate) fn layer_norm(
    x: &Tensor,
    gain: &Tensor,
    bias: &Tensor,
    axis: usize,
    eps: f64,
) -> Result<(Tensor, NormCache), NumericsError> {
    let (outer, len, inner) = axis_split(x.shape(), axis)?;
    if gain.shape() != [len] || bias.shape() != [len] {
        return Err(NumericsError::ShapeMismatch {
            op: "layer_norm",
            lhs: x.shape().to_vec(),
            rhs: gain.shape().to_vec(),
        });
    }
    let xd = x.data();
    let (g, b) = (gain.data(), bias.data());
    let mut xhat = vec![0.0; x.numel()];
    let mut out = vec![0.0; x.numel()];
    let mut inv_std = Vec::with_capacity(outer * inner);
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| (o * len + k) * inner + i;
            let mut mean = 0.0;
            for k in 0..len {
                mean += xd[at(k)];
            }
            mean /= len as f64;
            let mut var = 0.0;
            for k in 0..len {
                let c = xd[at(k)] - mean;
                var += c * c;
            }
            var /= len as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std.push(is);
            for k in 0..len {
                let h = (xd[at(k)] - mean) * is;
                xhat[at(k)] = h;
                out[at(k)] = h * g[k] + b[k];
            }
        }
    }
    let shape = x.shape().to_vec();
    Ok((
        Tensor::from_parts(shape.clone(), out),
        NormCache {
            xhat: Tensor::from_parts(shape, xhat),
            inv_std,
        },
    ))
}

/// Returns (dx, dgain, dbias).
pub(crate) fn layer_norm_backward(
    cache: &NormCache,
    gain: &Tensor,
    dy: &Tensor,
    axis: usize,
) -> (Tensor, Tensor, Tensor) {
    let shape = cache.xhat.shape();
    let (outer, len, inner) = axis_split(shape, axis).expect("axis checked in forward");
    let (hd, gd, g) = (cache.xhat.data(), dy.data(), gain.data());
    let mut dx = vec![0.0; cache.xhat.numel()];
    let mut dgain = vec![0.0; len];
    let mut dbias = vec![0.0; len];
    let n = len as f64;
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| (o * len + k) * inner + i;
            let is = cache.inv_std[o * inner + i];
            let mut mean_dh = 0.0;
            let mut mean_dh_h = 0.0;
            for k in 0..len {
                let dh = gd[at(k)] * g[k];
                mean_dh += dh;
                mean_dh_h += dh * hd[at(k)];
                dgain[k] += gd[at(k)] * hd[at(k)];
                dbias[k] += gd[at(k)];
            }
            mean_dh /= n;
            mean_dh_h /= n;
            for k in 0..len {
                let dh = gd[at(k)] * g[k];
                dx[at(k)] = is * (dh - mean_dh - hd[at(k)] * mean_dh_h);
            }
        }
    }
    (
        Tensor::from_parts(shape.to_vec(), dx),
        Tensor::from_parts(vec![len], dgain),
        Tensor::from_parts(vec![len], dbias),
    )
}

/// Mean over `axis`, removing it from the shape.
pub(crate) fn mean_axis(a: &Tensor, axis: usize) -> Result<Tensor, NumericsError> {
    let (outer, len, inner) = axis_split(a.shape(), axis)?;
    let ad = a.data();
    let mut out = vec![0.0; outer * inner];
    for o in 0..outer {
        for i in 0..inner {
            let mut s = 0.0;
            for k in 0..len {
                s += ad[(o * len + k) * inner + i];
            }
            out[o * inner + i] = s / len as f64;
        }
    }
    let mut shape = a.shape().to_vec();
    shape.remove(axis);
    Ok(Tensor::from_parts(shape, out))
}

pub(crate) fn mean_axis_backward(dy: &Tensor, in_shape: &[usize], axis: usize) -> Tensor {
    let (outer, len, inner) = axis_split(in_shape, axis).expect("axis checked in forward");
    let gd = dy.data();
    let mut dx = vec![0.0; outer * len * inner];
    for o in 0..outer {
        for k in 0..len {
            for i in 0..inner {
                dx[(o * len + k) * inner + i] = gd[o * inner + i] / len as f64;
            }
        }
    }
    Tensor::from_parts(in_shape.to_vec(), dx)
}

/// Floor on the norm when normalizing; zero vectors map to zero.
pub(crate) const NORM_FLOOR: f64 = 1e-12;

pub(crate) fn l2_normalize(a: &Tensor, axis: usize) -> Result<(Tensor, Vec<f64>), NumericsError> {
    let (outer, len, inner) = axis_split(a.shape(), axis)?;
    let ad = a.data();
    let mut out = vec![0.0; a.numel()];
    let mut norms = Vec::with_capacity(outer * inner);
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| (o * len + k) * inner + i;
            let mut ss = 0.0;
            for k in 0..len {
                ss += ad[at(k)] * ad[at(k)];
            }
            let norm = ss.sqrt().max(NORM_FLOOR);
            norms.push(norm);
            for k in 0..len {
                out[at(k)] = ad[at(k)] / norm;
            }
        }
    }
    Ok((Tensor::from_parts(a.shape().to_vec(), out), norms))
}

pub(crate) fn l2_normalize_backward(y: &Tensor, norms: &[f64], dy: &Tensor, axis: usize) -> Tensor {
    let (outer, len, inner) = axis_split(y.shape(), axis).expect("axis checked in forward");
    let (yd, gd) = (y.data(), dy.data());
    let mut dx = vec![0.0; y.numel()];
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| (o * len + k) * inner + i;
            let norm = norms[o * inner + i];
            if norm <= NORM_FLOOR {
                for k in 0..len {
                    dx[at(k)] = gd[at(k)] / norm;
                }
                continue;
            }
            let mut dot = 0.0;
            for k in 0..len {
                dot += yd[at(k)] * gd[at(k)];
            }
            for k in 0..len {
                dx[at(k)] = (gd[at(k)] - yd[at(k)] * dot) / norm;
            }
        }
    }
    Tensor::from_parts(y.shape().to_vec(), dx)
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

pub(crate) fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

pub(crate) fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    let du = GELU_C * (1.0 + 3.0 * 0.044715 * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
}

pub(crate) fn concat(parts: &[&Tensor], axis: usize) -> Result<Tensor, NumericsError> {
    let first = parts.first().ok_or(NumericsError::EmptyConcat)?;
    let rank = first.rank();
    check_axis(axis, rank)?;
    for p in parts {
        let same =
            p.rank() == rank && (0..rank).all(|i| i == axis || p.shape()[i] == first.shape()[i]);
        if !same {
            return Err(NumericsError::ShapeMismatch {
                op: "concat",
                lhs: first.shape().to_vec(),
                rhs: p.shape().to_vec(),
            });
        }
    }
    let outer: usize = first.shape()[..axis].iter().product();
    let inner: usize = first.shape()[axis + 1..].iter().product();
    let total_len: usize = parts.iter().map(|p| p.shape()[axis]).sum();
    let mut data = Vec::with_capacity(outer * total_len * inner);
    for o in 0..outer {
        for p in parts {
            let block = p.shape()[axis] * inner;
            data.extend_from_slice(&p.data()[o * block..(o + 1) * block]);
        }
    }
    let mut shape = first.shape().to_vec();
    shape[axis] = total_len;
    Ok(Tensor::from_parts(shape, data))
}

/// Splits `grad` along `axis` into pieces with the given extents.
pub(crate) fn split(grad: &Tensor, axis: usize, extents: &[usize]) -> Vec<Tensor> {
    let shape = grad.shape();
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let total = shape[axis];
    let gd = grad.data();
    let mut start = 0;
    extents
        .iter()
        .map(|&len| {
            let mut data = Vec::with_capacity(outer * len * inner);
            for o in 0..outer {
                let base = (o * total + start) * inner;
                data.extend_from_slice(&gd[base..base + len * inner]);
            }
            start += len;
            let mut s = shape.to_vec();
            s[axis] = len;
            Tensor::from_parts(s, data)
        })
        .collect()
}
