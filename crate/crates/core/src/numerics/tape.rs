//! Tape-based reverse-mode automatic differentiation over [`Tensor`]s.
//!
//! A [`Tape`] records every operation applied to its [`Var`]s. Node ids are
//! assigned in append order, so the tape is a topological order by
//! construction and [`Tape::backward`] visits it once in reverse.
//!
//! ```
//! use tabenc::numerics::{Tape, Tensor};
//!
//! let tape = Tape::new();
//! let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0]).unwrap());
//! let loss = x.mul(x).unwrap().sum().unwrap();
//! let grads = tape.backward(loss).unwrap();
//! assert_eq!(grads.get(x).data(), &[2.0, 4.0]);
//! ```

use std::cell::RefCell;
use std::rc::Rc;

use super::kernels;
use super::tensor::Tensor;
use super::NumericsError;

type BackwardFn = Box<dyn Fn(&Tensor) -> Vec<Tensor>>;

struct Node {
    value: Rc<Tensor>,
    inputs: Vec<usize>,
    backward: Option<BackwardFn>,
    requires_grad: bool,
}

/// Append-only record of a computation.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var")
            .field("id", &self.id)
            .field("shape", &self.shape())
            .finish()
    }
}

/// Gradients of a scalar with respect to the leaves of a tape.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient for a leaf. Leaves the loss does not depend on get zeros.
    pub fn get(&self, var: Var<'_>) -> Tensor {
        match &self.grads[var.id] {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[var.id]),
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records a trainable input.
    pub fn leaf(&self, value: Tensor) -> Var<'_> {
        self.push_node(value, Vec::new(), None, true)
    }

    /// Records an input that never receives a gradient.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push_node(value, Vec::new(), None, false)
    }

    fn push_node(
        &self,
        value: Tensor,
        inputs: Vec<usize>,
        backward: Option<BackwardFn>,
        requires_grad: bool,
    ) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node {
            value: Rc::new(value),
            inputs,
            backward,
            requires_grad,
        });
        Var { tape: self, id }
    }

    fn record(
        &self,
        op: &'static str,
        value: Tensor,
        inputs: &[Var<'_>],
        backward: impl Fn(&Tensor) -> Vec<Tensor> + 'static,
    ) -> Result<Var<'_>, NumericsError> {
        value.ensure_finite(op)?;
        let requires_grad = {
            let nodes = self.nodes.borrow();
            inputs.iter().any(|v| nodes[v.id].requires_grad)
        };
        let backward: Option<BackwardFn> = if requires_grad {
            Some(Box::new(backward))
        } else {
            None
        };
        Ok(self.push_node(
            value,
            inputs.iter().map(|v| v.id).collect(),
            backward,
            requires_grad,
        ))
    }

    fn value_of(&self, id: usize) -> Rc<Tensor> {
        Rc::clone(&self.nodes.borrow()[id].value)
    }

    /// Concatenates along `axis`.
    pub fn concat<'t>(&'t self, parts: &[Var<'t>], axis: usize) -> Result<Var<'t>, NumericsError> {
        let values: Vec<Rc<Tensor>> = parts.iter().map(|p| p.value()).collect();
        let refs: Vec<&Tensor> = values.iter().map(|v| v.as_ref()).collect();
        let out = kernels::concat(&refs, axis)?;
        let extents: Vec<usize> = values.iter().map(|v| v.shape()[axis]).collect();
        self.record("concat", out, parts, move |g| {
            kernels::split(g, axis, &extents)
        })
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients, NumericsError> {
        if !std::ptr::eq(loss.tape, self) {
            return Err(NumericsError::NoTape);
        }
        let nodes = self.nodes.borrow();
        let root = &nodes[loss.id];
        if root.value.numel() != 1 {
            return Err(NumericsError::NotScalar(root.value.shape().to_vec()));
        }
        let shapes = nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.id] = Some(Tensor::full(root.value.shape(), 1.0));
        for id in (0..=loss.id).rev() {
            let node = &nodes[id];
            let Some(backward) = &node.backward else {
                continue;
            };
            let Some(g) = grads[id].take() else {
                continue;
            };
            let input_grads = backward(&g);
            debug_assert_eq!(input_grads.len(), node.inputs.len());
            for (&input, ig) in node.inputs.iter().zip(input_grads) {
                if !nodes[input].requires_grad {
                    continue;
                }
                match &mut grads[input] {
                    Some(acc) => {
                        for (a, b) in acc.data_mut().iter_mut().zip(ig.data()) {
                            *a += b;
                        }
                    }
                    slot => *slot = Some(ig),
                }
            }
        }
        Ok(Gradients { grads, shapes })
    }
}

#[allow(clippy::should_implement_trait)]
impl<'t> Var<'t> {
    pub fn value(&self) -> Rc<Tensor> {
        self.tape.value_of(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape().to_vec()
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>, NumericsError> {
        let (a, b) = (self.value(), other.value());
        let out = kernels::matmul_t(&a, &b, false, false)?;
        self.tape.record("matmul", out, &[self, other], move |g| {
            let da = kernels::matmul_t(g, &b, false, true).expect("shapes checked in forward");
            let db = kernels::matmul_t(&a, g, true, false).expect("shapes checked in forward");
            vec![
                kernels::reduce_to_shape(&da, a.shape()),
                kernels::reduce_to_shape(&db, b.shape()),
            ]
        })
    }

    pub fn add(self, other: Var<'t>) -> Result<Var<'t>, NumericsError> {
        let (a, b) = (self.value(), other.value());
        let out = kernels::binary_broadcast("add", &a, &b, |x, y| x + y)?;
        let (sa, sb) = (a.shape().to_vec(), b.shape().to_vec());
        self.tape.record("add", out, &[self, other], move |g| {
            vec![
                kernels::reduce_to_shape(g, &sa),
                kernels::reduce_to_shape(g, &sb),
            ]
        })
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>, NumericsError> {
        let (a, b) = (self.value(), other.value());
        let out = kernels::binary_broadcast("sub", &a, &b, |x, y| x - y)?;
        let (sa, sb) = (a.shape().to_vec(), b.shape().to_vec());
        self.tape.record("sub", out, &[self, other], move |g| {
            let neg = kernels::map(g, |v| -v);
            vec![
                kernels::reduce_to_shape(g, &sa),
                kernels::reduce_to_shape(&neg, &sb),
            ]
        })
    }

    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>, NumericsError> {
        let (a, b) = (self.value(), other.value());
        let out = kernels::binary_broadcast("mul", &a, &b, |x, y| x * y)?;
        self.tape.record("mul", out, &[self, other], move |g| {
            let ga =
                kernels::binary_broadcast("mul", g, &b, |x, y| x * y).expect("broadcast checked");
            let gb =
                kernels::binary_broadcast("mul", g, &a, |x, y| x * y).expect("broadcast checked");
            vec![
                kernels::reduce_to_shape(&ga, a.shape()),
                kernels::reduce_to_shape(&gb, b.shape()),
            ]
        })
    }

    pub fn scale(self, factor: f64) -> Result<Var<'t>, NumericsError> {
        let out = kernels::map(&self.value(), |x| x * factor);
        self.tape.record("scale", out, &[self], move |g| {
            vec![kernels::map(g, |v| v * factor)]
        })
    }

    pub fn sum(self) -> Result<Var<'t>, NumericsError> {
        let a = self.value();
        let total = a.data().iter().sum();
        let shape = a.shape().to_vec();
        self.tape
            .record("sum", Tensor::scalar(total), &[self], move |g| {
                vec![Tensor::full(&shape, g.data()[0])]
            })
    }

    /// Mean over `axis`; the axis is removed from the shape.
    pub fn mean(self, axis: usize) -> Result<Var<'t>, NumericsError> {
        let a = self.value();
        let out = kernels::mean_axis(&a, axis)?;
        let shape = a.shape().to_vec();
        self.tape.record("mean", out, &[self], move |g| {
            vec![kernels::mean_axis_backward(g, &shape, axis)]
        })
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Var<'t>, NumericsError> {
        let a = self.value();
        let out = a.reshape(shape)?;
        let orig = a.shape().to_vec();
        self.tape.record("reshape", out, &[self], move |g| {
            vec![g.reshape(&orig).expect("same element count")]
        })
    }

    pub fn permute(self, perm: &[usize]) -> Result<Var<'t>, NumericsError> {
        let out = kernels::permute(&self.value(), perm)?;
        let inv = kernels::inverse_permutation(perm);
        self.tape.record("permute", out, &[self], move |g| {
            vec![kernels::permute(g, &inv).expect("valid inverse")]
        })
    }

    /// Swaps the last two axes.
    pub fn transpose(self) -> Result<Var<'t>, NumericsError> {
        let rank = self.shape().len();
        if rank < 2 {
            return Err(NumericsError::InvalidAxis { axis: 1, rank });
        }
        let mut perm: Vec<usize> = (0..rank).collect();
        perm.swap(rank - 2, rank - 1);
        self.permute(&perm)
    }

    pub fn index_select(self, axis: usize, indices: &[usize]) -> Result<Var<'t>, NumericsError> {
        let a = self.value();
        let out = a.index_select(axis, indices)?;
        let shape = a.shape().to_vec();
        let indices = indices.to_vec();
        self.tape.record("index_select", out, &[self], move |g| {
            let (outer, len, inner) = kernels::axis_split(&shape, axis).expect("axis checked");
            let mut dx = Tensor::zeros(&shape);
            let d = dx.data_mut();
            let gd = g.data();
            let k = indices.len();
            for o in 0..outer {
                for (slot, &i) in indices.iter().enumerate() {
                    let src = (o * k + slot) * inner;
                    let dst = (o * len + i) * inner;
                    for j in 0..inner {
                        d[dst + j] += gd[src + j];
                    }
                }
            }
            vec![dx]
        })
    }

    pub fn softmax(self, axis: usize) -> Result<Var<'t>, NumericsError> {
        let y = Rc::new(kernels::softmax(&self.value(), axis)?);
        let saved = Rc::clone(&y);
        self.tape
            .record("softmax", (*y).clone(), &[self], move |g| {
                vec![kernels::softmax_backward(&saved, g, axis)]
            })
    }

    pub fn layer_norm(
        self,
        gain: Var<'t>,
        bias: Var<'t>,
        axis: usize,
    ) -> Result<Var<'t>, NumericsError> {
        let gv = gain.value();
        let (out, cache) =
            kernels::layer_norm(&self.value(), &gv, &bias.value(), axis, LAYER_NORM_EPS)?;
        self.tape
            .record("layer_norm", out, &[self, gain, bias], move |g| {
                let (dx, dg, db) = kernels::layer_norm_backward(&cache, &gv, g, axis);
                vec![dx, dg, db]
            })
    }

    /// Scales each slice along `axis` to unit L2 norm.
    pub fn l2_normalize(self, axis: usize) -> Result<Var<'t>, NumericsError> {
        let (y, norms) = kernels::l2_normalize(&self.value(), axis)?;
        let saved = y.clone();
        self.tape.record("l2_normalize", y, &[self], move |g| {
            vec![kernels::l2_normalize_backward(&saved, &norms, g, axis)]
        })
    }

    pub fn gelu(self) -> Result<Var<'t>, NumericsError> {
        let a = self.value();
        let out = kernels::map(&a, kernels::gelu);
        self.tape.record("gelu", out, &[self], move |g| {
            let d = a
                .data()
                .iter()
                .zip(g.data())
                .map(|(&x, &gv)| kernels::gelu_grad(x) * gv)
                .collect();
            vec![Tensor::from_parts(a.shape().to_vec(), d)]
        })
    }

    /// Mean negative log-likelihood of `targets` under a row-wise softmax of
    /// the square logit matrix `self`, with each row's diagonal entry excluded
    /// from its normalizer.
    pub fn softmax_nll_excluding_self(self, targets: &[usize]) -> Result<Var<'t>, NumericsError> {
        let logits = self.value();
        let shape = logits.shape().to_vec();
        let n = match shape.as_slice() {
            [a, b] if a == b => *a,
            _ => {
                return Err(NumericsError::ShapeMismatch {
                    op: "softmax_nll_excluding_self",
                    lhs: shape,
                    rhs: vec![targets.len()],
                })
            }
        };
        if n < 2 || targets.len() != n || targets.iter().enumerate().any(|(i, &t)| t >= n || t == i)
        {
            return Err(NumericsError::InvalidTargets);
        }
        let ld = logits.data();
        let mut probs = vec![0.0; n * n];
        let mut total = 0.0;
        for i in 0..n {
            let row = &ld[i * n..(i + 1) * n];
            let max = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(f64::NEG_INFINITY, |m, (_, &v)| m.max(v));
            let mut z = 0.0;
            for (j, &v) in row.iter().enumerate() {
                if j != i {
                    let e = (v - max).exp();
                    probs[i * n + j] = e;
                    z += e;
                }
            }
            for j in 0..n {
                probs[i * n + j] /= z;
            }
            let lse = max + z.ln();
            total += lse - row[targets[i]];
        }
        let loss = total / n as f64;
        let targets = targets.to_vec();
        self.tape.record(
            "softmax_nll_excluding_self",
            Tensor::scalar(loss),
            &[self],
            move |g| {
                let scale = g.data()[0] / n as f64;
                let mut d = probs.clone();
                for (i, &t) in targets.iter().enumerate() {
                    d[i * n + t] -= 1.0;
                }
                for v in &mut d {
                    *v *= scale;
                }
                vec![Tensor::from_parts(vec![n, n], d)]
            },
        )
    }
}

/// Epsilon added to the variance inside layer normalization.
pub const LAYER_NORM_EPS: f64 = 1e-5;
