use indexmap::IndexMap;

use super::tape::{Gradients, Tape, Var};
use super::tensor::Tensor;
use super::NumericsError;

/// Ordered set of named parameter tensors.
///
/// Insertion order is preserved and defines checkpoint layout and optimizer
/// iteration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    entries: IndexMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        self.entries.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.get_mut(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Entries whose name starts with `prefix`.
    pub fn subset(&self, prefix: &str) -> ParamStore {
        ParamStore {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| k.starts_with(prefix))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Copies from `source` every entry named in `self`, requiring equal
    /// shapes. Used to restore a layout from a loaded checkpoint.
    pub fn take_matching(&self, source: &ParamStore) -> Result<ParamStore, NumericsError> {
        let mut out = ParamStore::new();
        for (name, t) in self.iter() {
            let got = source
                .get(name)
                .ok_or_else(|| NumericsError::MissingParam(name.to_string()))?;
            if got.shape() != t.shape() {
                return Err(NumericsError::ShapeMismatch {
                    op: "take_matching",
                    lhs: t.shape().to_vec(),
                    rhs: got.shape().to_vec(),
                });
            }
            out.insert(name, got.clone());
        }
        Ok(out)
    }

    pub fn extend(&mut self, other: ParamStore) {
        self.entries.extend(other.entries);
    }

    /// Records every parameter as a trainable leaf on `tape`.
    pub fn bind<'t>(&self, tape: &'t Tape) -> BoundParams<'t> {
        BoundParams {
            vars: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), tape.leaf(v.clone())))
                .collect(),
        }
    }

    /// Records every parameter as a constant on `tape`.
    pub fn bind_frozen<'t>(&self, tape: &'t Tape) -> BoundParams<'t> {
        BoundParams {
            vars: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), tape.constant(v.clone())))
                .collect(),
        }
    }
}

/// Parameters recorded on a tape, addressable by name.
pub struct BoundParams<'t> {
    vars: IndexMap<String, Var<'t>>,
}

impl<'t> BoundParams<'t> {
    /// Binds already-recorded variables under the given names.
    pub fn from_vars(vars: impl IntoIterator<Item = (String, Var<'t>)>) -> Self {
        Self {
            vars: vars.into_iter().collect(),
        }
    }

    pub fn get(&self, name: &str) -> Result<Var<'t>, NumericsError> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| NumericsError::MissingParam(name.to_string()))
    }

    /// Collects the gradient of every bound parameter.
    pub fn gradients(&self, grads: &Gradients) -> IndexMap<String, Tensor> {
        self.vars
            .iter()
            .map(|(k, v)| (k.clone(), grads.get(*v)))
            .collect()
    }
}
