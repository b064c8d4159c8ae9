use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Sparse document vector with strictly increasing feature indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SparseVector<F: Scalar> {
    indices: Vec<u32>,
    values: Vec<F>,
}

impl<F: Scalar> SparseVector<F> {
    /// Builds a vector from `(index, value)` pairs in any order.
    ///
    /// Duplicate indices are summed and explicit zeros dropped.
    pub fn from_pairs(mut pairs: Vec<(u32, F)>) -> Self {
        pairs.sort_unstable_by_key(|p| p.0);
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values: Vec<F> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if indices.last() == Some(&i) {
                let last = values.last_mut().expect("parallel vectors");
                *last = *last + v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let mut out = Self { indices, values };
        out.retain_nonzero();
        out
    }

    /// Dense-to-sparse conversion, skipping zeros.
    pub fn from_dense(dense: &[F]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, v)| (i as u32, *v))
            .unzip();
        Self { indices, values }
    }

    fn retain_nonzero(&mut self) {
        if self.values.iter().any(|v| v.is_zero()) {
            let (indices, values) = self
                .indices
                .iter()
                .zip(&self.values)
                .filter(|(_, v)| !v.is_zero())
                .map(|(i, v)| (*i, *v))
                .unzip();
            self.indices = indices;
            self.values = values;
        }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, F)> + '_ {
        self.indices.iter().map(|&i| i as usize).zip(self.values.iter().copied())
    }

    /// Largest index plus one, or 0 when empty.
    pub fn min_dim(&self) -> usize {
        self.indices.last().map_or(0, |&i| i as usize + 1)
    }

    pub fn dot(&self, dense: &[F]) -> F {
        self.iter().map(|(i, v)| dense[i] * v).sum()
    }

    pub fn norm(&self) -> F {
        self.values.iter().map(|&v| v * v).sum::<F>().sqrt()
    }

    pub fn sum(&self) -> F {
        self.values.iter().copied().sum()
    }

    pub fn scale(&mut self, factor: F) {
        for v in &mut self.values {
            *v = *v * factor;
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<F> {
        let mut out = vec![F::zero(); dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn cast<G: Scalar>(&self) -> SparseVector<G> {
        SparseVector {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| G::of(v.as_f64())).collect(),
        }
    }
}
