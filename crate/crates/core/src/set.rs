//! Ordered vertex subsets and probability vectors supported on them.

use std::sync::OnceLock;

use crate::error::{validation, Error, Result};

/// An ordered subset of `0..n` with O(1) membership.
#[derive(Clone, Debug)]
pub struct VertexSet {
    n: usize,
    indices: Vec<usize>,
    mask: Vec<bool>,
    complement: OnceLock<Vec<usize>>,
}

impl PartialEq for VertexSet {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.indices == other.indices
    }
}

impl Eq for VertexSet {}

impl VertexSet {
    /// Builds a set from arbitrary-order indices. Duplicates and
    /// out-of-range indices are rejected.
    pub fn new(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(validation(format!(
                "duplicate index {} in vertex set",
                w[0]
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(validation(format!(
                    "index {last} out of range for {n} states"
                )));
            }
        }
        let mut mask = vec![false; n];
        for &i in &indices {
            mask[i] = true;
        }
        Ok(Self {
            n,
            indices,
            mask,
            complement: OnceLock::new(),
        })
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let indices = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect();
        Self {
            n: mask.len(),
            indices,
            mask,
            complement: OnceLock::new(),
        }
    }

    pub fn singleton(n: usize, x: usize) -> Result<Self> {
        Self::new(n, [x])
    }

    pub fn full(n: usize) -> Self {
        Self::from_mask(vec![true; n])
    }

    pub fn empty(n: usize) -> Self {
        Self::from_mask(vec![false; n])
    }

    /// Size of the ambient state space.
    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.n
    }

    pub fn contains(&self, x: usize) -> bool {
        self.mask.get(x).copied().unwrap_or(false)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    /// States outside the set, increasing.
    pub fn complement(&self) -> &[usize] {
        self.complement.get_or_init(|| {
            self.mask
                .iter()
                .enumerate()
                .filter_map(|(i, &m)| (!m).then_some(i))
                .collect()
        })
    }

    pub fn is_subset_of(&self, other: &VertexSet) -> bool {
        self.n == other.n && self.iter().all(|x| other.contains(x))
    }

    /// `self \ other`.
    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        let mask = (0..self.n)
            .map(|i| self.mask[i] && !other.contains(i))
            .collect();
        Self::from_mask(mask)
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let mask = (0..self.n)
            .map(|i| self.mask[i] || other.contains(i))
            .collect();
        Self::from_mask(mask)
    }

    pub fn with(&self, x: usize) -> VertexSet {
        let mut mask = self.mask.clone();
        mask[x] = true;
        Self::from_mask(mask)
    }

    /// Total mass of the set under `weights`, summed in index order.
    pub fn mass(&self, weights: &[f64]) -> f64 {
        self.indices.iter().map(|&i| weights[i]).sum()
    }

    pub(crate) fn require_nonempty(&self, what: &str) -> Result<()> {
        if self.is_empty() {
            Err(validation(format!("{what} must be nonempty")))
        } else {
            Ok(())
        }
    }

    pub(crate) fn require_universe(&self, n: usize) -> Result<()> {
        if self.n != n {
            Err(validation(format!(
                "vertex set over {} states used with a chain of {n} states",
                self.n
            )))
        } else {
            Ok(())
        }
    }
}

/// A probability vector supported on a [`VertexSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureOnSet {
    support: VertexSet,
    weights: Vec<f64>,
}

impl MeasureOnSet {
    /// Weights are aligned with `support.indices()`. They must be
    /// nonnegative and sum to one within `1e-10`.
    pub fn new(support: VertexSet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != support.len() {
            return Err(validation(format!(
                "{} weights for a support of size {}",
                weights.len(),
                support.len()
            )));
        }
        let m = Self { support, weights };
        m.check_probability(1e-10)?;
        Ok(m)
    }

    pub(crate) fn new_unchecked(support: VertexSet, weights: Vec<f64>) -> Self {
        Self { support, weights }
    }

    pub fn point(n: usize, x: usize) -> Result<Self> {
        Ok(Self {
            support: VertexSet::singleton(n, x)?,
            weights: vec![1.0],
        })
    }

    /// Full-support measure with the given dense weights.
    pub fn dense(weights: Vec<f64>) -> Result<Self> {
        Self::new(VertexSet::full(weights.len()), weights)
    }

    pub fn support(&self) -> &VertexSet {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at state `x`; zero off the support.
    pub fn weight(&self, x: usize) -> f64 {
        match self.support.indices().binary_search(&x) {
            Ok(i) => self.weights[i],
            Err(_) => 0.0,
        }
    }

    /// Mass of `set` (only the part of it inside the support counts).
    pub fn mass_of(&self, set: &VertexSet) -> f64 {
        self.support
            .iter()
            .zip(&self.weights)
            .filter(|(x, _)| set.contains(*x))
            .map(|(_, w)| *w)
            .sum()
    }

    /// Dense vector over the whole state space.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.support.universe()];
        for (x, w) in self.support.iter().zip(&self.weights) {
            out[x] = *w;
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub(crate) fn check_probability(&self, tol: f64) -> Result<()> {
        if let Some((i, w)) = self
            .weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= -1e-12) || !w.is_finite())
        {
            return Err(Error::Numerical(format!(
                "negative or non-finite weight {w} at state {}",
                self.support.indices()[i]
            )));
        }
        let total = self.total();
        if (total - 1.0).abs() > tol {
            return Err(Error::Numerical(format!("measure sums to {total}, not 1")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_and_rejects_duplicates() {
        let s = VertexSet::new(5, [3, 0, 2]).unwrap();
        assert_eq!(s.indices(), &[0, 2, 3]);
        assert_eq!(s.complement(), &[1, 4]);
        assert!(VertexSet::new(5, [1, 1]).is_err());
        assert!(VertexSet::new(5, [5]).is_err());
    }

    #[test]
    fn measure_weight_lookup() {
        let s = VertexSet::new(4, [1, 3]).unwrap();
        let m = MeasureOnSet::new(s, vec![0.25, 0.75]).unwrap();
        assert_eq!(m.weight(3), 0.75);
        assert_eq!(m.weight(0), 0.0);
        assert_eq!(m.to_dense(), vec![0.0, 0.25, 0.0, 0.75]);
    }

    #[test]
    fn measure_must_sum_to_one() {
        let s = VertexSet::new(3, [0, 1]).unwrap();
        assert!(MeasureOnSet::new(s, vec![0.5, 0.4]).is_err());
    }
}
