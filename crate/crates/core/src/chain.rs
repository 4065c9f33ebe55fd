//! Reversible finite Markov chains.
//!
//! A [`Chain`] is immutable after construction. Construction validates
//! stochasticity, positivity of the stationary measure, detailed balance and
//! irreducibility, and replaces the kernel by its lazy version `(I + P) / 2`
//! when the spectrum reaches `-1` (unless disabled through [`BuildOptions`]).

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{precondition, validation, Error, Result};
use crate::families::FamilySpec;
use crate::set::{MeasureOnSet, VertexSet};
use crate::spectral::Eigensystem;

/// Absolute tolerance for row sums, stationary mass and detailed balance.
pub const BALANCE_TOL: f64 = 1e-12;

/// Eigenvalues at or below `-1 + LAZY_TRIGGER` trigger automatic lazification.
pub const LAZY_TRIGGER: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub auto_lazify: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { auto_lazify: true }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Source {
    Weights { edges: Vec<(usize, usize, f64)> },
    Kernel,
}

/// One kernel row in sparse form, with a cumulative table for sampling.
#[derive(Clone, Debug)]
struct Row {
    targets: Vec<usize>,
    cdf: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Chain {
    kernel: DMatrix<f64>,
    pi: Vec<f64>,
    pi_min: f64,
    pi_max: f64,
    laziness_applied: bool,
    rows: Vec<Row>,
    source: Source,
    family: Option<FamilySpec>,
    eigen: OnceLock<Arc<Eigensystem>>,
    stationary: OnceLock<Arc<WeightedIndex<f64>>>,
}

impl Chain {
    /// Simple random walk on a weighted undirected graph: `P(x,y) = w(x,y)/w(x)`
    /// and `pi(x)` proportional to the total weight at `x`. Each undirected
    /// edge is listed once; repeated pairs accumulate.
    pub fn from_weights(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        Self::from_weights_with(n, edges, BuildOptions::default())
    }

    pub fn from_weights_with(
        n: usize,
        edges: &[(usize, usize, f64)],
        opts: BuildOptions,
    ) -> Result<Self> {
        if n == 0 {
            return Err(validation("chain needs at least one state"));
        }
        let mut w = DMatrix::<f64>::zeros(n, n);
        for &(x, y, wt) in edges {
            if x >= n || y >= n {
                return Err(validation(format!(
                    "edge ({x}, {y}) out of range for {n} states"
                )));
            }
            if !(wt > 0.0) || !wt.is_finite() {
                return Err(validation(format!(
                    "edge ({x}, {y}) has nonpositive weight {wt}"
                )));
            }
            w[(x, y)] += wt;
            if x != y {
                w[(y, x)] += wt;
            }
        }
        let vertex_weight: Vec<f64> = (0..n).map(|x| w.row(x).sum()).collect();
        if let Some(x) = vertex_weight.iter().position(|&v| v <= 0.0) {
            let components = components_of(n, |a| {
                (0..n).filter(|&b| b != a && w[(a, b)] > 0.0).collect()
            });
            if components > 1 {
                return Err(Error::Disconnected { components });
            }
            return Err(validation(format!("state {x} has no incident weight")));
        }
        let total: f64 = vertex_weight.iter().sum();
        let mut kernel = DMatrix::<f64>::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                kernel[(x, y)] = w[(x, y)] / vertex_weight[x];
            }
        }
        let pi: Vec<f64> = vertex_weight.iter().map(|v| v / total).collect();
        let source = Source::Weights {
            edges: edges.to_vec(),
        };
        Self::assemble(kernel, pi, false, source, opts)
    }

    /// Chain from an explicit kernel and its reversing measure.
    pub fn from_kernel(kernel: DMatrix<f64>, pi: Vec<f64>) -> Result<Self> {
        Self::from_kernel_with(kernel, pi, BuildOptions::default())
    }

    pub fn from_kernel_with(
        kernel: DMatrix<f64>,
        pi: Vec<f64>,
        opts: BuildOptions,
    ) -> Result<Self> {
        if kernel.nrows() != kernel.ncols() {
            return Err(validation("kernel must be square"));
        }
        if kernel.nrows() == 0 {
            return Err(validation("chain needs at least one state"));
        }
        if pi.len() != kernel.nrows() {
            return Err(validation(format!(
                "pi has {} entries for {} states",
                pi.len(),
                kernel.nrows()
            )));
        }
        Self::assemble(kernel, pi, false, Source::Kernel, opts)
    }

    fn assemble(
        kernel: DMatrix<f64>,
        pi: Vec<f64>,
        laziness_applied: bool,
        source: Source,
        opts: BuildOptions,
    ) -> Result<Self> {
        validate(&kernel, &pi)?;
        let rows = sparse_rows(&kernel);
        let pi_min = pi.iter().copied().fold(f64::INFINITY, f64::min);
        let pi_max = pi.iter().copied().fold(0.0, f64::max);
        let chain = Self {
            kernel,
            pi,
            pi_min,
            pi_max,
            laziness_applied,
            rows,
            source,
            family: None,
            eigen: OnceLock::new(),
            stationary: OnceLock::new(),
        };
        let components = chain.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        if opts.auto_lazify {
            let eig = chain.eigensystem()?;
            let smallest = eig.values.last().copied().unwrap_or(1.0);
            if smallest <= -1.0 + LAZY_TRIGGER {
                return Ok(chain.lazified(true));
            }
        }
        Ok(chain)
    }

    /// The lazy chain `(I + P) / 2`. Stationary measure and harmonic
    /// measures are unchanged; every eigenvalue maps to `(1 + l) / 2`.
    pub fn lazify(&self) -> Chain {
        self.lazified(false)
    }

    fn lazified(&self, keep_source: bool) -> Chain {
        let n = self.n();
        let mut kernel = self.kernel.scale(0.5);
        for x in 0..n {
            kernel[(x, x)] += 0.5;
        }
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(Arc::new(e.lazified()));
        }
        Chain {
            rows: sparse_rows(&kernel),
            kernel,
            pi: self.pi.clone(),
            pi_min: self.pi_min,
            pi_max: self.pi_max,
            laziness_applied: true,
            source: if keep_source {
                self.source.clone()
            } else {
                Source::Kernel
            },
            family: self.family.clone(),
            eigen,
            stationary: self.stationary.clone(),
        }
    }

    pub(crate) fn with_family(mut self, family: FamilySpec) -> Self {
        self.family = Some(family);
        self
    }

    pub(crate) fn with_laziness_flag(mut self, lazy: bool) -> Self {
        self.laziness_applied |= lazy;
        self
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    /// `P(x, y)`.
    #[inline]
    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.kernel[(x, y)]
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn pi_min(&self) -> f64 {
        self.pi_min
    }

    pub fn pi_max(&self) -> f64 {
        self.pi_max
    }

    pub fn laziness_applied(&self) -> bool {
        self.laziness_applied
    }

    pub fn family(&self) -> Option<&FamilySpec> {
        self.family.as_ref()
    }

    /// The weighted edges this chain was built from, if it is still the
    /// walk on those weights (possibly auto-lazified).
    pub fn source_edges(&self) -> Option<&[(usize, usize, f64)]> {
        match &self.source {
            Source::Weights { edges } => Some(edges),
            Source::Kernel => None,
        }
    }

    /// `pi(S)`.
    pub fn mass(&self, set: &VertexSet) -> f64 {
        set.mass(&self.pi)
    }

    /// States `y != x` with `P(x, y) > 0`. For reversible chains this is
    /// also the set of `y` with `P(y, x) > 0`.
    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[x]
            .targets
            .iter()
            .copied()
            .filter(move |&y| y != x)
    }

    /// Sparse row `x` as `(y, P(x, y))` pairs with positive probability.
    pub fn row(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows[x]
            .targets
            .iter()
            .map(move |&y| (y, self.kernel[(x, y)]))
    }

    /// One transition from `x`.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let row = &self.rows[x];
        let u: f64 = rng.random();
        let i = row.cdf.partition_point(|&c| c <= u);
        row.targets[i.min(row.targets.len() - 1)]
    }

    /// A draw from the stationary measure.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let dist = self.stationary.get_or_init(|| {
            Arc::new(WeightedIndex::new(&self.pi).expect("pi validated at construction"))
        });
        dist.sample(rng)
    }

    pub(crate) fn eigensystem(&self) -> Result<Arc<Eigensystem>> {
        if let Some(e) = self.eigen.get() {
            return Ok(Arc::clone(e));
        }
        let e = Arc::new(Eigensystem::compute(self)?);
        let _ = self.eigen.set(Arc::clone(&e));
        Ok(e)
    }

    fn component_count(&self) -> usize {
        components_of(self.n(), |x| self.neighbors(x).collect())
    }

    /// Run a walk from a state drawn from `start` until it first enters
    /// `stop`, or until `cap` steps have been taken.
    pub fn sample_walk<R: Rng + ?Sized>(
        &self,
        start: &MeasureOnSet,
        stop: &VertexSet,
        rng: &mut R,
        cap: usize,
    ) -> Result<WalkPath> {
        stop.require_nonempty("stopping set")?;
        stop.require_universe(self.n())?;
        start.support().require_universe(self.n())?;
        if cap == 0 {
            return Err(precondition("walk cap must be at least 1"));
        }
        let x0 = sample_measure(start, rng);
        let mut states = vec![x0];
        let mut x = x0;
        while !stop.contains(x) {
            if states.len() > cap {
                return Ok(WalkPath {
                    states,
                    truncated: true,
                });
            }
            x = self.step(x, rng);
            states.push(x);
        }
        Ok(WalkPath {
            states,
            truncated: false,
        })
    }
}

/// A sampled trajectory. `truncated` marks walks stopped by the step cap
/// before reaching the stopping set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkPath {
    pub states: Vec<usize>,
    pub truncated: bool,
}

impl WalkPath {
    /// Number of steps taken.
    pub fn len(&self) -> usize {
        self.states.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.states.len() == 1
    }
}

pub(crate) fn sample_measure<R: Rng + ?Sized>(m: &MeasureOnSet, rng: &mut R) -> usize {
    let idx = m.support().indices();
    if idx.len() == 1 {
        return idx[0];
    }
    let u: f64 = rng.random::<f64>() * m.total();
    let mut acc = 0.0;
    for (x, w) in m.support().iter().zip(m.weights()) {
        acc += w;
        if u < acc {
            return x;
        }
    }
    *idx.last().unwrap()
}

fn sparse_rows(kernel: &DMatrix<f64>) -> Vec<Row> {
    (0..kernel.nrows())
        .map(|x| {
            let mut targets = Vec::new();
            let mut cdf = Vec::new();
            let mut acc = 0.0;
            for y in 0..kernel.ncols() {
                let p = kernel[(x, y)];
                if p > 0.0 {
                    acc += p;
                    targets.push(y);
                    cdf.push(acc);
                }
            }
            if let Some(last) = cdf.last_mut() {
                *last = f64::INFINITY;
            }
            Row { targets, cdf }
        })
        .collect()
}

fn validate(kernel: &DMatrix<f64>, pi: &[f64]) -> Result<()> {
    let n = pi.len();
    for x in 0..n {
        let mut sum = 0.0;
        for y in 0..n {
            let p = kernel[(x, y)];
            if !(p >= 0.0) || !p.is_finite() {
                return Err(validation(format!("P({x},{y}) = {p} is not a probability")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > BALANCE_TOL {
            return Err(validation(format!("row {x} sums to {sum}")));
        }
    }
    if let Some(x) = pi.iter().position(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(validation(format!("pi({x}) = {} is not positive", pi[x])));
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > BALANCE_TOL {
        return Err(validation(format!("pi sums to {total}")));
    }
    for x in 0..n {
        for y in (x + 1)..n {
            let flow = pi[x] * kernel[(x, y)] - pi[y] * kernel[(y, x)];
            if flow.abs() > BALANCE_TOL {
                return Err(validation(format!(
                    "detailed balance fails at ({x},{y}): residual {flow:e}"
                )));
            }
        }
    }
    Ok(())
}

fn components_of(n: usize, neighbors: impl Fn(usize) -> Vec<usize>) -> usize {
    let mut seen = vec![false; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        stack.push(s);
        while let Some(x) = stack.pop() {
            for y in neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;

    fn unit(edges: &[(usize, usize)]) -> Vec<(usize, usize, f64)> {
        edges.iter().map(|&(a, b)| (a, b, 1.0)).collect()
    }

    #[test]
    fn complete_graph_k3() {
        let c = Chain::from_weights(3, &unit(&[(0, 1), (1, 2), (0, 2)])).unwrap();
        for x in 0..3 {
            assert_abs_diff_eq!(c.pi()[x], 1.0 / 3.0, epsilon = 1e-15);
            for y in 0..3 {
                let want = if x == y { 0.0 } else { 0.5 };
                assert_abs_diff_eq!(c.p(x, y), want, epsilon = 1e-15);
            }
        }
        assert!(!c.laziness_applied());
    }

    #[test]
    fn path_stationary_is_degree_proportional() {
        let opts = BuildOptions { auto_lazify: false };
        let c = Chain::from_weights_with(3, &unit(&[(0, 1), (1, 2)]), opts).unwrap();
        assert_eq!(c.pi(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn bipartite_chains_are_lazified() {
        let c = Chain::from_weights(3, &unit(&[(0, 1), (1, 2)])).unwrap();
        assert!(c.laziness_applied());
        assert_eq!(c.p(0, 0), 0.5);
        assert_eq!(c.pi(), &[0.25, 0.5, 0.25]);
        assert!(c.source_edges().is_some());
    }

    #[test]
    fn zero_weight_is_rejected() {
        let err = Chain::from_weights(2, &[(0, 1, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn disconnected_is_rejected() {
        let err = Chain::from_weights(4, &unit(&[(0, 1), (2, 3)])).unwrap_err();
        assert!(
            matches!(err, Error::Disconnected { components: 2 }),
            "{err}"
        );
        let err = Chain::from_weights(3, &unit(&[(0, 1)])).unwrap_err();
        assert!(matches!(err, Error::Disconnected { .. }), "{err}");
    }

    #[test]
    fn kernel_failing_detailed_balance_is_rejected() {
        // A biased 3-cycle is stochastic with uniform pi but not reversible.
        let p = DMatrix::from_row_slice(3, 3, &[0.0, 0.9, 0.1, 0.1, 0.0, 0.9, 0.9, 0.1, 0.0]);
        let err = Chain::from_kernel(p, vec![1.0 / 3.0; 3]).unwrap_err();
        assert!(err.to_string().contains("detailed balance"), "{err}");
    }

    #[test]
    fn flip_chain_lazify() {
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let flip = Chain::from_kernel_with(p, vec![0.5, 0.5], BuildOptions { auto_lazify: false })
            .unwrap();
        let lazy = flip.lazify();
        assert_eq!(lazy.kernel().as_slice(), &[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(lazy.pi(), flip.pi());
        // The default path lazifies the flip chain on its own.
        let auto = Chain::from_kernel(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!(auto.laziness_applied());
        assert_eq!(auto.kernel(), lazy.kernel());
    }

    #[test]
    fn lazify_twice_transforms_again() {
        let c = Chain::from_weights(3, &unit(&[(0, 1), (1, 2), (0, 2)])).unwrap();
        let once = c.lazify();
        let twice = once.lazify();
        // 1/2 (I + 1/2 (I + P)) = 3/4 I + 1/4 P
        for x in 0..3 {
            for y in 0..3 {
                let want = if x == y { 0.75 } else { 0.25 * c.p(x, y) };
                assert_abs_diff_eq!(twice.p(x, y), want, epsilon = 1e-15);
            }
        }
        assert_ne!(once.kernel(), twice.kernel());
    }

    #[test]
    fn walk_from_stop_set_has_length_zero() {
        let c = Chain::from_weights(3, &unit(&[(0, 1), (1, 2), (0, 2)])).unwrap();
        let stop = VertexSet::singleton(3, 1).unwrap();
        let start = MeasureOnSet::point(3, 1).unwrap();
        let path = c
            .sample_walk(&start, &stop, &mut rng_from_seed(1), 10)
            .unwrap();
        assert_eq!(path.len(), 0);
        assert!(!path.truncated);
    }

    #[test]
    fn walk_truncates_at_cap() {
        // Path 0-1-2-3: from 0 the state 3 is three steps away.
        let c = Chain::from_weights(4, &unit(&[(0, 1), (1, 2), (2, 3)])).unwrap();
        let stop = VertexSet::singleton(4, 3).unwrap();
        let start = MeasureOnSet::point(4, 0).unwrap();
        let path = c
            .sample_walk(&start, &stop, &mut rng_from_seed(3), 1)
            .unwrap();
        assert!(path.truncated);
        assert!(c
            .sample_walk(&start, &stop, &mut rng_from_seed(3), 0)
            .is_err());
    }

    #[test]
    fn walk_steps_follow_positive_transitions() {
        let c = Chain::from_weights(4, &unit(&[(0, 1), (1, 2), (2, 3), (3, 0)])).unwrap();
        let stop = VertexSet::singleton(4, 2).unwrap();
        let start = MeasureOnSet::dense(c.pi().to_vec()).unwrap();
        let mut rng = rng_from_seed(11);
        for _ in 0..200 {
            let path = c.sample_walk(&start, &stop, &mut rng, 10_000).unwrap();
            assert!(path.states.windows(2).all(|w| c.p(w[0], w[1]) > 0.0));
            assert_eq!(*path.states.last().unwrap(), 2);
        }
    }

    #[test]
    fn walks_are_reproducible() {
        let c = Chain::from_weights(5, &unit(&[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])).unwrap();
        let stop = VertexSet::singleton(5, 0).unwrap();
        let start = MeasureOnSet::dense(c.pi().to_vec()).unwrap();
        let run = |seed| {
            let mut rng = rng_from_seed(seed);
            (0..50)
                .map(|_| c.sample_walk(&start, &stop, &mut rng, 1000).unwrap().states)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }
}
