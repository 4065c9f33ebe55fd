//! Diffusion-limited aggregation on a finite chain.
//!
//! Starting from `A_0 = {s}`, each step adds the first state of the outer
//! boundary `{x not in A : P(y, x) > 0 for some y in A}` hit by a walk
//! started from `pi`. The run stops at the first time `e` joins the
//! aggregate.
//!
//! The inner vertex boundary used for the Cheeger constant lies inside the
//! aggregate, so reading the growth rule with it leaves the process unable
//! to grow. [`Boundary::Inner`] keeps that literal reading available: such
//! runs end immediately with [`RunStatus::Stalled`].

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{sample_measure, Chain};
use crate::error::{precondition, Error, Result};
use crate::graph::{bfs, UNREACHABLE};
use crate::harmonic::harmonic_stationary;
use crate::rng::{child_rng, child_seed, rng_from_seed};
use crate::set::VertexSet;
use crate::spectral::{inner_boundary, spectrum, MIN_GAP};
use crate::stats::{mean_stderr, ols_slope, percentile};

/// Walk-mode step cap is `WALK_CAP_FACTOR * n / gap`.
pub const WALK_CAP_FACTOR: f64 = 1e3;

pub const MIN_FIT_SIZES: usize = 3;
pub const MIN_FIT_REPLICAS: usize = 100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DlaMode {
    /// Sample each addition from the exact stationary harmonic measure.
    #[default]
    Exact,
    /// Simulate the walk.
    Walk,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Outer,
    Inner,
}

/// `{x not in A : P(y, x) > 0 for some y in A}`.
pub fn outer_boundary(chain: &Chain, a: &VertexSet) -> Result<VertexSet> {
    a.require_nonempty("aggregate")?;
    a.require_universe(chain.n())?;
    if a.is_full() {
        return Err(precondition(
            "the aggregate covers every state; no outer boundary",
        ));
    }
    let mut mask = vec![false; chain.n()];
    for y in a.iter() {
        for x in chain.neighbors(y) {
            if !a.contains(x) {
                mask[x] = true;
            }
        }
    }
    Ok(VertexSet::from_mask(mask))
}

fn boundary_of(chain: &Chain, a: &VertexSet, boundary: Boundary) -> Result<VertexSet> {
    match boundary {
        Boundary::Outer => outer_boundary(chain, a),
        Boundary::Inner => {
            a.require_nonempty("aggregate")?;
            Ok(inner_boundary(chain, a))
        }
    }
}

/// One addition drawn from the exact law `h_{dA}`.
pub fn dla_step_exact<R: Rng + ?Sized>(chain: &Chain, a: &VertexSet, rng: &mut R) -> Result<usize> {
    let boundary = outer_boundary(chain, a)?;
    step_exact_on(chain, &boundary, rng)
}

fn step_exact_on<R: Rng + ?Sized>(
    chain: &Chain,
    boundary: &VertexSet,
    rng: &mut R,
) -> Result<usize> {
    let h = harmonic_stationary(chain, boundary)?;
    Ok(sample_measure(&h.measure, rng))
}

/// `WALK_CAP_FACTOR * n / gap`.
pub fn walk_step_cap(chain: &Chain) -> Result<u64> {
    let gap = spectrum(chain)?.gap;
    if !(gap > MIN_GAP) {
        return Err(precondition(format!("degenerate spectral gap {gap:e}")));
    }
    Ok((WALK_CAP_FACTOR * chain.n() as f64 / gap).ceil() as u64)
}

/// One addition by simulating a walk from `pi` until it enters the outer
/// boundary. `seed` is only reported if the step cap is exceeded.
pub fn dla_step_walk<R: Rng + ?Sized>(
    chain: &Chain,
    a: &VertexSet,
    rng: &mut R,
    seed: u64,
) -> Result<usize> {
    let boundary = outer_boundary(chain, a)?;
    let cap = walk_step_cap(chain)?;
    step_walk_on(chain, boundary.mask(), rng, cap, seed)
}

fn step_walk_on<R: Rng + ?Sized>(
    chain: &Chain,
    boundary: &[bool],
    rng: &mut R,
    cap: u64,
    seed: u64,
) -> Result<usize> {
    let mut x = chain.sample_stationary(rng);
    let mut steps = 0u64;
    while !boundary[x] {
        if steps >= cap {
            return Err(Error::StepCap { cap, seed });
        }
        x = chain.step(x, rng);
        steps += 1;
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RunStatus {
    Complete,
    /// The growth rule produced a state already in the aggregate.
    Stalled {
        reason: String,
    },
    /// A step failed; the trace holds everything up to the failure.
    Failed {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DlaTrace {
    pub n: usize,
    pub start: usize,
    pub end: usize,
    /// `(t, a_t)` for `t = 1, 2, ...`.
    pub additions: Vec<(u64, usize)>,
    /// `Some(t)` with `a_t = e` once the run completes.
    pub tau: Option<u64>,
    /// `r(t) = max_{x in A_t} dist(x, s)` for `t = 0..=len(additions)`.
    pub radius_curve: Vec<usize>,
    pub seed: u64,
    pub mode: DlaMode,
    pub boundary: Boundary,
    pub status: RunStatus,
}

impl DlaTrace {
    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Complete
    }

    /// Check the trace invariants against `chain`.
    pub fn validate(&self, chain: &Chain) -> Result<()> {
        let bad = |msg: String| Err(Error::Numerical(format!("invalid DLA trace: {msg}")));
        let n = chain.n();
        if self.n != n || self.start >= n || self.end >= n {
            return bad("states out of range".into());
        }
        if self.radius_curve.len() != self.additions.len() + 1 || self.radius_curve[0] != 0 {
            return bad("radius curve length or origin".into());
        }
        let dist = bfs(chain, self.start);
        let mut in_a = vec![false; n];
        in_a[self.start] = true;
        for (i, &(t, x)) in self.additions.iter().enumerate() {
            if t != i as u64 + 1 {
                return bad(format!("step index {t} at position {i}"));
            }
            if in_a[x] {
                return bad(format!("a_{t} = {x} already in the aggregate"));
            }
            if !chain.neighbors(x).any(|y| in_a[y]) {
                return bad(format!("a_{t} = {x} is not adjacent to the aggregate"));
            }
            in_a[x] = true;
            if self.radius_curve[i + 1] < self.radius_curve[i] {
                return bad(format!("radius decreases at t = {t}"));
            }
        }
        if let Some(tau) = self.tau {
            if self.additions.last() != Some(&(tau, self.end)) {
                return bad("a_tau is not the end state".into());
            }
            if self.additions[..self.additions.len() - 1]
                .iter()
                .any(|&(_, x)| x == self.end)
            {
                return bad("end state added before tau".into());
            }
            let r_tau = *self.radius_curve.last().unwrap();
            let farthest = dist
                .iter()
                .copied()
                .filter(|&d| d != UNREACHABLE)
                .max()
                .unwrap();
            if r_tau < dist[self.end] || (dist[self.end] == farthest && r_tau != dist[self.end]) {
                return bad(format!(
                    "r(tau) = {r_tau} but dist(e, s) = {}",
                    dist[self.end]
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DlaOptions {
    pub mode: DlaMode,
    pub boundary: Boundary,
}

impl Default for DlaOptions {
    fn default() -> Self {
        Self {
            mode: DlaMode::Exact,
            boundary: Boundary::Outer,
        }
    }
}

/// One DLA run from `{s}` until `e` is absorbed. Step failures are
/// recorded in the returned trace rather than discarding it.
pub fn dla_run(chain: &Chain, s: usize, e: usize, opts: DlaOptions, seed: u64) -> Result<DlaTrace> {
    let n = chain.n();
    if s >= n || e >= n {
        return Err(precondition(format!(
            "start {s} / end {e} out of range for n = {n}"
        )));
    }
    if s == e {
        return Err(precondition("start and end must differ"));
    }
    let cap = match opts.mode {
        DlaMode::Walk => walk_step_cap(chain)?,
        DlaMode::Exact => 0,
    };
    let dist = bfs(chain, s);
    let mut rng = rng_from_seed(seed);
    let mut in_a = vec![false; n];
    let mut in_b = vec![false; n];
    in_a[s] = true;
    for x in chain.neighbors(s) {
        in_b[x] = true;
    }
    let mut trace = DlaTrace {
        n,
        start: s,
        end: e,
        additions: Vec::new(),
        tau: None,
        radius_curve: vec![0],
        seed,
        mode: opts.mode,
        boundary: opts.boundary,
        status: RunStatus::Complete,
    };
    let mut radius = 0;
    loop {
        let t = trace.additions.len() as u64 + 1;
        let step = match (opts.boundary, opts.mode) {
            (Boundary::Outer, DlaMode::Walk) => step_walk_on(chain, &in_b, &mut rng, cap, seed),
            (Boundary::Outer, DlaMode::Exact) => {
                step_exact_on(chain, &VertexSet::from_mask(in_b.clone()), &mut rng)
            }
            (Boundary::Inner, _) => {
                let a = VertexSet::from_mask(in_a.clone());
                boundary_of(chain, &a, Boundary::Inner)
                    .and_then(|b| step_exact_on(chain, &b, &mut rng))
            }
        };
        let x = match step {
            Ok(x) => x,
            Err(err) => {
                trace.status = RunStatus::Failed {
                    reason: format!("step {t}: {err}"),
                };
                return Ok(trace);
            }
        };
        if in_a[x] {
            trace.status = RunStatus::Stalled {
                reason: format!(
                    "step {t}: the hit state {x} is already in the aggregate, which cannot grow"
                ),
            };
            return Ok(trace);
        }
        in_a[x] = true;
        in_b[x] = false;
        for y in chain.neighbors(x) {
            if !in_a[y] {
                in_b[y] = true;
            }
        }
        radius = radius.max(dist[x]);
        trace.additions.push((t, x));
        trace.radius_curve.push(radius);
        if x == e {
            trace.tau = Some(t);
            trace.validate(chain)?;
            return Ok(trace);
        }
    }
}

/// `replicas` independent runs; replica `i` uses `child_seed(master, i)`.
/// Output order is by replica index regardless of scheduling.
pub fn dla_replicas(
    chain: &Chain,
    s: usize,
    e: usize,
    opts: DlaOptions,
    master_seed: u64,
    replicas: usize,
) -> Result<Vec<DlaTrace>> {
    // Warm the shared caches once before fanning out.
    if opts.mode == DlaMode::Walk {
        walk_step_cap(chain)?;
    }
    chain.sample_stationary(&mut rng_from_seed(0));
    (0..replicas)
        .into_par_iter()
        .map(|i| dla_run(chain, s, e, opts, child_seed(master_seed, i as u64)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub n: usize,
    pub log_n: f64,
    pub mean_tau: f64,
    pub stderr_tau: f64,
    pub log_mean_tau: f64,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub points: Vec<FitPoint>,
    pub slope: f64,
    /// 95% percentile bootstrap interval.
    pub ci: (f64, f64),
    pub resamples: usize,
    pub seed: u64,
}

impl GrowthFit {
    pub fn ci_excludes_zero(&self) -> bool {
        self.ci.0 > 0.0 || self.ci.1 < 0.0
    }
}

/// Least-squares slope of `log mean tau` against `log n`, with a bootstrap
/// interval that resamples replicas within each size.
pub fn growth_fit_groups(
    groups: &[(usize, Vec<f64>)],
    resamples: usize,
    seed: u64,
) -> Result<GrowthFit> {
    let mut groups = groups.to_vec();
    groups.sort_by_key(|g| g.0);
    if groups.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(precondition("duplicate size in growth fit"));
    }
    if groups.len() < MIN_FIT_SIZES {
        return Err(precondition(format!(
            "growth fit needs at least {MIN_FIT_SIZES} sizes, got {}",
            groups.len()
        )));
    }
    if let Some((n, taus)) = groups.iter().find(|g| g.1.len() < MIN_FIT_REPLICAS) {
        return Err(precondition(format!(
            "growth fit needs at least {MIN_FIT_REPLICAS} replicas per size; n = {n} has {}",
            taus.len()
        )));
    }
    if resamples == 0 {
        return Err(precondition("bootstrap needs at least one resample"));
    }
    let xs: Vec<f64> = groups.iter().map(|g| (g.0 as f64).ln()).collect();
    let points: Vec<FitPoint> = groups
        .iter()
        .zip(&xs)
        .map(|((n, taus), &log_n)| {
            let (mean, se) = mean_stderr(taus);
            FitPoint {
                n: *n,
                log_n,
                mean_tau: mean,
                stderr_tau: se,
                log_mean_tau: mean.ln(),
                replicas: taus.len(),
            }
        })
        .collect();
    let ys: Vec<f64> = points.iter().map(|p| p.log_mean_tau).collect();
    let slope = ols_slope(&xs, &ys);
    let boot: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = child_rng(seed, b as u64);
            let ys: Vec<f64> = groups
                .iter()
                .map(|(_, taus)| {
                    let m = taus.len();
                    let sum: f64 = (0..m).map(|_| taus[rng.random_range(0..m)]).sum();
                    (sum / m as f64).ln()
                })
                .collect();
            ols_slope(&xs, &ys)
        })
        .collect();
    Ok(GrowthFit {
        points,
        slope,
        ci: (percentile(&boot, 0.025), percentile(&boot, 0.975)),
        resamples,
        seed,
    })
}

/// [`growth_fit_groups`] over completed traces grouped by chain size.
pub fn growth_fit(traces: &[DlaTrace], resamples: usize, seed: u64) -> Result<GrowthFit> {
    let mut groups: Vec<(usize, Vec<f64>)> = Vec::new();
    for tr in traces {
        let Some(tau) = tr.tau else { continue };
        match groups.iter_mut().find(|g| g.0 == tr.n) {
            Some(g) => g.1.push(tau as f64),
            None => groups.push((tr.n, vec![tau as f64])),
        }
    }
    growth_fit_groups(&groups, resamples, seed)
}

/// `Pr[B >= C E B] <= exp(-E B * C log(C/e))` for a sum `B` of independent
/// Bernoulli variables.
pub fn bernstein_tail(eb: f64, c: f64) -> Result<f64> {
    if !(c > 1.0) {
        return Err(precondition(format!("tail factor C = {c} must exceed 1")));
    }
    if !(eb > 0.0) {
        return Err(precondition(format!("mean E B = {eb} must be positive")));
    }
    Ok((-eb * c * (c / std::f64::consts::E).ln()).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinCheck {
    pub eb: f64,
    pub c: f64,
    pub bound: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub draws: usize,
    /// `estimate <= bound + 3 stderr`.
    pub pass: bool,
}

/// Monte-Carlo estimate of `Pr[B >= C E B]` for `B = sum Bernoulli(p_i)`.
pub fn bernstein_monte_carlo(
    means: &[f64],
    c: f64,
    draws: usize,
    seed: u64,
) -> Result<BernsteinCheck> {
    if means.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(precondition("Bernoulli means must lie in [0, 1]"));
    }
    if draws == 0 {
        return Err(precondition("need at least one draw"));
    }
    let eb: f64 = means.iter().sum();
    let bound = bernstein_tail(eb, c)?;
    let threshold = c * eb;
    const CHUNKS: usize = 64;
    let hits: usize = (0..CHUNKS)
        .into_par_iter()
        .map(|k| {
            let mut rng = child_rng(seed, k as u64);
            let lo = draws * k / CHUNKS;
            let hi = draws * (k + 1) / CHUNKS;
            (lo..hi)
                .filter(|_| {
                    let b = means.iter().filter(|&&p| rng.random::<f64>() < p).count();
                    b as f64 >= threshold
                })
                .count()
        })
        .sum();
    let estimate = hits as f64 / draws as f64;
    let stderr = (estimate * (1.0 - estimate) / draws as f64).sqrt();
    Ok(BernsteinCheck {
        eb,
        c,
        bound,
        estimate,
        stderr,
        draws,
        pass: estimate <= bound + 3.0 * stderr,
    })
}
