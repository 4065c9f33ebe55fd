//! Harmonic measures on finite reversible chains and the quantitative
//! bounds they satisfy.
//!
//! `h_{y,S}(x) = Pr_y[X_{T_S} = x]` is the law of the first state of `S`
//! visited from `y`; `h_S = sum_y pi(y) h_{y,S}` is the same law for a walk
//! started from stationarity. Both are unchanged by lazification.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{sample_measure, Chain};
use crate::error::{precondition, Error, Result};
use crate::hitting::{expected_hitting, EscapeTable};
use crate::linalg::KilledSystem;
use crate::rng::rng_from_seed;
use crate::set::{MeasureOnSet, VertexSet};
use crate::spectral::{boundary_ratio, cheeger, inner_boundary, spectrum, CheegerMode};
use crate::stats::{frequencies, mean_stderr, tv_distance, tv_envelope};

/// Sum-to-one tolerance for every computed harmonic measure.
pub const MEASURE_TOL: f64 = 1e-10;

/// Slack for the `>= 1/2` mass comparisons (exact halves arise by symmetry).
pub const HALF_TOL: f64 = 1e-12;

/// Largest chain for exhaustive `beta` enumeration.
pub const EXACT_BETA_MAX_N: usize = 14;

/// Constant in the stationary harmonic measure bound, traced through the
/// hitting-time estimate `E_x[T_S^+] <= 3/(1-lambda) (log(2e/pi_min) v 1/pi(S))`.
pub const MAIN_BOUND_CONSTANT: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    State(usize),
    Stationary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicMeasure {
    pub from: Start,
    pub measure: MeasureOnSet,
}

impl HarmonicMeasure {
    pub fn support(&self) -> &VertexSet {
        self.measure.support()
    }

    /// Weights aligned with `support().indices()`.
    pub fn weights(&self) -> &[f64] {
        self.measure.weights()
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.measure.weight(x)
    }

    /// `h(A)` for `A` (only `A ∩ S` carries mass).
    pub fn mass(&self, a: &VertexSet) -> f64 {
        self.measure.mass_of(a)
    }
}

fn check_set(chain: &Chain, set: &VertexSet) -> Result<()> {
    set.require_nonempty("harmonic measure support")?;
    set.require_universe(chain.n())
}

fn finish(from: Start, set: &VertexSet, weights: Vec<f64>) -> Result<HarmonicMeasure> {
    let measure = MeasureOnSet::new_unchecked(set.clone(), weights);
    measure.check_probability(MEASURE_TOL)?;
    Ok(HarmonicMeasure { from, measure })
}

/// All rows `h_{y,S}` for `y` outside `S`: `H = (I - Q)^{-1} R` with `Q`
/// the kernel on `G \ S` and `R` the transitions into `S`.
pub struct HarmonicMatrix {
    set: VertexSet,
    sys: KilledSystem,
    h: DMatrix<f64>,
}

impl HarmonicMatrix {
    pub fn new(chain: &Chain, set: &VertexSet) -> Result<Self> {
        check_set(chain, set)?;
        let sys = KilledSystem::new(chain, set.mask(), false)?;
        let r = DMatrix::from_fn(sys.size(), set.len(), |i, j| {
            chain.p(sys.free()[i], set.indices()[j])
        });
        let h = sys.solve(&r)?;
        Ok(Self {
            set: set.clone(),
            sys,
            h,
        })
    }

    /// `h_{y,S}(x)` for `x` in `S`.
    pub fn get(&self, y: usize, x: usize) -> f64 {
        match self.sys.position(y) {
            Some(i) => match self.set.indices().binary_search(&x) {
                Ok(j) => self.h[(i, j)],
                Err(_) => 0.0,
            },
            None => f64::from(u8::from(x == y)),
        }
    }

    pub fn measure_from(&self, y: usize) -> Result<HarmonicMeasure> {
        let weights = match self.sys.position(y) {
            Some(i) => self.h.row(i).iter().copied().collect(),
            None => self
                .set
                .iter()
                .map(|x| f64::from(u8::from(x == y)))
                .collect(),
        };
        finish(Start::State(y), &self.set, weights)
    }
}

/// `h_{y,S}`; a point mass at `y` when `y` is in `S`.
pub fn harmonic_from(chain: &Chain, set: &VertexSet, y: usize) -> Result<HarmonicMeasure> {
    check_set(chain, set)?;
    if y >= chain.n() {
        return Err(precondition(format!("start state {y} out of range")));
    }
    if set.contains(y) {
        let weights = set.iter().map(|x| f64::from(u8::from(x == y))).collect();
        return finish(Start::State(y), set, weights);
    }
    let sys = KilledSystem::new(chain, set.mask(), false)?;
    let r = DMatrix::from_fn(sys.size(), set.len(), |i, j| {
        chain.p(sys.free()[i], set.indices()[j])
    });
    let h = sys.solve(&r)?;
    let row = sys.position(y).expect("y is free");
    finish(Start::State(y), set, h.row(row).iter().copied().collect())
}

/// `h_S = sum_y pi(y) h_{y,S}`, from one transposed solve
/// `(I - Q)^T w = pi|_{G \ S}` followed by `h_S(x) = pi(x) + (w^T R)(x)`.
pub fn harmonic_stationary(chain: &Chain, set: &VertexSet) -> Result<HarmonicMeasure> {
    check_set(chain, set)?;
    let pi = chain.pi();
    let sys = KilledSystem::new(chain, set.mask(), true)?;
    let rhs = DVector::from_iterator(sys.size(), sys.free().iter().map(|&z| pi[z]));
    let w = sys.solve_vec(&rhs)?;
    let weights = set
        .iter()
        .map(|x| {
            pi[x]
                + sys
                    .free()
                    .iter()
                    .enumerate()
                    .map(|(i, &z)| w[i] * chain.p(z, x))
                    .sum::<f64>()
        })
        .collect();
    finish(Start::Stationary, set, weights)
}

/// Path-reversal ingredients for a set `S`, from one absorbing solve per
/// state `y` outside `S` (absorbing set `S ∪ {y}`):
/// `visit[(i, y)] = Pr_{x_i}[T_y < T_S^+]` for the `i`-th state of `S`, and
/// `escape[y] = Pr_y[T_S < T_y^+]`.
pub struct ReversalTerms {
    pub set: VertexSet,
    pub visit: DMatrix<f64>,
    pub escape: Vec<f64>,
}

pub fn reversal_terms(chain: &Chain, set: &VertexSet) -> Result<ReversalTerms> {
    check_set(chain, set)?;
    let n = chain.n();
    let mut visit = DMatrix::zeros(set.len(), n);
    let mut escape = vec![1.0; n];
    for (i, x) in set.iter().enumerate() {
        visit[(i, x)] = 1.0;
    }
    let mut absorbed = set.mask().to_vec();
    for y in set.complement().iter().copied() {
        absorbed[y] = true;
        let sys = KilledSystem::new(chain, &absorbed, false)?;
        absorbed[y] = false;
        // g(z) = Pr_z[T_y < T_S]
        let rhs = DVector::from_iterator(sys.size(), sys.free().iter().map(|&z| chain.p(z, y)));
        let g = sys.solve_vec(&rhs)?;
        let g_at = |z: usize| -> f64 {
            if z == y {
                1.0
            } else {
                sys.position(z).map_or(0.0, |k| g[k])
            }
        };
        for (i, x) in set.iter().enumerate() {
            visit[(i, y)] = chain.row(x).map(|(z, p)| p * g_at(z)).sum();
        }
        escape[y] =
            chain.row(y).map(|(z, p)| p * (1.0 - g_at(z))).sum::<f64>() - chain.p(y, y) * 0.0;
        // z = y contributes p * (1 - 1) = 0, states of S contribute p * 1.
    }
    Ok(ReversalTerms {
        set: set.clone(),
        visit,
        escape,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversePathCheck {
    pub max_residual: f64,
    /// `(x, y)` attaining the largest residual.
    pub worst: (usize, usize),
    pub pairs: usize,
    /// `sum_y Pr_x[T_y < T_S^+]` for each `x` in `S`, in index order.
    pub range_sums: Vec<f64>,
}

/// Checks `pi(y) h_{y,S}(x) = pi(x) Pr_x[T_y < T_S^+] / Pr_y[T_S < T_y^+]`
/// for all `x` in `S` and all `y`, the two sides coming from different
/// linear systems.
pub fn check_reverse_path(chain: &Chain, set: &VertexSet) -> Result<ReversePathCheck> {
    check_set(chain, set)?;
    if set.is_full() {
        return Err(precondition("reverse-path check needs a proper subset"));
    }
    let lhs = HarmonicMatrix::new(chain, set)?;
    let rhs = reversal_terms(chain, set)?;
    let pi = chain.pi();
    let mut out = ReversePathCheck {
        max_residual: 0.0,
        worst: (set.indices()[0], 0),
        pairs: 0,
        range_sums: (0..set.len()).map(|i| rhs.visit.row(i).sum()).collect(),
    };
    for (i, x) in set.iter().enumerate() {
        for y in 0..chain.n() {
            let left = pi[y] * lhs.get(y, x);
            let right = pi[x] * rhs.visit[(i, y)] / rhs.escape[y];
            let r = (left - right).abs();
            out.pairs += 1;
            if !(r <= out.max_residual) {
                out.max_residual = r;
                out.worst = (x, y);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub walks: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub walks: usize,
    /// Whether the exact value lies within 4 standard errors.
    pub within: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumPathReversal {
    pub x: usize,
    /// `sum_y Pr_x[T_y < T_S^+]`.
    pub lhs: f64,
    /// `E_x[T_S^+]`.
    pub rhs: f64,
    pub pass: bool,
    pub mc: Option<McEstimate>,
}

/// `sum_y Pr_x[T_y < T_S^+] = E_x|X[0, T_S^+ - 1]| <= E_x[T_S^+]`, with an
/// optional Monte-Carlo estimate of the expected range.
pub fn check_sum_path_reversal(
    chain: &Chain,
    set: &VertexSet,
    x: usize,
    mc: Option<McOptions>,
) -> Result<SumPathReversal> {
    check_set(chain, set)?;
    if !set.contains(x) {
        return Err(precondition(format!("state {x} is not in the set")));
    }
    let terms = reversal_terms(chain, set)?;
    let i = set.indices().binary_search(&x).unwrap();
    let lhs: f64 = terms.visit.row(i).iter().sum();
    let rhs = expected_hitting(chain, set)?.ret[x];
    let mc = match mc {
        None => None,
        Some(opts) => Some(range_monte_carlo(chain, set, x, lhs, rhs, opts)?),
    };
    Ok(SumPathReversal {
        x,
        lhs,
        rhs,
        pass: lhs <= rhs + 1e-8,
        mc,
    })
}

fn range_monte_carlo(
    chain: &Chain,
    set: &VertexSet,
    x: usize,
    exact: f64,
    mean_return: f64,
    opts: McOptions,
) -> Result<McEstimate> {
    let mut cap = (100.0 * mean_return).ceil() as usize + 1000;
    for attempt in 0..2 {
        let mut rng = rng_from_seed(opts.seed);
        let mut stamp = vec![usize::MAX; chain.n()];
        let mut ranges = Vec::with_capacity(opts.walks);
        let mut truncated = false;
        'walks: for w in 0..opts.walks {
            let mut state = x;
            let mut distinct = 0usize;
            let mut steps = 0usize;
            loop {
                if stamp[state] != w {
                    stamp[state] = w;
                    distinct += 1;
                }
                state = chain.step(state, &mut rng);
                steps += 1;
                if set.contains(state) {
                    break;
                }
                if steps >= cap {
                    truncated = true;
                    break 'walks;
                }
            }
            ranges.push(distinct as f64);
        }
        if truncated {
            if attempt == 0 {
                cap *= 10;
                continue;
            }
            return Err(Error::StepCap {
                cap: cap as u64,
                seed: opts.seed,
            });
        }
        let (mean, stderr) = mean_stderr(&ranges);
        let within = (mean - exact).abs() <= 4.0 * stderr + 1e-12;
        return Ok(McEstimate {
            mean,
            stderr,
            walks: opts.walks,
            within,
        });
    }
    unreachable!()
}

/// Per-point comparison of a harmonic measure value against a bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointBound {
    pub x: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl PointBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-15
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub points: Vec<PointBound>,
    /// `max lhs / rhs` over the set.
    pub max_ratio: f64,
    pub violations: usize,
    /// For the main bound: `max h_S(x) u (1-lambda) / (pi(x) (log(2e/pi_min) v 1/pi(S)))`.
    pub empirical_constant: Option<f64>,
}

impl BoundReport {
    fn from_points(points: Vec<PointBound>, empirical_constant: Option<f64>) -> Self {
        let max_ratio = points.iter().map(|p| p.lhs / p.rhs).fold(0.0, f64::max);
        let violations = points.iter().filter(|p| !p.holds()).count();
        Self {
            points,
            max_ratio,
            violations,
            empirical_constant,
        }
    }

    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

fn require_full_u(u: &EscapeTable) -> Result<()> {
    if u.upper_bound {
        Err(precondition(
            "bound needs u(P) in full mode, got a sampled upper bound",
        ))
    } else {
        Ok(())
    }
}

/// `h_S(x) <= pi(x) E_x[T_S^+] / u(P)` for every `x` in `S`.
pub fn bound_har(chain: &Chain, set: &VertexSet, u: &EscapeTable) -> Result<BoundReport> {
    require_full_u(u)?;
    let h = harmonic_stationary(chain, set)?;
    let ret = expected_hitting(chain, set)?.ret;
    let pi = chain.pi();
    let points = set
        .iter()
        .zip(h.weights())
        .map(|(x, &lhs)| PointBound {
            x,
            lhs,
            rhs: pi[x] * ret[x] / u.u,
        })
        .collect();
    Ok(BoundReport::from_points(points, None))
}

/// `h_S(x) <= 3 pi(x) (log(2e/pi_min) v 1/pi(S)) / (u(P) (1 - lambda))`.
pub fn bound_main(chain: &Chain, set: &VertexSet, u: &EscapeTable) -> Result<BoundReport> {
    require_full_u(u)?;
    let gap = spectrum(chain)?.gap;
    if !(gap > crate::spectral::MIN_GAP) {
        return Err(precondition(format!("degenerate spectral gap {gap:e}")));
    }
    let h = harmonic_stationary(chain, set)?;
    let pi = chain.pi();
    let scale = (2.0 * std::f64::consts::E / chain.pi_min())
        .ln()
        .max(1.0 / chain.mass(set));
    let mut constant = 0.0f64;
    let points = set
        .iter()
        .zip(h.weights())
        .map(|(x, &lhs)| {
            constant = constant.max(lhs * u.u * gap / (pi[x] * scale));
            PointBound {
                x,
                lhs,
                rhs: MAIN_BOUND_CONSTANT * pi[x] * scale / (u.u * gap),
            }
        })
        .collect();
    Ok(BoundReport::from_points(points, Some(constant)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum NoMakarov {
    /// `A` empty: `h_S(A) = 0`.
    Trivial,
    Checked {
        h_a: f64,
        /// `(2/(1-l)) (pi(A)/pi(B)) log(pi(B)/pi(A)) + pi(A) + pi(A)/pi(B)`, `B = S \ A`.
        rhs: f64,
        eps: f64,
        /// `eps log(1/eps) / (1 - l)` with `eps = pi(A) / pi(S)`.
        packaged: f64,
        /// `h_S(A) / packaged`.
        implied_constant: f64,
        pass: bool,
    },
    Skipped {
        reason: String,
    },
}

impl NoMakarov {
    pub fn pass(&self) -> Option<bool> {
        match self {
            Self::Trivial => Some(true),
            Self::Checked { pass, .. } => Some(*pass),
            Self::Skipped { .. } => None,
        }
    }
}

/// Small subsets of `S` carry little stationary harmonic measure: checks
/// the explicit inequality for `h_S(A) = Pr_pi[T_A < T_B]`, `B = S \ A`.
pub fn bound_no_makarov(chain: &Chain, set: &VertexSet, a: &VertexSet) -> Result<NoMakarov> {
    check_set(chain, set)?;
    if !a.is_subset_of(set) {
        return Err(precondition("A must be a subset of S"));
    }
    if a.is_empty() {
        return Ok(NoMakarov::Trivial);
    }
    let b = set.difference(a);
    let (pa, pb) = (chain.mass(a), chain.mass(&b));
    if b.is_empty() || pa > pb {
        return Ok(NoMakarov::Skipped {
            reason: format!("pi(A) = {pa} > pi(B) = {pb}: log(pi(B)/pi(A)) is negative"),
        });
    }
    let gap = spectrum(chain)?.gap;
    let h_a = harmonic_stationary(chain, set)?.mass(a);
    let ratio = pa / pb;
    let rhs = (2.0 / gap) * ratio * (1.0 / ratio).ln() + pa + ratio;
    let eps = pa / chain.mass(set);
    let packaged = eps * (1.0 / eps).ln() / gap;
    Ok(NoMakarov::Checked {
        h_a,
        rhs,
        eps,
        packaged,
        implied_constant: h_a / packaged,
        pass: h_a <= rhs * (1.0 + 1e-12),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum BetaMode {
    Exact,
    /// Greedy prefixes over `samples` random sets of mass at most 1/2.
    Greedy {
        samples: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetaResult {
    pub beta: f64,
    pub witness_s: VertexSet,
    pub witness_a: VertexSet,
    /// Greedy results only bound `beta` from above.
    pub upper_bound: bool,
    pub sets_examined: usize,
}

/// `beta(G) = min_{pi(S) <= 1/2} min_{h_S(A) >= 1/2} pi(A) / pi(S)`.
pub fn beta(chain: &Chain, mode: BetaMode) -> Result<BetaResult> {
    match mode {
        BetaMode::Exact => beta_exact(chain),
        BetaMode::Greedy { samples, seed } => {
            let sets = sample_half_sets(chain, samples, seed);
            beta_greedy_over(chain, &sets)
        }
    }
}

fn beta_exact(chain: &Chain) -> Result<BetaResult> {
    let n = chain.n();
    if n > EXACT_BETA_MAX_N {
        return Err(Error::SizeGuard {
            what: "exact beta enumeration",
            limit: EXACT_BETA_MAX_N,
            n,
        });
    }
    let pi = chain.pi();
    let mass_of = |mask: u32| -> f64 {
        (0..n)
            .filter(|&x| mask & (1 << x) != 0)
            .map(|x| pi[x])
            .sum()
    };
    let mut best: Option<(f64, u32, u32)> = None;
    let mut examined = 0;
    for s_mask in 1u32..(1u32 << n) {
        let ps = mass_of(s_mask);
        if ps > 0.5 + 1e-12 {
            continue;
        }
        examined += 1;
        let set = mask_set(n, s_mask);
        let h = harmonic_stationary(chain, &set)?;
        let hx: Vec<f64> = (0..n).map(|x| h.weight(x)).collect();
        // enumerate nonempty submasks of s_mask
        let mut a_mask = s_mask;
        while a_mask != 0 {
            let mut ha = 0.0;
            let mut pa = 0.0;
            for x in 0..n {
                if a_mask & (1 << x) != 0 {
                    ha += hx[x];
                    pa += pi[x];
                }
            }
            if ha >= 0.5 - HALF_TOL {
                let ratio = pa / ps;
                if best.map_or(true, |(b, _, _)| ratio < b) {
                    best = Some((ratio, s_mask, a_mask));
                }
            }
            a_mask = (a_mask - 1) & s_mask;
        }
    }
    let (beta, s, a) = best.ok_or_else(|| Error::Numerical("no admissible set for beta".into()))?;
    Ok(BetaResult {
        beta,
        witness_s: mask_set(n, s),
        witness_a: mask_set(n, a),
        upper_bound: false,
        sets_examined: examined,
    })
}

fn mask_set(n: usize, mask: u32) -> VertexSet {
    VertexSet::from_mask((0..n).map(|x| mask & (1 << x) != 0).collect())
}

/// Greedy `beta_S` over the supplied sets (each of mass at most 1/2): order
/// `S` by `h_S(x)/pi(x)` descending (ties by index) and keep the shortest
/// prefix carrying half of `h_S`.
pub fn beta_greedy_over(chain: &Chain, sets: &[VertexSet]) -> Result<BetaResult> {
    let mut best: Option<(f64, VertexSet, VertexSet)> = None;
    let mut examined = 0;
    for set in sets {
        let ps = chain.mass(set);
        if ps > 0.5 + 1e-12 {
            return Err(precondition(format!("set has mass {ps} > 1/2")));
        }
        examined += 1;
        let h = harmonic_stationary(chain, set)?;
        let (a, _) = greedy_prefix(&h, chain.pi(), 0.5 - HALF_TOL);
        let ratio = chain.mass(&a) / ps;
        if best.as_ref().map_or(true, |(b, _, _)| ratio < *b) {
            best = Some((ratio, set.clone(), a));
        }
    }
    let (beta, witness_s, witness_a) =
        best.ok_or_else(|| precondition("greedy beta needs at least one set"))?;
    Ok(BetaResult {
        beta,
        witness_s,
        witness_a,
        upper_bound: true,
        sets_examined: examined,
    })
}

/// Shortest prefix of `S` ordered by `h(x)/pi(x)` (descending, ties by
/// index) whose harmonic mass reaches `q`; returns the set and its mass.
fn greedy_prefix(h: &HarmonicMeasure, pi: &[f64], q: f64) -> (VertexSet, f64) {
    let support = h.support().indices();
    let w = h.weights();
    let mut order: Vec<usize> = (0..support.len()).collect();
    order.sort_by(|&i, &j| {
        let ri = w[i] / pi[support[i]];
        let rj = w[j] / pi[support[j]];
        rj.total_cmp(&ri).then(support[i].cmp(&support[j]))
    });
    let mut chosen = Vec::new();
    let mut acc = 0.0;
    for i in order {
        if acc >= q && !chosen.is_empty() {
            break;
        }
        chosen.push(support[i]);
        acc += w[i];
    }
    (
        VertexSet::new(h.support().universe(), chosen).expect("subset of support"),
        acc,
    )
}

fn sample_half_sets(chain: &Chain, samples: usize, seed: u64) -> Vec<VertexSet> {
    let mut rng = rng_from_seed(seed);
    let n = chain.n();
    let mut out = Vec::with_capacity(samples);
    while out.len() < samples {
        let density: f64 = rng.random_range(0.0..0.5);
        let mask: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < density).collect();
        let set = VertexSet::from_mask(mask);
        if !set.is_empty() && chain.mass(&set) <= 0.5 {
            out.push(set);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpanderCharacterization {
    pub beta: f64,
    pub phi: f64,
    pub pass: bool,
    /// Cheeger witness used for the closed form.
    pub folner: VertexSet,
    /// `h_S(dS)` computed exactly.
    pub folner_lhs: f64,
    /// `1 - (1 - phi) pi(S)`.
    pub folner_rhs: f64,
    pub folner_residual: f64,
}

/// `beta(G) <= Phi(G)` with both sides exact, plus the closed form of the
/// harmonic mass of the inner boundary of the Cheeger witness.
pub fn check_expander_characterization(chain: &Chain) -> Result<ExpanderCharacterization> {
    if chain.n() > EXACT_BETA_MAX_N {
        return Err(Error::SizeGuard {
            what: "expander characterization (exact beta and Phi)",
            limit: EXACT_BETA_MAX_N,
            n: chain.n(),
        });
    }
    let b = beta_exact(chain)?;
    let c = cheeger(chain, CheegerMode::Exact)?;
    let boundary = inner_boundary(chain, &c.witness);
    let folner_lhs = harmonic_stationary(chain, &c.witness)?.mass(&boundary);
    let phi = boundary_ratio(chain, &c.witness);
    let folner_rhs = 1.0 - (1.0 - phi) * chain.mass(&c.witness);
    Ok(ExpanderCharacterization {
        beta: b.beta,
        phi: c.phi,
        pass: b.beta <= c.phi + 1e-12,
        folner: c.witness,
        folner_lhs,
        folner_rhs,
        folner_residual: (folner_lhs - folner_rhs).abs(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportProfile {
    pub set: VertexSet,
    pub pi_mass: f64,
    pub harmonic_mass: f64,
    /// True when `pi` is not uniform and the greedy order is only a heuristic.
    pub heuristic: bool,
}

/// A small subset of `S` carrying at least `q` of `h_S`, chosen greedily by
/// `h_S(x) / pi(x)`.
pub fn support_profile(chain: &Chain, set: &VertexSet, q: f64) -> Result<SupportProfile> {
    let h = harmonic_stationary(chain, set)?;
    profile_of(&h, chain.pi(), q)
}

/// [`support_profile`] for a precomputed measure.
pub fn profile_of(h: &HarmonicMeasure, pi: &[f64], q: f64) -> Result<SupportProfile> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(precondition(format!(
            "profile mass q = {q} must lie in (0, 1]"
        )));
    }
    let (set, harmonic_mass) = greedy_prefix(h, pi, q - HALF_TOL);
    let first = pi[0];
    Ok(SupportProfile {
        pi_mass: set.mass(pi),
        set,
        harmonic_mass,
        heuristic: pi.iter().any(|&p| (p - first).abs() > 1e-15),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMonteCarlo {
    pub walks: usize,
    pub empirical: Vec<f64>,
    pub tv: f64,
    pub envelope: f64,
    pub pass: bool,
}

/// Empirical law of `X_{T_S}` from `walks` seeded walks started at `pi`,
/// compared with the exact `h_S` in total variation.
pub fn harmonic_monte_carlo(
    chain: &Chain,
    set: &VertexSet,
    walks: usize,
    seed: u64,
    cap: usize,
) -> Result<HarmonicMonteCarlo> {
    let exact = harmonic_stationary(chain, set)?;
    let start = MeasureOnSet::dense(chain.pi().to_vec())?;
    let mut rng = rng_from_seed(seed);
    let mut hits = Vec::with_capacity(walks);
    for _ in 0..walks {
        let x0 = sample_measure(&start, &mut rng);
        let mut x = x0;
        let mut steps = 0;
        while !set.contains(x) {
            x = chain.step(x, &mut rng);
            steps += 1;
            if steps > cap {
                return Err(Error::StepCap {
                    cap: cap as u64,
                    seed,
                });
            }
        }
        hits.push(set.indices().binary_search(&x).unwrap());
    }
    let empirical = frequencies(&hits, set.len());
    let tv = tv_distance(&empirical, exact.weights());
    let envelope = tv_envelope(exact.weights(), walks);
    Ok(HarmonicMonteCarlo {
        walks,
        empirical,
        tv,
        envelope,
        pass: tv <= envelope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::BuildOptions;
    use crate::families::{generate, FamilySpec};
    use crate::hitting::{uniform_transience, UMode};
    use approx::assert_abs_diff_eq;

    fn k4() -> Chain {
        generate(&FamilySpec::Complete { n: 4 }).unwrap()
    }

    fn lazy_path3() -> Chain {
        Chain::from_weights_with(
            3,
            &[(0, 1, 1.0), (1, 2, 1.0)],
            BuildOptions { auto_lazify: false },
        )
        .unwrap()
        .lazify()
    }

    fn set(n: usize, xs: &[usize]) -> VertexSet {
        VertexSet::new(n, xs.iter().copied()).unwrap()
    }

    #[test]
    fn k4_pair_from_outside_is_uniform() {
        let h = harmonic_from(&k4(), &set(4, &[0, 1]), 3).unwrap();
        assert_abs_diff_eq!(h.weights()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(h.weights()[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn start_inside_is_point_mass() {
        let h = harmonic_from(&k4(), &set(4, &[0, 1]), 1).unwrap();
        assert_eq!(h.weights(), &[0.0, 1.0]);
    }

    #[test]
    fn lazy_path_middle_is_fair() {
        let c = lazy_path3();
        let s = set(3, &[0, 2]);
        let h = harmonic_from(&c, &s, 1).unwrap();
        assert_abs_diff_eq!(h.weights()[0], 0.5, epsilon = 1e-12);
        let hs = harmonic_stationary(&c, &s).unwrap();
        assert_abs_diff_eq!(hs.weights()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(hs.weights()[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn full_set_gives_pi() {
        let c = generate(&FamilySpec::Path { n: 5 }).unwrap();
        let h = harmonic_stationary(&c, &VertexSet::full(5)).unwrap();
        for x in 0..5 {
            assert_abs_diff_eq!(h.weights()[x], c.pi()[x], epsilon = 1e-15);
        }
    }

    #[test]
    fn complete_graph_stationary_is_uniform_on_s() {
        let c = generate(&FamilySpec::Complete { n: 7 }).unwrap();
        let s = set(7, &[1, 4, 5]);
        let h = harmonic_stationary(&c, &s).unwrap();
        for w in h.weights() {
            assert_abs_diff_eq!(*w, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stationary_equals_average_of_rows() {
        let c = generate(&FamilySpec::TreeExpander { k: 3, seed: 4 }).unwrap();
        let s = set(c.n(), &[0, 3, 9, 12]);
        let hs = harmonic_stationary(&c, &s).unwrap();
        let rows = HarmonicMatrix::new(&c, &s).unwrap();
        for x in s.iter() {
            let avg: f64 = (0..c.n()).map(|y| c.pi()[y] * rows.get(y, x)).sum();
            assert_abs_diff_eq!(avg, hs.weight(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn reverse_path_degenerate_pairs() {
        let c = k4();
        let s = set(4, &[0, 1]);
        let terms = reversal_terms(&c, &s).unwrap();
        // y in S: Pr_x[T_y < T_S^+] = 1{x = y}, Pr_y[T_S < T_y^+] = 1
        assert_eq!(terms.visit[(0, 0)], 1.0);
        assert_eq!(terms.visit[(0, 1)], 0.0);
        assert_eq!(terms.escape[0], 1.0);
        let check = check_reverse_path(&c, &s).unwrap();
        assert!(check.max_residual <= 1e-12, "{check:?}");
        assert!(check_reverse_path(&c, &VertexSet::full(4)).is_err());
    }

    #[test]
    fn sum_path_reversal_k4_singleton() {
        let c = k4();
        let s = set(4, &[0]);
        let r = check_sum_path_reversal(&c, &s, 0, None).unwrap();
        // 1 (the start) + 3 * Pr_0[T_y < T_0^+] = 1 + 3 * 2/3
        assert_abs_diff_eq!(r.lhs, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs, 4.0, epsilon = 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn sum_path_reversal_full_set() {
        let c = k4();
        let r = check_sum_path_reversal(&c, &VertexSet::full(4), 2, None).unwrap();
        assert_abs_diff_eq!(r.lhs, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.rhs, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sum_path_reversal_monte_carlo() {
        let c = generate(&FamilySpec::Torus { n: 4, d: 2 }).unwrap();
        let s = set(16, &[0, 5, 10]);
        let r = check_sum_path_reversal(
            &c,
            &s,
            5,
            Some(McOptions {
                walks: 20_000,
                seed: 3,
            }),
        )
        .unwrap();
        let mc = r.mc.unwrap();
        assert!(mc.within, "{r:?}");
        assert!(r.pass);
    }

    #[test]
    fn har_and_main_bounds_small_examples() {
        let c = lazy_path3();
        let s = set(3, &[0, 2]);
        let u = uniform_transience(&c, UMode::Full).unwrap();
        let har = bound_har(&c, &s, &u).unwrap();
        assert!(har.pass(), "{har:?}");
        assert_abs_diff_eq!(har.points[0].lhs, 0.5, epsilon = 1e-12);
        let k = k4();
        let uk = uniform_transience(&k, UMode::Full).unwrap();
        let r = bound_har(&k, &set(4, &[0, 1]), &uk).unwrap();
        assert!(r.pass() && r.max_ratio < 1.0, "{r:?}");
        let main = bound_main(&k, &set(4, &[0, 1]), &uk).unwrap();
        assert!(main.pass());
        let full = bound_main(&k, &VertexSet::full(4), &uk).unwrap();
        assert!(full.pass());
        assert_abs_diff_eq!(full.points[0].lhs, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn bounds_reject_sampled_u() {
        let k = k4();
        let u = uniform_transience(&k, UMode::Sampled { k: 3, seed: 0 }).unwrap();
        assert!(bound_har(&k, &set(4, &[0]), &u).is_err());
    }

    #[test]
    fn no_makarov_cases() {
        let c = generate(&FamilySpec::RandomRegular {
            n: 16,
            d: 3,
            seed: 1,
        })
        .unwrap();
        let s = set(16, &[0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(
            bound_no_makarov(&c, &s, &VertexSet::empty(16)).unwrap(),
            NoMakarov::Trivial
        );
        let small = bound_no_makarov(&c, &s, &set(16, &[3])).unwrap();
        assert_eq!(small.pass(), Some(true), "{small:?}");
        let half = bound_no_makarov(&c, &s, &set(16, &[0, 1, 2, 3])).unwrap();
        assert_eq!(half.pass(), Some(true));
        let big = bound_no_makarov(&c, &s, &set(16, &[0, 1, 2, 3, 4])).unwrap();
        assert!(matches!(big, NoMakarov::Skipped { .. }));
        assert!(bound_no_makarov(&c, &s, &set(16, &[9])).is_err());
    }

    #[test]
    fn beta_k4_exact_and_greedy() {
        let c = k4();
        let b = beta(&c, BetaMode::Exact).unwrap();
        assert_abs_diff_eq!(b.beta, 0.5, epsilon = 1e-15);
        assert_eq!(b.witness_s.len(), 2);
        assert_eq!(b.witness_a.len(), 1);
        let g = beta(
            &c,
            BetaMode::Greedy {
                samples: 30,
                seed: 2,
            },
        )
        .unwrap();
        assert!(g.upper_bound && g.beta >= b.beta);
    }

    #[test]
    fn greedy_on_uniform_measure_takes_half() {
        let c = generate(&FamilySpec::Complete { n: 8 }).unwrap();
        let s = set(8, &[0, 1, 2, 3]);
        let g = beta_greedy_over(&c, std::slice::from_ref(&s)).unwrap();
        assert_eq!(g.witness_a.len(), 2);
        let big = generate(&FamilySpec::Complete { n: 16 }).unwrap();
        let s8 = set(16, &[0, 2, 4, 6, 8, 10, 12, 14]);
        let p = support_profile(&big, &s8, 0.5).unwrap();
        assert_eq!(p.set.len(), 4);
        assert!(!p.heuristic);
        let all = support_profile(&big, &s8, 1.0).unwrap();
        assert_eq!(all.set, s8);
        assert!(support_profile(&big, &s8, 0.0).is_err());
    }

    #[test]
    fn expander_characterization_small() {
        let k = check_expander_characterization(&k4()).unwrap();
        assert_abs_diff_eq!(k.beta, 0.5, epsilon = 1e-15);
        assert_eq!(k.phi, 1.0);
        assert!(k.pass && k.folner_residual <= 1e-8);
        let c8 = Chain::from_weights_with(
            8,
            &(0..8).map(|i| (i, (i + 1) % 8, 1.0)).collect::<Vec<_>>(),
            BuildOptions { auto_lazify: false },
        )
        .unwrap()
        .lazify();
        let r = check_expander_characterization(&c8).unwrap();
        assert!(r.pass && r.beta <= 0.5 + 1e-12, "{r:?}");
        assert!(r.folner_residual <= 1e-8);
    }

    #[test]
    fn lazification_preserves_harmonic_measure() {
        let c = generate(&FamilySpec::RandomRegular {
            n: 20,
            d: 3,
            seed: 8,
        })
        .unwrap();
        let lazy = c.lazify();
        let s = set(20, &[2, 7, 11]);
        let a = harmonic_stationary(&c, &s).unwrap();
        let b = harmonic_stationary(&lazy, &s).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-9);
        }
        let a = harmonic_from(&c, &s, 0).unwrap();
        let b = harmonic_from(&lazy, &s, 0).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-9);
        }
    }

    #[test]
    fn monte_carlo_matches_exact() {
        let c = generate(&FamilySpec::Complete { n: 6 }).unwrap();
        let s = set(6, &[0, 3]);
        let r = harmonic_monte_carlo(&c, &s, 20_000, 4, 100_000).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
