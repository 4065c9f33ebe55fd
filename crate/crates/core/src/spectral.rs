//! Spectrum, spectral gap, mixing time and the vertex-boundary Cheeger
//! constant.
//!
//! Eigenvalues are computed from the symmetric matrix `D^{1/2} P D^{-1/2}`
//! (`D = diag(pi)`), which is similar to `P` for reversible chains.
//!
//! The Cheeger constant here is `min pi(dS) / pi(S)` over `0 < pi(S) <= 1/2`
//! with the *inner vertex boundary* `dS = {x in S : P(y, x) > 0 for some y
//! outside S}`. This is not the usual edge conductance `Q(S, S^c) / pi(S)`:
//! for the complete graph every vertex of `S` is on its inner boundary, so
//! the constant equals 1.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{precondition, Error, Result};
use crate::linalg::matrix_power;
use crate::set::VertexSet;

/// Gaps at or below this are treated as degenerate.
pub const MIN_GAP: f64 = 1e-12;

/// Largest state space for exhaustive Cheeger enumeration.
pub const EXACT_CHEEGER_MAX_N: usize = 20;

/// Envelope for the empirical Cheeger/gap ratios (the universal constant is
/// not known explicitly).
pub const CHEEGER_GAP_ENVELOPE: f64 = 8.0;

const HALF_MASS: f64 = 0.5 + 1e-12;

/// Eigenpairs of the symmetrized kernel, eigenvalues in decreasing order.
#[derive(Clone, Debug)]
pub(crate) struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigensystem {
    pub fn compute(chain: &Chain) -> Result<Self> {
        let n = chain.n();
        let sqrt_pi: Vec<f64> = chain.pi().iter().map(|p| p.sqrt()).collect();
        let p = chain.kernel();
        let mut a = DMatrix::from_fn(n, n, |x, y| sqrt_pi[x] * p[(x, y)] / sqrt_pi[y]);
        for x in 0..n {
            for y in (x + 1)..n {
                let avg = 0.5 * (a[(x, y)] + a[(y, x)]);
                a[(x, y)] = avg;
                a[(y, x)] = avg;
            }
        }
        let eig = a
            .clone()
            .try_symmetric_eigen(f64::EPSILON, 1000 * n.max(16))
            .ok_or_else(|| {
                Error::Numerical(format!(
                    "symmetric eigensolver did not converge (n = {n}, max |entry| = {:e}, pi_min = {:e})",
                    a.amax(),
                    chain.pi_min()
                ))
            })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        if (values[0] - 1.0).abs() > 1e-9 {
            return Err(Error::Numerical(format!(
                "leading eigenvalue {} differs from 1 (n = {n})",
                values[0]
            )));
        }
        Ok(Self { values, vectors })
    }

    pub fn lazified(&self) -> Self {
        Self {
            values: self.values.iter().map(|l| 0.5 * (1.0 + l)).collect(),
            vectors: self.vectors.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// `1 = l_1 >= l_2 >= ... >= l_n`.
    pub eigenvalues: Vec<f64>,
    /// `max_{j > 1} |l_j|`.
    pub lambda: f64,
    /// `1 - lambda`.
    pub gap: f64,
    /// `ceil(ln(2 / pi_min) / gap)`; absent when the gap is degenerate.
    pub t_mix: Option<u64>,
}

pub fn spectrum(chain: &Chain) -> Result<SpectralSummary> {
    let eig = chain.eigensystem()?;
    let lambda = eig.values[1..].iter().map(|l| l.abs()).fold(0.0, f64::max);
    let gap = 1.0 - lambda;
    let t_mix = mixing_time_formula(chain.pi_min(), gap).ok();
    Ok(SpectralSummary {
        eigenvalues: eig.values.clone(),
        lambda,
        gap,
        t_mix,
    })
}

/// `ceil(ln(2 / pi_min) / gap)`, natural log.
pub fn mixing_time_formula(pi_min: f64, gap: f64) -> Result<u64> {
    if !(gap > MIN_GAP) {
        return Err(precondition(format!("degenerate spectral gap {gap:e}")));
    }
    Ok(((2.0 / pi_min).ln() / gap).ceil().max(1.0) as u64)
}

pub fn mixing_time(chain: &Chain) -> Result<u64> {
    let s = spectrum(chain)?;
    mixing_time_formula(chain.pi_min(), s.gap)
}

/// Worst ratios `P^t(x, y) / pi(y)` against the sandwich `[1/2, 3/2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixSandwich {
    pub t: u64,
    pub threshold: f64,
    pub min_ratio: f64,
    pub min_at: (usize, usize),
    pub max_ratio: f64,
    pub max_at: (usize, usize),
    pub pass: bool,
}

/// Computes `P^t` exactly and checks `pi(y)/2 <= P^t(x,y) <= 3 pi(y)/2`
/// for all pairs. Requires `t >= ln(2/pi_min) / gap`.
pub fn check_mix_sandwich(chain: &Chain, t: u64) -> Result<MixSandwich> {
    let s = spectrum(chain)?;
    if !(s.gap > MIN_GAP) {
        return Err(precondition(format!("degenerate spectral gap {:e}", s.gap)));
    }
    let threshold = (2.0 / chain.pi_min()).ln() / s.gap;
    if (t as f64) < threshold {
        return Err(precondition(format!(
            "t = {t} is below the mixing threshold {threshold:.4}"
        )));
    }
    let pt = matrix_power(chain.kernel(), t);
    let pi = chain.pi();
    let n = chain.n();
    let mut out = MixSandwich {
        t,
        threshold,
        min_ratio: f64::INFINITY,
        min_at: (0, 0),
        max_ratio: f64::NEG_INFINITY,
        max_at: (0, 0),
        pass: false,
    };
    for x in 0..n {
        for y in 0..n {
            let r = pt[(x, y)] / pi[y];
            if r < out.min_ratio {
                out.min_ratio = r;
                out.min_at = (x, y);
            }
            if r > out.max_ratio {
                out.max_ratio = r;
                out.max_at = (x, y);
            }
        }
    }
    out.pass = out.min_ratio >= 0.5 && out.max_ratio <= 1.5;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheegerMode {
    Exact,
    Sweep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheegerResult {
    pub phi: f64,
    pub witness: VertexSet,
    pub mode: CheegerMode,
    /// Set for sweep results, which only bound the constant from above.
    pub upper_bound: bool,
}

/// `{x in S : P(y, x) > 0 for some y outside S}`.
pub fn inner_boundary(chain: &Chain, set: &VertexSet) -> VertexSet {
    let mask = (0..chain.n())
        .map(|x| set.contains(x) && chain.neighbors(x).any(|y| !set.contains(y)))
        .collect();
    VertexSet::from_mask(mask)
}

/// `pi(dS) / pi(S)`, both masses summed in index order.
pub fn boundary_ratio(chain: &Chain, set: &VertexSet) -> f64 {
    let pi = chain.pi();
    let mut mass = 0.0;
    let mut boundary = 0.0;
    for x in set.iter() {
        mass += pi[x];
        if chain.neighbors(x).any(|y| !set.contains(y)) {
            boundary += pi[x];
        }
    }
    boundary / mass
}

pub fn cheeger(chain: &Chain, mode: CheegerMode) -> Result<CheegerResult> {
    match mode {
        CheegerMode::Exact => cheeger_exact(chain),
        CheegerMode::Sweep => cheeger_sweep(chain),
    }
}

fn cheeger_exact(chain: &Chain) -> Result<CheegerResult> {
    let n = chain.n();
    if n > EXACT_CHEEGER_MAX_N {
        return Err(Error::SizeGuard {
            what: "exact Cheeger enumeration (use sweep mode)",
            limit: EXACT_CHEEGER_MAX_N,
            n,
        });
    }
    let pi = chain.pi();
    // in_from[x]: states y != x with P(y, x) > 0
    let in_from: Vec<u32> = (0..n)
        .map(|x| chain.neighbors(x).fold(0u32, |m, y| m | (1 << y)))
        .collect();
    let mut best: Option<(f64, u32)> = None;
    for mask in 1u32..(1u32 << n) {
        let mut mass = 0.0;
        let mut boundary = 0.0;
        let mut bits = mask;
        while bits != 0 {
            let x = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            mass += pi[x];
            if in_from[x] & !mask != 0 {
                boundary += pi[x];
            }
        }
        if mass > HALF_MASS {
            continue;
        }
        let ratio = boundary / mass;
        if best.map_or(true, |(b, _)| ratio < b) {
            best = Some((ratio, mask));
        }
    }
    let (_, mask) = best.ok_or_else(|| Error::Numerical("no set with pi(S) <= 1/2".into()))?;
    let witness = VertexSet::from_mask((0..n).map(|x| mask & (1 << x) != 0).collect());
    Ok(CheegerResult {
        phi: boundary_ratio(chain, &witness),
        witness,
        mode: CheegerMode::Exact,
        upper_bound: false,
    })
}

/// Sweep over level sets of the second eigenvector (both orientations).
fn cheeger_sweep(chain: &Chain) -> Result<CheegerResult> {
    let n = chain.n();
    let eig = chain.eigensystem()?;
    let pi = chain.pi();
    let f: Vec<f64> = (0..n)
        .map(|x| eig.vectors[(x, 1.min(n - 1))] / pi[x].sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
    let mut best: Option<(f64, VertexSet)> = None;
    let mut consider = |set: VertexSet| {
        if set.is_empty() || chain.mass(&set) > HALF_MASS {
            return;
        }
        let r = boundary_ratio(chain, &set);
        if best.as_ref().map_or(true, |(b, _)| r < *b) {
            best = Some((r, set));
        }
    };
    for k in 1..n {
        let mut low = vec![false; n];
        for &x in &order[..k] {
            low[x] = true;
        }
        let high: Vec<bool> = low.iter().map(|b| !b).collect();
        consider(VertexSet::from_mask(low));
        consider(VertexSet::from_mask(high));
    }
    let (phi, witness) =
        best.ok_or_else(|| Error::Numerical("sweep found no set with pi(S) <= 1/2".into()))?;
    Ok(CheegerResult {
        phi,
        witness,
        mode: CheegerMode::Sweep,
        upper_bound: true,
    })
}

/// Ratios `(1 - lambda) / phi^2` and `phi / (1 - lambda)` with the exact
/// Cheeger constant; both are expected below [`CHEEGER_GAP_ENVELOPE`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerGapRelation {
    pub phi: f64,
    pub gap: f64,
    pub gap_over_phi_sq: f64,
    pub phi_over_gap: f64,
    pub envelope: f64,
    pub pass: bool,
}

pub fn check_cheeger_gap_relation(chain: &Chain) -> Result<CheegerGapRelation> {
    let phi = cheeger_exact(chain)?.phi;
    let gap = spectrum(chain)?.gap;
    let gap_over_phi_sq = gap / (phi * phi);
    let phi_over_gap = phi / gap;
    Ok(CheegerGapRelation {
        phi,
        gap,
        gap_over_phi_sq,
        phi_over_gap,
        envelope: CHEEGER_GAP_ENVELOPE,
        pass: gap_over_phi_sq <= CHEEGER_GAP_ENVELOPE && phi_over_gap <= CHEEGER_GAP_ENVELOPE,
    })
}
