//! Exact hitting and return expectations, return-time tails, escape
//! probabilities and the uniform transience constant `u(P)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{precondition, Error, Result};
use crate::linalg::{solve_checked, KilledSystem};
use crate::rng::rng_from_seed;
use crate::set::VertexSet;
use crate::spectral::spectrum;

/// Largest chain accepted by the full `u(P)` table.
pub const FULL_U_MAX_N: usize = 1024;

/// Hitting expectations for a target set `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingStats {
    pub target: VertexSet,
    /// `E_x[T_S]`, zero on `S`.
    pub hit: Vec<f64>,
    /// `E_x[T_S^+] = 1 + sum_z P(x,z) E_z[T_S]`.
    pub ret: Vec<f64>,
    /// `E_pi[T_S^+]`.
    pub stationary_return: f64,
}

pub fn expected_hitting(chain: &Chain, target: &VertexSet) -> Result<HittingStats> {
    target.require_nonempty("target set")?;
    target.require_universe(chain.n())?;
    let sys = KilledSystem::new(chain, target.mask(), false)?;
    let h = sys.solve_vec(&DVector::from_element(sys.size(), 1.0))?;
    let mut hit = vec![0.0; chain.n()];
    for (i, &x) in sys.free().iter().enumerate() {
        hit[x] = h[i];
    }
    let ret: Vec<f64> = (0..chain.n())
        .map(|x| 1.0 + chain.row(x).map(|(z, p)| p * hit[z]).sum::<f64>())
        .collect();
    let stationary_return = chain.pi().iter().zip(&ret).map(|(p, r)| p * r).sum();
    Ok(HittingStats {
        target: target.clone(),
        hit,
        ret,
        stationary_return,
    })
}

/// Exact `Pr_pi[T_S^+ > t]` next to the spectral bound
/// `(1 - (1 - lambda) pi(S))^{t/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: u64,
    pub exact: f64,
    pub bound: f64,
}

impl TailPoint {
    pub fn holds(&self) -> bool {
        self.exact <= self.bound + 1e-12
    }
}

pub fn return_tail(chain: &Chain, target: &VertexSet, t: u64) -> Result<TailPoint> {
    Ok(*return_tail_curve(chain, target, t)?.last().unwrap())
}

/// Tail values for every `t` in `0..=t_max`, iterating the sub-stochastic
/// operator `Q(x, y) = P(x, y) 1{y not in S}` on the constant vector.
pub fn return_tail_curve(chain: &Chain, target: &VertexSet, t_max: u64) -> Result<Vec<TailPoint>> {
    target.require_nonempty("target set")?;
    target.require_universe(chain.n())?;
    let gap = spectrum(chain)?.gap;
    let base = (1.0 - gap * chain.mass(target)).clamp(0.0, 1.0);
    let n = chain.n();
    let pi = chain.pi();
    // Sparse rows restricted to off-target columns.
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|x| chain.row(x).filter(|(y, _)| !target.contains(*y)).collect())
        .collect();
    let mut v = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut out = Vec::with_capacity(t_max as usize + 1);
    for t in 0..=t_max {
        let exact: f64 = pi.iter().zip(&v).map(|(p, q)| p * q).sum();
        out.push(TailPoint {
            t,
            exact,
            bound: base.powf(t as f64 / 2.0),
        });
        if t == t_max {
            break;
        }
        for (x, row) in rows.iter().enumerate() {
            next[x] = row.iter().map(|&(y, p)| p * v[y]).sum();
        }
        std::mem::swap(&mut v, &mut next);
    }
    Ok(out)
}

/// `Pr_x[T_y < T_x^+]` from the absorbing system with `q(y) = 1`, `q(x) = 0`.
pub fn escape_prob(chain: &Chain, x: usize, y: usize) -> Result<f64> {
    if x == y || x >= chain.n() || y >= chain.n() {
        return Err(precondition(format!(
            "escape probability needs distinct states, got ({x}, {y})"
        )));
    }
    let mut absorbed = vec![false; chain.n()];
    absorbed[x] = true;
    absorbed[y] = true;
    let sys = KilledSystem::new(chain, &absorbed, false)?;
    let rhs = DVector::from_iterator(sys.size(), sys.free().iter().map(|&z| chain.p(z, y)));
    let q = sys.solve_vec(&rhs)?;
    Ok(chain
        .row(x)
        .map(|(z, p)| {
            if z == y {
                p
            } else {
                sys.position(z).map_or(0.0, |i| p * q[i])
            }
        })
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum UMode {
    Full,
    /// `k` random ordered pairs; the minimum is an upper bound on `u`.
    Sampled {
        k: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeTable {
    pub u: f64,
    pub argmin: (usize, usize),
    /// True when only sampled pairs were evaluated (upper bound on `u`).
    pub upper_bound: bool,
    pub pairs_evaluated: usize,
    /// `table[(x, y)] = Pr_x[T_y < T_x^+]` (full mode; diagonal is 1).
    pub table: Option<DMatrix<f64>>,
}

/// `u(P) = min_{x != y} Pr_x[T_y < T_x^+]`.
///
/// Full mode uses the fundamental matrix `Z = (I - P + 1 pi^T)^{-1}`:
/// `E_x[T_y] = (Z(y,y) - Z(x,y)) / pi(y)` and
/// `Pr_x[T_y < T_x^+] = 1 / (pi(x) (E_x[T_y] + E_y[T_x]))`.
pub fn uniform_transience(chain: &Chain, mode: UMode) -> Result<EscapeTable> {
    let n = chain.n();
    if n < 2 {
        return Err(precondition("u(P) needs at least two states"));
    }
    match mode {
        UMode::Full => {
            if n > FULL_U_MAX_N {
                return Err(Error::SizeGuard {
                    what: "full u(P) table",
                    limit: FULL_U_MAX_N,
                    n,
                });
            }
            let hit = all_pairs_hitting(chain)?;
            let pi = chain.pi();
            let mut table = DMatrix::from_element(n, n, 1.0);
            let mut best = (f64::INFINITY, (0, 0));
            for x in 0..n {
                for y in 0..n {
                    if x == y {
                        continue;
                    }
                    let e = 1.0 / (pi[x] * (hit[(x, y)] + hit[(y, x)]));
                    table[(x, y)] = e;
                    if e < best.0 {
                        best = (e, (x, y));
                    }
                }
            }
            Ok(EscapeTable {
                u: best.0,
                argmin: best.1,
                upper_bound: false,
                pairs_evaluated: n * (n - 1),
                table: Some(table),
            })
        }
        UMode::Sampled { k, seed } => {
            if k == 0 {
                return Err(precondition("sampled u(P) needs k >= 1"));
            }
            let mut rng = rng_from_seed(seed);
            let mut best = (f64::INFINITY, (0, 0));
            for _ in 0..k {
                let x = rng.random_range(0..n);
                let mut y = rng.random_range(0..n - 1);
                if y >= x {
                    y += 1;
                }
                let e = escape_prob(chain, x, y)?;
                if e < best.0 {
                    best = (e, (x, y));
                }
            }
            Ok(EscapeTable {
                u: best.0,
                argmin: best.1,
                upper_bound: true,
                pairs_evaluated: k,
                table: None,
            })
        }
    }
}

/// `H[(x, y)] = E_x[T_y]` for all pairs via the fundamental matrix.
pub fn all_pairs_hitting(chain: &Chain) -> Result<DMatrix<f64>> {
    let n = chain.n();
    let pi = chain.pi();
    let m = DMatrix::from_fn(n, n, |x, y| {
        let id = if x == y { 1.0 } else { 0.0 };
        id - chain.p(x, y) + pi[y]
    });
    let z = solve_checked(&m, &DMatrix::identity(n, n))?;
    Ok(DMatrix::from_fn(n, n, |x, y| {
        if x == y {
            0.0
        } else {
            (z[(y, y)] - z[(x, y)]) / pi[y]
        }
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommuteCheck {
    pub x: usize,
    pub y: usize,
    /// `Pr_x[T_y < T_x^+]`.
    pub lhs: f64,
    /// `1 / (pi(x) (E_x[T_y^+] + E_y[T_x^+]))`.
    pub rhs: f64,
    pub residual: f64,
}

/// Both sides of the commute-time identity from independent solves.
pub fn check_commute_identity(chain: &Chain, x: usize, y: usize) -> Result<CommuteCheck> {
    let lhs = escape_prob(chain, x, y)?;
    let to_y = expected_hitting(chain, &VertexSet::singleton(chain.n(), y)?)?;
    let to_x = expected_hitting(chain, &VertexSet::singleton(chain.n(), x)?)?;
    // For x != y, T_y^+ = T_y under Pr_x.
    let rhs = 1.0 / (chain.pi()[x] * (to_y.hit[x] + to_x.hit[y]));
    Ok(CommuteCheck {
        x,
        y,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// `E_pi[T_S^+]` against the geometric domination `2 / ((1 - lambda) pi(S)) + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnDomination {
    pub stationary_return: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn check_return_domination(chain: &Chain, target: &VertexSet) -> Result<ReturnDomination> {
    let stats = expected_hitting(chain, target)?;
    let gap = spectrum(chain)?.gap;
    let bound = 2.0 / (gap * chain.mass(target)) + 1.0;
    Ok(ReturnDomination {
        stationary_return: stats.stationary_return,
        bound,
        pass: stats.stationary_return <= bound,
    })
}

/// `u pi_max / ((1 - lambda) pi_min)`: the implied constant in the lower
/// bound on `u(P)`.
pub fn transience_constant(chain: &Chain, table: &EscapeTable) -> Result<f64> {
    let gap = spectrum(chain)?.gap;
    Ok(table.u * chain.pi_max() / (gap * chain.pi_min()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::BuildOptions;
    use crate::families::{generate, FamilySpec};
    use approx::assert_abs_diff_eq;

    fn k4() -> Chain {
        generate(&FamilySpec::Complete { n: 4 }).unwrap()
    }

    fn c4() -> Chain {
        let edges: Vec<_> = (0..4).map(|i| (i, (i + 1) % 4, 1.0)).collect();
        Chain::from_weights_with(4, &edges, BuildOptions { auto_lazify: false }).unwrap()
    }

    #[test]
    fn k4_hitting_is_geometric() {
        let s = VertexSet::singleton(4, 0).unwrap();
        let stats = expected_hitting(&k4(), &s).unwrap();
        assert_eq!(stats.hit[0], 0.0);
        for x in 1..4 {
            assert_abs_diff_eq!(stats.hit[x], 3.0, epsilon = 1e-12);
        }
        // Kac: E_v[T_v^+] = 1 / pi(v)
        assert_abs_diff_eq!(stats.ret[0], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn lazy_hitting_doubles() {
        let s = VertexSet::new(4, [0, 1]).unwrap();
        let plain = expected_hitting(&k4(), &s).unwrap();
        let lazy = expected_hitting(&k4().lazify(), &s).unwrap();
        for x in 0..4 {
            assert_abs_diff_eq!(lazy.hit[x], 2.0 * plain.hit[x], epsilon = 1e-12);
        }
    }

    #[test]
    fn k4_tail_one_step() {
        let s = VertexSet::singleton(4, 0).unwrap();
        let p = return_tail(&k4(), &s, 1).unwrap();
        assert_abs_diff_eq!(p.exact, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(p.bound, (5.0f64 / 6.0).sqrt(), epsilon = 1e-12);
        assert!(p.holds());
        let p0 = return_tail(&k4(), &s, 0).unwrap();
        assert_eq!(p0.exact, 1.0);
    }

    #[test]
    fn c4_escape_probabilities() {
        let c = c4();
        assert_abs_diff_eq!(escape_prob(&c, 0, 1).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(escape_prob(&c, 0, 2).unwrap(), 0.5, epsilon = 1e-12);
        assert!(escape_prob(&c, 1, 1).is_err());
    }

    #[test]
    fn k4_escape_probabilities() {
        let c = k4();
        for x in 0..4 {
            for y in 0..4 {
                if x != y {
                    assert_abs_diff_eq!(escape_prob(&c, x, y).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn uniform_transience_examples() {
        let k = uniform_transience(&k4(), UMode::Full).unwrap();
        assert_abs_diff_eq!(k.u, 2.0 / 3.0, epsilon = 1e-12);
        assert!(!k.upper_bound);
        let c = uniform_transience(&c4(), UMode::Full).unwrap();
        assert_abs_diff_eq!(c.u, 0.5, epsilon = 1e-12);
        let (x, y) = c.argmin;
        assert_eq!((x + 2) % 4, y);
    }

    #[test]
    fn sampled_u_is_an_upper_bound() {
        let chain = generate(&FamilySpec::RandomRegular {
            n: 24,
            d: 3,
            seed: 9,
        })
        .unwrap();
        let full = uniform_transience(&chain, UMode::Full).unwrap();
        let sampled = uniform_transience(&chain, UMode::Sampled { k: 20, seed: 1 }).unwrap();
        assert!(sampled.upper_bound);
        assert!(sampled.u >= full.u - 1e-12);
    }

    #[test]
    fn full_table_matches_direct_escape() {
        let chain = generate(&FamilySpec::TreeExpander { k: 3, seed: 2 }).unwrap();
        let table = uniform_transience(&chain, UMode::Full)
            .unwrap()
            .table
            .unwrap();
        for (x, y) in [(0, 5), (7, 3), (14, 0)] {
            assert_abs_diff_eq!(
                table[(x, y)],
                escape_prob(&chain, x, y).unwrap(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn commute_identity_examples() {
        let c = check_commute_identity(&c4(), 0, 1).unwrap();
        assert_abs_diff_eq!(c.lhs, 2.0 / 3.0, epsilon = 1e-12);
        assert!(c.residual <= 1e-12);
        let k = check_commute_identity(&k4(), 2, 3).unwrap();
        assert_abs_diff_eq!(k.rhs, 2.0 / 3.0, epsilon = 1e-12);
        let chain = generate(&FamilySpec::RandomRegular {
            n: 40,
            d: 4,
            seed: 3,
        })
        .unwrap();
        assert!(check_commute_identity(&chain, 3, 17).unwrap().residual <= 1e-8);
    }

    #[test]
    fn return_domination_on_small_chains() {
        let chain = generate(&FamilySpec::Torus { n: 5, d: 2 }).unwrap();
        for set in [vec![0], vec![0, 7, 12], (0..12).collect()] {
            let s = VertexSet::new(chain.n(), set).unwrap();
            assert!(check_return_domination(&chain, &s).unwrap().pass);
        }
    }
}
