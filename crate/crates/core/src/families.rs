//! Graph families used throughout the verification corpus. Every generator
//! returns the simple random walk on the graph (auto-lazified when bipartite).

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{precondition, validation, Error, Result};
use crate::graph::{bfs, bfs_from_set, UNREACHABLE};
use crate::rng::{rng_from_seed, SimRng};
use crate::set::VertexSet;

/// Redraw budget for the pairing model.
pub const PAIRING_BUDGET: usize = 10_000;

/// Largest lamplighter state space accepted (dense storage).
pub const MAX_DENSE_STATES: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    Complete {
        n: usize,
    },
    Cycle {
        n: usize,
    },
    Path {
        n: usize,
    },
    /// `(Z/nZ)^d`.
    Torus {
        n: usize,
        d: usize,
    },
    RandomRegular {
        n: usize,
        d: usize,
        seed: u64,
    },
    /// Binary tree of depth `k` with a random 3-regular graph on its leaves.
    TreeExpander {
        k: usize,
        seed: u64,
    },
    /// `{0,1} wr Z/nZ` with generators toggle and step.
    Lamplighter {
        n: usize,
    },
}

/// Family names without parameters, as used on the command line and in
/// suite configs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Complete,
    Cycle,
    Path,
    Torus,
    RandomRegular,
    TreeExpander,
    Lamplighter,
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "complete" => Self::Complete,
            "cycle" => Self::Cycle,
            "path" => Self::Path,
            "torus" => Self::Torus,
            "random_regular" => Self::RandomRegular,
            "tree_expander" => Self::TreeExpander,
            "lamplighter" => Self::Lamplighter,
            other => return Err(validation(format!("unknown family `{other}`"))),
        })
    }
}

impl FamilySpec {
    pub fn kind(&self) -> FamilyKind {
        match self {
            Self::Complete { .. } => FamilyKind::Complete,
            Self::Cycle { .. } => FamilyKind::Cycle,
            Self::Path { .. } => FamilyKind::Path,
            Self::Torus { .. } => FamilyKind::Torus,
            Self::RandomRegular { .. } => FamilyKind::RandomRegular,
            Self::TreeExpander { .. } => FamilyKind::TreeExpander,
            Self::Lamplighter { .. } => FamilyKind::Lamplighter,
        }
    }

    /// Number of vertices of the generated graph.
    pub fn size(&self) -> usize {
        match *self {
            Self::Complete { n } | Self::Cycle { n } | Self::Path { n } => n,
            Self::Torus { n, d } => n.pow(d as u32),
            Self::RandomRegular { n, .. } => n,
            Self::TreeExpander { k, .. } => (1 << (k + 1)) - 1,
            Self::Lamplighter { n } => n << n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(validation(msg));
        match *self {
            Self::Complete { n } if n < 2 => bad(format!("complete graph needs n >= 2, got {n}")),
            Self::Cycle { n } if n < 3 => bad(format!("cycle needs n >= 3, got {n}")),
            Self::Path { n } if n < 2 => bad(format!("path needs n >= 2, got {n}")),
            Self::Torus { n, d } if n < 3 || d < 1 => {
                bad(format!("torus needs n >= 3 and d >= 1, got n={n}, d={d}"))
            }
            Self::Torus { n, d } if (n as f64).powi(d as i32) > MAX_DENSE_STATES as f64 => {
                bad(format!("torus ({n})^{d} exceeds {MAX_DENSE_STATES} states"))
            }
            Self::RandomRegular { n, d, .. } if d < 3 || n <= d || (n * d) % 2 != 0 => bad(
                format!("random regular graph needs d >= 3, n > d and n*d even, got n={n}, d={d}"),
            ),
            Self::TreeExpander { k, .. } if !(2..=11).contains(&k) => {
                bad(format!("tree expander needs 2 <= k <= 11, got k={k}"))
            }
            Self::Lamplighter { n } if n < 2 || (n << n) > MAX_DENSE_STATES => bad(format!(
                "lamplighter needs n >= 2 and n*2^n <= {MAX_DENSE_STATES}, got n={n}"
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Complete { n } => write!(f, "complete(n={n})"),
            Self::Cycle { n } => write!(f, "cycle(n={n})"),
            Self::Path { n } => write!(f, "path(n={n})"),
            Self::Torus { n, d } => write!(f, "torus(n={n},d={d})"),
            Self::RandomRegular { n, d, seed } => {
                write!(f, "random_regular(n={n},d={d},seed={seed})")
            }
            Self::TreeExpander { k, seed } => write!(f, "tree_expander(k={k},seed={seed})"),
            Self::Lamplighter { n } => write!(f, "lamplighter(n={n})"),
        }
    }
}

/// Builds the simple random walk on the requested graph.
pub fn generate(spec: &FamilySpec) -> Result<Chain> {
    spec.validate()?;
    let (n, edges) = edges_of(spec)?;
    Ok(Chain::from_weights(n, &edges)?.with_family(spec.clone()))
}

/// The unweighted edge list of the family's graph.
pub fn edges_of(spec: &FamilySpec) -> Result<(usize, Vec<(usize, usize, f64)>)> {
    spec.validate()?;
    let unit = |e: Vec<(usize, usize)>| e.into_iter().map(|(a, b)| (a, b, 1.0)).collect();
    Ok(match *spec {
        FamilySpec::Complete { n } => (
            n,
            unit(
                (0..n)
                    .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
                    .collect(),
            ),
        ),
        FamilySpec::Cycle { n } => (n, unit((0..n).map(|i| (i, (i + 1) % n)).collect())),
        FamilySpec::Path { n } => (n, unit((1..n).map(|i| (i - 1, i)).collect())),
        FamilySpec::Torus { n, d } => (spec.size(), unit(torus_edges(n, d))),
        FamilySpec::RandomRegular { n, d, seed } => {
            let mut rng = rng_from_seed(seed);
            (n, unit(random_regular_edges(n, d, seed, &mut rng, true)?))
        }
        FamilySpec::TreeExpander { k, seed } => (spec.size(), unit(tree_expander_edges(k, seed)?)),
        FamilySpec::Lamplighter { n } => (spec.size(), lamplighter_edges(n)),
    })
}

fn torus_edges(n: usize, d: usize) -> Vec<(usize, usize)> {
    let size = n.pow(d as u32);
    let mut edges = Vec::with_capacity(size * d);
    for x in 0..size {
        let mut stride = 1;
        for _ in 0..d {
            let coord = (x / stride) % n;
            let y = x - coord * stride + ((coord + 1) % n) * stride;
            edges.push((x, y));
            stride *= n;
        }
    }
    edges
}

/// Pairing (configuration) model, redrawn until the multigraph is simple
/// and, if requested, connected.
fn random_regular_edges(
    n: usize,
    d: usize,
    seed: u64,
    rng: &mut SimRng,
    require_connected: bool,
) -> Result<Vec<(usize, usize)>> {
    let mut points: Vec<usize> = (0..n * d).map(|p| p / d).collect();
    'draw: for _ in 0..PAIRING_BUDGET {
        points.shuffle(rng);
        let mut seen = HashSet::with_capacity(n * d / 2);
        let mut edges = Vec::with_capacity(n * d / 2);
        for pair in points.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                continue 'draw;
            }
            edges.push((a, b));
        }
        if require_connected && !is_connected(n, &edges) {
            continue;
        }
        edges.sort_unstable();
        return Ok(edges);
    }
    Err(Error::Generation {
        seed,
        reason: format!("pairing model found no simple connected {d}-regular graph on {n} vertices in {PAIRING_BUDGET} draws"),
    })
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                count += 1;
                stack.push(y);
            }
        }
    }
    count == n
}

/// Heap-ordered binary tree (root 0, children `2i+1`, `2i+2`) whose `2^k`
/// leaves are joined by a random simple 3-regular graph.
fn tree_expander_edges(k: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let size = (1usize << (k + 1)) - 1;
    let mut edges: Vec<(usize, usize)> = (1..size).map(|c| ((c - 1) / 2, c)).collect();
    let first_leaf = (1usize << k) - 1;
    let leaves = 1usize << k;
    let mut rng = rng_from_seed(seed);
    // The leaf graph may be disconnected; the tree connects everything.
    let leaf_edges = random_regular_edges(leaves, 3, seed, &mut rng, false)?;
    edges.extend(
        leaf_edges
            .into_iter()
            .map(|(a, b)| (first_leaf + a, first_leaf + b)),
    );
    Ok(edges)
}

/// State `(lamps, position)` is indexed `lamps * n + position`.
fn lamplighter_edges(n: usize) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for lamps in 0..(1usize << n) {
        for pos in 0..n {
            let x = lamps * n + pos;
            if lamps & (1 << pos) == 0 {
                edges.push((x, (lamps | (1 << pos)) * n + pos, 1.0));
            }
            edges.push((x, lamps * n + (pos + 1) % n, 1.0));
        }
    }
    edges
}

/// Index of the tree root in a tree-expander chain.
pub const TREE_ROOT: usize = 0;

/// The leaves of the tree together with its root, and the root index.
pub fn leaves_and_root_set(chain: &Chain, k: usize) -> Result<(VertexSet, usize)> {
    match chain.family() {
        Some(FamilySpec::TreeExpander { k: kk, .. }) if *kk == k => {}
        other => {
            return Err(precondition(format!(
                "chain is not a tree expander of depth {k} (family: {})",
                other.map_or("unknown".to_string(), |f| f.to_string())
            )))
        }
    }
    let first_leaf = (1usize << k) - 1;
    let set = VertexSet::new(
        chain.n(),
        std::iter::once(TREE_ROOT).chain(first_leaf..(first_leaf + (1 << k))),
    )?;
    Ok((set, TREE_ROOT))
}

/// Depth of a vertex in the heap-ordered tree.
pub fn tree_depth(v: usize) -> usize {
    (usize::BITS - 1 - (v + 1).leading_zeros()) as usize
}

/// Centres of an `r`-net on a torus chain: every vertex lies within graph
/// distance `r` of the returned set, and its points are pairwise more than
/// `r` apart. Greedy farthest-point selection starting from vertex 0,
/// smallest index among ties.
pub fn torus_net_set(chain: &Chain, r: usize) -> Result<VertexSet> {
    let (n, d) = match chain.family() {
        Some(FamilySpec::Torus { n, d }) => (*n, *d),
        other => {
            return Err(precondition(format!(
                "chain is not a torus (family: {})",
                other.map_or("unknown".to_string(), |f| f.to_string())
            )))
        }
    };
    let diameter = d * (n / 2);
    if r == 0 || r >= diameter {
        return Err(precondition(format!(
            "net radius {r} must satisfy 0 < r < diameter = {diameter}"
        )));
    }
    let mut centres = vec![0usize];
    let mut dist = bfs(chain, 0);
    loop {
        let (far, dmax) =
            dist.iter().enumerate().fold(
                (0, 0),
                |best, (x, &dx)| if dx > best.1 { (x, dx) } else { best },
            );
        if dmax <= r {
            break;
        }
        centres.push(far);
        for (x, dx) in bfs(chain, far).into_iter().enumerate() {
            dist[x] = dist[x].min(dx);
        }
    }
    VertexSet::new(chain.n(), centres)
}

/// Size of the graph ball of radius `r` around `x`.
pub fn ball_size(chain: &Chain, x: usize, r: usize) -> usize {
    bfs(chain, x).iter().filter(|&&d| d <= r).count()
}

/// Lamplighter states with more than `n/2` lamps on and lamp 0 on.
pub fn lamplighter_majority_set(chain: &Chain) -> Result<VertexSet> {
    let n = match chain.family() {
        Some(FamilySpec::Lamplighter { n }) => *n,
        _ => return Err(precondition("chain is not a lamplighter graph")),
    };
    let members = (0..chain.n()).filter(|&x| {
        let lamps = x / n;
        lamps & 1 == 1 && (lamps.count_ones() as usize) * 2 > n
    });
    VertexSet::new(chain.n(), members)
}

/// Whether every vertex is within distance `r` of `set`.
pub fn covers_within(chain: &Chain, set: &VertexSet, r: usize) -> bool {
    bfs_from_set(chain, set.indices())
        .iter()
        .all(|&d| d != UNREACHABLE && d <= r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degrees(chain: &Chain) -> Vec<usize> {
        (0..chain.n()).map(|x| chain.neighbors(x).count()).collect()
    }

    #[test]
    fn tree_expander_k3_structure() {
        let spec = FamilySpec::TreeExpander { k: 3, seed: 7 };
        let (n, edges) = edges_of(&spec).unwrap();
        assert_eq!(n, 15);
        assert_eq!(edges.len(), 26);
        let chain = generate(&spec).unwrap();
        let mut deg = degrees(&chain);
        deg.sort_unstable();
        let mut want = vec![2];
        want.extend([3; 6]);
        want.extend([4; 8]);
        assert_eq!(deg, want);
        assert_eq!(tree_depth(TREE_ROOT), 0);
        assert_eq!(tree_depth(7), 3);
    }

    #[test]
    fn tree_expander_pi_max_is_twice_pi_min() {
        for k in 2..=6 {
            let chain = generate(&FamilySpec::TreeExpander { k, seed: 3 }).unwrap();
            assert_eq!(chain.pi_max(), 2.0 * chain.pi_min());
        }
    }

    #[test]
    fn torus_4_2() {
        let chain = generate(&FamilySpec::Torus { n: 4, d: 2 }).unwrap();
        assert_eq!(chain.n(), 16);
        assert!(degrees(&chain).iter().all(|&d| d == 4));
    }

    #[test]
    fn complete_is_uniform() {
        let chain = generate(&FamilySpec::Complete { n: 4 }).unwrap();
        assert!(chain.pi().iter().all(|&p| p == 0.25));
    }

    #[test]
    fn lamplighter_is_cubic() {
        let chain = generate(&FamilySpec::Lamplighter { n: 3 }).unwrap();
        assert_eq!(chain.n(), 24);
        assert!(degrees(&chain).iter().all(|&d| d == 3));
        let two = generate(&FamilySpec::Lamplighter { n: 2 }).unwrap();
        // the two step generators coincide for n = 2 and are merged
        assert!(degrees(&two).iter().all(|&d| d == 2));
        let maj = lamplighter_majority_set(&chain).unwrap();
        assert!(maj.iter().all(|x| (x / 3) & 1 == 1));
        assert_eq!(maj.len(), 3 * 3); // lamp configs {011,101,111} x 3 positions
    }

    #[test]
    fn random_regular_is_deterministic_and_regular() {
        let spec = FamilySpec::RandomRegular {
            n: 20,
            d: 3,
            seed: 42,
        };
        let a = edges_of(&spec).unwrap();
        let b = edges_of(&spec).unwrap();
        assert_eq!(a, b);
        let other = edges_of(&FamilySpec::RandomRegular {
            n: 20,
            d: 3,
            seed: 43,
        })
        .unwrap();
        assert_ne!(a, other);
        let chain = generate(&spec).unwrap();
        assert!(degrees(&chain).iter().all(|&d| d == 3));
    }

    #[test]
    fn invalid_params() {
        for spec in [
            FamilySpec::RandomRegular {
                n: 7,
                d: 3,
                seed: 0,
            },
            FamilySpec::RandomRegular {
                n: 8,
                d: 2,
                seed: 0,
            },
            FamilySpec::TreeExpander { k: 1, seed: 0 },
            FamilySpec::Cycle { n: 2 },
            FamilySpec::Torus { n: 2, d: 2 },
            FamilySpec::Lamplighter { n: 9 },
        ] {
            assert!(
                matches!(generate(&spec), Err(Error::Validation(_))),
                "{spec}"
            );
        }
    }

    #[test]
    fn leaves_and_root() {
        for (k, size) in [(3, 9), (4, 17)] {
            let chain = generate(&FamilySpec::TreeExpander { k, seed: 1 }).unwrap();
            let (set, root) = leaves_and_root_set(&chain, k).unwrap();
            assert_eq!(set.len(), size);
            assert!(set.contains(root));
            assert_eq!(tree_depth(root), 0);
            assert!(set
                .iter()
                .filter(|&v| v != root)
                .all(|v| tree_depth(v) == k));
        }
        let torus = generate(&FamilySpec::Torus { n: 4, d: 2 }).unwrap();
        assert!(leaves_and_root_set(&torus, 3).is_err());
        let tree = generate(&FamilySpec::TreeExpander { k: 3, seed: 1 }).unwrap();
        assert!(leaves_and_root_set(&tree, 4).is_err());
    }

    #[test]
    fn torus_net_covers_and_packs() {
        let chain = generate(&FamilySpec::Torus { n: 8, d: 2 }).unwrap();
        let net = torus_net_set(&chain, 2).unwrap();
        assert!(covers_within(&chain, &net, 2));
        // disjoint radius-1 balls have 5 vertices each
        assert_eq!(ball_size(&chain, 0, 1), 5);
        assert!(net.len() * 5 <= 64, "net of size {}", net.len());
        for (i, &a) in net.indices().iter().enumerate() {
            let da = bfs(&chain, a);
            for &b in &net.indices()[i + 1..] {
                assert!(da[b] > 2);
            }
        }
    }

    #[test]
    fn torus_net_radius_guard() {
        let chain = generate(&FamilySpec::Torus { n: 8, d: 2 }).unwrap();
        assert!(torus_net_set(&chain, 8).is_err());
        assert!(torus_net_set(&chain, 0).is_err());
        assert!(torus_net_set(&chain, 7).is_ok());
    }

    #[test]
    fn family_names_parse() {
        assert_eq!(
            "tree-expander".parse::<FamilyKind>().unwrap(),
            FamilyKind::TreeExpander
        );
        assert_eq!(
            "random_regular".parse::<FamilyKind>().unwrap(),
            FamilyKind::RandomRegular
        );
        assert!("grid".parse::<FamilyKind>().is_err());
    }
}
