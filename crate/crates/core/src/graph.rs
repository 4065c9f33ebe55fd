//! Breadth-first utilities on the support graph of a chain (unit edge
//! lengths, self-loops ignored).

use std::collections::VecDeque;

use rand::Rng;

use crate::chain::Chain;
use crate::rng::rng_from_seed;

pub const UNREACHABLE: usize = usize::MAX;

/// Graph distances from every state in `sources`.
pub fn bfs_from_set(chain: &Chain, sources: &[usize]) -> Vec<usize> {
    let mut dist = vec![UNREACHABLE; chain.n()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s] != 0 {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(x) = queue.pop_front() {
        let d = dist[x] + 1;
        for y in chain.neighbors(x) {
            if dist[y] == UNREACHABLE {
                dist[y] = d;
                queue.push_back(y);
            }
        }
    }
    dist
}

pub fn bfs(chain: &Chain, source: usize) -> Vec<usize> {
    bfs_from_set(chain, &[source])
}

/// Farthest state from `source` (smallest index among ties) and its distance.
fn farthest(dist: &[usize]) -> (usize, usize) {
    let mut best = (0, 0);
    for (x, &d) in dist.iter().enumerate() {
        if d != UNREACHABLE && d > best.1 {
            best = (x, d);
        }
    }
    best
}

/// The graph diameter.
pub fn diameter(chain: &Chain) -> usize {
    diameter_pair(chain).2
}

/// A pair `(s, e)` realizing the diameter, and the diameter.
///
/// Exact (all-pairs BFS, lexicographically smallest pair) for n <= 1024.
/// Larger graphs use a double sweep refined by 64 seeded BFS probes.
pub fn diameter_pair(chain: &Chain) -> (usize, usize, usize) {
    let n = chain.n();
    if n <= 1024 {
        let mut best = (0, 0, 0);
        for s in 0..n {
            let (e, d) = farthest(&bfs(chain, s));
            if d > best.2 {
                best = (s, e, d);
            }
        }
        return best;
    }
    let (a, _) = farthest(&bfs(chain, 0));
    let (b, d) = farthest(&bfs(chain, a));
    let mut best = (a.min(b), a.max(b), d);
    let mut rng = rng_from_seed(0x5eed_d1a3);
    for _ in 0..64 {
        let s = rng.random_range(0..n);
        let (e, d) = farthest(&bfs(chain, s));
        if d > best.2 {
            best = (s.min(e), s.max(e), d);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> Chain {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        Chain::from_weights(n, &edges).unwrap()
    }

    #[test]
    fn cycle_distances() {
        let c = cycle(8);
        assert_eq!(bfs(&c, 0), vec![0, 1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(diameter_pair(&c), (0, 4, 4));
    }

    #[test]
    fn multi_source() {
        let c = cycle(8);
        assert_eq!(bfs_from_set(&c, &[0, 4]), vec![0, 1, 2, 1, 0, 1, 2, 1]);
    }
}
