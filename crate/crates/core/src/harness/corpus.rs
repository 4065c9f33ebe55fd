//! Seeded corpus of chains and target sets shared by the suites.

use rand::Rng;
use rayon::prelude::*;

use super::config::{CorpusFamily, SetPolicy, SuiteConfig};
use crate::chain::Chain;
use crate::error::Result;
use crate::families::{
    generate, lamplighter_majority_set, leaves_and_root_set, torus_net_set, FamilySpec,
};
use crate::rng::{child_rng, child_seed};
use crate::set::VertexSet;

/// Stream offsets keep chain seeds and set seeds independent.
const CHAIN_STREAM: u64 = 1 << 40;
const SET_STREAM: u64 = 2 << 40;

pub struct CorpusChain {
    pub id: String,
    pub spec: FamilySpec,
    pub chain: Chain,
}

pub struct Instance {
    pub id: String,
    pub chain: usize,
    /// `singleton`, `density`, or the structured set name.
    pub kind: &'static str,
    pub set: VertexSet,
}

pub struct Corpus {
    pub chains: Vec<CorpusChain>,
    pub instances: Vec<Instance>,
}

/// Family parameters closest to `n` states (the stream index seeds the
/// randomized families). `None` when the family has no member that small.
pub fn spec_for(family: CorpusFamily, n: usize, master: u64) -> Option<FamilySpec> {
    let stream = CHAIN_STREAM + ((family as u64) << 32) + n as u64;
    let seed = child_seed(master, stream);
    let round_root = |d: u32| ((n as f64).powf(1.0 / d as f64).round() as usize).max(3);
    Some(match family {
        CorpusFamily::Complete => FamilySpec::Complete { n },
        CorpusFamily::Cycle => FamilySpec::Cycle { n: n.max(3) },
        CorpusFamily::Torus2d => FamilySpec::Torus {
            n: round_root(2),
            d: 2,
        },
        CorpusFamily::Torus3d => FamilySpec::Torus {
            n: round_root(3),
            d: 3,
        },
        CorpusFamily::RandomRegular3 => FamilySpec::RandomRegular {
            n: (n + n % 2).max(4),
            d: 3,
            seed,
        },
        CorpusFamily::RandomRegular4 => FamilySpec::RandomRegular {
            n: n.max(5),
            d: 4,
            seed,
        },
        CorpusFamily::TreeExpander => {
            let k = (((n + 1) as f64).log2().round() as usize)
                .saturating_sub(1)
                .max(2);
            FamilySpec::TreeExpander { k, seed }
        }
        CorpusFamily::Lamplighter => {
            let m = (2..=12).take_while(|&m| m << m <= n).last()?;
            FamilySpec::Lamplighter { n: m }
        }
    })
}

fn unique_specs(families: &[CorpusFamily], sizes: &[usize], master: u64) -> Vec<FamilySpec> {
    let mut specs: Vec<FamilySpec> = Vec::new();
    for &n in sizes {
        for &f in families {
            if let Some(spec) = spec_for(f, n, master) {
                if !specs.contains(&spec) {
                    specs.push(spec);
                }
            }
        }
    }
    specs
}

fn build_chains(specs: Vec<FamilySpec>) -> Result<Vec<CorpusChain>> {
    specs
        .into_par_iter()
        .map(|spec| {
            let chain = generate(&spec)?;
            Ok(CorpusChain {
                id: spec.to_string(),
                spec,
                chain,
            })
        })
        .collect()
}

/// A random proper nonempty subset with inclusion probability `density`.
pub fn random_subset<R: Rng + ?Sized>(n: usize, density: f64, rng: &mut R) -> VertexSet {
    loop {
        let set = VertexSet::from_mask((0..n).map(|_| rng.random::<f64>() < density).collect());
        if !set.is_empty() && !set.is_full() {
            return set;
        }
    }
}

/// Structured target sets for a chain, by name.
pub fn structured_sets(c: &CorpusChain) -> Vec<(&'static str, VertexSet)> {
    let mut out = Vec::new();
    match c.spec {
        FamilySpec::TreeExpander { k, .. } => {
            if let Ok((s, _)) = leaves_and_root_set(&c.chain, k) {
                out.push(("leaves_and_root", s));
            }
        }
        FamilySpec::Torus { n, .. } => {
            let r = (n / 4).max(1);
            if let Ok(s) = torus_net_set(&c.chain, r) {
                if !s.is_full() {
                    out.push(("torus_net", s));
                }
            }
        }
        FamilySpec::Lamplighter { .. } => {
            if let Ok(s) = lamplighter_majority_set(&c.chain) {
                if !s.is_empty() {
                    out.push(("lamplighter_majority", s));
                }
            }
        }
        _ => {}
    }
    out
}

fn sets_for(
    c: &CorpusChain,
    index: usize,
    policy: &SetPolicy,
    master: u64,
) -> Vec<(&'static str, VertexSet)> {
    let n = c.chain.n();
    let mut rng = child_rng(master, SET_STREAM + index as u64);
    let mut out = Vec::new();
    for i in 0..policy.singletons {
        let x = if i == 0 { 0 } else { rng.random_range(0..n) };
        let s = VertexSet::singleton(n, x).expect("in range");
        if !out.iter().any(|(_, t)| *t == s) {
            out.push(("singleton", s));
        }
    }
    for &d in &policy.densities {
        for _ in 0..policy.per_density {
            out.push(("density", random_subset(n, d, &mut rng)));
        }
    }
    if policy.structured {
        out.extend(structured_sets(c));
    }
    out
}

fn instances_of(
    chains: &[CorpusChain],
    policy_of: impl Fn(&CorpusChain) -> SetPolicy,
    master: u64,
) -> Vec<Instance> {
    let mut instances = Vec::new();
    for (i, c) in chains.iter().enumerate() {
        for (j, (kind, set)) in sets_for(c, i, &policy_of(c), master)
            .into_iter()
            .enumerate()
        {
            instances.push(Instance {
                id: format!("{}#{j}:{kind}", c.id),
                chain: i,
                kind,
                set,
            });
        }
    }
    instances
}

/// The main corpus: every configured family at every size, plus the large
/// tier restricted to random 3-regular and 3-d torus chains with one
/// singleton and one sparse random set each.
pub fn build_corpus(config: &SuiteConfig) -> Result<Corpus> {
    let mut specs = unique_specs(&config.families, &config.sizes, config.seed);
    let large_families: Vec<CorpusFamily> = [CorpusFamily::RandomRegular3, CorpusFamily::Torus3d]
        .into_iter()
        .filter(|f| config.families.contains(f))
        .collect();
    let large: Vec<FamilySpec> = unique_specs(&large_families, &config.large_sizes, config.seed)
        .into_iter()
        .filter(|s| !specs.contains(s))
        .collect();
    let first_large = specs.len();
    specs.extend(large);
    let chains = build_chains(specs)?;
    let policy = config.sets.clone();
    let sparse = SetPolicy {
        singletons: 1,
        densities: vec![policy
            .densities
            .iter()
            .copied()
            .fold(1.0, f64::min)
            .min(0.125)],
        per_density: 1,
        structured: false,
    };
    let large_ids: Vec<String> = chains[first_large..].iter().map(|c| c.id.clone()).collect();
    let instances = instances_of(
        &chains,
        |c| {
            if large_ids.contains(&c.id) {
                sparse.clone()
            } else {
                policy.clone()
            }
        },
        config.seed,
    );
    Ok(Corpus { chains, instances })
}

/// Small chains (n <= 14) for exhaustive checks, without target sets.
pub fn build_exact_corpus(config: &SuiteConfig) -> Result<Vec<CorpusChain>> {
    let specs = unique_specs(&config.families, &config.exact_sizes, config.seed)
        .into_iter()
        .filter(|s| s.size() <= crate::harmonic::EXACT_BETA_MAX_N)
        .collect();
    build_chains(specs)
}
