//! Verification suites. Each suite turns module-level checks into report
//! records over a seeded corpus; instances run in parallel and records are
//! collected in corpus order.

use rand::Rng;
use rayon::prelude::*;

use super::config::{SuiteConfig, SuiteKind};
use super::corpus::{build_corpus, build_exact_corpus, Corpus, CorpusChain, Instance};
use super::report::{CheckRecord, Curve, Report, SuiteOutput};
use crate::chain::{BuildOptions, Chain};
use crate::dla::{
    bernstein_monte_carlo, dla_replicas, dla_step_walk, growth_fit_groups, outer_boundary, DlaMode,
    DlaOptions, DlaTrace,
};
use crate::error::{Error, Result};
use crate::families::{
    edges_of, generate, leaves_and_root_set, torus_net_set, FamilySpec, TREE_ROOT,
};
use crate::graph::diameter_pair;
use crate::harmonic::{
    bound_har, bound_main, bound_no_makarov, check_expander_characterization, check_reverse_path,
    harmonic_monte_carlo, harmonic_stationary, HarmonicMatrix, NoMakarov,
};
use crate::hitting::{
    check_commute_identity, check_return_domination, expected_hitting, return_tail_curve,
    transience_constant, uniform_transience, UMode, FULL_U_MAX_N,
};
use crate::rng::{child_rng, child_seed};
use crate::set::VertexSet;
use crate::spectral::{check_mix_sandwich, mixing_time, spectrum};
use crate::stats::{frequencies, mean_stderr, tv_distance, tv_envelope};

pub mod anchor {
    pub const REVERSE_PATH: &str =
        "reverse-path identity: pi(y) h_{y,S}(x) = pi(x) Pr_x[T_y < T_S^+] / Pr_y[T_S < T_y^+]";
    pub const SUM_PATH: &str = "range identity: sum_y Pr_x[T_y < T_S^+] <= E_x[T_S^+]";
    pub const COMMUTE: &str =
        "commute identity: Pr_x[T_y < T_x^+] = 1 / (pi(x) (E_x T_y + E_y T_x))";
    pub const MIX: &str = "mixing sandwich: pi(y)/2 <= P^t(x,y) <= 3 pi(y)/2 at t = t_mix";
    pub const TAIL: &str =
        "expander return tail: Pr_pi[T_S^+ > t] <= (1 - (1 - lambda) pi(S))^(t/2)";
    pub const RETURN: &str = "stationary return time: E_pi[T_S^+] <= 2 / ((1 - lambda) pi(S)) + 1";
    pub const HAR: &str = "harmonic measure via return time: h_S(x) <= pi(x) E_x[T_S^+] / u(P)";
    pub const MAIN: &str = "harmonic measure bound: h_S(x) <= 3 pi(x) (log(2e/pi_min) v 1/pi(S)) / (u(P) (1 - lambda))";
    pub const NO_MAKAROV: &str = "small subsets: h_S(A) <= (2/(1-lambda)) (pi(A)/pi(B)) log(pi(B)/pi(A)) + pi(A) + pi(A)/pi(B)";
    pub const BETA_PHI: &str = "expansion characterization: beta(G) <= Phi(G)";
    pub const FOLNER: &str = "inner boundary mass: h_S(dS) = 1 - (1 - Phi_S) pi(S)";
    pub const TORUS_GAP: &str = "torus spectral gap of order n^-2";
    pub const TORUS_COSINE: &str = "lazy torus gap: (1 - cos(2 pi / n)) / (2d)";
    pub const FIXED_START: &str = "fixed-start harmonic measure can concentrate on a net";
    pub const TREE_UNIFORM: &str =
        "tree expander: h_S(root) exceeds a multiple of the uniform weight";
    pub const TREE_BAND: &str =
        "tree expander: h_S(root) pi(S) / (pi(root) k) stays in a fixed band";
    pub const DLA_ORACLE: &str = "complete-graph DLA: E tau = n/2";
    pub const DLA_STEP: &str =
        "DLA step law: walk-mode hits follow the stationary harmonic measure of the outer boundary";
    pub const DLA_GROWTH: &str = "DLA on expanders: tau grows like a positive power of n";
    pub const DLA_COMPLETE_SLOPE: &str = "complete-graph DLA: log-log slope of E tau is 1";
    pub const DLA_TRACES: &str = "DLA trace invariants";
    pub const TRANSIENCE: &str =
        "uniform transience: u(P) pi_max / ((1 - lambda) pi_min) bounded below";
    pub const HARMONIC_MC: &str = "Monte-Carlo hitting distribution from pi matches h_S";
    pub const BERNSTEIN: &str = "Bernoulli sum tail: Pr[B >= C E B] <= exp(-E B C log(C/e))";
}

/// Runs the suite named in `config`; configuration problems are errors,
/// check failures are recorded in the report.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteOutput> {
    config.validate()?;
    let (checks, curves) = match config.suite {
        SuiteKind::Identities => identities(config)?,
        SuiteKind::Bounds => bounds(config)?,
        SuiteKind::TorusGap => torus_gap(config),
        SuiteKind::FixedStart => fixed_start(config)?,
        SuiteKind::TreeTightness => tree_tightness(config),
        SuiteKind::Dla => dla_suite(config)?,
        SuiteKind::Bernstein => bernstein(config),
    };
    Ok(SuiteOutput {
        report: Report::new(config, checks),
        curves,
    })
}

/// Torus gap scaling over side lengths `sizes` in dimension `d`.
pub fn run_torus_gap_scaling(d: usize, sizes: &[usize]) -> Result<SuiteOutput> {
    run_suite(&SuiteConfig {
        torus_d: d,
        sizes: sizes.to_vec(),
        ..SuiteConfig::for_suite(SuiteKind::TorusGap)
    })
}

/// Fixed-start concentration on `torus(n, d)` with the radius-`r` net.
pub fn run_fixed_start_demo(n: usize, d: usize, r: usize) -> Result<SuiteOutput> {
    let mut config = SuiteConfig::for_suite(SuiteKind::FixedStart);
    config.fixed_start.n = n;
    config.fixed_start.d = d;
    config.fixed_start.r = r;
    run_suite(&config)
}

fn attempt(rec: CheckRecord, f: impl FnOnce(CheckRecord) -> Result<CheckRecord>) -> CheckRecord {
    let fallback = rec.clone();
    f(rec).unwrap_or_else(|e| fallback.error(e))
}

fn instance_record(id: &str, anchor: &str, corpus: &Corpus, inst: &Instance) -> CheckRecord {
    let c = &corpus.chains[inst.chain];
    CheckRecord::new(id, anchor, inst.id.clone())
        .param("n", c.chain.n())
        .param("set_size", inst.set.len())
        .param("set_kind", inst.kind)
}

fn par_flat<T: Sync>(
    items: &[T],
    f: impl Fn(&T) -> Vec<CheckRecord> + Sync + Send,
) -> Vec<CheckRecord> {
    items
        .par_iter()
        .map(f)
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn identities(config: &SuiteConfig) -> Result<(Vec<CheckRecord>, Vec<Curve>)> {
    let corpus = build_corpus(config)?;
    let tol = config.tolerances.identity;
    let per_instance = corpus
        .instances
        .par_iter()
        .map(|inst| {
            let chain = &corpus.chains[inst.chain].chain;
            let s = &inst.set;
            let mut out = Vec::new();
            let reverse = check_reverse_path(chain, s);
            out.push(attempt(
                instance_record("reverse_path", anchor::REVERSE_PATH, &corpus, inst),
                |r| {
                    let c = reverse.as_ref().map_err(clone_err)?;
                    Ok(r.residual(c.max_residual)
                        .param("pairs", c.pairs)
                        .param("worst_x", c.worst.0)
                        .param("worst_y", c.worst.1)
                        .param("tolerance", tol)
                        .verdict(c.max_residual <= tol))
                },
            ));
            out.push(attempt(
                instance_record("sum_path_reversal", anchor::SUM_PATH, &corpus, inst),
                |r| {
                    let c = reverse.as_ref().map_err(clone_err)?;
                    let ret = expected_hitting(chain, s)?.ret;
                    let (mut worst, mut at) = (f64::NEG_INFINITY, 0);
                    for (i, x) in s.iter().enumerate() {
                        let gap = c.range_sums[i] - ret[x];
                        if gap > worst {
                            worst = gap;
                            at = i;
                        }
                    }
                    let x = s.indices()[at];
                    Ok(r.sides(c.range_sums[at], ret[x])
                        .param("x", x)
                        .residual(worst.max(0.0))
                        .verdict(worst <= tol))
                },
            ));
            let tail = return_tail_curve(chain, s, config.t_max);
            out.push(attempt(
                instance_record("expander_tail", anchor::TAIL, &corpus, inst),
                |r| {
                    let pts = tail.as_ref().map_err(clone_err)?;
                    let violations = pts.iter().filter(|p| !p.holds()).count();
                    let worst = pts
                        .iter()
                        .max_by(|a, b| (a.exact - a.bound).total_cmp(&(b.exact - b.bound)))
                        .unwrap();
                    Ok(r.sides(worst.exact, worst.bound)
                        .param("t", worst.t)
                        .param("t_max", config.t_max)
                        .param("violations", violations)
                        .residual((worst.exact - worst.bound).max(0.0))
                        .verdict(violations == 0))
                },
            ));
            out.push(attempt(
                instance_record("return_domination", anchor::RETURN, &corpus, inst),
                |r| {
                    let c = check_return_domination(chain, s)?;
                    Ok(r.sides(c.stationary_return, c.bound).verdict(c.pass))
                },
            ));
            let rows: Vec<Vec<f64>> = tail
                .map(|pts| {
                    pts.iter()
                        .map(|p| vec![p.t as f64, p.exact, p.bound])
                        .collect()
                })
                .unwrap_or_default();
            (out, rows)
        })
        .collect::<Vec<_>>();
    let mut checks = Vec::new();
    let mut curve = Curve::new("return_tail", &["instance", "t", "exact", "bound"]);
    for (i, (records, rows)) in per_instance.into_iter().enumerate() {
        checks.extend(records);
        for mut row in rows {
            row.insert(0, i as f64);
            curve.push(row);
        }
    }
    checks.extend(par_flat(&corpus.chains, |c| chain_identities(c, config)));
    checks.extend(harmonic_mc_check(config, &corpus));
    Ok((checks, vec![curve]))
}

fn clone_err(e: &Error) -> Error {
    Error::Numerical(e.to_string())
}

/// Lower envelope for the calibrated uniform-transience constant.
pub const TRANSIENCE_ENVELOPE: f64 = 0.01;

/// Walks per Monte-Carlo harmonic measure check.
pub const HARMONIC_MC_WALKS: usize = 100_000;

fn harmonic_mc_check(config: &SuiteConfig, corpus: &Corpus) -> Vec<CheckRecord> {
    // One densest random set per chain keeps walk lengths short.
    let picks: Vec<&Instance> = (0..corpus.chains.len())
        .filter_map(|ci| {
            corpus
                .instances
                .iter()
                .filter(|i| i.chain == ci && i.kind == "density")
                .max_by_key(|i| i.set.len())
        })
        .collect();
    par_flat(&picks, |inst| {
        let chain = &corpus.chains[inst.chain].chain;
        let rec = instance_record("harmonic_mc", anchor::HARMONIC_MC, corpus, inst)
            .param("walks", HARMONIC_MC_WALKS);
        vec![attempt(rec, |r| {
            let cap = crate::dla::walk_step_cap(chain)? as usize;
            let seed = child_seed(config.seed, 0x4D << 32 | inst.chain as u64);
            let mc = harmonic_monte_carlo(chain, &inst.set, HARMONIC_MC_WALKS, seed, cap)?;
            Ok(r.sides(mc.tv, mc.envelope).verdict(mc.pass))
        })]
    })
}

fn chain_identities(c: &CorpusChain, config: &SuiteConfig) -> Vec<CheckRecord> {
    let chain = &c.chain;
    let n = chain.n();
    let tol = config.tolerances.identity;
    let mut out = Vec::new();
    let (s, e, _) = diameter_pair(chain);
    let mut pairs = vec![(s, e)];
    let mut rng = child_rng(config.seed, 0xC0 << 32 | n as u64);
    while pairs.len() < config.commute_pairs.max(1) {
        let x = rng.random_range(0..n);
        let y = rng.random_range(0..n);
        if x != y && !pairs.contains(&(x, y)) {
            pairs.push((x, y));
        }
    }
    for (x, y) in pairs {
        let rec = CheckRecord::new("commute", anchor::COMMUTE, c.id.clone())
            .param("n", n)
            .param("x", x)
            .param("y", y);
        out.push(attempt(rec, |r| {
            let k = check_commute_identity(chain, x, y)?;
            Ok(r.sides(k.lhs, k.rhs)
                .residual(k.residual)
                .verdict(k.residual <= tol))
        }));
    }
    let rec = CheckRecord::new("transience_constant", anchor::TRANSIENCE, c.id.clone())
        .param("n", n)
        .param("envelope", TRANSIENCE_ENVELOPE);
    out.push(attempt(rec, |r| {
        let u = uniform_transience(chain, UMode::Full)?;
        let k = transience_constant(chain, &u)?;
        Ok(r.sides(k, TRANSIENCE_ENVELOPE)
            .param("u", u.u)
            .verdict(k >= TRANSIENCE_ENVELOPE))
    }));
    let rec = CheckRecord::new("mix_sandwich", anchor::MIX, c.id.clone()).param("n", n);
    out.push(attempt(rec, |r| {
        let t = mixing_time(chain)?;
        let m = check_mix_sandwich(chain, t)?;
        Ok(r.sides(m.min_ratio, m.max_ratio)
            .param("t", t)
            .param("threshold", m.threshold)
            .verdict(m.pass))
    }));
    out
}

fn bounds(config: &SuiteConfig) -> Result<(Vec<CheckRecord>, Vec<Curve>)> {
    let corpus = build_corpus(config)?;
    let tables: Vec<Result<_>> = corpus
        .chains
        .par_iter()
        .map(|c| {
            if c.chain.n() > FULL_U_MAX_N {
                return Err(Error::SizeGuard {
                    what: "exact u(P)",
                    limit: FULL_U_MAX_N,
                    n: c.chain.n(),
                });
            }
            uniform_transience(&c.chain, UMode::Full)
        })
        .collect();
    let mut checks = par_flat(&corpus.instances, |inst| {
        let chain = &corpus.chains[inst.chain].chain;
        let u = &tables[inst.chain];
        let mut out = Vec::new();
        for (id, anc) in [("har_bound", anchor::HAR), ("main_bound", anchor::MAIN)] {
            let rec = instance_record(id, anc, &corpus, inst);
            out.push(match u {
                Err(e) => rec.skip(format!("u(P) unavailable: {e}")),
                Ok(u) => attempt(rec, |r| {
                    let b = if id == "har_bound" {
                        bound_har(chain, &inst.set, u)?
                    } else {
                        bound_main(chain, &inst.set, u)?
                    };
                    let worst = b
                        .points
                        .iter()
                        .max_by(|a, b| (a.lhs / a.rhs).total_cmp(&(b.lhs / b.rhs)))
                        .unwrap();
                    let mut r = r
                        .sides(worst.lhs, worst.rhs)
                        .param("x", worst.x)
                        .param("max_ratio", b.max_ratio)
                        .param("violations", b.violations)
                        .param("u", u.u)
                        .residual((worst.lhs - worst.rhs).max(0.0));
                    if let Some(k) = b.empirical_constant {
                        r = r.param("empirical_constant", k);
                    }
                    Ok(r.verdict(b.pass()))
                }),
            });
        }
        out.extend(no_makarov_checks(config, &corpus, inst));
        out
    });
    let exact = build_exact_corpus(config)?;
    checks.extend(par_flat(&exact, |c| {
        let rec = |id, anc| CheckRecord::new(id, anc, c.id.clone()).param("n", c.chain.n());
        match check_expander_characterization(&c.chain) {
            Ok(x) => vec![
                rec("beta_le_phi", anchor::BETA_PHI)
                    .sides(x.beta, x.phi)
                    .residual((x.beta - x.phi).max(0.0))
                    .verdict(x.pass),
                rec("folner_closed_form", anchor::FOLNER)
                    .sides(x.folner_lhs, x.folner_rhs)
                    .param("witness_size", x.folner.len())
                    .residual(x.folner_residual)
                    .verdict(x.folner_residual <= config.tolerances.folner),
            ],
            Err(e) => vec![
                rec("beta_le_phi", anchor::BETA_PHI).error(&e),
                rec("folner_closed_form", anchor::FOLNER).error(&e),
            ],
        }
    }));
    Ok((checks, Vec::new()))
}

fn no_makarov_checks(config: &SuiteConfig, corpus: &Corpus, inst: &Instance) -> Vec<CheckRecord> {
    let chain = &corpus.chains[inst.chain].chain;
    let s = &inst.set;
    if s.len() < 2 || inst.kind == "singleton" {
        return Vec::new();
    }
    let mut out = Vec::new();
    let stream = 0xA0 << 40
        | corpus
            .instances
            .iter()
            .position(|i| i.id == inst.id)
            .unwrap() as u64;
    let mut rng = child_rng(config.seed, stream);
    let mut subsets: Vec<(String, VertexSet)> = Vec::new();
    for &j in &config.eps_exponents {
        let eps = 0.5f64.powi(j as i32);
        let size = ((eps * s.len() as f64).floor() as usize).clamp(1, s.len() - 1);
        let mut pool = s.indices().to_vec();
        for i in 0..size {
            let k = rng.random_range(i..pool.len());
            pool.swap(i, k);
        }
        subsets.push((
            format!("2^-{j}"),
            VertexSet::new(chain.n(), pool[..size].iter().copied()).unwrap(),
        ));
    }
    if inst.kind == "leaves_and_root" {
        subsets.push((
            "root".into(),
            VertexSet::singleton(chain.n(), TREE_ROOT).unwrap(),
        ));
    }
    for (label, a) in subsets {
        let rec = instance_record("no_makarov", anchor::NO_MAKAROV, corpus, inst)
            .param("target_eps", label)
            .param("a_size", a.len());
        out.push(attempt(rec, |r| {
            Ok(match bound_no_makarov(chain, s, &a)? {
                NoMakarov::Trivial => r.verdict(true).because("A is empty"),
                NoMakarov::Skipped { reason } => r.skip(reason),
                NoMakarov::Checked {
                    h_a,
                    rhs,
                    eps,
                    packaged,
                    implied_constant,
                    pass,
                } => r
                    .sides(h_a, rhs)
                    .param("eps", eps)
                    .param("packaged", packaged)
                    .param("implied_constant", implied_constant)
                    .residual((h_a - rhs).max(0.0))
                    .verdict(pass),
            })
        }));
    }
    out
}

/// The lazy walk on `(Z/nZ)^d`, built without the automatic lazification
/// so that even and odd `n` get the same kernel.
pub fn lazy_torus(n: usize, d: usize) -> Result<Chain> {
    let (states, edges) = edges_of(&FamilySpec::Torus { n, d })?;
    Ok(Chain::from_weights_with(states, &edges, BuildOptions { auto_lazify: false })?.lazify())
}

fn torus_gap(config: &SuiteConfig) -> (Vec<CheckRecord>, Vec<Curve>) {
    let d = config.torus_d;
    let mut curve = Curve::new("gap_scaling", &["n", "gap", "gap_n2", "closed_form"]);
    let results: Vec<(usize, Result<f64>)> = config
        .sizes
        .par_iter()
        .map(|&n| (n, lazy_torus(n, d).and_then(|c| Ok(spectrum(&c)?.gap))))
        .collect();
    let mut checks = Vec::new();
    let mut scaled = Vec::new();
    for (n, gap) in results {
        let closed = (1.0 - (2.0 * std::f64::consts::PI / n as f64).cos()) / (2.0 * d as f64);
        let rec = CheckRecord::new(
            "torus_cosine",
            anchor::TORUS_COSINE,
            format!("torus(n={n}, d={d}) lazy"),
        )
        .param("n", n)
        .param("d", d);
        match gap {
            Ok(g) => {
                let res = (g - closed).abs();
                checks.push(
                    rec.sides(g, closed)
                        .param("gap_n2", g * (n * n) as f64)
                        .residual(res)
                        .verdict(res <= config.tolerances.closed_form),
                );
                scaled.push(g * (n * n) as f64);
                curve.push(vec![n as f64, g, g * (n * n) as f64, closed]);
            }
            Err(e) => checks.push(rec.error(e)),
        }
    }
    let rec = CheckRecord::new(
        "torus_gap_stability",
        anchor::TORUS_GAP,
        format!("torus(d={d}) lazy"),
    )
    .param("sizes", config.sizes.clone())
    .param("limit", config.tolerances.gap_stability);
    checks.push(if scaled.len() == config.sizes.len() {
        let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().copied().fold(0.0, f64::max);
        rec.sides(hi / lo, config.tolerances.gap_stability)
            .verdict(hi / lo <= config.tolerances.gap_stability)
    } else {
        rec.error("a size failed; see the per-size records")
    });
    (checks, vec![curve])
}

fn fixed_start(config: &SuiteConfig) -> Result<(Vec<CheckRecord>, Vec<Curve>)> {
    let fs = &config.fixed_start;
    let spec = FamilySpec::Torus { n: fs.n, d: fs.d };
    let chain = generate(&spec)?;
    let net = torus_net_set(&chain, fs.r)?;
    let k = net.len() as f64;
    let stationary = harmonic_stationary(&chain, &net)?;
    let stat_max = stationary.weights().iter().copied().fold(0.0, f64::max) * k;
    let rows = HarmonicMatrix::new(&chain, &net)?;
    let outside: Vec<usize> = net.complement().to_vec();
    let mut rng = child_rng(config.seed, 0xF5 << 32);
    let mut starts: Vec<usize> = Vec::new();
    while starts.len() < fs.starts.min(outside.len()) {
        let y = outside[rng.random_range(0..outside.len())];
        if !starts.contains(&y) {
            starts.push(y);
        }
    }
    let instance = format!("{spec}, r={}", fs.r);
    let mut checks = vec![CheckRecord::new(
        "fixed_start_stationary",
        anchor::FIXED_START,
        instance.clone(),
    )
    .param("net_size", net.len())
    .sides(stat_max, 1.0)
    .info()];
    let mut curve = Curve::new(
        "fixed_start",
        &["y", "max_fixed_times_size", "max_stationary_times_size"],
    );
    let mut exceed = 0;
    for y in starts {
        let h = rows.measure_from(y)?;
        let (arg, max) = h
            .support()
            .iter()
            .zip(h.weights())
            .fold((0, 0.0), |b, (x, &w)| if w > b.1 { (x, w) } else { b });
        if max * k > stat_max {
            exceed += 1;
        }
        curve.push(vec![y as f64, max * k, stat_max]);
        checks.push(
            CheckRecord::new(
                "fixed_start_concentration",
                anchor::FIXED_START,
                instance.clone(),
            )
            .param("y", y)
            .param("argmax", arg)
            .sides(max * k, stat_max)
            .info(),
        );
    }
    checks.push(
        CheckRecord::new("fixed_start_summary", anchor::FIXED_START, instance)
            .param("starts_exceeding_stationary", exceed)
            .param("starts", curve.rows.len())
            .info(),
    );
    Ok((checks, vec![curve]))
}

fn tree_tightness(config: &SuiteConfig) -> (Vec<CheckRecord>, Vec<Curve>) {
    let t = &config.tree;
    let half = t.band_width.sqrt();
    let (lo, hi) = (t.band_center / half, t.band_center * half);
    let jobs: Vec<(usize, u64)> =
        t.ks.iter()
            .flat_map(|&k| {
                (0..t.seed_count.max(1))
                    .map(move |i| (k, child_seed(config.seed, (k as u64) << 16 | i as u64)))
            })
            .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(k, seed)| {
            let spec = FamilySpec::TreeExpander { k, seed };
            let r: Result<_> = (|| {
                let chain = generate(&spec)?;
                let (s, root) = leaves_and_root_set(&chain, k)?;
                let h = harmonic_stationary(&chain, &s)?.weight(root);
                let ratio = h * chain.mass(&s) / (chain.pi()[root] * k as f64);
                Ok((s.len(), h, ratio))
            })();
            (spec, k, r)
        })
        .collect();
    let mut checks = Vec::new();
    let mut curve = Curve::new(
        "tree_tightness",
        &["k", "set_size", "h_root", "h_root_times_size", "ratio"],
    );
    let mut ratios = Vec::new();
    for (spec, k, r) in results {
        let rec = |id, anc| CheckRecord::new(id, anc, spec.to_string()).param("k", k);
        match r {
            Ok((size, h, ratio)) => {
                let scaled = h * size as f64;
                checks.push(
                    rec("tree_uniform_multiple", anchor::TREE_UNIFORM)
                        .sides(scaled, t.uniform_factor)
                        .param("h_root", h)
                        .param("set_size", size)
                        .verdict(scaled > t.uniform_factor),
                );
                checks.push(
                    rec("tree_ratio_band", anchor::TREE_BAND)
                        .sides(ratio, t.band_center)
                        .param("band", vec![lo, hi])
                        .verdict(ratio >= lo && ratio <= hi),
                );
                ratios.push(ratio);
                curve.push(vec![k as f64, size as f64, h, scaled, ratio]);
            }
            Err(e) => {
                checks.push(rec("tree_uniform_multiple", anchor::TREE_UNIFORM).error(&e));
                checks.push(rec("tree_ratio_band", anchor::TREE_BAND).error(&e));
            }
        }
    }
    if !ratios.is_empty() {
        let rmin = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let rmax = ratios.iter().copied().fold(0.0, f64::max);
        checks.push(
            CheckRecord::new("tree_ratio_spread", anchor::TREE_BAND, "tree_expander")
                .param("ks", t.ks.clone())
                .sides(rmax / rmin, t.band_width)
                .verdict(rmax / rmin <= t.band_width),
        );
    }
    (checks, vec![curve])
}

fn dla_suite(config: &SuiteConfig) -> Result<(Vec<CheckRecord>, Vec<Curve>)> {
    let dc = &config.dla;
    let mut checks = Vec::new();
    let mut curves = Vec::new();

    // Closed-form oracle on the complete graph.
    let kn = generate(&FamilySpec::Complete { n: dc.oracle_n })?;
    let exact_opts = DlaOptions {
        mode: DlaMode::Exact,
        ..Default::default()
    };
    let oracle = dla_replicas(
        &kn,
        0,
        dc.oracle_n - 1,
        exact_opts,
        child_seed(config.seed, 1),
        dc.oracle_replicas,
    )?;
    checks.push(trace_record(
        &format!("complete(n={})", dc.oracle_n),
        &oracle,
        &kn,
    ));
    let taus = completed_taus(&oracle);
    let (mean, se) = mean_stderr(&taus);
    let target = dc.oracle_n as f64 / 2.0;
    let rel = (mean - target).abs() / target;
    checks.push(
        CheckRecord::new(
            "dla_complete_mean",
            anchor::DLA_ORACLE,
            format!("complete(n={})", dc.oracle_n),
        )
        .param("replicas", taus.len())
        .param("stderr", se)
        .param("mode", "exact")
        .sides(mean, target)
        .residual(rel)
        .verdict(rel <= config.tolerances.dla_mean_rel && taus.len() == dc.oracle_replicas),
    );

    // Per-step law: walk-mode draws against the exact harmonic measure.
    let step_chains = [
        FamilySpec::Complete { n: dc.oracle_n },
        FamilySpec::RandomRegular {
            n: 64,
            d: 3,
            seed: child_seed(config.seed, 2),
        },
        FamilySpec::Torus { n: 8, d: 2 },
    ];
    for (ci, spec) in step_chains.iter().enumerate() {
        let chain = generate(spec)?;
        let (s, e, _) = diameter_pair(&chain);
        let walk_opts = DlaOptions {
            mode: DlaMode::Walk,
            ..Default::default()
        };
        let trace = &dla_replicas(
            &chain,
            s,
            e,
            walk_opts,
            child_seed(config.seed, 3 + ci as u64),
            1,
        )?[0];
        let len = trace.additions.len();
        for t in [0, len / 2] {
            let mut agg = vec![s];
            agg.extend(trace.additions[..t].iter().map(|a| a.1));
            let a = VertexSet::new(chain.n(), agg)?;
            let rec = CheckRecord::new("dla_step_law", anchor::DLA_STEP, spec.to_string())
                .param("aggregate_size", a.len())
                .param("draws", dc.step_draws);
            checks.push(attempt(rec, |r| {
                let boundary = outer_boundary(&chain, &a)?;
                let exact = harmonic_stationary(&chain, &boundary)?;
                let seed = child_seed(config.seed, 100 + (ci as u64) * 8 + t as u64);
                let mut rng = crate::rng::rng_from_seed(seed);
                let draws: Vec<usize> = (0..dc.step_draws)
                    .map(|_| {
                        let x = dla_step_walk(&chain, &a, &mut rng, seed)?;
                        Ok(boundary
                            .indices()
                            .binary_search(&x)
                            .expect("hit lies on the boundary"))
                    })
                    .collect::<Result<_>>()?;
                let tv = tv_distance(&frequencies(&draws, boundary.len()), exact.weights());
                let env = tv_envelope(exact.weights(), dc.step_draws);
                Ok(r.sides(tv, env)
                    .param("boundary_size", boundary.len())
                    .verdict(tv <= env))
            }));
        }
    }

    // Growth on random 3-regular graphs.
    let mut groups = Vec::new();
    let mut tau_curve = Curve::new("tau", &["n", "replica", "tau", "radius"]);
    let opts = DlaOptions {
        mode: dc.mode,
        ..Default::default()
    };
    for (i, &n) in dc.sizes.iter().enumerate() {
        let spec = FamilySpec::RandomRegular {
            n,
            d: 3,
            seed: child_seed(config.seed, 1000 + i as u64),
        };
        let chain = generate(&spec)?;
        let (s, e, diam) = diameter_pair(&chain);
        let traces = dla_replicas(
            &chain,
            s,
            e,
            opts,
            child_seed(config.seed, 2000 + i as u64),
            dc.replicas,
        )?;
        checks.push(trace_record(&spec.to_string(), &traces, &chain).param("diameter", diam));
        for (r, tr) in traces.iter().enumerate() {
            if let Some(t) = tr.tau {
                tau_curve.push(vec![
                    n as f64,
                    r as f64,
                    t as f64,
                    *tr.radius_curve.last().unwrap() as f64,
                ]);
            }
        }
        groups.push((n, completed_taus(&traces)));
    }
    let rec = CheckRecord::new(
        "dla_growth_slope",
        anchor::DLA_GROWTH,
        "random_regular(d=3)",
    )
    .param("sizes", dc.sizes.clone())
    .param("replicas", dc.replicas)
    .param("mode", format!("{:?}", dc.mode).to_lowercase());
    let mut fit_curve = Curve::new(
        "growth",
        &["n", "log_n", "mean_tau", "stderr_tau", "log_mean_tau"],
    );
    checks.push(attempt(rec, |r| {
        let fit = growth_fit_groups(&groups, dc.resamples, child_seed(config.seed, 3000))?;
        for p in &fit.points {
            fit_curve.push(vec![
                p.n as f64,
                p.log_n,
                p.mean_tau,
                p.stderr_tau,
                p.log_mean_tau,
            ]);
        }
        Ok(r.sides(fit.slope, 0.0)
            .param("ci", vec![fit.ci.0, fit.ci.1])
            .verdict(fit.slope > 0.0 && fit.ci.0 > 0.0))
    }));

    // Complete graphs: slope 1.
    let kn_sizes = [8usize, 16, 32, 64];
    let mut kgroups = Vec::new();
    for (i, &n) in kn_sizes.iter().enumerate() {
        let chain = generate(&FamilySpec::Complete { n })?;
        let traces = dla_replicas(
            &chain,
            0,
            n - 1,
            opts,
            child_seed(config.seed, 4000 + i as u64),
            dc.replicas,
        )?;
        kgroups.push((n, completed_taus(&traces)));
    }
    let rec = CheckRecord::new("dla_complete_slope", anchor::DLA_COMPLETE_SLOPE, "complete")
        .param("sizes", kn_sizes.to_vec())
        .param("replicas", dc.replicas);
    checks.push(attempt(rec, |r| {
        let fit = growth_fit_groups(&kgroups, dc.resamples, child_seed(config.seed, 5000))?;
        Ok(r.sides(fit.slope, 1.0)
            .param("ci", vec![fit.ci.0, fit.ci.1])
            .verdict(fit.ci.0 <= 1.0 && 1.0 <= fit.ci.1))
    }));
    curves.push(fit_curve);
    curves.push(tau_curve);
    Ok((checks, curves))
}

fn completed_taus(traces: &[DlaTrace]) -> Vec<f64> {
    traces
        .iter()
        .filter_map(|t| t.tau)
        .map(|t| t as f64)
        .collect()
}

fn trace_record(instance: &str, traces: &[DlaTrace], chain: &Chain) -> CheckRecord {
    let bad: Vec<String> = traces
        .iter()
        .filter_map(|t| match (t.is_complete(), t.validate(chain)) {
            (true, Ok(())) => None,
            (false, _) => Some(format!("seed {}: {:?}", t.seed, t.status)),
            (true, Err(e)) => Some(format!("seed {}: {e}", t.seed)),
        })
        .collect();
    let rec = CheckRecord::new("dla_traces", anchor::DLA_TRACES, instance)
        .param("replicas", traces.len())
        .param("invalid", bad.len())
        .verdict(bad.is_empty());
    match bad.first() {
        Some(first) => rec.because(first.clone()),
        None => rec,
    }
}

/// The Bernoulli mean vectors and tail factors of the Bernstein suite.
pub fn bernstein_configs(seed: u64, count: usize) -> Vec<(String, Vec<f64>, f64)> {
    const FACTORS: [f64; 5] = [1.5, 2.0, std::f64::consts::E, 3.0, 4.0];
    const LENGTHS: [usize; 4] = [10, 25, 50, 100];
    (0..count)
        .map(|i| {
            let c = FACTORS[i % FACTORS.len()];
            if i % 2 == 0 {
                let k = LENGTHS[(i / 2) % LENGTHS.len()];
                (
                    format!("harmonic(k={k})"),
                    (1..=k).map(|j| 1.0 / j as f64).collect(),
                    c,
                )
            } else {
                let mut rng = child_rng(seed, 0xBE << 32 | i as u64);
                let k = rng.random_range(5..=100);
                let means = (0..k).map(|_| rng.random_range(0.0..0.5)).collect();
                (format!("uniform(k={k})"), means, c)
            }
        })
        .collect()
}

fn bernstein(config: &SuiteConfig) -> (Vec<CheckRecord>, Vec<Curve>) {
    let bc = &config.bernstein;
    let configs = bernstein_configs(config.seed, bc.configs);
    let mut curve = Curve::new(
        "bernstein",
        &["config", "eb", "c", "bound", "estimate", "stderr"],
    );
    let mut checks = Vec::new();
    for (i, (label, means, c)) in configs.into_iter().enumerate() {
        let rec = CheckRecord::new("bernstein_tail", anchor::BERNSTEIN, label)
            .param("c", c)
            .param("draws", bc.draws);
        checks.push(attempt(rec, |r| {
            let m = bernstein_monte_carlo(&means, c, bc.draws, child_seed(config.seed, i as u64))?;
            curve.push(vec![i as f64, m.eb, m.c, m.bound, m.estimate, m.stderr]);
            let limit = m.bound + config.tolerances.mc_sigma * m.stderr;
            Ok(r.sides(m.estimate, limit)
                .param("eb", m.eb)
                .param("bound", m.bound)
                .param("stderr", m.stderr)
                .verdict(m.estimate <= limit))
        }));
    }
    (checks, vec![curve])
}
