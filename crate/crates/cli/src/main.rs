//! `hm`: harmonic measure, hitting times, spectra and DLA on reversible
//! finite Markov chains.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hm_core::dla::{dla_replicas, growth_fit, Boundary, DlaMode, DlaOptions, DlaTrace};
use hm_core::graph::diameter_pair;
use hm_core::harmonic::{
    bound_har, bound_main, harmonic_from, harmonic_stationary, support_profile, HarmonicMeasure,
};
use hm_core::harness::{run_suite, SuiteConfig, SuiteKind};
use hm_core::hitting::{expected_hitting, uniform_transience, UMode};
use hm_core::io::{load_chain, load_set, ChainFile};
use hm_core::spectral::{cheeger, spectrum, CheegerMode, EXACT_CHEEGER_MAX_N};
use hm_core::{Chain, Error, FamilyKind, FamilySpec, VertexSet};

const DEFAULT_SEED: u64 = 7;

/// Exit code for configuration and usage errors.
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "hm",
    version,
    about = "Harmonic measure and hitting times on reversible Markov chains"
)]
struct Cli {
    /// Master seed for every randomized step [default: 7; for `verify`,
    /// the config file's seed].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "HM_THREADS")]
    threads: Option<usize>,
    /// Residual tolerance for identity checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Output path (stdout when absent).
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a chain from a named family.
    Gen(GenArgs),
    /// Spectrum, gap, mixing time and Cheeger constant.
    Spectral(SpectralArgs),
    /// Expected hitting and return times to a set, and u(P).
    Hitting(HittingArgs),
    /// Harmonic measure of a set from a state or from stationarity.
    Harmonic(HarmonicArgs),
    /// Run DLA replicas and write JSON-lines traces.
    Dla(DlaArgs),
    /// Fit the growth exponent of tau from trace files.
    DlaFit(DlaFitArgs),
    /// Run a verification suite and write its report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct SetArgs {
    /// JSON set file `{"indices": [...]}`.
    #[arg(long, conflicts_with = "states")]
    set: Option<PathBuf>,
    /// Comma-separated states.
    #[arg(long, value_delimiter = ',')]
    states: Option<Vec<usize>>,
}

impl SetArgs {
    fn resolve(&self, n: usize) -> Result<VertexSet> {
        match (&self.set, &self.states) {
            (Some(path), _) => Ok(load_set(path, n)?),
            (None, Some(states)) => Ok(VertexSet::new(n, states.iter().copied())?),
            (None, None) => bail!("a target set is required (--set or --states)"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CheegerArg {
    Auto,
    Exact,
    Sweep,
}

#[derive(Args)]
struct SpectralArgs {
    chain: PathBuf,
    #[arg(long, value_enum, default_value_t = CheegerArg::Auto)]
    cheeger: CheegerArg,
    /// Include the full eigenvalue list.
    #[arg(long)]
    eigenvalues: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum UArg {
    Full,
    Sampled,
    None,
}

#[derive(Args)]
struct HittingArgs {
    chain: PathBuf,
    #[command(flatten)]
    set: SetArgs,
    #[arg(long, value_enum, default_value_t = UArg::None)]
    u: UArg,
    /// Pairs for sampled u(P).
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
}

#[derive(Args)]
struct HarmonicArgs {
    chain: PathBuf,
    #[command(flatten)]
    set: SetArgs,
    /// Starting state; stationary start when absent.
    #[arg(long)]
    from: Option<usize>,
    /// Also evaluate the return-time and main upper bounds.
    #[arg(long)]
    bounds: bool,
    /// Smallest greedy subset carrying this much harmonic mass.
    #[arg(long)]
    profile: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Walk,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Outer,
    Inner,
}

#[derive(Args)]
struct DlaArgs {
    chain: PathBuf,
    /// Seed state; with `--end` absent both default to a diameter pair.
    #[arg(long)]
    start: Option<usize>,
    #[arg(long)]
    end: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Outer)]
    boundary: BoundaryArg,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
}

#[derive(Args)]
struct DlaFitArgs {
    /// JSON-lines trace files.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name; overrides the config file.
    #[arg(long)]
    suite: Option<String>,
    /// JSON config mirroring SuiteConfig.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    large_sizes: Option<Vec<usize>>,
    /// Directory for CSV curves.
    #[arg(long)]
    curves: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e
                .downcast_ref::<Error>()
                .is_some_and(|e| matches!(e, Error::Config { .. }));
            ExitCode::from(if config { EXIT_CONFIG } else { 1 })
        }
    }
}

/// Output cut short by a closed reader, as in `hm spectral c.json | head`.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<serde_json::Error>()
                .is_some_and(|j| j.io_error_kind() == Some(std::io::ErrorKind::BrokenPipe))
            || c.downcast_ref::<Error>().is_some_and(
                |e| matches!(e, Error::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe),
            )
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let out = cli.output.as_deref();
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match &cli.command {
        Command::Gen(a) => gen(a, seed, out),
        Command::Spectral(a) => spectral_cmd(a, out),
        Command::Hitting(a) => hitting_cmd(a, seed, out),
        Command::Harmonic(a) => harmonic_cmd(a, out),
        Command::Dla(a) => dla_cmd(a, seed, out),
        Command::DlaFit(a) => dla_fit_cmd(a, seed, out),
        Command::Verify(a) => return verify_cmd(a, &cli),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(value: &Value, path: Option<&Path>) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn chain_from(path: &Path) -> Result<Chain> {
    load_chain(path).with_context(|| format!("loading chain {}", path.display()))
}

fn gen(a: &GenArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let kind: FamilyKind = a.family.parse()?;
    let need = |v: Option<usize>, name: &str| {
        v.with_context(|| format!("family {} needs --{name}", a.family))
    };
    let spec = match kind {
        FamilyKind::Complete => FamilySpec::Complete { n: need(a.n, "n")? },
        FamilyKind::Cycle => FamilySpec::Cycle { n: need(a.n, "n")? },
        FamilyKind::Path => FamilySpec::Path { n: need(a.n, "n")? },
        FamilyKind::Torus => FamilySpec::Torus {
            n: need(a.n, "n")?,
            d: need(a.d, "d")?,
        },
        FamilyKind::RandomRegular => FamilySpec::RandomRegular {
            n: need(a.n, "n")?,
            d: need(a.d, "d")?,
            seed,
        },
        FamilyKind::TreeExpander => FamilySpec::TreeExpander {
            k: need(a.k, "k")?,
            seed,
        },
        FamilyKind::Lamplighter => FamilySpec::Lamplighter { n: need(a.n, "n")? },
    };
    let chain = hm_core::generate(&spec)?;
    emit(&serde_json::to_value(ChainFile::from_chain(&chain))?, out)
}

fn spectral_cmd(a: &SpectralArgs, out: Option<&Path>) -> Result<()> {
    let chain = chain_from(&a.chain)?;
    let s = spectrum(&chain)?;
    let mode = match a.cheeger {
        CheegerArg::Exact => CheegerMode::Exact,
        CheegerArg::Sweep => CheegerMode::Sweep,
        CheegerArg::Auto if chain.n() <= EXACT_CHEEGER_MAX_N => CheegerMode::Exact,
        CheegerArg::Auto => CheegerMode::Sweep,
    };
    let c = cheeger(&chain, mode)?;
    let mut v = json!({
        "n": chain.n(),
        "laziness_applied": chain.laziness_applied(),
        "lambda": s.lambda,
        "gap": s.gap,
        "t_mix": s.t_mix,
        "cheeger": {
            "phi": c.phi,
            "mode": format!("{:?}", c.mode).to_lowercase(),
            "upper_bound": c.upper_bound,
            "witness": c.witness.indices(),
        },
    });
    if a.eigenvalues {
        v["eigenvalues"] = json!(s.eigenvalues);
    }
    emit(&v, out)
}

fn hitting_cmd(a: &HittingArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let chain = chain_from(&a.chain)?;
    let set = a.set.resolve(chain.n())?;
    let h = expected_hitting(&chain, &set)?;
    let mut v = json!({
        "set": set.indices(),
        "hit": h.hit,
        "return": h.ret,
        "stationary_return": h.stationary_return,
    });
    let mode = match a.u {
        UArg::None => None,
        UArg::Full => Some(UMode::Full),
        UArg::Sampled => Some(UMode::Sampled { k: a.pairs, seed }),
    };
    if let Some(mode) = mode {
        let u = uniform_transience(&chain, mode)?;
        v["u"] = json!({
            "value": u.u,
            "argmin": [u.argmin.0, u.argmin.1],
            "upper_bound": u.upper_bound,
            "pairs_evaluated": u.pairs_evaluated,
        });
    }
    emit(&v, out)
}

fn measure_json(h: &HarmonicMeasure) -> Value {
    json!({
        "support": h.support().indices(),
        "weights": h.weights(),
    })
}

fn harmonic_cmd(a: &HarmonicArgs, out: Option<&Path>) -> Result<()> {
    let chain = chain_from(&a.chain)?;
    let set = a.set.resolve(chain.n())?;
    let h = match a.from {
        Some(y) => harmonic_from(&chain, &set, y)?,
        None => harmonic_stationary(&chain, &set)?,
    };
    let mut v = json!({
        "from": a.from.map_or(json!("stationary"), |y| json!(y)),
        "measure": measure_json(&h),
    });
    if a.bounds {
        let u = uniform_transience(&chain, UMode::Full)?;
        let har = bound_har(&chain, &set, &u)?;
        let main = bound_main(&chain, &set, &u)?;
        v["bounds"] = json!({
            "u": u.u,
            "har": { "max_ratio": har.max_ratio, "violations": har.violations },
            "main": {
                "max_ratio": main.max_ratio,
                "violations": main.violations,
                "empirical_constant": main.empirical_constant,
            },
        });
    }
    if let Some(q) = a.profile {
        let p = support_profile(&chain, &set, q)?;
        v["profile"] = json!({
            "q": q,
            "set": p.set.indices(),
            "pi_mass": p.pi_mass,
            "harmonic_mass": p.harmonic_mass,
            "heuristic": p.heuristic,
        });
    }
    emit(&v, out)
}

fn dla_cmd(a: &DlaArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let chain = chain_from(&a.chain)?;
    let (s, e) = match (a.start, a.end) {
        (Some(s), Some(e)) => (s, e),
        (None, None) => {
            let (s, e, _) = diameter_pair(&chain);
            (s, e)
        }
        _ => bail!("give both --start and --end, or neither"),
    };
    let opts = DlaOptions {
        mode: match a.mode {
            ModeArg::Exact => DlaMode::Exact,
            ModeArg::Walk => DlaMode::Walk,
        },
        boundary: match a.boundary {
            BoundaryArg::Outer => Boundary::Outer,
            BoundaryArg::Inner => Boundary::Inner,
        },
    };
    let traces = dla_replicas(&chain, s, e, opts, seed, a.replicas)?;
    let mut w = sink(out)?;
    for t in &traces {
        serde_json::to_writer(&mut w, t)?;
        writeln!(w)?;
    }
    w.flush()?;
    let stalled = traces.iter().filter(|t| !t.is_complete()).count();
    if stalled > 0 {
        eprintln!(
            "{stalled} of {} runs did not reach the end state",
            traces.len()
        );
        if let Some(t) = traces.iter().find(|t| !t.is_complete()) {
            eprintln!("first: {:?}", t.status);
        }
    }
    Ok(())
}

fn dla_fit_cmd(a: &DlaFitArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let mut traces = Vec::new();
    for path in &a.traces {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let t: DlaTrace = serde_json::from_str(&line)
                .with_context(|| format!("{}:{}", path.display(), i + 1))?;
            traces.push(t);
        }
    }
    let fit = growth_fit(&traces, a.resamples, seed)?;
    emit(&serde_json::to_value(fit)?, out)
}

fn verify_cmd(a: &VerifyArgs, cli: &Cli) -> Result<ExitCode> {
    let mut config = match &a.config {
        Some(path) => SuiteConfig::load(path)?,
        None => {
            let kind: SuiteKind = a
                .suite
                .as_deref()
                .context("give --suite or --config")?
                .parse()?;
            SuiteConfig::for_suite(kind)
        }
    };
    if let (Some(name), Some(_)) = (&a.suite, &a.config) {
        config.suite = name.parse()?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(sizes) = &a.sizes {
        config.sizes = sizes.clone();
    }
    if let Some(sizes) = &a.large_sizes {
        config.large_sizes = sizes.clone();
    }
    if let Some(t) = cli.tolerance {
        config.tolerances.identity = t;
    }
    if let Some(p) = &cli.output {
        config.output.report = Some(p.clone());
    }
    if let Some(p) = &a.curves {
        config.output.curves = Some(p.clone());
    }
    let output = run_suite(&config)?;
    output.persist()?;
    let r = &output.report;
    if config.output.report.is_none() {
        print!("{}", r.to_json());
    }
    eprintln!(
        "suite {}: {} checks, {} pass, {} fail, {} skip, {} info",
        r.suite, r.summary.total, r.summary.pass, r.summary.fail, r.summary.skip, r.summary.info
    );
    Ok(if r.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
