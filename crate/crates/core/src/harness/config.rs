//! Suite configuration. Every randomized choice in a suite derives from
//! `seed`; the JSON file form round-trips losslessly.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dla::DlaMode;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    /// Path reversal, commute time, mixing sandwich, return-time tail.
    Identities,
    /// Harmonic measure upper bounds and the expansion characterization.
    Bounds,
    TorusGap,
    FixedStart,
    TreeTightness,
    Dla,
    Bernstein,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 7] = [
        SuiteKind::Identities,
        SuiteKind::Bounds,
        SuiteKind::TorusGap,
        SuiteKind::FixedStart,
        SuiteKind::TreeTightness,
        SuiteKind::Dla,
        SuiteKind::Bernstein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Identities => "identities",
            SuiteKind::Bounds => "bounds",
            SuiteKind::TorusGap => "torus_gap",
            SuiteKind::FixedStart => "fixed_start",
            SuiteKind::TreeTightness => "tree_tightness",
            SuiteKind::Dla => "dla",
            SuiteKind::Bernstein => "bernstein",
        }
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        SuiteKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Config {
                field: "suite".into(),
                reason: format!("unknown suite `{s}`"),
            })
    }
}

/// Corpus families with their fixed shape parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFamily {
    Complete,
    Cycle,
    Torus2d,
    Torus3d,
    RandomRegular3,
    RandomRegular4,
    TreeExpander,
    Lamplighter,
}

impl CorpusFamily {
    pub const ALL: [CorpusFamily; 8] = [
        CorpusFamily::Complete,
        CorpusFamily::Cycle,
        CorpusFamily::Torus2d,
        CorpusFamily::Torus3d,
        CorpusFamily::RandomRegular3,
        CorpusFamily::RandomRegular4,
        CorpusFamily::TreeExpander,
        CorpusFamily::Lamplighter,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetPolicy {
    /// State 0 plus `singletons - 1` random states.
    pub singletons: usize,
    /// Inclusion probabilities for random subsets.
    pub densities: Vec<f64>,
    pub per_density: usize,
    /// Leaves and root, torus nets, lamplighter majority sets.
    pub structured: bool,
}

impl Default for SetPolicy {
    fn default() -> Self {
        Self {
            singletons: 2,
            densities: vec![0.125, 0.5],
            per_density: 2,
            structured: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute residual for exact identities.
    pub identity: f64,
    /// Closed forms (cosine spectrum).
    pub closed_form: f64,
    /// Inner-boundary harmonic mass closed form.
    pub folner: f64,
    /// Relative tolerance on the complete-graph DLA mean.
    pub dla_mean_rel: f64,
    /// Standard errors allowed above the Bernstein bound.
    pub mc_sigma: f64,
    /// Allowed max/min ratio of `gap * n^2` across torus sizes.
    pub gap_stability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-8,
            closed_form: 1e-9,
            folner: 1e-8,
            dla_mean_rel: 0.05,
            mc_sigma: 3.0,
            gap_stability: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DlaConfig {
    /// Chain sizes for the growth fit (random 3-regular graphs).
    pub sizes: Vec<usize>,
    pub replicas: usize,
    pub mode: DlaMode,
    pub resamples: usize,
    /// Complete graph size for the closed-form oracle.
    pub oracle_n: usize,
    pub oracle_replicas: usize,
    /// Draws per aggregate in the exact-versus-walk step comparison.
    pub step_draws: usize,
}

impl Default for DlaConfig {
    fn default() -> Self {
        Self {
            sizes: vec![64, 128, 256, 512],
            replicas: 200,
            mode: DlaMode::Walk,
            resamples: 1000,
            oracle_n: 16,
            oracle_replicas: 10_000,
            step_draws: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedStartConfig {
    pub n: usize,
    pub d: usize,
    pub r: usize,
    /// Number of sampled starting states.
    pub starts: usize,
}

impl Default for FixedStartConfig {
    fn default() -> Self {
        Self {
            n: 16,
            d: 2,
            r: 2,
            starts: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub ks: Vec<usize>,
    pub seed_count: usize,
    /// `h_S(root) |S|` must exceed this.
    pub uniform_factor: f64,
    /// Pinned center of the normalized ratio band.
    pub band_center: f64,
    /// Total multiplicative width of the band.
    pub band_width: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            ks: vec![4, 5, 6, 7],
            seed_count: 2,
            uniform_factor: 4.0,
            band_center: 0.6870,
            band_width: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BernsteinConfig {
    pub configs: usize,
    pub draws: usize,
}

impl Default for BernsteinConfig {
    fn default() -> Self {
        Self {
            configs: 20,
            draws: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    /// Directory for per-curve CSV files.
    pub curves: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub suite: SuiteKind,
    pub seed: u64,
    /// Target corpus sizes (torus side lengths for `torus_gap`).
    pub sizes: Vec<usize>,
    /// Extra sizes restricted to random 3-regular and 3-d torus chains with
    /// one singleton and one sparse random set each.
    pub large_sizes: Vec<usize>,
    pub families: Vec<CorpusFamily>,
    pub sets: SetPolicy,
    /// Sizes of the small corpus used for exhaustive checks (n <= 14).
    pub exact_sizes: Vec<usize>,
    /// `eps = 2^-j` for these `j`.
    pub eps_exponents: Vec<u32>,
    pub t_max: u64,
    pub commute_pairs: usize,
    /// Torus dimension for `torus_gap`.
    pub torus_d: usize,
    pub tolerances: Tolerances,
    pub dla: DlaConfig,
    pub fixed_start: FixedStartConfig,
    pub tree: TreeConfig,
    pub bernstein: BernsteinConfig,
    pub output: OutputPaths,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            suite: SuiteKind::Identities,
            seed: 7,
            sizes: vec![16, 32, 64],
            large_sizes: Vec::new(),
            families: CorpusFamily::ALL.to_vec(),
            sets: SetPolicy::default(),
            exact_sizes: vec![8, 10, 12, 14],
            eps_exponents: (1..=6).collect(),
            t_max: 200,
            commute_pairs: 3,
            torus_d: 2,
            tolerances: Tolerances::default(),
            dla: DlaConfig::default(),
            fixed_start: FixedStartConfig::default(),
            tree: TreeConfig::default(),
            bernstein: BernsteinConfig::default(),
            output: OutputPaths::default(),
        }
    }
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

impl SuiteConfig {
    /// Defaults for `suite`.
    pub fn for_suite(suite: SuiteKind) -> Self {
        let mut c = SuiteConfig {
            suite,
            ..Default::default()
        };
        match suite {
            SuiteKind::Identities => {
                c.sizes = vec![16, 32, 64, 128];
                c.sets.singletons = 3;
            }
            SuiteKind::Bounds => c.sizes = vec![16, 64, 256],
            SuiteKind::TorusGap => c.sizes = vec![8, 16, 32],
            _ => {}
        }
        c
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Parse and validate; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: SuiteConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(&path, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let corpus = matches!(self.suite, SuiteKind::Identities | SuiteKind::Bounds);
        if corpus && self.sizes.is_empty() && self.large_sizes.is_empty() {
            return Err(config_err("sizes", "at least one corpus size is required"));
        }
        if corpus && self.families.is_empty() {
            return Err(config_err("families", "at least one family is required"));
        }
        if let Some(&n) = self.sizes.iter().chain(&self.large_sizes).find(|&&n| n < 2) {
            return Err(config_err("sizes", format!("size {n} is below 2")));
        }
        if let Some(&d) = self
            .sets
            .densities
            .iter()
            .find(|d| !(**d > 0.0 && **d < 1.0))
        {
            return Err(config_err(
                "sets.densities",
                format!("density {d} not in (0, 1)"),
            ));
        }
        if let Some(&j) = self.eps_exponents.iter().find(|&&j| j == 0 || j > 30) {
            return Err(config_err(
                "eps_exponents",
                format!("exponent {j} not in 1..=30"),
            ));
        }
        if let Some(&n) = self.exact_sizes.iter().find(|&&n| !(2..=14).contains(&n)) {
            return Err(config_err("exact_sizes", format!("size {n} not in 2..=14")));
        }
        if self.suite == SuiteKind::TorusGap {
            if self.sizes.len() < 3 {
                return Err(config_err(
                    "sizes",
                    "torus gap scaling needs at least 3 sizes",
                ));
            }
            if self.torus_d == 0 {
                return Err(config_err("torus_d", "dimension must be at least 1"));
            }
        }
        let t = &self.tolerances;
        for (field, v) in [
            ("tolerances.identity", t.identity),
            ("tolerances.closed_form", t.closed_form),
            ("tolerances.folner", t.folner),
            ("tolerances.dla_mean_rel", t.dla_mean_rel),
            ("tolerances.mc_sigma", t.mc_sigma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(
                    field,
                    format!("{v} must be positive and finite"),
                ));
            }
        }
        if !(t.gap_stability >= 1.0) {
            return Err(config_err("tolerances.gap_stability", "must be at least 1"));
        }
        if self.suite == SuiteKind::Dla {
            let d = &self.dla;
            if d.sizes.len() < crate::dla::MIN_FIT_SIZES {
                return Err(config_err("dla.sizes", "growth fit needs at least 3 sizes"));
            }
            if d.replicas < crate::dla::MIN_FIT_REPLICAS {
                return Err(config_err(
                    "dla.replicas",
                    "growth fit needs at least 100 replicas",
                ));
            }
            if d.resamples == 0 {
                return Err(config_err("dla.resamples", "must be positive"));
            }
            if d.oracle_n < 3 || d.oracle_replicas == 0 || d.step_draws == 0 {
                return Err(config_err(
                    "dla.oracle_n",
                    "oracle needs n >= 3 and positive draw counts",
                ));
            }
        }
        if self.suite == SuiteKind::TreeTightness && self.tree.ks.iter().any(|&k| k < 2) {
            return Err(config_err("tree.ks", "depth must be at least 2"));
        }
        if self.suite == SuiteKind::TreeTightness && !(self.tree.band_width > 1.0) {
            return Err(config_err("tree.band_width", "must exceed 1"));
        }
        if self.suite == SuiteKind::Bernstein
            && (self.bernstein.configs == 0 || self.bernstein.draws == 0)
        {
            return Err(config_err(
                "bernstein",
                "configs and draws must be positive",
            ));
        }
        Ok(())
    }
}
