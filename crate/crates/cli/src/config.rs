//! Settings from flags and an optional flat `key = value` file, resolved into
//! a validated run configuration.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use qmcqoi::{BounderConfig, ErrorMetric, Randomization, RunOptions, SequenceKind, SequenceSpec};

pub const SEED_ENV: &str = "QMCQOI_SEED";

#[derive(Parser, Debug)]
#[command(name = "qmcqoi", version, about = "Adaptive (quasi-)Monte Carlo for array quantities of interest")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Integrate,
    Sensitivity,
    PosteriorMean,
    Qei,
    Convergence,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Means of a built-in test integrand.
    Integrate(CommandArgs),
    /// Closed and total sensitivity indices.
    Sensitivity(CommandArgs),
    /// Bayesian posterior means.
    PosteriorMean(CommandArgs),
    /// Batch expected improvement.
    Qei(CommandArgs),
    /// Fixed-n error decay per sequence kind.
    Convergence(CommandArgs),
}

impl Command {
    pub fn split(self) -> (CommandKind, CommandArgs) {
        match self {
            Command::Integrate(a) => (CommandKind::Integrate, a),
            Command::Sensitivity(a) => (CommandKind::Sensitivity, a),
            Command::PosteriorMean(a) => (CommandKind::PosteriorMean, a),
            Command::Qei(a) => (CommandKind::Qei, a),
            Command::Convergence(a) => (CommandKind::Convergence, a),
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommandArgs {
    /// Flat `key = value` settings file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceArg {
    Iid,
    Lattice,
    Net,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomizationArg {
    None,
    Shift,
    Scramble,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum BounderArg {
    Clt,
    Replications,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricArg {
    AbsOrRel,
    AbsAndRel,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetsArg {
    Singletons,
    All,
}

/// Every setting is optional so flag and file layers can be merged.
#[derive(Args, Debug, Clone, Default, PartialEq)]
pub struct Settings {
    /// Sequence kind [default: lattice].
    #[arg(long, value_enum)]
    pub sequence: Option<SequenceArg>,
    /// Randomization of low-discrepancy sequences [default: shift].
    #[arg(long, value_enum)]
    pub randomization: Option<RandomizationArg>,
    /// Mean bounder [default: clt for iid, replications otherwise].
    #[arg(long, value_enum)]
    pub bounder: Option<BounderArg>,
    /// Sequence seed [default: $QMCQOI_SEED, else 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Uncertainty level of every QOI [default: 0.05].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Absolute tolerance [default: 0.01].
    #[arg(long)]
    pub eps_abs: Option<f64>,
    /// Relative tolerance in [0, 1) [default: 0].
    #[arg(long)]
    pub eps_rel: Option<f64>,
    /// How absolute and relative tolerances combine [default: abs-or-rel].
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// First block holds 2^m1 points [default: 10].
    #[arg(long)]
    pub m1: Option<u32>,
    /// Sample budget per sequence [default: 16777216].
    #[arg(long)]
    pub max_samples: Option<u64>,
    /// Replications for the replications bounder [default: 16].
    #[arg(long)]
    pub replications: Option<usize>,
    /// Bound inflation factor C [default: 1.2].
    #[arg(long)]
    pub inflation: Option<f64>,
    /// Worker threads [default: 1].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output format [default: json].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file [default: standard output].
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Named problem: integrate {product, moments}, sensitivity {ishigami},
    /// posterior-mean {conjugate}, qei {half-normal}.
    #[arg(long)]
    pub preset: Option<String>,
    /// Input dimension of the product integrand [default: 3].
    #[arg(long)]
    pub dimension: Option<usize>,
    /// Sensitivity subsets [default: singletons].
    #[arg(long, value_enum)]
    pub subsets: Option<SubsetsArg>,
    /// Ishigami `a` [default: 7].
    #[arg(long)]
    pub a: Option<f64>,
    /// Ishigami `b` [default: 0.1].
    #[arg(long)]
    pub b: Option<f64>,
    /// Comma-separated observations [default: 1,1].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub observations: Option<Vec<f64>>,
    /// JSON file with `means`, `factors` and `y_star` for qei.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Randomization seeds per sample size [default: 128].
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Smallest sample size exponent [default: 8].
    #[arg(long)]
    pub m_min: Option<u32>,
    /// Largest sample size exponent [default: 14].
    #[arg(long)]
    pub m_max: Option<u32>,
}

const RUN_KEYS: &[&str] = &[
    "sequence",
    "randomization",
    "bounder",
    "seed",
    "alpha",
    "eps-abs",
    "eps-rel",
    "metric",
    "m1",
    "max-samples",
    "replications",
    "inflation",
    "workers",
    "format",
    "output",
];

fn applicable_keys(command: CommandKind) -> Vec<&'static str> {
    let extra: &[&str] = match command {
        CommandKind::Integrate => &["preset", "dimension"],
        CommandKind::Sensitivity => &["preset", "subsets", "a", "b"],
        CommandKind::PosteriorMean => &["preset", "observations"],
        CommandKind::Qei => &["preset", "spec"],
        CommandKind::Convergence => {
            return vec!["preset", "dimension", "seed", "seeds", "m-min", "m-max", "format", "output"];
        }
    };
    RUN_KEYS.iter().chain(extra).copied().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<qmcqoi::Error> for ConfigError {
    fn from(e: qmcqoi::Error) -> Self {
        ConfigError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

fn value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| bad(format!("invalid value `{raw}` for `{key}`: {e}")))
}

fn choice<T: ValueEnum>(key: &str, raw: &str) -> Result<T> {
    T::from_str(raw, true).map_err(|_| {
        let names: Vec<String> = T::value_variants()
            .iter()
            .filter_map(|v| v.to_possible_value().map(|p| p.get_name().to_string()))
            .collect();
        bad(format!("invalid value `{raw}` for `{key}`; expected one of {}", names.join(", ")))
    })
}

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment. Keys use the flag
    /// spelling, with `_` accepted for `-`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        let mut seen = BTreeSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim().replace('_', "-");
            let raw = raw.trim();
            if !seen.insert(key.clone()) {
                return Err(bad(format!("line {}: `{key}` given twice", n + 1)));
            }
            s.set(&key, raw).map_err(|e| bad(format!("line {}: {e}", n + 1)))?;
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "sequence" => self.sequence = Some(choice(key, raw)?),
            "randomization" => self.randomization = Some(choice(key, raw)?),
            "bounder" => self.bounder = Some(choice(key, raw)?),
            "seed" => self.seed = Some(value(key, raw)?),
            "alpha" => self.alpha = Some(value(key, raw)?),
            "eps-abs" => self.eps_abs = Some(value(key, raw)?),
            "eps-rel" => self.eps_rel = Some(value(key, raw)?),
            "metric" => self.metric = Some(choice(key, raw)?),
            "m1" => self.m1 = Some(value(key, raw)?),
            "max-samples" => self.max_samples = Some(value(key, raw)?),
            "replications" => self.replications = Some(value(key, raw)?),
            "inflation" => self.inflation = Some(value(key, raw)?),
            "workers" => self.workers = Some(value(key, raw)?),
            "format" => self.format = Some(choice(key, raw)?),
            "output" => self.output = Some(PathBuf::from(raw)),
            "preset" => self.preset = Some(raw.to_string()),
            "dimension" => self.dimension = Some(value(key, raw)?),
            "subsets" => self.subsets = Some(choice(key, raw)?),
            "a" => self.a = Some(value(key, raw)?),
            "b" => self.b = Some(value(key, raw)?),
            "observations" => {
                self.observations = Some(
                    raw.split(',')
                        .map(str::trim)
                        .filter(|v| !v.is_empty())
                        .map(|v| value(key, v))
                        .collect::<Result<_>>()?,
                )
            }
            "spec" => self.spec = Some(PathBuf::from(raw)),
            "seeds" => self.seeds = Some(value(key, raw)?),
            "m-min" => self.m_min = Some(value(key, raw)?),
            "m-max" => self.m_max = Some(value(key, raw)?),
            _ => return Err(bad(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Field-wise `self` over `base`.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            sequence: self.sequence.or(base.sequence),
            randomization: self.randomization.or(base.randomization),
            bounder: self.bounder.or(base.bounder),
            seed: self.seed.or(base.seed),
            alpha: self.alpha.or(base.alpha),
            eps_abs: self.eps_abs.or(base.eps_abs),
            eps_rel: self.eps_rel.or(base.eps_rel),
            metric: self.metric.or(base.metric),
            m1: self.m1.or(base.m1),
            max_samples: self.max_samples.or(base.max_samples),
            replications: self.replications.or(base.replications),
            inflation: self.inflation.or(base.inflation),
            workers: self.workers.or(base.workers),
            format: self.format.or(base.format),
            output: self.output.or(base.output),
            preset: self.preset.or(base.preset),
            dimension: self.dimension.or(base.dimension),
            subsets: self.subsets.or(base.subsets),
            a: self.a.or(base.a),
            b: self.b.or(base.b),
            observations: self.observations.or(base.observations),
            spec: self.spec.or(base.spec),
            seeds: self.seeds.or(base.seeds),
            m_min: self.m_min.or(base.m_min),
            m_max: self.m_max.or(base.m_max),
        }
    }

    fn keys_set(&self) -> Vec<&'static str> {
        let flags = [
            ("sequence", self.sequence.is_some()),
            ("randomization", self.randomization.is_some()),
            ("bounder", self.bounder.is_some()),
            ("seed", self.seed.is_some()),
            ("alpha", self.alpha.is_some()),
            ("eps-abs", self.eps_abs.is_some()),
            ("eps-rel", self.eps_rel.is_some()),
            ("metric", self.metric.is_some()),
            ("m1", self.m1.is_some()),
            ("max-samples", self.max_samples.is_some()),
            ("replications", self.replications.is_some()),
            ("inflation", self.inflation.is_some()),
            ("workers", self.workers.is_some()),
            ("format", self.format.is_some()),
            ("output", self.output.is_some()),
            ("preset", self.preset.is_some()),
            ("dimension", self.dimension.is_some()),
            ("subsets", self.subsets.is_some()),
            ("a", self.a.is_some()),
            ("b", self.b.is_some()),
            ("observations", self.observations.is_some()),
            ("spec", self.spec.is_some()),
            ("seeds", self.seeds.is_some()),
            ("m-min", self.m_min.is_some()),
            ("m-max", self.m_max.is_some()),
        ];
        flags.iter().filter(|(_, set)| *set).map(|(k, _)| *k).collect()
    }
}

/// Problem selected by the command and its settings.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemConfig {
    Product { dimension: usize },
    Moments,
    Ishigami { a: f64, b: f64, subsets: SubsetsArg },
    Conjugate { observations: Vec<f64> },
    Qei { spec: Option<PathBuf> },
    Convergence { dimension: usize, seeds: usize, m_min: u32, m_max: u32 },
}

impl ProblemConfig {
    pub fn dimension(&self) -> usize {
        match self {
            ProblemConfig::Product { dimension } => *dimension,
            ProblemConfig::Moments => 1,
            ProblemConfig::Ishigami { .. } => 6,
            ProblemConfig::Conjugate { .. } => 1,
            ProblemConfig::Qei { .. } => 0,
            ProblemConfig::Convergence { dimension, .. } => *dimension,
        }
    }
}

/// Fully resolved configuration of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub problem: ProblemConfig,
    pub sequence: SequenceKind,
    pub randomization: Randomization,
    pub bounder: BounderConfig,
    pub seed: u64,
    pub alpha: f64,
    pub metric: ErrorMetric,
    pub m1: u32,
    pub max_samples: u64,
    pub workers: usize,
    pub format: Format,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Run options for a problem of sampling dimension `dimension`, validated
    /// by the library.
    pub fn run_options(&self, dimension: usize) -> Result<RunOptions> {
        let spec = SequenceSpec::new(self.sequence, dimension, self.seed).with_randomization(self.randomization);
        let options = RunOptions::new(spec, self.bounder)
            .with_m1(self.m1)
            .with_max_samples(self.max_samples)
            .with_workers(self.workers);
        options.validate()?;
        Ok(options)
    }
}

/// Merges flags over the config file, applies defaults and validates.
///
/// `env_seed` is the value of `QMCQOI_SEED`, used when neither layer sets a
/// seed.
pub fn parse_config(command: CommandKind, args: CommandArgs, env_seed: Option<&str>) -> Result<RunConfig> {
    let file = match &args.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let s = args.settings.over(file);
    let allowed = applicable_keys(command);
    if let Some(key) = s.keys_set().into_iter().find(|k| !allowed.contains(k)) {
        return Err(bad(format!("`{key}` does not apply to this command")));
    }

    let seed = match (s.seed, env_seed) {
        (Some(seed), _) => seed,
        (None, Some(raw)) => value(SEED_ENV, raw.trim())?,
        (None, None) => 0,
    };
    let problem = problem_config(command, &s)?;

    let sequence = match s.sequence.unwrap_or(SequenceArg::Lattice) {
        SequenceArg::Iid => SequenceKind::Iid,
        SequenceArg::Lattice => SequenceKind::Lattice,
        SequenceArg::Net => SequenceKind::DigitalNet,
    };
    let randomization = match s.randomization {
        None if sequence == SequenceKind::Iid => Randomization::None,
        None => Randomization::Shift,
        Some(_) if sequence == SequenceKind::Iid => {
            return Err(bad("`randomization` applies to lattice and net sequences only"));
        }
        Some(RandomizationArg::None) => Randomization::None,
        Some(RandomizationArg::Shift) => Randomization::Shift,
        Some(RandomizationArg::Scramble) => Randomization::Scramble,
    };
    let bounder_kind = s.bounder.unwrap_or(if sequence == SequenceKind::Iid {
        BounderArg::Clt
    } else {
        BounderArg::Replications
    });
    let mut bounder = match bounder_kind {
        BounderArg::Clt => {
            if s.replications.is_some() {
                return Err(bad("`replications` requires the replications bounder"));
            }
            BounderConfig::clt()
        }
        BounderArg::Replications => BounderConfig::replications(s.replications.unwrap_or(16)),
    };
    if let Some(c) = s.inflation {
        bounder = bounder.with_inflation(c);
    }
    bounder.validate()?;

    let alpha = s.alpha.unwrap_or(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(bad(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let eps_abs = s.eps_abs.unwrap_or(0.01);
    let eps_rel = s.eps_rel.unwrap_or(0.0);
    let metric = match s.metric.unwrap_or(MetricArg::AbsOrRel) {
        MetricArg::AbsOrRel => ErrorMetric::abs_or_rel(eps_abs, eps_rel)?,
        MetricArg::AbsAndRel => ErrorMetric::abs_and_rel(eps_abs, eps_rel)?,
    };

    let config = RunConfig {
        command,
        problem,
        sequence,
        randomization,
        bounder,
        seed,
        alpha,
        metric,
        m1: s.m1.unwrap_or(10),
        max_samples: s.max_samples.unwrap_or(1 << 24),
        workers: s.workers.unwrap_or(1),
        format: s.format.unwrap_or(Format::Json),
        output: s.output,
    };
    if command != CommandKind::Convergence {
        // The qei dimension is only known once its spec is read; check the
        // sequence settings with dimension 1 here and again at run time.
        config.run_options(config.problem.dimension().max(1))?;
    }
    Ok(config)
}

fn problem_config(command: CommandKind, s: &Settings) -> Result<ProblemConfig> {
    let preset = s.preset.as_deref();
    let unknown = |p: &str| bad(format!("unknown preset `{p}` for this command"));
    match command {
        CommandKind::Integrate => match preset.unwrap_or("product") {
            "product" => {
                let dimension = s.dimension.unwrap_or(3);
                if dimension == 0 {
                    return Err(bad("dimension must be at least 1"));
                }
                Ok(ProblemConfig::Product { dimension })
            }
            "moments" => {
                if s.dimension.is_some() {
                    return Err(bad("the moments preset has fixed dimension 1"));
                }
                Ok(ProblemConfig::Moments)
            }
            p => Err(unknown(p)),
        },
        CommandKind::Sensitivity => match preset.unwrap_or("ishigami") {
            "ishigami" => Ok(ProblemConfig::Ishigami {
                a: s.a.unwrap_or(qmcqoi::problems::ISHIGAMI_A),
                b: s.b.unwrap_or(qmcqoi::problems::ISHIGAMI_B),
                subsets: s.subsets.unwrap_or(SubsetsArg::Singletons),
            }),
            p => Err(unknown(p)),
        },
        CommandKind::PosteriorMean => match preset.unwrap_or("conjugate") {
            "conjugate" => Ok(ProblemConfig::Conjugate {
                observations: s.observations.clone().unwrap_or_else(|| vec![1.0, 1.0]),
            }),
            p => Err(unknown(p)),
        },
        CommandKind::Qei => match (preset, &s.spec) {
            (Some(_), Some(_)) => Err(bad("give either `preset` or `spec`, not both")),
            (None, Some(path)) => Ok(ProblemConfig::Qei { spec: Some(path.clone()) }),
            (None | Some("half-normal"), None) => Ok(ProblemConfig::Qei { spec: None }),
            (Some(p), None) => Err(unknown(p)),
        },
        CommandKind::Convergence => match preset.unwrap_or("product") {
            "product" => {
                let config = ProblemConfig::Convergence {
                    dimension: s.dimension.unwrap_or(3),
                    seeds: s.seeds.unwrap_or(128),
                    m_min: s.m_min.unwrap_or(8),
                    m_max: s.m_max.unwrap_or(14),
                };
                Ok(config)
            }
            p => Err(unknown(p)),
        },
    }
}
