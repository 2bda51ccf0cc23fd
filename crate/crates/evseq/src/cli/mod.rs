//! Command-line front end: streaming ingestion, method dispatch, and
//! CSV/JSON report emission.
//!
//! Subcommands: `cs`, `test`, `ebh`, `detect`, `simulate`. Exit codes:
//! 0 success, 2 configuration error, 3 data error, 4 internal invariant
//! violation.

mod ingest;
mod report;

use std::io::{BufRead, Write};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::betting::BetPolicy;
use crate::confseq::{
    rho_for_target_time, AsymptoticCs, BettingCs, CatoniCs, ConfidenceBand, EmpBernsteinCs,
    EmpBernsteinMixtureCs, MeanGridSpec, RunningIntersection,
};
use crate::detect::{ArlConfig, BaseProcessConfig, EDetector};
use crate::eprocess::StreamingEProcess;
use crate::error::{Error, Result};
use crate::multtest::{bh, ebh, evalue_weighted_bh, HypothesisPanel};
use crate::nonparam::{ExchangeabilityProcess, SymmetryBetSpec, SymmetryProcess};
use crate::param::{
    DiscretePrior, LikelihoodModel, LogrankProcess, PriorPosteriorProcess, RiskSetState,
    TTestState, TwoByTwoMixture,
};
use crate::sim::{
    mc_coverage, mc_evalue_at_stop, CoverageMethod, EvalueProcess, NullSampler, Observation,
    ScalarAdapter, StoppingRule, RNG_ALGORITHM,
};

pub use ingest::{ingest_records, RecordSchema};
pub use report::{fmt_f64, ReportFormat, ReportSink, ReportValue};

/// One parsed input record; the schema is fixed by the selected method.
pub type StreamRecord = Observation;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "evseq",
    version,
    about = "Streaming anytime-valid inference: e-processes, confidence sequences, \
             e-value multiple testing, and change detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Confidence sequences for a mean, one band row per observation.
    Cs(CsArgs),
    /// Sequential hypothesis tests; prints the final e-value, anytime-valid
    /// p-value, and reject flag.
    Test(TestArgs),
    /// Batch multiple testing on a CSV of labels and scores.
    Ebh(EbhArgs),
    /// Streaming change detection; emits (t, detector_value, stopped) rows.
    Detect(DetectArgs),
    /// Monte Carlo verification runs driven by a JSON config file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsMethodArg {
    Subgaussian,
    EmpBernstein,
    EmpBernsteinMixture,
    Betting,
    Catoni,
    Asymptotic,
}

#[derive(Debug, Args, Serialize)]
#[command(after_help = "INPUT SCHEMA:\n  one scalar observation per line, e.g. `0.5`, or `{\"x\": 0.5}`.\n\
  Blank lines and lines starting with `#` are skipped.")]
pub struct CsArgs {
    #[arg(long, value_enum)]
    pub method: CsMethodArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Known sub-Gaussian scale / variance bound, where required.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Mixture scale; defaults to the value tuned for --t0.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Target time used to pick the default mixture scale.
    #[arg(long, default_value_t = 100)]
    pub t0: u64,
    /// Catoni influence scale; defaults to the value tuned for --t0.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Bet policy for the emp-bernstein and betting methods: `plugin`
    /// (empirical) or `fixed:<lambda>`.
    #[arg(long, default_value = "plugin")]
    pub policy: String,
    /// Bet truncation constant.
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    /// Candidate grid as lo:hi:count.
    #[arg(long)]
    pub grid: Option<String>,
    /// Emit the running intersection of the bands instead of the raw bands.
    #[arg(long, default_value_t = false)]
    pub intersect: bool,
    /// Input path, or - for stdin.
    #[arg(long, default_value = "-")]
    pub input: String,
    /// Output path, or - for stdout.
    #[arg(long, default_value = "-")]
    pub output: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullKind {
    Symmetry,
    Exchangeability,
    Ttest,
    #[value(name = "2x2")]
    #[serde(rename = "2x2")]
    TwoByTwo,
    Logrank,
    PriorPosterior,
}

#[derive(Debug, Args, Serialize)]
#[command(after_help = "INPUT SCHEMA (per --null):\n\
  symmetry, ttest            one scalar per line, e.g. `0.5` or `{\"x\": 0.5}`\n\
  exchangeability            one bit per line, `0` or `1`\n\
  prior-posterior            bits (bernoulli model) or scalars (gaussian model)\n\
  2x2                        na+nb outcome bits per line, group a first,\n\
                             e.g. `1,0,1,1` or `{\"a\": [1,0], \"b\": [1,1]}`\n\
  logrank                    one group bit per line (1 = event in treatment)")]
pub struct TestArgs {
    #[arg(long, value_enum)]
    pub null: NullKind,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Symmetry bet size.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Use the admissible rectified symmetry bet.
    #[arg(long, default_value_t = true)]
    pub rectified: bool,
    /// t-test null and alternative standardized effects.
    #[arg(long, default_value_t = 0.0)]
    pub delta0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta1: f64,
    /// 2x2 block sizes.
    #[arg(long, default_value_t = 1)]
    pub na: usize,
    #[arg(long, default_value_t = 1)]
    pub nb: usize,
    /// 2x2 prior grid resolution per axis.
    #[arg(long, default_value_t = 9)]
    pub prior_grid: usize,
    /// Logrank simple-alternative log hazard ratio and initial risk sets.
    #[arg(long, default_value_t = -1.0)]
    pub beta1: f64,
    #[arg(long, default_value_t = 100)]
    pub m_treat: u64,
    #[arg(long, default_value_t = 100)]
    pub m_ctrl: u64,
    /// Prior-posterior support grid as lo:hi:count.
    #[arg(long, default_value = "0.05:0.95:19")]
    pub theta_grid: String,
    /// Index into the support grid of the tested theta*.
    #[arg(long, default_value_t = 9)]
    pub theta_index: usize,
    /// Prior-posterior observation model.
    #[arg(long, value_enum, default_value_t = PpModel::Bernoulli)]
    pub model: PpModel,
    /// Gaussian model sigma.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Also emit one row per observation, not just the final summary.
    #[arg(long, default_value_t = false)]
    pub trace: bool,
    #[arg(long, default_value = "-")]
    pub input: String,
    #[arg(long, default_value = "-")]
    pub output: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PpModel {
    Bernoulli,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EbhProcedure {
    Ebh,
    Bh,
    Weighted,
}

#[derive(Debug, Args, Serialize)]
#[command(after_help = "INPUT SCHEMA:\n\
  ebh        label,e-value per line\n\
  bh         label,p-value per line\n\
  weighted   label,p-value,e-weight per line\n\
  A single header row is permitted.")]
pub struct EbhArgs {
    #[arg(long, value_enum, default_value_t = EbhProcedure::Ebh)]
    pub procedure: EbhProcedure,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// CSV of label,score rows (label,p,e-weight for the weighted variant).
    #[arg(long, default_value = "-")]
    pub input: String,
    #[arg(long, default_value = "-")]
    pub output: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectBase {
    GaussianLr,
    Subgaussian,
    Betting,
    Unit,
}

#[derive(Debug, Args, Serialize)]
#[command(after_help = "INPUT SCHEMA:\n  one scalar observation per line \
(the betting base requires values in [0,1]).")]
pub struct DetectArgs {
    #[arg(long, value_enum)]
    pub base: DetectBase,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Pre/post-change means for the likelihood-ratio base.
    #[arg(long, default_value_t = 0.0)]
    pub mu0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Pre-change mean for the sub-Gaussian / betting bases.
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub t0: u64,
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    /// Cap on simultaneously active restarts.
    #[arg(long, default_value_t = crate::detect::DEFAULT_RESTART_CAP)]
    pub cap: usize,
    /// Stop emitting rows after the first alarm.
    #[arg(long, default_value_t = false)]
    pub stop_at_alarm: bool,
    #[arg(long, default_value = "-")]
    pub input: String,
    #[arg(long, default_value = "-")]
    pub output: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// JSON experiment description; see `SimulateConfig`.
    #[arg(long)]
    pub config: String,
    #[arg(long, default_value = "-")]
    pub output: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

// ---------------------------------------------------------------------------
// simulate config (JSON file)
// ---------------------------------------------------------------------------

/// Processes the simulation harness can build.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimProcessConfig {
    SubgaussianMixture { mu: f64, sigma: f64, rho: f64 },
    BettingMean { mu: f64, c: f64 },
    Symmetry { lambda: f64, rectified: bool },
    Exchangeability,
    GaussianLr { mu0: f64, mu1: f64, sigma: f64 },
    TwobytwoMixture { prior_grid: usize },
    Logrank { m_treat: u64, m_ctrl: u64, beta1: f64 },
}

impl SimProcessConfig {
    pub fn build(&self) -> Result<Box<dyn EvalueProcess>> {
        Ok(match *self {
            SimProcessConfig::SubgaussianMixture { mu, sigma, rho } => Box::new(ScalarAdapter(
                crate::confseq::SubGaussianMixtureProcess::new(mu, sigma, rho)?,
            )),
            SimProcessConfig::BettingMean { mu, c } => Box::new(ScalarAdapter(
                crate::confseq::BettingProcess::new(mu, BetPolicy::plugin_default(), c)?,
            )),
            SimProcessConfig::Symmetry { lambda, rectified } => Box::new(ScalarAdapter(
                SymmetryProcess::new(SymmetryBetSpec::new(lambda, rectified)?),
            )),
            SimProcessConfig::Exchangeability => {
                Box::new(ScalarAdapter(ExchangeabilityProcess::new()))
            }
            SimProcessConfig::GaussianLr { mu0, mu1, sigma } => Box::new(ScalarAdapter(
                crate::detect::GaussianLrProcess::new(mu0, mu1, sigma)?,
            )),
            SimProcessConfig::TwobytwoMixture { prior_grid } => {
                Box::new(TwoByTwoMixture::uniform_grid(prior_grid)?)
            }
            SimProcessConfig::Logrank {
                m_treat,
                m_ctrl,
                beta1,
            } => Box::new(LogrankProcess::new(RiskSetState::new(
                m_treat, m_ctrl, beta1,
            )?)),
        })
    }
}

/// Top-level simulation experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimulateConfig {
    /// Mean stopped e-value under a null sampler; passes when
    /// mean ≤ 1 + 3·SE.
    EvalueAtStop {
        process: SimProcessConfig,
        sampler: NullSampler,
        rule: StoppingRule,
        replications: u64,
        seed: u64,
    },
    /// Time-uniform miscoverage of a CS method; passes when
    /// rate ≤ α + 3·SE.
    Coverage {
        method: CoverageMethod,
        sampler: NullSampler,
        truth: f64,
        alpha: f64,
        horizon: u64,
        replications: u64,
        seed: u64,
    },
    /// Average run length of an e-detector; passes when
    /// mean stop ≥ 1/α − 3·SE.
    Arl {
        base: BaseProcessConfig,
        pre_change: NullSampler,
        #[serde(default)]
        post_change: Option<(NullSampler, u64)>,
        alpha: f64,
        horizon: u64,
        #[serde(default = "default_cap")]
        restart_cap: usize,
        replications: u64,
        seed: u64,
    },
}

fn default_cap() -> usize {
    crate::detect::DEFAULT_RESTART_CAP
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Runs a parsed command line; the caller maps the error to an exit code.
pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Cs(args) => run_cs(args),
        Command::Test(args) => run_test(args),
        Command::Ebh(args) => run_ebh(args),
        Command::Detect(args) => run_detect(args),
        Command::Simulate(args) => run_simulate(args),
    }
}

fn parse_policy(text: &str) -> Result<BetPolicy> {
    if text == "plugin" {
        return Ok(BetPolicy::plugin_default());
    }
    if let Some(rest) = text.strip_prefix("fixed:") {
        let lambda: f64 = rest
            .parse()
            .map_err(|_| Error::Config(format!("bad fixed policy lambda '{rest}'")))?;
        let policy = BetPolicy::Fixed { lambda };
        policy.validate()?;
        return Ok(policy);
    }
    Err(Error::Config(format!(
        "unknown policy '{text}' (expected plugin or fixed:<lambda>)"
    )))
}

fn parse_grid(spec: &str) -> Result<MeanGridSpec> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "grid must be lo:hi:count, got {spec}"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("bad grid lo {}", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("bad grid hi {}", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("bad grid count {}", parts[2])))?;
    MeanGridSpec::new(lo, hi, n).map_err(|e| Error::Config(e.to_string()))
}

fn open_input(path: &str) -> Result<Box<dyn BufRead>> {
    if path == "-" {
        Ok(Box::new(std::io::BufReader::new(std::io::stdin())))
    } else {
        let f = std::fs::File::open(path).map_err(|e| {
            Error::Config(format!("cannot open input {path}: {e}"))
        })?;
        Ok(Box::new(std::io::BufReader::new(f)))
    }
}

fn open_output(path: &str) -> Result<Box<dyn Write>> {
    if path == "-" {
        Ok(Box::new(std::io::BufWriter::new(std::io::stdout())))
    } else {
        let f = std::fs::File::create(path)
            .map_err(|e| Error::Config(format!("cannot create output {path}: {e}")))?;
        Ok(Box::new(std::io::BufWriter::new(f)))
    }
}

fn sink_for(
    format: OutputFormat,
    output: &str,
    meta: &serde_json::Value,
    columns: Vec<String>,
) -> Result<ReportSink<Box<dyn Write>>> {
    let writer = open_output(output)?;
    let fmt = match format {
        OutputFormat::Csv => ReportFormat::Csv,
        OutputFormat::Json => ReportFormat::Json,
    };
    ReportSink::new(writer, fmt, meta, columns)
}

fn meta_for(config: impl Serialize, seed: Option<u64>) -> serde_json::Value {
    serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "rng": RNG_ALGORITHM,
        "seed": seed,
        "config": serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
    })
}

fn band_columns() -> Vec<String> {
    ["time", "lower", "upper", "alpha", "method"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn band_row(band: &ConfidenceBand, over: Option<(f64, f64)>) -> Vec<ReportValue> {
    let (lo, hi) = over.unwrap_or((band.lower, band.upper));
    vec![
        ReportValue::Int(band.time),
        ReportValue::Num(lo),
        ReportValue::Num(hi),
        ReportValue::Num(band.alpha),
        ReportValue::Str(band.method.name().to_string()),
    ]
}

fn run_cs(args: &CsArgs) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Config("alpha must be in (0,1)".into()));
    }
    let sigma = args.sigma.unwrap_or(1.0);
    let rho = args.rho.unwrap_or_else(|| rho_for_target_time(args.t0));
    let input = open_input(&args.input)?;
    let mut intersect = RunningIntersection::new();

    enum Driver {
        SubGaussian { t: u64, sum: f64 },
        EmpBernstein(EmpBernsteinCs),
        EmpBernsteinMixture(EmpBernsteinMixtureCs),
        Betting(BettingCs),
        Catoni(CatoniCs),
        Asymptotic(AsymptoticCs),
    }

    let mut driver = match args.method {
        CsMethodArg::Subgaussian => {
            if !(sigma > 0.0) {
                return Err(Error::Config("subgaussian CS needs --sigma > 0".into()));
            }
            Driver::SubGaussian { t: 0, sum: 0.0 }
        }
        CsMethodArg::EmpBernstein => Driver::EmpBernstein(EmpBernsteinCs::new(
            args.alpha,
            parse_policy(&args.policy)?,
            args.c,
        )?),
        CsMethodArg::EmpBernsteinMixture => {
            Driver::EmpBernsteinMixture(EmpBernsteinMixtureCs::with_default_grid(args.alpha)?)
        }
        CsMethodArg::Betting => {
            let grid = match &args.grid {
                Some(g) => parse_grid(g)?,
                None => MeanGridSpec::unit_interval(),
            };
            Driver::Betting(BettingCs::new(
                args.alpha,
                parse_policy(&args.policy)?,
                grid,
                args.c,
            )?)
        }
        CsMethodArg::Catoni => {
            let grid = match &args.grid {
                Some(g) => parse_grid(g)?,
                None => MeanGridSpec::new(-10.0, 10.0, 1024)?,
            };
            let lambda = args
                .lambda
                .unwrap_or_else(|| CatoniCs::default_lambda(sigma, args.alpha, args.t0));
            Driver::Catoni(CatoniCs::new(sigma, lambda, args.alpha, grid)?)
        }
        CsMethodArg::Asymptotic => Driver::Asymptotic(AsymptoticCs::new(rho, args.alpha)?),
    };

    let mut sink = sink_for(args.format, &args.output, &meta_for(args, None), band_columns())?;
    for record in ingest_records(input, RecordSchema::Scalar) {
        let (_line_no, obs) = record?;
        let Observation::Scalar(x) = obs else {
            unreachable!()
        };
        let band = match &mut driver {
            Driver::SubGaussian { t, sum } => {
                *t += 1;
                *sum += x;
                subgaussian_band(*t, *sum, sigma, rho, args.alpha)?
            }
            Driver::EmpBernstein(cs) => {
                cs.observe(x)?;
                cs.band()
            }
            Driver::EmpBernsteinMixture(cs) => {
                cs.observe(x)?;
                cs.band()
            }
            Driver::Betting(cs) => {
                cs.observe(x)?;
                cs.band()?
            }
            Driver::Catoni(cs) => {
                cs.observe(x)?;
                cs.band()?
            }
            Driver::Asymptotic(cs) => {
                cs.observe(x)?;
                if cs.time() < 2 {
                    continue;
                }
                cs.band()?
            }
        };
        let over = if args.intersect {
            match intersect.update(&band) {
                Some(b) => Some(b),
                None => Some((f64::NAN, f64::NAN)),
            }
        } else {
            None
        };
        sink.write_row(&band_row(&band, over))?;
    }
    sink.finish()
}

fn subgaussian_band(t: u64, sum: f64, sigma: f64, rho: f64, alpha: f64) -> Result<ConfidenceBand> {
    crate::confseq::subgaussian_cs(t, sum, sigma, rho, alpha)
}

fn run_test(args: &TestArgs) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Config("alpha must be in (0,1)".into()));
    }
    let input = open_input(&args.input)?;

    enum Tester {
        Scalar(Box<dyn StreamingEProcess>),
        TTest(TTestState),
        TwoByTwo(TwoByTwoMixture),
        Logrank(LogrankProcess),
        PriorPosterior {
            process: PriorPosteriorProcess,
            theta_index: usize,
        },
    }

    let (mut tester, schema) = match args.null {
        NullKind::Symmetry => (
            Tester::Scalar(Box::new(SymmetryProcess::new(SymmetryBetSpec::new(
                args.lambda,
                args.rectified,
            )?))),
            RecordSchema::Scalar,
        ),
        NullKind::Exchangeability => (
            Tester::Scalar(Box::new(ExchangeabilityProcess::new())),
            RecordSchema::Bit,
        ),
        NullKind::Ttest => (
            Tester::TTest(TTestState::new(args.delta0, args.delta1)?),
            RecordSchema::Scalar,
        ),
        NullKind::TwoByTwo => (
            Tester::TwoByTwo(TwoByTwoMixture::uniform_grid(args.prior_grid)?),
            RecordSchema::Block {
                n_a: args.na,
                n_b: args.nb,
            },
        ),
        NullKind::Logrank => (
            Tester::Logrank(LogrankProcess::new(RiskSetState::new(
                args.m_treat,
                args.m_ctrl,
                args.beta1,
            )?)),
            RecordSchema::Event,
        ),
        NullKind::PriorPosterior => {
            let grid = parse_grid(&args.theta_grid)?;
            let support = grid.points();
            if args.theta_index >= support.len() {
                return Err(Error::Config(format!(
                    "theta index {} outside the {}-point grid",
                    args.theta_index,
                    support.len()
                )));
            }
            let model = match args.model {
                PpModel::Bernoulli => LikelihoodModel::Bernoulli,
                PpModel::Gaussian => LikelihoodModel::GaussianKnownSigma { sigma: args.sigma },
            };
            (
                Tester::PriorPosterior {
                    process: PriorPosteriorProcess::new(DiscretePrior::uniform(support)?, model)?,
                    theta_index: args.theta_index,
                },
                match args.model {
                    PpModel::Bernoulli => RecordSchema::Bit,
                    PpModel::Gaussian => RecordSchema::Scalar,
                },
            )
        }
    };

    let mut sink = sink_for(
        args.format,
        &args.output,
        &meta_for(args, None),
        ["time", "e_value", "anytime_p", "reject"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    )?;

    let mut t = 0u64;
    let mut max_log_e = 0.0_f64;
    let mut last_log_e = 0.0_f64;
    for record in ingest_records(input, schema) {
        let (line_no, obs) = record?;
        match (&mut tester, &obs) {
            (Tester::Scalar(p), Observation::Scalar(x)) => p.observe(*x)?,
            (Tester::Scalar(p), Observation::Bit(b)) => p.observe(f64::from(*b))?,
            (Tester::TTest(p), Observation::Scalar(x)) => {
                if p.observe(*x)? == crate::param::ttest::TTestStep::HeldLeadingZero {
                    eprintln!(
                        "warning (line {line_no}): leading zero held; the scale pivot \
                         needs a nonzero first observation"
                    );
                    continue;
                }
            }
            (Tester::TwoByTwo(p), Observation::Block(b)) => p.observe_block(b)?,
            (Tester::Logrank(p), Observation::Event { in_treatment }) => {
                p.observe_event(*in_treatment)?
            }
            (Tester::PriorPosterior { process, .. }, Observation::Bit(b)) => {
                process.observe(f64::from(*b))?
            }
            (Tester::PriorPosterior { process, .. }, Observation::Scalar(x)) => {
                process.observe(*x)?
            }
            _ => return Err(Error::data("record kind does not match the method")),
        }
        t += 1;
        last_log_e = match &tester {
            Tester::Scalar(p) => p.log_evalue(),
            Tester::TTest(p) => p.log_wealth(),
            Tester::TwoByTwo(p) => p.log_evalue(),
            Tester::Logrank(p) => StreamingEProcess::log_evalue(p),
            Tester::PriorPosterior {
                process,
                theta_index,
            } => process.log_ratio(*theta_index)?,
        };
        max_log_e = max_log_e.max(last_log_e);
        if args.trace {
            sink.write_row(&test_row(t, last_log_e, max_log_e, args.alpha))?;
        }
    }
    if !args.trace {
        sink.write_row(&test_row(t, last_log_e, max_log_e, args.alpha))?;
    }

    let e_value = last_log_e.exp();
    let anytime_p = (-max_log_e).exp().min(1.0);
    let reject = max_log_e >= -args.alpha.ln();
    eprintln!(
        "e_value={} anytime_p={} reject={} (alpha={}, n={})",
        fmt_f64(e_value),
        fmt_f64(anytime_p),
        reject,
        args.alpha,
        t
    );
    sink.finish()
}

fn test_row(t: u64, log_e: f64, max_log_e: f64, alpha: f64) -> Vec<ReportValue> {
    vec![
        ReportValue::Int(t),
        ReportValue::Num(log_e.exp()),
        ReportValue::Num((-max_log_e).exp().min(1.0)),
        ReportValue::Bool(max_log_e >= -alpha.ln()),
    ]
}

fn run_ebh(args: &EbhArgs) -> Result<()> {
    let input = open_input(&args.input)?;
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    let mut weights = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let need = if matches!(args.procedure, EbhProcedure::Weighted) {
            3
        } else {
            2
        };
        if fields.len() != need {
            // A header row is allowed on the first line.
            if line_no == 1 && fields.iter().all(|f| f.parse::<f64>().is_err()) {
                continue;
            }
            return Err(Error::data_at(
                line_no,
                format!("expected {need} comma-separated fields"),
            ));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::data_at(line_no, format!("non-numeric field '{s}'")))
        };
        // Permit a header row.
        if line_no == 1 && parse(fields[1]).is_err() {
            continue;
        }
        labels.push(fields[0].to_string());
        scores.push(parse(fields[1])?);
        if need == 3 {
            weights.push(parse(fields[2])?);
        }
    }
    if labels.is_empty() {
        return Err(Error::data("empty input"));
    }

    let decision = match args.procedure {
        EbhProcedure::Ebh => ebh(
            &HypothesisPanel::from_evalues(labels.clone(), scores.clone())?,
            args.alpha,
        )?,
        EbhProcedure::Bh => bh(
            &HypothesisPanel::from_pvalues(labels.clone(), scores.clone())?,
            args.alpha,
        )?,
        EbhProcedure::Weighted => evalue_weighted_bh(
            &HypothesisPanel::from_pvalues(labels.clone(), scores.clone())?,
            &weights,
            args.alpha,
        )?,
    };

    let mut sink = sink_for(
        args.format,
        &args.output,
        &meta_for(args, None),
        ["label", "score", "rejected", "k_star"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    )?;
    for (i, label) in labels.iter().enumerate() {
        sink.write_row(&[
            ReportValue::Str(label.clone()),
            ReportValue::Num(decision.scores[i]),
            ReportValue::Bool(decision.is_rejected(i)),
            ReportValue::Int(decision.k_star as u64),
        ])?;
    }
    sink.finish()
}

fn run_detect(args: &DetectArgs) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Config("alpha must be in (0,1)".into()));
    }
    let rho = args.rho.unwrap_or_else(|| rho_for_target_time(args.t0));
    let base = match args.base {
        DetectBase::GaussianLr => BaseProcessConfig::GaussianLr {
            mu0: args.mu0,
            mu1: args.mu1,
            sigma: args.sigma,
        },
        DetectBase::Subgaussian => BaseProcessConfig::SubgaussianMixture {
            mu: args.mu,
            sigma: args.sigma,
            rho,
        },
        DetectBase::Betting => BaseProcessConfig::BettingMean {
            mu: args.mu,
            c: args.c,
        },
        DetectBase::Unit => BaseProcessConfig::Unit,
    };
    let mut detector = EDetector::new(base, args.cap)?;
    let input = open_input(&args.input)?;
    let mut sink = sink_for(
        args.format,
        &args.output,
        &meta_for(args, None),
        ["time", "detector_value", "stopped"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    )?;
    let mut stopped = false;
    for record in ingest_records(input, RecordSchema::Scalar) {
        let (_line_no, obs) = record?;
        let Observation::Scalar(x) = obs else {
            unreachable!()
        };
        detector.step(x)?;
        stopped = stopped || detector.should_stop(args.alpha)?;
        sink.write_row(&[
            ReportValue::Int(detector.time()),
            ReportValue::Num(detector.value()),
            ReportValue::Bool(stopped),
        ])?;
        if stopped && args.stop_at_alarm {
            break;
        }
    }
    sink.finish()
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", args.config)))?;
    let config: SimulateConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("bad simulate config: {e}")))?;

    let (estimate, se, bound, comparison, pass, seed) = match &config {
        SimulateConfig::EvalueAtStop {
            process,
            sampler,
            rule,
            replications,
            seed,
        } => {
            let summary = mc_evalue_at_stop(
                || process.build(),
                sampler,
                rule,
                *replications,
                *seed,
            )?;
            let bound = 1.0;
            let pass = summary.mean <= bound + 3.0 * summary.se;
            (
                summary.mean,
                summary.se,
                bound,
                "mean <= bound + 3*se",
                pass,
                *seed,
            )
        }
        SimulateConfig::Coverage {
            method,
            sampler,
            truth,
            alpha,
            horizon,
            replications,
            seed,
        } => {
            let summary = mc_coverage(
                method,
                sampler,
                *truth,
                *alpha,
                *horizon,
                *replications,
                *seed,
            )?;
            let pass = summary.mean <= alpha + 3.0 * summary.se;
            (
                summary.mean,
                summary.se,
                *alpha,
                "miscoverage <= alpha + 3*se",
                pass,
                *seed,
            )
        }
        SimulateConfig::Arl {
            base,
            pre_change,
            post_change,
            alpha,
            horizon,
            restart_cap,
            replications,
            seed,
        } => {
            let cfg = ArlConfig {
                base: *base,
                pre_change: *pre_change,
                post_change: *post_change,
                alpha: *alpha,
                horizon: *horizon,
                restart_cap: *restart_cap,
            };
            let summary = crate::detect::run_arl_experiment(&cfg, *replications, *seed)?;
            let bound = 1.0 / alpha;
            let pass = summary.mean_stop_time >= bound - 3.0 * summary.se_stop_time;
            (
                summary.mean_stop_time,
                summary.se_stop_time,
                bound,
                "mean_stop >= bound - 3*se",
                pass,
                *seed,
            )
        }
    };

    let mut sink = sink_for(
        args.format,
        &args.output,
        &meta_for(&config, Some(seed)),
        ["estimate", "se", "bound", "comparison", "pass"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    )?;
    sink.write_row(&[
        ReportValue::Num(estimate),
        ReportValue::Num(se),
        ReportValue::Num(bound),
        ReportValue::Str(comparison.to_string()),
        ReportValue::Bool(pass),
    ])?;
    sink.finish()
}
