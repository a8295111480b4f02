//! `revsignal`: mine review data, model reviewer participation, and explain the model.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

/// Exit status 2 for unusable input, 1 for everything else.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Internal(String),
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure::Input(message.into())
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Failure::Internal(message.into())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Internal(m) => f.write_str(m),
        }
    }
}

#[derive(Parser)]
#[command(name = "revsignal", version, about = "Reviewer participation: mining, modeling and explanation")]
struct Cli {
    /// Flat key = value settings file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory for artifacts (default: out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch changes from a Gerrit server, or canonicalize a JSONL dump, into dataset.jsonl.
    Ingest(IngestArgs),
    /// Detect bots, select relevant changes and label each invitation.
    Prepare(PrepareArgs),
    /// Compute the twelve metrics for every labeled invitation.
    Metrics(MetricsArgs),
    /// Screen variables, budget degrees of freedom and fit the proposed and baseline models.
    Fit(ModelArgs),
    /// Out-of-sample bootstrap performance and proposed-vs-baseline comparison.
    Evaluate(ModelArgs),
    /// Bootstrap Wald ranks, partial effects and odds ratios.
    Explain(ModelArgs),
    /// Invitation/response summaries and community composition.
    Describe(DescribeArgs),
    /// Rank candidate reviewers by estimated participation likelihood.
    Recommend(RecommendArgs),
    /// Write a seeded synthetic dataset with known ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Existing JSONL dump to canonicalize.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Gerrit base URL.
    #[arg(long)]
    server: Option<String>,
    #[arg(long)]
    query: Option<String>,
    #[arg(long)]
    page_size: Option<usize>,
    /// Start offset, for resuming an interrupted fetch.
    #[arg(long)]
    start: Option<usize>,
    #[arg(long)]
    user: Option<String>,
    /// Environment variable holding the HTTP password.
    #[arg(long)]
    password_env: Option<String>,
    /// Requests per second.
    #[arg(long)]
    rate_limit: Option<f64>,
}

#[derive(Args)]
struct PrepareArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Known bot account ids, one per line.
    #[arg(long)]
    bots: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// project or top-dir
    #[arg(long)]
    subsystem_rule: Option<String>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    instances: Option<PathBuf>,
    /// proposed, baseline or both
    #[arg(long)]
    variables: Option<String>,
    /// Restrict to rows where column = value (e.g. core_member=true).
    #[arg(long = "where")]
    filter: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    high_ratio: Option<f64>,
    #[arg(long)]
    spline_dof: Option<usize>,
    #[arg(long)]
    cluster_threshold: Option<f64>,
    #[arg(long)]
    r2_threshold: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
}

#[derive(Args)]
struct DescribeArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    subsystem_rule: Option<String>,
    /// Hexagon width for the invited/unresponded binning.
    #[arg(long)]
    bin_width: Option<f64>,
    /// Instant for lifetime participation rates (default: after the last change).
    #[arg(long)]
    as_of: Option<String>,
}

#[derive(Args)]
pub struct RecommendArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    subsystem_rule: Option<String>,
    #[arg(long)]
    as_of: Option<String>,
    /// Patch author.
    #[arg(long)]
    pub author: String,
    #[arg(long)]
    pub project: String,
    /// Subsystem key when it differs from the project.
    #[arg(long)]
    pub subsystem: Option<String>,
    /// Comma-separated module directories touched by the patch.
    #[arg(long, value_delimiter = ',')]
    pub modules: Vec<String>,
    /// Churned lines of the first revision.
    #[arg(long, default_value_t = 0)]
    pub patch_size: u64,
    /// Comma-separated candidate reviewer ids.
    #[arg(long, value_delimiter = ',', required = true)]
    pub candidates: Vec<String>,
    /// Candidates below this likelihood are marked likely unresponsive.
    #[arg(long)]
    pub min_prob: Option<f64>,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub changes: usize,
    #[arg(long, default_value_t = 20)]
    pub developers: usize,
    /// Destination file (default: dataset.jsonl in the output directory).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn path_str(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.set("seed", cli.seed);
    cfg.set("jobs", cli.jobs);
    cfg.set("out", path_str(&cli.out));

    let jobs: usize = cfg.get("jobs", 0)?;
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::internal(format!("thread pool: {e}")))?;
    }

    match cli.command {
        Command::Ingest(a) => {
            cfg.set("input", path_str(&a.input));
            cfg.set("server", a.server);
            cfg.set("query", a.query);
            cfg.set("page_size", a.page_size);
            cfg.set("start", a.start);
            cfg.set("user", a.user);
            cfg.set("password_env", a.password_env);
            cfg.set("rate_limit", a.rate_limit);
            commands::ingest(&cfg)
        }
        Command::Prepare(a) => {
            cfg.set("dataset", path_str(&a.dataset));
            cfg.set("bots", path_str(&a.bots));
            commands::prepare(&cfg)
        }
        Command::Metrics(a) => {
            cfg.set("dataset", path_str(&a.dataset));
            cfg.set("subsystem_rule", a.subsystem_rule);
            commands::metrics(&cfg)
        }
        Command::Fit(a) => {
            apply_model_args(&mut cfg, a);
            commands::fit(&cfg)
        }
        Command::Evaluate(a) => {
            apply_model_args(&mut cfg, a);
            commands::evaluate(&cfg)
        }
        Command::Explain(a) => {
            apply_model_args(&mut cfg, a);
            commands::explain(&cfg)
        }
        Command::Describe(a) => {
            cfg.set("dataset", path_str(&a.dataset));
            cfg.set("subsystem_rule", a.subsystem_rule);
            cfg.set("bin_width", a.bin_width);
            cfg.set("as_of", a.as_of);
            commands::describe(&cfg)
        }
        Command::Recommend(a) => {
            cfg.set("model", path_str(&a.model));
            cfg.set("dataset", path_str(&a.dataset));
            cfg.set("subsystem_rule", a.subsystem_rule.clone());
            cfg.set("as_of", a.as_of.clone());
            commands::recommend(&cfg, &a)
        }
        Command::Synth(a) => commands::synth(&cfg, &a),
    }
}

fn apply_model_args(cfg: &mut RunConfig, a: ModelArgs) {
    cfg.set("instances", path_str(&a.instances));
    cfg.set("variables", a.variables);
    cfg.set("where", a.filter);
    cfg.set("iterations", a.iterations);
    cfg.set("threshold", a.threshold);
    cfg.set("high_ratio", a.high_ratio);
    cfg.set("spline_dof", a.spline_dof);
    cfg.set("cluster_threshold", a.cluster_threshold);
    cfg.set("r2_threshold", a.r2_threshold);
    cfg.set("grid_size", a.grid_size);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("revsignal: {f}");
            ExitCode::from(f.code())
        }
    }
}
