//! Command-line interface: `learn`, `gen`, `replay`, `grid`, `cover`,
//! `aggregate`. Exit codes: 0 success, 1 input error, 2 internal error.

use std::fmt;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::generator::{self, EffortMode, GenConfig, Pick, SymbolUniverse, UniverseKind};
use crate::harness::{self, GridSpec};
use crate::replay::{self, SessionOptions};
use crate::stats::StatsStore;
use crate::term::{self, Signature};

/// Failure classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or bad input data: exit 1.
    Input(String),
    /// A bug or an environment failure: exit 2.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    fn input(e: impl fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Internal(msg) => f.write_str(msg),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "instgen",
    version,
    about = "Learn symbol statistics from observed quantifier instantiations and generate candidate ground terms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn statistics from observed terms and print the store dump.
    Learn(LearnArgs),
    /// Generate terms of one sort and print them, one per line.
    Gen(GenArgs),
    /// Replay a trace round by round and print the session report.
    Replay(ReplayArgs),
    /// Expand a strategy grid and print one strategy id per line.
    Grid(GridArgs),
    /// Greedy complementarity cover over a results matrix.
    Cover(CoverArgs),
    /// Per-strategy totals and gains/losses against the reference strategy.
    Aggregate(AggregateArgs),
}

#[derive(Debug, Args)]
struct LearnArgs {
    /// Signature file; required with --terms, optional with --trace.
    #[arg(long)]
    sig: Option<PathBuf>,
    /// Trace file whose recorded instantiations are observed.
    #[arg(long, conflicts_with = "terms")]
    trace: Option<PathBuf>,
    /// File of bare ground terms (whitespace-separated s-expressions).
    #[arg(long, requires = "sig")]
    terms: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Signature file.
    #[arg(long)]
    sig: PathBuf,
    /// Trace file to learn statistics from (may omit declarations).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Head selection strategy.
    #[arg(long, value_enum)]
    pick: PickArg,
    /// Maximum term depth (0 = constants only).
    #[arg(long, default_value_t = 0)]
    depth: u32,
    /// Probability of inverting the weight vector at each pick.
    #[arg(long, default_value_t = 0.0)]
    flip: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Batch size; duplicates are removed, so up to this many lines.
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Result sort of the generated terms.
    #[arg(long)]
    sort: String,
    /// Candidate universe: symbols observed in the trace, or the whole signature.
    #[arg(long, value_enum, default_value_t = UniverseArg::Observed)]
    universe: UniverseArg,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Trace file (self-contained: declarations, quantifiers, rounds).
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, value_enum)]
    pick: PickArg,
    #[arg(long, default_value_t = 0)]
    depth: u32,
    #[arg(long, default_value_t = 0.0)]
    flip: f64,
    /// Firing policy.
    #[arg(long, value_enum, default_value_t = EffortArg::Lastcall)]
    effort: EffortArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    batch_size: usize,
    /// Report format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Sexp)]
    format: ReportFormat,
    /// Feed generated batches back into the statistics store.
    #[arg(long)]
    feedback: bool,
    #[arg(long, value_enum, default_value_t = UniverseArg::Observed)]
    universe: UniverseArg,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Comma-separated effort modes (default: lastcall,interleave).
    #[arg(long, value_delimiter = ',')]
    efforts: Option<Vec<EffortArg>>,
    /// Comma-separated pick strategies (default: random,weights,paths).
    #[arg(long, value_delimiter = ',')]
    picks: Option<Vec<PickArg>>,
    /// Comma-separated depths (default: 0,1,2,3,4).
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<u32>>,
    /// Comma-separated flip probabilities (default: 0.0,0.2,0.5,0.8,1.0).
    #[arg(long, value_delimiter = ',')]
    flips: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct CoverArgs {
    /// Results CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Keep only the first K rows of the cover.
    #[arg(long)]
    top: Option<usize>,
    #[arg(long, value_enum, default_value_t = TableFormat::Table)]
    format: TableFormat,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    /// Results CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Reference strategy id; overrides a #reference= directive in the file.
    #[arg(long = "ref")]
    reference: Option<String>,
    #[arg(long, value_enum, default_value_t = TableFormat::Table)]
    format: TableFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PickArg {
    Random,
    Weights,
    Paths,
}

impl From<PickArg> for Pick {
    fn from(p: PickArg) -> Pick {
        match p {
            PickArg::Random => Pick::Random,
            PickArg::Weights => Pick::Weights,
            PickArg::Paths => Pick::Paths,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EffortArg {
    Lastcall,
    Interleave,
}

impl From<EffortArg> for EffortMode {
    fn from(e: EffortArg) -> EffortMode {
        match e {
            EffortArg::Lastcall => EffortMode::Lastcall,
            EffortArg::Interleave => EffortMode::Interleave,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UniverseArg {
    Observed,
    Signature,
}

impl From<UniverseArg> for UniverseKind {
    fn from(u: UniverseArg) -> UniverseKind {
        match u {
            UniverseArg::Observed => UniverseKind::Observed,
            UniverseArg::Signature => UniverseKind::Signature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Sexp,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Table,
    Csv,
}

/// Parse `argv` and run; the caller maps the error to an exit code.
pub fn run(argv: impl IntoIterator<Item = String>) -> Result<(), CliError> {
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        // clap renders its own usage text; argument problems are input errors
        CliError::Input(e.render().to_string())
    })?;
    match cli.command {
        Command::Learn(args) => learn(args),
        Command::Gen(args) => gen(args),
        Command::Replay(args) => replay_cmd(args),
        Command::Grid(args) => grid(args),
        Command::Cover(args) => cover(args),
        Command::Aggregate(args) => aggregate(args),
    }
}

fn read_input(path: &FsPath) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn print_out(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| CliError::Internal(format!("cannot write to stdout: {e}")))
}

fn learn(args: LearnArgs) -> Result<(), CliError> {
    let mut store = StatsStore::new();
    match (&args.trace, &args.terms) {
        (Some(trace_path), None) => {
            let base = match &args.sig {
                Some(p) => Some(term::parse_signature(&read_input(p)?).map_err(CliError::input)?),
                None => None,
            };
            let trace = replay::parse_trace_with(&read_input(trace_path)?, base.as_ref())
                .map_err(CliError::input)?;
            for round in &trace.rounds {
                for record in &round.observed {
                    store.observe_all(&record.terms);
                }
            }
        }
        (None, Some(terms_path)) => {
            let sig_path = args.sig.as_ref().expect("clap enforces --sig with --terms");
            let sig = term::parse_signature(&read_input(sig_path)?).map_err(CliError::input)?;
            for term in parse_term_list(&read_input(terms_path)?, &sig)? {
                store.observe_term(&term);
            }
        }
        _ => {
            return Err(CliError::Input("learn needs exactly one of --trace or --terms".into()));
        }
    }
    print_out(&store.dump())
}

fn parse_term_list(text: &str, sig: &Signature) -> Result<Vec<crate::term::GroundTerm>, CliError> {
    let forms = crate::sexpr::parse_all(text).map_err(CliError::input)?;
    forms
        .iter()
        .map(|f| term::term_from_sexpr(f, sig).map_err(CliError::input))
        .collect()
}

fn gen(args: GenArgs) -> Result<(), CliError> {
    let sig = term::parse_signature(&read_input(&args.sig)?).map_err(CliError::input)?;
    let mut store = StatsStore::new();
    if let Some(trace_path) = &args.trace {
        let trace = replay::parse_trace_with(&read_input(trace_path)?, Some(&sig)).map_err(CliError::input)?;
        for round in &trace.rounds {
            for record in &round.observed {
                store.observe_all(&record.terms);
            }
        }
    }
    let sort = sig
        .sort(&args.sort)
        .cloned()
        .ok_or_else(|| CliError::Input(format!("sort `{}` is not declared in the signature", args.sort)))?;
    let cfg = GenConfig::new(EffortMode::Lastcall, args.pick.into(), args.depth, args.flip)
        .and_then(|c| c.with_batch_size(args.count))
        .map_err(CliError::input)?
        .with_seed(args.seed);
    let universe = match args.universe.into() {
        UniverseKind::Observed => SymbolUniverse::from_observed(&store),
        UniverseKind::Signature => SymbolUniverse::from_signature(&sig),
    };
    let mut rng = generator::SeededRng::new(cfg.seed);
    let batch =
        generator::generate_batch_in(&universe, &sort, &cfg, &store, &mut rng).map_err(CliError::input)?;
    let mut out = String::new();
    for term in &batch {
        out.push_str(&term.to_string());
        out.push('\n');
    }
    print_out(&out)
}

fn replay_cmd(args: ReplayArgs) -> Result<(), CliError> {
    let trace = replay::parse_trace(&read_input(&args.trace)?).map_err(CliError::input)?;
    let cfg = GenConfig::new(args.effort.into(), args.pick.into(), args.depth, args.flip)
        .and_then(|c| c.with_batch_size(args.batch_size))
        .map_err(CliError::input)?
        .with_seed(args.seed);
    let opts = SessionOptions { feedback: args.feedback, universe: args.universe.into() };
    let report = replay::run_session_with(&trace, &cfg, opts);
    match args.format {
        ReportFormat::Sexp => print_out(&report.to_sexpr()),
        ReportFormat::Json => {
            let mut text = report.to_json();
            text.push('\n');
            print_out(&text)
        }
    }
}

fn grid(args: GridArgs) -> Result<(), CliError> {
    let mut spec = GridSpec::default();
    if let Some(efforts) = args.efforts {
        spec.efforts = efforts.into_iter().map(Into::into).collect();
    }
    if let Some(picks) = args.picks {
        spec.picks = picks.into_iter().map(Into::into).collect();
    }
    if let Some(depths) = args.depths {
        spec.depths = depths;
    }
    if let Some(flips) = args.flips {
        spec.flips = flips;
    }
    let configs = harness::enumerate_grid(&spec).map_err(CliError::input)?;
    let mut out = String::new();
    for cfg in &configs {
        out.push_str(&cfg.strategy_id());
        out.push('\n');
    }
    print_out(&out)
}

fn cover(args: CoverArgs) -> Result<(), CliError> {
    let matrix = harness::load_results(&read_input(&args.input)?).map_err(CliError::input)?;
    let report = harness::greedy_cover(&matrix, args.top).map_err(CliError::input)?;
    match args.format {
        TableFormat::Table => print_out(&report.to_table()),
        TableFormat::Csv => print_out(&report.to_csv()),
    }
}

fn aggregate(args: AggregateArgs) -> Result<(), CliError> {
    let mut matrix = harness::load_results(&read_input(&args.input)?).map_err(CliError::input)?;
    if let Some(reference) = &args.reference {
        matrix.set_reference(reference).map_err(CliError::input)?;
    }
    let summaries = harness::aggregate_vs_reference(&matrix).map_err(CliError::input)?;
    match args.format {
        TableFormat::Table => {
            let width = summaries.iter().map(|s| s.strategy.len()).max().unwrap_or(8).max(8);
            let mut out = String::new();
            out.push_str(&format!("{:<width$}  {:>7}  {:>7}  {:>7}\n", "strategy", "total", "ref+", "ref-"));
            for s in &summaries {
                out.push_str(&format!(
                    "{:<width$}  {:>7}  {:>7}  {:>7}\n",
                    s.strategy,
                    s.total,
                    format!("+{}", s.gained),
                    format!("-{}", s.lost),
                ));
            }
            print_out(&out)
        }
        TableFormat::Csv => {
            let mut out = String::from("strategy,total,gained,lost\n");
            for s in &summaries {
                out.push_str(&format!("{},{},{},{}\n", s.strategy, s.total, s.gained, s.lost));
            }
            print_out(&out)
        }
    }
}
