//! Command-line driver for the race solver, Monte Carlo simulator, and
//! spam-metrics pipeline.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when a
//! verification cross-check fails.

mod record;

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use record::{RecordDoc, SimDoc, SolveRecord, SweepDoc, SCHEMA_VERSION};
use spamrace::metrics::{
    aggregate_daily, detect_repeats, export_panel, ingest_auctions, ingest_transactions,
};
use spamrace::{
    baseline_equilibrium, compare, simulate_baseline_race, simulate_full_game,
    simulate_timeboost_race, solve_subgame, verify_baseline, verify_subgame, CopyModel, GameParams,
    RaceConfig,
};

#[derive(Parser)]
#[command(
    name = "spamrace",
    about = "Equilibria, simulations, and spam metrics for FCFS transaction races with an auctioned express lane",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one parameter point: the express-lane subgame when lambda*T > 0,
    /// the baseline race when lambda*T = 0
    Solve(SolveArgs),
    /// Solve both regimes and report spam and revenue differences
    Compare(SolveArgs),
    /// Compare across a parameter grid (rows ordered n, then lambda*T, then V/C)
    Sweep(SweepArgs),
    /// Monte Carlo races and the full auction game
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Label repeated transactions and export the daily panel CSV
    Metrics(MetricsArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Number of arbitrageurs (at least 2)
    #[arg(long)]
    n: u32,
    /// Opportunity value (requires --g and --r)
    #[arg(long, requires = "g", requires = "r", conflicts_with_all = ["net_prize", "copy_cost"])]
    v: Option<f64>,
    /// Gas cost of the one successful transaction
    #[arg(long, requires = "v")]
    g: Option<f64>,
    /// Revert-fee fraction in (0, 1)
    #[arg(long, requires = "v")]
    r: Option<f64>,
    /// Net prize V directly (requires --C)
    #[arg(long = "V", requires = "copy_cost")]
    net_prize: Option<f64>,
    /// Per-copy revert cost C directly (requires --V)
    #[arg(long = "C", requires = "net_prize")]
    copy_cost: Option<f64>,
    /// Latency rate lambda (pair with --T)
    #[arg(long, requires = "advantage", conflicts_with = "rate_advantage")]
    lambda: Option<f64>,
    /// Express-lane time advantage T (pair with --lambda)
    #[arg(long = "T", requires = "lambda")]
    advantage: Option<f64>,
    /// The product lambda*T; equilibrium quantities depend on lambda and T
    /// only through it (recorded as lambda = 1, T = product)
    #[arg(long = "lambdaT", alias = "lambda-t")]
    rate_advantage: Option<f64>,
}

impl ParamArgs {
    fn build(&self) -> Result<GameParams, CliError> {
        let (lambda, advantage) = match (self.lambda, self.advantage, self.rate_advantage) {
            (Some(l), Some(t), None) => (l, t),
            (None, None, Some(product)) => (1.0, product),
            _ => {
                return Err(CliError::Usage(
                    "provide either --lambda with --T, or --lambdaT".into(),
                ))
            }
        };
        let params = match (self.v, self.g, self.r, self.net_prize, self.copy_cost) {
            (Some(v), Some(g), Some(r), None, None) => {
                GameParams::from_primitives(self.n, v, g, r, lambda, advantage)
            }
            (None, None, None, Some(net_prize), Some(copy_cost)) => {
                GameParams::from_effective(self.n, net_prize, copy_cost, lambda, advantage)
            }
            _ => {
                return Err(CliError::Usage(
                    "provide exactly one parameterization: --v/--g/--r or --V/--C".into(),
                ))
            }
        };
        params.map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write output here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cross-check the solution against grid best responses (exit 2 on
    /// disagreement)
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Player counts, e.g. 2,3,5,10
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u32>,
    /// lambda*T grid, e.g. 0.01,0.1,1
    #[arg(
        long = "lambdaT",
        alias = "lambda-t",
        value_delimiter = ',',
        required = true
    )]
    rate_advantage: Vec<f64>,
    /// V/C ratios, e.g. 1,10,100
    #[arg(long = "vc", value_delimiter = ',', required = true)]
    prize_cost_ratios: Vec<f64>,
    /// Copy cost C used to realize each ratio (V = ratio * C)
    #[arg(long, default_value_t = 1.0)]
    cost: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    verify: bool,
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Race without any time advantage
    Baseline(RaceArgs),
    /// Race in which one player holds the express-lane advantage
    Timeboost(TimeboostRaceArgs),
    /// Sealed-bid second-price auction followed by the submission race
    Full(FullGameArgs),
}

#[derive(Args)]
struct RaceArgs {
    /// Per-player copy intensities, e.g. 2,6
    #[arg(long, value_delimiter = ',', required = true)]
    profile: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1_000_000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prize credited to the race winner in the payoff settlement
    #[arg(long, default_value_t = 1.0)]
    prize: f64,
    /// Cost per copy in the payoff settlement
    #[arg(long, default_value_t = 0.0)]
    cost: f64,
    /// Race the ceilings of the intensities as whole copies
    #[arg(long)]
    integer_copies: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TimeboostRaceArgs {
    #[command(flatten)]
    race: RaceArgs,
    /// Time advantage T granted to the advantaged player
    #[arg(long = "T")]
    advantage: f64,
    /// Index of the advantaged player within the profile
    #[arg(long, default_value_t = 0)]
    winner: usize,
}

#[derive(Args)]
struct FullGameArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Per-player bids; defaults to the equilibrium bid for everyone
    #[arg(long, value_delimiter = ',')]
    bids: Option<Vec<f64>>,
    /// Auction winner's copy intensity; defaults to the equilibrium value
    #[arg(long)]
    kw: Option<f64>,
    /// Each loser's copy intensity; defaults to the equilibrium value
    #[arg(long)]
    kl: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Transaction CSV (chain,timestamp_ms,tx_hash,sender,recipient,value,
    /// selector,calldata_hash,gas_fee_eth,status,timeboosted)
    #[arg(long)]
    txs: PathBuf,
    /// Auction CSV (round_id,timestamp_ms,payment_eth); optional
    #[arg(long)]
    auctions: Option<PathBuf>,
    /// Chain whose rows receive auction revenue and whose timeboosted
    /// transactions are excluded from the failure rate
    #[arg(long)]
    treated: String,
    /// Burst window in milliseconds
    #[arg(long = "window-ms", default_value_t = 2000)]
    window_ms: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Runtime(_) => 1,
            CliError::Verification(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) | CliError::Verification(m) => m,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(err: io::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap would exit 2 on usage errors; this tool reserves 2 for
            // verification failures
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Compare(args) => run_compare(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Simulate(sim) => run_simulate(sim),
        Command::Metrics(args) => run_metrics(args),
    }
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => {
            File::create(path)?.write_all(bytes)?;
        }
        None => {
            io::stdout().write_all(bytes)?;
        }
    }
    Ok(())
}

fn render_records(records: &[SolveRecord], format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let text = if records.len() == 1 {
                serde_json::to_string_pretty(&RecordDoc {
                    schema: SCHEMA_VERSION,
                    record: records[0].clone(),
                })
            } else {
                serde_json::to_string_pretty(&SweepDoc {
                    schema: SCHEMA_VERSION,
                    results: records.to_vec(),
                })
            };
            let mut bytes = text
                .map_err(|e| CliError::Runtime(e.to_string()))?
                .into_bytes();
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for record in records {
                writer
                    .serialize(record)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
            }
            writer
                .into_inner()
                .map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

fn render_json<T: serde::Serialize>(outcome: T) -> Result<Vec<u8>, CliError> {
    let doc = SimDoc {
        schema: SCHEMA_VERSION,
        outcome,
    };
    let mut bytes = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Runtime(e.to_string()))?
        .into_bytes();
    bytes.push(b'\n');
    Ok(bytes)
}

fn run_solve(args: SolveArgs) -> Result<(), CliError> {
    let params = args.params.build()?;
    let record = if params.rate_advantage() > 0.0 {
        let eq = solve_subgame(&params).map_err(|e| CliError::Runtime(e.to_string()))?;
        if args.verify {
            verify_subgame(&params, &eq).map_err(|e| CliError::Verification(e.to_string()))?;
        }
        SolveRecord::from_timeboost(&params, &eq)
    } else {
        let eq = baseline_equilibrium(&params);
        if args.verify {
            verify_baseline(&params).map_err(|e| CliError::Verification(e.to_string()))?;
        }
        SolveRecord::from_baseline(&params, &eq)
    };
    let bytes = render_records(&[record], args.format)?;
    write_output(&args.out, &bytes)
}

fn run_compare(args: SolveArgs) -> Result<(), CliError> {
    let params = args.params.build()?;
    if params.rate_advantage() <= 0.0 {
        return Err(CliError::Usage(
            "compare needs lambda*T > 0; use `solve` for the baseline".into(),
        ));
    }
    let report = compare_point(&params, args.verify)?;
    let bytes = render_records(&[report], args.format)?;
    write_output(&args.out, &bytes)
}

fn compare_point(params: &GameParams, verify: bool) -> Result<SolveRecord, CliError> {
    let report = compare(params).map_err(|e| CliError::Verification(e.to_string()))?;
    if verify {
        verify_baseline(params).map_err(|e| CliError::Verification(e.to_string()))?;
        verify_subgame(params, &report.timeboost)
            .map_err(|e| CliError::Verification(e.to_string()))?;
    }
    Ok(SolveRecord::from_comparison(params, &report))
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    if args.n.is_empty() || args.rate_advantage.is_empty() || args.prize_cost_ratios.is_empty() {
        return Err(CliError::Usage("sweep grids must be nonempty".into()));
    }
    let mut records = Vec::new();
    for &n in &args.n {
        for &rate_advantage in &args.rate_advantage {
            for &ratio in &args.prize_cost_ratios {
                let params = GameParams::from_effective(
                    n,
                    ratio * args.cost,
                    args.cost,
                    1.0,
                    rate_advantage,
                )
                .map_err(|e| CliError::Usage(e.to_string()))?;
                if params.rate_advantage() <= 0.0 {
                    return Err(CliError::Usage("sweep points need lambda*T > 0".into()));
                }
                records.push(compare_point(&params, args.verify)?);
            }
        }
    }
    let bytes = render_records(&records, args.format)?;
    write_output(&args.out, &bytes)
}

fn build_race_config(args: &RaceArgs) -> RaceConfig {
    let mut config = RaceConfig::baseline(args.profile.clone(), args.lambda, args.reps, args.seed)
        .with_settlement(args.prize, args.cost);
    if args.integer_copies {
        config = config.with_copy_model(CopyModel::Integer);
    }
    config
}

fn run_simulate(command: SimulateCommand) -> Result<(), CliError> {
    match command {
        SimulateCommand::Baseline(args) => {
            let config = build_race_config(&args);
            let outcome =
                simulate_baseline_race(&config).map_err(|e| CliError::Usage(e.to_string()))?;
            write_output(&args.out, &render_json(outcome)?)
        }
        SimulateCommand::Timeboost(args) => {
            let mut config = build_race_config(&args.race);
            config.advantage = args.advantage;
            config.winner_index = Some(args.winner);
            let outcome =
                simulate_timeboost_race(&config).map_err(|e| CliError::Usage(e.to_string()))?;
            write_output(&args.race.out, &render_json(outcome)?)
        }
        SimulateCommand::Full(args) => {
            let params = args.params.build()?;
            let eq = solve_subgame(&params).map_err(|e| CliError::Runtime(e.to_string()))?;
            let bids = args
                .bids
                .unwrap_or_else(|| vec![eq.bid; params.players() as usize]);
            let outcome = simulate_full_game(
                &params,
                &bids,
                args.kw.unwrap_or(eq.winner_copies),
                args.kl.unwrap_or(eq.loser_copies),
                args.reps,
                args.seed,
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            write_output(&args.out, &render_json(outcome)?)
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    let mut bytes = Vec::new();
    File::open(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?
        .read_to_end(&mut bytes)?;
    Ok(bytes)
}

fn run_metrics(args: MetricsArgs) -> Result<(), CliError> {
    let tx_bytes = read_file(&args.txs)?;
    let records =
        ingest_transactions(tx_bytes.as_slice()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let auctions = match &args.auctions {
        Some(path) => {
            let bytes = read_file(path)?;
            ingest_auctions(bytes.as_slice()).map_err(|e| CliError::Runtime(e.to_string()))?
        }
        None => Vec::new(),
    };
    let labeled =
        detect_repeats(records, args.window_ms).map_err(|e| CliError::Usage(e.to_string()))?;
    let panel = aggregate_daily(&labeled, &auctions, &args.treated)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut bytes = Vec::new();
    export_panel(&panel, &mut bytes).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_output(&args.out, &bytes)
}
