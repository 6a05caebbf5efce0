use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use varl::advisor::mock::{MockConfig, MockMode, MockServer};
use varl::harness::{self, Algorithm, Overrides};
use varl::Error;

#[derive(Parser)]
#[command(name = "varl", version, about = "Soft actor-critic with advisor-guided policy shaping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of an experiment.
    Run(RunArgs),
    /// Aggregate one or more run directories into a summary table and curves.
    Summarize {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Where to write summary.json, summary.txt and curves-*.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the mock completion endpoint until interrupted.
    MockAdvisor {
        #[arg(long, default_value_t = 8089)]
        port: u16,
        #[arg(long, value_enum, default_value_t = Mode::Oracle)]
        mode: Mode,
        /// Completion text for `--mode fixed`.
        #[arg(long, default_value = "action: 0")]
        completion: String,
        /// Answer the first N requests with HTTP 503.
        #[arg(long, default_value_t = 0)]
        fail_first: usize,
    },
    /// Print the advisor query budget of a run directory.
    Ledger {
        run: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Oracle,
    Fixed,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    algo: Option<Algorithm>,
    /// Single seed (repeatable).
    #[arg(long)]
    seed: Vec<u64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Completion endpoint; selects the remote advisor.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Cutoff step after which shaping stops.
    #[arg(long = "cutoff", alias = "n-s")]
    cutoff: Option<u64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Recent-sample size per trigger.
    #[arg(long = "k")]
    k: Option<usize>,
    /// Print the resolved config and exit.
    #[arg(long)]
    print_config: bool,
}

fn run(args: RunArgs) -> varl::Result<()> {
    let text = match &args.config {
        Some(p) => Some(
            std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let seeds: Vec<u64> = args.seed.iter().chain(&args.seeds).copied().collect();
    let overrides = Overrides {
        env: args.env,
        algorithm: args.algo,
        seeds: (!seeds.is_empty()).then_some(seeds),
        max_steps: args.max_steps,
        output_dir: args.out,
        endpoint: args.endpoint,
        lambda: args.lambda,
        cutoff: args.cutoff,
        kappa: args.kappa,
        k: args.k,
    };
    let cfg = overrides.resolve(text.as_deref())?;
    if args.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let result = harness::run_experiment(&cfg)?;
    print!("{}", harness::render_table(std::slice::from_ref(&result.summary)));
    for s in &result.seeds {
        let r = s.ledger.report();
        if r.trigger_batches > 0 {
            println!("seed {}: {} trigger batches, {} advisor samples, {} guidance pairs", s.seed, r.trigger_batches, r.total_samples, s.guidance_pairs);
        }
    }
    println!("artifacts in {}", result.dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Summarize { runs, out } => (|| {
            let summaries = runs.iter().map(|r| harness::summarize_run(r)).collect::<varl::Result<Vec<_>>>()?;
            print!("{}", harness::render_table(&summaries));
            if let Some(out) = out {
                harness::write_summary(&summaries, &out)?;
            }
            Ok(())
        })(),
        Command::MockAdvisor {
            port,
            mode,
            completion,
            fail_first,
        } => (|| {
            let mode = match mode {
                Mode::Oracle => MockMode::Oracle,
                Mode::Fixed => MockMode::Fixed(completion),
            };
            let server = MockServer::start(MockConfig { mode, fail_first }, port)?;
            println!("mock advisor listening on {}", server.url());
            server.wait()
        })(),
        Command::Ledger { run, json } => (|| {
            let reports = harness::query_ledger_report(&run)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                for r in reports {
                    println!("seed {}\n{}", r.seed, r.report);
                }
            }
            Ok(())
        })(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::UnknownEnv(_) => 2,
                Error::NonFinite(_) => 3,
                _ => 1,
            })
        }
    }
}
