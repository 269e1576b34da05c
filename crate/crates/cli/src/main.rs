use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mqs_cli::emit::{to_json, write_output, Format};
use mqs_cli::spec::ScenarioParams;
use mqs_cli::{
    run_index_p, run_index_q, run_scenario, run_verify, CliError, NRange, RunOptions, ScenarioName, ScenarioSpec,
    StateSpec, SuiteChoice, SupportSpec, SweepResult, EXIT_INVALID, EXIT_OK, EXIT_VIOLATION,
};
use mqs_core::channels::CatMode;

#[derive(Parser)]
#[command(name = "mqs", version, about = "Macroscopic quantum superposition indices and trade-off certification")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximal additive-operator variance (index p) of a pure-state family.
    IndexP(IndexArgs),
    /// Maximal double-commutator trace norm (index q) of a state family.
    IndexQ(IndexArgs),
    /// Randomized verification of the trade-off inequalities.
    Verify(VerifyArgs),
    /// Run a named scenario pipeline (or one loaded with --config).
    Scenario(ScenarioArgs),
    /// Run a scenario over an N range and emit a table.
    Sweep(ScenarioArgs),
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include per-N wall-clock timings in the output.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct IndexArgs {
    /// cat, zero, tilted, random-product, random, classical-mixture,
    /// maximally-mixed, product-mixture, random-mixed
    #[arg(long, default_value = "cat")]
    state: String,
    #[arg(long, conflicts_with = "n_range")]
    n: Option<usize>,
    #[arg(long)]
    n_range: Option<NRange>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random restarts of the index-q search.
    #[arg(long, default_value_t = 4)]
    budget: usize,
    /// Components of a product-mixture state.
    #[arg(long)]
    components: Option<usize>,
    /// Rank of a random-mixed state.
    #[arg(long)]
    rank: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum, default_value = "all")]
    suite: SuiteChoice,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest lattice drawn (default 8 for pure, 6 otherwise).
    #[arg(long)]
    max_sites: Option<usize>,
    /// Add one trial with a channel of norm 1.5, which must be rejected.
    #[arg(long)]
    inject_invalid: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(value_enum, required_unless_present = "config")]
    name: Option<ScenarioName>,
    /// JSON scenario spec: {"name": ..., "parameters": {...}}.
    #[arg(long, conflicts_with = "name")]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "n_range")]
    n: Option<usize>,
    #[arg(long)]
    n_range: Option<NRange>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<CatMode>,
    /// `half`, `leading:K` or a comma-separated site list.
    #[arg(long)]
    support: Option<SupportSpec>,
    /// Input state for cat-creation and spin-flip.
    #[arg(long)]
    state: Option<String>,
    #[command(flatten)]
    output: Output,
}

fn parse_mode(s: &str) -> Result<CatMode, String> {
    match s {
        "literal" => Ok(CatMode::Literal),
        "completed" => Ok(CatMode::Completed),
        other => Err(format!("mode must be literal or completed, got {other:?}")),
    }
}

fn emit_sweep(result: &SweepResult, output: &Output, default: Format) -> Result<(), CliError> {
    let text = match output.format.unwrap_or(default) {
        Format::Json => to_json(result).map_err(|e| CliError::Invalid(e.to_string()))?,
        Format::Csv => result.to_table().to_csv().map_err(|e| CliError::Invalid(e.to_string()))?,
    };
    write_output(&text, output.out.as_deref())?;
    Ok(())
}

fn index_range(n: Option<usize>, range: Option<NRange>, default: NRange) -> NRange {
    match (n, range) {
        (Some(n), _) => NRange::single(n),
        (None, Some(r)) => r,
        (None, None) => default,
    }
}

fn scenario_spec(args: &ScenarioArgs) -> Result<ScenarioSpec, CliError> {
    if let Some(path) = &args.config {
        return ScenarioSpec::from_json(&read(path)?);
    }
    let name = args.name.expect("clap requires name or config");
    let mut alpha = args.alpha;
    let mut seed = args.seed;
    let state = match &args.state {
        Some(s) => {
            let spec = StateSpec::from_flags(s, alpha, seed.unwrap_or(0), None, None)?;
            if matches!(spec, StateSpec::Tilted { .. }) {
                alpha = None;
            }
            if matches!(spec, StateSpec::Random { .. } | StateSpec::RandomProduct { .. }) {
                seed = None;
            }
            Some(spec)
        }
        None => None,
    };
    Ok(ScenarioSpec {
        name,
        parameters: ScenarioParams {
            n: args.n,
            n_range: args.n_range,
            alpha,
            support: args.support.clone(),
            mode: args.mode,
            seed,
            budget: args.budget,
            state,
            channel: None,
            operator: None,
        },
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn scenario(args: &ScenarioArgs, default: Format) -> Result<u8, CliError> {
    let spec = scenario_spec(args)?;
    let opts = RunOptions { timings: args.output.timings };
    let result = run_scenario(&spec, opts)?;
    emit_sweep(&result, &args.output, default)?;
    Ok(if result.violations > 0 { EXIT_VIOLATION } else { EXIT_OK })
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    match cli.command {
        Command::IndexP(a) => {
            let state = StateSpec::from_flags(&a.state, a.alpha, a.seed, a.components, a.rank)?;
            let range = index_range(a.n, a.n_range, NRange { start: 4, end: 12 });
            let opts = RunOptions { timings: a.output.timings };
            emit_sweep(&run_index_p(&state, range, opts)?, &a.output, Format::Json)?;
            Ok(EXIT_OK)
        }
        Command::IndexQ(a) => {
            let state = StateSpec::from_flags(&a.state, a.alpha, a.seed, a.components, a.rank)?;
            let range = index_range(a.n, a.n_range, NRange { start: 4, end: 10 });
            let opts = RunOptions { timings: a.output.timings };
            emit_sweep(&run_index_q(&state, range, a.budget, a.seed, opts)?, &a.output, Format::Json)?;
            Ok(EXIT_OK)
        }
        Command::Verify(a) => {
            let summary = run_verify(a.suite, a.trials, a.seed, a.max_sites, a.inject_invalid)?;
            let text = match a.output.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&summary).map_err(|e| CliError::Invalid(e.to_string()))?,
                Format::Csv => summary.to_table().to_csv().map_err(|e| CliError::Invalid(e.to_string()))?,
            };
            write_output(&text, a.output.out.as_deref())?;
            if summary.passed {
                Ok(EXIT_OK)
            } else {
                for (name, report) in &summary.suites {
                    if let Some(c) = &report.counterexample {
                        eprintln!("violation in suite {name}, check {} (trial {})", c.check, c.trial);
                        eprintln!("{}", to_json(c).map_err(|e| CliError::Invalid(e.to_string()))?);
                    }
                }
                Ok(EXIT_VIOLATION)
            }
        }
        Command::Scenario(a) => scenario(&a, Format::Json),
        Command::Sweep(a) => {
            if a.n.is_some() {
                return Err(CliError::Invalid("sweep takes --n-range, not --n".into()));
            }
            scenario(&a, Format::Csv)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
