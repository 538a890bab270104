//! `ricean-se`: sweep runner, report printer and self-check driver.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ricean_se::report::build_report;
use ricean_se::sweep::{dump_channel, run_sweep, write_outputs, RunMetadata, SweepSpec};
use ricean_se::validation::{run_suite, Suite, SuiteOptions};
use ricean_se::{Executor, Scenario};

#[derive(Parser)]
#[command(
    name = "ricean-se",
    version,
    about = "Uplink spectral efficiency of massive MIMO under Ricean fading"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep M or K and write sweep.csv, sweep.svg and metadata.json.
    Run(RunArgs),
    /// Run a self-check suite; exits 1 if any check fails.
    Validate(ValidateArgs),
    /// Per-user SINR and SE of drop 0 as CSV on stdout.
    Report(ReportArgs),
    /// Print the resolved scenario as TOML.
    Show(Source),
}

#[derive(Args)]
struct Source {
    /// Scenario file (TOML).
    #[arg(required_unless_present = "reference_defaults")]
    scenario: Option<PathBuf>,
    /// Use the built-in seven-cell reference scenario instead of a file.
    #[arg(long, conflicts_with = "scenario")]
    reference_defaults: bool,
}

impl Source {
    fn load(&self) -> Result<Scenario> {
        match &self.scenario {
            Some(p) => Scenario::load(p).with_context(|| format!("loading {}", p.display())),
            None => Ok(Scenario::reference()),
        }
    }

    fn label(&self) -> String {
        self.scenario
            .as_ref()
            .map_or_else(|| "reference-defaults".into(), |p| p.display().to_string())
    }
}

#[derive(Args)]
struct Workers {
    /// Worker threads; 0 means one per core.
    #[arg(long, env = "RICEAN_SE_WORKERS", default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Sweep, e.g. `M:50..500:50;K_dB:-inf,3,6,10;est:ls,mmse`.
    #[arg(long)]
    sweep: String,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Add Monte-Carlo estimates with standard errors.
    #[arg(long)]
    mc: bool,
    /// Add the large-M or large-K limit along the sweep axis.
    #[arg(long)]
    asymptotes: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Large-scale drops per point.
    #[arg(long)]
    drops: Option<usize>,
    /// Coherence blocks per drop.
    #[arg(long)]
    blocks: Option<usize>,
    /// Also write one channel realization in the binary dump layout.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[command(flatten)]
    workers: Workers,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    source: Source,
    /// identities, oracle, moments, asymptotes or all.
    #[arg(long)]
    suite: String,
    /// Coherence blocks for the simulated checks.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[command(flatten)]
    workers: Workers,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    source: Source,
    /// Cell whose users are reported; defaults to the scenario's target cell.
    #[arg(long)]
    cell: Option<usize>,
    /// Add Monte-Carlo entries.
    #[arg(long)]
    mc: bool,
    #[command(flatten)]
    workers: Workers,
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let started_at = RunMetadata::now_unix();
    let clock = Instant::now();
    let mut scenario = args.source.load()?;
    let sim = &mut scenario.simulation;
    if let Some(s) = args.seed {
        sim.seed = s;
    }
    if let Some(d) = args.drops {
        sim.drops = d;
    }
    if let Some(b) = args.blocks {
        sim.blocks = b;
    }
    let mut spec = SweepSpec::parse(&args.sweep)?;
    spec.include_monte_carlo = args.mc;
    spec.include_asymptotes = args.asymptotes;

    let exec = Executor::new(args.workers.workers);
    let settings = scenario.mc_settings(args.workers.workers);
    let result = run_sweep(&scenario, &spec, &exec, &settings)?;
    let meta = RunMetadata {
        tool_version: env!("CARGO_PKG_VERSION"),
        scenario: args.source.label(),
        sweep: spec.to_string(),
        seed: settings.seed,
        workers: exec.workers(),
        drops: settings.n_large_scale,
        blocks: settings.n_small_scale,
        monte_carlo: spec.include_monte_carlo,
        asymptotes: spec.include_asymptotes,
        started_at,
        elapsed_seconds: clock.elapsed().as_secs_f64(),
    };
    let files = write_outputs(&result, &args.out, &meta)
        .with_context(|| format!("writing results to {}", args.out.display()))?;
    if let Some(path) = &args.dump {
        dump_channel(&scenario, path).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    for p in [files.csv, files.plot, files.metadata] {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let scenario = args.source.load()?;
    let suites = match args.suite.as_str() {
        "all" => Suite::ALL.to_vec(),
        s => vec![s.parse()?],
    };
    let opts = SuiteOptions {
        samples: args.samples,
        workers: args.workers.workers,
    };
    let mut ok = true;
    let mut failures = Vec::new();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for suite in suites {
        let report = run_suite(suite, &scenario, &opts)?;
        write!(out, "{report}")?;
        ok &= report.passed();
        failures.extend(report.failures().map(|c| c.name.clone()));
    }
    if ok {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("failed checks: {}", failures.join(", "));
        Ok(ExitCode::from(1))
    }
}

fn report(args: ReportArgs) -> Result<ExitCode> {
    let scenario = args.source.load()?;
    let cfg = scenario.config(None)?;
    let ls = scenario.drop(0, None)?;
    let cell = args.cell.unwrap_or(scenario.simulation.target_cell);
    let settings = scenario.mc_settings(args.workers.workers);
    let exec = Executor::new(args.workers.workers);
    let r = build_report(&cfg, &ls, cell, args.mc.then_some((&settings, &exec)))?;
    r.write_csv(std::io::stdout().lock())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Validate(a) => validate(a),
        Command::Report(a) => report(a),
        Command::Show(s) => s.load().map(|sc| {
            print!("{}", sc.to_toml());
            ExitCode::SUCCESS
        }),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
