//! `vwl`: run scenarios, sweep the flat-state stability profile, and verify
//! the build.
//!
//! Exit codes: 0 on normal completion, 2 when a run stops because
//! `inf A1 <= -eta1`, 1 on any error (including fatal vortex proximity).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use vwl_core::simulator::{run, StopReason, TrajectoryWriter};
use vwl_core::taylor_sign::{sweep, SWEEP_HEADER};
use vwl_core::verify::{run_all, Mutation, VerifyOptions};
use vwl_core::ScenarioConfig;

#[derive(Parser)]
#[command(name = "vwl", version, about = "Water waves over a point-vortex pair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the scenario in CONFIG and write its trajectory CSV.
    Run { config: PathBuf },
    /// Tabulate the flat-interface infimum of A1 over a range of gamma.
    Sweep {
        #[arg(long, allow_hyphen_values = true)]
        gamma_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance and module checks; exit 0 iff all pass.
    Verify {
        /// Skip the time-stepping criteria.
        #[arg(long)]
        quick: bool,
        #[arg(long, value_enum, hide = true)]
        mutate: Option<MutationArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    HilbertSign,
}

const EXIT_ETA1: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Sweep { gamma_min, gamma_max, steps, x, y, out } => {
            cmd_sweep(gamma_min, gamma_max, steps, x, y, out.as_deref())
        }
        Command::Verify { quick, mutate } => cmd_verify(quick, mutate),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Sizes the global rayon pool from `VWL_THREADS` when set.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("VWL_THREADS") else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => bail!("VWL_THREADS must be a positive integer, got {raw:?}"),
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    Ok(())
}

fn cmd_run(config_path: &std::path::Path) -> Result<u8> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let config = ScenarioConfig::parse(&text).with_context(|| format!("in {}", config_path.display()))?;

    let mut writer = TrajectoryWriter::create(&config.output_path)
        .with_context(|| format!("creating {}", config.output_path.display()))?;
    let mut monitor_out = match &config.monitor_path {
        Some(p) => Some(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => None,
    };
    let mut io_error: Option<io::Error> = None;
    let outcome = run(&config, |record, report| {
        if io_error.is_some() {
            return;
        }
        let mut write = || -> io::Result<()> {
            writer.append(record)?;
            if let Some(m) = monitor_out.as_mut() {
                writeln!(m, "{}", report.to_json_line())?;
                m.flush()?;
            }
            Ok(())
        };
        io_error = write().err();
    })?;
    if let Some(e) = io_error {
        return Err(e).context("writing output");
    }

    let last = outcome.records.last();
    let summary = |label: &str| {
        if let Some(r) = last {
            eprintln!("{label} at t = {:.4}: y = {:.5}, inf A1 = {:.5}, {} steps", r.t, r.y1, r.inf_a1, outcome.steps);
        }
    };
    match outcome.stop {
        StopReason::Completed => {
            summary("completed");
            Ok(0)
        }
        StopReason::Eta1Reached { inf_a1 } => {
            summary(&format!("stopped: inf A1 = {inf_a1:.5} <= -{}", config.eta1));
            Ok(EXIT_ETA1)
        }
        StopReason::FatalProximity { d_i, limit } => {
            summary("partial trajectory");
            bail!("vortex within {d_i:.4e} of the interface (fatal below {limit:.4e})")
        }
        StopReason::Failed(e) => {
            summary("partial trajectory");
            Err(e).context("integration failed")
        }
    }
}

fn cmd_sweep(gamma_min: f64, gamma_max: f64, steps: usize, x: f64, y: f64, out: Option<&std::path::Path>) -> Result<u8> {
    let rows = sweep(gamma_min, gamma_max, steps, x, y)?;
    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(sink, "{SWEEP_HEADER}")?;
    for r in &rows {
        writeln!(sink, "{}", r.to_csv())?;
    }
    sink.flush()?;
    Ok(0)
}

fn cmd_verify(quick: bool, mutate: Option<MutationArg>) -> Result<u8> {
    let opts = VerifyOptions {
        quick,
        mutation: mutate.map(|m| match m {
            MutationArg::HilbertSign => Mutation::HilbertSign,
        }),
    };
    if let Some(m) = opts.mutation {
        println!("mutation injected: {m:?}");
    }
    if quick {
        println!("quick mode: time-stepping criteria 7 to 12 skipped");
    }
    let results = run_all(&opts);
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id.as_str()).collect();
    println!("{} of {} checks passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        Ok(0)
    } else {
        println!("failed: {}", failed.join(", "));
        Ok(1)
    }
}
