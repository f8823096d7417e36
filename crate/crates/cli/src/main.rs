mod config;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use percolab_core::inequalities::Verdict;
use percolab_core::oracle::{exact_connectivity, exact_connectivity_rational, rational, Instance, DEFAULT_STATE_LIMIT};
use percolab_core::records::{write_csv, write_json};
use percolab_core::EstimateRecord;

use config::{Format, Settings};
use run::Usage;

const EXIT_USAGE: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "percolab", version, about = "Percolation on trees, tree products and lamplighters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate one or more quantities at a single p.
    Estimate(Settings),
    /// Estimate quantities over a grid of p values (long-format output).
    Sweep(Settings),
    /// Run verification checks; exits 2 if any check fails.
    Verify(Settings),
    /// Exact connection probability of an instance file.
    Exact {
        #[arg(long, value_name = "PATH")]
        instance: PathBuf,
        #[arg(long)]
        p: f64,
        /// Compute in exact rational arithmetic.
        #[arg(long)]
        rational: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, Usage> {
    match cmd {
        Command::Estimate(s) => {
            let s = s.resolve()?;
            let recs = run::cmd_estimate(&s)?;
            emit_records(&s, &recs)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(s) => {
            let s = s.resolve()?;
            let recs = run::cmd_sweep(&s)?;
            emit_records(&s, &recs)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(s) => {
            let s = s.resolve()?;
            let reports = run::cmd_verify(&s)?;
            let mut buf = serde_json::to_vec_pretty(&reports).map_err(|e| Usage(e.to_string()))?;
            buf.push(b'\n');
            write_output(&s, &buf)?;
            let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
            eprintln!(
                "seed = {}; pass {}, fail {}, inconclusive {}",
                s.mc()?.seed,
                count(Verdict::Pass),
                count(Verdict::Fail),
                count(Verdict::Inconclusive)
            );
            Ok(if count(Verdict::Fail) > 0 {
                ExitCode::from(EXIT_CHECK_FAILED)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Exact { instance, p, rational: exact } => {
            let text = std::fs::read_to_string(&instance)
                .map_err(|e| Usage(format!("cannot read {}: {e}", instance.display())))?;
            let inst = Instance::from_text(&text)?;
            if exact {
                let v = exact_connectivity_rational(&inst, &rational(p)?, DEFAULT_STATE_LIMIT)?;
                println!("{v}");
            } else {
                let v: f64 = exact_connectivity(&inst, &p, DEFAULT_STATE_LIMIT)?;
                println!("{v}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit_records(s: &Settings, recs: &[EstimateRecord]) -> Result<(), Usage> {
    let mut buf = Vec::new();
    match s.format() {
        Format::Csv => write_csv(&mut buf, recs)?,
        Format::Json => write_json(&mut buf, recs)?,
    }
    write_output(s, &buf)?;
    eprintln!("seed = {}", s.mc()?.seed);
    for r in recs {
        if let Some(w) = &r.warning {
            eprintln!("warning: {} (p = {}): {w}", r.quantity, r.p);
        }
    }
    Ok(())
}

fn write_output(s: &Settings, bytes: &[u8]) -> Result<(), Usage> {
    match &s.out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| Usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Usage(format!("cannot write to stdout: {e}"))),
    }
}
