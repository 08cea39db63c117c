use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use numlab::absint::{prepare, AnalysisConfig, Budget};
use numlab::boundscheck::check_any;
use numlab::config::{enumerate_configs, ConfigFilter};
use numlab::harness::{sweep, write_csv, SweepOptions};
use numlab::ir::parse_program;
use numlab::pointsto::dump;

#[derive(Parser)]
#[command(name = "numlab", version, about = "Numeric abstract interpretation over a small object language")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analyze one program and report its array checks.
    Analyze {
        file: PathBuf,
        /// AO-HA-CS-OR-ND, e.g. TD-AP+SO-1TYP-CLAS-INT
        #[arg(long)]
        config: AnalysisConfig,
        #[arg(long)]
        dump_states: bool,
        #[arg(long)]
        dump_checks: bool,
        #[arg(long)]
        dump_pts: bool,
        #[arg(long, default_value_t = 60)]
        budget_secs: u64,
    },
    /// Run every (program, config) cell of a corpus directory.
    Sweep {
        dir: PathBuf,
        /// Axis restrictions, e.g. ND=INT,HA=AP
        #[arg(long)]
        filter: Option<ConfigFilter>,
        #[arg(long, default_value_t = 60)]
        budget_secs: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Analyze { file, config, dump_states, dump_checks, dump_pts, budget_secs } => {
            let src = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let p = parse_program(&src).with_context(|| format!("parsing {}", file.display()))?;
            let prep = prepare(&p, config);
            if dump_pts {
                print!("{}", dump(&prep.pt, &prep.cg));
            }
            let r = prep.analyze_any(config, &Budget::within(Duration::from_secs(budget_secs)))?;
            for w in r.warnings() {
                eprintln!("warning: {w}");
            }
            if dump_states {
                print!("{}", r.dump_states());
            }
            let rep = check_any(&r, &prep.program, &prep.pt);
            if dump_checks {
                print!("{}", rep.render());
            }
            if !dump_states && !dump_checks && !dump_pts {
                let status = if r.partial() { "timeout" } else { "ok" };
                println!("{config} {status}: {} of {} checks discharged", rep.discharged(), rep.total);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sweep { dir, filter, budget_secs, trials, jobs, out } => {
            anyhow::ensure!(budget_secs > 0 && trials > 0, "budget and trials must be positive");
            let configs = enumerate_configs(filter.as_ref());
            let opts = SweepOptions { budget: Duration::from_secs(budget_secs), trials, jobs };
            let outcome = sweep(&dir, &configs, &opts).with_context(|| format!("reading {}", dir.display()))?;
            for (path, e) in &outcome.skipped {
                eprintln!("skipped {}: {e}", path.display());
            }
            anyhow::ensure!(!outcome.rows.is_empty() || configs.is_empty(), "no readable programs in {}", dir.display());
            let f = std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_csv(f, &outcome.rows)?;
            Ok(if outcome.has_errors() { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
    }
}
