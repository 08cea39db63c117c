//! Runs (program, configuration) cells under a wall-clock budget and writes
//! the results matrix as CSV.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::absint::{prepare, Budget};
use crate::boundscheck::{check_any, sites};
use crate::config::AnalysisConfig;
use crate::ir::{parse_program, Program};

/// Default per-cell budget.
pub const DEFAULT_BUDGET: Duration = Duration::from_secs(60);

pub const CSV_HEADER: [&str; 14] =
    ["program", "config", "ao", "ha", "cs", "or", "nd", "status", "time_secs", "total_checks", "discharged", "percent", "max_dims", "iterations"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Timeout,
    Error(String),
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Ok => f.write_str("ok"),
            Status::Timeout => f.write_str("timeout"),
            Status::Error(_) => f.write_str("error"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub program: String,
    pub config: AnalysisConfig,
    pub status: Status,
    pub time_secs: f64,
    pub total_checks: usize,
    pub discharged: usize,
    pub percent: f64,
    pub max_dims: usize,
    pub iterations: u64,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    program: &'a str,
    config: String,
    ao: &'static str,
    ha: &'static str,
    cs: &'static str,
    or: &'static str,
    nd: &'static str,
    status: String,
    time_secs: String,
    total_checks: usize,
    discharged: usize,
    percent: String,
    max_dims: usize,
    iterations: u64,
}

impl ResultRow {
    fn csv(&self) -> CsvRow<'_> {
        let c = &self.config;
        CsvRow {
            program: &self.program,
            config: c.to_string(),
            ao: c.ao.label(),
            ha: c.ha.label(),
            cs: c.cs.label(),
            or: c.or.label(),
            nd: match c.nd {
                crate::config::Nd::Int => "INT",
                crate::config::Nd::Pol => "POL",
            },
            status: self.status.to_string(),
            time_secs: format!("{:.6}", self.time_secs),
            total_checks: self.total_checks,
            discharged: self.discharged,
            percent: format!("{:.2}", self.percent),
            max_dims: self.max_dims,
            iterations: self.iterations,
        }
    }
}

/// Result of a single timed run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub status: Status,
    pub time_secs: f64,
    pub discharged: usize,
    pub percent: f64,
    pub max_dims: usize,
    pub iterations: u64,
}

fn trial(p: &Program, cfg: AnalysisConfig, budget: Duration, total: usize) -> Trial {
    let start = Instant::now();
    let b = Budget::within(budget);
    let prep = prepare(p, cfg);
    let res = prep.analyze_any(cfg, &b);
    let elapsed = start.elapsed();
    match res {
        Err(e) => Trial { status: Status::Error(e.to_string()), time_secs: elapsed.as_secs_f64(), discharged: 0, percent: 0.0, max_dims: 0, iterations: 0 },
        Ok(r) if r.partial() || elapsed > budget => {
            Trial { status: Status::Timeout, time_secs: budget.as_secs_f64(), discharged: 0, percent: 0.0, max_dims: r.max_dims(), iterations: r.iterations() }
        }
        Ok(r) => {
            let rep = check_any(&r, &prep.program, &prep.pt);
            debug_assert_eq!(rep.total, total);
            Trial {
                status: Status::Ok,
                time_secs: elapsed.as_secs_f64(),
                discharged: rep.discharged(),
                percent: rep.percent(),
                max_dims: r.max_dims(),
                iterations: r.iterations(),
            }
        }
    }
}

/// Combines trials: an error in any trial wins, then a majority of
/// timeouts; otherwise the completed trial with the median time speaks.
pub fn aggregate(program: &str, cfg: AnalysisConfig, total: usize, budget: Duration, trials: &[Trial]) -> ResultRow {
    let row = |t: &Trial| ResultRow {
        program: program.to_string(),
        config: cfg,
        status: t.status.clone(),
        time_secs: t.time_secs,
        total_checks: total,
        discharged: t.discharged,
        percent: t.percent,
        max_dims: t.max_dims,
        iterations: t.iterations,
    };
    if let Some(e) = trials.iter().find(|t| matches!(t.status, Status::Error(_))) {
        return row(e);
    }
    let mut done: Vec<&Trial> = trials.iter().filter(|t| t.status == Status::Ok).collect();
    if done.is_empty() || 2 * (trials.len() - done.len()) > trials.len() {
        let t = Trial { status: Status::Timeout, time_secs: budget.as_secs_f64(), discharged: 0, percent: 0.0, max_dims: 0, iterations: 0 };
        let mut r = row(&t);
        if let Some(x) = trials.iter().max_by_key(|t| t.max_dims) {
            r.max_dims = x.max_dims;
            r.iterations = x.iterations;
        }
        return r;
    }
    done.sort_by(|a, b| a.time_secs.total_cmp(&b.time_secs));
    let mid = done[(done.len() - 1) / 2];
    let mut r = row(mid);
    if done.len() % 2 == 0 {
        r.time_secs = (done[done.len() / 2 - 1].time_secs + done[done.len() / 2].time_secs) / 2.0;
    }
    r
}

/// Runs one cell `trials` times.
pub fn run_cell(program: &str, p: &Program, cfg: AnalysisConfig, budget: Duration, trials: usize) -> ResultRow {
    assert!(trials >= 1 && !budget.is_zero());
    let total = sites(&crate::ir::normalize(p)).len();
    let ts: Vec<Trial> = (0..trials).map(|_| trial(p, cfg, budget, total)).collect();
    aggregate(program, cfg, total, budget, &ts)
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub budget: Duration,
    pub trials: usize,
    pub jobs: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { budget: DEFAULT_BUDGET, trials: 1, jobs: 1 }
    }
}

#[derive(Debug, Default)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    /// Corpus entries that could not be read or parsed.
    pub skipped: Vec<(PathBuf, String)>,
}

impl SweepOutcome {
    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| matches!(r.status, Status::Error(_)))
    }
}

/// Corpus programs in a directory (`*.nl`), sorted by name.
pub fn load_corpus(dir: &Path) -> std::io::Result<(Vec<(String, Program)>, Vec<(PathBuf, String)>)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "nl"))
        .collect();
    paths.sort();
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for path in paths {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        match std::fs::read_to_string(&path).map_err(|e| e.to_string()).and_then(|s| parse_program(&s).map_err(|e| e.to_string())) {
            Ok(p) => ok.push((name, p)),
            Err(e) => bad.push((path, e)),
        }
    }
    Ok((ok, bad))
}

/// Every (program, config) cell, run on `jobs` threads; rows sorted by
/// program then config.
pub fn sweep_programs(programs: &[(String, Program)], configs: &[AnalysisConfig], opts: &SweepOptions) -> Vec<ResultRow> {
    let cells: Vec<(&str, &Program, AnalysisConfig)> =
        programs.iter().flat_map(|(n, p)| configs.iter().map(move |c| (n.as_str(), p, *c))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs.max(1)).build().expect("thread pool");
    let mut rows: Vec<ResultRow> = pool.install(|| cells.par_iter().map(|(n, p, c)| run_cell(n, p, *c, opts.budget, opts.trials)).collect());
    rows.sort_by(|a, b| (&a.program, a.config).cmp(&(&b.program, b.config)));
    rows
}

pub fn sweep(dir: &Path, configs: &[AnalysisConfig], opts: &SweepOptions) -> std::io::Result<SweepOutcome> {
    let (programs, skipped) = load_corpus(dir)?;
    Ok(SweepOutcome { rows: sweep_programs(&programs, configs, opts), skipped })
}

pub fn write_csv<W: std::io::Write>(w: W, rows: &[ResultRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record(CSV_HEADER)?;
    }
    for r in rows {
        out.serialize(r.csv())?;
    }
    out.flush()?;
    Ok(())
}
