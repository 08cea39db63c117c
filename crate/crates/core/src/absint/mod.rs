//! Configurable abstract interpretation of normalized programs.

mod engine;
pub mod facts;
pub mod state;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use crate::config::AnalysisConfig;
use crate::ir::{normalize, Program, StmtId};
use crate::numdom::{DomainError, DomainKind, Dimension, Name};
use crate::pointsto::{compute_points_to, AbsName, CallGraph, Node, PointsTo};
use crate::{IntervalState, PolyState};
pub use facts::{model_field, preallocate_dims, Facts, Plan, CONTENTS, LEN};
pub use state::{AbsState, Domain};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("numeric domain: {0}")]
    Domain(#[from] DomainError),
}

/// Deadline and cancellation shared by one analysis run.
#[derive(Clone, Debug, Default)]
pub struct Budget {
    pub deadline: Option<Instant>,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn within(d: Duration) -> Self {
        Budget { deadline: Some(Instant::now() + d), cancel: None }
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d) || self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }
}

/// Tuning knobs of the fixpoint engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Options {
    /// Loop iteration from which joins become widenings.
    pub widen_at: usize,
    /// Iterations after which a loop head is reset to top.
    pub max_iterations: usize,
    /// Reuse callee analyses for equal entry states.
    pub memo: bool,
    pub memo_size: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { widen_at: 3, max_iterations: 50, memo: true, memo_size: 16 }
    }
}

/// Bottom-up summary of a node: relates its return value, parameter entry
/// values, the heap it writes and the heap values it reads on entry.
#[derive(Clone, Debug)]
pub struct Summary<D> {
    pub state: AbsState<D>,
    pub initial: Vec<Dimension>,
    /// Computed with calls inside its own recursive cycle treated as unknown.
    pub recursive: bool,
}

#[derive(Clone, Debug)]
pub struct AnalysisResult<D> {
    pub config: AnalysisConfig,
    pub entry: Node,
    /// State before each reachable statement, joined over all contexts.
    pub states: BTreeMap<(Node, StmtId), AbsState<D>>,
    /// State at each node's exit with the return value assigned.
    pub exits: BTreeMap<Node, AbsState<D>>,
    pub plans: BTreeMap<Node, Plan>,
    pub summaries: BTreeMap<Node, Summary<D>>,
    /// Abstract objects by the name used in dimensions.
    pub names: BTreeMap<Name, AbsName>,
    /// Objects that may exist on entry to each node (`None`: any).
    pub pre: BTreeMap<Node, Option<BTreeSet<AbsName>>>,
    pub bu_nodes: BTreeSet<Node>,
    pub warnings: Vec<String>,
    pub iterations: u64,
    pub max_dims: usize,
    /// The budget ran out; states cover only part of the program.
    pub partial: bool,
}

impl<D: Domain> AnalysisResult<D> {
    pub fn state(&self, n: &Node, id: StmtId) -> Option<&AbsState<D>> {
        self.states.get(&(n.clone(), id))
    }

    pub fn exit(&self, n: &Node) -> Option<&AbsState<D>> {
        self.exits.get(n)
    }

    pub fn node(&self, method: &str) -> Option<&Node> {
        self.plans.keys().find(|n| n.method.to_string() == method)
    }

    /// Whether objects named `o` may exist when `n` is entered.
    pub fn may_pre_exist(&self, n: &Node, o: &AbsName) -> bool {
        self.pre.get(n).and_then(|p| p.as_ref()).is_none_or(|s| s.contains(o))
    }

    /// Every recorded state, one block per program point.
    pub fn dump_states(&self) -> String {
        let mut out = String::new();
        for ((n, id), s) in &self.states {
            out.push_str(&format!("== {n} @{id}\n{}", s.render()));
        }
        for (n, s) in &self.exits {
            out.push_str(&format!("== {n} exit\n{}", s.render()));
        }
        out
    }
}

/// A result in either numeric domain.
#[derive(Clone, Debug)]
pub enum AnyResult {
    Int(AnalysisResult<IntervalState>),
    Pol(AnalysisResult<PolyState>),
}

macro_rules! any {
    ($self:expr, $r:ident => $e:expr) => {
        match $self {
            AnyResult::Int($r) => $e,
            AnyResult::Pol($r) => $e,
        }
    };
}

impl AnyResult {
    pub fn partial(&self) -> bool {
        any!(self, r => r.partial)
    }

    pub fn iterations(&self) -> u64 {
        any!(self, r => r.iterations)
    }

    pub fn max_dims(&self) -> usize {
        any!(self, r => r.max_dims)
    }

    pub fn warnings(&self) -> &[String] {
        any!(self, r => &r.warnings)
    }

    pub fn dump_states(&self) -> String {
        any!(self, r => r.dump_states())
    }
}

/// Analyzes a normalized program with precomputed points-to facts.
pub fn analyze_program(
    p: &Program,
    cfg: AnalysisConfig,
    pt: &PointsTo,
    cg: &CallGraph,
    opts: Options,
    budget: &Budget,
) -> Result<AnyResult, AnalysisError> {
    Ok(match cfg.nd {
        DomainKind::Int => AnyResult::Int(run::<IntervalState>(p, cfg, pt, cg, opts, budget)?),
        DomainKind::Pol => AnyResult::Pol(run::<PolyState>(p, cfg, pt, cg, opts, budget)?),
    })
}

/// Runs the analysis in a chosen domain.
pub fn run<D: Domain>(
    p: &Program,
    cfg: AnalysisConfig,
    pt: &PointsTo,
    cg: &CallGraph,
    opts: Options,
    budget: &Budget,
) -> Result<AnalysisResult<D>, AnalysisError> {
    let facts = Facts::new(p, cfg, pt, cg);
    let mut e = engine::Engine::<D>::new(facts, opts, budget.clone());
    match e.run() {
        Ok(()) => Ok(e.into_result(false)),
        Err(engine::Stop::Timeout) => Ok(e.into_result(true)),
        Err(engine::Stop::Domain(d)) => Err(d.into()),
    }
}

/// A normalized program with its points-to facts.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub program: Program,
    pub pt: PointsTo,
    pub cg: CallGraph,
}

pub fn prepare(p: &Program, cfg: AnalysisConfig) -> Prepared {
    let program = normalize(p);
    let (pt, cg) = compute_points_to(&program, cfg.or, cfg.cs);
    Prepared { program, pt, cg }
}

impl Prepared {
    pub fn analyze<D: Domain>(&self, cfg: AnalysisConfig, budget: &Budget) -> Result<AnalysisResult<D>, AnalysisError> {
        run::<D>(&self.program, cfg, &self.pt, &self.cg, Options::default(), budget)
    }

    pub fn analyze_any(&self, cfg: AnalysisConfig, budget: &Budget) -> Result<AnyResult, AnalysisError> {
        analyze_program(&self.program, cfg, &self.pt, &self.cg, Options::default(), budget)
    }
}
