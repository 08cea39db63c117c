//! Array-index checks: an access is discharged when the state before it
//! proves `0 <= i < len`.

use std::collections::BTreeMap;
use std::fmt;

use crate::absint::facts::{has_num_field, CONTENTS, LEN};
use crate::absint::state::linear;
use crate::absint::{AbsState, AnalysisResult, AnyResult, Domain};
use crate::config::Ha;
use crate::ir::{walk, Expr, MethodRef, Name, Program, StmtId, StmtKind};
use crate::numdom::{Dimension, Rel};
use crate::pointsto::{Node, PointsTo};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

/// One syntactic array access.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckSite {
    pub method: MethodRef,
    pub stmt: StmtId,
    pub array: Name,
    pub index: Expr,
    pub kind: AccessKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Discharged,
    NotProved,
    /// Every state at the site is bottom: the access never runs.
    Unreachable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Discharged => "discharged",
            Verdict::NotProved => "not-proved",
            Verdict::Unreachable => "unreachable",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckReport {
    pub sites: Vec<(CheckSite, Verdict)>,
    pub total: usize,
    /// Proved in bounds, unreachable sites excluded.
    pub proved: usize,
    pub not_proved: usize,
    pub unreachable: usize,
}

impl CheckReport {
    fn from_sites(sites: Vec<(CheckSite, Verdict)>) -> Self {
        let count = |v| sites.iter().filter(|(_, x)| *x == v).count();
        CheckReport {
            total: sites.len(),
            proved: count(Verdict::Discharged),
            not_proved: count(Verdict::NotProved),
            unreachable: count(Verdict::Unreachable),
            sites,
        }
    }

    /// Sites that cannot fail: proved ones plus unreachable ones.
    pub fn discharged(&self) -> usize {
        self.proved + self.unreachable
    }

    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            100.0
        } else {
            100.0 * self.discharged() as f64 / self.total as f64
        }
    }

    pub fn verdict(&self, stmt: StmtId) -> Option<Verdict> {
        self.sites.iter().find(|(s, _)| s.stmt == stmt).map(|(_, v)| *v)
    }

    /// One line per site, sorted.
    pub fn render(&self) -> String {
        let mut lines: Vec<String> = self
            .sites
            .iter()
            .map(|(s, v)| {
                let kind = if s.kind == AccessKind::Read { "read" } else { "write" };
                format!("{} @{} {}[{}] {kind}: {v}", s.method, s.stmt, s.array, crate::ir::print::expr(&s.index))
            })
            .collect();
        lines.sort();
        lines.push(format!("total {} discharged {} unreachable {}", self.total, self.discharged(), self.unreachable));
        lines.join("\n") + "\n"
    }
}

/// How the analysis sees an access: a weak read or write of the array's
/// `contents` field with an obligation on its `len` field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrayAccessModel {
    pub array: Name,
    pub index: Expr,
    pub kind: AccessKind,
    pub contents: Dimension,
    pub len: Dimension,
}

pub fn model_array_access(kind: &StmtKind) -> Option<ArrayAccessModel> {
    let (arr, index, k) = match kind {
        StmtKind::ArrayRead { arr, index, .. } => (arr, index, AccessKind::Read),
        StmtKind::ArrayWrite { arr, index, .. } => (arr, index, AccessKind::Write),
        _ => return None,
    };
    let a = arr.as_var()?.clone();
    Some(ArrayAccessModel {
        contents: Dimension::AccessPath(a.clone(), CONTENTS.into()),
        len: Dimension::AccessPath(a.clone(), LEN.into()),
        array: a,
        index: index.clone(),
        kind: k,
    })
}

/// Every array access of the program.
pub fn sites(p: &Program) -> Vec<CheckSite> {
    let mut out = Vec::new();
    for (r, m) in p.methods() {
        walk(&m.body, &mut |s| {
            if let Some(a) = model_array_access(&s.kind) {
                out.push(CheckSite { method: r.clone(), stmt: s.id, array: a.array, index: a.index, kind: a.kind });
            }
        });
    }
    out.sort_by(|a, b| (&a.method, a.stmt).cmp(&(&b.method, b.stmt)));
    out
}

/// `a` with index `i`; `None` when a term is not an atom.
fn index_terms(i: &Expr) -> Option<(Option<Dimension>, i64)> {
    match i {
        Expr::Var(x) => Some((Some(Dimension::Local(x.clone())), 0)),
        Expr::Int(v) => Some((None, *v)),
        _ => None,
    }
}

fn proves_below<D: Domain>(s: &AbsState<D>, i: &Expr, len: &Dimension) -> bool {
    let Some((d, c)) = index_terms(i) else { return false };
    // i - len <= -1
    let mut terms = vec![(len.clone(), -1)];
    if let Some(d) = d {
        terms.push((d, 1));
    }
    s.entails(&linear(&terms, Rel::Le, -1 - c)).unwrap_or(false)
}

fn proves_nonneg<D: Domain>(s: &AbsState<D>, i: &Expr) -> bool {
    match index_terms(i) {
        Some((None, c)) => c >= 0,
        Some((Some(d), _)) => s.entails(&linear(&[(d, -1)], Rel::Le, 0)).unwrap_or(false),
        None => false,
    }
}

fn check_at<D: Domain>(r: &AnalysisResult<D>, p: &Program, pt: &PointsTo, n: &Node, site: &CheckSite, s: &AbsState<D>) -> Verdict {
    if s.is_bottom() {
        return Verdict::Unreachable;
    }
    if !proves_nonneg(s, &site.index) {
        return Verdict::NotProved;
    }
    let ha = r.config.ha;
    let ap = Dimension::AccessPath(site.array.clone(), LEN.into());
    if ha != Ha::So && s.established.contains(&ap) {
        return if proves_below(s, &site.index, &ap) { Verdict::Discharged } else { Verdict::NotProved };
    }
    if ha == Ha::Ap {
        return Verdict::NotProved;
    }
    let plan = &r.plans[n];
    let objs: Vec<_> = pt.var(n, &site.array).iter().filter(|o| has_num_field(p, o, LEN)).collect();
    if objs.is_empty() {
        return Verdict::NotProved;
    }
    for o in objs {
        let so = Dimension::SummaryObject { obj: o.to_string().into(), field: LEN.into(), frame: plan.frame() };
        // A framed summary only covers objects created or written during the
        // activation, so it speaks for all of them only if none predate it.
        let covers_all = !plan.framed || !r.may_pre_exist(n, o);
        if !covers_all || !plan.summaries.contains(&so) || !s.present.contains(&so) || !proves_below(s, &site.index, &so) {
            return Verdict::NotProved;
        }
    }
    Verdict::Discharged
}

/// Verdicts for every access; a site is discharged only if it is in every
/// context that reaches it.
pub fn check_program<D: Domain>(r: &AnalysisResult<D>, p: &Program, pt: &PointsTo) -> CheckReport {
    let mut nodes: BTreeMap<&MethodRef, Vec<&Node>> = BTreeMap::new();
    for n in r.plans.keys() {
        nodes.entry(&n.method).or_default().push(n);
    }
    let out = sites(p)
        .into_iter()
        .map(|site| {
            let mut verdicts = Vec::new();
            for n in nodes.get(&site.method).into_iter().flatten() {
                verdicts.push(match r.state(n, site.stmt) {
                    Some(s) => check_at(r, p, pt, n, &site, s),
                    None if r.partial => Verdict::NotProved,
                    None => Verdict::Unreachable,
                });
            }
            let v = if verdicts.contains(&Verdict::NotProved) {
                Verdict::NotProved
            } else if verdicts.contains(&Verdict::Discharged) {
                Verdict::Discharged
            } else if r.partial && verdicts.is_empty() {
                Verdict::NotProved
            } else {
                Verdict::Unreachable
            };
            (site, v)
        })
        .collect();
    CheckReport::from_sites(out)
}

pub fn check_any(r: &AnyResult, p: &Program, pt: &PointsTo) -> CheckReport {
    match r {
        AnyResult::Int(r) => check_program(r, p, pt),
        AnyResult::Pol(r) => check_program(r, p, pt),
    }
}
