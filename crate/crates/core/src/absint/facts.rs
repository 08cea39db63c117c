//! Per-program facts the engine needs before it starts: which heap
//! locations each node may touch, which objects may exist when a node is
//! entered, and the dimensions each node uses.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::graph::{DiGraph, NodeIndex};

use crate::config::{AnalysisConfig, Ao, Ha};
use crate::ir::{walk, Expr, MethodRef, Name, Program, Site, Stmt, StmtId, StmtKind, Type, ARRAY_CLASS, LENGTH, STRING_CLASS};
use crate::numdom::{Dimension, Frame};
use crate::pointsto::{AbsName, CallGraph, Node, PointsTo};

/// Field holding an array's length in the heap model.
pub const LEN: &str = "len";
/// Field summarizing an array's elements in the heap model.
pub const CONTENTS: &str = "contents";

/// Heap-model name of a source field.
pub fn model_field(f: &str) -> &str {
    if f == LENGTH {
        LEN
    } else {
        f
    }
}

pub type Loc = (AbsName, Name);

pub struct Facts<'a> {
    pub p: &'a Program,
    pub cfg: AnalysisConfig,
    pub pt: &'a PointsTo,
    pub cg: &'a CallGraph,
    pub ids: BTreeMap<Node, Frame>,
    /// Heap locations each node or its callees may touch.
    pub reach: BTreeMap<Node, BTreeSet<Loc>>,
    /// Objects that may already exist when the node is entered; `None`
    /// when any object may.
    pub pre: BTreeMap<Node, Option<BTreeSet<AbsName>>>,
    /// Nodes analyzed bottom-up.
    pub bu: BTreeSet<Node>,
    /// Call statements inside loops, per method.
    in_loop: BTreeSet<(MethodRef, StmtId)>,
}

fn stmts(p: &Program, m: &MethodRef) -> Vec<Stmt> {
    let mut out = Vec::new();
    if let Some(d) = p.method(m) {
        walk(&d.body, &mut |s| out.push(s.clone()));
    }
    out
}

fn var(e: &Expr) -> &Name {
    e.as_var().expect("normalized programs access the heap through variables")
}

/// Whether `o` has a numeric model field `f`.
pub fn has_num_field(p: &Program, o: &AbsName, f: &str) -> bool {
    if o.is_array() {
        return f == LEN || f == CONTENTS;
    }
    if &*o.class() == STRING_CLASS {
        return f == LEN;
    }
    p.field_type(&o.class(), f) == Some(Type::Int)
}

/// Numeric model fields of a freshly allocated object of `class`.
pub fn alloc_fields(p: &Program, class: &str) -> Vec<Name> {
    match class {
        ARRAY_CLASS => vec![LEN.into(), CONTENTS.into()],
        STRING_CLASS => vec![LEN.into()],
        _ => p.all_fields(class).into_iter().filter(|f| f.ty == Type::Int).map(|f| f.name).collect(),
    }
}

/// Whether field `f` read through variable `x` in `m` is numeric.
pub fn numeric_access(p: &Program, m: &MethodRef, x: &str, f: &str) -> bool {
    match p.var_type(m, x) {
        Some(Type::IntArray) | Some(Type::Str) => f == LENGTH,
        Some(Type::Class(c)) => p.field_type(&c, f) == Some(Type::Int),
        _ => false,
    }
}

/// Variables a method body may assign.
pub fn assigned_vars(p: &Program, m: &MethodRef) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    for s in stmts(p, m) {
        match &s.kind {
            StmtKind::Assign { lhs, .. }
            | StmtKind::Alloc { lhs, .. }
            | StmtKind::AllocArray { lhs, .. }
            | StmtKind::StrLit { lhs, .. }
            | StmtKind::FieldRead { lhs, .. }
            | StmtKind::ArrayRead { lhs, .. }
            | StmtKind::Call { lhs: Some(lhs), .. } => {
                out.insert(lhs.clone());
            }
            _ => {}
        }
    }
    out
}

impl<'a> Facts<'a> {
    pub fn new(p: &'a Program, cfg: AnalysisConfig, pt: &'a PointsTo, cg: &'a CallGraph) -> Self {
        let ids = cg.nodes.iter().enumerate().map(|(i, n)| (n.clone(), i as Frame)).collect();
        let mut in_loop = BTreeSet::new();
        for (r, m) in p.methods() {
            fn mark(body: &[Stmt], inside: bool, r: &MethodRef, out: &mut BTreeSet<(MethodRef, StmtId)>) {
                for s in body {
                    if inside {
                        out.insert((r.clone(), s.id));
                    }
                    match &s.kind {
                        StmtKind::If { then_body, else_body, .. } => {
                            mark(then_body, inside, r, out);
                            mark(else_body, inside, r, out);
                        }
                        StmtKind::While { body, .. } => mark(body, true, r, out),
                        _ => {}
                    }
                }
            }
            mark(&m.body, false, &r, &mut in_loop);
        }
        let mut f = Facts { p, cfg, pt, cg, ids, reach: BTreeMap::new(), pre: BTreeMap::new(), bu: BTreeSet::new(), in_loop };
        f.compute_reach();
        f.compute_pre();
        f.bu = match cfg.ao {
            Ao::Td => BTreeSet::new(),
            Ao::Bu => cg.nodes.clone(),
            Ao::TdBu => {
                let roots = cg.nodes.iter().filter(|n| p.is_library(&n.method)).cloned().collect();
                f.closure(roots)
            }
        };
        f
    }

    pub fn entry_name(&self) -> AbsName {
        AbsName::of(self.cfg.or, Site::Entry, crate::ir::ENTRY_CLASS)
    }

    fn name_of(&self, site: StmtId, class: &str) -> AbsName {
        AbsName::of(self.cfg.or, Site::Stmt(site), class)
    }

    /// Objects `x` may point to in `n` that have numeric field `f`.
    pub fn objs(&self, n: &Node, x: &str, f: &str) -> Vec<AbsName> {
        self.pt.var(n, x).iter().filter(|o| has_num_field(self.p, o, f)).cloned().collect()
    }

    fn touched(&self, n: &Node) -> BTreeSet<Loc> {
        let mut out = BTreeSet::new();
        let mut add = |objs: Vec<AbsName>, f: &str| {
            for o in objs {
                out.insert((o, Name::from(f)));
            }
        };
        for s in stmts(self.p, &n.method) {
            match &s.kind {
                StmtKind::FieldRead { obj, field, .. } | StmtKind::FieldWrite { obj, field, .. } => {
                    let f = model_field(field);
                    add(self.objs(n, var(obj), f), f);
                }
                StmtKind::ArrayRead { arr, .. } | StmtKind::ArrayWrite { arr, .. } => {
                    add(self.objs(n, var(arr), CONTENTS), CONTENTS);
                    add(self.objs(n, var(arr), LEN), LEN);
                }
                StmtKind::Alloc { class, .. } => {
                    for f in alloc_fields(self.p, class) {
                        add(vec![self.name_of(s.id, class)], &f);
                    }
                }
                StmtKind::AllocArray { .. } => {
                    add(vec![self.name_of(s.id, ARRAY_CLASS)], LEN);
                    add(vec![self.name_of(s.id, ARRAY_CLASS)], CONTENTS);
                }
                StmtKind::StrLit { .. } => add(vec![self.name_of(s.id, STRING_CLASS)], LEN),
                _ => {}
            }
        }
        if *n == self.cg.entry {
            for f in alloc_fields(self.p, crate::ir::ENTRY_CLASS) {
                add(vec![self.entry_name()], &f);
            }
        }
        out
    }

    fn compute_reach(&mut self) {
        let mut reach: BTreeMap<Node, BTreeSet<Loc>> = self.cg.nodes.iter().map(|n| (n.clone(), self.touched(n))).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for n in &self.cg.nodes {
                let extra: Vec<Loc> = self.cg.callees(n).flat_map(|c| reach[c].iter().cloned()).collect();
                let mine = reach.get_mut(n).unwrap();
                for l in extra {
                    changed |= mine.insert(l);
                }
            }
        }
        self.reach = reach;
    }

    /// Nodes reachable from `roots` in the call graph, roots included.
    pub fn closure(&self, roots: BTreeSet<Node>) -> BTreeSet<Node> {
        let mut seen = roots.clone();
        let mut work: Vec<Node> = roots.into_iter().collect();
        while let Some(n) = work.pop() {
            for c in self.cg.callees(&n) {
                if seen.insert(c.clone()) {
                    work.push(c.clone());
                }
            }
        }
        seen
    }

    fn allocated(&self, n: &Node) -> BTreeSet<AbsName> {
        let mut out = BTreeSet::new();
        for s in stmts(self.p, &n.method) {
            match &s.kind {
                StmtKind::Alloc { class, .. } => out.insert(self.name_of(s.id, class)),
                StmtKind::AllocArray { .. } => out.insert(self.name_of(s.id, ARRAY_CLASS)),
                StmtKind::StrLit { .. } => out.insert(self.name_of(s.id, STRING_CLASS)),
                _ => false,
            };
        }
        out
    }

    /// Nodes whose activations run at most once per execution.
    fn single_activation(&self) -> BTreeSet<Node> {
        let mut incoming: BTreeMap<&Node, Vec<(&Node, StmtId)>> = BTreeMap::new();
        for ((caller, site), ts) in &self.cg.edges {
            for t in ts {
                incoming.entry(t).or_default().push((caller, *site));
            }
        }
        let mut g = DiGraph::<(), ()>::new();
        let idx: BTreeMap<&Node, NodeIndex> = self.cg.nodes.iter().map(|n| (n, g.add_node(()))).collect();
        for ((caller, _), ts) in &self.cg.edges {
            for t in ts {
                g.add_edge(idx[caller], idx[t], ());
            }
        }
        let mut cyclic = BTreeSet::new();
        for scc in petgraph::algo::tarjan_scc(&g) {
            if scc.len() > 1 || g.contains_edge(scc[0], scc[0]) {
                cyclic.extend(scc);
            }
        }
        let mut single = BTreeSet::from([self.cg.entry.clone()]);
        let mut changed = true;
        while changed {
            changed = false;
            for n in &self.cg.nodes {
                if single.contains(n) || cyclic.contains(&idx[n]) {
                    continue;
                }
                let ok = match incoming.get(n).map(Vec::as_slice) {
                    Some([(c, site)]) => single.contains(*c) && !self.in_loop.contains(&(c.method.clone(), *site)),
                    _ => false,
                };
                if ok {
                    single.insert(n.clone());
                    changed = true;
                }
            }
        }
        single
    }

    fn compute_pre(&mut self) {
        let single = self.single_activation();
        for n in &self.cg.nodes {
            let pre = if *n == self.cg.entry {
                // Entry-object fields are written before the first statement.
                Some(BTreeSet::new())
            } else if single.contains(n) {
                let mut seen = BTreeSet::from([self.cg.entry.clone()]);
                let mut work = vec![self.cg.entry.clone()];
                while let Some(m) = work.pop() {
                    for c in self.cg.callees(&m) {
                        if c != n && seen.insert(c.clone()) {
                            work.push(c.clone());
                        }
                    }
                }
                let mut names = BTreeSet::from([self.entry_name()]);
                for m in &seen {
                    names.extend(self.allocated(m));
                }
                Some(names)
            } else {
                None
            };
            self.pre.insert(n.clone(), pre);
        }
    }

    /// Whether an object named `o` may exist when `n` is entered.
    pub fn may_pre_exist(&self, n: &Node, o: &AbsName) -> bool {
        self.pre.get(n).and_then(|p| p.as_ref()).is_none_or(|s| s.contains(o))
    }

    pub fn id(&self, n: &Node) -> Frame {
        self.ids[n]
    }

    pub fn summary_dim(&self, o: &AbsName, f: &str, frame: Option<Frame>) -> Dimension {
        Dimension::SummaryObject { obj: o.to_string().into(), field: f.into(), frame }
    }

    pub fn uses_ap(&self) -> bool {
        self.cfg.ha != Ha::So
    }

    pub fn uses_so(&self) -> bool {
        self.cfg.ha != Ha::Ap
    }
}

/// The dimensions a node's states range over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub node: Node,
    pub id: Frame,
    /// Heap dimensions carry this node's frame (bottom-up analysis).
    pub framed: bool,
    pub locals: BTreeSet<Dimension>,
    pub aps: BTreeSet<Dimension>,
    pub summaries: BTreeSet<Dimension>,
    pub initial: BTreeSet<Dimension>,
    pub ret: Dimension,
    /// Entry values of numeric parameters, by position (framed plans only).
    pub formals: Vec<Option<Dimension>>,
    /// Caller-side initial paths created when instantiating callee
    /// summaries: (call site, callee, callee initial path) to own path.
    pub caller_initial: BTreeMap<(StmtId, Node, Dimension), Dimension>,
}

impl Plan {
    pub fn frame(&self) -> Option<Frame> {
        self.framed.then_some(self.id)
    }

    pub fn dims(&self) -> BTreeSet<Dimension> {
        let mut d: BTreeSet<Dimension> = self.locals.iter().chain(&self.aps).chain(&self.summaries).chain(&self.initial).cloned().collect();
        d.extend(self.formals.iter().flatten().cloned());
        d.extend(self.caller_initial.values().cloned());
        d.insert(self.ret.clone());
        d
    }
}

/// Dimensions of `n` before any caller-side initial paths are added.
pub fn preallocate_dims(f: &Facts, n: &Node) -> Plan {
    let p = f.p;
    let def = p.method(&n.method).expect("node method exists");
    let id = f.id(n);
    let framed = f.bu.contains(n);
    let frame = framed.then_some(id);
    let locals = def.params.iter().chain(&def.locals).filter(|v| v.ty == Type::Int).map(|v| Dimension::Local(v.name.clone())).collect();
    let mut aps = BTreeSet::new();
    let mut initial = BTreeSet::new();
    for s in stmts(p, &n.method) {
        let (x, field, read) = match &s.kind {
            StmtKind::FieldRead { obj, field, .. } => (var(obj), model_field(field), true),
            StmtKind::FieldWrite { obj, field, .. } => (var(obj), model_field(field), false),
            StmtKind::ArrayRead { arr, .. } => (var(arr), CONTENTS, true),
            StmtKind::ArrayWrite { arr, .. } => (var(arr), CONTENTS, false),
            _ => continue,
        };
        let numeric = field == CONTENTS || numeric_access(p, &n.method, x, if field == LEN { LENGTH } else { field });
        if !numeric {
            continue;
        }
        if f.uses_ap() {
            aps.insert(Dimension::path(x, field));
            if field == CONTENTS {
                aps.insert(Dimension::path(x, LEN));
            }
        }
        if framed && read && f.uses_so() {
            for o in f.objs(n, x, field) {
                if f.may_pre_exist(n, &o) {
                    initial.insert(Dimension::InitialPath { obj: o.to_string().into(), field: field.into(), index: s.id, frame });
                }
            }
        }
    }
    let summaries = if f.uses_so() { f.reach[n].iter().map(|(o, fl)| f.summary_dim(o, fl, frame)).collect() } else { BTreeSet::new() };
    let formals = def
        .params
        .iter()
        .enumerate()
        .map(|(k, v)| (framed && v.ty == Type::Int).then(|| Dimension::Formal(id, k as u32)))
        .collect();
    Plan { node: n.clone(), id, framed, locals, aps, summaries, initial, ret: Dimension::Ret(id), formals, caller_initial: BTreeMap::new() }
}

/// Adds, for every call, the caller paths `v.f` that feed a callee path
/// `q.f` when `v` is passed as `q`, so callee results can map back.
pub fn add_argument_paths(f: &Facts, plans: &mut BTreeMap<Node, Plan>) {
    if !f.uses_ap() {
        return;
    }
    let mut changed = true;
    while changed {
        changed = false;
        for n in &f.cg.nodes {
            let mut extra = Vec::new();
            for s in stmts(f.p, &n.method) {
                let StmtKind::Call { recv, args, .. } = &s.kind else { continue };
                for t in crate::pointsto::resolve_targets(f.cg, n, s.id) {
                    let def = f.p.method(&t.method).unwrap();
                    let mut roots: Vec<(Name, &Expr)> = vec![("this".into(), recv)];
                    roots.extend(def.params.iter().zip(args).filter(|(q, _)| q.ty.is_ref()).map(|(q, a)| (q.name.clone(), a)));
                    for (q, a) in roots {
                        let Some(v) = a.as_var() else { continue };
                        for d in &plans[&t].aps {
                            if let Dimension::AccessPath(r, fl) = d {
                                if *r == q {
                                    extra.push(Dimension::AccessPath(v.clone(), fl.clone()));
                                }
                            }
                        }
                    }
                }
            }
            let plan = plans.get_mut(n).unwrap();
            for d in extra {
                changed |= plan.aps.insert(d);
            }
        }
    }
}
