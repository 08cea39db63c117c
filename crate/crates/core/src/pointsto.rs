//! Flow-insensitive subset-based points-to analysis with an on-the-fly call graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use thiserror::Error;

use crate::config::{Cs, Or};
use crate::ir::{walk, Expr, MethodRef, Name, Program, Site, StmtId, StmtKind, Type, ARRAY_CLASS, STRING_CLASS};

/// Abstract heap object.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AbsName {
    Alloc { site: Site, class: Name },
    Class(Name),
    SmushedString,
}

impl AbsName {
    /// Name given to an object allocated at `site` under representation `or`.
    pub fn of(or: Or, site: Site, class: &str) -> AbsName {
        match or {
            Or::Clas => AbsName::Class(class.into()),
            Or::Smus if class == STRING_CLASS => AbsName::SmushedString,
            _ => AbsName::Alloc { site, class: class.into() },
        }
    }

    pub fn class(&self) -> Name {
        match self {
            AbsName::Alloc { class, .. } | AbsName::Class(class) => class.clone(),
            AbsName::SmushedString => STRING_CLASS.into(),
        }
    }

    pub fn is_array(&self) -> bool {
        &*self.class() == ARRAY_CLASS
    }

    /// Whether this name stands for arrays or strings.
    pub fn is_sequence(&self) -> bool {
        self.is_array() || &*self.class() == STRING_CLASS
    }
}

impl fmt::Display for AbsName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbsName::Alloc { site: Site::Entry, class } => write!(f, "{class}@entry"),
            AbsName::Alloc { site: Site::Stmt(s), class } => write!(f, "{class}@{s}"),
            AbsName::Class(c) => write!(f, "{c}"),
            AbsName::SmushedString => write!(f, "String*"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Context {
    Empty,
    CallSite(StmtId),
    ReceiverType(Name),
}

impl Context {
    /// Context of a callee invoked at `site` on a receiver of class `recv`.
    pub fn for_call(cs: Cs, site: StmtId, recv: &str) -> Context {
        match cs {
            Cs::Ci => Context::Empty,
            Cs::Cfa1 => Context::CallSite(site),
            Cs::Typ1 => Context::ReceiverType(recv.into()),
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Context::Empty => Ok(()),
            Context::CallSite(s) => write!(f, "[cs {s}]"),
            Context::ReceiverType(c) => write!(f, "[ty {c}]"),
        }
    }
}

/// A method in context.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node {
    pub method: MethodRef,
    pub ctx: Context,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.method, self.ctx)
    }
}

/// Pseudo-variable holding a method's returned references.
pub const RET_VAR: &str = "@ret";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PtError {
    #[error("{0} is not an object variable")]
    NumericVariable(String),
}

pub type PtSet = BTreeSet<AbsName>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PointsTo {
    pub vars: BTreeMap<(Node, Name), PtSet>,
    pub fields: BTreeMap<(AbsName, Name), PtSet>,
    obj_vars: BTreeMap<MethodRef, BTreeSet<Name>>,
}

static EMPTY: PtSet = BTreeSet::new();

impl PointsTo {
    pub fn var(&self, n: &Node, x: &str) -> &PtSet {
        self.vars.get(&(n.clone(), Name::from(x))).unwrap_or(&EMPTY)
    }

    pub fn field(&self, o: &AbsName, f: &str) -> &PtSet {
        self.fields.get(&(o.clone(), Name::from(f))).unwrap_or(&EMPTY)
    }

    fn check(&self, n: &Node, x: &str) -> Result<(), PtError> {
        let ok = x == "this" || self.obj_vars.get(&n.method).is_some_and(|s| s.contains(x));
        if ok {
            Ok(())
        } else {
            Err(PtError::NumericVariable(x.into()))
        }
    }

    /// Whether `x` and `z` may refer to the same object in `node`.
    pub fn may_alias(&self, node: &Node, x: &str, z: &str) -> Result<bool, PtError> {
        self.check(node, x)?;
        self.check(node, z)?;
        Ok(!self.var(node, x).is_disjoint(self.var(node, z)))
    }

    /// Every abstract name that occurs anywhere in the map.
    pub fn names(&self) -> PtSet {
        self.vars.values().chain(self.fields.values()).flatten().cloned().collect()
    }
}

pub fn may_alias(pt: &PointsTo, node: &Node, x: &str, z: &str) -> Result<bool, PtError> {
    pt.may_alias(node, x, z)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallGraph {
    pub entry: Node,
    pub nodes: BTreeSet<Node>,
    pub edges: BTreeMap<(Node, StmtId), BTreeSet<Node>>,
}

impl CallGraph {
    pub fn callees(&self, n: &Node) -> impl Iterator<Item = &Node> {
        self.edges.range((n.clone(), 0)..=(n.clone(), StmtId::MAX)).flat_map(|(_, t)| t)
    }

    /// Call statements of `n`'s method that resolved to no target.
    pub fn unresolved(&self, p: &Program, n: &Node) -> Vec<StmtId> {
        let Some(m) = p.method(&n.method) else { return vec![] };
        let mut out = Vec::new();
        walk(&m.body, &mut |s| {
            if matches!(s.kind, StmtKind::Call { .. }) && self.edges.get(&(n.clone(), s.id)).is_none_or(|t| t.is_empty()) {
                out.push(s.id);
            }
        });
        out
    }
}

/// Targets of call statement `site` in `caller`, ordered by method then context.
pub fn resolve_targets(cg: &CallGraph, caller: &Node, site: StmtId) -> Vec<Node> {
    cg.edges.get(&(caller.clone(), site)).map(|t| t.iter().cloned().collect()).unwrap_or_default()
}

struct Solver<'a> {
    p: &'a Program,
    or: Or,
    cs: Cs,
    pt: PointsTo,
    cg: CallGraph,
    changed: bool,
}

impl Solver<'_> {
    fn add_var(&mut self, n: &Node, x: &Name, objs: impl IntoIterator<Item = AbsName>) {
        let set = self.pt.vars.entry((n.clone(), x.clone())).or_default();
        for o in objs {
            self.changed |= set.insert(o);
        }
    }

    fn add_field(&mut self, o: &AbsName, f: &Name, objs: &PtSet) {
        let set = self.pt.fields.entry((o.clone(), f.clone())).or_default();
        for x in objs {
            self.changed |= set.insert(x.clone());
        }
    }

    /// Objects an expression may evaluate to.
    fn eval(&self, n: &Node, e: &Expr) -> PtSet {
        match e {
            Expr::Var(x) => self.pt.var(n, x).clone(),
            Expr::Field(o, f) => self.eval(n, o).iter().flat_map(|b| self.pt.field(b, f).iter().cloned()).collect(),
            _ => PtSet::new(),
        }
    }

    fn is_obj(&self, m: &MethodRef, x: &str) -> bool {
        self.p.var_type(m, x).is_some_and(|t| t.is_ref())
    }

    fn node(&mut self, n: &Node) {
        let p = self.p;
        let def = p.method(&n.method).expect("call graph node has a definition");
        let mut stmts = Vec::new();
        walk(&def.body, &mut |s| stmts.push(s));
        for s in stmts {
            match &s.kind {
                StmtKind::Assign { lhs, rhs } if self.is_obj(&n.method, lhs) => {
                    let v = self.eval(n, rhs);
                    self.add_var(n, lhs, v);
                }
                StmtKind::Alloc { lhs, class } => {
                    self.add_var(n, lhs, [AbsName::of(self.or, Site::Stmt(s.id), class)]);
                }
                StmtKind::AllocArray { lhs, .. } => {
                    self.add_var(n, lhs, [AbsName::of(self.or, Site::Stmt(s.id), ARRAY_CLASS)]);
                }
                StmtKind::StrLit { lhs, .. } => {
                    self.add_var(n, lhs, [AbsName::of(self.or, Site::Stmt(s.id), STRING_CLASS)]);
                }
                StmtKind::FieldRead { lhs, obj, field } if self.is_obj(&n.method, lhs) => {
                    let v = self.eval(n, &Expr::Field(Box::new(obj.clone()), field.clone()));
                    self.add_var(n, lhs, v);
                }
                StmtKind::FieldWrite { obj, field, value } => {
                    let v = self.eval(n, value);
                    if !v.is_empty() {
                        for o in self.eval(n, obj) {
                            self.add_field(&o, field, &v);
                        }
                    }
                }
                StmtKind::Call { lhs, recv, method, args } => self.call(n, s.id, lhs.as_ref(), recv, method, args),
                _ => {}
            }
        }
        let r = self.eval(n, &def.ret);
        self.add_var(n, &RET_VAR.into(), r);
    }

    fn call(&mut self, n: &Node, site: StmtId, lhs: Option<&Name>, recv: &Expr, method: &str, args: &[Expr]) {
        for o in self.eval(n, recv) {
            let class = o.class();
            let Some(target) = self.p.dispatch(&class, method) else { continue };
            let callee = Node { method: target.clone(), ctx: Context::for_call(self.cs, site, &class) };
            let set = self.cg.edges.entry((n.clone(), site)).or_default();
            self.changed |= set.insert(callee.clone());
            self.changed |= self.cg.nodes.insert(callee.clone());
            self.add_var(&callee, &"this".into(), [o.clone()]);
            let def = self.p.method(&target).unwrap();
            for (a, f) in args.iter().zip(&def.params) {
                if f.ty.is_ref() {
                    let v = self.eval(n, a);
                    self.add_var(&callee, &f.name, v);
                }
            }
            if let Some(x) = lhs {
                if def.ret_ty.is_ref() {
                    let v = self.pt.var(&callee, RET_VAR).clone();
                    self.add_var(n, x, v);
                }
            }
        }
    }
}

/// Least solution of the subset constraints reachable from the entry method.
pub fn compute_points_to(p: &Program, or: Or, cs: Cs) -> (PointsTo, CallGraph) {
    let entry = Node { method: p.entry(), ctx: Context::Empty };
    let mut obj_vars: BTreeMap<MethodRef, BTreeSet<Name>> = BTreeMap::new();
    for (r, m) in p.methods() {
        let set = obj_vars.entry(r).or_default();
        for v in m.params.iter().chain(&m.locals) {
            if !matches!(v.ty, Type::Int) {
                set.insert(v.name.clone());
            }
        }
    }
    let mut s = Solver {
        p,
        or,
        cs,
        pt: PointsTo { obj_vars, ..Default::default() },
        cg: CallGraph { entry: entry.clone(), nodes: BTreeSet::from([entry.clone()]), edges: BTreeMap::new() },
        changed: true,
    };
    s.add_var(&entry, &"this".into(), [AbsName::of(or, Site::Entry, crate::ir::ENTRY_CLASS)]);
    while s.changed {
        s.changed = false;
        let nodes: Vec<Node> = s.cg.nodes.iter().cloned().collect();
        for n in &nodes {
            s.node(n);
        }
    }
    (s.pt, s.cg)
}

/// Sorted text listing of the points-to map and call-graph edges.
pub fn dump(pt: &PointsTo, cg: &CallGraph) -> String {
    let set = |s: &PtSet| s.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(", ");
    let mut out = String::new();
    for ((n, x), s) in &pt.vars {
        if !s.is_empty() {
            writeln!(out, "pt {n}::{x} = {{{}}}", set(s)).unwrap();
        }
    }
    for ((o, f), s) in &pt.fields {
        if !s.is_empty() {
            writeln!(out, "pt {o}.{f} = {{{}}}", set(s)).unwrap();
        }
    }
    for ((n, site), ts) in &cg.edges {
        for t in ts {
            writeln!(out, "call {n} @{site} -> {t}").unwrap();
        }
    }
    out
}
