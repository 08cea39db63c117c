//! The interpreter proper: statement transfers, top-down calls with
//! memoized callee analyses, bottom-up summaries and their instantiation.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use petgraph::graph::{DiGraph, NodeIndex};

use super::facts::{add_argument_paths, alloc_fields, assigned_vars, model_field, numeric_access, preallocate_dims, Facts, Plan, CONTENTS, LEN};
use super::state::{AbsState, Domain, Expr as NExpr};
use super::{AnalysisResult, Budget, Options, Summary};
use crate::ir::{walk, BinOp, Cond, Expr, MethodRef, Name, Site, Stmt, StmtId, StmtKind, Type, ARRAY_CLASS, ENTRY_CLASS, STRING_CLASS};
use crate::numdom::{DomainError, Dimension, Guard, NumExpr};
use crate::pointsto::{resolve_targets, AbsName, Node};

pub(super) enum Stop {
    Timeout,
    Domain(DomainError),
}

impl From<DomainError> for Stop {
    fn from(e: DomainError) -> Self {
        Stop::Domain(e)
    }
}

type R<T> = Result<T, Stop>;

const SCRATCH: u32 = 0;

fn num(e: &Expr) -> NExpr {
    match e {
        Expr::Var(x) => NumExpr::dim(Dimension::Local(x.clone())),
        Expr::Int(v) => NumExpr::int(*v),
        Expr::Bin(op, a, b) => {
            let (a, b) = (num(a), num(b));
            match op {
                BinOp::Add => a.add(b),
                BinOp::Sub => a.sub(b),
                BinOp::Mul => a.mul(b),
            }
        }
        Expr::Field(..) | Expr::Index(..) => unreachable!("heap access in a normalized expression"),
    }
}

fn guard(c: &Cond) -> Guard<Dimension, crate::Int> {
    Guard::new(num(&c.lhs), c.op, num(&c.rhs))
}

fn var(e: &Expr) -> &Name {
    e.as_var().expect("normalized programs access the heap through variables")
}

fn root(d: &Dimension) -> Option<(&Name, &Name)> {
    match d {
        Dimension::AccessPath(x, f) => Some((x, f)),
        _ => None,
    }
}

fn establish<D: Domain>(s: &mut AbsState<D>, d: &Dimension) {
    if !s.is_bottom() {
        s.established.insert(d.clone());
    }
}

fn join_all<D: Domain>(parts: Vec<AbsState<D>>) -> R<Option<AbsState<D>>> {
    let mut acc: Option<AbsState<D>> = None;
    for p in parts {
        acc = Some(match acc {
            None => p,
            Some(a) => a.join(&p)?,
        });
    }
    Ok(acc)
}

/// Adds to `s` a copy of every constraint on `src`, stated for `dst`.
fn copy_constraints<D: Domain>(s: &AbsState<D>, src: &Dimension, dst: &Dimension) -> R<AbsState<D>> {
    let rows: Vec<_> = s.num.constraints().into_iter().filter(|c| c.mentions(src)).map(|c| c.map_dims(|d| if d == src { dst.clone() } else { d.clone() })).collect();
    Ok(s.add(&rows)?)
}

pub(super) struct Engine<'a, D: Domain> {
    pub f: Facts<'a>,
    opts: Options,
    budget: Budget,
    pub plans: BTreeMap<Node, Rc<Plan>>,
    assigned: BTreeMap<MethodRef, BTreeSet<Name>>,
    pub names: BTreeMap<Name, AbsName>,
    pub summaries: BTreeMap<Node, Summary<D>>,
    pub states: BTreeMap<(Node, StmtId), AbsState<D>>,
    pub exits: BTreeMap<Node, AbsState<D>>,
    pub warnings: BTreeSet<String>,
    pub iterations: u64,
    pub max_dims: usize,
    stack: Vec<Node>,
    memo: BTreeMap<Node, Vec<(AbsState<D>, AbsState<D>)>>,
    rec_entry: BTreeMap<Node, AbsState<D>>,
    next_index: u32,
    ticks: u64,
}

impl<'a, D: Domain> Engine<'a, D> {
    pub fn new(f: Facts<'a>, opts: Options, budget: Budget) -> Self {
        let mut names = BTreeMap::new();
        for o in f.pt.names().into_iter().chain([f.entry_name()]) {
            names.insert(Name::from(o.to_string()), o);
        }
        for locs in f.reach.values() {
            for (o, _) in locs {
                names.insert(Name::from(o.to_string()), o.clone());
            }
        }
        let next_index = f.p.stmt_index().keys().next_back().map_or(0, |m| m + 1);
        let mut plans: BTreeMap<Node, Plan> = f.cg.nodes.iter().map(|n| (n.clone(), preallocate_dims(&f, n))).collect();
        add_argument_paths(&f, &mut plans);
        let plans = plans.into_iter().map(|(n, p)| (n, Rc::new(p))).collect();
        Engine {
            f,
            opts,
            budget,
            plans,
            assigned: BTreeMap::new(),
            names,
            summaries: BTreeMap::new(),
            states: BTreeMap::new(),
            exits: BTreeMap::new(),
            warnings: BTreeSet::new(),
            iterations: 0,
            max_dims: 0,
            stack: Vec::new(),
            memo: BTreeMap::new(),
            rec_entry: BTreeMap::new(),
            next_index,
            ticks: 0,
        }
    }

    pub fn into_result(self, partial: bool) -> AnalysisResult<D> {
        AnalysisResult {
            config: self.f.cfg,
            entry: self.f.cg.entry.clone(),
            states: self.states,
            exits: self.exits,
            plans: self.plans.into_iter().map(|(n, p)| (n, (*p).clone())).collect(),
            summaries: self.summaries,
            names: self.names,
            pre: self.f.pre,
            bu_nodes: self.f.bu,
            warnings: self.warnings.into_iter().collect(),
            iterations: self.iterations,
            max_dims: self.max_dims,
            partial,
        }
    }

    fn tick(&mut self) -> R<()> {
        self.ticks += 1;
        if self.budget.expired() {
            return Err(Stop::Timeout);
        }
        Ok(())
    }

    fn record(&mut self, n: &Node, id: StmtId, s: &AbsState<D>) -> R<()> {
        self.max_dims = self.max_dims.max(s.dims().len());
        let key = (n.clone(), id);
        let v = match self.states.get(&key) {
            Some(old) => old.join(s)?,
            None => s.clone(),
        };
        self.states.insert(key, v);
        Ok(())
    }

    fn is_int(&self, m: &MethodRef, x: &str) -> bool {
        self.f.p.var_type(m, x) == Some(Type::Int)
    }

    fn assigned(&mut self, m: &MethodRef) -> &BTreeSet<Name> {
        let p = self.f.p;
        self.assigned.entry(m.clone()).or_insert_with(|| assigned_vars(p, m))
    }

    fn warn(&mut self, msg: String) {
        self.warnings.insert(msg);
    }

    /// Forgets every tracked path rooted at `x`.
    fn invalidate_root(&self, plan: &Plan, s: AbsState<D>, x: &str) -> R<AbsState<D>> {
        let mut s = s;
        for d in &plan.aps {
            if root(d).is_some_and(|(r, _)| &**r == x) {
                s = s.invalidate(d)?;
            }
        }
        Ok(s)
    }

    fn top_state(&self, plan: &Plan) -> AbsState<D> {
        let mut s = AbsState::top(plan.dims());
        s.present = plan.summaries.clone();
        s
    }

    fn entry_state(&self, plan: &Plan) -> R<AbsState<D>> {
        let mut s = AbsState::top(plan.dims());
        for (k, fd) in plan.formals.iter().enumerate() {
            if let Some(fd) = fd {
                let prm = &self.f.p.method(&plan.node.method).unwrap().params[k];
                s = s.equate(fd, &Dimension::Local(prm.name.clone()))?;
            }
        }
        if plan.node == self.f.cg.entry {
            let o = self.f.entry_name();
            for fl in alloc_fields(self.f.p, ENTRY_CLASS) {
                let so = self.f.summary_dim(&o, &fl, plan.frame());
                if plan.summaries.contains(&so) {
                    s = s.write_summary(&so, &NumExpr::int(0))?;
                }
                let ap = Dimension::path("this", &fl);
                if plan.aps.contains(&ap) {
                    s = s.assign(&ap, &NumExpr::int(0))?;
                    establish(&mut s, &ap);
                }
            }
        }
        Ok(s)
    }

    /// Runs the analysis from the entry node.
    pub fn run(&mut self) -> R<()> {
        let bu: Vec<Node> = self.bu_order();
        let mut g = DiGraph::<Node, ()>::new();
        let idx: BTreeMap<Node, NodeIndex> = bu.iter().map(|n| (n.clone(), g.add_node(n.clone()))).collect();
        for ((caller, _), ts) in &self.f.cg.edges {
            for t in ts {
                if let (Some(&a), Some(&b)) = (idx.get(caller), idx.get(t)) {
                    g.add_edge(a, b, ());
                }
            }
        }
        for scc in petgraph::algo::tarjan_scc(&g) {
            let recursive = scc.len() > 1 || g.contains_edge(scc[0], scc[0]);
            let mut members: Vec<Node> = scc.iter().map(|i| g[*i].clone()).collect();
            members.sort();
            for n in members {
                self.summarize(&n, recursive)?;
            }
        }
        let entry = self.f.cg.entry.clone();
        if !self.f.bu.contains(&entry) {
            let plan = self.plans[&entry].clone();
            let s = self.entry_state(&plan)?;
            self.analyze_td(&entry, s)?;
        }
        Ok(())
    }

    fn bu_order(&self) -> Vec<Node> {
        self.f.bu.iter().cloned().collect()
    }

    // ---- bottom-up ----

    fn summarize(&mut self, n: &Node, recursive: bool) -> R<()> {
        let mut plan = (*self.plans[n]).clone();
        if self.f.uses_so() {
            let p = self.f.p;
            let mut calls = Vec::new();
            walk(&p.method(&n.method).unwrap().body, &mut |s| {
                if matches!(s.kind, StmtKind::Call { .. }) {
                    calls.push(s.id);
                }
            });
            for site in calls {
                for t in resolve_targets(self.f.cg, n, site) {
                    let Some(sum) = self.summaries.get(&t) else { continue };
                    for ip in &sum.initial {
                        let Dimension::InitialPath { obj, field, .. } = ip else { continue };
                        if &**field == CONTENTS || !self.f.may_pre_exist(n, &self.names[obj]) {
                            continue;
                        }
                        let d = Dimension::InitialPath { obj: obj.clone(), field: field.clone(), index: self.next_index, frame: Some(plan.id) };
                        self.next_index += 1;
                        plan.caller_initial.insert((site, t.clone(), ip.clone()), d);
                    }
                }
            }
        }
        let plan = Rc::new(plan);
        self.plans.insert(n.clone(), plan.clone());
        let entry = self.entry_state(&plan)?;
        self.stack.push(n.clone());
        let exit = self.run_node(&plan, entry);
        self.stack.pop();
        let exit = exit?;
        let mut keep: BTreeSet<Dimension> = plan.summaries.iter().chain(&plan.initial).chain(plan.caller_initial.values()).cloned().collect();
        keep.extend(plan.formals.iter().flatten().cloned());
        keep.insert(plan.ret.clone());
        let initial = plan.initial.iter().chain(plan.caller_initial.values()).cloned().collect();
        self.summaries.insert(n.clone(), Summary { state: exit.project_to(&keep), initial, recursive });
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn call_bu(&mut self, cp: &Plan, site: StmtId, s: &AbsState<D>, t: &Node, lhs: Option<&Name>, args: &[Expr]) -> R<AbsState<D>> {
        let Some(sum) = self.summaries.get(t).cloned() else {
            return self.havoc_call(cp, s, t, lhs);
        };
        let tp = self.plans[t].clone();
        let mut c = s.concat(&sum.state)?;
        for (k, fd) in tp.formals.iter().enumerate() {
            if let Some(fd) = fd {
                c = c.assume(&Guard::new(NumExpr::dim(fd.clone()), crate::numdom::CmpOp::Eq, num(&args[k])))?;
            }
        }
        let cframe = cp.frame();
        for ip in &sum.initial {
            let Dimension::InitialPath { obj, field, .. } = ip else { continue };
            let o = self.names[obj].clone();
            let so = self.f.summary_dim(&o, field, cframe);
            let have = cp.summaries.contains(&so) && c.present.contains(&so);
            let pre = cp.framed && self.f.may_pre_exist(&cp.node, &o);
            let cip = cp.caller_initial.get(&(site, t.clone(), ip.clone()));
            if let Some(cip) = cip {
                c = c.forget(cip)?;
            }
            let mut parts = Vec::new();
            if have {
                parts.push(copy_constraints(&c, &so, ip)?);
            }
            if pre {
                parts.push(match cip {
                    Some(cip) => c.equate(ip, cip)?,
                    None => c.clone(),
                });
            }
            if let Some(j) = join_all(parts)? {
                c = j;
            }
        }
        for d in &sum.state.present {
            let Dimension::SummaryObject { obj, field, .. } = d else { continue };
            let so = Dimension::SummaryObject { obj: obj.clone(), field: field.clone(), frame: cframe };
            if cp.summaries.contains(&so) {
                c = c.write_summary_dup(d, &so)?;
            }
        }
        if let Some(x) = lhs.filter(|x| self.is_int(&cp.node.method, x)) {
            c = c.assign(&Dimension::Local(x.clone()), &NumExpr::dim(tp.ret.clone()))?;
        }
        let mut drop: Vec<Dimension> = sum.state.dims().into_iter().collect();
        drop.extend(cp.aps.iter().filter(|d| root(d).is_some_and(|(_, f)| &**f != LEN)).cloned());
        let c = c.project_away(&drop)?.reshape(&cp.dims());
        match lhs {
            Some(x) if !self.is_int(&cp.node.method, x) => self.invalidate_root(cp, c, x),
            _ => Ok(c),
        }
    }

    /// A call whose effect is unknown: the result and everything the callee
    /// may write become arbitrary.
    fn havoc_call(&mut self, cp: &Plan, s: &AbsState<D>, t: &Node, lhs: Option<&Name>) -> R<AbsState<D>> {
        self.warn(format!("recursive call to {t} analyzed without a summary"));
        let mut c = s.clone();
        let reach = &self.f.reach[t];
        for d in &cp.summaries {
            let Dimension::SummaryObject { obj, field, .. } = d else { continue };
            if reach.contains(&(self.names[obj].clone(), field.clone())) {
                c = c.havoc_summary(d)?;
            }
        }
        for d in &cp.aps {
            if root(d).is_some_and(|(_, f)| &**f != LEN) {
                c = c.invalidate(d)?;
            }
        }
        match lhs {
            Some(x) if self.is_int(&cp.node.method, x) => Ok(c.forget(&Dimension::Local(x.clone()))?),
            Some(x) => self.invalidate_root(cp, c, x),
            None => Ok(c),
        }
    }

    // ---- top-down ----

    fn analyze_td(&mut self, t: &Node, entry: AbsState<D>) -> R<AbsState<D>> {
        if self.opts.memo {
            if let Some(list) = self.memo.get(t) {
                for (e, x) in list {
                    if e.sem_eq(&entry)? {
                        return Ok(x.clone());
                    }
                }
            }
        }
        let plan = self.plans[t].clone();
        let mut entry_now = entry.clone();
        let mut rounds = 0;
        let exit = loop {
            self.stack.push(t.clone());
            let r = self.run_node(&plan, entry_now.clone());
            self.stack.pop();
            let exit = r?;
            let Some(extra) = self.rec_entry.remove(t) else { break exit };
            if extra.leq(&entry_now)? {
                break exit;
            }
            rounds += 1;
            let joined = entry_now.join(&extra)?;
            entry_now = if rounds >= self.opts.widen_at { entry_now.widen(&joined)? } else { joined };
        };
        if self.opts.memo {
            let list = self.memo.entry(t.clone()).or_default();
            if list.len() >= self.opts.memo_size {
                list.remove(0);
            }
            list.push((entry, exit.clone()));
        }
        Ok(exit)
    }

    #[allow(clippy::too_many_arguments)]
    fn call_td(&mut self, cp: &Plan, s: &AbsState<D>, t: &Node, lhs: Option<&Name>, recv: &Name, args: &[Expr]) -> R<AbsState<D>> {
        let p = self.f.p;
        let tp = self.plans[t].clone();
        let def = p.method(&t.method).unwrap();
        let mut st = s.clone();
        let mut next = SCRATCH + 1;
        let mut binds: BTreeMap<Dimension, Dimension> = BTreeMap::new();
        let mut roots: Vec<(Name, Name)> = vec![("this".into(), recv.clone())];
        for (k, prm) in def.params.iter().enumerate() {
            if prm.ty == Type::Int {
                let tmp = Dimension::Temp(next);
                next += 1;
                st = st.extend([tmp.clone()]).assign(&tmp, &num(&args[k]))?;
                binds.insert(tmp, Dimension::Local(prm.name.clone()));
            } else if let Some(v) = args[k].as_var() {
                roots.push((prm.name.clone(), v.clone()));
            }
        }
        let mut inlined: Vec<(Dimension, Dimension)> = Vec::new();
        for (q, v) in &roots {
            for ap in tp.aps.iter().filter(|d| root(d).is_some_and(|(r, _)| r == q)) {
                let src = Dimension::AccessPath(v.clone(), root(ap).unwrap().1.clone());
                if !cp.aps.contains(&src) || !s.established.contains(&src) {
                    continue;
                }
                let tmp = Dimension::Temp(next);
                next += 1;
                st = st.extend([tmp.clone()]).assign(&tmp, &NumExpr::dim(src.clone()))?;
                binds.insert(tmp, ap.clone());
                inlined.push((src, ap.clone()));
            }
        }
        let mut keep: BTreeSet<Dimension> = binds.keys().cloned().collect();
        keep.extend(tp.summaries.iter().filter(|d| st.num.has_dim(d)).cloned());
        let mut callee_in = st.project_to(&keep).rename(&binds)?;
        for (_, ap) in &inlined {
            establish(&mut callee_in, ap);
        }
        let callee_in = callee_in.reshape(&tp.dims());

        let exit = if self.stack.contains(t) {
            self.warn(format!("recursive call to {t} analyzed without its effects"));
            let v = match self.rec_entry.get(t) {
                Some(old) => old.join(&callee_in)?,
                None => callee_in,
            };
            self.rec_entry.insert(t.clone(), v);
            self.top_state(&tp)
        } else {
            self.analyze_td(t, callee_in)?
        };

        let assigned = self.assigned(&t.method).clone();
        let mut back: BTreeMap<Dimension, Dimension> = BTreeMap::new();
        for (src, ap) in &inlined {
            let (q, _) = root(ap).unwrap();
            if assigned.contains(q) || !exit.established.contains(ap) || back.values().any(|v| v == src) {
                continue;
            }
            back.insert(ap.clone(), src.clone());
        }
        let ret_tmp = Dimension::Temp(SCRATCH);
        let mut keep_out: BTreeSet<Dimension> = tp.summaries.clone();
        keep_out.extend(back.keys().cloned());
        keep_out.insert(tp.ret.clone());
        let mut ren = back.clone();
        ren.insert(tp.ret.clone(), ret_tmp.clone());
        let out = exit.project_to(&keep_out).rename(&ren)?;

        let mut drop: Vec<Dimension> = cp.summaries.intersection(&tp.summaries).cloned().collect();
        drop.extend(cp.aps.iter().filter(|d| root(d).is_some_and(|(_, f)| &**f != LEN) || back.values().any(|v| v == *d)).cloned());
        let lhs_int = lhs.filter(|x| self.is_int(&cp.node.method, x));
        if let Some(x) = lhs_int {
            drop.push(Dimension::Local(x.clone()));
        }
        let mut c = s.project_away(&drop)?.concat(&out)?;
        if let Some(x) = lhs_int {
            let d = Dimension::Local(x.clone());
            c = c.extend([d.clone()]).assign(&d, &NumExpr::dim(ret_tmp.clone()))?;
        }
        let c = c.reshape(&cp.dims());
        match lhs {
            Some(x) if lhs_int.is_none() => self.invalidate_root(cp, c, x),
            _ => Ok(c),
        }
    }

    fn call(&mut self, plan: &Plan, id: StmtId, s: AbsState<D>, lhs: Option<&Name>, recv: &Name, args: &[Expr]) -> R<AbsState<D>> {
        let targets = resolve_targets(self.f.cg, &plan.node, id);
        if s.is_bottom() {
            return Ok(s);
        }
        if targets.is_empty() {
            self.warn(format!("unresolved call at statement {id} in {}", plan.node));
            let mut s = s;
            for d in &plan.summaries {
                s = s.havoc_summary(d)?;
            }
            for d in &plan.aps {
                if root(d).is_some_and(|(_, f)| &**f != LEN) {
                    s = s.invalidate(d)?;
                }
            }
            return match lhs {
                Some(x) if self.is_int(&plan.node.method, x) => Ok(s.forget(&Dimension::Local(x.clone()))?),
                Some(x) => self.invalidate_root(plan, s, x),
                None => Ok(s),
            };
        }
        let mut parts = Vec::new();
        for t in &targets {
            let out = if self.f.bu.contains(t) {
                self.call_bu(plan, id, &s, t, lhs, args)?
            } else {
                self.call_td(plan, &s, t, lhs, recv, args)?
            };
            parts.push(out);
        }
        Ok(join_all(parts)?.expect("at least one target"))
    }

    // ---- statements ----

    fn run_node(&mut self, plan: &Plan, entry: AbsState<D>) -> R<AbsState<D>> {
        let p = self.f.p;
        let def = p.method(&plan.node.method).unwrap();
        let s = self.exec_block(plan, &def.body, entry)?;
        let s = if def.ret_ty == Type::Int { s.assign(&plan.ret, &num(&def.ret))? } else { s };
        let v = match self.exits.get(&plan.node) {
            Some(old) => old.join(&s)?,
            None => s.clone(),
        };
        self.exits.insert(plan.node.clone(), v);
        Ok(s)
    }

    fn exec_block(&mut self, plan: &Plan, body: &[Stmt], mut s: AbsState<D>) -> R<AbsState<D>> {
        for st in body {
            s = self.exec(plan, st, s)?;
        }
        Ok(s)
    }

    /// Values of `target` read from field `f` of the objects `x` may point
    /// to; `target` is assumed unconstrained in `s`.
    fn load(&self, plan: &Plan, s: AbsState<D>, id: StmtId, x: &str, f: &str, target: &Dimension) -> R<AbsState<D>> {
        let objs = self.f.objs(&plan.node, x, f);
        let mut base = s;
        let ips: Vec<Dimension> = objs
            .iter()
            .map(|o| Dimension::InitialPath { obj: o.to_string().into(), field: f.into(), index: id, frame: plan.frame() })
            .filter(|d| plan.initial.contains(d))
            .collect();
        for ip in &ips {
            base = base.forget(ip)?;
        }
        let mut parts = Vec::new();
        for o in &objs {
            let so = self.f.summary_dim(o, f, plan.frame());
            if plan.summaries.contains(&so) && base.present.contains(&so) {
                parts.push(base.dup(&so, target)?);
            }
        }
        for ip in ips {
            parts.push(if f == CONTENTS { base.dup(&ip, target)? } else { base.assign(target, &NumExpr::dim(ip))? });
        }
        Ok(join_all(parts)?.unwrap_or(base))
    }

    /// After a successful access: `0 <= i` and, when the length is tracked,
    /// `i < a.len`.
    fn refine_index(&self, s: AbsState<D>, a: &str, i: &NExpr) -> R<AbsState<D>> {
        use crate::numdom::CmpOp;
        let mut s = s.assume(&Guard::new(i.clone(), CmpOp::Ge, NumExpr::int(0)))?;
        let len = Dimension::path(a, LEN);
        if s.established.contains(&len) {
            s = s.assume(&Guard::new(i.clone(), CmpOp::Lt, NumExpr::dim(len)))?;
        }
        Ok(s)
    }

    fn weak_paths(&self, plan: &Plan, s: AbsState<D>, x: &str, f: &str, e: &NExpr) -> R<AbsState<D>> {
        let mut s = s;
        for z in &plan.aps {
            let Some((r, g)) = root(z) else { continue };
            if &**g != f || &**r == x || !s.established.contains(z) {
                continue;
            }
            if self.f.pt.may_alias(&plan.node, x, r).unwrap_or(true) {
                s = s.weak_assign(z, e)?;
            }
        }
        Ok(s)
    }

    fn exec(&mut self, plan: &Plan, st: &Stmt, s: AbsState<D>) -> R<AbsState<D>> {
        self.tick()?;
        let n = &plan.node;
        let m = &n.method;
        self.record(n, st.id, &s)?;
        let p = self.f.p;
        let frame = plan.frame();
        Ok(match &st.kind {
            StmtKind::Assign { lhs, rhs } => {
                if self.is_int(m, lhs) {
                    s.assign(&Dimension::Local(lhs.clone()), &num(rhs))?
                } else {
                    let mut s = self.invalidate_root(plan, s, lhs)?;
                    if let Some(y) = rhs.as_var().filter(|y| *y != lhs) {
                        for ap in plan.aps.iter().filter(|d| root(d).is_some_and(|(r, _)| r == lhs)) {
                            let src = Dimension::AccessPath(y.clone(), root(ap).unwrap().1.clone());
                            if s.established.contains(&src) {
                                s = s.assign(ap, &NumExpr::dim(src))?;
                                establish(&mut s, ap);
                            }
                        }
                    }
                    s
                }
            }
            StmtKind::Alloc { lhs, class } => {
                let mut s = self.invalidate_root(plan, s, lhs)?;
                let o = AbsName::of(self.f.cfg.or, Site::Stmt(st.id), class);
                for fl in alloc_fields(p, class) {
                    let so = self.f.summary_dim(&o, &fl, frame);
                    if plan.summaries.contains(&so) {
                        s = s.write_summary(&so, &NumExpr::int(0))?;
                    }
                    let ap = Dimension::AccessPath(lhs.clone(), fl.clone());
                    if plan.aps.contains(&ap) {
                        s = s.assign(&ap, &NumExpr::int(0))?;
                        establish(&mut s, &ap);
                    }
                }
                s
            }
            StmtKind::AllocArray { lhs, len } => {
                let e = num(len);
                let s = s.assume(&Guard::new(e.clone(), crate::numdom::CmpOp::Ge, NumExpr::int(0)))?;
                let s = self.invalidate_root(plan, s, lhs)?;
                self.alloc_sequence(plan, s, st.id, lhs, ARRAY_CLASS, e)?
            }
            StmtKind::StrLit { lhs, value } => {
                let s = self.invalidate_root(plan, s, lhs)?;
                self.alloc_sequence(plan, s, st.id, lhs, STRING_CLASS, NumExpr::int(value.chars().count() as i64))?
            }
            StmtKind::FieldRead { lhs, obj, field } => {
                let x = var(obj);
                if !numeric_access(p, m, x, field) {
                    return self.invalidate_root(plan, s, lhs);
                }
                let f = model_field(field);
                let y = Dimension::Local(lhs.clone());
                let ap = Dimension::path(x, f);
                if self.f.uses_ap() {
                    let mut s = s;
                    if !s.established.contains(&ap) {
                        if self.f.uses_so() {
                            s = self.load(plan, s.forget(&ap)?, st.id, x, f, &ap)?;
                        }
                        establish(&mut s, &ap);
                    }
                    s.assign(&y, &NumExpr::dim(ap))?
                } else {
                    self.load(plan, s.forget(&y)?, st.id, x, f, &y)?
                }
            }
            StmtKind::FieldWrite { obj, field, value } => {
                let x = var(obj);
                if !numeric_access(p, m, x, field) {
                    return Ok(s);
                }
                let f = model_field(field);
                let e = num(value);
                let mut s = s;
                let ap = Dimension::path(x, f);
                if plan.aps.contains(&ap) {
                    s = self.weak_paths(plan, s, x, f, &e)?;
                    s = s.assign(&ap, &e)?;
                    establish(&mut s, &ap);
                }
                for o in self.f.objs(n, x, f) {
                    let so = self.f.summary_dim(&o, f, frame);
                    if plan.summaries.contains(&so) {
                        s = s.write_summary(&so, &e)?;
                    }
                }
                s
            }
            StmtKind::ArrayRead { lhs, arr, index } => {
                let a = var(arr);
                let s = self.refine_index(s, a, &num(index))?;
                let y = Dimension::Local(lhs.clone());
                let c = Dimension::path(a, CONTENTS);
                if self.f.uses_ap() {
                    let mut s = s;
                    if !s.established.contains(&c) && self.f.uses_so() {
                        s = self.load(plan, s.forget(&c)?, st.id, a, CONTENTS, &c)?;
                        establish(&mut s, &c);
                    }
                    if s.established.contains(&c) {
                        s.dup(&c, &y)?
                    } else {
                        s.forget(&y)?
                    }
                } else {
                    self.load(plan, s.forget(&y)?, st.id, a, CONTENTS, &y)?
                }
            }
            StmtKind::ArrayWrite { arr, index, value } => {
                let a = var(arr);
                let mut s = self.refine_index(s, a, &num(index))?;
                let e = num(value);
                let c = Dimension::path(a, CONTENTS);
                if plan.aps.contains(&c) {
                    if s.established.contains(&c) {
                        s = s.weak_assign(&c, &e)?;
                    }
                    s = self.weak_paths(plan, s, a, CONTENTS, &e)?;
                }
                for o in self.f.objs(n, a, CONTENTS) {
                    let so = self.f.summary_dim(&o, CONTENTS, frame);
                    if plan.summaries.contains(&so) {
                        s = s.write_summary(&so, &e)?;
                    }
                }
                s
            }
            StmtKind::Call { lhs, recv, args, .. } => self.call(plan, st.id, s, lhs.as_ref(), var(recv), args)?,
            StmtKind::If { cond, then_body, else_body } => {
                let g = guard(cond);
                let t = self.exec_block(plan, then_body, s.assume(&g)?)?;
                let e = self.exec_block(plan, else_body, s.assume(&g.negate())?)?;
                t.join(&e)?
            }
            StmtKind::While { cond, body } => {
                let g = guard(cond);
                let mut head = s;
                let mut iter = 0usize;
                loop {
                    iter += 1;
                    self.iterations += 1;
                    if iter > 1 {
                        self.tick()?;
                        self.record(n, st.id, &head)?;
                    }
                    let out = self.exec_block(plan, body, head.assume(&g)?)?;
                    let next = head.join(&out)?;
                    if next.leq(&head)? {
                        break;
                    }
                    head = if iter >= self.opts.widen_at { head.widen(&next)? } else { next };
                    if iter >= self.opts.max_iterations {
                        self.warn(format!("loop at statement {} in {n} did not stabilize", st.id));
                        head = self.top_state(plan);
                    }
                }
                head.assume(&g.negate())?
            }
        })
    }

    fn alloc_sequence(&self, plan: &Plan, s: AbsState<D>, id: StmtId, lhs: &Name, class: &str, len: NExpr) -> R<AbsState<D>> {
        let mut s = s;
        let o = AbsName::of(self.f.cfg.or, Site::Stmt(id), class);
        let mut writes = vec![(LEN, len)];
        if class == ARRAY_CLASS {
            writes.push((CONTENTS, NumExpr::int(0)));
        }
        for (fl, e) in writes {
            let so = self.f.summary_dim(&o, fl, plan.frame());
            if plan.summaries.contains(&so) {
                s = s.write_summary(&so, &e)?;
            }
            let ap = Dimension::path(lhs, fl);
            if plan.aps.contains(&ap) {
                s = s.assign(&ap, &e)?;
                establish(&mut s, &ap);
            }
        }
        Ok(s)
    }
}
