//! Shared test support: a random program generator and an oracle that
//! checks concrete traces against analysis results.

#![allow(dead_code)]

pub mod grid;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::PathBuf;

use numlab::absint::state::linear;
use numlab::absint::{prepare, AbsState, AnalysisConfig, AnalysisResult, AnyResult, Budget, Domain, CONTENTS, LEN};
use numlab::boundscheck::{check_any, Verdict};
use numlab::config::{Ao, Cs, Ha, Or, ND_ALL};
use numlab::ir::{concrete_eval, normalize, parse_program, EventKind, Obj, Outcome, Program, Trace, TrapKind, Value};
use numlab::numdom::{Dimension, Rel};
use numlab::pointsto::{AbsName, Context, Node};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_program(name: &str) -> Program {
    let path = corpus_dir().join(format!("{name}.nl"));
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_program(&src).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn cfg(s: &str) -> AnalysisConfig {
    s.parse().unwrap()
}

/// `n` configurations in which every value of every axis occurs.
pub fn sample_configs(rng: &mut impl Rng, n: usize) -> Vec<AnalysisConfig> {
    fn column<T: Copy>(rng: &mut impl Rng, all: &[T], n: usize) -> Vec<T> {
        let mut v: Vec<T> = (0..n).map(|i| all[i % all.len()]).collect();
        v.shuffle(rng);
        v
    }
    let ao = column(rng, Ao::ALL, n);
    let ha = column(rng, Ha::ALL, n);
    let cs = column(rng, Cs::ALL, n);
    let or = column(rng, Or::ALL, n);
    let nd = column(rng, ND_ALL, n);
    (0..n).map(|i| AnalysisConfig { ao: ao[i], ha: ha[i], cs: cs[i], or: or[i], nd: nd[i] }).collect()
}

// ---------------------------------------------------------------------------
// Program generator

#[derive(Clone)]
struct MethodSpec {
    name: String,
    /// `Main` or `A`.
    owner: &'static str,
    ints: usize,
    obj_param: bool,
    returns_obj: bool,
    overridden: bool,
}

struct Scope<'a> {
    index: usize,
    spec: &'a MethodSpec,
    in_b: bool,
    counters: usize,
    depth: usize,
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    methods: Vec<MethodSpec>,
    has_b: bool,
    out: String,
}

const INTS: [&str; 3] = ["i0", "i1", "i2"];
const OBJS: [&str; 2] = ["x0", "x1"];
const ARRS: [&str; 2] = ["a0", "a1"];

impl<R: Rng> Gen<'_, R> {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn pick<'s>(&mut self, xs: &[&'s str]) -> &'s str {
        xs[self.rng.gen_range(0..xs.len())]
    }

    fn int_vars(&self, sc: &Scope) -> Vec<String> {
        let mut v: Vec<String> = INTS.iter().map(|s| s.to_string()).collect();
        v.extend((0..sc.spec.ints).map(|k| format!("p{k}")));
        v
    }

    fn obj_vars(&self, sc: &Scope) -> Vec<String> {
        let mut v: Vec<String> = OBJS.iter().map(|s| s.to_string()).collect();
        if sc.spec.obj_param {
            v.push("q".into());
        }
        if sc.spec.owner == "A" {
            v.push("this".into());
        }
        v
    }

    fn pick_s(&mut self, xs: &[String]) -> String {
        xs[self.rng.gen_range(0..xs.len())].clone()
    }

    fn atom(&mut self, sc: &Scope) -> String {
        if self.chance(0.35) {
            self.rng.gen_range(-2..8).to_string()
        } else {
            let v = self.int_vars(sc);
            self.pick_s(&v)
        }
    }

    fn index(&mut self, sc: &Scope, arr: &str) -> String {
        match self.rng.gen_range(0..6) {
            0 => self.rng.gen_range(0..6).to_string(),
            1 => format!("{arr}.length - 1"),
            2 => format!("{} - 1", self.atom(sc)),
            3 if sc.counters > 0 => format!("c{}", self.rng.gen_range(0..sc.counters)),
            _ => self.atom(sc),
        }
    }

    fn expr(&mut self, sc: &Scope, depth: usize) -> String {
        let k = if depth == 0 { 0 } else { self.rng.gen_range(0..10) };
        match k {
            0..=3 => self.atom(sc),
            4 => format!("{} + {}", self.expr(sc, depth - 1), self.atom(sc)),
            5 => format!("{} - {}", self.expr(sc, depth - 1), self.atom(sc)),
            6 => format!("{} * {}", self.rng.gen_range(-2..4), self.atom(sc)),
            7 => {
                let o = self.pick_s(&self.obj_vars(sc));
                let f = self.pick(&["f", "g"]);
                format!("{o}.{f}")
            }
            8 => {
                let a = self.pick(&ARRS);
                if self.chance(0.3) {
                    "s0.length".into()
                } else {
                    format!("{a}.length")
                }
            }
            _ => {
                let a = self.pick(&ARRS);
                let i = self.index(sc, a);
                format!("{a}[{i}]")
            }
        }
    }

    fn cond(&mut self, sc: &Scope) -> String {
        let op = self.pick(&["<", "<=", ">", ">=", "==", "!="]);
        format!("{} {op} {}", self.expr(sc, 1), self.atom(sc))
    }

    fn callees(&self, sc: &Scope) -> Vec<usize> {
        (0..sc.index).filter(|&j| self.methods[j].owner == "A" || sc.spec.owner == "Main").collect()
    }

    fn call(&mut self, sc: &Scope, j: usize, args_override: Option<String>) -> String {
        let m = self.methods[j].clone();
        let recv = if m.owner == "Main" { "this".to_string() } else { self.pick_s(&self.obj_vars(sc)) };
        let mut args: Vec<String> = (0..m.ints).map(|_| self.expr(sc, 1)).collect();
        if let Some(a) = args_override {
            args[0] = a;
        }
        if m.obj_param {
            let o = self.pick_s(&self.obj_vars(sc));
            args.push(o);
        }
        let call = format!("{recv}.{}({})", m.name, args.join(", "));
        if m.returns_obj {
            format!("{} := {call};", self.pick(&OBJS))
        } else if self.chance(0.8) {
            format!("{} := {call};", self.pick(&INTS))
        } else {
            format!("{call};")
        }
    }

    fn stmt(&mut self, sc: &mut Scope, ind: usize, lines: &mut Vec<String>) {
        let pad = "  ".repeat(ind);
        let k = self.rng.gen_range(0..24);
        let line = match k {
            0..=2 => format!("{} := {};", self.pick(&INTS), self.expr(sc, 2)),
            3 | 4 => {
                let o = self.pick_s(&self.obj_vars(sc));
                format!("{o}.{} := {};", self.pick(&["f", "g"]), self.expr(sc, 1))
            }
            5 => format!("{} := {}.{};", self.pick(&INTS), self.pick_s(&self.obj_vars(sc)), self.pick(&["f", "g"])),
            6 => {
                let c = if self.has_b && self.chance(0.4) { "B" } else { "A" };
                format!("{} := new {c}();", self.pick(&OBJS))
            }
            7 => {
                let (x, y) = (self.pick(&OBJS), self.pick_s(&self.obj_vars(sc)));
                match self.rng.gen_range(0..3) {
                    0 => format!("{x} := {y};"),
                    1 => format!("{x} := {y}.next;"),
                    _ => format!("{y}.next := {x};"),
                }
            }
            8 | 9 => {
                let n = if self.chance(0.7) { self.rng.gen_range(0..7).to_string() } else { self.atom(sc) };
                format!("{} := new int[{n}];", self.pick(&ARRS))
            }
            10 => {
                let (a, o) = (self.pick(&ARRS), self.pick_s(&self.obj_vars(sc)));
                if self.chance(0.5) {
                    format!("{o}.arr := {a};")
                } else {
                    format!("{a} := {o}.arr;")
                }
            }
            11 | 12 => {
                let a = self.pick(&ARRS);
                let i = self.index(sc, a);
                format!("{a}[{i}] := {};", self.expr(sc, 1))
            }
            13 => {
                let a = self.pick(&ARRS);
                let i = self.index(sc, a);
                format!("{} := {a}[{i}];", self.pick(&INTS))
            }
            14 => {
                let n = self.rng.gen_range(0..5);
                let s: String = (0..n).map(|_| self.rng.gen_range(b'a'..=b'z') as char).collect();
                format!("s0 := \"{s}\";")
            }
            15 if sc.in_b => format!("this.h := {};", self.expr(sc, 1)),
            16 | 17 => {
                let cs = self.callees(sc);
                if cs.is_empty() {
                    return self.stmt(sc, ind, lines);
                }
                let j = cs[self.rng.gen_range(0..cs.len())];
                self.call(sc, j, None)
            }
            18 | 19 if sc.depth < 2 => {
                let c = self.cond(sc);
                lines.push(format!("{pad}if ({c}) {{"));
                sc.depth += 1;
                self.block(sc, ind + 1, lines, 3);
                if self.chance(0.6) {
                    lines.push(format!("{pad}}} else {{"));
                    self.block(sc, ind + 1, lines, 3);
                }
                sc.depth -= 1;
                lines.push(format!("{pad}}}"));
                return;
            }
            20 | 21 if sc.depth < 2 && sc.counters < 2 => {
                let c = format!("c{}", sc.counters);
                let bound = match self.rng.gen_range(0..3) {
                    0 => self.rng.gen_range(0..7).to_string(),
                    1 => format!("{}.length", self.pick(&ARRS)),
                    _ => self.atom(sc),
                };
                lines.push(format!("{pad}{c} := 0;"));
                lines.push(format!("{pad}while ({c} < {bound}) {{"));
                sc.counters += 1;
                sc.depth += 1;
                self.block(sc, ind + 1, lines, 3);
                sc.depth -= 1;
                sc.counters -= 1;
                lines.push(format!("{pad}  {c} := {c} + 1;"));
                lines.push(format!("{pad}}}"));
                return;
            }
            22 if sc.spec.ints > 0 && sc.spec.owner == "A" && sc.depth < 2 && !sc.spec.returns_obj => {
                // Guarded self-recursion on a shrinking argument.
                let call = self.call_self(sc);
                lines.push(format!("{pad}if (p0 > 0) {{"));
                lines.push(format!("{pad}  {call}"));
                lines.push(format!("{pad}}}"));
                return;
            }
            _ => format!("{} := {};", self.pick(&INTS), self.expr(sc, 1)),
        };
        lines.push(format!("{pad}{line}"));
    }

    fn call_self(&mut self, sc: &Scope) -> String {
        let m = sc.spec;
        let mut args = vec!["p0 - 1".to_string()];
        args.extend((1..m.ints).map(|_| self.atom(sc)));
        if m.obj_param {
            args.push(self.pick_s(&self.obj_vars(sc)));
        }
        format!("{} := this.{}({});", self.pick(&INTS), m.name, args.join(", "))
    }

    fn block(&mut self, sc: &mut Scope, ind: usize, lines: &mut Vec<String>, max: usize) {
        let n = self.rng.gen_range(1..=max);
        for _ in 0..n {
            self.stmt(sc, ind, lines);
        }
    }

    fn method(&mut self, index: usize, spec: &MethodSpec, in_b: bool) {
        let mut params: Vec<String> = (0..spec.ints).map(|k| format!("int p{k}")).collect();
        if spec.obj_param {
            params.push("A q".into());
        }
        let ret = if spec.returns_obj { "A" } else { "int" };
        let _ = writeln!(self.out, "  {ret} {}({}) {{", spec.name, params.join(", "));
        for l in ["int i0;", "int i1;", "int i2;", "int c0;", "int c1;", "A x0;", "A x1;", "int[] a0;", "int[] a1;", "String s0;"] {
            let _ = writeln!(self.out, "    {l}");
        }
        let mut lines = Vec::new();
        // Bodies start from a populated heap so later statements rarely stop
        // at a null dereference.
        let c = if self.has_b && self.chance(0.4) { "B" } else { "A" };
        lines.push(format!("    x0 := new {c}();"));
        if self.chance(0.8) {
            let c = if self.has_b && self.chance(0.5) { "B" } else { "A" };
            lines.push(format!("    x1 := new {c}();"));
        } else {
            lines.push("    x1 := x0;".into());
        }
        lines.push(format!("    a0 := new int[{}];", self.rng.gen_range(0..7)));
        if self.chance(0.7) {
            lines.push(format!("    a1 := new int[{}];", self.rng.gen_range(0..7)));
        } else {
            lines.push("    a1 := a0;".into());
        }
        let n = self.rng.gen_range(0..5);
        lines.push(format!("    s0 := \"{}\";", "xyzw".chars().take(n).collect::<String>()));
        for (p, l) in [(0.6, "x0.arr := a0;"), (0.4, "x1.arr := a1;"), (0.5, "x0.next := x1;"), (0.3, "x1.next := x0;")] {
            if self.chance(p) {
                lines.push(format!("    {l}"));
            }
        }
        let mut sc = Scope { index, spec, in_b, counters: 0, depth: 0 };
        let budget = if spec.name == "main" { 10 } else { 6 };
        self.block(&mut sc, 2, &mut lines, budget);
        for l in lines {
            let _ = writeln!(self.out, "{l}");
        }
        let r = if spec.returns_obj { self.pick(&OBJS).to_string() } else { self.expr(&sc, 1) };
        let _ = writeln!(self.out, "    return {r};\n  }}");
    }
}

/// Source text of a random well-typed program: up to three classes and
/// five methods, with acyclic calls apart from guarded self-recursion.
pub fn random_program(rng: &mut impl Rng) -> String {
    let has_b = rng.gen_bool(0.5);
    let library = rng.gen_bool(0.2);
    let mut methods = Vec::new();
    let mut count = 1;
    for k in 0..rng.gen_range(0..=4) {
        if count >= 5 {
            break;
        }
        let owner = if rng.gen_bool(0.75) { "A" } else { "Main" };
        let overridden = owner == "A" && has_b && count < 4 && rng.gen_bool(0.4);
        count += 1 + overridden as usize;
        methods.push(MethodSpec {
            name: format!("m{k}"),
            owner,
            ints: rng.gen_range(0..=2),
            obj_param: rng.gen_bool(0.3),
            returns_obj: rng.gen_bool(0.15),
            overridden,
        });
    }
    let main = MethodSpec { name: "main".into(), owner: "Main", ints: 0, obj_param: false, returns_obj: false, overridden: false };
    methods.push(main);
    let mut g = Gen { rng, methods: methods.clone(), has_b, out: String::new() };

    let lib = if library { "library " } else { "" };
    let _ = writeln!(g.out, "{lib}class A {{\n  int f;\n  int g;\n  A next;\n  int[] arr;");
    for (i, m) in methods.iter().enumerate() {
        if m.owner == "A" {
            g.method(i, m, false);
        }
    }
    g.out.push_str("}\n");
    if has_b {
        g.out.push_str("class B extends A {\n  int h;\n");
        for (i, m) in methods.iter().enumerate() {
            if m.overridden {
                g.method(i, m, true);
            }
        }
        g.out.push_str("}\n");
    }
    g.out.push_str("class Main {\n");
    for (i, m) in methods.iter().enumerate() {
        if m.owner == "Main" {
            g.method(i, m, false);
        }
    }
    g.out.push_str("}\n");
    g.out
}

/// A random program that parses and validates.
pub fn random_valid_program(rng: &mut impl Rng) -> (String, Program) {
    loop {
        let src = random_program(rng);
        if let Ok(p) = parse_program(&src) {
            return (src, p);
        }
    }
}

// ---------------------------------------------------------------------------
// Soundness oracle

/// Concrete values a dimension may take at an event; every one must be
/// admitted by the abstract state.
enum Known {
    One(i64),
    Many(Vec<i64>),
}

fn field_values(o: &Obj, f: &str) -> Vec<i64> {
    match (f, &o.elems) {
        (LEN, Some(e)) => vec![e.len() as i64],
        (CONTENTS, Some(e)) => e.clone(),
        (_, None) => o.fields.get(f).and_then(Value::as_int).into_iter().collect(),
        _ => vec![],
    }
}

/// Values of `o.f` written since `before`, elementwise for contents.
fn changed_values(now: &Obj, before: &Obj, f: &str) -> Vec<i64> {
    match (f, &now.elems, &before.elems) {
        (CONTENTS, Some(a), Some(b)) => a.iter().zip(b).filter(|(x, y)| x != y).map(|(x, _)| *x).collect(),
        (LEN, ..) => vec![],
        _ => {
            let (a, b) = (field_values(now, f), field_values(before, f));
            if a != b {
                a
            } else {
                vec![]
            }
        }
    }
}

fn frame_node(trace: &Trace, frame: usize, cfg: AnalysisConfig, entry: &Node) -> Node {
    let fi = &trace.frames[frame];
    match fi.call_site {
        None => entry.clone(),
        Some(site) => Node { method: fi.method.clone(), ctx: Context::for_call(cfg.cs, site, &fi.recv_class) },
    }
}

fn admits<D: Domain>(s: &AbsState<D>, fixed: &[(Dimension, i64)], multi: &[(Dimension, Vec<i64>)]) -> Result<(), String> {
    let eq = |d: &Dimension, v: i64| linear(&[(d.clone(), 1)], Rel::Eq, v);
    let base = s.add(&fixed.iter().map(|(d, v)| eq(d, *v)).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
    if base.is_bottom() {
        return Err(format!("state excludes {}", show(fixed)));
    }
    let product: usize = multi.iter().map(|(_, vs)| vs.len()).fold(1usize, |a, b| a.saturating_mul(b));
    if product <= 256 {
        let mut idx = vec![0usize; multi.len()];
        loop {
            let pick: Vec<(Dimension, i64)> = multi.iter().zip(&idx).map(|((d, vs), &i)| (d.clone(), vs[i])).collect();
            let s2 = base.add(&pick.iter().map(|(d, v)| eq(d, *v)).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
            if s2.is_bottom() {
                return Err(format!("state excludes {} with {}", show(fixed), show(&pick)));
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return Ok(());
                }
                idx[k] += 1;
                if idx[k] < multi[k].1.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
    for (d, vs) in multi {
        for v in vs {
            if base.add(&[eq(d, *v)]).map_err(|e| e.to_string())?.is_bottom() {
                return Err(format!("state excludes {} with {d} = {v}", show(fixed)));
            }
        }
    }
    Ok(())
}

fn show(xs: &[(Dimension, i64)]) -> String {
    xs.iter().map(|(d, v)| format!("{d}={v}")).collect::<Vec<_>>().join(", ")
}

/// Checks every event of `trace` (run on the normalized program `p`)
/// against the analysis result. Returns violations as readable lines.
pub fn trace_violations<D: Domain>(r: &AnalysisResult<D>, p: &Program, trace: &Trace) -> Vec<String> {
    let cfg = r.config;
    let mut out = Vec::new();
    if r.partial {
        return out;
    }
    let mut first: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, e) in trace.events.iter().enumerate() {
        first.entry(e.frame).or_insert(i);
    }
    let nodes: Vec<Node> = (0..trace.frames.len()).map(|f| frame_node(trace, f, cfg, &r.entry)).collect();
    let obj_name = |o: &Obj| AbsName::of(cfg.or, o.site, &o.class).to_string();

    for (i, ev) in trace.events.iter().enumerate() {
        let node = &nodes[ev.frame];
        let (state, at) = match &ev.kind {
            EventKind::At(s) => (r.state(node, *s), format!("before {s}")),
            EventKind::Exit(_) => (r.exit(node), "at exit".to_string()),
        };
        let Some(plan) = r.plans.get(node) else {
            out.push(format!("event {i}: node {node} was never analyzed"));
            continue;
        };
        let Some(state) = state else {
            out.push(format!("event {i}: {node} {at} has no state"));
            continue;
        };
        if state.is_bottom() {
            out.push(format!("event {i}: {node} {at} is bottom"));
            continue;
        }
        let entry_ev = &trace.events[first[&ev.frame]];
        let mut fixed = Vec::new();
        let mut multi = Vec::new();
        let mut push = |d: &Dimension, vals: Vec<i64>, fixed: &mut Vec<(Dimension, i64)>| {
            let vals: BTreeSet<i64> = vals.into_iter().collect();
            match vals.len() {
                0 => {}
                1 => fixed.push((d.clone(), *vals.iter().next().unwrap())),
                _ => multi.push((d.clone(), vals.into_iter().collect::<Vec<_>>())),
            }
        };
        let def = p.method(&trace.frames[ev.frame].method).expect("traced method exists");
        for d in state.dims() {
            let known = match &d {
                Dimension::Local(x) => ev.locals.get(x).and_then(Value::as_int).map(Known::One),
                Dimension::AccessPath(x, f) if state.established.contains(&d) => {
                    ev.locals.get(x).and_then(Value::as_ref).map(|o| Known::Many(field_values(&ev.heap[o], f)))
                }
                Dimension::Formal(id, k) if *id == plan.id && plan.formals.get(*k as usize).is_some_and(|f| f.as_ref() == Some(&d)) => {
                    def.params.get(*k as usize).and_then(|prm| entry_ev.locals.get(&prm.name)).and_then(Value::as_int).map(Known::One)
                }
                Dimension::Ret(id) if *id == plan.id => match &ev.kind {
                    EventKind::Exit(v) => v.as_int().map(Known::One),
                    EventKind::At(_) => None,
                },
                Dimension::SummaryObject { obj, field, frame } => {
                    let vals: Vec<i64> = match frame {
                        None => ev.heap.iter().filter(|o| obj_name(o) == **obj).flat_map(|o| field_values(o, field)).collect(),
                        Some(fid) if *fid == plan.id => {
                            let before = &entry_ev.heap;
                            ev.heap
                                .iter()
                                .enumerate()
                                .filter(|(_, o)| obj_name(o) == **obj)
                                .flat_map(|(k, o)| match before.get(k) {
                                    None => field_values(o, field),
                                    Some(b) => changed_values(o, b, field),
                                })
                                .collect()
                        }
                        Some(_) => vec![],
                    };
                    if !vals.is_empty() && !state.present.contains(&d) {
                        out.push(format!("event {i}: {node} {at}: {d} covers live objects but is absent"));
                    }
                    Some(Known::Many(vals))
                }
                _ => None,
            };
            match known {
                Some(Known::One(v)) => push(&d, vec![v], &mut fixed),
                Some(Known::Many(vs)) => push(&d, vs, &mut fixed),
                None => {}
            }
        }
        if let Err(e) = admits(state, &fixed, &multi) {
            out.push(format!("event {i}: {node} {at}: {e}"));
        }
    }
    out
}

/// Out-of-bounds traps reported as safe.
pub fn false_discharges(r: &AnyResult, p: &Program, trace: &Trace, pt: &numlab::pointsto::PointsTo) -> Vec<String> {
    let Outcome::Trap { stmt, kind: TrapKind::IndexOutOfBounds { index, len } } = &trace.outcome else {
        return vec![];
    };
    let rep = check_any(r, p, pt);
    match rep.verdict(*stmt) {
        Some(v @ (Verdict::Discharged | Verdict::Unreachable)) => {
            vec![format!("statement {stmt} traps with index {index} on length {len} but is {v}")]
        }
        _ => vec![],
    }
}

/// Analyzes the source program `p` under `cfg` and checks a concrete run
/// of its normalized form against the result.
pub fn soundness_violations(p: &Program, trace: &Trace, cfg: AnalysisConfig) -> Vec<String> {
    let prep = prepare(p, cfg);
    let r = match prep.analyze_any(cfg, &Budget::unlimited()) {
        Ok(r) => r,
        Err(e) => return vec![format!("analysis failed: {e}")],
    };
    let mut v = match &r {
        AnyResult::Int(r) => trace_violations(r, &prep.program, trace),
        AnyResult::Pol(r) => trace_violations(r, &prep.program, trace),
    };
    v.extend(false_discharges(&r, &prep.program, trace, &prep.pt));
    v
}

/// The concrete run of a program, on its normalized form so statement ids
/// agree with the analysis.
pub fn normalized_trace(p: &Program, fuel: u64) -> Trace {
    concrete_eval(&normalize(p), fuel)
}

/// Outcome of one fuzzing campaign.
#[derive(Debug, Default)]
pub struct FuzzReport {
    pub programs: usize,
    pub cells: usize,
    pub traps: usize,
    pub violations: Vec<String>,
}

/// Generates `programs` random programs from `seed` and checks each under
/// `per_program` sampled configurations.
pub fn fuzz(seed: u64, programs: usize, per_program: usize, fuel: u64) -> FuzzReport {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rep = FuzzReport::default();
    for n in 0..programs {
        let (src, p) = random_valid_program(&mut rng);
        let trace = normalized_trace(&p, fuel);
        if matches!(trace.outcome, Outcome::Trap { kind: TrapKind::IndexOutOfBounds { .. }, .. }) {
            rep.traps += 1;
        }
        for c in sample_configs(&mut rng, per_program) {
            let v = soundness_violations(&p, &trace, c);
            rep.cells += 1;
            if !v.is_empty() && rep.violations.len() < 20 {
                rep.violations.push(format!("program {n} under {c}:\n{}\n{src}", v.join("\n")));
            }
        }
        rep.programs += 1;
    }
    rep
}

// ---------------------------------------------------------------------------
// Analysis helpers

pub use numlab::absint::Prepared;

/// Analyzes `p` to completion in domain `D`.
pub fn analyze<D: Domain>(p: &Program, cfg: AnalysisConfig) -> (Prepared, AnalysisResult<D>) {
    let prep = prepare(p, cfg);
    let r = prep.analyze::<D>(cfg, &Budget::unlimited()).expect("analysis succeeds");
    assert!(!r.partial, "unlimited budget cannot run out");
    (prep, r)
}

pub fn node<'a, D: Domain>(r: &'a AnalysisResult<D>, m: &str) -> &'a Node {
    r.node(m).unwrap_or_else(|| panic!("no node for {m}"))
}

pub fn exit<'a, D: Domain>(r: &'a AnalysisResult<D>, m: &str) -> &'a AbsState<D> {
    r.exit(node(r, m)).unwrap_or_else(|| panic!("no exit state for {m}"))
}

/// Bounds of `d`, `None` for an infinite side.
pub fn bounds<D: Domain>(s: &AbsState<D>, d: &Dimension) -> (Option<i64>, Option<i64>) {
    let b = s.num.bounds(d).unwrap().expect("state is not bottom");
    let f = |v: Option<numlab::Int>| v.map(|x| i64::try_from(x).unwrap());
    (f(b.lo), f(b.hi))
}

pub fn entails_eq<D: Domain>(s: &AbsState<D>, terms: &[(Dimension, i64)], c: i64) -> bool {
    s.entails(&linear(terms, Rel::Eq, c)).unwrap()
}

/// The single abstract object `var` points to in method `m`.
pub fn object_of<D: Domain>(prep: &Prepared, r: &AnalysisResult<D>, m: &str, var: &str) -> String {
    let objs = prep.pt.var(node(r, m), var);
    assert_eq!(objs.len(), 1, "{var} in {m} points to {objs:?}");
    objs.iter().next().unwrap().to_string()
}

/// Verdict table of a program: one line per configuration with the
/// discharged count and each check site's verdict.
pub fn verdict_table(p: &Program) -> String {
    let mut out = String::new();
    for c in numlab::config::enumerate_configs(None) {
        let prep = prepare(p, c);
        let r = prep.analyze_any(c, &Budget::unlimited()).expect("analysis succeeds");
        let rep = check_any(&r, &prep.program, &prep.pt);
        let sites: Vec<String> = rep
            .sites
            .iter()
            .map(|(s, v)| {
                let v = match v {
                    Verdict::Discharged => 'D',
                    Verdict::NotProved => 'N',
                    Verdict::Unreachable => 'U',
                };
                format!("@{}={v}", s.stmt)
            })
            .collect();
        let line = format!("{c} {}/{} {}", rep.discharged(), rep.total, sites.join(" "));
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}

/// Corpus programs (top level only), sorted by name.
pub fn corpus() -> Vec<(String, Program)> {
    let (ok, bad) = numlab::harness::load_corpus(&corpus_dir()).expect("corpus directory");
    assert!(bad.is_empty(), "unreadable corpus entries: {bad:?}");
    ok
}

pub fn golden_dir() -> PathBuf {
    corpus_dir().join("goldens")
}

/// Compares `actual` with a golden file, rewriting it when `NUMLAB_BLESS`
/// is set.
pub fn golden(file: &str, actual: &str) -> Result<(), String> {
    let path = golden_dir().join(file);
    if std::env::var_os("NUMLAB_BLESS").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e} (run with NUMLAB_BLESS=1)", path.display()))?;
    if expected == actual {
        return Ok(());
    }
    let diff = expected.lines().zip(actual.lines()).enumerate().find(|(_, (a, b))| a != b);
    Err(match diff {
        Some((i, (a, b))) => format!("{file} line {}: expected `{a}`, got `{b}`", i + 1),
        None => format!("{file}: expected {} lines, got {}", expected.lines().count(), actual.lines().count()),
    })
}
