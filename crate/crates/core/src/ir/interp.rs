//! Reference semantics: a small-step interpreter over 64-bit integers that
//! records the state at every statement boundary.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::ast::*;

pub type ObjId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    /// `None` is null.
    Ref(Option<ObjId>),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            Value::Ref(_) => None,
        }
    }

    pub fn as_ref(&self) -> Option<ObjId> {
        match self {
            Value::Ref(r) => *r,
            Value::Int(_) => None,
        }
    }

    fn default_for(t: &Type) -> Value {
        if t.is_int() {
            Value::Int(0)
        } else {
            Value::Ref(None)
        }
    }
}

/// Where an object was created.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    /// The receiver of the entry method.
    Entry,
    Stmt(StmtId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obj {
    pub class: Name,
    pub site: Site,
    pub fields: BTreeMap<Name, Value>,
    /// Elements of arrays, characters of strings.
    pub elems: Option<Vec<i64>>,
}

impl Obj {
    pub fn len(&self) -> Option<i64> {
        self.elems.as_ref().map(|e| e.len() as i64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameInfo {
    pub method: MethodRef,
    /// Call statement that created the frame; `None` for the entry.
    pub call_site: Option<StmtId>,
    /// Runtime class of the receiver.
    pub recv_class: Name,
    pub caller: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// About to execute the statement (for loops: about to test the guard).
    At(StmtId),
    /// Returning the value.
    Exit(Value),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub frame: usize,
    pub kind: EventKind,
    pub locals: BTreeMap<Name, Value>,
    pub heap: Arc<Vec<Obj>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TrapKind {
    IndexOutOfBounds { index: i64, len: i64 },
    NegativeLength(i64),
    NullDeref,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Returned(Value),
    OutOfFuel,
    Trap { stmt: StmtId, kind: TrapKind },
    Overflow { stmt: Option<StmtId> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub frames: Vec<FrameInfo>,
    pub events: Vec<Event>,
    pub outcome: Outcome,
}

impl Trace {
    /// Return value of the entry method, when it finished.
    pub fn result(&self) -> Option<i64> {
        match &self.outcome {
            Outcome::Returned(v) => v.as_int(),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Returned(Value::Int(v)) => write!(f, "returned {v}"),
            Outcome::Returned(_) => write!(f, "returned a reference"),
            Outcome::OutOfFuel => write!(f, "out of fuel"),
            Outcome::Trap { stmt, kind } => write!(f, "trap at statement {stmt}: {kind:?}"),
            Outcome::Overflow { .. } => write!(f, "integer overflow"),
        }
    }
}

enum Stop {
    Fuel,
    Trap(StmtId, TrapKind),
    Overflow(Option<StmtId>),
}

struct Machine<'a> {
    prog: &'a Program,
    heap: Vec<Obj>,
    frames: Vec<FrameInfo>,
    events: Vec<Event>,
    fuel: u64,
}

struct Frame {
    id: usize,
    locals: BTreeMap<Name, Value>,
}

type Step<T> = Result<T, Stop>;

impl<'a> Machine<'a> {
    fn new_obj(&mut self, class: Name, site: Site, elems: Option<Vec<i64>>) -> ObjId {
        let mut fields = BTreeMap::new();
        if elems.is_none() {
            for f in self.prog.all_fields(&class) {
                fields.insert(f.name.clone(), Value::default_for(&f.ty));
            }
        }
        self.heap.push(Obj { class, site, fields, elems });
        self.heap.len() - 1
    }

    fn record(&mut self, fr: &Frame, kind: EventKind) {
        self.events.push(Event { frame: fr.id, kind, locals: fr.locals.clone(), heap: Arc::new(self.heap.clone()) });
    }

    fn tick(&mut self) -> Step<()> {
        if self.fuel == 0 {
            return Err(Stop::Fuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn eval(&self, fr: &Frame, e: &Expr, at: StmtId) -> Step<Value> {
        Ok(match e {
            Expr::Var(x) => fr.locals.get(x).cloned().expect("validated variable"),
            Expr::Int(v) => Value::Int(*v),
            Expr::Bin(op, a, b) => {
                let a = self.eval_int(fr, a, at)?;
                let b = self.eval_int(fr, b, at)?;
                let r = match op {
                    BinOp::Add => a.checked_add(b),
                    BinOp::Sub => a.checked_sub(b),
                    BinOp::Mul => a.checked_mul(b),
                };
                Value::Int(r.ok_or(Stop::Overflow(Some(at)))?)
            }
            Expr::Field(o, f) => {
                let id = self.deref(fr, o, at)?;
                self.read_field(id, f)
            }
            Expr::Index(a, i) => {
                let id = self.deref(fr, a, at)?;
                let i = self.eval_int(fr, i, at)?;
                Value::Int(self.elem(id, i, at)?)
            }
        })
    }

    fn eval_int(&self, fr: &Frame, e: &Expr, at: StmtId) -> Step<i64> {
        Ok(self.eval(fr, e, at)?.as_int().expect("validated int expression"))
    }

    fn deref(&self, fr: &Frame, e: &Expr, at: StmtId) -> Step<ObjId> {
        self.eval(fr, e, at)?.as_ref().ok_or(Stop::Trap(at, TrapKind::NullDeref))
    }

    fn read_field(&self, id: ObjId, f: &str) -> Value {
        let o = &self.heap[id];
        if let (Some(n), LENGTH) = (o.len(), f) {
            return Value::Int(n);
        }
        o.fields.get(f).cloned().expect("validated field")
    }

    fn elem(&self, id: ObjId, i: i64, at: StmtId) -> Step<i64> {
        let elems = self.heap[id].elems.as_ref().expect("validated array");
        if i < 0 || i >= elems.len() as i64 {
            return Err(Stop::Trap(at, TrapKind::IndexOutOfBounds { index: i, len: elems.len() as i64 }));
        }
        Ok(elems[i as usize])
    }

    fn block(&mut self, fr: &mut Frame, body: &[Stmt]) -> Step<()> {
        for s in body {
            self.stmt(fr, s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, fr: &mut Frame, s: &Stmt) -> Step<()> {
        self.tick()?;
        self.record(fr, EventKind::At(s.id));
        let at = s.id;
        match &s.kind {
            StmtKind::Assign { lhs, rhs } => {
                let v = self.eval(fr, rhs, at)?;
                fr.locals.insert(lhs.clone(), v);
            }
            StmtKind::Alloc { lhs, class } => {
                let id = self.new_obj(class.clone(), Site::Stmt(at), None);
                fr.locals.insert(lhs.clone(), Value::Ref(Some(id)));
            }
            StmtKind::AllocArray { lhs, len } => {
                let n = self.eval_int(fr, len, at)?;
                if n < 0 {
                    return Err(Stop::Trap(at, TrapKind::NegativeLength(n)));
                }
                let id = self.new_obj(ARRAY_CLASS.into(), Site::Stmt(at), Some(vec![0; n as usize]));
                fr.locals.insert(lhs.clone(), Value::Ref(Some(id)));
            }
            StmtKind::StrLit { lhs, value } => {
                let chars = value.chars().map(|c| c as i64).collect();
                let id = self.new_obj(STRING_CLASS.into(), Site::Stmt(at), Some(chars));
                fr.locals.insert(lhs.clone(), Value::Ref(Some(id)));
            }
            StmtKind::FieldRead { lhs, obj, field } => {
                let id = self.deref(fr, obj, at)?;
                let v = self.read_field(id, field);
                fr.locals.insert(lhs.clone(), v);
            }
            StmtKind::FieldWrite { obj, field, value } => {
                let id = self.deref(fr, obj, at)?;
                let v = self.eval(fr, value, at)?;
                self.heap[id].fields.insert(field.clone(), v);
            }
            StmtKind::ArrayRead { lhs, arr, index } => {
                let id = self.deref(fr, arr, at)?;
                let i = self.eval_int(fr, index, at)?;
                let v = self.elem(id, i, at)?;
                fr.locals.insert(lhs.clone(), Value::Int(v));
            }
            StmtKind::ArrayWrite { arr, index, value } => {
                let id = self.deref(fr, arr, at)?;
                let i = self.eval_int(fr, index, at)?;
                self.elem(id, i, at)?;
                let v = self.eval_int(fr, value, at)?;
                self.heap[id].elems.as_mut().unwrap()[i as usize] = v;
            }
            StmtKind::Call { lhs, recv, method, args } => {
                let r = self.deref(fr, recv, at)?;
                let mut vals = Vec::new();
                for a in args {
                    vals.push(self.eval(fr, a, at)?);
                }
                let class = self.heap[r].class.clone();
                let target = self.prog.dispatch(&class, method).expect("validated call");
                let v = self.invoke(target, r, vals, Some(at), Some(fr.id))?;
                if let Some(x) = lhs {
                    fr.locals.insert(x.clone(), v);
                }
            }
            StmtKind::If { cond, then_body, else_body } => {
                if self.test(fr, cond, at)? {
                    self.block(fr, then_body)?;
                } else {
                    self.block(fr, else_body)?;
                }
            }
            StmtKind::While { cond, body } => {
                while self.test(fr, cond, at)? {
                    self.block(fr, body)?;
                    self.tick()?;
                    self.record(fr, EventKind::At(at));
                }
            }
        }
        Ok(())
    }

    fn test(&self, fr: &Frame, c: &Cond, at: StmtId) -> Step<bool> {
        let a = self.eval_int(fr, &c.lhs, at)?;
        let b = self.eval_int(fr, &c.rhs, at)?;
        Ok(c.op.eval(&a, &b))
    }

    fn invoke(&mut self, m: MethodRef, this: ObjId, args: Vec<Value>, site: Option<StmtId>, caller: Option<usize>) -> Step<Value> {
        let def = self.prog.method(&m).expect("dispatched method exists");
        let id = self.frames.len();
        self.frames.push(FrameInfo { method: m, call_site: site, recv_class: self.heap[this].class.clone(), caller });
        let mut locals = BTreeMap::new();
        locals.insert(Name::from("this"), Value::Ref(Some(this)));
        for (p, v) in def.params.iter().zip(args) {
            locals.insert(p.name.clone(), v);
        }
        for l in &def.locals {
            locals.insert(l.name.clone(), Value::default_for(&l.ty));
        }
        let mut fr = Frame { id, locals };
        self.block(&mut fr, &def.body)?;
        let v = self.eval(&fr, &def.ret, def.body.last().map_or(0, |s| s.id)).map_err(|e| match e {
            Stop::Overflow(_) => Stop::Overflow(None),
            other => other,
        })?;
        self.record(&fr, EventKind::Exit(v.clone()));
        Ok(v)
    }
}

/// Runs the entry method with a step budget. Deterministic.
pub fn concrete_eval(p: &Program, fuel: u64) -> Trace {
    let mut m = Machine { prog: p, heap: Vec::new(), frames: Vec::new(), events: Vec::new(), fuel };
    let this = m.new_obj(ENTRY_CLASS.into(), Site::Entry, None);
    let outcome = match m.invoke(p.entry(), this, vec![], None, None) {
        Ok(v) => Outcome::Returned(v),
        Err(Stop::Fuel) => Outcome::OutOfFuel,
        Err(Stop::Trap(stmt, kind)) => Outcome::Trap { stmt, kind },
        Err(Stop::Overflow(stmt)) => Outcome::Overflow { stmt },
    };
    Trace { frames: m.frames, events: m.events, outcome }
}
