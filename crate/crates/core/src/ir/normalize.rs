use std::collections::BTreeSet;

use super::ast::*;
use super::parser::renumber;
use super::validate::type_of;

struct Ctx<'a> {
    prog: &'a Program,
    mref: MethodRef,
    method: MethodDef,
    used: BTreeSet<Name>,
    next: u32,
}

impl Ctx<'_> {
    fn fresh(&mut self, ty: Type) -> Name {
        loop {
            let n: Name = format!("_t{}", self.next).into();
            self.next += 1;
            if self.used.insert(n.clone()) {
                self.method.locals.push(Param { name: n.clone(), ty });
                return n;
            }
        }
    }

    fn ty(&self, e: &Expr) -> Type {
        // Locals added so far are visible through the working copy.
        if let Expr::Var(x) = e {
            if x.as_ref() == "this" {
                return Type::Class(self.mref.class.clone());
            }
            if let Some(t) = self.method.var_type(x) {
                return t.clone();
            }
        }
        let mut p = self.prog.clone();
        let c = p.classes.iter_mut().find(|c| c.name == self.mref.class).unwrap();
        let m = c.methods.iter_mut().find(|m| m.name == self.mref.method).unwrap();
        m.locals = self.method.locals.clone();
        type_of(&p, &self.mref, e, Pos::default()).expect("normalize runs on validated programs")
    }

    fn stmt(pos: Pos, kind: StmtKind) -> Stmt {
        Stmt { id: 0, pos, kind }
    }

    /// Lowers `e` to an expression without heap accesses.
    fn simple(&mut self, e: &Expr, pos: Pos, pre: &mut Vec<Stmt>) -> Expr {
        match e {
            Expr::Var(_) | Expr::Int(_) => e.clone(),
            Expr::Bin(op, a, b) => {
                let a = self.simple(a, pos, pre);
                let b = self.simple(b, pos, pre);
                Expr::Bin(*op, Box::new(a), Box::new(b))
            }
            Expr::Field(obj, f) => {
                let ty = self.ty(e);
                let o = self.var_of(obj, pos, pre);
                let t = self.fresh(ty);
                pre.push(Self::stmt(pos, StmtKind::FieldRead { lhs: t.clone(), obj: Expr::Var(o), field: f.clone() }));
                Expr::Var(t)
            }
            Expr::Index(a, i) => {
                let av = self.var_of(a, pos, pre);
                let iv = self.atom(i, pos, pre);
                let t = self.fresh(Type::Int);
                pre.push(Self::stmt(pos, StmtKind::ArrayRead { lhs: t.clone(), arr: Expr::Var(av), index: iv }));
                Expr::Var(t)
            }
        }
    }

    fn var_of(&mut self, e: &Expr, pos: Pos, pre: &mut Vec<Stmt>) -> Name {
        if let Expr::Var(x) = e {
            return x.clone();
        }
        let ty = self.ty(e);
        let s = self.simple(e, pos, pre);
        if let Expr::Var(x) = s {
            return x;
        }
        let t = self.fresh(ty);
        pre.push(Self::stmt(pos, StmtKind::Assign { lhs: t.clone(), rhs: s }));
        t
    }

    fn atom(&mut self, e: &Expr, pos: Pos, pre: &mut Vec<Stmt>) -> Expr {
        if e.is_atom() {
            return e.clone();
        }
        Expr::Var(self.var_of(e, pos, pre))
    }

    /// Writes the result into a temporary, then copies it to `lhs`.
    fn through_temp(&mut self, lhs: &Name, pos: Pos, out: &mut Vec<Stmt>, make: impl FnOnce(Name) -> StmtKind) {
        let ty = self.ty(&Expr::Var(lhs.clone()));
        let t = self.fresh(ty);
        out.push(Self::stmt(pos, make(t.clone())));
        out.push(Self::stmt(pos, StmtKind::Assign { lhs: lhs.clone(), rhs: Expr::Var(t) }));
    }

    fn body(&mut self, body: &[Stmt]) -> Vec<Stmt> {
        let mut out = Vec::new();
        for s in body {
            self.one(s, &mut out);
        }
        out
    }

    fn one(&mut self, s: &Stmt, out: &mut Vec<Stmt>) {
        let pos = s.pos;
        match &s.kind {
            StmtKind::Assign { lhs, rhs } => {
                let r = self.simple(rhs, pos, out);
                if r.mentions(lhs) {
                    self.through_temp(lhs, pos, out, |t| StmtKind::Assign { lhs: t, rhs: r });
                } else {
                    out.push(Self::stmt(pos, StmtKind::Assign { lhs: lhs.clone(), rhs: r }));
                }
            }
            StmtKind::Alloc { .. } | StmtKind::StrLit { .. } => out.push(s.clone()),
            StmtKind::AllocArray { lhs, len } => {
                let len = self.atom(len, pos, out);
                out.push(Self::stmt(pos, StmtKind::AllocArray { lhs: lhs.clone(), len }));
            }
            StmtKind::FieldRead { lhs, obj, field } => {
                let o = self.var_of(obj, pos, out);
                let field = field.clone();
                if &o == lhs {
                    self.through_temp(lhs, pos, out, |t| StmtKind::FieldRead { lhs: t, obj: Expr::Var(o), field });
                } else {
                    out.push(Self::stmt(pos, StmtKind::FieldRead { lhs: lhs.clone(), obj: Expr::Var(o), field }));
                }
            }
            StmtKind::FieldWrite { obj, field, value } => {
                let o = self.var_of(obj, pos, out);
                let v = self.simple(value, pos, out);
                out.push(Self::stmt(pos, StmtKind::FieldWrite { obj: Expr::Var(o), field: field.clone(), value: v }));
            }
            StmtKind::ArrayRead { lhs, arr, index } => {
                let a = self.var_of(arr, pos, out);
                let i = self.atom(index, pos, out);
                if i.mentions(lhs) {
                    self.through_temp(lhs, pos, out, |t| StmtKind::ArrayRead { lhs: t, arr: Expr::Var(a), index: i });
                } else {
                    out.push(Self::stmt(pos, StmtKind::ArrayRead { lhs: lhs.clone(), arr: Expr::Var(a), index: i }));
                }
            }
            StmtKind::ArrayWrite { arr, index, value } => {
                let a = self.var_of(arr, pos, out);
                let i = self.atom(index, pos, out);
                let v = self.simple(value, pos, out);
                out.push(Self::stmt(pos, StmtKind::ArrayWrite { arr: Expr::Var(a), index: i, value: v }));
            }
            StmtKind::Call { lhs, recv, method, args } => {
                let r = self.var_of(recv, pos, out);
                let args: Vec<Expr> = args.iter().map(|a| self.atom(a, pos, out)).collect();
                let recv = Expr::Var(r.clone());
                let method = method.clone();
                match lhs {
                    Some(x) if *x == r || args.iter().any(|a| a.mentions(x)) => {
                        self.through_temp(x, pos, out, |t| StmtKind::Call { lhs: Some(t), recv, method, args });
                    }
                    _ => out.push(Self::stmt(pos, StmtKind::Call { lhs: lhs.clone(), recv, method, args })),
                }
            }
            StmtKind::If { cond, then_body, else_body } => {
                let cond = self.cond(cond, pos, out);
                let then_body = self.body(then_body);
                let else_body = self.body(else_body);
                out.push(Self::stmt(pos, StmtKind::If { cond, then_body, else_body }));
            }
            StmtKind::While { cond, body } => {
                let mut pre = Vec::new();
                let c = self.cond(cond, pos, &mut pre);
                let mut body = self.body(body);
                // Heap reads in the condition are re-evaluated after each iteration.
                let again: Vec<Stmt> = pre.clone();
                out.extend(pre);
                body.extend(again);
                out.push(Self::stmt(pos, StmtKind::While { cond: c, body }));
            }
        }
    }

    fn cond(&mut self, c: &Cond, pos: Pos, pre: &mut Vec<Stmt>) -> Cond {
        let lhs = self.simple(&c.lhs, pos, pre);
        let rhs = self.simple(&c.rhs, pos, pre);
        Cond { lhs, op: c.op, rhs }
    }
}

/// Splits heap paths so each statement touches at most one field or element,
/// and routes self-referencing assignments through fresh temporaries.
pub fn normalize(p: &Program) -> Program {
    let mut out = p.clone();
    for (ci, c) in p.classes.iter().enumerate() {
        for (mi, m) in c.methods.iter().enumerate() {
            let mref = MethodRef { class: c.name.clone(), method: m.name.clone() };
            let used = m.params.iter().chain(&m.locals).map(|v| v.name.clone()).collect();
            let mut ctx = Ctx { prog: p, mref, method: m.clone(), used, next: 0 };
            let mut body = ctx.body(&m.body);
            let ret = ctx.simple(&m.ret, m.pos, &mut body);
            let mut nm = ctx.method;
            nm.body = body;
            nm.ret = ret;
            out.classes[ci].methods[mi] = nm;
        }
    }
    renumber(&mut out);
    out
}

/// Whether `p` is already in the shape `normalize` produces.
pub fn is_normalized(p: &Program) -> bool {
    normalize(p) == *p
}
