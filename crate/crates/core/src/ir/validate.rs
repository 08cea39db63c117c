use std::collections::BTreeSet;

use super::ast::*;
use super::IrError;

type VResult<T> = Result<T, IrError>;

fn dup(pos: Pos, what: String) -> IrError {
    IrError::Duplicate { pos, what }
}

fn unknown(pos: Pos, what: String) -> IrError {
    IrError::Unknown { pos, what }
}

fn type_err(pos: Pos, msg: String) -> IrError {
    IrError::Type { pos, msg }
}

/// Whether a value of type `from` may be stored where `to` is expected.
pub fn assignable(p: &Program, to: &Type, from: &Type) -> bool {
    match (to, from) {
        (Type::Class(a), Type::Class(b)) => p.is_subclass(b, a),
        _ => to == from,
    }
}

/// Static type of `e` inside method `m`.
pub fn type_of(p: &Program, m: &MethodRef, e: &Expr, pos: Pos) -> VResult<Type> {
    match e {
        Expr::Var(x) => p.var_type(m, x).ok_or_else(|| unknown(pos, format!("variable {x} in {m}"))),
        Expr::Int(_) => Ok(Type::Int),
        Expr::Bin(op, a, b) => {
            for s in [a, b] {
                let t = type_of(p, m, s, pos)?;
                if !t.is_int() {
                    return Err(type_err(pos, format!("operand of '{}' has type {t}", op.symbol())));
                }
            }
            Ok(Type::Int)
        }
        Expr::Field(obj, f) => {
            let t = type_of(p, m, obj, pos)?;
            let c = t.class_name().ok_or_else(|| type_err(pos, format!("field access .{f} on int")))?;
            p.field_type(&c, f).ok_or_else(|| unknown(pos, format!("field {f} of {c}")))
        }
        Expr::Index(a, i) => {
            if type_of(p, m, a, pos)? != Type::IntArray {
                return Err(type_err(pos, "indexing a non-array".into()));
            }
            if !type_of(p, m, i, pos)?.is_int() {
                return Err(type_err(pos, "array index must be int".into()));
            }
            Ok(Type::Int)
        }
    }
}

fn check_type_exists(p: &Program, t: &Type, pos: Pos) -> VResult<()> {
    if let Type::Class(c) = t {
        if p.class(c).is_none() {
            return Err(unknown(pos, format!("class {c}")));
        }
    }
    Ok(())
}

fn expect(p: &Program, to: &Type, from: &Type, pos: Pos, what: &str) -> VResult<()> {
    if assignable(p, to, from) {
        Ok(())
    } else {
        Err(type_err(pos, format!("{what}: expected {to}, found {from}")))
    }
}

fn check_int(p: &Program, m: &MethodRef, e: &Expr, pos: Pos, what: &str) -> VResult<()> {
    let t = type_of(p, m, e, pos)?;
    expect(p, &Type::Int, &t, pos, what)
}

fn var_ty(p: &Program, m: &MethodRef, x: &str, pos: Pos) -> VResult<Type> {
    p.var_type(m, x).ok_or_else(|| unknown(pos, format!("variable {x} in {m}")))
}

fn check_stmt(p: &Program, m: &MethodRef, s: &Stmt) -> VResult<()> {
    let pos = s.pos;
    match &s.kind {
        StmtKind::Assign { lhs, rhs } => {
            if lhs.as_ref() == "this" {
                return Err(type_err(pos, "cannot assign to this".into()));
            }
            let to = var_ty(p, m, lhs, pos)?;
            let from = type_of(p, m, rhs, pos)?;
            expect(p, &to, &from, pos, "assignment")
        }
        StmtKind::Alloc { lhs, class } => {
            if p.class(class).is_none() {
                return Err(unknown(pos, format!("class {class}")));
            }
            let to = var_ty(p, m, lhs, pos)?;
            expect(p, &to, &Type::Class(class.clone()), pos, "allocation")
        }
        StmtKind::AllocArray { lhs, len } => {
            check_int(p, m, len, pos, "array length")?;
            let to = var_ty(p, m, lhs, pos)?;
            expect(p, &to, &Type::IntArray, pos, "array allocation")
        }
        StmtKind::StrLit { lhs, .. } => {
            let to = var_ty(p, m, lhs, pos)?;
            expect(p, &to, &Type::Str, pos, "string literal")
        }
        StmtKind::FieldRead { lhs, obj, field } => {
            let to = var_ty(p, m, lhs, pos)?;
            let from = type_of(p, m, &Expr::Field(Box::new(obj.clone()), field.clone()), pos)?;
            expect(p, &to, &from, pos, "field read")
        }
        StmtKind::FieldWrite { obj, field, value } => {
            let ot = type_of(p, m, obj, pos)?;
            if matches!(ot, Type::IntArray | Type::Str) {
                return Err(type_err(pos, "length is read-only".into()));
            }
            let to = type_of(p, m, &Expr::Field(Box::new(obj.clone()), field.clone()), pos)?;
            let from = type_of(p, m, value, pos)?;
            expect(p, &to, &from, pos, "field write")
        }
        StmtKind::ArrayRead { lhs, arr, index } => {
            let to = var_ty(p, m, lhs, pos)?;
            let from = type_of(p, m, &Expr::Index(Box::new(arr.clone()), Box::new(index.clone())), pos)?;
            expect(p, &to, &from, pos, "array read")
        }
        StmtKind::ArrayWrite { arr, index, value } => {
            type_of(p, m, &Expr::Index(Box::new(arr.clone()), Box::new(index.clone())), pos)?;
            check_int(p, m, value, pos, "array element")
        }
        StmtKind::Call { lhs, recv, method, args } => {
            let rt = type_of(p, m, recv, pos)?;
            let Type::Class(c) = rt else {
                return Err(type_err(pos, format!("call of {method} on {rt}")));
            };
            let target = p.dispatch(&c, method).ok_or_else(|| unknown(pos, format!("method {method} of {c}")))?;
            let def = p.method(&target).unwrap();
            if def.params.len() != args.len() {
                return Err(type_err(
                    pos,
                    format!("{target} takes {} arguments, {} given", def.params.len(), args.len()),
                ));
            }
            for (a, f) in args.iter().zip(&def.params) {
                let t = type_of(p, m, a, pos)?;
                expect(p, &f.ty, &t, pos, "argument")?;
            }
            if let Some(x) = lhs {
                let to = var_ty(p, m, x, pos)?;
                expect(p, &to, &def.ret_ty, pos, "call result")?;
            }
            Ok(())
        }
        StmtKind::If { cond, then_body, else_body } => {
            check_int(p, m, &cond.lhs, pos, "condition")?;
            check_int(p, m, &cond.rhs, pos, "condition")?;
            for t in then_body.iter().chain(else_body) {
                check_stmt(p, m, t)?;
            }
            Ok(())
        }
        StmtKind::While { cond, body } => {
            check_int(p, m, &cond.lhs, pos, "condition")?;
            check_int(p, m, &cond.rhs, pos, "condition")?;
            for t in body {
                check_stmt(p, m, t)?;
            }
            Ok(())
        }
    }
}

/// Checks names, the class hierarchy and types.
pub fn validate(p: &Program) -> VResult<()> {
    let mut names = BTreeSet::new();
    for c in &p.classes {
        if [STRING_CLASS, ARRAY_CLASS].contains(&&*c.name) || !names.insert(c.name.clone()) {
            return Err(dup(c.pos, format!("class {}", c.name)));
        }
    }
    for c in &p.classes {
        if let Some(s) = &c.superclass {
            if p.class(s).is_none() {
                return Err(unknown(c.pos, format!("class {s}")));
            }
        }
        // Following superclasses must terminate.
        let mut seen = BTreeSet::new();
        let mut cur = Some(c);
        while let Some(k) = cur {
            if !seen.insert(k.name.clone()) {
                return Err(type_err(c.pos, format!("cyclic inheritance through {}", c.name)));
            }
            cur = k.superclass.as_deref().and_then(|s| p.class(s));
        }
    }
    for c in &p.classes {
        let mut fields = BTreeSet::new();
        for f in &c.fields {
            check_type_exists(p, &f.ty, c.pos)?;
            if &*f.name == LENGTH || !fields.insert(f.name.clone()) {
                return Err(dup(c.pos, format!("field {} in {}", f.name, c.name)));
            }
            if let Some(sup) = &c.superclass {
                if p.field_type(sup, &f.name).is_some() {
                    return Err(dup(c.pos, format!("field {} in {} shadows an inherited field", f.name, c.name)));
                }
            }
        }
        let mut methods = BTreeSet::new();
        for m in &c.methods {
            if !methods.insert(m.name.clone()) {
                return Err(dup(m.pos, format!("method {} in {}", m.name, c.name)));
            }
            check_type_exists(p, &m.ret_ty, m.pos)?;
            let mut vars = BTreeSet::new();
            for v in m.params.iter().chain(&m.locals) {
                check_type_exists(p, &v.ty, m.pos)?;
                if &*v.name == "this" || !vars.insert(v.name.clone()) {
                    return Err(dup(m.pos, format!("variable {} in {}.{}", v.name, c.name, m.name)));
                }
            }
            if let Some(sup) = &c.superclass {
                if let Some(over) = p.dispatch(sup, &m.name) {
                    let o = p.method(&over).unwrap();
                    let sig = |d: &MethodDef| (d.ret_ty.clone(), d.params.iter().map(|q| q.ty.clone()).collect::<Vec<_>>());
                    if sig(o) != sig(m) {
                        return Err(type_err(m.pos, format!("{}.{} overrides {over} with a different signature", c.name, m.name)));
                    }
                }
            }
        }
    }
    match p.class(ENTRY_CLASS).and_then(|c| c.method(ENTRY_METHOD)) {
        Some(m) if m.params.is_empty() => {}
        Some(m) => return Err(type_err(m.pos, "entry method main must take no parameters".into())),
        None => return Err(unknown(Pos::default(), format!("entry method {ENTRY_CLASS}.{ENTRY_METHOD}"))),
    }
    for (r, m) in p.methods() {
        for s in &m.body {
            check_stmt(p, &r, s)?;
        }
        let t = type_of(p, &r, &m.ret, m.pos)?;
        expect(p, &m.ret_ty, &t, m.pos, "return value")?;
    }
    Ok(())
}
