use std::fmt::Write;

use super::ast::*;

fn prec(op: BinOp) -> u8 {
    match op {
        BinOp::Add | BinOp::Sub => 1,
        BinOp::Mul => 2,
    }
}

pub fn expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Var(x) => out.push_str(x),
        Expr::Int(v) => write!(out, "{v}").unwrap(),
        Expr::Bin(op, a, b) => {
            let p = prec(*op);
            let wrap_l = matches!(&**a, Expr::Bin(o, ..) if prec(*o) < p);
            let wrap_r = matches!(&**b, Expr::Bin(o, ..) if prec(*o) <= p);
            write_wrapped(out, a, wrap_l);
            write!(out, " {} ", op.symbol()).unwrap();
            write_wrapped(out, b, wrap_r);
        }
        Expr::Field(a, f) => {
            write_wrapped(out, a, matches!(&**a, Expr::Bin(..) | Expr::Int(_)));
            write!(out, ".{f}").unwrap();
        }
        Expr::Index(a, i) => {
            write_wrapped(out, a, matches!(&**a, Expr::Bin(..) | Expr::Int(_)));
            out.push('[');
            write_expr(out, i);
            out.push(']');
        }
    }
}

fn write_wrapped(out: &mut String, e: &Expr, wrap: bool) {
    if wrap {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

pub fn cond(c: &Cond) -> String {
    format!("{} {} {}", expr(&c.lhs), c.op.symbol(), expr(&c.rhs))
}

fn call(recv: &Expr, method: &str, args: &[Expr]) -> String {
    let args: Vec<String> = args.iter().map(expr).collect();
    format!("{}.{}({})", expr(recv), method, args.join(", "))
}

/// One-line rendering of a statement header (no nested blocks).
pub fn stmt_head(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Assign { lhs, rhs } => format!("{lhs} := {};", expr(rhs)),
        StmtKind::Alloc { lhs, class } => format!("{lhs} := new {class}();"),
        StmtKind::AllocArray { lhs, len } => format!("{lhs} := new int[{}];", expr(len)),
        StmtKind::StrLit { lhs, value } => format!("{lhs} := \"{value}\";"),
        StmtKind::FieldRead { lhs, obj, field } => {
            format!("{lhs} := {};", expr(&Expr::Field(Box::new(obj.clone()), field.clone())))
        }
        StmtKind::FieldWrite { obj, field, value } => {
            format!("{} := {};", expr(&Expr::Field(Box::new(obj.clone()), field.clone())), expr(value))
        }
        StmtKind::ArrayRead { lhs, arr, index } => {
            format!("{lhs} := {};", expr(&Expr::Index(Box::new(arr.clone()), Box::new(index.clone()))))
        }
        StmtKind::ArrayWrite { arr, index, value } => {
            format!("{} := {};", expr(&Expr::Index(Box::new(arr.clone()), Box::new(index.clone()))), expr(value))
        }
        StmtKind::Call { lhs: Some(x), recv, method, args } => format!("{x} := {};", call(recv, method, args)),
        StmtKind::Call { lhs: None, recv, method, args } => format!("{};", call(recv, method, args)),
        StmtKind::If { cond: c, .. } => format!("if ({})", cond(c)),
        StmtKind::While { cond: c, .. } => format!("while ({})", cond(c)),
    }
}

fn block(out: &mut String, body: &[Stmt], depth: usize) {
    let ind = "  ".repeat(depth);
    for s in body {
        match &s.kind {
            StmtKind::If { then_body, else_body, .. } => {
                writeln!(out, "{ind}{} {{", stmt_head(s)).unwrap();
                block(out, then_body, depth + 1);
                if else_body.is_empty() {
                    writeln!(out, "{ind}}}").unwrap();
                } else {
                    writeln!(out, "{ind}}} else {{").unwrap();
                    block(out, else_body, depth + 1);
                    writeln!(out, "{ind}}}").unwrap();
                }
            }
            StmtKind::While { body, .. } => {
                writeln!(out, "{ind}{} {{", stmt_head(s)).unwrap();
                block(out, body, depth + 1);
                writeln!(out, "{ind}}}").unwrap();
            }
            _ => writeln!(out, "{ind}{}", stmt_head(s)).unwrap(),
        }
    }
}

/// Canonical source text; parsing it yields an equal program.
pub fn program(p: &Program) -> String {
    let mut out = String::new();
    for (i, c) in p.classes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if c.is_library {
            out.push_str("library ");
        }
        write!(out, "class {}", c.name).unwrap();
        if let Some(s) = &c.superclass {
            write!(out, " extends {s}").unwrap();
        }
        out.push_str(" {\n");
        for f in &c.fields {
            writeln!(out, "  {} {};", f.ty, f.name).unwrap();
        }
        for m in &c.methods {
            let params: Vec<String> = m.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
            writeln!(out, "  {} {}({}) {{", m.ret_ty, m.name, params.join(", ")).unwrap();
            for l in &m.locals {
                writeln!(out, "    {} {};", l.ty, l.name).unwrap();
            }
            block(&mut out, &m.body, 2);
            writeln!(out, "    return {};", expr(&m.ret)).unwrap();
            out.push_str("  }\n");
        }
        out.push_str("}\n");
    }
    out
}
