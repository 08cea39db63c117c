use std::fmt;

pub use crate::numdom::{CmpOp, Name};

/// Source position, 1-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Program point: statements are numbered in textual order per program.
pub type StmtId = u32;

/// Name of the builtin length field of arrays and strings.
pub const LENGTH: &str = "length";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Int,
    IntArray,
    Str,
    Class(Name),
}

impl Type {
    pub fn is_int(&self) -> bool {
        matches!(self, Type::Int)
    }

    pub fn is_ref(&self) -> bool {
        !self.is_int()
    }

    /// Class name used for heap objects of this type.
    pub fn class_name(&self) -> Option<Name> {
        match self {
            Type::Int => None,
            Type::IntArray => Some(ARRAY_CLASS.into()),
            Type::Str => Some(STRING_CLASS.into()),
            Type::Class(c) => Some(c.clone()),
        }
    }
}

pub const ARRAY_CLASS: &str = "int[]";
pub const STRING_CLASS: &str = "String";

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => write!(f, "int"),
            Type::IntArray => write!(f, "int[]"),
            Type::Str => write!(f, "String"),
            Type::Class(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(Name),
    Int(i64),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// `e.f`; `e.length` on arrays and strings.
    Field(Box<Expr>, Name),
    /// `a[i]`
    Index(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(x: &str) -> Self {
        Expr::Var(x.into())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// No heap access anywhere inside.
    pub fn is_simple(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::Int(_) => true,
            Expr::Bin(_, a, b) => a.is_simple() && b.is_simple(),
            Expr::Field(..) | Expr::Index(..) => false,
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Expr::Var(_) | Expr::Int(_))
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Expr::Var(x) => Some(x),
            _ => None,
        }
    }

    pub fn mentions(&self, x: &str) -> bool {
        match self {
            Expr::Var(v) => &**v == x,
            Expr::Int(_) => false,
            Expr::Bin(_, a, b) | Expr::Index(a, b) => a.mentions(x) || b.mentions(x),
            Expr::Field(a, _) => a.mentions(x),
        }
    }

    pub fn vars(&self, out: &mut Vec<Name>) {
        match self {
            Expr::Var(v) => out.push(v.clone()),
            Expr::Int(_) => {}
            Expr::Bin(_, a, b) | Expr::Index(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Expr::Field(a, _) => a.vars(out),
        }
    }
}

/// `lhs op rhs` in branch and loop conditions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cond {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

#[derive(Clone, Debug)]
pub struct Stmt {
    pub id: StmtId,
    pub pos: Pos,
    pub kind: StmtKind,
}

/// Positions are diagnostics only and do not take part in equality.
impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.kind == other.kind
    }
}

impl Eq for Stmt {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Assign { lhs: Name, rhs: Expr },
    Alloc { lhs: Name, class: Name },
    AllocArray { lhs: Name, len: Expr },
    StrLit { lhs: Name, value: String },
    FieldRead { lhs: Name, obj: Expr, field: Name },
    FieldWrite { obj: Expr, field: Name, value: Expr },
    ArrayRead { lhs: Name, arr: Expr, index: Expr },
    ArrayWrite { arr: Expr, index: Expr, value: Expr },
    Call { lhs: Option<Name>, recv: Expr, method: Name, args: Vec<Expr> },
    If { cond: Cond, then_body: Vec<Stmt>, else_body: Vec<Stmt> },
    While { cond: Cond, body: Vec<Stmt> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: Name,
    pub ty: Type,
}

#[derive(Clone, Debug)]
pub struct MethodDef {
    pub name: Name,
    pub ret_ty: Type,
    pub params: Vec<Param>,
    pub locals: Vec<Param>,
    pub body: Vec<Stmt>,
    pub ret: Expr,
    pub pos: Pos,
}

impl PartialEq for MethodDef {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name
            && self.ret_ty == o.ret_ty
            && self.params == o.params
            && self.locals == o.locals
            && self.body == o.body
            && self.ret == o.ret
    }
}

impl Eq for MethodDef {}

impl MethodDef {
    /// Declared type of a parameter or local.
    pub fn var_type(&self, x: &str) -> Option<&Type> {
        self.params.iter().chain(self.locals.iter()).find(|p| &*p.name == x).map(|p| &p.ty)
    }

    pub fn stmts(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        walk(&self.body, &mut |s| out.push(s));
        out
    }
}

/// Visits statements in textual order, parents before children.
pub fn walk<'a>(body: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in body {
        f(s);
        match &s.kind {
            StmtKind::If { then_body, else_body, .. } => {
                walk(then_body, f);
                walk(else_body, f);
            }
            StmtKind::While { body, .. } => walk(body, f),
            _ => {}
        }
    }
}

pub fn walk_mut(body: &mut [Stmt], f: &mut impl FnMut(&mut Stmt)) {
    for s in body {
        f(s);
        match &mut s.kind {
            StmtKind::If { then_body, else_body, .. } => {
                walk_mut(then_body, f);
                walk_mut(else_body, f);
            }
            StmtKind::While { body, .. } => walk_mut(body, f),
            _ => {}
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClassDef {
    pub name: Name,
    pub superclass: Option<Name>,
    pub fields: Vec<Param>,
    pub methods: Vec<MethodDef>,
    pub is_library: bool,
    pub pos: Pos,
}

impl PartialEq for ClassDef {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name
            && self.superclass == o.superclass
            && self.fields == o.fields
            && self.methods == o.methods
            && self.is_library == o.is_library
    }
}

impl Eq for ClassDef {}

impl ClassDef {
    pub fn numeric_fields(&self) -> impl Iterator<Item = &Name> {
        self.fields.iter().filter(|f| f.ty.is_int()).map(|f| &f.name)
    }

    pub fn object_fields(&self) -> impl Iterator<Item = &Param> {
        self.fields.iter().filter(|f| f.ty.is_ref())
    }

    pub fn method(&self, m: &str) -> Option<&MethodDef> {
        self.methods.iter().find(|d| &*d.name == m)
    }
}

/// Identifies a source method by defining class and name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodRef {
    pub class: Name,
    pub method: Name,
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.method)
    }
}

pub const ENTRY_CLASS: &str = "Main";
pub const ENTRY_METHOD: &str = "main";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub classes: Vec<ClassDef>,
}

impl Program {
    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| &*c.name == name)
    }

    pub fn entry(&self) -> MethodRef {
        MethodRef { class: ENTRY_CLASS.into(), method: ENTRY_METHOD.into() }
    }

    pub fn method(&self, m: &MethodRef) -> Option<&MethodDef> {
        self.class(&m.class)?.method(&m.method)
    }

    /// `name` followed by its superclasses.
    pub fn ancestors(&self, name: &str) -> Vec<Name> {
        let mut out = Vec::new();
        let mut cur = self.class(name);
        while let Some(c) = cur {
            if out.contains(&c.name) {
                break;
            }
            out.push(c.name.clone());
            cur = c.superclass.as_deref().and_then(|s| self.class(s));
        }
        out
    }

    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        self.ancestors(sub).iter().any(|c| &**c == sup)
    }

    /// Declared type of field `f` in class `c` or an ancestor; `length` for
    /// arrays and strings.
    pub fn field_type(&self, c: &str, f: &str) -> Option<Type> {
        if (c == ARRAY_CLASS || c == STRING_CLASS) && f == LENGTH {
            return Some(Type::Int);
        }
        for a in self.ancestors(c) {
            if let Some(p) = self.class(&a).unwrap().fields.iter().find(|p| &*p.name == f) {
                return Some(p.ty.clone());
            }
        }
        None
    }

    /// All fields of `c` including inherited ones, ancestors first.
    pub fn all_fields(&self, c: &str) -> Vec<Param> {
        let mut out = Vec::new();
        for a in self.ancestors(c).into_iter().rev() {
            out.extend(self.class(&a).unwrap().fields.iter().cloned());
        }
        out
    }

    /// Dynamic dispatch: the definition of `m` that runs for a receiver of
    /// runtime class `c`.
    pub fn dispatch(&self, c: &str, m: &str) -> Option<MethodRef> {
        self.ancestors(c)
            .into_iter()
            .find(|a| self.class(a).unwrap().method(m).is_some())
            .map(|class| MethodRef { class, method: m.into() })
    }

    pub fn methods(&self) -> impl Iterator<Item = (MethodRef, &MethodDef)> {
        self.classes.iter().flat_map(|c| {
            c.methods.iter().map(move |m| (MethodRef { class: c.name.clone(), method: m.name.clone() }, m))
        })
    }

    pub fn is_library(&self, m: &MethodRef) -> bool {
        self.class(&m.class).is_some_and(|c| c.is_library)
    }

    /// Static type of variable `x` inside method `m`.
    pub fn var_type(&self, m: &MethodRef, x: &str) -> Option<Type> {
        if x == "this" {
            return Some(Type::Class(m.class.clone()));
        }
        self.method(m)?.var_type(x).cloned()
    }

    /// Every statement of the program by id.
    pub fn stmt_index(&self) -> std::collections::BTreeMap<StmtId, (MethodRef, &Stmt)> {
        let mut out = std::collections::BTreeMap::new();
        for (r, m) in self.methods() {
            walk(&m.body, &mut |s| {
                out.insert(s.id, (r.clone(), s));
            });
        }
        out
    }
}
