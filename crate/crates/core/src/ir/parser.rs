use super::ast::*;
use super::lexer::{lex, Tok};
use super::IrError;

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

/// A postfix chain that may end in a call.
enum Post {
    E(Expr),
    Call { recv: Expr, method: Name, args: Vec<Expr> },
}

type PResult<T> = Result<T, IrError>;

const KEYWORDS: &[&str] = &["class", "extends", "library", "int", "String", "new", "if", "else", "while", "return"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let found = match self.peek() {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Int(v) => format!("'{v}'"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::Eof => "end of input".to_string(),
        };
        Err(IrError::Syntax { pos: self.pos(), msg: format!("{}, found {found}", msg.into()) })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}'"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected '{k}'"))
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s.into())
            }
            _ => self.err("expected identifier"),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut classes = Vec::new();
        while *self.peek() != Tok::Eof {
            classes.push(self.class()?);
        }
        Ok(Program { classes })
    }

    fn class(&mut self) -> PResult<ClassDef> {
        let pos = self.pos();
        let is_library = if self.is_kw("library") {
            self.bump();
            true
        } else {
            false
        };
        self.expect_kw("class")?;
        let name = self.ident()?;
        let superclass = if self.is_kw("extends") {
            self.bump();
            Some(self.ident()?)
        } else {
            None
        };
        self.expect_sym("{")?;
        let mut fields = Vec::new();
        let mut methods = Vec::new();
        while !self.eat_sym("}") {
            let mpos = self.pos();
            let ty = self.ty()?;
            let id = self.ident()?;
            if self.eat_sym("(") {
                methods.push(self.method(ty, id, mpos)?);
            } else {
                self.expect_sym(";")?;
                fields.push(Param { name: id, ty });
            }
        }
        Ok(ClassDef { name, superclass, fields, methods, is_library, pos })
    }

    fn ty(&mut self) -> PResult<Type> {
        if self.is_kw("int") {
            self.bump();
            if self.is_sym("[") && matches!(self.peek_at(1), Tok::Sym("]")) {
                self.bump();
                self.bump();
                return Ok(Type::IntArray);
            }
            return Ok(Type::Int);
        }
        if self.is_kw("String") {
            self.bump();
            return Ok(Type::Str);
        }
        Ok(Type::Class(self.ident()?))
    }

    fn starts_decl(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) if s == "int" || s == "String" => true,
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && s != "this" => {
                matches!(self.peek_at(1), Tok::Ident(t) if !KEYWORDS.contains(&t.as_str()))
            }
            _ => false,
        }
    }

    fn method(&mut self, ret_ty: Type, name: Name, pos: Pos) -> PResult<MethodDef> {
        let mut params = Vec::new();
        if !self.eat_sym(")") {
            loop {
                let ty = self.ty()?;
                let name = self.ident()?;
                params.push(Param { name, ty });
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        self.expect_sym("{")?;
        let mut locals = Vec::new();
        let mut body = Vec::new();
        while !self.is_kw("return") {
            if self.is_sym("}") || *self.peek() == Tok::Eof {
                return self.err("expected 'return' as the last statement of the method");
            }
            self.item(&mut locals, &mut body)?;
        }
        self.bump();
        let ret = self.expr()?;
        self.expect_sym(";")?;
        self.expect_sym("}")?;
        Ok(MethodDef { name, ret_ty, params, locals, body, ret, pos })
    }

    /// A declaration or statement inside a method body.
    fn item(&mut self, locals: &mut Vec<Param>, out: &mut Vec<Stmt>) -> PResult<()> {
        if self.starts_decl() {
            let ty = self.ty()?;
            let pos = self.pos();
            let name = self.ident()?;
            locals.push(Param { name: name.clone(), ty });
            if self.eat_sym(":=") {
                let kind = self.assign_rhs(Expr::Var(name))?;
                out.push(Stmt { id: 0, pos, kind });
            }
            return self.expect_sym(";");
        }
        let pos = self.pos();
        if self.is_kw("if") {
            self.bump();
            self.expect_sym("(")?;
            let cond = self.cond()?;
            self.expect_sym(")")?;
            let then_body = self.block(locals)?;
            let else_body = if self.is_kw("else") {
                self.bump();
                self.block(locals)?
            } else {
                Vec::new()
            };
            out.push(Stmt { id: 0, pos, kind: StmtKind::If { cond, then_body, else_body } });
            return Ok(());
        }
        if self.is_kw("while") {
            self.bump();
            self.expect_sym("(")?;
            let cond = self.cond()?;
            self.expect_sym(")")?;
            let body = self.block(locals)?;
            out.push(Stmt { id: 0, pos, kind: StmtKind::While { cond, body } });
            return Ok(());
        }
        let kind = match self.postfix()? {
            Post::Call { recv, method, args } => StmtKind::Call { lhs: None, recv, method, args },
            Post::E(lhs) => {
                self.expect_sym(":=")?;
                self.assign_rhs(lhs)?
            }
        };
        out.push(Stmt { id: 0, pos, kind });
        self.expect_sym(";")
    }

    fn block(&mut self, locals: &mut Vec<Param>) -> PResult<Vec<Stmt>> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.eat_sym("}") {
            if *self.peek() == Tok::Eof {
                return self.err("expected '}'");
            }
            if self.is_kw("return") {
                return self.err("'return' is only allowed as the last statement of a method");
            }
            self.item(locals, &mut out)?;
        }
        Ok(out)
    }

    fn assign_rhs(&mut self, lhs: Expr) -> PResult<StmtKind> {
        let pos = self.pos();
        match lhs {
            Expr::Var(x) => {
                if self.is_kw("new") {
                    self.bump();
                    if self.is_kw("int") {
                        self.bump();
                        self.expect_sym("[")?;
                        let len = self.expr()?;
                        self.expect_sym("]")?;
                        return Ok(StmtKind::AllocArray { lhs: x, len });
                    }
                    let class = self.ident()?;
                    self.expect_sym("(")?;
                    self.expect_sym(")")?;
                    return Ok(StmtKind::Alloc { lhs: x, class });
                }
                if let Tok::Str(s) = self.peek().clone() {
                    self.bump();
                    return Ok(StmtKind::StrLit { lhs: x, value: s });
                }
                Ok(match self.sum_or_call()? {
                    Post::Call { recv, method, args } => StmtKind::Call { lhs: Some(x), recv, method, args },
                    Post::E(Expr::Field(obj, field)) => StmtKind::FieldRead { lhs: x, obj: *obj, field },
                    Post::E(Expr::Index(arr, index)) => StmtKind::ArrayRead { lhs: x, arr: *arr, index: *index },
                    Post::E(rhs) => StmtKind::Assign { lhs: x, rhs },
                })
            }
            Expr::Field(obj, field) => {
                let value = self.plain_expr("field")?;
                Ok(StmtKind::FieldWrite { obj: *obj, field, value })
            }
            Expr::Index(arr, index) => {
                let value = self.plain_expr("array element")?;
                Ok(StmtKind::ArrayWrite { arr: *arr, index: *index, value })
            }
            _ => Err(IrError::Syntax { pos, msg: "left-hand side must be a variable, field or array element".into() }),
        }
    }

    fn plain_expr(&mut self, what: &str) -> PResult<Expr> {
        if self.is_kw("new") || matches!(self.peek(), Tok::Str(_)) {
            return self.err(format!("a {what} can only be assigned an expression; assign allocations to a variable first"));
        }
        match self.sum_or_call()? {
            Post::E(e) => Ok(e),
            Post::Call { .. } => self.err(format!("a {what} cannot be assigned a call result directly")),
        }
    }

    fn sum_or_call(&mut self) -> PResult<Post> {
        let start = self.at;
        if let Post::Call { recv, method, args } = self.postfix()? {
            if self.is_sym(";") {
                return Ok(Post::Call { recv, method, args });
            }
            return self.err("calls may only appear as a whole statement or right-hand side");
        }
        self.at = start;
        Ok(Post::E(self.expr()?))
    }

    fn cond(&mut self) -> PResult<Cond> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym(">") => CmpOp::Gt,
            _ => return self.err("expected comparison operator"),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Cond { lhs, op, rhs })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.term()?;
        loop {
            let op = if self.is_sym("+") {
                BinOp::Add
            } else if self.is_sym("-") {
                BinOp::Sub
            } else {
                return Ok(e);
            };
            self.bump();
            let r = self.term()?;
            e = Expr::bin(op, e, r);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        while self.eat_sym("*") {
            let r = self.unary()?;
            e = Expr::bin(BinOp::Mul, e, r);
        }
        Ok(e)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_sym("-") {
            if let Tok::Int(v) = *self.peek() {
                self.bump();
                return Ok(Expr::Int(-v));
            }
            let e = self.unary()?;
            return Ok(Expr::bin(BinOp::Sub, Expr::Int(0), e));
        }
        match self.postfix()? {
            Post::E(e) => Ok(e),
            Post::Call { .. } => self.err("calls may only appear as a whole statement or right-hand side"),
        }
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if self.eat_sym(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_sym(")") {
                return Ok(args);
            }
            self.expect_sym(",")?;
        }
    }

    fn postfix(&mut self) -> PResult<Post> {
        let mut e = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Expr::Int(v)
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                e
            }
            Tok::Ident(s) if s == "this" => {
                self.bump();
                Expr::var("this")
            }
            Tok::Ident(_) => {
                let x = self.ident()?;
                if self.eat_sym("(") {
                    let args = self.args()?;
                    return Ok(Post::Call { recv: Expr::var("this"), method: x, args });
                }
                Expr::Var(x)
            }
            _ => return self.err("expected expression"),
        };
        loop {
            if self.eat_sym(".") {
                let f = match self.peek().clone() {
                    Tok::Ident(s) if s == LENGTH => {
                        self.bump();
                        s.into()
                    }
                    _ => self.ident()?,
                };
                if self.eat_sym("(") {
                    let args = self.args()?;
                    return Ok(Post::Call { recv: e, method: f, args });
                }
                e = Expr::Field(Box::new(e), f);
            } else if self.eat_sym("[") {
                let i = self.expr()?;
                self.expect_sym("]")?;
                e = Expr::Index(Box::new(e), Box::new(i));
            } else {
                return Ok(Post::E(e));
            }
        }
    }
}

/// Parses source text without semantic checks.
pub fn parse_syntax(src: &str) -> Result<Program, IrError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, at: 0 };
    let mut prog = p.program()?;
    renumber(&mut prog);
    Ok(prog)
}

/// Assigns statement ids in textual order.
pub fn renumber(p: &mut Program) {
    let mut next = 0;
    for c in &mut p.classes {
        for m in &mut c.methods {
            walk_mut(&mut m.body, &mut |s| {
                s.id = next;
                next += 1;
            });
        }
    }
}
