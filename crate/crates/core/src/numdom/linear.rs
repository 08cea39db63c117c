//! Linear forms, constraints and guard expressions shared by both domains.

use std::collections::BTreeMap;
use std::fmt;

use super::scalar::{Ext, Scalar};

/// Relation of a canonical constraint `Σ aᵢ·dᵢ rel b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Le,
    Eq,
}

/// A linear constraint over dimensions `K` in canonical form: terms sorted by
/// dimension, coefficients gcd-reduced, and for equalities the leading
/// coefficient positive.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint<K, T> {
    terms: Vec<(K, T)>,
    rel: Rel,
    bound: T,
}

/// Result of canonicalizing a constraint: it may turn out trivially true or
/// false once all coefficients are known.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Canon<K, T> {
    Always,
    Never,
    Cons(Constraint<K, T>),
}

impl<K: Ord + Clone, T: Scalar> Constraint<K, T> {
    /// Builds `Σ terms rel bound`, merging repeated dimensions.
    pub fn new(terms: impl IntoIterator<Item = (K, T)>, rel: Rel, bound: T) -> Canon<K, T> {
        let mut merged: BTreeMap<K, T> = BTreeMap::new();
        for (k, a) in terms {
            let e = merged.entry(k).or_insert_with(T::zero);
            *e = e.clone() + a;
        }
        let terms: Vec<(K, T)> = merged.into_iter().filter(|(_, a)| !a.is_zero()).collect();
        canonicalize(terms, rel, bound)
    }

    /// `Σ terms ≤ bound`, panicking when trivial. Convenient in tests.
    pub fn le(terms: impl IntoIterator<Item = (K, T)>, bound: T) -> Self {
        match Self::new(terms, Rel::Le, bound) {
            Canon::Cons(c) => c,
            other => panic!("trivial constraint: {:?}", matches!(other, Canon::Always)),
        }
    }

    /// `Σ terms = bound`, panicking when trivial.
    pub fn eq(terms: impl IntoIterator<Item = (K, T)>, bound: T) -> Self {
        match Self::new(terms, Rel::Eq, bound) {
            Canon::Cons(c) => c,
            other => panic!("trivial constraint: {:?}", matches!(other, Canon::Always)),
        }
    }

    /// `d ≥ v`
    pub fn lower(d: K, v: T) -> Self {
        Self::le([(d, -T::one())], -v)
    }

    /// `d ≤ v`
    pub fn upper(d: K, v: T) -> Self {
        Self::le([(d, T::one())], v)
    }

    pub fn terms(&self) -> &[(K, T)] {
        &self.terms
    }

    pub fn rel(&self) -> Rel {
        self.rel
    }

    pub fn bound(&self) -> &T {
        &self.bound
    }

    pub fn coeff(&self, k: &K) -> Option<&T> {
        self.terms.iter().find(|(d, _)| d == k).map(|(_, a)| a)
    }

    pub fn mentions(&self, k: &K) -> bool {
        self.terms.iter().any(|(d, _)| d == k)
    }

    pub fn dims(&self) -> impl Iterator<Item = &K> {
        self.terms.iter().map(|(d, _)| d)
    }

    /// Whether the integer point `value` satisfies this constraint.
    pub fn holds(&self, value: impl Fn(&K) -> T) -> bool {
        let lhs = self
            .terms
            .iter()
            .fold(T::zero(), |acc, (d, a)| acc + a.clone() * value(d));
        match self.rel {
            Rel::Le => lhs <= self.bound,
            Rel::Eq => lhs == self.bound,
        }
    }

    /// Splits an equality into its two inequalities; inequalities pass through.
    pub fn as_inequalities(&self) -> Vec<Constraint<K, T>> {
        match self.rel {
            Rel::Le => vec![self.clone()],
            Rel::Eq => {
                let up = Constraint { terms: self.terms.clone(), rel: Rel::Le, bound: self.bound.clone() };
                let down = Constraint {
                    terms: self.terms.iter().map(|(d, a)| (d.clone(), -a.clone())).collect(),
                    rel: Rel::Le,
                    bound: -self.bound.clone(),
                };
                vec![up, down]
            }
        }
    }

    /// Renames dimensions; the caller guarantees injectivity.
    pub fn map_dims<K2: Ord + Clone>(&self, f: impl Fn(&K) -> K2) -> Constraint<K2, T> {
        match Constraint::new(self.terms.iter().map(|(d, a)| (f(d), a.clone())), self.rel, self.bound.clone()) {
            Canon::Cons(c) => c,
            _ => unreachable!("renaming cannot make a constraint trivial"),
        }
    }
}

fn canonicalize<K, T: Scalar>(mut terms: Vec<(K, T)>, rel: Rel, mut bound: T) -> Canon<K, T> {
    if terms.is_empty() {
        let ok = match rel {
            Rel::Le => !bound.is_negative(),
            Rel::Eq => bound.is_zero(),
        };
        return if ok { Canon::Always } else { Canon::Never };
    }
    let g = terms.iter().fold(T::zero(), |g, (_, a)| g.gcd(a));
    if rel == Rel::Eq {
        if !(bound.clone() % g.clone()).is_zero() {
            return Canon::Never;
        }
        if terms[0].1.is_negative() {
            for (_, a) in terms.iter_mut() {
                *a = -a.clone();
            }
            bound = -bound;
        }
    }
    if !g.is_one() {
        for (_, a) in terms.iter_mut() {
            *a = a.clone() / g.clone();
        }
        bound = match rel {
            Rel::Le => bound.floor_div(&g),
            Rel::Eq => bound / g,
        };
    }
    Canon::Cons(Constraint { terms, rel, bound })
}

impl<K: fmt::Display, T: Scalar> fmt::Display for Constraint<K, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (d, a)) in self.terms.iter().enumerate() {
            let neg = a.is_negative();
            let mag = a.abs();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if mag.is_one() {
                write!(f, "{d}")?;
            } else {
                write!(f, "{mag}*{d}")?;
            }
        }
        let op = match self.rel {
            Rel::Le => "<=",
            Rel::Eq => "=",
        };
        write!(f, " {op} {}", self.bound)
    }
}

/// Inclusive integer bounds; `None` is the corresponding infinity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds<T> {
    pub lo: Option<T>,
    pub hi: Option<T>,
}

impl<T: Scalar> Bounds<T> {
    pub fn top() -> Self {
        Bounds { lo: None, hi: None }
    }

    pub fn exactly(v: T) -> Self {
        Bounds { lo: Some(v.clone()), hi: Some(v) }
    }

    pub fn range(lo: T, hi: T) -> Self {
        Bounds { lo: Some(lo), hi: Some(hi) }
    }

    pub fn singleton(&self) -> Option<&T> {
        match (&self.lo, &self.hi) {
            (Some(a), Some(b)) if a == b => Some(a),
            _ => None,
        }
    }

    pub fn contains(&self, v: &T) -> bool {
        self.lo.as_ref().is_none_or(|l| l <= v) && self.hi.as_ref().is_none_or(|h| v <= h)
    }

    pub(crate) fn lo_ext(&self) -> Ext<T> {
        self.lo.clone().map_or(Ext::NegInf, Ext::Fin)
    }

    pub(crate) fn hi_ext(&self) -> Ext<T> {
        self.hi.clone().map_or(Ext::PosInf, Ext::Fin)
    }
}

impl<T: Scalar> fmt::Display for Bounds<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.lo {
            Some(l) => write!(f, "[{l}, ")?,
            None => write!(f, "(-oo, ")?,
        }
        match &self.hi {
            Some(h) => write!(f, "{h}]"),
            None => write!(f, "+oo)"),
        }
    }
}

/// Comparison operators allowed in guards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn negate(self) -> Self {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
        }
    }

    pub fn eval<T: Ord>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// Integer expression over dimensions, possibly non-linear.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NumExpr<K, T> {
    Dim(K),
    Const(T),
    Add(Box<NumExpr<K, T>>, Box<NumExpr<K, T>>),
    Sub(Box<NumExpr<K, T>>, Box<NumExpr<K, T>>),
    Mul(Box<NumExpr<K, T>>, Box<NumExpr<K, T>>),
}

impl<K: Ord + Clone, T: Scalar> NumExpr<K, T> {
    pub fn dim(k: K) -> Self {
        NumExpr::Dim(k)
    }

    pub fn int(v: i64) -> Self {
        NumExpr::Const(T::from_int(v))
    }

    pub fn add(self, o: Self) -> Self {
        NumExpr::Add(Box::new(self), Box::new(o))
    }

    pub fn sub(self, o: Self) -> Self {
        NumExpr::Sub(Box::new(self), Box::new(o))
    }

    pub fn mul(self, o: Self) -> Self {
        NumExpr::Mul(Box::new(self), Box::new(o))
    }

    pub fn mentions(&self, k: &K) -> bool {
        match self {
            NumExpr::Dim(d) => d == k,
            NumExpr::Const(_) => false,
            NumExpr::Add(a, b) | NumExpr::Sub(a, b) | NumExpr::Mul(a, b) => a.mentions(k) || b.mentions(k),
        }
    }

    pub fn collect_dims(&self, out: &mut Vec<K>) {
        match self {
            NumExpr::Dim(d) => out.push(d.clone()),
            NumExpr::Const(_) => {}
            NumExpr::Add(a, b) | NumExpr::Sub(a, b) | NumExpr::Mul(a, b) => {
                a.collect_dims(out);
                b.collect_dims(out);
            }
        }
    }

    pub fn eval(&self, value: &impl Fn(&K) -> T) -> T {
        match self {
            NumExpr::Dim(d) => value(d),
            NumExpr::Const(c) => c.clone(),
            NumExpr::Add(a, b) => a.eval(value) + b.eval(value),
            NumExpr::Sub(a, b) => a.eval(value) - b.eval(value),
            NumExpr::Mul(a, b) => a.eval(value) * b.eval(value),
        }
    }

    pub fn map_dims<K2: Ord + Clone>(&self, f: &impl Fn(&K) -> K2) -> NumExpr<K2, T> {
        match self {
            NumExpr::Dim(d) => NumExpr::Dim(f(d)),
            NumExpr::Const(c) => NumExpr::Const(c.clone()),
            NumExpr::Add(a, b) => NumExpr::Add(Box::new(a.map_dims(f)), Box::new(b.map_dims(f))),
            NumExpr::Sub(a, b) => NumExpr::Sub(Box::new(a.map_dims(f)), Box::new(b.map_dims(f))),
            NumExpr::Mul(a, b) => NumExpr::Mul(Box::new(a.map_dims(f)), Box::new(b.map_dims(f))),
        }
    }
}

/// `lhs op rhs`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Guard<K, T> {
    pub lhs: NumExpr<K, T>,
    pub op: CmpOp,
    pub rhs: NumExpr<K, T>,
}

impl<K: Ord + Clone, T: Scalar> Guard<K, T> {
    pub fn new(lhs: NumExpr<K, T>, op: CmpOp, rhs: NumExpr<K, T>) -> Self {
        Guard { lhs, op, rhs }
    }

    pub fn negate(&self) -> Self {
        Guard { lhs: self.lhs.clone(), op: self.op.negate(), rhs: self.rhs.clone() }
    }

    pub fn collect_dims(&self, out: &mut Vec<K>) {
        self.lhs.collect_dims(out);
        self.rhs.collect_dims(out);
    }

    pub fn holds(&self, value: &impl Fn(&K) -> T) -> bool {
        self.op.eval(&self.lhs.eval(value), &self.rhs.eval(value))
    }
}

/// `Σ terms + constant`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinExpr<K, T> {
    pub terms: BTreeMap<K, T>,
    pub constant: T,
}

impl<K: Ord + Clone, T: Scalar> LinExpr<K, T> {
    pub fn constant(c: T) -> Self {
        LinExpr { terms: BTreeMap::new(), constant: c }
    }

    pub fn dim(k: K) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(k, T::one());
        LinExpr { terms, constant: T::zero() }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(mut self, o: &Self) -> Self {
        for (k, a) in &o.terms {
            let e = self.terms.entry(k.clone()).or_insert_with(T::zero);
            *e = e.clone() + a.clone();
        }
        self.terms.retain(|_, a| !a.is_zero());
        self.constant = self.constant + o.constant.clone();
        self
    }

    pub fn scale(mut self, c: &T) -> Self {
        if c.is_zero() {
            return LinExpr::constant(T::zero());
        }
        for a in self.terms.values_mut() {
            *a = a.clone() * c.clone();
        }
        self.constant = self.constant * c.clone();
        self
    }

    pub fn neg(self) -> Self {
        self.scale(&-T::one())
    }
}

/// A linear form plus a bounded non-linear remainder: the value lies in
/// `lin + [lo, hi]`.
#[derive(Clone, Debug)]
pub(crate) struct Linearized<K, T> {
    pub lin: LinExpr<K, T>,
    pub lo: Ext<T>,
    pub hi: Ext<T>,
}

impl<K: Ord + Clone, T: Scalar> Linearized<K, T> {
    fn exact(lin: LinExpr<K, T>) -> Self {
        Linearized { lin, lo: Ext::Fin(T::zero()), hi: Ext::Fin(T::zero()) }
    }

    fn is_exact(&self) -> bool {
        self.lo == Ext::Fin(T::zero()) && self.hi == Ext::Fin(T::zero())
    }

    fn add(self, o: Self) -> Self {
        Linearized { lin: self.lin.add(&o.lin), lo: ext_add(&self.lo, &o.lo), hi: ext_add(&self.hi, &o.hi) }
    }

    fn neg(self) -> Self {
        Linearized { lin: self.lin.neg(), lo: ext_neg(&self.hi), hi: ext_neg(&self.lo) }
    }

    fn scale(self, c: &T) -> Self {
        let a = self.lo.mul(&Ext::Fin(c.clone()));
        let b = self.hi.mul(&Ext::Fin(c.clone()));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Linearized { lin: self.lin.scale(c), lo, hi }
    }

    /// Interval of the whole value given per-dimension bounds.
    fn range(&self, bounds: &impl Fn(&K) -> Bounds<T>) -> (Ext<T>, Ext<T>) {
        let (lo, hi) = lin_range(&self.lin, bounds);
        (ext_add(&lo, &self.lo), ext_add(&hi, &self.hi))
    }
}

pub(crate) fn ext_add<T: Scalar>(a: &Ext<T>, b: &Ext<T>) -> Ext<T> {
    match (a, b) {
        (Ext::Fin(x), Ext::Fin(y)) => Ext::Fin(x.clone() + y.clone()),
        (Ext::NegInf, Ext::PosInf) | (Ext::PosInf, Ext::NegInf) => {
            unreachable!("lower and upper ends are never mixed")
        }
        (Ext::NegInf, _) | (_, Ext::NegInf) => Ext::NegInf,
        _ => Ext::PosInf,
    }
}

fn ext_neg<T: Scalar>(a: &Ext<T>) -> Ext<T> {
    match a {
        Ext::NegInf => Ext::PosInf,
        Ext::PosInf => Ext::NegInf,
        Ext::Fin(v) => Ext::Fin(-v.clone()),
    }
}

/// Range of a linear form under interval bounds of its dimensions.
pub(crate) fn lin_range<K: Ord + Clone, T: Scalar>(
    lin: &LinExpr<K, T>,
    bounds: &impl Fn(&K) -> Bounds<T>,
) -> (Ext<T>, Ext<T>) {
    let mut lo = Ext::Fin(lin.constant.clone());
    let mut hi = Ext::Fin(lin.constant.clone());
    for (k, a) in &lin.terms {
        let b = bounds(k);
        let (l, h) = if a.is_positive() { (b.lo_ext(), b.hi_ext()) } else { (b.hi_ext(), b.lo_ext()) };
        lo = ext_add(&lo, &l.mul(&Ext::Fin(a.clone())));
        hi = ext_add(&hi, &h.mul(&Ext::Fin(a.clone())));
    }
    (lo, hi)
}

/// Splits `e` into a linear part and an interval remainder. Products stay
/// linear when one factor is a known constant (syntactically or because its
/// bounds are a singleton); otherwise the product is evaluated with interval
/// arithmetic.
pub(crate) fn linearize<K: Ord + Clone, T: Scalar>(
    e: &NumExpr<K, T>,
    bounds: &impl Fn(&K) -> Bounds<T>,
) -> Linearized<K, T> {
    match e {
        NumExpr::Dim(k) => Linearized::exact(LinExpr::dim(k.clone())),
        NumExpr::Const(c) => Linearized::exact(LinExpr::constant(c.clone())),
        NumExpr::Add(a, b) => linearize(a, bounds).add(linearize(b, bounds)),
        NumExpr::Sub(a, b) => linearize(a, bounds).add(linearize(b, bounds).neg()),
        NumExpr::Mul(a, b) => {
            let la = linearize(a, bounds);
            let lb = linearize(b, bounds);
            if la.is_exact() && la.lin.is_constant() {
                let c = la.lin.constant.clone();
                return lb.scale(&c);
            }
            if lb.is_exact() && lb.lin.is_constant() {
                let c = lb.lin.constant.clone();
                return la.scale(&c);
            }
            let (alo, ahi) = la.range(bounds);
            let (blo, bhi) = lb.range(bounds);
            if let (Ext::Fin(x), Ext::Fin(y)) = (&alo, &ahi) {
                if x == y {
                    return lb.scale(x);
                }
            }
            if let (Ext::Fin(x), Ext::Fin(y)) = (&blo, &bhi) {
                if x == y {
                    return la.scale(x);
                }
            }
            let products = [alo.mul(&blo), alo.mul(&bhi), ahi.mul(&blo), ahi.mul(&bhi)];
            let lo = products.iter().min().cloned().unwrap();
            let hi = products.iter().max().cloned().unwrap();
            Linearized { lin: LinExpr::constant(T::zero()), lo, hi }
        }
    }
}

/// A guard reduced to atoms of the form `lin + [lo, hi] rel 0`.
pub(crate) struct Atom<K, T> {
    pub value: Linearized<K, T>,
    pub rel: Rel,
}

/// Reduces a guard to atoms over the integers. `≠` yields no atoms.
pub(crate) fn guard_atoms<K: Ord + Clone, T: Scalar>(
    g: &Guard<K, T>,
    bounds: &impl Fn(&K) -> Bounds<T>,
) -> Vec<Atom<K, T>> {
    let diff = linearize(&g.lhs, bounds).add(linearize(&g.rhs, bounds).neg());
    let one = Linearized::exact(LinExpr::constant(T::one()));
    match g.op {
        CmpOp::Le => vec![Atom { value: diff, rel: Rel::Le }],
        CmpOp::Lt => vec![Atom { value: diff.add(one), rel: Rel::Le }],
        CmpOp::Ge => vec![Atom { value: diff.neg(), rel: Rel::Le }],
        CmpOp::Gt => vec![Atom { value: diff.neg().add(one), rel: Rel::Le }],
        CmpOp::Eq => vec![Atom { value: diff, rel: Rel::Eq }],
        CmpOp::Ne => vec![],
    }
}

/// Linear relational reading of an atom: constraints exactly representable
/// when the remainder is bounded on the relevant side. `None` means the atom
/// is unsatisfiable.
pub(crate) fn atom_constraints<K: Ord + Clone, T: Scalar>(atom: &Atom<K, T>) -> Option<Vec<Constraint<K, T>>> {
    let v = &atom.value;
    let terms: Vec<(K, T)> = v.lin.terms.iter().map(|(k, a)| (k.clone(), a.clone())).collect();
    let c = v.lin.constant.clone();
    let mut out = Vec::new();
    let mut push = |canon: Canon<K, T>| -> bool {
        match canon {
            Canon::Always => true,
            Canon::Never => false,
            Canon::Cons(c) => {
                out.push(c);
                true
            }
        }
    };
    let neg_terms = || terms.iter().map(|(k, a)| (k.clone(), -a.clone())).collect::<Vec<_>>();
    match atom.rel {
        Rel::Le => {
            // lin + c + r <= 0 for some r >= lo  =>  lin <= -(c + lo)
            if let Ext::Fin(lo) = &v.lo {
                if !push(Constraint::new(terms.clone(), Rel::Le, -(c.clone() + lo.clone()))) {
                    return None;
                }
            }
        }
        Rel::Eq => {
            if let (Ext::Fin(lo), Ext::Fin(hi)) = (&v.lo, &v.hi) {
                if lo == hi {
                    if !push(Constraint::new(terms.clone(), Rel::Eq, -(c.clone() + lo.clone()))) {
                        return None;
                    }
                    return Some(out);
                }
            }
            if let Ext::Fin(lo) = &v.lo {
                if !push(Constraint::new(terms.clone(), Rel::Le, -(c.clone() + lo.clone()))) {
                    return None;
                }
            }
            if let Ext::Fin(hi) = &v.hi {
                if !push(Constraint::new(neg_terms(), Rel::Le, c.clone() + hi.clone())) {
                    return None;
                }
            }
        }
    }
    Some(out)
}
