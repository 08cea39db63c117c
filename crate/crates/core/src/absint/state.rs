//! Abstract states: a numeric abstraction plus which heap dimensions carry
//! meaning.

use std::collections::BTreeSet;

use crate::numdom::{Constraint, DResult, Dimension, Guard, NumExpr, NumericDomain, Rel};
use crate::Int;

/// Numeric domain over analysis dimensions with exact integers.
pub trait Domain: NumericDomain<Dim = Dimension, Scalar = Int> {}
impl<D: NumericDomain<Dim = Dimension, Scalar = Int>> Domain for D {}

pub type Expr = NumExpr<Dimension, Int>;
pub type Cons = Constraint<Dimension, Int>;

/// Summary dimensions are `present` once some object they stand for may
/// exist (absent ones hold no objects and carry no constraints). Access
/// paths are `established` once their value is tracked (others are
/// unknown and carry no constraints).
#[derive(Clone, Debug, PartialEq)]
pub struct AbsState<D> {
    pub num: D,
    pub present: BTreeSet<Dimension>,
    pub established: BTreeSet<Dimension>,
}

impl<D: Domain> AbsState<D> {
    pub fn top(dims: impl IntoIterator<Item = Dimension>) -> Self {
        AbsState { num: D::top(dims), present: BTreeSet::new(), established: BTreeSet::new() }
    }

    pub fn bottom(dims: impl IntoIterator<Item = Dimension>) -> Self {
        AbsState { num: D::bottom(dims), present: BTreeSet::new(), established: BTreeSet::new() }
    }

    pub fn is_bottom(&self) -> bool {
        self.num.is_bottom()
    }

    pub fn dims(&self) -> BTreeSet<Dimension> {
        self.num.dims()
    }

    fn lift(&self, other: &Self) -> DResult<D> {
        // Dims present only in `other` hold no objects here, so any
        // constraint on them that leaves the rest free is vacuously true.
        let mut num = self.num.clone();
        for d in other.present.difference(&self.present) {
            if !num.has_dim(d) {
                continue;
            }
            let rows: Vec<Cons> = other.num.constraints().into_iter().filter(|c| c.mentions(d)).collect();
            let relational = num.add_constraints(&rows)?;
            if !relational.is_bottom() && num.leq(&relational.forget(d)?)? {
                num = relational;
                continue;
            }
            if let Some(b) = other.num.bounds(d)? {
                let mut cs = Vec::new();
                if let Some(lo) = b.lo {
                    cs.push(Constraint::lower(d.clone(), lo));
                }
                if let Some(hi) = b.hi {
                    cs.push(Constraint::upper(d.clone(), hi));
                }
                num = num.add_constraints(&cs)?;
            }
        }
        Ok(num)
    }

    fn combine(&self, other: &Self, widen: bool) -> DResult<Self> {
        if self.is_bottom() {
            return Ok(other.clone());
        }
        if other.is_bottom() {
            return Ok(self.clone());
        }
        let a = self.lift(other)?;
        let b = other.lift(self)?;
        let num = if widen { a.widen(&b)? } else { a.join(&b)? };
        let mut s = AbsState {
            num,
            present: self.present.union(&other.present).cloned().collect(),
            established: self.established.intersection(&other.established).cloned().collect(),
        };
        for d in self.established.symmetric_difference(&other.established) {
            s.num = s.num.forget(d)?;
        }
        Ok(s)
    }

    pub fn join(&self, other: &Self) -> DResult<Self> {
        self.combine(other, false)
    }

    pub fn widen(&self, next: &Self) -> DResult<Self> {
        self.combine(next, true)
    }

    pub fn leq(&self, other: &Self) -> DResult<bool> {
        if self.is_bottom() {
            return Ok(true);
        }
        if other.is_bottom() {
            return Ok(false);
        }
        Ok(self.present.is_subset(&other.present)
            && other.established.is_subset(&self.established)
            && self.num.leq(&other.num)?)
    }

    pub fn sem_eq(&self, other: &Self) -> DResult<bool> {
        Ok(self.leq(other)? && other.leq(self)?)
    }

    pub fn map_num(&self, f: impl FnOnce(&D) -> DResult<D>) -> DResult<Self> {
        if self.is_bottom() {
            return Ok(self.clone());
        }
        let num = f(&self.num)?;
        if num.is_bottom() {
            return Ok(Self::bottom(num.dims()));
        }
        Ok(AbsState { num, present: self.present.clone(), established: self.established.clone() })
    }

    pub fn forget(&self, d: &Dimension) -> DResult<Self> {
        self.map_num(|n| n.forget(d))
    }

    /// Forgets an access path and marks it unknown.
    pub fn invalidate(&self, d: &Dimension) -> DResult<Self> {
        let mut s = self.forget(d)?;
        s.established.remove(d);
        Ok(s)
    }

    /// Strong assignment; `e` may mention `d`.
    pub fn assign(&self, d: &Dimension, e: &Expr) -> DResult<Self> {
        self.map_num(|n| {
            if !e.mentions(d) {
                return n.assign(d, e);
            }
            let t = Dimension::Temp(u32::MAX - 1);
            let s = n.extend([t.clone()]).assign(&t, e)?.forget(d)?;
            s.assign(d, &NumExpr::dim(t.clone()))?.project_away(&[t])
        })
    }

    /// Joins with the state where `d` was assigned `e`.
    pub fn weak_assign(&self, d: &Dimension, e: &Expr) -> DResult<Self> {
        let strong = self.assign(d, e)?;
        self.join_num(&strong)
    }

    /// Overwrites `dst` by an independent copy of `src`.
    pub fn dup(&self, src: &Dimension, dst: &Dimension) -> DResult<Self> {
        self.map_num(|n| n.expand(src, dst))
    }

    pub fn weak_dup(&self, src: &Dimension, dst: &Dimension) -> DResult<Self> {
        let strong = self.dup(src, dst)?;
        self.join_num(&strong)
    }

    /// Numeric join of two states that share flags.
    fn join_num(&self, other: &Self) -> DResult<Self> {
        if self.is_bottom() {
            return Ok(other.clone());
        }
        if other.is_bottom() {
            return Ok(self.clone());
        }
        let mut s = self.clone();
        s.num = self.num.join(&other.num)?;
        Ok(s)
    }

    /// Writes a summary dimension: exact for the first object, joined after.
    pub fn write_summary(&self, d: &Dimension, e: &Expr) -> DResult<Self> {
        if self.present.contains(d) {
            return self.weak_assign(d, e);
        }
        let mut s = self.assign(d, e)?;
        if !s.is_bottom() {
            s.present.insert(d.clone());
        }
        Ok(s)
    }

    /// Copies the constraints of summary `src` into summary `dst` (weakly
    /// unless `dst` holds no objects yet).
    pub fn write_summary_dup(&self, src: &Dimension, dst: &Dimension) -> DResult<Self> {
        if self.present.contains(dst) {
            return self.weak_dup(src, dst);
        }
        let mut s = self.dup(src, dst)?;
        if !s.is_bottom() {
            s.present.insert(dst.clone());
        }
        Ok(s)
    }

    /// Havocs a summary dimension: it may hold objects with any value.
    pub fn havoc_summary(&self, d: &Dimension) -> DResult<Self> {
        let mut s = self.forget(d)?;
        if !s.is_bottom() {
            s.present.insert(d.clone());
        }
        Ok(s)
    }

    pub fn assume(&self, g: &Guard<Dimension, Int>) -> DResult<Self> {
        self.map_num(|n| n.assume(g))
    }

    pub fn add(&self, cs: &[Cons]) -> DResult<Self> {
        self.map_num(|n| n.add_constraints(cs))
    }

    pub fn entails(&self, c: &Cons) -> DResult<bool> {
        if self.is_bottom() {
            return Ok(true);
        }
        self.num.entails(c)
    }

    /// `a = b`.
    pub fn equate(&self, a: &Dimension, b: &Dimension) -> DResult<Self> {
        if a == b {
            return Ok(self.clone());
        }
        let c = Constraint::eq([(a.clone(), Int::from(1)), (b.clone(), Int::from(-1))], Int::from(0));
        self.add(&[c])
    }

    pub fn extend(&self, ds: impl IntoIterator<Item = Dimension>) -> Self {
        AbsState { num: self.num.extend(ds), present: self.present.clone(), established: self.established.clone() }
    }

    pub fn project_away(&self, ds: &[Dimension]) -> DResult<Self> {
        let mut s = self.map_num(|n| n.project_away(ds))?;
        if s.is_bottom() {
            s = Self::bottom(self.dims().into_iter().filter(|d| !ds.contains(d)));
        }
        for d in ds {
            s.present.remove(d);
            s.established.remove(d);
        }
        Ok(s)
    }

    pub fn project_to(&self, keep: &BTreeSet<Dimension>) -> Self {
        if self.is_bottom() {
            return Self::bottom(keep.iter().filter(|d| self.num.has_dim(d)).cloned());
        }
        AbsState {
            num: self.num.project_to(keep),
            present: self.present.intersection(keep).cloned().collect(),
            established: self.established.intersection(keep).cloned().collect(),
        }
    }

    /// Ensures exactly `dims`: extra ones are projected away, missing ones
    /// added unconstrained.
    pub fn reshape(&self, dims: &BTreeSet<Dimension>) -> Self {
        self.project_to(dims).extend(dims.iter().cloned())
    }

    pub fn concat(&self, other: &Self) -> DResult<Self> {
        if self.is_bottom() || other.is_bottom() {
            let mut ds = self.dims();
            ds.extend(other.dims());
            return Ok(Self::bottom(ds));
        }
        Ok(AbsState {
            num: self.num.concat(&other.num)?,
            present: self.present.union(&other.present).cloned().collect(),
            established: self.established.union(&other.established).cloned().collect(),
        })
    }

    pub fn rename(&self, map: &std::collections::BTreeMap<Dimension, Dimension>) -> DResult<Self> {
        let f = |set: &BTreeSet<Dimension>| -> BTreeSet<Dimension> { set.iter().map(|d| map.get(d).unwrap_or(d).clone()).collect() };
        if self.is_bottom() {
            return Ok(Self::bottom(f(&self.dims())));
        }
        Ok(AbsState { num: self.num.rename(map)?, present: f(&self.present), established: f(&self.established) })
    }

    /// Sorted text: flags followed by constraints.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.is_bottom() {
            for d in &self.present {
                out.push_str(&format!("present {d}\n"));
            }
            for d in &self.established {
                out.push_str(&format!("tracked {d}\n"));
            }
        }
        out.push_str(&self.num.render());
        out
    }
}

/// `lo <= d` and `d <= hi` as constraints.
pub fn range(d: &Dimension, lo: Option<i64>, hi: Option<i64>) -> Vec<Cons> {
    let mut cs = Vec::new();
    if let Some(l) = lo {
        cs.push(Constraint::lower(d.clone(), Int::from(l)));
    }
    if let Some(h) = hi {
        cs.push(Constraint::upper(d.clone(), Int::from(h)));
    }
    cs
}

/// `Σ terms rel bound` with small coefficients.
pub fn linear(terms: &[(Dimension, i64)], rel: Rel, bound: i64) -> Cons {
    let t = terms.iter().map(|(d, c)| (d.clone(), Int::from(*c)));
    match rel {
        Rel::Le => Constraint::le(t, Int::from(bound)),
        Rel::Eq => Constraint::eq(t, Int::from(bound)),
    }
}
