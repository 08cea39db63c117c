use std::collections::{BTreeMap, BTreeSet};

use super::linear::{guard_atoms, lin_range, linearize, Atom, Bounds, Constraint, Guard, LinExpr, NumExpr, Rel};
use super::scalar::{Ext, Scalar};
use super::{check_dims, DResult, DimKey, DomainError, DomainKind, Interpreted, NumericDomain};

/// Non-relational state: an independent bound pair per dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Intervals<K: Ord, T> {
    dims: BTreeMap<K, Bounds<T>>,
    bottom: bool,
}

impl<K: DimKey, T: Scalar> Intervals<K, T> {
    fn get(&self, d: &K) -> Bounds<T> {
        self.dims.get(d).cloned().unwrap_or_else(Bounds::top)
    }

    fn set_bottom(&mut self) {
        self.bottom = true;
        for b in self.dims.values_mut() {
            *b = Bounds::top();
        }
    }

    fn meet(&mut self, d: &K, lo: Option<T>, hi: Option<T>) {
        if self.bottom {
            return;
        }
        let b = self.dims.get_mut(d).expect("dimension checked by caller");
        if let Some(l) = lo {
            if b.lo.as_ref().is_none_or(|x| &l > x) {
                b.lo = Some(l);
            }
        }
        if let Some(h) = hi {
            if b.hi.as_ref().is_none_or(|x| &h < x) {
                b.hi = Some(h);
            }
        }
        if let (Some(l), Some(h)) = (&b.lo, &b.hi) {
            if l > h {
                self.set_bottom();
            }
        }
    }

    fn ext_bounds(&self) -> impl Fn(&K) -> Bounds<T> + '_ {
        move |k| self.get(k)
    }

    /// Per-dimension consequences of `lin + rlo ≤ 0` (`rlo` the least
    /// remainder). `None` when unsatisfiable.
    fn derive_le(&self, lin: &LinExpr<K, T>, rlo: &Ext<T>) -> Option<Vec<(K, Option<T>, Option<T>)>> {
        let Ext::Fin(rlo) = rlo else { return Some(vec![]) };
        let r0 = -(lin.constant.clone() + rlo.clone());
        if lin.terms.is_empty() {
            return if r0.is_negative() { None } else { Some(vec![]) };
        }
        // Least value of each term a·x.
        let mins: Vec<(&K, &T, Ext<T>)> = lin
            .terms
            .iter()
            .map(|(k, a)| {
                let b = self.get(k);
                let end = if a.is_positive() { b.lo_ext() } else { b.hi_ext() };
                (k, a, end.mul(&Ext::Fin(a.clone())))
            })
            .collect();
        let infinite = mins.iter().filter(|(_, _, m)| !matches!(m, Ext::Fin(_))).count();
        let finite_sum = mins.iter().fold(T::zero(), |acc, (_, _, m)| match m {
            Ext::Fin(v) => acc + v.clone(),
            _ => acc,
        });
        let mut out = Vec::new();
        for (k, a, m) in &mins {
            let rest = match (m, infinite) {
                (Ext::Fin(v), 0) => finite_sum.clone() - v.clone(),
                (Ext::Fin(_), _) => continue,
                (_, 1) => finite_sum.clone(),
                _ => continue,
            };
            let r = r0.clone() - rest;
            if a.is_positive() {
                out.push(((*k).clone(), None, Some(r.floor_div(a))));
            } else {
                out.push(((*k).clone(), Some((-r).ceil_div(&-(*a).clone())), None));
            }
        }
        Some(out)
    }

    fn derive_atom(&self, atom: &Atom<K, T>) -> Option<Vec<(K, Option<T>, Option<T>)>> {
        let v = &atom.value;
        let mut out = self.derive_le(&v.lin, &v.lo)?;
        if atom.rel == Rel::Eq {
            let neg = v.lin.clone().neg();
            let nlo = match &v.hi {
                Ext::Fin(h) => Ext::Fin(-h.clone()),
                _ => Ext::NegInf,
            };
            out.extend(self.derive_le(&neg, &nlo)?);
        }
        Some(out)
    }

    fn constraint_atom(c: &Constraint<K, T>) -> Atom<K, T> {
        let mut lin = LinExpr::constant(-c.bound().clone());
        for (k, a) in c.terms() {
            lin = lin.add(&LinExpr::dim(k.clone()).scale(a));
        }
        Atom { value: super::linear::Linearized { lin, lo: Ext::Fin(T::zero()), hi: Ext::Fin(T::zero()) }, rel: c.rel() }
    }

    fn dim_set(&self) -> BTreeSet<K> {
        self.dims.keys().cloned().collect()
    }
}

fn to_constraints<K: DimKey, T: Scalar>(facts: Vec<(K, Option<T>, Option<T>)>) -> Vec<Constraint<K, T>> {
    let mut out = Vec::new();
    for (k, lo, hi) in facts {
        if let Some(l) = lo {
            out.push(Constraint::lower(k.clone(), l));
        }
        if let Some(h) = hi {
            out.push(Constraint::upper(k, h));
        }
    }
    out
}

impl<K: DimKey, T: Scalar> NumericDomain for Intervals<K, T> {
    type Dim = K;
    type Scalar = T;

    const KIND: DomainKind = DomainKind::Int;

    fn top(dims: impl IntoIterator<Item = K>) -> Self {
        Intervals { dims: dims.into_iter().map(|d| (d, Bounds::top())).collect(), bottom: false }
    }

    fn bottom(dims: impl IntoIterator<Item = K>) -> Self {
        let mut s = Self::top(dims);
        s.bottom = true;
        s
    }

    fn is_bottom(&self) -> bool {
        self.bottom
    }

    fn dims(&self) -> BTreeSet<K> {
        self.dim_set()
    }

    fn has_dim(&self, d: &K) -> bool {
        self.dims.contains_key(d)
    }

    fn constraints(&self) -> Vec<Constraint<K, T>> {
        if self.bottom {
            return vec![];
        }
        let mut out = Vec::new();
        for (k, b) in &self.dims {
            if let Some(v) = b.singleton() {
                out.push(Constraint::eq([(k.clone(), T::one())], v.clone()));
                continue;
            }
            if let Some(h) = &b.hi {
                out.push(Constraint::upper(k.clone(), h.clone()));
            }
            if let Some(l) = &b.lo {
                out.push(Constraint::lower(k.clone(), l.clone()));
            }
        }
        out.sort();
        out
    }

    fn interp(&self, g: &Guard<K, T>) -> DResult<Interpreted<K, T>> {
        let mut ds = Vec::new();
        g.collect_dims(&mut ds);
        check_dims(&self.dim_set(), ds)?;
        if self.bottom {
            return Ok(Interpreted::Constraints(vec![]));
        }
        let mut facts = Vec::new();
        for atom in guard_atoms(g, &self.ext_bounds()) {
            match self.derive_atom(&atom) {
                Some(f) => facts.extend(f),
                None => return Ok(Interpreted::Unsat),
            }
        }
        Ok(Interpreted::Constraints(to_constraints(facts)))
    }

    fn add_constraints(&self, cs: &[Constraint<K, T>]) -> DResult<Self> {
        let have = self.dim_set();
        for c in cs {
            check_dims(&have, c.dims().cloned())?;
        }
        let mut s = self.clone();
        for c in cs {
            if s.bottom {
                break;
            }
            match s.derive_atom(&Self::constraint_atom(c)) {
                None => s.set_bottom(),
                Some(facts) => {
                    for (k, lo, hi) in facts {
                        s.meet(&k, lo, hi);
                    }
                }
            }
        }
        Ok(s)
    }

    fn project_away(&self, ds: &[K]) -> DResult<Self> {
        check_dims(&self.dim_set(), ds.iter().cloned())?;
        let mut s = self.clone();
        for d in ds {
            s.dims.remove(d);
        }
        Ok(s)
    }

    fn project_to(&self, keep: &BTreeSet<K>) -> Self {
        let mut s = self.clone();
        s.dims.retain(|k, _| keep.contains(k));
        s
    }

    fn extend(&self, ds: impl IntoIterator<Item = K>) -> Self {
        let mut s = self.clone();
        for d in ds {
            s.dims.entry(d).or_insert_with(Bounds::top);
        }
        s
    }

    fn concat(&self, other: &Self) -> DResult<Self> {
        if let Some(k) = other.dims.keys().find(|k| self.dims.contains_key(*k)) {
            return Err(DomainError::Overlap(k.to_string()));
        }
        let mut s = self.clone();
        s.dims.extend(other.dims.iter().map(|(k, b)| (k.clone(), b.clone())));
        if self.bottom || other.bottom {
            s.set_bottom();
        }
        Ok(s)
    }

    fn join(&self, other: &Self) -> DResult<Self> {
        if self.dim_set() != other.dim_set() {
            return Err(DomainError::DimMismatch);
        }
        if self.bottom {
            return Ok(other.clone());
        }
        if other.bottom {
            return Ok(self.clone());
        }
        let dims = self
            .dims
            .iter()
            .map(|(k, a)| {
                let b = &other.dims[k];
                let lo = match (&a.lo, &b.lo) {
                    (Some(x), Some(y)) => Some(x.clone().min(y.clone())),
                    _ => None,
                };
                let hi = match (&a.hi, &b.hi) {
                    (Some(x), Some(y)) => Some(x.clone().max(y.clone())),
                    _ => None,
                };
                (k.clone(), Bounds { lo, hi })
            })
            .collect();
        Ok(Intervals { dims, bottom: false })
    }

    fn widen(&self, next: &Self) -> DResult<Self> {
        if self.dim_set() != next.dim_set() {
            return Err(DomainError::DimMismatch);
        }
        if self.bottom {
            return Ok(next.clone());
        }
        if next.bottom {
            return Ok(self.clone());
        }
        let dims = self
            .dims
            .iter()
            .map(|(k, a)| {
                let b = &next.dims[k];
                let lo = match (&a.lo, &b.lo) {
                    (Some(x), Some(y)) if y >= x => Some(x.clone()),
                    _ => None,
                };
                let hi = match (&a.hi, &b.hi) {
                    (Some(x), Some(y)) if y <= x => Some(x.clone()),
                    _ => None,
                };
                (k.clone(), Bounds { lo, hi })
            })
            .collect();
        Ok(Intervals { dims, bottom: false })
    }

    fn entails(&self, c: &Constraint<K, T>) -> DResult<bool> {
        check_dims(&self.dim_set(), c.dims().cloned())?;
        if self.bottom {
            return Ok(true);
        }
        let mut lin = LinExpr::constant(T::zero());
        for (k, a) in c.terms() {
            lin = lin.add(&LinExpr::dim(k.clone()).scale(a));
        }
        let (lo, hi) = lin_range(&lin, &self.ext_bounds());
        let b = Ext::Fin(c.bound().clone());
        Ok(match c.rel() {
            Rel::Le => hi <= b,
            Rel::Eq => hi <= b && lo >= b,
        })
    }

    fn bounds(&self, d: &K) -> DResult<Option<Bounds<T>>> {
        check_dims(&self.dim_set(), [d.clone()])?;
        Ok(if self.bottom { None } else { Some(self.get(d)) })
    }

    fn is_unconstrained(&self, d: &K) -> DResult<bool> {
        check_dims(&self.dim_set(), [d.clone()])?;
        Ok(!self.bottom && self.get(d) == Bounds::top())
    }

    fn rename(&self, map: &BTreeMap<K, K>) -> DResult<Self> {
        check_dims(&self.dim_set(), map.keys().cloned())?;
        let mut dims = BTreeMap::new();
        for (k, b) in &self.dims {
            let nk = map.get(k).cloned().unwrap_or_else(|| k.clone());
            if dims.insert(nk.clone(), b.clone()).is_some() {
                return Err(DomainError::Overlap(nk.to_string()));
            }
        }
        Ok(Intervals { dims, bottom: self.bottom })
    }

    fn assign(&self, p: &K, e: &NumExpr<K, T>) -> DResult<Self> {
        let mut ds = vec![p.clone()];
        e.collect_dims(&mut ds);
        check_dims(&self.dim_set(), ds)?;
        if e.mentions(p) {
            return Err(DomainError::SelfReference(p.to_string()));
        }
        let mut s = self.clone();
        if s.bottom {
            return Ok(s);
        }
        let l = linearize(e, &self.ext_bounds());
        let (lo, hi) = lin_range(&l.lin, &self.ext_bounds());
        let lo = super::linear::ext_add(&lo, &l.lo);
        let hi = super::linear::ext_add(&hi, &l.hi);
        let fin = |e: Ext<T>| match e {
            Ext::Fin(v) => Some(v),
            _ => None,
        };
        s.dims.insert(p.clone(), Bounds { lo: fin(lo), hi: fin(hi) });
        Ok(s)
    }

    fn expand(&self, src: &K, dst: &K) -> DResult<Self> {
        check_dims(&self.dim_set(), [src.clone(), dst.clone()])?;
        let mut s = self.clone();
        if !s.bottom {
            s.dims.insert(dst.clone(), self.get(src));
        }
        Ok(s)
    }
}
