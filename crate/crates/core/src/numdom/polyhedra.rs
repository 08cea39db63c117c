use std::collections::{BTreeMap, BTreeSet};

use super::fm::{Range, System, Terms};
use super::linear::{atom_constraints, guard_atoms, linearize, Bounds, Constraint, Guard, NumExpr, Rel};
use super::scalar::{Ext, Scalar};
use super::{check_dims, DResult, DimKey, DomainError, DomainKind, Interpreted, NumericDomain};

/// Convex polyhedron over integer points, as a conjunction of linear
/// constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polyhedron<K: Ord, T> {
    dims: BTreeSet<K>,
    sys: System<K, T>,
}

fn neg_terms<K: Clone, T: Scalar>(t: &Terms<K, T>) -> BTreeMap<K, T>
where
    K: Ord,
{
    t.iter().map(|(k, a)| (k.clone(), -a.clone())).collect()
}

fn pos_terms<K: Ord + Clone, T: Scalar>(t: &Terms<K, T>) -> BTreeMap<K, T> {
    t.iter().cloned().collect()
}

impl<K: DimKey, T: Scalar> Polyhedron<K, T> {
    fn sup(&self, terms: &BTreeMap<K, T>) -> Ext<T> {
        self.sys.sup(terms)
    }

    /// Upper bound of a direction: the stored one when present, otherwise
    /// the supremum over the whole system.
    fn upper(&self, key: &Terms<K, T>) -> Option<T> {
        if let Some(h) = self.sys.rows.get(key).and_then(|r| r.hi.clone()) {
            return Some(h);
        }
        match self.sup(&pos_terms(key)) {
            Ext::Fin(v) => Some(v),
            _ => None,
        }
    }

    fn lower(&self, key: &Terms<K, T>) -> Option<T> {
        if let Some(l) = self.sys.rows.get(key).and_then(|r| r.lo.clone()) {
            return Some(l);
        }
        match self.sup(&neg_terms(key)) {
            Ext::Fin(v) => Some(-v),
            _ => None,
        }
    }

    fn range_bounds(&self) -> impl Fn(&K) -> Bounds<T> + '_ {
        move |k| match self.sys.range_of(k) {
            Some(r) => Bounds { lo: r.lo, hi: r.hi },
            None => Bounds::top(),
        }
    }

    fn with_sys(&self, sys: System<K, T>) -> Self {
        Polyhedron { dims: self.dims.clone(), sys }
    }
}

impl<K: DimKey, T: Scalar> NumericDomain for Polyhedron<K, T> {
    type Dim = K;
    type Scalar = T;

    const KIND: DomainKind = DomainKind::Pol;

    fn top(dims: impl IntoIterator<Item = K>) -> Self {
        Polyhedron { dims: dims.into_iter().collect(), sys: System::new() }
    }

    fn bottom(dims: impl IntoIterator<Item = K>) -> Self {
        Polyhedron { dims: dims.into_iter().collect(), sys: System::infeasible() }
    }

    fn is_bottom(&self) -> bool {
        self.sys.infeasible
    }

    fn dims(&self) -> BTreeSet<K> {
        self.dims.clone()
    }

    fn has_dim(&self, d: &K) -> bool {
        self.dims.contains(d)
    }

    fn constraints(&self) -> Vec<Constraint<K, T>> {
        self.sys.constraints()
    }

    fn interp(&self, g: &Guard<K, T>) -> DResult<Interpreted<K, T>> {
        let mut ds = Vec::new();
        g.collect_dims(&mut ds);
        check_dims(&self.dims, ds)?;
        if self.is_bottom() {
            return Ok(Interpreted::Constraints(vec![]));
        }
        let mut out = Vec::new();
        for atom in guard_atoms(g, &self.range_bounds()) {
            match atom_constraints(&atom) {
                Some(cs) => out.extend(cs),
                None => return Ok(Interpreted::Unsat),
            }
        }
        Ok(Interpreted::Constraints(out))
    }

    fn add_constraints(&self, cs: &[Constraint<K, T>]) -> DResult<Self> {
        for c in cs {
            check_dims(&self.dims, c.dims().cloned())?;
        }
        if self.is_bottom() || cs.is_empty() {
            return Ok(self.clone());
        }
        let mut sys = self.sys.clone();
        for c in cs {
            sys.add_constraint(c);
        }
        if !sys.infeasible {
            let touched: BTreeSet<K> = cs.iter().flat_map(|c| c.dims().cloned()).collect();
            if !sys.component(touched).feasible() {
                sys = System::infeasible();
            }
        }
        Ok(self.with_sys(sys))
    }

    fn project_away(&self, ds: &[K]) -> DResult<Self> {
        check_dims(&self.dims, ds.iter().cloned())?;
        let drop: BTreeSet<K> = ds.iter().cloned().collect();
        let mut sys = self.sys.clone();
        sys.eliminate_all(|k| drop.contains(k));
        let dims = self.dims.iter().filter(|d| !drop.contains(*d)).cloned().collect();
        Ok(Polyhedron { dims, sys })
    }

    fn project_to(&self, keep: &BTreeSet<K>) -> Self {
        let mut sys = self.sys.clone();
        sys.eliminate_all(|k| !keep.contains(k));
        let dims = self.dims.iter().filter(|d| keep.contains(*d)).cloned().collect();
        Polyhedron { dims, sys }
    }

    fn extend(&self, ds: impl IntoIterator<Item = K>) -> Self {
        let mut s = self.clone();
        s.dims.extend(ds);
        s
    }

    fn concat(&self, other: &Self) -> DResult<Self> {
        if let Some(k) = other.dims.iter().find(|k| self.dims.contains(*k)) {
            return Err(DomainError::Overlap(k.to_string()));
        }
        let mut dims = self.dims.clone();
        dims.extend(other.dims.iter().cloned());
        if self.is_bottom() || other.is_bottom() {
            return Ok(Polyhedron { dims, sys: System::infeasible() });
        }
        let mut sys = self.sys.clone();
        sys.rows.extend(other.sys.rows.iter().map(|(k, r)| (k.clone(), r.clone())));
        Ok(Polyhedron { dims, sys })
    }

    /// Template join: every direction stored in either input is kept with
    /// the weaker of its two bounds, when both are finite.
    fn join(&self, other: &Self) -> DResult<Self> {
        if self.dims != other.dims {
            return Err(DomainError::DimMismatch);
        }
        if self.is_bottom() {
            return Ok(other.clone());
        }
        if other.is_bottom() {
            return Ok(self.clone());
        }
        let mut sys = System::new();
        let keys: BTreeSet<&Terms<K, T>> = self.sys.rows.keys().chain(other.sys.rows.keys()).collect();
        for key in keys {
            let a = self.sys.rows.get(key);
            let b = other.sys.rows.get(key);
            let has_hi = a.is_some_and(|r| r.hi.is_some()) || b.is_some_and(|r| r.hi.is_some());
            let has_lo = a.is_some_and(|r| r.lo.is_some()) || b.is_some_and(|r| r.lo.is_some());
            let mut range = Range { lo: None, hi: None };
            if has_hi {
                if let (Some(x), Some(y)) = (self.upper(key), other.upper(key)) {
                    range.hi = Some(x.max(y));
                }
            }
            if has_lo {
                if let (Some(x), Some(y)) = (self.lower(key), other.lower(key)) {
                    range.lo = Some(x.min(y));
                }
            }
            if range.lo.is_some() || range.hi.is_some() {
                sys.rows.insert(key.clone(), range);
            }
        }
        sys.cap();
        Ok(self.with_sys(sys))
    }

    /// Keeps the bounds of `self` that `next` still satisfies.
    fn widen(&self, next: &Self) -> DResult<Self> {
        if self.dims != next.dims {
            return Err(DomainError::DimMismatch);
        }
        if self.is_bottom() {
            return Ok(next.clone());
        }
        if next.is_bottom() {
            return Ok(self.clone());
        }
        let mut sys = System::new();
        for (key, r) in &self.sys.rows {
            let mut range = Range { lo: None, hi: None };
            if let Some(h) = &r.hi {
                if next.upper(key).is_some_and(|x| &x <= h) {
                    range.hi = Some(h.clone());
                }
            }
            if let Some(l) = &r.lo {
                if next.lower(key).is_some_and(|x| &x >= l) {
                    range.lo = Some(l.clone());
                }
            }
            if range.lo.is_some() || range.hi.is_some() {
                sys.rows.insert(key.clone(), range);
            }
        }
        sys.cap();
        Ok(self.with_sys(sys))
    }

    fn entails(&self, c: &Constraint<K, T>) -> DResult<bool> {
        check_dims(&self.dims, c.dims().cloned())?;
        if self.is_bottom() {
            return Ok(true);
        }
        let key: Terms<K, T> = c.terms().to_vec();
        let neg: Terms<K, T> = c.terms().iter().map(|(k, a)| (k.clone(), -a.clone())).collect();
        let b = c.bound();
        // Canonical keys have a positive leading coefficient.
        let (up_key, flipped) = if key[0].1.is_positive() { (key, false) } else { (neg, true) };
        let up_ok = |p: &Self| -> bool {
            if flipped {
                p.lower(&up_key).is_some_and(|l| -l <= *b)
            } else {
                p.upper(&up_key).is_some_and(|h| h <= *b)
            }
        };
        let down_ok = |p: &Self| -> bool {
            if flipped {
                p.upper(&up_key).is_some_and(|h| -h >= *b)
            } else {
                p.lower(&up_key).is_some_and(|l| l >= *b)
            }
        };
        Ok(match c.rel() {
            Rel::Le => up_ok(self),
            Rel::Eq => up_ok(self) && down_ok(self),
        })
    }

    fn bounds(&self, d: &K) -> DResult<Option<Bounds<T>>> {
        check_dims(&self.dims, [d.clone()])?;
        Ok(self.sys.range_of(d).map(|r| Bounds { lo: r.lo, hi: r.hi }))
    }

    fn is_unconstrained(&self, d: &K) -> DResult<bool> {
        check_dims(&self.dims, [d.clone()])?;
        Ok(!self.is_bottom() && !self.sys.mentions(d))
    }

    fn rename(&self, map: &BTreeMap<K, K>) -> DResult<Self> {
        check_dims(&self.dims, map.keys().cloned())?;
        let f = |k: &K| map.get(k).cloned().unwrap_or_else(|| k.clone());
        let mut dims = BTreeSet::new();
        for d in &self.dims {
            let n = f(d);
            if !dims.insert(n.clone()) {
                return Err(DomainError::Overlap(n.to_string()));
            }
        }
        Ok(Polyhedron { dims, sys: self.sys.rename(f) })
    }

    fn assign(&self, p: &K, e: &NumExpr<K, T>) -> DResult<Self> {
        let mut ds = vec![p.clone()];
        e.collect_dims(&mut ds);
        check_dims(&self.dims, ds)?;
        if e.mentions(p) {
            return Err(DomainError::SelfReference(p.to_string()));
        }
        if self.is_bottom() {
            return Ok(self.clone());
        }
        let l = linearize(e, &self.range_bounds());
        let mut sys = self.sys.clone();
        sys.eliminate(p);
        // p - lin ∈ constant + [lo, hi]
        let mut terms: BTreeMap<K, T> = l.lin.terms.iter().map(|(k, a)| (k.clone(), -a.clone())).collect();
        terms.insert(p.clone(), T::one());
        let c = l.lin.constant.clone();
        let fin = |x: &Ext<T>| match x {
            Ext::Fin(v) => Some(v.clone() + c.clone()),
            _ => None,
        };
        sys.add_range(terms, fin(&l.lo), fin(&l.hi));
        Ok(self.with_sys(sys))
    }

    fn expand(&self, src: &K, dst: &K) -> DResult<Self> {
        check_dims(&self.dims, [src.clone(), dst.clone()])?;
        if src == dst || self.is_bottom() {
            return Ok(self.clone());
        }
        let mut sys = self.sys.clone();
        sys.eliminate(dst);
        let copies: Vec<(BTreeMap<K, T>, Range<T>)> = sys
            .rows
            .iter()
            .filter(|(t, _)| t.iter().any(|(k, _)| k == src))
            .map(|(t, r)| {
                let terms = t.iter().map(|(k, a)| (if k == src { dst.clone() } else { k.clone() }, a.clone())).collect();
                (terms, r.clone())
            })
            .collect();
        for (t, r) in copies {
            sys.add_range(t, r.lo, r.hi);
        }
        Ok(self.with_sys(sys))
    }
}
