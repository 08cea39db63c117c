//! Constraint systems over integers with Fourier-Motzkin elimination.
//!
//! A system stores one bound pair per linear direction. Directions are
//! gcd-reduced with a positive leading coefficient, so `x - y <= 3` and
//! `y - x <= 2` share the direction `x - y` with range `[-2, 3]`.

use std::collections::{BTreeMap, BTreeSet};

use super::linear::{Canon, Constraint, Rel};
use super::lp::{self, Lp};
use super::scalar::{Ext, Scalar};

/// Upper limit on stored directions. Dropping directions only weakens a
/// system, so the cap keeps elimination cheap without losing soundness.
pub(crate) const MAX_ROWS: usize = 96;

/// Upper limit on the rows on each side of one elimination step; shorter
/// rows are kept.
const MAX_SIDE: usize = 24;

/// Systems up to this many rows also get an exact integer feasibility check.
const EXACT_ROWS: usize = 16;

pub(crate) type Terms<K, T> = Vec<(K, T)>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Range<T> {
    pub lo: Option<T>,
    pub hi: Option<T>,
}

impl<T: Scalar> Range<T> {
    fn is_eq(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(a), Some(b)) if a == b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct System<K, T> {
    pub rows: BTreeMap<Terms<K, T>, Range<T>>,
    pub infeasible: bool,
}

impl<K: Ord + Clone, T: Scalar> Default for System<K, T> {
    fn default() -> Self {
        System { rows: BTreeMap::new(), infeasible: false }
    }
}

fn coeff<'a, K: Ord, T>(terms: &'a Terms<K, T>, d: &K) -> Option<&'a T> {
    terms
        .binary_search_by(|(k, _)| k.cmp(d))
        .ok()
        .map(|i| &terms[i].1)
}

/// `Σ a·x + Σ b·y` with both sides scaled.
fn combine<K: Ord + Clone, T: Scalar>(x: &Terms<K, T>, a: &T, y: &Terms<K, T>, b: &T) -> BTreeMap<K, T> {
    let mut out: BTreeMap<K, T> = BTreeMap::new();
    for (k, c) in x {
        out.insert(k.clone(), c.clone() * a.clone());
    }
    for (k, c) in y {
        let e = out.entry(k.clone()).or_insert_with(T::zero);
        *e = e.clone() + c.clone() * b.clone();
    }
    out
}

impl<K: Ord + Clone, T: Scalar> System<K, T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn infeasible() -> Self {
        System { rows: BTreeMap::new(), infeasible: true }
    }

    fn mark_infeasible(&mut self) {
        self.infeasible = true;
        self.rows.clear();
    }

    /// Intersects the range of a canonical direction.
    fn merge(&mut self, key: Terms<K, T>, lo: Option<T>, hi: Option<T>) {
        if self.infeasible {
            return;
        }
        let r = self.rows.entry(key).or_insert(Range { lo: None, hi: None });
        if let Some(l) = lo {
            if r.lo.as_ref().is_none_or(|x| &l > x) {
                r.lo = Some(l);
            }
        }
        if let Some(h) = hi {
            if r.hi.as_ref().is_none_or(|x| &h < x) {
                r.hi = Some(h);
            }
        }
        if let (Some(l), Some(h)) = (&r.lo, &r.hi) {
            if l > h {
                self.mark_infeasible();
            }
        }
    }

    /// Adds `Σ terms ≤ b`.
    pub fn add_le(&mut self, terms: BTreeMap<K, T>, b: T) {
        if self.infeasible {
            return;
        }
        let terms: Terms<K, T> = terms.into_iter().filter(|(_, a)| !a.is_zero()).collect();
        if terms.is_empty() {
            if b.is_negative() {
                self.mark_infeasible();
            }
            return;
        }
        let g = terms.iter().fold(T::zero(), |g, (_, a)| g.gcd(a));
        if terms[0].1.is_positive() {
            let key = terms.into_iter().map(|(k, a)| (k, a / g.clone())).collect();
            let hi = b.floor_div(&g);
            self.merge(key, None, Some(hi));
        } else {
            let key = terms.into_iter().map(|(k, a)| (k, -(a / g.clone()))).collect();
            let lo = (-b).ceil_div(&g);
            self.merge(key, Some(lo), None);
        }
    }

    /// Adds `lo ≤ Σ terms ≤ hi` for whichever ends are finite.
    pub fn add_range(&mut self, terms: BTreeMap<K, T>, lo: Option<T>, hi: Option<T>) {
        if let Some(l) = lo {
            let neg = terms.iter().map(|(k, a)| (k.clone(), -a.clone())).collect();
            self.add_le(neg, -l);
        }
        if let Some(h) = hi {
            self.add_le(terms, h);
        }
    }

    pub fn add_constraint(&mut self, c: &Constraint<K, T>) {
        let terms: BTreeMap<K, T> = c.terms().iter().cloned().collect();
        match c.rel() {
            Rel::Le => self.add_le(terms, c.bound().clone()),
            Rel::Eq => self.add_range(terms, Some(c.bound().clone()), Some(c.bound().clone())),
        }
    }


    pub fn mentions(&self, d: &K) -> bool {
        self.rows.keys().any(|t| coeff(t, d).is_some())
    }

    /// Constraints in canonical form, sorted.
    pub fn constraints(&self) -> Vec<Constraint<K, T>> {
        let mut out = Vec::new();
        for (terms, r) in &self.rows {
            if r.is_eq() {
                if let Canon::Cons(c) = Constraint::new(terms.clone(), Rel::Eq, r.lo.clone().unwrap()) {
                    out.push(c);
                }
                continue;
            }
            if let Some(h) = &r.hi {
                if let Canon::Cons(c) = Constraint::new(terms.clone(), Rel::Le, h.clone()) {
                    out.push(c);
                }
            }
            if let Some(l) = &r.lo {
                let neg = terms.iter().map(|(k, a)| (k.clone(), -a.clone()));
                if let Canon::Cons(c) = Constraint::new(neg, Rel::Le, -l.clone()) {
                    out.push(c);
                }
            }
        }
        out.sort();
        out
    }

    /// Rows reachable from `seeds` through shared dimensions.
    pub fn component(&self, seeds: impl IntoIterator<Item = K>) -> System<K, T> {
        if self.infeasible {
            return Self::infeasible();
        }
        let mut reached: BTreeSet<K> = seeds.into_iter().collect();
        let mut taken = vec![false; self.rows.len()];
        let rows: Vec<(&Terms<K, T>, &Range<T>)> = self.rows.iter().collect();
        loop {
            let mut grew = false;
            for (i, (t, _)) in rows.iter().enumerate() {
                if !taken[i] && t.iter().any(|(k, _)| reached.contains(k)) {
                    taken[i] = true;
                    for (k, _) in t.iter() {
                        grew |= reached.insert(k.clone());
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let mut out = System::new();
        for (i, (t, r)) in rows.into_iter().enumerate() {
            if taken[i] {
                out.rows.insert(t.clone(), r.clone());
            }
        }
        out
    }

    /// Removes `d`, keeping every constraint it implied between the rest.
    pub fn eliminate(&mut self, d: &K) {
        if self.infeasible {
            return;
        }
        let mut with = Vec::new();
        let mut without = BTreeMap::new();
        for (t, r) in std::mem::take(&mut self.rows) {
            if coeff(&t, d).is_some() {
                with.push((t, r));
            } else {
                without.insert(t, r);
            }
        }
        self.rows = without;
        if with.is_empty() {
            return;
        }
        // Substitute through an equality when one exists, preferring a unit
        // coefficient so no scaling is needed.
        let eq = with
            .iter()
            .enumerate()
            .filter(|(_, (_, r))| r.is_eq())
            .min_by_key(|(_, (t, _))| coeff(t, d).unwrap().abs())
            .map(|(i, _)| i);
        if let Some(i) = eq {
            let (et, er) = with.swap_remove(i);
            let a = coeff(&et, d).unwrap().clone();
            let v = er.lo.unwrap();
            let abs_a = a.abs();
            let sa = a.signum();
            for (t, r) in with {
                let b = coeff(&t, d).unwrap().clone();
                let m = -(sa.clone() * b);
                let terms = combine(&t, &abs_a, &et, &m);
                let shift = m * v.clone();
                let lo = r.lo.map(|l| l * abs_a.clone() + shift.clone());
                let hi = r.hi.map(|h| h * abs_a.clone() + shift.clone());
                self.add_range(terms, lo, hi);
            }
            self.cap();
            return;
        }
        let mut pos: Vec<(Terms<K, T>, T, T)> = Vec::new();
        let mut neg: Vec<(Terms<K, T>, T, T)> = Vec::new();
        for (t, r) in with {
            let a = coeff(&t, d).unwrap().clone();
            if let Some(h) = r.hi {
                if a.is_positive() {
                    pos.push((t.clone(), h, a.clone()));
                } else {
                    neg.push((t.clone(), h, a.clone()));
                }
            }
            if let Some(l) = r.lo {
                let nt: Terms<K, T> = t.iter().map(|(k, c)| (k.clone(), -c.clone())).collect();
                if a.is_positive() {
                    neg.push((nt, -l, -a));
                } else {
                    pos.push((nt, -l, -a));
                }
            }
        }
        for side in [&mut pos, &mut neg] {
            if side.len() > MAX_SIDE {
                side.sort_by_key(|(t, _, _)| t.len());
                side.truncate(MAX_SIDE);
            }
        }
        for (pt, pb, pa) in &pos {
            for (nt, nb, na) in &neg {
                let c = -na.clone();
                let terms = combine(pt, &c, nt, pa);
                let bound = c * pb.clone() + pa.clone() * nb.clone();
                self.add_le(terms, bound);
                if self.infeasible {
                    return;
                }
            }
        }
        self.cap();
    }

    /// Drops bounds of multi-term rows that the unit rows already imply.
    /// The described set is unchanged.
    pub fn prune(&mut self) {
        if self.infeasible {
            return;
        }
        let unit: BTreeMap<K, Range<T>> = self
            .rows
            .iter()
            .filter(|(t, _)| t.len() == 1 && t[0].1.is_one())
            .map(|(t, r)| (t[0].0.clone(), r.clone()))
            .collect();
        if unit.is_empty() {
            return;
        }
        // Interval supremum of a row over the unit bounds.
        let sup = |t: &Terms<K, T>, sign: &T| -> Option<T> {
            let mut s = T::zero();
            for (k, a) in t {
                let a = a.clone() * sign.clone();
                let r = unit.get(k)?;
                let b = if a.is_positive() { r.hi.clone()? } else { r.lo.clone()? };
                s = s + a * b;
            }
            Some(s)
        };
        let one = T::one();
        let neg = -T::one();
        self.rows.retain(|t, r| {
            if t.len() == 1 {
                return true;
            }
            if r.hi.as_ref().is_some_and(|h| sup(t, &one).is_some_and(|s| &s <= h)) {
                r.hi = None;
            }
            if r.lo.as_ref().is_some_and(|l| sup(t, &neg).is_some_and(|s| -s >= *l)) {
                r.lo = None;
            }
            r.lo.is_some() || r.hi.is_some()
        });
    }

    /// Prunes implied rows, then drops the longest rows beyond the limit.
    pub fn cap(&mut self) {
        self.prune();
        if self.rows.len() <= MAX_ROWS {
            return;
        }
        let mut keys: Vec<Terms<K, T>> = self.rows.keys().cloned().collect();
        keys.sort_by_key(|t| std::cmp::Reverse(t.len()));
        let excess = self.rows.len() - MAX_ROWS;
        for k in keys.into_iter().take(excess) {
            self.rows.remove(&k);
        }
    }

    /// Eliminates every dimension not in `keep`, cheapest first.
    pub fn eliminate_except(&mut self, keep: &BTreeSet<K>) {
        self.eliminate_all(|k| !keep.contains(k));
    }

    /// Eliminates every dimension selected by `drop`, cheapest first.
    pub fn eliminate_all(&mut self, drop: impl Fn(&K) -> bool) {
        loop {
            if self.infeasible {
                return;
            }
            let mut stats: BTreeMap<&K, (usize, usize, bool)> = BTreeMap::new();
            for (t, r) in &self.rows {
                let eq = r.is_eq();
                for (k, a) in t {
                    if !drop(k) {
                        continue;
                    }
                    let s = stats.entry(k).or_insert((0, 0, false));
                    let up = r.hi.is_some() as usize;
                    let down = r.lo.is_some() as usize;
                    if a.is_positive() {
                        s.0 += up;
                        s.1 += down;
                    } else {
                        s.0 += down;
                        s.1 += up;
                    }
                    s.2 |= eq;
                }
            }
            let pick = stats
                .into_iter()
                .min_by_key(|(_, (p, n, eq))| (!*eq, p * n))
                .map(|(k, _)| k.clone());
            match pick {
                Some(k) => self.eliminate(&k),
                None => return,
            }
        }
    }

    /// Rows as `Σ a·x ≤ b` pairs.
    fn le_rows(&self) -> Vec<(BTreeMap<K, T>, T)> {
        let mut out = Vec::new();
        for (t, r) in &self.rows {
            if let Some(h) = &r.hi {
                out.push((t.iter().cloned().collect(), h.clone()));
            }
            if let Some(l) = &r.lo {
                out.push((t.iter().map(|(k, a)| (k.clone(), -a.clone())).collect(), -l.clone()));
            }
        }
        out
    }

    /// Whether some rational point satisfies the system. Small systems are
    /// also checked by elimination, which tightens to integers on the way.
    /// A `false` answer is definitive.
    pub fn feasible(&self) -> bool {
        if self.infeasible {
            return false;
        }
        if !lp::feasible(&self.le_rows()) {
            return false;
        }
        if self.rows.len() <= EXACT_ROWS {
            let mut s = self.clone();
            s.eliminate_except(&BTreeSet::new());
            return !s.infeasible;
        }
        true
    }

    /// Supremum of `Σ terms` over the integer points of the rational
    /// relaxation; `NegInf` when infeasible.
    pub fn sup(&self, terms: &BTreeMap<K, T>) -> Ext<T> {
        if self.infeasible {
            return Ext::NegInf;
        }
        let terms: BTreeMap<K, T> = terms.iter().filter(|(_, a)| !a.is_zero()).map(|(k, a)| (k.clone(), a.clone())).collect();
        if terms.is_empty() {
            return if self.feasible() { Ext::Fin(T::zero()) } else { Ext::NegInf };
        }
        let s = self.component(terms.keys().cloned());
        if s.rows.is_empty() {
            return Ext::PosInf;
        }
        match lp::maximize(&s.le_rows(), &terms) {
            Lp::Optimum(v) => Ext::Fin(v.floor().to_integer()),
            Lp::Unbounded => Ext::PosInf,
            Lp::Infeasible => Ext::NegInf,
        }
    }

    /// Tight range of a single dimension.
    pub fn range_of(&self, d: &K) -> Option<Range<T>> {
        let hi = self.sup(&[(d.clone(), T::one())].into_iter().collect());
        let lo = self.sup(&[(d.clone(), -T::one())].into_iter().collect());
        let fin = |e: Ext<T>| match e {
            Ext::Fin(v) => Some(Some(v)),
            Ext::PosInf => Some(None),
            Ext::NegInf => None,
        };
        Some(Range { lo: fin(lo)?.map(|v| -v), hi: fin(hi)? })
    }

    /// Applies an injective renaming to every row.
    pub fn rename(&self, f: impl Fn(&K) -> K) -> System<K, T> {
        if self.infeasible {
            return Self::infeasible();
        }
        let mut out = System::new();
        for (t, r) in &self.rows {
            let terms: BTreeMap<K, T> = t.iter().map(|(k, a)| (f(k), a.clone())).collect();
            out.add_range(terms, r.lo.clone(), r.hi.clone());
        }
        out
    }
}
