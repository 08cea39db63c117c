//! Exact linear optimization over `a·x ≤ b` rows with free variables.
//!
//! `max c·x` is solved through its dual `min b·y, Aᵀy = c, y ≥ 0` with a
//! two-phase tableau simplex over rationals. Bland's rule picks pivots, so
//! degenerate problems terminate.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use super::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Lp<T: Scalar> {
    /// No rational point satisfies the rows.
    Infeasible,
    /// The objective grows without bound, or the rows admit no optimum the
    /// dual can certify.
    Unbounded,
    Optimum(Ratio<T>),
}

struct Tableau<T: Scalar> {
    /// `n` rows of `m` dual columns followed by `n` artificial columns.
    a: Vec<Vec<Ratio<T>>>,
    rhs: Vec<Ratio<T>>,
    basis: Vec<usize>,
    m: usize,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, r: usize, k: usize) {
        let p = self.a[r][k].clone();
        for v in self.a[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        self.rhs[r] = self.rhs[r].clone() / p;
        let (row, rr) = (self.a[r].clone(), self.rhs[r].clone());
        for i in 0..self.a.len() {
            if i == r || self.a[i][k].is_zero() {
                continue;
            }
            let f = self.a[i][k].clone();
            for (v, w) in self.a[i].iter_mut().zip(&row) {
                if !w.is_zero() {
                    *v = v.clone() - f.clone() * w.clone();
                }
            }
            self.rhs[i] = self.rhs[i].clone() - f * rr.clone();
        }
        self.basis[r] = k;
    }

    /// Minimizes `cost·z` over columns `< limit`. `false` when unbounded.
    fn minimize(&mut self, cost: &[Ratio<T>], limit: usize) -> bool {
        loop {
            let reduced = |k: usize| -> Ratio<T> {
                let mut d = cost[k].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !cost[b].is_zero() && !self.a[i][k].is_zero() {
                        d = d - cost[b].clone() * self.a[i][k].clone();
                    }
                }
                d
            };
            let Some(k) = (0..limit).find(|&k| !self.basis.contains(&k) && reduced(k).is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Ratio<T>)> = None;
            for i in 0..self.a.len() {
                if self.a[i][k].is_positive() {
                    let q = self.rhs[i].clone() / self.a[i][k].clone();
                    let better = match &best {
                        None => true,
                        Some((j, bq)) => q < *bq || (q == *bq && self.basis[i] < self.basis[*j]),
                    };
                    if better {
                        best = Some((i, q));
                    }
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, k),
                None => return false,
            }
        }
    }
}

/// `max Σ c·x` subject to every `Σ a·x ≤ b` in `rows`.
pub(crate) fn maximize<K: Ord + Clone, T: Scalar>(rows: &[(BTreeMap<K, T>, T)], c: &BTreeMap<K, T>) -> Lp<T> {
    let mut vars: BTreeMap<K, usize> = BTreeMap::new();
    for k in rows.iter().flat_map(|(t, _)| t.keys()).chain(c.keys()) {
        let n = vars.len();
        vars.entry(k.clone()).or_insert(n);
    }
    let (n, m) = (vars.len(), rows.len());
    let zero = Ratio::<T>::zero;
    let mut a = vec![vec![zero(); m + n]; n];
    let mut rhs = vec![zero(); n];
    for (i, (t, _)) in rows.iter().enumerate() {
        for (k, v) in t {
            a[vars[k]][i] = Ratio::from_integer(v.clone());
        }
    }
    for (k, v) in c {
        rhs[vars[k]] = Ratio::from_integer(v.clone());
    }
    for j in 0..n {
        if rhs[j].is_negative() {
            for v in a[j].iter_mut() {
                *v = -v.clone();
            }
            rhs[j] = -rhs[j].clone();
        }
        a[j][m + j] = Ratio::one();
    }
    let mut tab = Tableau { a, rhs, basis: (m..m + n).collect(), m };

    let mut cost1 = vec![zero(); m + n];
    for v in cost1.iter_mut().skip(m) {
        *v = Ratio::one();
    }
    tab.minimize(&cost1, m + n);
    if tab.rhs.iter().zip(&tab.basis).any(|(r, &b)| b >= m && !r.is_zero()) {
        // The dual is infeasible: the primal is unbounded or infeasible.
        return if feasible(rows) { Lp::Unbounded } else { Lp::Infeasible };
    }
    for r in 0..n {
        if tab.basis[r] >= tab.m {
            if let Some(k) = (0..tab.m).find(|&k| !tab.a[r][k].is_zero()) {
                tab.pivot(r, k);
            }
        }
    }
    let mut cost2 = vec![zero(); m + n];
    for (i, (_, b)) in rows.iter().enumerate() {
        cost2[i] = Ratio::from_integer(b.clone());
    }
    if !tab.minimize(&cost2, m) {
        return Lp::Infeasible;
    }
    let opt = tab.basis.iter().zip(&tab.rhs).fold(zero(), |s, (&b, r)| s + cost2[b].clone() * r.clone());
    Lp::Optimum(opt)
}

/// Whether some rational point satisfies every row.
pub(crate) fn feasible<K: Ord + Clone, T: Scalar>(rows: &[(BTreeMap<K, T>, T)]) -> bool {
    // With a zero objective the dual is feasible at y = 0 and is unbounded
    // exactly when the rows are infeasible.
    !matches!(maximize_zero(rows), Lp::Infeasible)
}

fn maximize_zero<K: Ord + Clone, T: Scalar>(rows: &[(BTreeMap<K, T>, T)]) -> Lp<T> {
    let m = rows.len();
    let mut vars: BTreeMap<K, usize> = BTreeMap::new();
    for k in rows.iter().flat_map(|(t, _)| t.keys()) {
        let n = vars.len();
        vars.entry(k.clone()).or_insert(n);
    }
    let n = vars.len();
    if n == 0 {
        return if rows.iter().all(|(_, b)| !b.is_negative()) { Lp::Optimum(Ratio::zero()) } else { Lp::Infeasible };
    }
    // Columns 0..m are y; the basis starts on artificials with zero rhs, so
    // phase one is already optimal at zero.
    let mut a = vec![vec![Ratio::<T>::zero(); m + n]; n];
    for (i, (t, _)) in rows.iter().enumerate() {
        for (k, v) in t {
            a[vars[k]][i] = Ratio::from_integer(v.clone());
        }
    }
    for (j, row) in a.iter_mut().enumerate() {
        row[m + j] = Ratio::one();
    }
    let mut tab = Tableau { a, rhs: vec![Ratio::zero(); n], basis: (m..m + n).collect(), m };
    for r in 0..n {
        if let Some(k) = (0..m).find(|&k| !tab.a[r][k].is_zero()) {
            tab.pivot(r, k);
        }
    }
    let cost: Vec<Ratio<T>> = rows.iter().map(|(_, b)| Ratio::from_integer(b.clone())).chain((0..n).map(|_| Ratio::zero())).collect();
    if tab.minimize(&cost, m) {
        Lp::Optimum(Ratio::zero())
    } else {
        Lp::Infeasible
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(ts: &[(&'static str, i64)], b: i64) -> (BTreeMap<&'static str, i64>, i64) {
        (ts.iter().cloned().collect(), b)
    }

    fn obj(ts: &[(&'static str, i64)]) -> BTreeMap<&'static str, i64> {
        ts.iter().cloned().collect()
    }

    #[test]
    fn box_corner() {
        let rows = [row(&[("x", 1)], 4), row(&[("x", -1)], 0), row(&[("y", 1)], 6), row(&[("y", -1)], 0)];
        assert_eq!(maximize(&rows, &obj(&[("x", 1), ("y", 1)])), Lp::Optimum(Ratio::from_integer(10)));
        assert_eq!(maximize(&rows, &obj(&[("x", -1), ("y", 2)])), Lp::Optimum(Ratio::from_integer(12)));
    }

    #[test]
    fn fractional_vertex() {
        // 2x ≤ 3 gives x ≤ 3/2 over the rationals.
        let rows = [row(&[("x", 2)], 3)];
        assert_eq!(maximize(&rows, &obj(&[("x", 1)])), Lp::Optimum(Ratio::new(3, 2)));
    }

    #[test]
    fn unbounded_and_infeasible() {
        let rows = [row(&[("x", -1)], 0)];
        assert_eq!(maximize(&rows, &obj(&[("x", 1)])), Lp::Unbounded);
        let bad = [row(&[("x", 1)], 0), row(&[("x", -1)], -1)];
        assert_eq!(maximize(&bad, &obj(&[("x", 1)])), Lp::Infeasible);
        assert!(!feasible(&bad));
        assert!(feasible(&rows));
    }

    #[test]
    fn equality_chain() {
        // x = y, y = z + 1, z ≤ 3.
        let rows = [
            row(&[("x", 1), ("y", -1)], 0),
            row(&[("x", -1), ("y", 1)], 0),
            row(&[("y", 1), ("z", -1)], 1),
            row(&[("y", -1), ("z", 1)], -1),
            row(&[("z", 1)], 3),
        ];
        assert_eq!(maximize(&rows, &obj(&[("x", 1)])), Lp::Optimum(Ratio::from_integer(4)));
        assert_eq!(maximize(&rows, &obj(&[("x", 1), ("z", -1)])), Lp::Optimum(Ratio::from_integer(1)));
    }

    #[test]
    fn objective_on_free_variable_is_unbounded() {
        let rows = [row(&[("x", 1)], 2)];
        assert_eq!(maximize(&rows, &obj(&[("w", 1)])), Lp::Unbounded);
    }
}
