//! Grid-enumeration checks for the numeric domains over [-8, 8]^n, n ≤ 4.

use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use numlab::numdom::{update, Canon, CmpOp, Constraint, Guard, Interpreted, NumExpr, NumericDomain, Rel, UpdateMode};
use numlab::Int;
use proptest::prelude::*;

pub const LO: i64 = -8;
pub const HI: i64 = 8;

pub type Cons = Constraint<String, Int>;
pub type Expr = NumExpr<String, Int>;

pub fn dim(i: usize) -> String {
    format!("d{i}")
}

pub fn dims(n: usize) -> Vec<String> {
    (0..n).map(dim).collect()
}

/// Every integer point of the grid over `n` dimensions.
pub fn grid(n: usize) -> Vec<Vec<i64>> {
    let mut pts = vec![vec![]];
    for _ in 0..n {
        pts = pts.into_iter().flat_map(|p| (LO..=HI).map(move |v| [p.clone(), vec![v]].concat())).collect();
    }
    pts
}

pub fn value(x: &[i64], k: &str) -> i64 {
    x[k[1..].parse::<usize>().unwrap()]
}

pub fn holds(c: &Cons, x: &[i64]) -> bool {
    let lhs: i64 = c.terms().iter().map(|(k, a)| a.to_i64().unwrap() * value(x, k)).sum();
    let b = c.bound().to_i64().unwrap();
    match c.rel() {
        Rel::Le => lhs <= b,
        Rel::Eq => lhs == b,
    }
}

/// Membership in the concretization, read off the stored constraints.
pub struct Gamma(Option<Vec<Cons>>);

impl Gamma {
    pub fn of<D: NumericDomain<Dim = String, Scalar = Int>>(s: &D) -> Self {
        Gamma((!s.is_bottom()).then(|| s.constraints()))
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.0.as_ref().is_some_and(|cs| cs.iter().all(|c| holds(c, x)))
    }
}

pub fn eval(e: &Expr, x: &[i64]) -> i64 {
    e.eval(&|k: &String| Int::from(value(x, k))).to_i64().unwrap()
}

#[derive(Clone, Debug)]
pub struct RawCons {
    pub coeffs: Vec<i64>,
    pub eq: bool,
    pub bound: i64,
}

impl RawCons {
    /// The constraint as stored rows; an integer-infeasible equality
    /// becomes a contradictory pair.
    pub fn build(&self) -> Vec<Cons> {
        let t = self.coeffs.iter().enumerate().map(|(i, c)| (dim(i), Int::from(*c)));
        let rel = if self.eq { Rel::Eq } else { Rel::Le };
        match Constraint::new(t, rel, Int::from(self.bound)) {
            Canon::Cons(c) => vec![c],
            Canon::Always => vec![],
            Canon::Never => vec![Constraint::upper(dim(0), Int::from(-1)), Constraint::lower(dim(0), Int::from(1))],
        }
    }
}

pub fn raw_cons(n: usize) -> impl Strategy<Value = RawCons> {
    (prop::collection::vec(-2i64..=2, n), prop::bool::weighted(0.15), -8i64..=8).prop_map(|(mut coeffs, eq, bound)| {
        if coeffs.iter().all(|c| *c == 0) {
            coeffs[0] = 1;
        }
        RawCons { coeffs, eq, bound }
    })
}

pub fn raw_state(n: usize, max: usize) -> impl Strategy<Value = Vec<RawCons>> {
    prop::collection::vec(raw_cons(n), 0..=max)
}

pub fn expr(n: usize) -> impl Strategy<Value = Expr> {
    let atom = prop_oneof![(0..n).prop_map(|i| Expr::dim(dim(i))), (-4i64..=4).prop_map(Expr::int)];
    atom.prop_recursive(2, 6, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(b)),
            (-3i64..=3, inner.clone()).prop_map(|(c, a)| Expr::int(c).mul(a)),
            (inner.clone(), inner).prop_map(|(a, b)| a.mul(b)),
        ]
    })
}

pub fn cmp() -> impl Strategy<Value = CmpOp> {
    prop_oneof![Just(CmpOp::Lt), Just(CmpOp::Le), Just(CmpOp::Eq), Just(CmpOp::Ne), Just(CmpOp::Ge), Just(CmpOp::Gt)]
}

pub fn state<D: NumericDomain<Dim = String, Scalar = Int>>(n: usize, raw: &[RawCons]) -> D {
    let cs: Vec<Cons> = raw.iter().flat_map(RawCons::build).collect();
    D::top(dims(n)).add_constraints(&cs).unwrap()
}

pub fn fails(what: &str, x: &[i64]) -> Result<(), TestCaseError> {
    Err(TestCaseError::fail(format!("{what} at {x:?}")))
}

pub fn check_construction<D: NumericDomain<Dim = String, Scalar = Int>>(n: usize, raw: &[RawCons]) -> Result<(), TestCaseError> {
    let s: D = state(n, raw);
    let g = Gamma::of(&s);
    let cs: Vec<Cons> = raw.iter().flat_map(RawCons::build).collect();
    for x in grid(n) {
        if cs.iter().all(|c| holds(c, &x)) && !g.contains(&x) {
            return fails("adding constraints lost a point", &x);
        }
    }
    Ok(())
}

pub fn check_join_widen<D: NumericDomain<Dim = String, Scalar = Int>>(n: usize, a: &[RawCons], b: &[RawCons]) -> Result<(), TestCaseError> {
    let (a, b): (D, D) = (state(n, a), state(n, b));
    let j = a.join(&b).unwrap();
    let w = a.widen(&j).unwrap();
    let w2 = a.widen(&b).unwrap();
    let (ga, gb, gj, gw, gw2) = (Gamma::of(&a), Gamma::of(&b), Gamma::of(&j), Gamma::of(&w), Gamma::of(&w2));
    let a_le_j = a.leq(&j).unwrap();
    let b_le_j = b.leq(&j).unwrap();
    prop_assert!(a_le_j && b_le_j, "join is not an upper bound: {a:?} {b:?} {j:?}");
    for x in grid(n) {
        let inputs = ga.contains(&x) || gb.contains(&x);
        if inputs && !gj.contains(&x) {
            return fails("join misses an input point", &x);
        }
        if gj.contains(&x) && !gw.contains(&x) {
            return fails("widen(a, a ⊔ b) misses a point of a ⊔ b", &x);
        }
        if inputs && !gw2.contains(&x) {
            return fails("widen(a, b) misses an input point", &x);
        }
    }
    Ok(())
}

pub fn check_order<D: NumericDomain<Dim = String, Scalar = Int>>(n: usize, a: &[RawCons], b: &[RawCons], c: &RawCons) -> Result<(), TestCaseError> {
    let (a, b): (D, D) = (state(n, a), state(n, b));
    let (ga, gb) = (Gamma::of(&a), Gamma::of(&b));
    let c = RawCons { eq: false, ..c.clone() }.build().remove(0);
    let leq = a.leq(&b).unwrap();
    let ent = a.entails(&c).unwrap();
    for x in grid(n) {
        if !ga.contains(&x) {
            continue;
        }
        if leq && !gb.contains(&x) {
            return fails("leq holds but a point of a is outside b", &x);
        }
        if ent && !holds(&c, &x) {
            return fails("entailed constraint fails", &x);
        }
        for (i, d) in dims(n).iter().enumerate() {
            let bd = a.bounds(d).unwrap().expect("nonempty state has bounds");
            if !bd.contains(&Int::from(x[i])) {
                return fails(&format!("bounds of {d} exclude a point"), &x);
            }
        }
    }
    Ok(())
}

pub fn check_guard<D: NumericDomain<Dim = String, Scalar = Int>>(n: usize, s: &[RawCons], l: &Expr, op: CmpOp, r: &Expr) -> Result<(), TestCaseError> {
    let s: D = state(n, s);
    let g = Guard::new(l.clone(), op, r.clone());
    let gs = Gamma::of(&s);
    let interp = s.interp(&g).unwrap();
    let assumed = Gamma::of(&s.assume(&g).unwrap());
    for x in grid(n) {
        if !gs.contains(&x) || !op.eval(&eval(l, &x), &eval(r, &x)) {
            continue;
        }
        match &interp {
            Interpreted::Unsat => return fails("guard declared unsatisfiable", &x),
            Interpreted::Constraints(cs) => {
                if let Some(c) = cs.iter().find(|c| !holds(c, &x)) {
                    return fails(&format!("interp produced {c} which fails"), &x);
                }
            }
        }
        if !assumed.contains(&x) {
            return fails("assume lost a point", &x);
        }
    }
    Ok(())
}

pub fn check_update<D: NumericDomain<Dim = String, Scalar = Int>>(
    n: usize,
    s: &[RawCons],
    p: usize,
    rhs: &Expr,
    mode: UpdateMode,
) -> Result<(), TestCaseError> {
    let st: D = state(n, s);
    let pd = dim(p);
    // Strong writes take right-hand sides free of the target.
    let rhs = match mode {
        UpdateMode::Strong if rhs.mentions(&pd) => Expr::dim(dim((p + 1) % n)).add(Expr::int(1)),
        _ => rhs.clone(),
    };
    let out = update(&st, &pd, &rhs, mode).unwrap();
    let (gs, go) = (Gamma::of(&st), Gamma::of(&out));
    // A weak write to an unconstrained dimension is a first write and
    // replaces the value.
    let weak = matches!(mode, UpdateMode::Weak | UpdateMode::WeakDup) && !st.is_unconstrained(&pd).unwrap();
    let pts = grid(n);
    for x in &pts {
        if !gs.contains(x) {
            continue;
        }
        if weak && !go.contains(x) {
            return fails("weak update lost the old state", x);
        }
        match mode {
            UpdateMode::Strong | UpdateMode::Weak => {
                let mut y = x.clone();
                y[p] = eval(&rhs, x);
                if !go.contains(&y) {
                    return fails(&format!("update {pd} := {rhs:?} lost the image"), x);
                }
            }
            UpdateMode::StrongDup | UpdateMode::WeakDup => {
                let NumExpr::Dim(q) = &rhs else { unreachable!() };
                let qi: usize = q[1..].parse().unwrap();
                // Any value the source can take alongside the other dims.
                for v in LO..=HI {
                    let witness = (LO..=HI).any(|w| {
                        let mut z = x.clone();
                        z[qi] = v;
                        z[p] = w;
                        gs.contains(&z)
                    });
                    if witness {
                        let mut y = x.clone();
                        y[p] = v;
                        if !go.contains(&y) {
                            return fails(&format!("dup {pd} := copy of {q} lost {v}"), x);
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn check_project<D: NumericDomain<Dim = String, Scalar = Int>>(n: usize, s: &[RawCons], away: &BTreeSet<usize>) -> Result<(), TestCaseError> {
    let st: D = state(n, s);
    let ds: Vec<String> = away.iter().map(|i| dim(*i)).collect();
    let out = st.project_away(&ds).unwrap();
    prop_assert!(ds.iter().all(|d| !out.has_dim(d)));
    let (gs, go) = (Gamma::of(&st), Gamma::of(&out));
    for x in grid(n) {
        if gs.contains(&x) && !go.contains(&x) {
            return fails("projection lost a point", &x);
        }
    }
    Ok(())
}

/// Iterates `w' = widen(w, join(w, c))` along an increasing chain and
/// counts how often the widened state changes.
pub fn widening_changes<D: NumericDomain<Dim = String, Scalar = Int>>(n: usize, steps: &[Vec<RawCons>]) -> usize {
    let mut c: D = state(n, &steps[0]);
    let mut w = c.clone();
    let mut changes = 0;
    for s in &steps[1..] {
        c = c.join(&state(n, s)).unwrap();
        let next = w.widen(&w.join(&c).unwrap()).unwrap();
        if !next.sem_eq(&w).unwrap() {
            changes += 1;
        }
        assert!(w.leq(&next).unwrap(), "widening went down");
        w = next;
    }
    changes
}

pub fn small_n() -> impl Strategy<Value = usize> {
    prop_oneof![3 => 1usize..=3, 1 => Just(4usize)]
}

pub fn mode() -> impl Strategy<Value = UpdateMode> {
    prop_oneof![Just(UpdateMode::Strong), Just(UpdateMode::Weak), Just(UpdateMode::StrongDup), Just(UpdateMode::WeakDup)]
}

fn property<S: Strategy>(name: &str, cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    use proptest::test_runner::{Config, TestRunner};
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

/// Runs every property for domain `D` with `cases` cases each.
pub fn suite<D: NumericDomain<Dim = String, Scalar = Int>>(cases: u32) -> Result<(), String> {
    property("construction", cases, small_n().prop_flat_map(|n| (Just(n), raw_state(n, 4))), |(n, s)| check_construction::<D>(n, &s))?;
    property("join and widen", cases, small_n().prop_flat_map(|n| (Just(n), raw_state(n, 4), raw_state(n, 4))), |(n, a, b)| {
        check_join_widen::<D>(n, &a, &b)
    })?;
    property("order", cases, small_n().prop_flat_map(|n| (Just(n), raw_state(n, 3), raw_state(n, 3), raw_cons(n))), |(n, a, b, c)| {
        check_order::<D>(n, &a, &b, &c)
    })?;
    property("guards", cases, small_n().prop_flat_map(|n| (Just(n), raw_state(n, 4), expr(n), cmp(), expr(n))), |(n, s, l, op, r)| {
        check_guard::<D>(n, &s, &l, op, &r)
    })?;
    property("updates", cases, update_case(), |(n, s, p, rhs, m)| check_update::<D>(n, &s, p, &rhs, m))?;
    property("projection", cases, small_n().prop_flat_map(|n| (Just(n), raw_state(n, 4), prop::collection::btree_set(0..n, 0..=n))), |(n, s, away)| {
        check_project::<D>(n, &s, &away)
    })?;
    property("widening", cases, chain_case(), |(n, steps)| check_widening::<D>(n, &steps))
}

/// A state, a target, a right-hand side and a mode; duplicating modes get
/// a source dimension distinct from the target.
pub fn update_case() -> impl Strategy<Value = (usize, Vec<RawCons>, usize, Expr, UpdateMode)> {
    (2usize..=3).prop_flat_map(|n| (Just(n), raw_state(n, 4), 0..n, 0..n, expr(n), mode())).prop_map(|(n, s, p, q, e, m)| {
        let rhs = match m {
            UpdateMode::StrongDup | UpdateMode::WeakDup => Expr::dim(dim(if q == p { (p + 1) % n } else { q })),
            _ => e,
        };
        (n, s, p, rhs, m)
    })
}

/// Increasing chains start from at most `2n` constraints.
pub fn chain_case() -> impl Strategy<Value = (usize, Vec<Vec<RawCons>>)> {
    (1usize..=4).prop_flat_map(|n| (Just(n), prop::collection::vec(raw_state(n, 2 * n), 2..24)))
}

pub fn check_widening<D: NumericDomain<Dim = String, Scalar = Int>>(n: usize, steps: &[Vec<RawCons>]) -> Result<(), TestCaseError> {
    let changes = widening_changes::<D>(n, steps);
    prop_assert!(changes <= 2 * n + 2, "{changes} changes over {n} dims");
    Ok(())
}
