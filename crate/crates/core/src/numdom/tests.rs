use super::*;

type I = Intervals<String, i64>;
type P = Polyhedron<String, i64>;

fn s(x: &str) -> String {
    x.to_string()
}

fn d(x: &str) -> NumExpr<String, i64> {
    NumExpr::dim(s(x))
}

fn n(v: i64) -> NumExpr<String, i64> {
    NumExpr::int(v)
}

fn dims(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|x| s(x)).collect()
}

fn le(ts: &[(&str, i64)], b: i64) -> Constraint<String, i64> {
    Constraint::le(ts.iter().map(|(k, a)| (s(k), *a)), b)
}

fn eq(ts: &[(&str, i64)], b: i64) -> Constraint<String, i64> {
    Constraint::eq(ts.iter().map(|(k, a)| (s(k), *a)), b)
}

fn range<D: NumericDomain<Dim = String, Scalar = i64>>(st: &D, x: &str) -> (Option<i64>, Option<i64>) {
    let b = st.bounds(&s(x)).unwrap().unwrap();
    (b.lo, b.hi)
}

fn with_range<D: NumericDomain<Dim = String, Scalar = i64>>(ds: &[&str], x: &str, lo: i64, hi: i64) -> D {
    D::top(dims(ds))
        .add_constraints(&[Constraint::lower(s(x), lo), Constraint::upper(s(x), hi)])
        .unwrap()
}

#[test]
fn int_interp_substitutes_other_bounds() {
    let st: I = with_range(&["x", "y"], "y", 0, 5);
    let g = Guard::new(d("x"), CmpOp::Le, d("y"));
    match st.interp(&g).unwrap() {
        Interpreted::Constraints(cs) => assert!(cs.contains(&Constraint::upper(s("x"), 5))),
        Interpreted::Unsat => panic!(),
    }
}

#[test]
fn pol_interp_is_verbatim() {
    let st = P::top(dims(&["p1", "p2"]));
    let g = Guard::new(n(3).mul(d("p1")).sub(d("p2")), CmpOp::Le, n(5));
    assert_eq!(st.interp(&g).unwrap(), Interpreted::Constraints(vec![le(&[("p1", 3), ("p2", -1)], 5)]));
}

#[test]
fn disequality_gives_no_refinement() {
    let st: I = with_range(&["x"], "x", -3, 3);
    let g = Guard::new(d("x"), CmpOp::Ne, n(0));
    assert_eq!(st.interp(&g).unwrap(), Interpreted::Constraints(vec![]));
    assert_eq!(st.assume(&g).unwrap(), st);
}

#[test]
fn projection_keeps_transitive_constraints() {
    let st = P::top(dims(&["x", "y"])).add_constraints(&[le(&[("y", 1), ("x", -1)], 0), le(&[("x", 1)], 5)]).unwrap();
    let away = st.project_away(&[s("x")]).unwrap();
    assert_eq!(away.constraints(), vec![le(&[("y", 1)], 5)]);

    let st = P::top(dims(&["x", "y"])).add_constraints(&[le(&[("x", 1), ("y", -1)], 0), le(&[("y", 1)], 5)]).unwrap();
    let keep = st.project_to(&[s("x")].into_iter().collect());
    assert_eq!(keep.constraints(), vec![le(&[("x", 1)], 5)]);
    assert_eq!(st.project_away(&[]).unwrap(), st);
}

#[test]
fn add_constraints_meets_and_detects_bottom() {
    let st: I = with_range(&["x"], "x", 0, 10);
    assert_eq!(range(&st.add_constraints(&[Constraint::lower(s("x"), 3)]).unwrap(), "x"), (Some(3), Some(10)));
    let st: I = with_range(&["x"], "x", 0, 2);
    assert!(st.add_constraints(&[Constraint::lower(s("x"), 5)]).unwrap().is_bottom());

    let p = P::top(dims(&["x", "y"])).add_constraints(&[eq(&[("x", 1), ("y", -1)], 0)]).unwrap();
    let p = p.add_constraints(&[eq(&[("y", 1)], 3)]).unwrap();
    assert!(p.entails(&eq(&[("x", 1)], 3)).unwrap());
}

#[test]
fn concat_is_disjoint_union() {
    let a: I = with_range(&["x"], "x", 0, 1);
    let b: I = with_range(&["y"], "y", 2, 3);
    let c = a.concat(&b).unwrap();
    assert_eq!(range(&c, "x"), (Some(0), Some(1)));
    assert_eq!(range(&c, "y"), (Some(2), Some(3)));
    assert_eq!(a.concat(&I::top(Vec::new())).unwrap(), a);
    assert!(matches!(a.concat(&a), Err(DomainError::Overlap(_))));
}

#[test]
fn joins() {
    for pol in [false, true] {
        let x10 = vec![eq(&[("x", 1)], 10)];
        let x5 = vec![eq(&[("x", 1)], 5)];
        let check = |j: (Option<i64>, Option<i64>)| assert_eq!(j, (Some(5), Some(10)));
        if pol {
            let a = P::top(dims(&["x"])).add_constraints(&x10).unwrap();
            let b = P::top(dims(&["x"])).add_constraints(&x5).unwrap();
            check(range(&a.join(&b).unwrap(), "x"));
            assert_eq!(a.join(&P::bottom(dims(&["x"]))).unwrap(), a);
        } else {
            let a = I::top(dims(&["x"])).add_constraints(&x10).unwrap();
            let b = I::top(dims(&["x"])).add_constraints(&x5).unwrap();
            check(range(&a.join(&b).unwrap(), "x"));
            assert_eq!(a.join(&I::bottom(dims(&["x"]))).unwrap(), a);
        }
    }
}

#[test]
fn widening() {
    let a: I = with_range(&["i"], "i", 0, 0);
    let b: I = with_range(&["i"], "i", 0, 1);
    assert_eq!(range(&a.widen(&b).unwrap(), "i"), (Some(0), None));
    let c: I = with_range(&["x"], "x", 0, 10);
    assert_eq!(c.widen(&c).unwrap(), c);

    let a: P = with_range(&["x"], "x", 0, 0);
    let b: P = with_range(&["x"], "x", 0, 1);
    assert_eq!(a.widen(&b).unwrap().constraints(), vec![le(&[("x", -1)], 0)]);
}

#[test]
fn updates() {
    let st = I::top(dims(&["x"]));
    assert_eq!(range(&update(&st, &s("x"), &n(5), UpdateMode::Strong).unwrap(), "x"), (Some(5), Some(5)));

    for pol in [false, true] {
        let o = s("o_f");
        let r = if pol {
            let st = P::top(dims(&["o_f"]));
            let st = update(&st, &o, &n(5), UpdateMode::Weak).unwrap();
            assert_eq!(range(&st, "o_f"), (Some(5), Some(5)));
            range(&update(&st, &o, &n(7), UpdateMode::Weak).unwrap(), "o_f")
        } else {
            let st = I::top(dims(&["o_f"]));
            let st = update(&st, &o, &n(5), UpdateMode::Weak).unwrap();
            range(&update(&st, &o, &n(7), UpdateMode::Weak).unwrap(), "o_f")
        };
        assert_eq!(r, (Some(5), Some(7)));
    }

    assert!(matches!(update(&I::top(dims(&["x"])), &s("y"), &n(1), UpdateMode::Strong), Err(DomainError::UnknownDim(_))));
    assert!(matches!(
        update(&I::top(dims(&["x"])), &s("x"), &d("x").add(n(1)), UpdateMode::Strong),
        Err(DomainError::SelfReference(_))
    ));
}

#[test]
fn strong_dup_copies_without_linking() {
    let st = P::top(dims(&["y", "o_f", "x_f"]))
        .add_constraints(&[le(&[("y", 1), ("o_f", -1)], 0), le(&[("o_f", 1)], 9)])
        .unwrap();
    let st = update(&st, &s("x_f"), &d("o_f"), UpdateMode::StrongDup).unwrap();
    assert!(st.entails(&le(&[("x_f", 1)], 9)).unwrap());
    assert!(st.entails(&le(&[("y", 1), ("x_f", -1)], 0)).unwrap());
    let st = update(&st, &s("x_f"), &n(100), UpdateMode::Strong).unwrap();
    assert!(st.entails(&le(&[("o_f", 1)], 9)).unwrap());
    assert!(st.entails(&le(&[("y", 1), ("o_f", -1)], 0)).unwrap());
}

#[test]
fn entailment() {
    let a: I = with_range(&["x"], "x", 3, 10);
    assert!(a.entails(&Constraint::lower(s("x"), 0)).unwrap());
    let b: I = with_range(&["x"], "x", -1, 10);
    assert!(!b.entails(&Constraint::lower(s("x"), 0)).unwrap());
}

/// The two-branch function that returns `y1 - y2` with `y1 = x + 10` and
/// `y2 = x` under `0 <= x <= 10`.
fn offset_difference<D: NumericDomain<Dim = String, Scalar = i64>>() -> D {
    let st: D = with_range(&["x", "y1", "y2", "ret"], "x", 0, 10);
    let st = update(&st, &s("y1"), &d("x").add(n(10)), UpdateMode::Strong).unwrap();
    let st = update(&st, &s("y2"), &d("x"), UpdateMode::Strong).unwrap();
    update(&st, &s("ret"), &d("y1").sub(d("y2")), UpdateMode::Strong).unwrap()
}

#[test]
fn relational_precision() {
    let i: I = offset_difference();
    assert_eq!(range(&i, "y1"), (Some(10), Some(20)));
    assert_eq!(range(&i, "ret"), (Some(0), Some(20)));
    let p: P = offset_difference();
    assert!(p.entails(&eq(&[("ret", 1)], 10)).unwrap());
    assert!(p.entails(&eq(&[("y2", 1), ("x", -1)], 0)).unwrap());
    assert_eq!(range(&p, "ret"), (Some(10), Some(10)));
    assert_eq!(range(&P::top(dims(&["p"])), "p"), (None, None));
}

#[test]
fn bottom_bounds_are_distinct() {
    assert_eq!(I::bottom(dims(&["x"])).bounds(&s("x")).unwrap(), None);
    assert_eq!(P::bottom(dims(&["x"])).bounds(&s("x")).unwrap(), None);
}

#[test]
fn nonlinear_products() {
    let st: P = with_range(&["x", "y", "z"], "x", 2, 2);
    let st = update(&st, &s("z"), &d("x").mul(d("y")), UpdateMode::Strong).unwrap();
    assert!(st.entails(&eq(&[("z", 1), ("y", -2)], 0)).unwrap());

    let st: P = with_range(&["x", "y", "z"], "x", 1, 3);
    let st = st.add_constraints(&[Constraint::lower(s("y"), -1), Constraint::upper(s("y"), 2)]).unwrap();
    let st = update(&st, &s("z"), &d("x").mul(d("y")), UpdateMode::Strong).unwrap();
    assert_eq!(range(&st, "z"), (Some(-3), Some(6)));
}

#[test]
fn render_is_sorted_text() {
    let st = P::top(dims(&["x", "y"])).add_constraints(&[le(&[("y", 1)], 3), eq(&[("x", 1)], 1)]).unwrap();
    assert_eq!(st.render(), "x = 1\ny <= 3\n");
    assert_eq!(P::bottom(dims(&["x"])).render(), "bottom\n");
}
