use optkit::exact_arith::{int, rat, AffineForm, ParamMatrix, Rational, RowOp};
use optkit::lp_model::{
    assemble_augmented, dual_of, heuristic_reorder, permute_constraints, to_standard_form, Constraint, LpProblem,
    Relation, Sense, Tag,
};
use optkit::parametric_lp::{
    acceptability, classify, nonbasic_columns_ok, solve_parametric, thresholds, Acceptability, Classification,
    ParametricTableau,
};
use optkit::reference_oracle::simplex_solve;

use Relation::{Ge, Le};

fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| int(x)).collect()
}

fn af(c: Rational, e: Rational) -> AffineForm {
    AffineForm::new(c, e)
}

fn ex2_1() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[1, 1], &[(&[1, 2], Le, 4), (&[-1, 1], Le, 1), (&[4, 2], Le, 12)])
}

// Beale's cycling example, dual form; third row bounds x3 by 1.
fn ex2_2() -> LpProblem {
    let row = |a: Vec<Rational>, b: i64| Constraint::new(a, Le, int(b));
    LpProblem::new(
        Sense::Maximize,
        vec![rat(3, 4), int(-20), rat(1, 2), int(-6)],
        vec![
            row(vec![rat(1, 4), int(-8), int(-1), int(9)], 0),
            row(vec![rat(1, 2), int(-12), rat(-1, 2), int(3)], 0),
            row(ints(&[0, 0, 1, 0]), 1),
        ],
    )
    .unwrap()
}

fn ex2_3() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[-1, 3], &[(&[-1, -1], Le, -2), (&[1, -2], Le, 0), (&[-2, 1], Le, 1)])
}

fn ex2_4() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[3, 2], &[(&[1, 1], Le, 4), (&[2, 1], Le, 5), (&[1, -4], Le, -2)])
}

fn ex2_5() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[3, 2], &[(&[2, -1], Le, -1), (&[-1, 2], Le, 0)])
}

fn ex2_6() -> LpProblem {
    LpProblem::from_ints(
        Sense::Maximize,
        &[100, 10, 1],
        &[(&[1, 0, 0], Le, 1), (&[20, 1, 0], Le, 100), (&[200, 20, 1], Le, 10000)],
    )
}

fn ex2_7() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[3, 2], &[(&[-1, 2], Le, 4), (&[3, 2], Le, 14), (&[1, -1], Le, 3)])
}

fn ex2_8() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[6, 3], &[(&[1, 1], Le, 5), (&[4, 1], Le, 12), (&[-1, -2], Le, -4)])
}

fn ex2_10() -> LpProblem {
    let row = |a: Vec<Rational>, b: i64| Constraint::new(a, Le, int(b));
    LpProblem::new(
        Sense::Maximize,
        ints(&[4, 3]),
        vec![row(vec![int(1), rat(7, 2)], 9), row(ints(&[2, 1]), 8), row(ints(&[1, 1]), 6)],
    )
    .unwrap()
}

fn ex2_12() -> LpProblem {
    LpProblem::from_ints(
        Sense::Minimize,
        &[-3, 1, 1],
        &[(&[-1, 2, -1], Ge, -11), (&[-4, 1, 2], Ge, 3), (&[2, 0, -1], Ge, -1), (&[-2, 0, 1], Ge, 1)],
    )
}

fn ex2_13() -> LpProblem {
    LpProblem::from_ints(Sense::Minimize, &[1, -2], &[(&[1, -1], Ge, 2), (&[-1, 1], Ge, -1)])
}

fn ex2_14() -> LpProblem {
    LpProblem::from_ints(Sense::Minimize, &[-1, -1], &[(&[1, -1], Ge, 5), (&[1, -1], Ge, -5)])
}

fn ex2_15() -> LpProblem {
    LpProblem::from_ints(Sense::Minimize, &[1, 4, 0, 3], &[(&[1, 2, -1, 1], Ge, 3), (&[-2, -1, 4, 1], Ge, 2)])
}

fn assert_optimal(p: &LpProblem, value: Rational, x: Option<&[Rational]>) {
    let out = solve_parametric(p);
    assert_eq!(out.tag, Tag::Optimal, "trace: {:?}", out.trace);
    assert_eq!(out.value, Some(value));
    assert!(out.verify(p));
    if let Some(x) = x {
        assert_eq!(out.x, x);
    }
}

fn assert_tag(p: &LpProblem, tag: Tag) {
    let out = solve_parametric(p);
    assert_eq!(out.effective_tag(), tag);
    assert_ne!(out.tag, Tag::Fallback, "trace: {:?}", out.trace);
}

#[test]
fn ex2_1_tableau_and_optimum() {
    let r = assemble_augmented(&to_standard_form(&ex2_1()).unwrap()).rref();
    assert_eq!(r.body[0], vec![int(1), int(0), int(0), int(0), rat(1, 2)]);
    assert_eq!(
        r.last_col,
        vec![af(int(-1), int(6)), af(int(2), int(-6)), af(int(-3), int(10)), af(int(-3), int(13))]
    );
    assert_optimal(&ex2_1(), rat(10, 3), Some(&[rat(8, 3), rat(2, 3)]));
}

#[test]
fn ex2_2_row_ops_give_transformed_tableau() {
    let t = ParametricTableau::build(&ex2_2()).unwrap();
    assert_eq!(t.r.last_col[0], af(rat(-14, 3), rat(4, 3)));
    assert_eq!(t.r.last_col[3], af(rat(-1, 18), rat(1, 9)));
    let ops = [
        RowOp::AddMultiple { target: 1, source: 3, k: rat(126, 24) },
        RowOp::AddMultiple { target: 0, source: 3, k: int(132) },
        RowOp::Scale(3, int(18)),
    ];
    let mut r: ParamMatrix = t.r.clone();
    for op in &ops {
        r.apply_in_place(op).unwrap();
    }
    assert_eq!(r.body[0], ints(&[1, 0, 0, 132, 0, 20, 16]));
    assert_eq!(r.body[1], vec![int(0), int(1), int(0), rat(21, 4), int(0), rat(3, 4), rat(5, 8)]);
    assert_eq!(r.body[3], ints(&[0, 0, 0, 18, 1, 1, 2]));
    assert_eq!(r.last_col[0], af(int(-12), int(16)));
    assert_eq!(r.last_col[1], af(rat(-1, 2), rat(5, 8)));
    assert_eq!(r.last_col[3], af(int(-1), int(2)));
}

#[test]
fn ex2_2_beale_dual() {
    assert_optimal(&ex2_2(), rat(5, 4), Some(&ints(&[1, 0, 1, 0])));
}

#[test]
fn ex2_3_unbounded() {
    let t = ParametricTableau::build(&ex2_3()).unwrap();
    assert!(t.r.last_col.iter().all(|f| f.dcoeff.is_positive()));
    assert_eq!(classify(&t), Classification::Unbounded);
    assert_tag(&ex2_3(), Tag::Unbounded);
}

#[test]
fn ex2_4_infeasible_start() {
    let t = ParametricTableau::build(&ex2_4()).unwrap();
    assert_eq!(t.r.last_col[3], af(rat(-9, 14), rat(36, 7)));
    assert_optimal(&ex2_4(), int(9), Some(&ints(&[1, 3])));
}

#[test]
fn ex2_5_infeasible() {
    assert_tag(&ex2_5(), Tag::Infeasible);
}

#[test]
fn ex2_6_klee_minty() {
    let t = ParametricTableau::build(&ex2_6()).unwrap();
    assert_eq!(t.r.last_col[2], af(int(2), int(-10000)));
    assert_optimal(&ex2_6(), int(10000), Some(&ints(&[0, 0, 10000])));
}

#[test]
fn ex2_7_direct_accept() {
    let t = ParametricTableau::build(&ex2_7()).unwrap();
    assert_eq!(thresholds(&t).0, Some(int(14)));
    assert_eq!(acceptability(&t), Acceptability::Accept);
    assert_optimal(&ex2_7(), int(14), Some(&ints(&[4, 1])));
}

#[test]
fn ex2_8_reorder() {
    let t = ParametricTableau::build(&ex2_8()).unwrap();
    assert!(!nonbasic_columns_ok(&t));
    let cands = heuristic_reorder(&ex2_8());
    let pos = |perm: &[usize]| cands.iter().position(|(p, _)| p == perm).unwrap();
    assert!(pos(&[0, 2, 1]) < pos(&[0, 1, 2]));
    let t = ParametricTableau::build(&permute_constraints(&ex2_8(), &[0, 2, 1]).unwrap()).unwrap();
    assert!(nonbasic_columns_ok(&t));
    assert_optimal(&ex2_8(), int(22), Some(&[rat(7, 3), rat(8, 3)]));
}

#[test]
fn ex2_9_and_2_11_permuted() {
    let q = permute_constraints(&ex2_4(), &[1, 2, 0]).unwrap();
    let t = ParametricTableau::build(&q).unwrap();
    assert_eq!(
        t.r.last_col,
        vec![af(int(1), int(-8)), af(int(-1), int(12)), af(int(-1), int(9)), af(int(-5), int(54))]
    );
    assert_eq!(acceptability(&t), Acceptability::Accept);
    assert_optimal(&ex2_4(), int(9), Some(&ints(&[1, 3])));
}

#[test]
fn ex2_10_reorder_among_first_three() {
    let t = ParametricTableau::build(&ex2_10()).unwrap();
    assert_eq!(acceptability(&t), Acceptability::Reject);
    let cands = heuristic_reorder(&ex2_10());
    assert!(cands.iter().take(3).any(|(p, _)| p == &[0, 2, 1]));
    let t = ParametricTableau::build(&permute_constraints(&ex2_10(), &[0, 2, 1]).unwrap()).unwrap();
    assert_eq!(acceptability(&t), Acceptability::Accept);
    assert_optimal(&ex2_10(), rat(53, 3), Some(&[rat(19, 6), rat(5, 3)]));
}

#[test]
fn ex2_12_minimization() {
    let sf = to_standard_form(&ex2_12()).unwrap();
    assert!(sf.slack_sign.iter().all(|&s| s == Some(-1)));
    assert_optimal(&ex2_12(), int(-2), Some(&ints(&[4, 1, 9])));
}

#[test]
fn ex2_13_primal_and_dual_infeasible() {
    let dual = dual_of(&ex2_13()).unwrap();
    assert_eq!(dual.sense, Sense::Maximize);
    assert_eq!(dual.objective, ints(&[2, -1]));
    assert_eq!(dual.constraints[1].coeffs, ints(&[-1, 1]));
    assert_eq!(dual.constraints[1].rhs, int(-2));
    assert_tag(&ex2_13(), Tag::Infeasible);
    assert_tag(&dual, Tag::Infeasible);
}

#[test]
fn ex2_14_primal_unbounded_dual_infeasible() {
    let dual = dual_of(&ex2_14()).unwrap();
    assert_eq!(dual.objective, ints(&[5, -5]));
    assert_eq!(dual.constraints[0].rhs, int(-1));
    assert_tag(&ex2_14(), Tag::Unbounded);
    assert_tag(&dual, Tag::Infeasible);
}

#[test]
fn ex2_15_minimization() {
    assert_optimal(&ex2_15(), int(7), Some(&ints(&[7, 0, 4, 0])));
}

#[test]
fn oracle_agrees_on_every_example() {
    let cases = [
        (ex2_1(), Some(rat(10, 3))),
        (ex2_2(), Some(rat(5, 4))),
        (ex2_6(), Some(int(10000))),
        (ex2_12(), Some(int(-2))),
        (ex2_15(), Some(int(7))),
        (ex2_3(), None),
        (ex2_5(), None),
    ];
    for (p, v) in cases {
        assert_eq!(simplex_solve(&p).value, v);
    }
}
