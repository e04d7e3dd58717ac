//! Worked-example fixtures shared by the acceptance harness.

use optkit::exact_arith::{int, rat, Rational};
use optkit::groebner_nlp::{MultiPoly, NlpConstraint, NlpProblem};
use optkit::lp_model::{Constraint, LpProblem, Relation, Sense};

use Relation::{Eq, Ge, Le};

pub fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| int(x)).collect()
}

pub fn ex2_1() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[1, 1], &[(&[1, 2], Le, 4), (&[-1, 1], Le, 1), (&[4, 2], Le, 12)])
}

pub fn ex2_2() -> LpProblem {
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

pub fn ex2_3() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[-1, 3], &[(&[-1, -1], Le, -2), (&[1, -2], Le, 0), (&[-2, 1], Le, 1)])
}

pub fn ex2_4() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[3, 2], &[(&[1, 1], Le, 4), (&[2, 1], Le, 5), (&[1, -4], Le, -2)])
}

pub fn ex2_5() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[3, 2], &[(&[2, -1], Le, -1), (&[-1, 2], Le, 0)])
}

pub fn ex2_6() -> LpProblem {
    LpProblem::from_ints(
        Sense::Maximize,
        &[100, 10, 1],
        &[(&[1, 0, 0], Le, 1), (&[20, 1, 0], Le, 100), (&[200, 20, 1], Le, 10000)],
    )
}

pub fn ex2_7() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[3, 2], &[(&[-1, 2], Le, 4), (&[3, 2], Le, 14), (&[1, -1], Le, 3)])
}

pub fn ex2_8() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[6, 3], &[(&[1, 1], Le, 5), (&[4, 1], Le, 12), (&[-1, -2], Le, -4)])
}

pub fn ex2_10() -> LpProblem {
    let row = |a: Vec<Rational>, b: i64| Constraint::new(a, Le, int(b));
    LpProblem::new(
        Sense::Maximize,
        ints(&[4, 3]),
        vec![row(vec![int(1), rat(7, 2)], 9), row(ints(&[2, 1]), 8), row(ints(&[1, 1]), 6)],
    )
    .unwrap()
}

pub fn ex2_12() -> LpProblem {
    LpProblem::from_ints(
        Sense::Minimize,
        &[-3, 1, 1],
        &[(&[-1, 2, -1], Ge, -11), (&[-4, 1, 2], Ge, 3), (&[2, 0, -1], Ge, -1), (&[-2, 0, 1], Ge, 1)],
    )
}

pub fn ex2_13() -> LpProblem {
    LpProblem::from_ints(Sense::Minimize, &[1, -2], &[(&[1, -1], Ge, 2), (&[-1, 1], Ge, -1)])
}

pub fn ex2_14() -> LpProblem {
    LpProblem::from_ints(Sense::Minimize, &[-1, -1], &[(&[1, -1], Ge, 5), (&[1, -1], Ge, -5)])
}

pub fn ex2_15() -> LpProblem {
    LpProblem::from_ints(Sense::Minimize, &[1, 4, 0, 3], &[(&[1, 2, -1, 1], Ge, 3), (&[-2, -1, 4, 1], Ge, 2)])
}

pub fn geo_example_2() -> LpProblem {
    LpProblem::from_ints(
        Sense::Maximize,
        &[10, 6, 4],
        &[(&[1, 1, 1], Le, 100), (&[10, 4, 5], Le, 600), (&[2, 2, 6], Le, 300)],
    )
}

pub fn ex4_1() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[-1, 10], &[(&[-1, 5], Le, 25), (&[2, 1], Le, 24)]).all_integer()
}

pub fn ex4_2() -> LpProblem {
    LpProblem::from_ints(
        Sense::Maximize,
        &[3, 2, 3, 4, 1],
        &[
            (&[4, 3, -2, 2, -1], Le, 12),
            (&[2, 3, 1, 3, 1], Le, 15),
            (&[3, 2, 1, 2, 5], Le, 20),
            (&[2, 4, 1, 6, 1], Le, 25),
            (&[0, 0, 1, 0, 0], Le, 3),
        ],
    )
    .all_integer()
}

pub fn poly(nvars: usize, terms: &[(&[u32], i64)]) -> MultiPoly {
    MultiPoly::from_terms(nvars, terms.iter().map(|(e, c)| (e.to_vec(), int(*c))))
}

fn lin(a: i64, b: i64) -> MultiPoly {
    poly(2, &[(&[1, 0], a), (&[0, 1], b)])
}

fn three_rows() -> Vec<NlpConstraint> {
    vec![
        NlpConstraint::new(lin(1, 1), Le, int(4)),
        NlpConstraint::new(lin(2, 1), Le, int(5)),
        NlpConstraint::new(lin(-1, 4), Ge, int(2)),
    ]
}

pub fn ex3_1() -> NlpProblem {
    NlpProblem::new(Sense::Maximize, poly(2, &[(&[2, 0], -1), (&[1, 0], 4), (&[0, 1], 2)]), three_rows())
}

pub fn ex3_2() -> NlpProblem {
    let f = poly(2, &[(&[2, 0], -8), (&[0, 2], -16), (&[1, 0], 24), (&[0, 1], 56)]);
    NlpProblem::new(Sense::Maximize, f, three_rows())
}

pub fn ex3_3() -> NlpProblem {
    let f = poly(2, &[(&[2, 0], 1), (&[1, 0], -6), (&[0, 2], 1), (&[0, 1], -8), (&[0, 0], 25)]);
    NlpProblem::new(Sense::Minimize, f, vec![NlpConstraint::new(lin(2, 1), Eq, int(3))])
}

pub fn ex3_4() -> NlpProblem {
    NlpProblem::new(
        Sense::Minimize,
        poly(2, &[(&[2, 0], 1), (&[0, 1], -1)]),
        vec![
            NlpConstraint::new(lin(1, 1), Eq, int(6)),
            NlpConstraint::new(lin(1, 0), Ge, int(1)),
            NlpConstraint::new(poly(2, &[(&[2, 0], 1), (&[0, 2], 1)]), Le, int(26)),
        ],
    )
}

pub fn ex3_5() -> NlpProblem {
    let f = poly(2, &[(&[1, 0], -6), (&[2, 0], 2), (&[1, 1], -2), (&[0, 2], 2)]);
    NlpProblem::new(Sense::Minimize, f, vec![NlpConstraint::new(lin(1, 1), Le, int(2))])
}
