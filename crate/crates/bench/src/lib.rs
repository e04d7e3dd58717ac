//! Fixed problem instances for the solver benchmarks.

use optkit::groebner_nlp::NlpConstraint;
use optkit::{LpProblem, MultiPoly, NlpProblem, Relation, Sense};

use Relation::Le;

pub fn small_lp() -> LpProblem {
    LpProblem::from_ints(Sense::Maximize, &[1, 1], &[(&[1, 2], Le, 4), (&[-1, 1], Le, 1), (&[4, 2], Le, 12)])
}

pub fn klee_minty() -> LpProblem {
    LpProblem::from_ints(
        Sense::Maximize,
        &[100, 10, 1],
        &[(&[1, 0, 0], Le, 1), (&[20, 1, 0], Le, 100), (&[200, 20, 1], Le, 10000)],
    )
}

pub fn three_var_lp() -> LpProblem {
    LpProblem::from_ints(
        Sense::Maximize,
        &[10, 6, 4],
        &[(&[1, 1, 1], Le, 100), (&[10, 4, 5], Le, 600), (&[2, 2, 6], Le, 300)],
    )
}

pub fn five_var_ip() -> LpProblem {
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

pub fn quadratic() -> NlpProblem {
    let poly = |terms: &[([u32; 2], i64)]| {
        MultiPoly::from_terms(2, terms.iter().map(|(e, c)| (e.to_vec(), optkit::exact_arith::int(*c))))
    };
    let row = |a: i64, b: i64, rel: Relation, rhs: i64| {
        NlpConstraint::new(poly(&[([1, 0], a), ([0, 1], b)]), rel, optkit::exact_arith::int(rhs))
    };
    NlpProblem::new(
        Sense::Maximize,
        poly(&[([2, 0], -8), ([0, 2], -16), ([1, 0], 24), ([0, 1], 56)]),
        vec![row(1, 1, Le, 4), row(2, 1, Le, 5), row(-1, 4, Relation::Ge, 2)],
    )
}
