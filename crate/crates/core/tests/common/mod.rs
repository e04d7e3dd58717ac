#![allow(dead_code)]

pub mod examples;

use optkit::exact_arith::{dot, int, Rational};
use optkit::lp_model::{Constraint, LpProblem, Relation, Sense, Tag};
use optkit::reference_oracle::simplex_solve;
use rand::Rng;

pub fn random_lp<R: Rng>(rng: &mut R, max_n: usize, max_m: usize) -> LpProblem {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let sense = if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let objective = (0..n).map(|_| int(rng.gen_range(-9..=9))).collect();
    let constraints = (0..m)
        .map(|_| {
            let coeffs = (0..n).map(|_| int(rng.gen_range(-9..=9))).collect();
            let relation = match rng.gen_range(0..10) {
                0..=5 => Relation::Le,
                6..=8 => Relation::Ge,
                _ => Relation::Eq,
            };
            Constraint::new(coeffs, relation, int(rng.gen_range(-20..=20)))
        })
        .collect();
    LpProblem::new(sense, objective, constraints).expect("shape")
}

/// Maximization over `a.x <= b` with `b > 0`, so a small box near the origin is
/// interior, and a unique optimum where exactly two rows are tight with `C`
/// strictly inside their normal cone.
pub fn random_nondegenerate_2d<R: Rng>(rng: &mut R) -> LpProblem {
    loop {
        let m = rng.gen_range(2..=6);
        let c: Vec<i64> = (0..2).map(|_| rng.gen_range(-9..=9)).collect();
        if c.iter().all(|&v| v == 0) {
            continue;
        }
        let rows: Vec<(Vec<i64>, i64)> = (0..m)
            .map(|_| ((0..2).map(|_| rng.gen_range(-9..=9)).collect(), rng.gen_range(1..=20)))
            .collect();
        let p = LpProblem::new(
            Sense::Maximize,
            c.iter().map(|&v| int(v)).collect(),
            rows.iter().map(|(a, b)| Constraint::new(a.iter().map(|&v| int(v)).collect(), Relation::Le, int(*b))).collect(),
        )
        .expect("shape");
        let out = simplex_solve(&p);
        if out.tag != Tag::Optimal {
            continue;
        }
        // Tight planes among rows and coordinate bounds.
        let mut normals: Vec<Vec<Rational>> = Vec::new();
        for r in &p.constraints {
            if dot(&r.coeffs, &out.x) == r.rhs {
                normals.push(r.coeffs.clone());
            }
        }
        for k in 0..2 {
            if out.x[k].is_zero() {
                let mut e = vec![int(0), int(0)];
                e[k] = int(-1);
                normals.push(e);
            }
        }
        if normals.len() != 2 {
            continue;
        }
        // C = l1 n1 + l2 n2 with l1, l2 > 0.
        let (a, b) = (&normals[0], &normals[1]);
        let det = &a[0] * &b[1] - &a[1] * &b[0];
        if det.is_zero() {
            continue;
        }
        let l1 = (&p.objective[0] * &b[1] - &p.objective[1] * &b[0]) / &det;
        let l2 = (&a[0] * &p.objective[1] - &a[1] * &p.objective[0]) / &det;
        if l1.is_positive() && l2.is_positive() {
            return p;
        }
    }
}
