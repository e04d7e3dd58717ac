//! One line per acceptance criterion. Exits nonzero if any line fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::examples::*;
use num_bigint::BigInt;
use optkit::diophantine_ip::{diagonalize, eliminate_d, search_first_method, search_second_method, DioConfig, DioError, DioTable};
use optkit::exact_arith::{dot, int, rat, rref_rational_cols, AffineForm, ParamMatrix, Rational};
use optkit::geometric_lp::{solve_geometric, strictly_feasible, GeoAlgorithm, GeoConfig, InteriorPoint};
use optkit::groebner_nlp::{build_nlp_system, buchberger, normal_form, s_polynomial, solve_nlp, MultiPoly, NlpProblem};
use optkit::lp_model::{dual_of, permute_constraints, Constraint, LpProblem, Relation, Sense, Tag};
use optkit::parametric_lp::solve_parametric;
use optkit::reference_oracle::{brute_force_ip, grid_nlp, lp_box, simplex_solve, GridSchedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GEO_GAP: f64 = 1e-3;
const CHORD_TOL: f64 = 1e-6;
const GRID_TOL: f64 = 1e-4;

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(id: usize, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Verdict) -> bool {
    let t = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let el = t.elapsed();
    let res = match (res, limit) {
        (Ok(_), Some(l)) if el > l => Err(format!("took {:.2}s, limit {}s", el.as_secs_f64(), l.as_secs())),
        (r, _) => r,
    };
    let ok = res.is_ok();
    let detail = res.unwrap_or_else(|e| e);
    println!("{} [{id}] {title} ({:.2}s): {detail}", if ok { "PASS" } else { "FAIL" }, el.as_secs_f64());
    ok
}

enum Want {
    Opt(Rational, Option<Vec<Rational>>),
    Is(Tag),
}

fn lp_suite() -> Verdict {
    let p24 = permute_constraints(&ex2_4(), &[1, 2, 0]).unwrap();
    let cases: Vec<(&str, LpProblem, Want)> = vec![
        ("2.1", ex2_1(), Want::Opt(rat(10, 3), None)),
        ("2.2", ex2_2(), Want::Opt(rat(5, 4), Some(ints(&[1, 0, 1, 0])))),
        ("2.3", ex2_3(), Want::Is(Tag::Unbounded)),
        ("2.4", ex2_4(), Want::Opt(int(9), None)),
        ("2.5", ex2_5(), Want::Is(Tag::Infeasible)),
        ("2.6", ex2_6(), Want::Opt(int(10000), None)),
        ("2.7", ex2_7(), Want::Opt(int(14), None)),
        ("2.8", ex2_8(), Want::Opt(int(22), None)),
        ("2.9", p24.clone(), Want::Opt(int(9), None)),
        ("2.10", ex2_10(), Want::Opt(rat(53, 3), None)),
        ("2.11", p24, Want::Opt(int(9), Some(ints(&[1, 3])))),
        ("2.12", ex2_12(), Want::Opt(int(-2), Some(ints(&[4, 1, 9])))),
        ("2.13", ex2_13(), Want::Is(Tag::Infeasible)),
        ("2.13 dual", dual_of(&ex2_13()).unwrap(), Want::Is(Tag::Infeasible)),
        ("2.14", ex2_14(), Want::Is(Tag::Unbounded)),
        ("2.14 dual", dual_of(&ex2_14()).unwrap(), Want::Is(Tag::Infeasible)),
        ("2.15", ex2_15(), Want::Opt(int(7), Some(ints(&[7, 0, 4])))),
    ];
    let n = cases.len();
    for (name, p, want) in cases {
        let out = solve_parametric(&p);
        ensure(out.tag != Tag::Fallback, || format!("Ex {name} fell back to the oracle"))?;
        match want {
            Want::Opt(v, x) => {
                ensure(out.tag == Tag::Optimal && out.value.as_ref() == Some(&v), || {
                    format!("Ex {name}: {:?} {:?}, want {v}", out.tag, out.value.as_ref().map(ToString::to_string))
                })?;
                ensure(out.verify(&p), || format!("Ex {name}: certificate does not verify"))?;
                if let Some(x) = x {
                    ensure(out.x[..x.len()] == x[..], || format!("Ex {name}: x = {:?}", out.x))?;
                }
            }
            Want::Is(tag) => ensure(out.effective_tag() == tag, || format!("Ex {name}: {:?}, want {tag:?}", out.tag))?,
        }
    }
    Ok(format!("{n} cases exact"))
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let total = 1000;
    let mut fallbacks = 0;
    for i in 0..total {
        let p = common::random_lp(&mut rng, 6, 6);
        let oracle = simplex_solve(&p);
        let out = solve_parametric(&p);
        ensure(out.effective_tag() == oracle.tag, || format!("instance {i}: {:?} vs oracle {:?}", out.tag, oracle.tag))?;
        match out.tag {
            Tag::Optimal => {
                ensure(out.value == oracle.value && out.verify(&p), || format!("instance {i}: value mismatch"))?;
            }
            Tag::Fallback => {
                fallbacks += 1;
                ensure(out.value == oracle.value, || format!("instance {i}: fallback value mismatch"))?;
            }
            _ => {}
        }
    }
    Ok(format!("{total} LPs agree, fallback rate {fallbacks}/{total}"))
}

fn chord_trace() -> Verdict {
    let p = ex2_1();
    let start = [int(1), int(1)];
    let exact = solve_geometric(&p, GeoAlgorithm::Chord, &start, &GeoConfig::exact()).map_err(|e| e.to_string())?;
    let objs: Vec<Rational> = exact.trajectory.iter().map(|s| s.objective.clone()).collect();
    ensure(objs == [int(2), rat(8, 3), rat(10, 3)], || format!("exact sequence {objs:?}"))?;
    ensure(exact.best().point == [rat(8, 3), rat(2, 3)], || "exact endpoint differs".into())?;
    let run = solve_geometric(&p, GeoAlgorithm::Chord, &start, &GeoConfig::default()).map_err(|e| e.to_string())?;
    let x = &run.best().point;
    let err = (x[0].to_f64() - 8.0 / 3.0).abs().max((x[1].to_f64() - 2.0 / 3.0).abs());
    ensure(err <= CHORD_TOL, || format!("default margin ends {err:e} from (8/3, 2/3)"))?;
    Ok(format!("exact 2 -> 8/3 -> 10/3; default margin within {err:.1e} (tol {CHORD_TOL:e})"))
}

const ALL: [GeoAlgorithm; 4] = [GeoAlgorithm::Centroid, GeoAlgorithm::Chord, GeoAlgorithm::PerpPlanes, GeoAlgorithm::PerpEdges];

fn geo_path(p: &LpProblem, algo: GeoAlgorithm, iters: usize) -> Result<Rational, String> {
    let start = InteriorPoint::default_for(p).map_err(|e| e.to_string())?;
    let cfg = GeoConfig { max_iters: iters, ..GeoConfig::default() };
    let run = solve_geometric(p, algo, &start.coords, &cfg).map_err(|e| e.to_string())?;
    ensure(run.trajectory.len() <= iters + 1, || format!("{algo:?} ran past {iters} iterations"))?;
    ensure(run.trajectory.iter().all(|s| strictly_feasible(p, &s.point)), || format!("{algo:?} left the interior"))?;
    ensure(run.trajectory.windows(2).all(|w| w[1].objective >= w[0].objective), || format!("{algo:?} decreased"))?;
    Ok(run.best().objective.clone())
}

fn geometric_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut misses = Vec::new();
    let mut worst = 0f64;
    for i in 0..200 {
        let p = common::random_nondegenerate_2d(&mut rng);
        let opt = simplex_solve(&p).value.unwrap();
        for algo in ALL {
            let best = geo_path(&p, algo, 100).map_err(|e| format!("instance {i}: {e}"))?;
            let gap = ((&opt - &best) / opt.abs().max(Rational::one())).to_f64();
            worst = worst.max(gap);
            if gap > GEO_GAP {
                misses.push(format!("{i}/{algo:?} gap {gap:.1e}"));
            }
        }
    }
    ensure(misses.is_empty(), || format!("{} misses: {}", misses.len(), misses.join(", ")))?;
    let p = geo_example_2();
    let mut finals = Vec::new();
    for algo in ALL {
        let best = geo_path(&p, algo, 50)?;
        ensure(best >= int(700), || format!("Example 2 {algo:?} stopped at {:.2}", best.to_f64()))?;
        finals.push(format!("{:.2}", best.to_f64()));
    }
    Ok(format!("200 LPs x 4 variants, worst gap {worst:.1e} (tol {GEO_GAP:e}); Example 2 reaches {}", finals.join("/")))
}

fn small_ip(rng: &mut ChaCha8Rng) -> LpProblem {
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=3);
    let c: Vec<i64> = (0..n).map(|_| rng.gen_range(-9..=9)).collect();
    let mut rows: Vec<Constraint> = (0..m)
        .map(|_| Constraint::new((0..n).map(|_| int(rng.gen_range(-9..=9))).collect(), Relation::Le, int(rng.gen_range(-8..=25))))
        .collect();
    for j in 0..n {
        let mut e = vec![int(0); n];
        e[j] = int(1);
        rows.push(Constraint::new(e, Relation::Le, int(20)));
    }
    let sense = if rng.gen_bool(0.75) { Sense::Maximize } else { Sense::Minimize };
    LpProblem::new(sense, c.into_iter().map(int).collect(), rows).unwrap().all_integer()
}

fn ip_regression() -> Verdict {
    let cfg = DioConfig::default();
    for (name, p, d, x) in [("4.1", ex4_1(), 55, ints(&[5, 6])), ("4.2", ex4_2(), 26, ints(&[3, 0, 3, 2, 0]))] {
        for (method, run) in [("first", search_first_method(&p, &cfg)), ("second", search_second_method(&p, &cfg))] {
            let run = run.map_err(|e| format!("Ex {name} {method}: {e}"))?;
            ensure(run.d == BigInt::from(d) && run.outcome.x == x && run.outcome.verify(&p), || {
                format!("Ex {name} {method}: d = {}, x = {:?}", run.d, run.outcome.x)
            })?;
        }
    }

    let row = |v: &[i64], d: i64, e: i64| (ints(v), AffineForm::new(int(d), int(e)));
    let rows = vec![
        row(&[3, 2, 3, 4, 1, 0, 0, 0, 0, 0], 1, 0),
        row(&[7, 5, 1, 6, 0, 1, 0, 0, 0, 0], 1, 12),
        row(&[-12, -8, -14, -18, 0, 0, 0, 1, 0, 0], -5, 20),
        row(&[-1, 1, -2, -1, 0, 0, 1, 0, 0, 0], -1, 15),
        row(&[-1, 2, -2, 2, 0, 0, 0, 0, 1, 0], -1, 25),
        row(&[0, 0, 1, 0, 0, 0, 0, 0, 0, 1], 0, 3),
    ];
    let e = eliminate_d(&rows);
    ensure(
        e.rows[2] == row(&[3, 2, 1, 2, 5, 0, 0, 1, 0, 0], 0, 20)
            && e.rows[3] == row(&[2, 3, 1, 3, 1, 0, 1, 0, 0, 0], 0, 15)
            && e.rows[4] == row(&[2, 4, 1, 6, 1, 0, 0, 0, 1, 0], 0, 25),
        || "Ex 4.3 transformed rows differ".into(),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut optimal, mut infeasible) = (0, 0);
    for i in 0..200 {
        let p = small_ip(&mut rng);
        let bx = lp_box(&p).map_err(|e| format!("random IP {i}: {e}"))?;
        let brute = brute_force_ip(&p, &bx).map_err(|e| format!("random IP {i}: {e}"))?;
        let first = search_first_method(&p, &cfg);
        let second = search_second_method(&p, &cfg);
        match brute.tag {
            Tag::Optimal => {
                for (method, got) in [("first", first), ("second", second)] {
                    let run = got.map_err(|e| format!("random IP {i} {method}: {e} on {p:?}"))?;
                    ensure(run.outcome.value == brute.value && run.outcome.verify(&p), || {
                        format!("random IP {i} {method}: {:?} vs {:?}", run.outcome.value, brute.value)
                    })?;
                }
                optimal += 1;
            }
            _ => {
                ensure(matches!(first, Err(DioError::InfeasibleIP)) && matches!(second, Err(DioError::InfeasibleIP)), || {
                    format!("random IP {i}: brute force infeasible, methods disagree")
                })?;
                infeasible += 1;
            }
        }
    }
    Ok(format!("Ex 4.1 = 55, Ex 4.2 = 26 by both methods; Ex 4.3 rows exact; 200 random IPs match ({optimal} optimal, {infeasible} infeasible)"))
}

fn basis_contains(basis: &[MultiPoly], p: &MultiPoly) -> bool {
    basis.contains(&p.monic())
}

fn nlp_regression() -> Verdict {
    let cases: [(&str, NlpProblem, Rational, Vec<Rational>); 5] = [
        ("3.1", ex3_1(), int(9), ints(&[1, 3])),
        ("3.2", ex3_2(), int(67), vec![rat(3, 2), rat(7, 4)]),
        ("3.3", ex3_3(), rat(49, 5), vec![rat(1, 5), rat(13, 5)]),
        ("3.4", ex3_4(), int(-4), ints(&[1, 5])),
        ("3.5", ex3_5(), rat(-11, 2), vec![rat(3, 2), rat(1, 2)]),
    ];
    let mut worst = 0f64;
    for (name, p, d, x) in cases {
        let (_, _, sol) = solve_nlp(&p).map_err(|e| format!("Ex {name}: {e}"))?;
        ensure(sol.value == d && sol.x == x, || format!("Ex {name}: d = {}, x = {:?}", sol.value, sol.x))?;
        ensure(p.is_feasible(&sol.x) && p.objective.eval(&sol.x) == d, || format!("Ex {name}: assignment unsound"))?;
        let grid = grid_nlp(&p, GridSchedule::default()).map_err(|e| format!("Ex {name} grid: {e}"))?;
        let gap = (grid.value - d.to_f64()).abs();
        worst = worst.max(gap);
        ensure(gap <= GRID_TOL, || format!("Ex {name}: grid {} vs {d}", grid.value))?;
    }

    let sys = build_nlp_system(&ex3_1()).map_err(|e| e.to_string())?;
    let basis = buchberger(&sys.polys);
    let t = |e: [u32; 6], c: i64| (e.to_vec(), int(c));
    let expected = [
        MultiPoly::from_terms(
            6,
            [
                t([0, 0, 0, 0, 0, 0], 486),
                t([0, 0, 1, 0, 0, 0], -81),
                t([0, 0, 0, 0, 1, 0], -18),
                t([0, 0, 0, 0, 2, 0], -16),
                t([0, 0, 0, 0, 0, 1], 36),
                t([0, 0, 0, 0, 1, 1], -8),
                t([0, 0, 0, 0, 0, 2], -1),
            ],
        ),
        MultiPoly::from_terms(6, [t([0; 6], 9), t([0, 0, 0, 1, 0, 0], -9), t([0, 0, 0, 0, 1, 0], 5), t([0, 0, 0, 0, 0, 1], -1)]),
        MultiPoly::from_terms(6, [t([0; 6], -9), t([0, 0, 0, 0, 1, 0], 1), t([0, 0, 0, 0, 0, 1], -2), t([1, 0, 0, 0, 0, 0], 9)]),
        MultiPoly::from_terms(6, [t([0; 6], -18), t([0, 0, 0, 0, 1, 0], 4), t([0, 0, 0, 0, 0, 1], 1), t([0, 1, 0, 0, 0, 0], 9)]),
    ];
    for e in &expected {
        ensure(basis_contains(&basis, e), || format!("Ex 3.1 basis lacks {}", e.render(&sys.names)))?;
    }

    let sys = build_nlp_system(&ex3_3()).map_err(|e| e.to_string())?;
    let basis = buchberger(&sys.polys);
    for e in [
        poly(3, &[(&[0, 2, 0], 5), (&[0, 1, 0], -2), (&[0, 0, 1], -1), (&[0, 0, 0], 10)]),
        poly(3, &[(&[0, 1, 0], 2), (&[1, 0, 0], 1), (&[0, 0, 0], -3)]),
    ] {
        ensure(basis_contains(&basis, &e), || format!("Ex 3.3 basis lacks {}", e.render(&sys.names)))?;
    }
    Ok(format!("5 optima exact, grid within {worst:.1e} (tol {GRID_TOL:e}); Ex 3.1 and 3.3 basis elements present"))
}

fn small_rat(rng: &mut ChaCha8Rng) -> Rational {
    Rational::new(rng.gen_range(-6..=6), rng.gen_range(1..=3))
}

fn random_poly(rng: &mut ChaCha8Rng) -> MultiPoly {
    let terms: Vec<(Vec<u32>, Rational)> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let mut e = vec![0u32; 3];
            for _ in 0..rng.gen_range(0..=2) {
                e[rng.gen_range(0..3)] += 1;
            }
            (e, int(rng.gen_range(-3..=3)))
        })
        .collect();
    MultiPoly::from_terms(3, terms)
}

fn property_samples() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..10_000 {
        let (m, n) = (rng.gen_range(1..=5), rng.gen_range(1..=7));
        let body = (0..m).map(|_| (0..n).map(|_| small_rat(&mut rng)).collect()).collect();
        let lc = (0..m).map(|_| AffineForm::new(small_rat(&mut rng), small_rat(&mut rng))).collect();
        let mat = ParamMatrix::new(body, lc);
        let d = small_rat(&mut rng);
        let mut plain = mat.substitute(&d);
        rref_rational_cols(&mut plain, mat.cols());
        let r = mat.rref();
        ensure(r.substitute(&d) == plain, || format!("rref/substitution, matrix {i}"))?;
        ensure(r.rref() == r, || format!("rref idempotence, matrix {i}"))?;
    }

    for i in 0..300 {
        let f: Vec<MultiPoly> = (0..rng.gen_range(1..=3)).map(|_| random_poly(&mut rng)).collect();
        let g = buchberger(&f);
        for (k, a) in g.iter().enumerate() {
            for b in &g[k + 1..] {
                ensure(normal_form(&s_polynomial(a, b), &g).is_zero(), || format!("S-pair, set {i}"))?;
            }
        }
        ensure(f.iter().all(|p| normal_form(p, &g).is_zero()), || format!("input reduction, set {i}"))?;
    }

    let mut identities = 0;
    for i in 0..200 {
        let mut q = small_ip(&mut rng);
        q.sense = Sense::Maximize;
        let t = DioTable::from_problem(&q).map_err(|e| e.to_string())?;
        let Ok(sol) = diagonalize(&t) else { continue };
        for _ in 0..20 {
            let d = BigInt::from(rng.gen_range(-60..=60));
            if !sol.admits(&d) {
                continue;
            }
            let u: Vec<BigInt> = sol.free.iter().map(|_| BigInt::from(rng.gen_range(-30..=30))).collect();
            let v = sol.values(&u, &d);
            ensure(v.iter().all(Rational::is_integer), || format!("non-integer substitution, table {i}"))?;
            for (r, rhs) in t.top.iter().zip(&t.rhs) {
                let lhs: Rational = r.iter().zip(&v).map(|(a, x)| Rational::from_int(a.clone()) * x).sum();
                ensure(lhs == rhs.eval(&Rational::from_int(d.clone())), || format!("substitution identity, table {i}"))?;
            }
            identities += 1;
        }
    }

    let mut pairs = 0;
    for _ in 0..2000 {
        let (n, m) = (3, rng.gen_range(1..=4));
        let a: Vec<Vec<i64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-3..=9)).collect()).collect();
        let c: Vec<Rational> = (0..n).map(|_| int(rng.gen_range(-9..=9))).collect();
        let rows = a
            .iter()
            .map(|r| Constraint::new(r.iter().map(|&v| int(v)).collect(), Relation::Le, int(r.iter().map(|v| v.abs()).sum::<i64>() * 2 + 1)))
            .collect();
        let p = LpProblem::new(Sense::Maximize, c, rows).unwrap();
        let dual = dual_of(&p).unwrap();
        let x: Vec<Rational> = (0..n).map(|_| rat(rng.gen_range(0..=4), 4)).collect();
        let w: Vec<Rational> = (0..m).map(|_| int(rng.gen_range(0..=12))).collect();
        if p.is_feasible(&x) && dual.is_feasible(&w) {
            ensure(dot(&p.objective, &x) <= dot(&dual.objective, &w), || "weak duality violated".into())?;
            pairs += 1;
        }
    }
    ensure(identities > 100 && pairs > 100, || format!("too few samples: {identities} identities, {pairs} dual pairs"))?;
    Ok(format!("10000 rref matrices, 300 Groebner sets, {identities} substitutions, {pairs} dual pairs"))
}

fn main() {
    let results = [
        run(1, "LP regression suite", Some(Duration::from_secs(5)), lp_suite),
        run(2, "randomized oracle equivalence", Some(Duration::from_secs(120)), oracle_equivalence),
        run(3, "geometric Example 1 chord trace", None, chord_trace),
        run(4, "geometric properties", None, geometric_properties),
        run(5, "IP regression and brute-force equivalence", Some(Duration::from_secs(60)), ip_regression),
        run(6, "NLP regression", None, nlp_regression),
        run(7, "property samples", None, property_samples),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
