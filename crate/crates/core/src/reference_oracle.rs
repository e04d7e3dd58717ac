//! Independent reference solvers: exact two-phase simplex with Bland's rule,
//! brute-force integer enumeration, and a numeric grid search for quadratic programs.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::exact_arith::{dot, Rational};
use crate::groebner_nlp::NlpProblem;
use crate::lp_model::{Constraint, LpOutcome, LpProblem, Relation, Sense, Tag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no finite integer box can be derived for variable {0}")]
    BoxUnbounded(usize),
    #[error("feasible region is unbounded in variable {0}")]
    UnboundedRegion(usize),
    #[error("box has too many points ({0})")]
    BoxTooLarge(u128),
}

/// Canonical simplex tableau at termination.
#[derive(Debug, Clone)]
pub struct SimplexTableau {
    pub rows: Vec<Vec<Rational>>,
    pub rhs: Vec<Rational>,
    pub basis: Vec<usize>,
    /// `c_j - c_B^T B^{-1} A_j` for the internal maximization objective.
    pub relative_profits: Vec<Rational>,
    /// Number of structural columns (problem variables).
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct SimplexReport {
    pub outcome: LpOutcome,
    pub tableau: Option<SimplexTableau>,
    pub pivots: usize,
}

struct Tab {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tab {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for v in self.rows[r].iter_mut() {
            *v *= &inv;
        }
        self.rhs[r] *= &inv;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let k = self.rows[i][c].clone();
            for (v, s) in self.rows[i].iter_mut().zip(&prow) {
                if !s.is_zero() {
                    *v -= s * &k;
                }
            }
            self.rhs[i] -= &prhs * &k;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn relative_profits(&self, cost: &[Rational]) -> Vec<Rational> {
        let cols = cost.len();
        (0..cols)
            .map(|j| {
                let zj: Rational = self
                    .rows
                    .iter()
                    .zip(&self.basis)
                    .filter(|(row, _)| !row[j].is_zero())
                    .map(|(row, &b)| &cost[b] * &row[j])
                    .sum();
                &cost[j] - zj
            })
            .collect()
    }

    /// Maximizes `cost` over columns where `allowed` holds. `Err(())` means unbounded.
    fn run(&mut self, cost: &[Rational], allowed: &[bool]) -> Result<(), ()> {
        loop {
            let profits = self.relative_profits(cost);
            let Some(enter) = (0..cost.len()).find(|&j| allowed[j] && profits[j].is_positive()) else {
                return Ok(());
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr || (ratio == lr && self.basis[i] < self.basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
            match leave {
                None => return Err(()),
                Some((r, _)) => self.pivot(r, enter),
            }
        }
    }
}

/// Exact two-phase simplex with Bland's smallest-index rule.
pub fn simplex_solve(p: &LpProblem) -> LpOutcome {
    simplex_report(p).outcome
}

pub fn simplex_report(p: &LpProblem) -> SimplexReport {
    let n = p.n();
    let m = p.m();
    // Column layout: structural, then one slack/surplus per inequality, then artificials.
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut rels = Vec::with_capacity(m);
    for c in &p.constraints {
        let (coeffs, rel, b) = if c.rhs.is_negative() {
            (c.coeffs.iter().map(|v| -v).collect::<Vec<_>>(), c.relation.negated(), -&c.rhs)
        } else {
            (c.coeffs.clone(), c.relation, c.rhs.clone())
        };
        rows.push(coeffs);
        rhs.push(b);
        rels.push(rel);
    }
    let n_slack = rels.iter().filter(|r| **r != Relation::Eq).count();
    let n_art = rels.iter().filter(|r| **r != Relation::Le).count();
    let total = n + n_slack + n_art;
    let mut basis = vec![0; m];
    let mut next_slack = n;
    let mut next_art = n + n_slack;
    for (i, row) in rows.iter_mut().enumerate() {
        row.resize(total, Rational::zero());
        match rels[i] {
            Relation::Le => {
                row[next_slack] = Rational::one();
                basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -Rational::one();
                next_slack += 1;
                row[next_art] = Rational::one();
                basis[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = Rational::one();
                basis[i] = next_art;
                next_art += 1;
            }
        }
    }
    let mut tab = Tab { rows, rhs, basis, pivots: 0 };
    let is_art = |j: usize| j >= n + n_slack;

    if n_art > 0 {
        let cost: Vec<Rational> =
            (0..total).map(|j| if is_art(j) { -Rational::one() } else { Rational::zero() }).collect();
        let allowed = vec![true; total];
        tab.run(&cost, &allowed).expect("phase one is bounded");
        let infeas: Rational = tab.basis.iter().zip(&tab.rhs).filter(|(b, _)| is_art(**b)).map(|(_, v)| v).sum();
        if infeas.is_positive() {
            return SimplexReport { outcome: LpOutcome::status(Tag::Infeasible), tableau: None, pivots: tab.pivots };
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if is_art(tab.basis[i]) {
                if let Some(j) = (0..n + n_slack).find(|&j| !tab.rows[i][j].is_zero()) {
                    tab.pivot(i, j);
                    i += 1;
                } else {
                    tab.rows.remove(i);
                    tab.rhs.remove(i);
                    tab.basis.remove(i);
                }
            } else {
                i += 1;
            }
        }
    }

    let sign = match p.sense {
        Sense::Maximize => Rational::one(),
        Sense::Minimize => -Rational::one(),
    };
    let cost: Vec<Rational> =
        (0..total).map(|j| if j < n { &p.objective[j] * &sign } else { Rational::zero() }).collect();
    let allowed: Vec<bool> = (0..total).map(|j| !is_art(j)).collect();
    if tab.run(&cost, &allowed).is_err() {
        return SimplexReport { outcome: LpOutcome::status(Tag::Unbounded), tableau: None, pivots: tab.pivots };
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs[i].clone();
        }
    }
    let mut profits = tab.relative_profits(&cost);
    for (j, v) in profits.iter_mut().enumerate() {
        if is_art(j) {
            *v = Rational::zero();
        }
    }
    let tableau = SimplexTableau {
        rows: tab.rows.clone(),
        rhs: tab.rhs.clone(),
        basis: tab.basis.clone(),
        relative_profits: profits,
        n,
    };
    SimplexReport { outcome: LpOutcome::optimal(p, x), tableau: Some(tableau), pivots: tab.pivots }
}

/// A point with every inequality and every coordinate strictly inside its bound,
/// found by maximizing a uniform margin `t <= 1`. `None` if no such point exists
/// (including any problem with an equality row).
pub fn interior_point(p: &LpProblem) -> Option<Vec<Rational>> {
    if p.constraints.iter().any(|c| c.relation == Relation::Eq) {
        return None;
    }
    let n = p.n();
    let mut objective = vec![Rational::zero(); n + 1];
    objective[n] = Rational::one();
    let mut rows = Vec::new();
    for c in &p.constraints {
        let mut a = c.coeffs.clone();
        match c.relation {
            Relation::Le => a.push(Rational::one()),
            _ => a.push(-Rational::one()),
        }
        rows.push(Constraint::new(a, c.relation, c.rhs.clone()));
    }
    for j in 0..n {
        let mut a = vec![Rational::zero(); n + 1];
        a[j] = Rational::one();
        a[n] = -Rational::one();
        rows.push(Constraint::new(a, Relation::Ge, Rational::zero()));
    }
    let mut cap = vec![Rational::zero(); n + 1];
    cap[n] = Rational::one();
    rows.push(Constraint::new(cap, Relation::Le, Rational::one()));
    let aux = LpProblem::new(Sense::Maximize, objective, rows).ok()?;
    let out = simplex_solve(&aux);
    match out.tag {
        Tag::Optimal if out.x[n].is_positive() => Some(out.x[..n].to_vec()),
        _ => None,
    }
}

/// Integer bounds `[0, floor(max x_j)]` from the LP relaxation.
pub fn lp_box(p: &LpProblem) -> Result<Vec<(BigInt, BigInt)>, OracleError> {
    let mut out = Vec::with_capacity(p.n());
    for j in 0..p.n() {
        let mut q = p.clone();
        q.sense = Sense::Maximize;
        q.objective = vec![Rational::zero(); p.n()];
        q.objective[j] = Rational::one();
        let r = simplex_solve(&q);
        match r.tag {
            Tag::Optimal => out.push((BigInt::from(0), r.value.expect("optimal value").floor())),
            Tag::Infeasible => out.push((BigInt::from(0), BigInt::from(-1))),
            _ => return Err(OracleError::BoxUnbounded(j)),
        }
    }
    Ok(out)
}

pub const MAX_BOX_POINTS: u128 = 50_000_000;

/// Exhaustive search over the integer box. Ties keep the lexicographically first point.
pub fn brute_force_ip(p: &LpProblem, bounds: &[(BigInt, BigInt)]) -> Result<LpOutcome, OracleError> {
    let n = p.n();
    assert_eq!(bounds.len(), n, "one bound pair per variable");
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    let mut count: u128 = 1;
    for (j, (l, h)) in bounds.iter().enumerate() {
        let l = l.to_i64().ok_or(OracleError::BoxUnbounded(j))?.max(0);
        let h = h.to_i64().ok_or(OracleError::BoxUnbounded(j))?;
        if h < l {
            return Ok(LpOutcome::status(Tag::Infeasible));
        }
        count = count.saturating_mul((h - l + 1) as u128);
        lo.push(l);
        hi.push(h);
    }
    if count > MAX_BOX_POINTS {
        return Err(OracleError::BoxTooLarge(count));
    }
    let mut cur = lo.clone();
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    loop {
        let x: Vec<Rational> = cur.iter().map(|&v| Rational::from_int(v)).collect();
        if p.constraints.iter().all(|c| c.satisfied_by(&x)) {
            let v = dot(&p.objective, &x);
            let better = match &best {
                None => true,
                Some((bv, _)) => p.sense.better(&v, bv),
            };
            if better {
                best = Some((v, x));
            }
        }
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(match best {
                    Some((_, x)) => LpOutcome::optimal(p, x),
                    None => LpOutcome::status(Tag::Infeasible),
                });
            }
            k -= 1;
            if cur[k] < hi[k] {
                cur[k] += 1;
                break;
            }
            cur[k] = lo[k];
        }
    }
}

/// Coarse-to-fine grid search result.
#[derive(Debug, Clone)]
pub struct GridResult {
    pub value: f64,
    pub point: Vec<f64>,
    /// Final grid spacing per free coordinate.
    pub spacing: f64,
}

/// Refinement schedule: points per axis in the first round, and the number of refinement rounds.
#[derive(Debug, Clone, Copy)]
pub struct GridSchedule {
    pub points_per_axis: usize,
    pub rounds: usize,
    pub feas_tol: f64,
}

impl Default for GridSchedule {
    fn default() -> Self {
        GridSchedule { points_per_axis: 201, rounds: 3, feas_tol: 1e-9 }
    }
}

/// Numeric search for a quadratic program. Linear equalities are eliminated
/// exactly; the remaining coordinates are boxed with LP bounds from the linear
/// constraints and searched on successively finer grids around the incumbent.
pub fn grid_nlp(p: &NlpProblem, sched: GridSchedule) -> Result<GridResult, OracleError> {
    let n = p.n();
    // Exact elimination of linear equalities: x = x0 + N z.
    let lin_eq: Vec<(Vec<Rational>, Rational)> =
        p.constraints.iter().filter(|c| c.relation == Relation::Eq).filter_map(|c| c.linear_row(n)).collect();
    let (x0, basis_dirs, free_vars) = affine_parametrization(n, &lin_eq);
    let k = basis_dirs.len();
    // LP box for each original variable using linear rows only.
    let lin_rows: Vec<Constraint> = p
        .constraints
        .iter()
        .filter_map(|c| c.linear_row(n).map(|(a, b)| Constraint::new(a, c.relation, b)))
        .collect();
    let mut xhi = vec![f64::INFINITY; n];
    if !lin_rows.is_empty() {
        for j in 0..n {
            let mut obj = vec![Rational::zero(); n];
            obj[j] = Rational::one();
            if let Ok(q) = LpProblem::new(Sense::Maximize, obj, lin_rows.clone()) {
                let r = simplex_solve(&q);
                if r.tag == Tag::Optimal {
                    xhi[j] = r.value.expect("value").to_f64();
                } else if r.tag == Tag::Infeasible {
                    xhi[j] = 0.0;
                }
            }
        }
    }
    // Quadratic constraints of the form sum a_j x_j^2 <= r with a_j > 0 also bound variables.
    for c in &p.constraints {
        if let Some(bounds) = c.sphere_bounds(n) {
            for (j, b) in bounds.into_iter().enumerate() {
                if let Some(b) = b {
                    xhi[j] = xhi[j].min(b);
                }
            }
        }
    }
    for (j, h) in xhi.iter().enumerate() {
        if !h.is_finite() {
            return Err(OracleError::UnboundedRegion(j));
        }
    }
    let x0f: Vec<f64> = x0.iter().map(Rational::to_f64).collect();
    let dirs: Vec<Vec<f64>> = basis_dirs.iter().map(|d| d.iter().map(Rational::to_f64).collect()).collect();
    let to_x = |z: &[f64]| -> Vec<f64> {
        let mut x = x0f.clone();
        for (zi, d) in z.iter().zip(&dirs) {
            for (xj, dj) in x.iter_mut().zip(d) {
                *xj += zi * dj;
            }
        }
        x
    };
    // Free coordinates are original variables, so their LP bounds box the search.
    let mut lo = vec![0.0; k];
    let mut hi: Vec<f64> = free_vars.iter().map(|&f| xhi[f]).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let sign = if p.sense == Sense::Maximize { 1.0 } else { -1.0 };
    let mut spacing = 0.0;
    let pts_total = sched.points_per_axis.max(2);
    let per_axis = if k == 0 { 1 } else { ((pts_total as f64).powf(2.0 / k as f64).ceil() as usize).clamp(3, pts_total) };
    let rounds = sched.rounds + 1;
    for round in 0..rounds {
        let steps: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| (h - l) / (per_axis - 1) as f64).collect();
        spacing = steps.iter().cloned().fold(0.0, f64::max);
        let mut idx = vec![0usize; k];
        loop {
            let z: Vec<f64> = (0..k).map(|i| lo[i] + steps[i] * idx[i] as f64).collect();
            let x = to_x(&z);
            if p.is_feasible_f64(&x, sched.feas_tol) {
                let v = p.objective.eval_f64(&x);
                let better = match &best {
                    None => true,
                    Some((bv, _)) => sign * v > sign * bv,
                };
                if better {
                    best = Some((v, z.clone()));
                }
            }
            let mut t = k;
            let mut done = true;
            while t > 0 {
                t -= 1;
                if idx[t] + 1 < per_axis {
                    idx[t] += 1;
                    done = false;
                    break;
                }
                idx[t] = 0;
            }
            if done {
                break;
            }
        }
        let Some((_, zb)) = &best else {
            if round == 0 {
                continue;
            }
            break;
        };
        // Shrink the box around the incumbent.
        for i in 0..k {
            let w = steps[i] * 2.0;
            lo[i] = zb[i] - w;
            hi[i] = zb[i] + w;
        }
    }
    // Final local polish along coordinate directions with halving steps.
    if let Some((mut bv, mut zb)) = best.clone() {
        let mut step = spacing.max(1e-3);
        while step > 1e-12 {
            let mut improved = false;
            for i in 0..k {
                for s in [step, -step] {
                    let mut z = zb.clone();
                    z[i] += s;
                    let x = to_x(&z);
                    if p.is_feasible_f64(&x, sched.feas_tol) {
                        let v = p.objective.eval_f64(&x);
                        if sign * v > sign * bv {
                            bv = v;
                            zb = z;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        best = Some((bv, zb));
    }
    match best {
        Some((v, z)) => Ok(GridResult { value: v, point: to_x(&z), spacing }),
        None => Err(OracleError::UnboundedRegion(0)),
    }
}

/// Particular solution and null-space basis of the linear equalities.
fn affine_parametrization(
    n: usize,
    eqs: &[(Vec<Rational>, Rational)],
) -> (Vec<Rational>, Vec<Vec<Rational>>, Vec<usize>) {
    let mut m: Vec<Vec<Rational>> = eqs
        .iter()
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let pivots = crate::exact_arith::rref_rational_cols(&mut m, n);
    let mut x0 = vec![Rational::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        x0[c] = m[i][n].clone();
    }
    let free: Vec<usize> = (0..n).filter(|j| !pivots.contains(j)).collect();
    let dirs = free
        .iter()
        .map(|&f| {
            let mut d = vec![Rational::zero(); n];
            d[f] = Rational::one();
            for (i, &c) in pivots.iter().enumerate() {
                d[c] = -&m[i][f];
            }
            d
        })
        .collect();
    (x0, dirs, free)
}
