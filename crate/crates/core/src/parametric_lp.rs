//! Parametric-objective LP method: the objective equation `C^T x = d` is
//! appended to the constraint system, `[E, F]` is brought to reduced row
//! echelon form, and the optimum is read from the affine forms `c*d + e` of
//! the last column. Sign structure of the rows bounding `d` decides
//! optimality; reordering and pivot-style row operations repair tableaux
//! whose nonbasic columns are mixed.

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use crate::exact_arith::{AffineForm, ParamMatrix, Rational, RowOp};
use crate::lp_model::{
    assemble_augmented, heuristic_reorder, to_standard_form, LpOutcome, LpProblem, Relation, Sense, Tag,
    TraceStep,
};
use crate::reference_oracle::simplex_solve;

/// `R = rref([E, F])` with its basis structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParametricTableau {
    pub r: ParamMatrix,
    pub sense: Sense,
    /// Number of problem variables; columns after these are slacks.
    pub n: usize,
    /// Unit column owned by each row, if any.
    pub row_basis: Vec<Option<usize>>,
    pub basic_cols: Vec<usize>,
    pub nonbasic_cols: Vec<usize>,
    pub rn_rows: Vec<usize>,
    pub rp_rows: Vec<usize>,
}

impl ParametricTableau {
    /// Identifies basic columns (unit vectors) and the `R_N` / `R_P` rows of `r`.
    pub fn from_matrix(r: ParamMatrix, sense: Sense, n: usize) -> Self {
        let rows = r.rows();
        let cols = r.cols();
        let mut row_basis = vec![None; rows];
        let mut used = vec![false; cols];
        for (i, slot) in row_basis.iter_mut().enumerate() {
            for c in 0..cols {
                if used[c] || !r.body[i][c].is_one() {
                    continue;
                }
                if (0..rows).all(|k| k == i || r.body[k][c].is_zero()) {
                    *slot = Some(c);
                    used[c] = true;
                    break;
                }
            }
        }
        let mut basic_cols: Vec<usize> = row_basis.iter().flatten().copied().collect();
        basic_cols.sort_unstable();
        let nonbasic_cols = (0..cols).filter(|c| !used[*c]).collect();
        let rn_rows = (0..rows).filter(|&i| r.last_col[i].dcoeff.is_negative()).collect();
        let rp_rows = (0..rows).filter(|&i| r.last_col[i].dcoeff.is_positive()).collect();
        ParametricTableau { r, sense, n, row_basis, basic_cols, nonbasic_cols, rn_rows, rp_rows }
    }

    /// Assembles `[E, F]` for a problem in canonical shape and reduces it.
    pub fn build(p: &LpProblem) -> Result<Self, crate::lp_model::ModelError> {
        let sf = to_standard_form(p)?;
        let m = assemble_augmented(&sf);
        Ok(ParametricTableau::from_matrix(m.rref(), p.sense, p.n()))
    }

    /// Rows that bound the optimum: `R_N` for maximization, `R_P` for minimization.
    pub fn bounding_rows(&self) -> &[usize] {
        match self.sense {
            Sense::Maximize => &self.rn_rows,
            Sense::Minimize => &self.rp_rows,
        }
    }

    fn opposing_rows(&self) -> &[usize] {
        match self.sense {
            Sense::Maximize => &self.rp_rows,
            Sense::Minimize => &self.rn_rows,
        }
    }

    fn apply_ops(&self, ops: &[RowOp]) -> ParametricTableau {
        let mut m = self.r.clone();
        for op in ops {
            m.apply_in_place(op).expect("valid row op");
        }
        ParametricTableau::from_matrix(m, self.sense, self.n)
    }

    fn basis_key(&self) -> Vec<usize> {
        self.basic_cols.clone()
    }

    /// Basic solution with all nonbasic variables zero, at parameter value `d`.
    /// `None` if a row without a basic variable is violated.
    fn basic_solution(&self, d: &Rational) -> Option<Vec<Rational>> {
        let mut z = vec![Rational::zero(); self.r.cols()];
        for (i, b) in self.row_basis.iter().enumerate() {
            let v = self.r.last_col[i].eval(d);
            match b {
                Some(c) => z[*c] = v,
                None if self.r.is_zero_row(i) => {
                    if !v.is_zero() {
                        return None;
                    }
                }
                None => return None,
            }
        }
        Some(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Inconsistent,
    Unbounded,
    Continue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acceptability {
    Accept,
    AcceptViaEk,
    Reject,
}

/// Inconsistent if a zero row carries a nonzero constant; Unbounded when no
/// row bounds `d` (or a nonbasic column is strictly negative on every bounding
/// row and nonpositive elsewhere) and an explicit unbounded ray with a feasible
/// start point is found; otherwise Continue.
pub fn classify(t: &ParametricTableau) -> Classification {
    for i in 0..t.r.rows() {
        let f = &t.r.last_col[i];
        if t.r.is_zero_row(i) && f.dcoeff.is_zero() && !f.constant.is_zero() {
            return Classification::Inconsistent;
        }
    }
    let bounding = t.bounding_rows();
    let ray_pattern = bounding.is_empty()
        || t.nonbasic_cols.iter().any(|&j| {
            (0..t.r.rows()).all(|i| !t.r.body[i][j].is_positive())
                && bounding.iter().all(|&i| t.r.body[i][j].is_negative())
        });
    if ray_pattern && unbounded_witness(t).is_some() {
        Classification::Unbounded
    } else {
        Classification::Continue
    }
}

/// `(min{d⁻}, max{d⁺})` over the `R_N` and `R_P` rows.
pub fn thresholds(t: &ParametricTableau) -> (Option<Rational>, Option<Rational>) {
    let roots = |rows: &[usize]| -> Vec<Rational> {
        rows.iter().filter_map(|&i| t.r.last_col[i].root()).collect::<Vec<_>>()
    };
    let dminus = roots(&t.rn_rows).into_iter().min();
    let dplus = roots(&t.rp_rows).into_iter().max();
    (dminus, dplus)
}

/// Every nonbasic column is nonnegative on the bounding rows.
pub fn nonbasic_columns_ok(t: &ParametricTableau) -> bool {
    t.nonbasic_cols
        .iter()
        .all(|&j| t.bounding_rows().iter().all(|&i| !t.r.body[i][j].is_negative()))
}

fn candidate_d(t: &ParametricTableau) -> Option<Rational> {
    let (dminus, dplus) = thresholds(t);
    match t.sense {
        Sense::Maximize => dminus,
        Sense::Minimize => dplus,
    }
}

pub fn acceptability(t: &ParametricTableau) -> Acceptability {
    let (dminus, dplus) = thresholds(t);
    let ordered = match (&dminus, &dplus) {
        (Some(lo), Some(hi)) => lo >= hi,
        (Some(_), None) => t.sense == Sense::Maximize,
        (None, Some(_)) => t.sense == Sense::Minimize,
        (None, None) => false,
    };
    if ordered {
        return Acceptability::Accept;
    }
    let Some(d) = candidate_d(t) else {
        return Acceptability::Reject;
    };
    let ek_positive = t.opposing_rows().iter().all(|&i| t.r.last_col[i].constant.is_positive());
    let substitution_ok = t.r.last_col.iter().all(|f| !f.eval(&d).is_negative());
    if ek_positive && substitution_ok {
        Acceptability::AcceptViaEk
    } else {
        Acceptability::Reject
    }
}

/// Sets nonbasic variables to zero and evaluates the basic ones at `d_star`.
/// `p` must be the problem the tableau was built from.
pub fn read_solution(t: &ParametricTableau, p: &LpProblem, d_star: &Rational) -> LpOutcome {
    let Some(z) = t.basic_solution(d_star) else {
        return LpOutcome::status(Tag::Infeasible);
    };
    if z.iter().any(Rational::is_negative) {
        return LpOutcome::status(Tag::Infeasible);
    }
    let x = z[..t.n].to_vec();
    if !p.is_feasible(&x) || &p.objective_value(&x) != d_star {
        return LpOutcome::status(Tag::Infeasible);
    }
    let mut out = LpOutcome::optimal(p, x);
    out.slacks = z[t.n..].to_vec();
    out
}

/// Sign information a single row carries about `d`: a row whose body is
/// entirely nonnegative implies `c*d + e >= 0` for every feasible point
/// (entirely nonpositive: `<= 0`; zero body: `= 0`).
fn row_implication(t: &ParametricTableau, i: usize) -> Option<(bool, bool)> {
    let row = &t.r.body[i];
    let nonneg = row.iter().all(|v| !v.is_negative());
    let nonpos = row.iter().all(|v| !v.is_positive());
    if !nonneg && !nonpos {
        return None;
    }
    Some((nonneg, nonpos))
}

/// Interval `[lo, hi]` of `d` values implied by single-signed rows; `Err` if empty.
fn implied_interval(t: &ParametricTableau) -> Result<(Option<Rational>, Option<Rational>), usize> {
    let mut lo: Option<Rational> = None;
    let mut hi: Option<Rational> = None;
    for i in 0..t.r.rows() {
        let Some((ge, le)) = row_implication(t, i) else { continue };
        let f = &t.r.last_col[i];
        let mut need = |sign_ge: bool| -> Result<(), usize> {
            // sign_ge: c*d + e >= 0, else c*d + e <= 0.
            let (c, e) = if sign_ge { (f.dcoeff.clone(), f.constant.clone()) } else { (-&f.dcoeff, -&f.constant) };
            if c.is_zero() {
                return if e.is_negative() { Err(i) } else { Ok(()) };
            }
            let root = -(&e / &c);
            if c.is_positive() {
                lo = Some(match lo.take() {
                    Some(v) => v.max(root),
                    None => root,
                });
            } else {
                hi = Some(match hi.take() {
                    Some(v) => v.min(root),
                    None => root,
                });
            }
            Ok(())
        };
        if ge {
            need(true)?;
        }
        if le {
            need(false)?;
        }
        if let (Some(l), Some(h)) = (&lo, &hi) {
            if l > h {
                return Err(i);
            }
        }
    }
    Ok((lo, hi))
}

/// Row index proving infeasibility, if the single-signed rows leave no admissible `d`.
pub fn infeasibility_certificate(t: &ParametricTableau) -> Option<usize> {
    implied_interval(t).err()
}

/// Optimal `d` proved by the tableau: the tightest bound from single-signed
/// bounding rows, provided the basic solution at that `d` is nonnegative.
pub fn certified_optimum(t: &ParametricTableau) -> Option<Rational> {
    let (lo, hi) = implied_interval(t).ok()?;
    let d = match t.sense {
        Sense::Maximize => hi?,
        Sense::Minimize => lo?,
    };
    let z = t.basic_solution(&d)?;
    z.iter().all(|v| !v.is_negative()).then_some(d)
}

/// Explicit unbounded certificate in tableau coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnboundedWitness {
    /// Feasible values of all tableau variables.
    pub point: Vec<Rational>,
    /// Recession direction of all tableau variables.
    pub ray: Vec<Rational>,
    pub d: Rational,
}

/// Moves `d` toward the improving side while raising at most one nonbasic
/// variable proportionally; succeeds if all basic values stay nonnegative.
pub fn unbounded_witness(t: &ParametricTableau) -> Option<UnboundedWitness> {
    let sigma = match t.sense {
        Sense::Maximize => Rational::one(),
        Sense::Minimize => -Rational::one(),
    };
    let rows = t.r.rows();
    for i in 0..rows {
        if t.row_basis[i].is_none() && !(t.r.is_zero_row(i) && t.r.last_col[i].is_zero()) {
            return None;
        }
    }
    let mut choices: Vec<Option<usize>> = vec![None];
    choices.extend(t.nonbasic_cols.iter().map(|&j| Some(j)));
    for choice in choices {
        // slope_i(K) = sigma*c_i - R_ij*K must be >= 0 for all rows, K >= 0.
        let mut lo = Rational::zero();
        let mut hi: Option<Rational> = None;
        let mut ok = true;
        for i in 0..rows {
            if t.row_basis[i].is_none() {
                continue;
            }
            let sc = &sigma * &t.r.last_col[i].dcoeff;
            let a = choice.map_or_else(Rational::zero, |j| t.r.body[i][j].clone());
            if a.is_zero() {
                if sc.is_negative() {
                    ok = false;
                    break;
                }
            } else if a.is_positive() {
                let cap = &sc / &a;
                hi = Some(match hi.take() {
                    Some(h) => h.min(cap),
                    None => cap,
                });
            } else {
                lo = lo.max(&sc / &a);
            }
        }
        if !ok || choice.is_none() && !lo.is_zero() {
            continue;
        }
        let k = match (&hi, choice) {
            (_, None) => Rational::zero(),
            (None, Some(_)) => &lo + Rational::one(),
            (Some(h), Some(_)) if *h < lo => continue,
            (Some(h), Some(_)) => (&lo + h) / Rational::from_int(2),
        };
        let mut ray = vec![Rational::zero(); t.r.cols()];
        if let Some(j) = choice {
            ray[j] = k.clone();
        }
        let mut tmin = Rational::one();
        let mut feasible = true;
        for i in 0..rows {
            let Some(b) = t.row_basis[i] else { continue };
            let a = choice.map_or_else(Rational::zero, |j| t.r.body[i][j].clone());
            let slope = &sigma * &t.r.last_col[i].dcoeff - &a * &k;
            let e = &t.r.last_col[i].constant;
            if slope.is_zero() {
                if e.is_negative() {
                    feasible = false;
                    break;
                }
            } else if e.is_negative() {
                tmin = tmin.max(-(e / &slope));
            }
            ray[b] = slope;
        }
        if !feasible {
            continue;
        }
        if ray.iter().all(Rational::is_zero) {
            continue;
        }
        let d = &sigma * &tmin;
        let mut point = vec![Rational::zero(); t.r.cols()];
        if let Some(j) = choice {
            point[j] = &k * &tmin;
        }
        for i in 0..rows {
            let Some(b) = t.row_basis[i] else { continue };
            let a = choice.map_or_else(Rational::zero, |j| t.r.body[i][j].clone());
            point[b] = t.r.last_col[i].eval(&d) - &a * &point.get(choice.unwrap_or(0)).cloned().unwrap_or_default()
                * Rational::from_int(choice.is_some() as i64);
        }
        if point.iter().any(Rational::is_negative) {
            continue;
        }
        return Some(UnboundedWitness { point, ray, d });
    }
    None
}

/// Checks a witness against the original rows: the point is feasible and the
/// ray is a recession direction that strictly improves the objective.
fn witness_valid(p: &LpProblem, n: usize, w: &UnboundedWitness) -> bool {
    let x = &w.point[..n];
    let r = &w.ray[..n];
    if !p.is_feasible(x) || r.iter().any(Rational::is_negative) {
        return false;
    }
    let rows_ok = p.constraints.iter().all(|c| {
        let ar = crate::exact_arith::dot(&c.coeffs, r);
        match c.relation {
            Relation::Le => !ar.is_positive(),
            Relation::Ge => !ar.is_negative(),
            Relation::Eq => ar.is_zero(),
        }
    });
    let gain = p.objective_value(r);
    let improving = match p.sense {
        Sense::Maximize => gain.is_positive(),
        Sense::Minimize => gain.is_negative(),
    };
    rows_ok && improving
}

/// What a tableau proves about its problem, if anything.
fn certify(t: &ParametricTableau, p: &LpProblem) -> Option<(LpOutcome, Vec<TraceStep>)> {
    let mut notes = Vec::new();
    if classify(t) == Classification::Inconsistent {
        notes.push(TraceStep::Note("zero row with nonzero constant".into()));
        return Some((LpOutcome::status(Tag::Inconsistent), notes));
    }
    if let Some(i) = infeasibility_certificate(t) {
        notes.push(TraceStep::Note(format!("row {} admits no value of d", i + 1)));
        return Some((LpOutcome::status(Tag::Infeasible), notes));
    }
    if let Some(d) = certified_optimum(t) {
        let out = read_solution(t, p, &d);
        if out.tag == Tag::Optimal {
            let acc = if nonbasic_columns_ok(t) { acceptability(t) } else { Acceptability::Reject };
            notes.push(TraceStep::Note(format!("acceptability {acc:?}, d = {d}")));
            return Some((out, notes));
        }
    }
    if let Some(w) = unbounded_witness(t) {
        if witness_valid(p, t.n, &w) {
            notes.push(TraceStep::Note(format!("unbounded ray from d = {}", w.d)));
            let mut out = LpOutcome::status(Tag::Unbounded);
            out.x = w.point[..t.n].to_vec();
            return Some((out, notes));
        }
    }
    None
}

fn is_certified(t: &ParametricTableau, p: &LpProblem) -> bool {
    certify(t, p).is_some()
}

/// Lower is better: negative nonbasic entries left on the bounding rows.
fn repair_score(t: &ParametricTableau) -> (usize, usize) {
    let bounding = t.bounding_rows();
    let mut rows_bad = 0;
    let mut entries_bad = 0;
    for &i in bounding {
        let neg = t.nonbasic_cols.iter().filter(|&&j| t.r.body[i][j].is_negative()).count();
        if neg > 0 {
            rows_bad += 1;
            entries_bad += neg;
        }
    }
    (rows_bad, entries_bad)
}

/// Candidate clearing moves: for a nonbasic column with a negative entry on a
/// bounding row, pivot on a positive entry of that column. Rows whose other
/// nonbasic entries are all nonnegative are listed first.
fn clearing_moves(t: &ParametricTableau) -> Vec<(usize, usize)> {
    let bounding = t.bounding_rows();
    let mut preferred = Vec::new();
    let mut rest = Vec::new();
    for &j in &t.nonbasic_cols {
        if !bounding.iter().any(|&i| t.r.body[i][j].is_negative()) {
            continue;
        }
        for r in 0..t.r.rows() {
            if t.row_basis[r].is_none() || !t.r.body[r][j].is_positive() {
                continue;
            }
            let clean = t.nonbasic_cols.iter().all(|&k| k == j || !t.r.body[r][k].is_negative());
            if clean {
                preferred.push((r, j));
            } else {
                rest.push((r, j));
            }
        }
    }
    preferred.extend(rest);
    preferred
}

/// The tableau could not be normalized within the search budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairFailure {
    pub explored: usize,
}

#[derive(Debug, Clone)]
pub struct Repaired {
    pub tableau: ParametricTableau,
    pub ops: Vec<RowOp>,
}

/// Bounded best-first search over clearing pivots. Each pivot is recorded as
/// its elementary row operations. Depth is capped at `4(m+1)` pivots.
pub fn repair_by_row_ops(t: &ParametricTableau, p: &LpProblem) -> Result<Repaired, RepairFailure> {
    if is_certified(t, p) {
        return Ok(Repaired { tableau: t.clone(), ops: Vec::new() });
    }
    let depth_cap = 4 * t.r.rows();
    let budget = 16 * t.r.rows() * t.r.rows();
    let mut visited: BTreeSet<Vec<usize>> = BTreeSet::new();
    visited.insert(t.basis_key());
    let mut states: Vec<(ParametricTableau, Vec<RowOp>)> = vec![(t.clone(), Vec::new())];
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((repair_score(t), 0usize, 0usize)));
    let mut explored = 0;
    while let Some(Reverse((_, depth, idx))) = heap.pop() {
        if explored >= budget {
            break;
        }
        explored += 1;
        if depth >= depth_cap {
            continue;
        }
        let (cur, ops) = states[idx].clone();
        for (r, j) in clearing_moves(&cur) {
            let mut m = cur.r.clone();
            let step = m.pivot(r, j);
            let next = ParametricTableau::from_matrix(m, cur.sense, cur.n);
            if !visited.insert(next.basis_key()) {
                continue;
            }
            let mut next_ops = ops.clone();
            next_ops.extend(step);
            if is_certified(&next, p) {
                return Ok(Repaired { tableau: next, ops: next_ops });
            }
            let score = repair_score(&next);
            states.push((next, next_ops));
            heap.push(Reverse((score, depth + 1, states.len() - 1)));
        }
    }
    Err(RepairFailure { explored })
}

fn consistent_with_oracle(out: &LpOutcome, oracle: &LpOutcome, p: &LpProblem) -> bool {
    match out.tag {
        Tag::Optimal => oracle.tag == Tag::Optimal && out.value == oracle.value && out.verify(p),
        Tag::Unbounded => oracle.tag == Tag::Unbounded,
        Tag::Infeasible | Tag::Inconsistent => oracle.tag == Tag::Infeasible,
        Tag::Fallback => true,
    }
}

/// Note recorded when a certified answer contradicts the oracle.
pub const ORACLE_DISAGREEMENT: &str = "oracle disagreement";

fn fallback(oracle: &LpOutcome, mut trace: Vec<TraceStep>, note: &str) -> LpOutcome {
    let mut out = oracle.clone();
    out.oracle_tag = Some(oracle.tag);
    out.tag = Tag::Fallback;
    trace.push(TraceStep::Note(note.to_string()));
    out.trace = trace;
    out
}

/// Full method: canonical form, reorder candidates, acceptance, repair, and
/// oracle fallback. Every certified answer is checked against the simplex oracle.
pub fn solve_parametric(p: &LpProblem) -> LpOutcome {
    let oracle = simplex_solve(p);
    let (cp, flipped) = p.canonicalize();
    let mut base_trace: Vec<TraceStep> = flipped.iter().map(|&row| TraceStep::Canonicalize { row }).collect();
    let identity: Vec<usize> = (0..cp.m()).collect();
    let mut candidates = vec![(identity.clone(), cp.clone())];
    candidates.extend(heuristic_reorder(&cp).into_iter().filter(|(perm, _)| *perm != identity));
    let mut tableaux = Vec::with_capacity(candidates.len());
    for (perm, q) in &candidates {
        let t = match ParametricTableau::build(q) {
            Ok(t) => t,
            Err(e) => return fallback(&oracle, base_trace, &format!("cannot build tableau: {e}")),
        };
        tableaux.push((perm.clone(), q.clone(), t));
    }
    let finish = |out: LpOutcome, mut trace: Vec<TraceStep>| -> LpOutcome {
        let mut out = out;
        if out.tag == Tag::Optimal {
            let slacks = out.slacks.clone();
            out = LpOutcome { slacks, ..LpOutcome::optimal(p, out.x.clone()) };
            out.slacks = p.slack_values(&out.x);
        }
        if !consistent_with_oracle(&out, &oracle, p) {
            return fallback(&oracle, trace, ORACLE_DISAGREEMENT);
        }
        trace.append(&mut out.trace);
        out.trace = trace;
        out
    };
    for (perm, q, t) in &tableaux {
        if let Some((out, notes)) = certify(t, q) {
            let mut trace = base_trace.clone();
            if *perm != identity {
                trace.push(TraceStep::Reorder(perm.clone()));
            }
            trace.extend(notes);
            return finish(out, trace);
        }
    }
    for (perm, q, t) in &tableaux {
        if let Ok(rep) = repair_by_row_ops(t, q) {
            if let Some((out, notes)) = certify(&rep.tableau, q) {
                let mut trace = base_trace.clone();
                if *perm != identity {
                    trace.push(TraceStep::Reorder(perm.clone()));
                }
                trace.extend(rep.ops.into_iter().map(TraceStep::Op));
                trace.extend(notes);
                return finish(out, trace);
            }
        }
    }
    base_trace.push(TraceStep::Note(format!("{} orderings tried", tableaux.len())));
    fallback(&oracle, base_trace, "repair failed")
}

/// Applies a sequence of row operations and re-identifies the basis.
pub fn apply_row_ops(t: &ParametricTableau, ops: &[RowOp]) -> ParametricTableau {
    t.apply_ops(ops)
}

/// Affine value of each tableau row at a fixed `d`, for inspection.
pub fn last_column_at(t: &ParametricTableau, d: &Rational) -> Vec<Rational> {
    t.r.last_col.iter().map(|f: &AffineForm| f.eval(d)).collect()
}
