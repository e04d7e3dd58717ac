//! Integer programming through an integer-diagonalized system in the parameter
//! `d`: parametric solution, bound derivation, and descent search.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exact_arith::{gcd_bigint, AffineForm, Rational};
use crate::lp_model::{dual_of, to_standard_form, Constraint, LpOutcome, LpProblem, Relation, Sense, Tag};
use crate::reference_oracle::{lp_box, simplex_solve};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DioError {
    #[error("the system has no integer solution for any d")]
    NoIntegerSolution,
    #[error("search budget of {0} nodes exceeded")]
    BudgetExceeded(u64),
    #[error("integer program is infeasible")]
    InfeasibleIP,
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error("integer data required: {0}")]
    NonIntegerData(String),
}

/// True iff `gcd(|c_i|)` divides `d`. An all-zero `c` only admits `d = 0`.
pub fn gcd_feasible_d(c: &[BigInt], d: &BigInt) -> bool {
    let g = c.iter().fold(BigInt::zero(), |g, v| gcd_bigint(&g, v));
    if g.is_zero() {
        d.is_zero()
    } else {
        (d % &g).is_zero()
    }
}

fn to_int(r: &Rational, what: &str) -> Result<BigInt, DioError> {
    if r.is_integer() {
        Ok(r.numer().clone())
    } else {
        Err(DioError::NonIntegerData(format!("{what} = {r}")))
    }
}

/// The table `[C^T 0 | d; A I | b]` together with the column record, which
/// starts as the identity so that `v = record * u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DioTable {
    pub top: Vec<Vec<BigInt>>,
    pub rhs: Vec<AffineForm>,
    pub record: Vec<Vec<BigInt>>,
    /// Variable names: problem variables then slacks.
    pub names: Vec<String>,
    /// Number of problem variables.
    pub n: usize,
}

impl DioTable {
    /// Needs a maximization with `<=` and `=` rows and integer data.
    pub fn from_problem(p: &LpProblem) -> Result<Self, DioError> {
        let sf = to_standard_form(p).map_err(|e| DioError::NonIntegerData(e.to_string()))?;
        let names = sf.variable_names();
        let aug = crate::lp_model::assemble_augmented(&sf);
        let top = aug
            .body
            .iter()
            .map(|row| row.iter().map(|v| to_int(v, "coefficient")).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        for b in &aug.last_col {
            to_int(&b.constant, "right-hand side")?;
        }
        let cols = names.len();
        let record = (0..cols)
            .map(|i| (0..cols).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        Ok(DioTable { top, rhs: aug.last_col, record, names, n: p.n() })
    }

    pub fn cols(&self) -> usize {
        self.names.len()
    }

    /// `col[dst] -= q * col[src]` on both blocks.
    fn sub_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for row in self.top.iter_mut().chain(self.record.iter_mut()) {
            let t = &row[src] * q;
            row[dst] -= t;
        }
    }

    fn negate_col(&mut self, c: usize) {
        for row in self.top.iter_mut().chain(self.record.iter_mut()) {
            row[c] = -&row[c];
        }
    }
}

/// `v_k = sum_j coeffs[j] * u_{free[j]} + base(d)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntExpr {
    pub coeffs: Vec<BigInt>,
    pub base: AffineForm,
}

impl IntExpr {
    pub fn eval(&self, u: &[BigInt], d: &Rational) -> Rational {
        self.coeffs.iter().zip(u).map(|(a, x)| Rational::from_int(a * x)).sum::<Rational>() + self.base.eval(d)
    }
}

/// Integer solutions of the table as an affine family in the free parameters and `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParametricIntSolution {
    pub names: Vec<String>,
    pub n: usize,
    /// Pivot parameters and their values.
    pub fixed: Vec<(usize, AffineForm)>,
    /// Indices of the free parameters.
    pub free: Vec<usize>,
    /// One per variable, in `names` order.
    pub exprs: Vec<IntExpr>,
    /// Forms that must be integers for `d` to be admissible.
    pub integral: Vec<AffineForm>,
    /// Forms that must vanish.
    pub zero: Vec<AffineForm>,
    /// Accumulated column operations: `v = record * u`.
    pub record: Vec<Vec<BigInt>>,
}

impl ParametricIntSolution {
    pub fn admits(&self, d: &BigInt) -> bool {
        let d = Rational::from_int(d.clone());
        self.integral.iter().all(|f| f.eval(&d).is_integer()) && self.zero.iter().all(|f| f.eval(&d).is_zero())
    }

    /// Variable values at the given free-parameter values.
    pub fn values(&self, u: &[BigInt], d: &BigInt) -> Vec<Rational> {
        let d = Rational::from_int(d.clone());
        self.exprs.iter().map(|e| e.eval(u, &d)).collect()
    }

    pub fn param_name(&self, j: usize) -> String {
        format!("u{}", j + 1)
    }

    fn render_form(&self, coeffs: &[BigInt], base: &AffineForm) -> String {
        let mut parts: Vec<(bool, String)> = Vec::new();
        let mut push = |c: &Rational, sym: Option<String>| {
            if c.is_zero() {
                return;
            }
            let mag = c.abs();
            let body = match sym {
                Some(s) if mag.is_one() => s,
                Some(s) => format!("{mag}*{s}"),
                None => mag.to_string(),
            };
            parts.push((c.is_negative(), body));
        };
        push(&base.dcoeff, Some("d".to_string()));
        for (j, a) in coeffs.iter().enumerate() {
            push(&Rational::from_int(a.clone()), Some(self.param_name(self.free[j])));
        }
        push(&base.constant, None);
        if parts.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (neg, body)) in parts.iter().enumerate() {
            match (i, neg) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            out.push_str(body);
        }
        out
    }
}

impl fmt::Display for ParametricIntSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, v) in &self.fixed {
            writeln!(f, "{} = {}", self.param_name(*j), self.render_form(&[], v))?;
        }
        for (name, e) in self.names.iter().zip(&self.exprs) {
            writeln!(f, "{name} = {}", self.render_form(&e.coeffs, &e.base))?;
        }
        Ok(())
    }
}

/// Integer column reduction of the table to a diagonal system (pivot columns
/// stay in place, smallest entry first, later columns on ties), then reads off
/// the parametric solution.
pub fn diagonalize(t: &DioTable) -> Result<ParametricIntSolution, DioError> {
    let mut t = t.clone();
    let rows = t.top.len();
    let cols = t.cols();
    let mut used = vec![false; cols];
    let mut pivots: Vec<Option<usize>> = vec![None; rows];
    for r in 0..rows {
        loop {
            let live: Vec<usize> = (0..cols).filter(|&c| !used[c] && !t.top[r][c].is_zero()).collect();
            let Some(&p) = live.iter().min_by(|&&a, &&b| t.top[r][a].abs().cmp(&t.top[r][b].abs()).then(b.cmp(&a))) else {
                break;
            };
            if live.len() == 1 {
                if t.top[r][p].is_negative() {
                    t.negate_col(p);
                }
                used[p] = true;
                pivots[r] = Some(p);
                break;
            }
            for &c in &live {
                if c != p {
                    let q = t.top[r][c].div_floor(&t.top[r][p]);
                    t.sub_col(c, p, &q);
                }
            }
        }
        // Clear this row's entries under earlier pivots.
        if let Some(p) = pivots[r] {
            for prev in pivots[..r].iter().flatten().copied().collect::<Vec<_>>() {
                let q = t.top[r][prev].div_floor(&t.top[r][p]);
                t.sub_col(prev, p, &q);
            }
        }
    }

    let mut value: Vec<Option<AffineForm>> = vec![None; cols];
    let mut integral = Vec::new();
    let mut zero = Vec::new();
    for r in 0..rows {
        let mut acc = t.rhs[r].clone();
        for c in 0..cols {
            if let Some(v) = &value[c] {
                if !t.top[r][c].is_zero() {
                    acc = &acc - &v.scale(&Rational::from_int(t.top[r][c].clone()));
                }
            }
        }
        match pivots[r] {
            Some(p) => {
                let v = acc.scale(&Rational::from_int(t.top[r][p].clone()).recip());
                if v.dcoeff.is_zero() && !v.constant.is_integer() {
                    return Err(DioError::NoIntegerSolution);
                }
                if !v.dcoeff.is_integer() || !v.constant.is_integer() {
                    integral.push(v.clone());
                }
                value[p] = Some(v);
            }
            None => {
                if acc.dcoeff.is_zero() && !acc.constant.is_zero() {
                    return Err(DioError::NoIntegerSolution);
                }
                if !acc.is_zero() {
                    zero.push(acc);
                }
            }
        }
    }
    let free: Vec<usize> = (0..cols).filter(|&c| !used[c]).collect();
    let fixed: Vec<(usize, AffineForm)> = (0..cols).filter_map(|c| value[c].clone().map(|v| (c, v))).collect();
    let exprs = (0..cols)
        .map(|k| {
            let coeffs = free.iter().map(|&j| t.record[k][j].clone()).collect();
            let mut base = AffineForm::zero();
            for (c, v) in &fixed {
                if !t.record[k][*c].is_zero() {
                    base = &base + &v.scale(&Rational::from_int(t.record[k][*c].clone()));
                }
            }
            IntExpr { coeffs, base }
        })
        .collect();
    Ok(ParametricIntSolution { names: t.names.clone(), n: t.n, fixed, free, exprs, integral, zero, record: t.record })
}

/// Integer interval; `None` ends are unbounded.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Interval {
    pub lo: Option<BigInt>,
    pub hi: Option<BigInt>,
}

impl Interval {
    pub fn new(lo: Option<BigInt>, hi: Option<BigInt>) -> Self {
        Interval { lo, hi }
    }

    pub fn point(v: BigInt) -> Self {
        Interval { lo: Some(v.clone()), hi: Some(v) }
    }

    pub fn is_empty(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(l), Some(h)) if l > h)
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }

    fn raise_lo(&mut self, v: BigInt) -> bool {
        if self.lo.as_ref().is_none_or(|l| v > *l) {
            self.lo = Some(v);
            true
        } else {
            false
        }
    }

    fn lower_hi(&mut self, v: BigInt) -> bool {
        if self.hi.as_ref().is_none_or(|h| v < *h) {
            self.hi = Some(v);
            true
        } else {
            false
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = self.lo.as_ref().map_or("-inf".to_string(), |v| v.to_string());
        let hi = self.hi.as_ref().map_or("+inf".to_string(), |v| v.to_string());
        write!(f, "[{lo}, {hi}]")
    }
}

/// Intervals for the free parameters and for every variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub params: Vec<Interval>,
    pub vars: Vec<Interval>,
}

/// `sum a_j u_j + beta >= 0` with `beta <= beta_hi`.
struct Ineq {
    coeffs: Vec<BigInt>,
    beta_hi: Option<Rational>,
}

fn form_max(f: &AffineForm, d_lo: Option<&BigInt>, d_hi: Option<&BigInt>) -> Option<Rational> {
    if f.dcoeff.is_zero() {
        return Some(f.constant.clone());
    }
    let d = if f.dcoeff.is_positive() { d_hi } else { d_lo }?;
    Some(f.eval(&Rational::from_int(d.clone())))
}

fn form_min(f: &AffineForm, d_lo: Option<&BigInt>, d_hi: Option<&BigInt>) -> Option<Rational> {
    form_max(&-f, d_lo, d_hi).map(|v| -v)
}

/// Largest value of `a * u` over the interval.
fn term_max(a: &BigInt, iv: &Interval) -> Option<BigInt> {
    if a.is_zero() {
        return Some(BigInt::zero());
    }
    let end = if a.is_positive() { &iv.hi } else { &iv.lo };
    end.as_ref().map(|v| a * v)
}

fn term_min(a: &BigInt, iv: &Interval) -> Option<BigInt> {
    term_max(&-a, iv).map(|v| -v)
}

fn floor_rat(r: &Rational) -> BigInt {
    r.floor()
}

fn ceil_rat(r: &Rational) -> BigInt {
    r.ceil()
}

const PROPAGATION_ROUNDS: usize = 64;

/// Open intervals wider than this get LP bounds before branching.
const WIDE: u32 = 32;

fn wide(params: &[Interval]) -> bool {
    params.iter().filter(|iv| iv.lo != iv.hi).count() > 1
        && params.iter().any(|iv| match (&iv.lo, &iv.hi) {
            (Some(l), Some(h)) => h - l > BigInt::from(WIDE),
            _ => true,
        })
}

/// Tightens `params` against every inequality until nothing changes. False when a domain empties.
fn propagate(ineqs: &[Ineq], params: &mut [Interval]) -> bool {
    for _ in 0..PROPAGATION_ROUNDS {
        let mut changed = false;
        for q in ineqs {
            let Some(beta) = &q.beta_hi else { continue };
            let mut finite = beta.clone();
            let mut infinite = 0usize;
            let maxes: Vec<Option<BigInt>> = q.coeffs.iter().zip(params.iter()).map(|(a, iv)| term_max(a, iv)).collect();
            for m in &maxes {
                match m {
                    Some(v) => finite += Rational::from_int(v.clone()),
                    None => infinite += 1,
                }
            }
            if infinite == 0 && finite.is_negative() {
                return false;
            }
            for (j, a) in q.coeffs.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                // a u_j >= -(beta + sum of the other maxima)
                let rest = match &maxes[j] {
                    Some(v) if infinite == 0 => &finite - Rational::from_int(v.clone()),
                    None if infinite == 1 => finite.clone(),
                    _ => continue,
                };
                let need = -rest / Rational::from_int(a.clone());
                changed |= if a.is_positive() {
                    params[j].raise_lo(ceil_rat(&need))
                } else {
                    params[j].lower_hi(floor_rat(&need))
                };
                if params[j].is_empty() {
                    return false;
                }
            }
        }
        if !changed {
            break;
        }
    }
    true
}

/// Exact LP hull bounds for each parameter, intersected with `params`.
/// False when the inequalities have no real solution.
fn lp_tighten(ineqs: &[Ineq], params: &mut [Interval]) -> bool {
    let k = params.len();
    if k == 0 {
        return true;
    }
    // u_j = p_j - n_j with p, n >= 0
    let split = |coeffs: &[Rational]| -> Vec<Rational> {
        coeffs.iter().cloned().chain(coeffs.iter().map(|c| -c)).collect()
    };
    let mut rows = Vec::new();
    for q in ineqs {
        let Some(beta) = &q.beta_hi else { continue };
        let a: Vec<Rational> = q.coeffs.iter().map(|c| -Rational::from_int(c.clone())).collect();
        rows.push(Constraint::new(split(&a), Relation::Le, beta.clone()));
    }
    for (j, iv) in params.iter().enumerate() {
        let mut e = vec![Rational::zero(); k];
        e[j] = Rational::one();
        if let Some(h) = &iv.hi {
            rows.push(Constraint::new(split(&e), Relation::Le, Rational::from_int(h.clone())));
        }
        if let Some(l) = &iv.lo {
            e[j] = -Rational::one();
            rows.push(Constraint::new(split(&e), Relation::Le, -Rational::from_int(l.clone())));
        }
    }
    for j in 0..k {
        let mut c = vec![Rational::zero(); k];
        c[j] = Rational::one();
        for sense in [Sense::Maximize, Sense::Minimize] {
            let Ok(lp) = LpProblem::new(sense, split(&c), rows.clone()) else { return true };
            let out = simplex_solve(&lp);
            match (out.tag, sense) {
                (Tag::Infeasible, _) => return false,
                (Tag::Optimal, Sense::Maximize) => {
                    params[j].lower_hi(out.value.expect("optimal value").floor());
                }
                (Tag::Optimal, Sense::Minimize) => {
                    params[j].raise_lo(out.value.expect("optimal value").ceil());
                }
                _ => {}
            }
            if params[j].is_empty() {
                return false;
            }
        }
    }
    true
}

fn nonneg_ineqs(sol: &ParametricIntSolution, d_lo: Option<&BigInt>, d_hi: Option<&BigInt>) -> Vec<Ineq> {
    sol.exprs
        .iter()
        .map(|e| Ineq { coeffs: e.coeffs.clone(), beta_hi: form_max(&e.base, d_lo, d_hi) })
        .collect()
}

/// `v_k <= cap` as `cap - v_k >= 0`.
fn upper_ineq(sol: &ParametricIntSolution, k: usize, cap: &BigInt, d_lo: Option<&BigInt>, d_hi: Option<&BigInt>) -> Ineq {
    let e = &sol.exprs[k];
    Ineq {
        coeffs: e.coeffs.iter().map(|a| -a).collect(),
        beta_hi: form_min(&e.base, d_lo, d_hi).map(|m| Rational::from_int(cap.clone()) - m),
    }
}

fn var_intervals(sol: &ParametricIntSolution, params: &[Interval], d_lo: Option<&BigInt>, d_hi: Option<&BigInt>) -> Vec<Interval> {
    sol.exprs
        .iter()
        .map(|e| {
            let mut hi = form_max(&e.base, d_lo, d_hi);
            let mut lo = form_min(&e.base, d_lo, d_hi);
            for (a, iv) in e.coeffs.iter().zip(params) {
                hi = hi.and_then(|h| term_max(a, iv).map(|t| h + Rational::from_int(t)));
                lo = lo.and_then(|l| term_min(a, iv).map(|t| l + Rational::from_int(t)));
            }
            let lo = lo.map_or(BigInt::zero(), |l| ceil_rat(&l).max(BigInt::zero()));
            Interval::new(Some(lo), hi.map(|h| floor_rat(&h)))
        })
        .collect()
}

/// Bounds implied by nonnegativity of every variable when `d <= d_cap`.
pub fn derive_bounds(sol: &ParametricIntSolution, d_cap: &BigInt) -> Bounds {
    derive_bounds_in(sol, None, Some(d_cap))
}

/// Bounds implied by nonnegativity of every variable for `d` in `[d_lo, d_hi]`.
pub fn derive_bounds_in(sol: &ParametricIntSolution, d_lo: Option<&BigInt>, d_hi: Option<&BigInt>) -> Bounds {
    let ineqs = nonneg_ineqs(sol, d_lo, d_hi);
    let mut params = vec![Interval::default(); sol.free.len()];
    if !propagate(&ineqs, &mut params) {
        let empty = Interval::new(Some(BigInt::one()), Some(BigInt::zero()));
        return Bounds { params: vec![empty.clone(); sol.free.len()], vars: vec![empty; sol.exprs.len()] };
    }
    let vars = var_intervals(sol, &params, d_lo, d_hi);
    Bounds { params, vars }
}

/// Rows `coeffs . (v, u) = rhs` with `d` eliminated from all rows but `pivot`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elimination {
    pub pivot: Option<usize>,
    pub rows: Vec<(Vec<Rational>, AffineForm)>,
}

impl Elimination {
    pub fn d_free(&self) -> impl Iterator<Item = &(Vec<Rational>, AffineForm)> {
        self.rows.iter().enumerate().filter(move |(i, _)| Some(*i) != self.pivot).map(|(_, r)| r)
    }

    /// Whether `point` satisfies every `d`-free row.
    pub fn holds(&self, point: &[Rational]) -> bool {
        self.d_free().all(|(c, rhs)| {
            c.iter().zip(point).map(|(a, x)| a * x).sum::<Rational>() == rhs.constant
        })
    }
}

/// Pivots on the row with the smallest nonzero `|d|` coefficient and combines
/// every other row with it by integer multiples so their `d` coefficient vanishes.
pub fn eliminate_d(rows: &[(Vec<Rational>, AffineForm)]) -> Elimination {
    let pivot = rows
        .iter()
        .enumerate()
        .filter(|(_, (_, f))| !f.dcoeff.is_zero())
        .min_by(|(i, (_, a)), (j, (_, b))| a.dcoeff.abs().cmp(&b.dcoeff.abs()).then(i.cmp(j)))
        .map(|(i, _)| i);
    let Some(p) = pivot else {
        return Elimination { pivot: None, rows: rows.to_vec() };
    };
    let (pc, pf) = &rows[p];
    let out = rows
        .iter()
        .enumerate()
        .map(|(i, (c, f))| {
            if i == p || f.dcoeff.is_zero() {
                return (c.clone(), f.clone());
            }
            // Both d coefficients are integers in practice; rationals work the same.
            let ap = &pf.dcoeff;
            let ai = &f.dcoeff;
            let (mi, mp) = if ap.is_integer() && ai.is_integer() {
                let g = Rational::from_int(gcd_bigint(ap.numer(), ai.numer()));
                let sign = Rational::from_int(ap.signum());
                (ap.abs() / &g, sign * ai / &g)
            } else {
                (Rational::one(), ai / ap)
            };
            let coeffs = c.iter().zip(pc).map(|(x, y)| &mi * x - &mp * y).collect();
            let rhs = &f.scale(&mi) - &pf.scale(&mp);
            (coeffs, rhs)
        })
        .collect();
    Elimination { pivot: Some(p), rows: out }
}

/// Rows `v_k - sum a u = base(d)` over columns `(v, u)`, signed so that the
/// `d` coefficient is never positive.
pub fn parametric_table(sol: &ParametricIntSolution) -> Vec<(Vec<Rational>, AffineForm)> {
    let nv = sol.exprs.len();
    let nf = sol.free.len();
    sol.exprs
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let mut row = vec![Rational::zero(); nv + nf];
            row[k] = Rational::one();
            for (j, a) in e.coeffs.iter().enumerate() {
                row[nv + j] = -Rational::from_int(a.clone());
            }
            let mut rhs = e.base.clone();
            if rhs.dcoeff.is_positive() {
                row = row.iter().map(|v| -v).collect();
                rhs = -&rhs;
            }
            (row, rhs)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DioConfig {
    /// Enumeration nodes allowed, counting every tried `d`.
    pub budget: u64,
}

impl Default for DioConfig {
    fn default() -> Self {
        DioConfig { budget: 1_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct IpRun {
    pub outcome: LpOutcome,
    /// Objective value of the maximization form.
    pub d: BigInt,
    /// LP relaxation value of the maximization form.
    pub relaxation: Rational,
    pub cap: BigInt,
    /// Every admissible `d` examined, in order.
    pub tried: Vec<BigInt>,
    pub nodes: u64,
    pub solution: ParametricIntSolution,
    /// Integer dual value when one was found.
    pub dual_value: Option<Rational>,
    pub certified: bool,
}

/// The problem as a maximization with `<=` and `=` rows only.
fn max_form(p: &LpProblem) -> LpProblem {
    let mut q = p.clone();
    if q.sense == Sense::Minimize {
        q.sense = Sense::Maximize;
        q.objective = q.objective.iter().map(|v| -v).collect();
    }
    q.canonicalize().0
}

struct Search<'a> {
    sol: &'a ParametricIntSolution,
    budget: u64,
    nodes: u64,
    box_caps: Option<Vec<BigInt>>,
    check: Option<&'a Elimination>,
}

impl Search<'_> {
    fn tick(&mut self) -> Result<(), DioError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            Err(DioError::BudgetExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    fn ineqs(&self, d: &BigInt) -> Vec<Ineq> {
        let mut out = nonneg_ineqs(self.sol, Some(d), Some(d));
        if let Some(caps) = &self.box_caps {
            for (k, cap) in caps.iter().enumerate() {
                out.push(upper_ineq(self.sol, k, cap, Some(d), Some(d)));
            }
        }
        out
    }

    fn at(&mut self, d: &BigInt, q: &LpProblem) -> Result<Option<Vec<BigInt>>, DioError> {
        let mut params = vec![Interval::default(); self.sol.free.len()];
        let mut ineqs = self.ineqs(d);
        if !propagate(&ineqs, &mut params) || !lp_tighten(&ineqs, &mut params) {
            return Ok(None);
        }
        if params.iter().any(|iv| !iv.is_bounded()) && self.box_caps.is_none() {
            let caps = lp_box(q).map_err(|_| DioError::BudgetExceeded(self.budget))?;
            self.box_caps = Some(caps.into_iter().map(|(_, h)| h).collect());
            ineqs = self.ineqs(d);
            params = vec![Interval::default(); self.sol.free.len()];
            if !propagate(&ineqs, &mut params) || !lp_tighten(&ineqs, &mut params) {
                return Ok(None);
            }
        }
        if params.iter().any(|iv| !iv.is_bounded()) {
            return Err(DioError::BudgetExceeded(self.budget));
        }
        self.dfs(d, &ineqs, params)
    }

    fn dfs(&mut self, d: &BigInt, ineqs: &[Ineq], params: Vec<Interval>) -> Result<Option<Vec<BigInt>>, DioError> {
        self.tick()?;
        let open = params
            .iter()
            .enumerate()
            .filter(|(_, iv)| iv.lo != iv.hi)
            .min_by_key(|(_, iv)| iv.hi.as_ref().unwrap() - iv.lo.as_ref().unwrap())
            .map(|(j, _)| j);
        let Some(j) = open else {
            let u: Vec<BigInt> = params.iter().map(|iv| iv.lo.clone().unwrap()).collect();
            let v = self.sol.values(&u, d);
            if v.iter().all(|x| x.is_integer() && !x.is_negative()) {
                if let Some(el) = self.check {
                    let mut point = v.clone();
                    point.extend(u.iter().map(|x| Rational::from_int(x.clone())));
                    if !el.holds(&point) {
                        return Ok(None);
                    }
                }
                return Ok(Some(u));
            }
            return Ok(None);
        };
        let (lo, hi) = (params[j].lo.clone().unwrap(), params[j].hi.clone().unwrap());
        let mut v = lo;
        while v <= hi {
            let mut next = params.clone();
            next[j] = Interval::point(v.clone());
            if propagate(ineqs, &mut next) && (!wide(&next) || lp_tighten(ineqs, &mut next)) {
                if let Some(u) = self.dfs(d, ineqs, next)? {
                    return Ok(Some(u));
                }
            } else {
                self.tick()?;
            }
            v += 1;
        }
        Ok(None)
    }
}

fn descend(p: &LpProblem, cfg: &DioConfig, second: bool) -> Result<IpRun, DioError> {
    if !p.has_integer_data() {
        return Err(DioError::NonIntegerData("coefficients must be integers".to_string()));
    }
    let q = max_form(p);
    let relax = simplex_solve(&q);
    let relaxation = match relax.tag {
        Tag::Optimal => relax.value.clone().expect("optimal value"),
        Tag::Unbounded => return Err(DioError::Unbounded),
        _ => return Err(DioError::InfeasibleIP),
    };
    let sol = diagonalize(&DioTable::from_problem(&q)?)?;
    let cap = relaxation.floor();
    let floor = {
        let mut low = q.clone();
        low.sense = Sense::Minimize;
        let r = simplex_solve(&low);
        match r.tag {
            Tag::Optimal => Some(r.value.expect("optimal value").ceil()),
            _ => None,
        }
    };
    let elim = if second { Some(eliminate_d(&parametric_table(&sol))) } else { None };
    let dual_value = if second { integer_dual_value(&q, cfg) } else { None };
    let mut search = Search { sol: &sol, budget: cfg.budget, nodes: 0, box_caps: None, check: elim.as_ref() };
    let mut tried = Vec::new();
    let mut d = cap.clone();
    loop {
        if floor.as_ref().is_some_and(|f| d < *f) {
            return Err(DioError::InfeasibleIP);
        }
        search.tick()?;
        if sol.admits(&d) {
            tried.push(d.clone());
            if let Some(u) = search.at(&d, &q)? {
                let v = sol.values(&u, &d);
                let x = v[..q.n()].to_vec();
                let mut outcome = LpOutcome::optimal(p, x);
                outcome.oracle_tag = None;
                let certified = dual_value.as_ref().is_some_and(|w| *w == Rational::from_int(d.clone()));
                return Ok(IpRun {
                    outcome,
                    d,
                    relaxation,
                    cap,
                    tried,
                    nodes: search.nodes,
                    solution: sol.clone(),
                    dual_value,
                    certified,
                });
            }
        }
        d -= 1;
    }
}

/// Descent from the LP cap: the first `d` with a nonnegative integer point is optimal.
pub fn search_first_method(p: &LpProblem, cfg: &DioConfig) -> Result<IpRun, DioError> {
    descend(p, cfg, false)
}

/// Descent where each candidate must also satisfy the `d`-free system, with
/// the integer dual value as an optimality certificate.
pub fn search_second_method(p: &LpProblem, cfg: &DioConfig) -> Result<IpRun, DioError> {
    descend(p, cfg, true)
}

/// Best integer value of the dual of a maximization with `<=`/`=` rows, if the
/// search finishes within a tenth of the budget.
fn integer_dual_value(q: &LpProblem, cfg: &DioConfig) -> Option<Rational> {
    let mut rows = Vec::new();
    for c in &q.constraints {
        rows.push(Constraint::new(c.coeffs.clone(), Relation::Le, c.rhs.clone()));
        if c.relation == Relation::Eq {
            rows.push(Constraint::new(c.coeffs.iter().map(|v| -v).collect(), Relation::Le, -&c.rhs));
        }
    }
    let le = LpProblem::new(Sense::Maximize, q.objective.clone(), rows).ok()?;
    let dual = dual_of(&le).ok()?;
    let sub = DioConfig { budget: (cfg.budget / 10).max(1000) };
    descend(&dual, &sub, false).ok().and_then(|r| r.outcome.value)
}
