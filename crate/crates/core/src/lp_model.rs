//! Linear program representation, standard form, duals, the augmented
//! matrix `[E, F]`, and constraint reordering.

use std::fmt;

use thiserror::Error;

use crate::exact_arith::{dot, AffineForm, ParamMatrix, Rational, RowOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    pub fn flip(self) -> Sense {
        match self {
            Sense::Maximize => Sense::Minimize,
            Sense::Minimize => Sense::Maximize,
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: &Rational, b: &Rational) -> bool {
        match self {
            Sense::Maximize => a > b,
            Sense::Minimize => a < b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }

    pub fn negated(self) -> Relation {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rational>, relation: Relation, rhs: Rational) -> Self {
        Constraint { name: String::new(), coeffs, relation, rhs }
    }

    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        self.relation.holds(&dot(&self.coeffs, x), &self.rhs)
    }

    fn negate(&self) -> Constraint {
        Constraint {
            name: self.name.clone(),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            relation: self.relation.negated(),
            rhs: -&self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("problem needs at least one variable and one constraint")]
    Empty,
    #[error("constraint {0} has {1} coefficients, expected {2}")]
    RowLength(usize, usize, usize),
    #[error("constraint {0} has relation {1} which does not match the objective sense")]
    MixedRelations(usize, &'static str),
    #[error("invalid row permutation")]
    BadPermutation,
    #[error("unsupported problem shape: {0}")]
    Unsupported(String),
}

/// `max/min C^T x` subject to linear rows, all variables nonnegative.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub integer: Vec<bool>,
    pub names: Vec<String>,
}

impl LpProblem {
    pub fn new(
        sense: Sense,
        objective: Vec<Rational>,
        constraints: Vec<Constraint>,
    ) -> Result<Self, ModelError> {
        let n = objective.len();
        if n == 0 || constraints.is_empty() {
            return Err(ModelError::Empty);
        }
        for (i, c) in constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(ModelError::RowLength(i, c.coeffs.len(), n));
            }
        }
        let names = (1..=n).map(|i| format!("x{i}")).collect();
        Ok(LpProblem { sense, objective, constraints, integer: vec![false; n], names })
    }

    /// Builds a problem from integer data: rows `(coeffs, relation, rhs)`.
    pub fn from_ints(sense: Sense, c: &[i64], rows: &[(&[i64], Relation, i64)]) -> Self {
        let objective = c.iter().map(|&v| Rational::from_int(v)).collect();
        let constraints = rows
            .iter()
            .map(|(a, rel, b)| {
                Constraint::new(a.iter().map(|&v| Rational::from_int(v)).collect(), *rel, Rational::from_int(*b))
            })
            .collect();
        LpProblem::new(sense, objective, constraints).expect("well-formed integer data")
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.n());
        self.names = names;
        self
    }

    pub fn all_integer(mut self) -> Self {
        self.integer = vec![true; self.n()];
        self
    }

    pub fn n(&self) -> usize {
        self.objective.len()
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        dot(&self.objective, x)
    }

    /// Exact feasibility: nonnegativity plus every constraint row.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.n()
            && x.iter().all(|v| !v.is_negative())
            && self.constraints.iter().all(|c| c.satisfied_by(x))
    }

    /// Slack/surplus values for `x` in the standard form sign convention.
    pub fn slack_values(&self, x: &[Rational]) -> Vec<Rational> {
        self.constraints
            .iter()
            .filter_map(|c| {
                let ax = dot(&c.coeffs, x);
                match c.relation {
                    Relation::Le => Some(&c.rhs - ax),
                    Relation::Ge => Some(ax - &c.rhs),
                    Relation::Eq => None,
                }
            })
            .collect()
    }

    /// Rewrites rows so that a maximization has only `<=` rows and a
    /// minimization only `>=` rows (equalities untouched). Returns the negated row indices.
    pub fn canonicalize(&self) -> (LpProblem, Vec<usize>) {
        let bad = match self.sense {
            Sense::Maximize => Relation::Ge,
            Sense::Minimize => Relation::Le,
        };
        let mut p = self.clone();
        let mut flipped = Vec::new();
        for (i, c) in p.constraints.iter_mut().enumerate() {
            if c.relation == bad {
                *c = c.negate();
                flipped.push(i);
            }
        }
        (p, flipped)
    }

    pub fn is_all_integer(&self) -> bool {
        self.integer.iter().all(|&b| b)
    }

    pub fn has_integer_data(&self) -> bool {
        self.objective.iter().all(Rational::is_integer)
            && self
                .constraints
                .iter()
                .all(|c| c.rhs.is_integer() && c.coeffs.iter().all(Rational::is_integer))
    }
}

/// The problem restated with equalities; one slack or surplus per inequality row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardForm {
    pub base: LpProblem,
    /// `Some(1)` slack, `Some(-1)` surplus, `None` for an equality row.
    pub slack_sign: Vec<Option<i8>>,
}

impl StandardForm {
    pub fn slack_count(&self) -> usize {
        self.slack_sign.iter().flatten().count()
    }

    pub fn total_vars(&self) -> usize {
        self.base.n() + self.slack_count()
    }

    /// Slack column index (within the full variable vector) of each row.
    pub fn slack_columns(&self) -> Vec<Option<usize>> {
        let mut next = self.base.n();
        self.slack_sign
            .iter()
            .map(|s| {
                s.map(|_| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }

    pub fn variable_names(&self) -> Vec<String> {
        let mut names = self.base.names.clone();
        let mut k = 0;
        for s in &self.slack_sign {
            if s.is_some() {
                k += 1;
                names.push(format!("s{k}"));
            }
        }
        names
    }
}

pub fn to_standard_form(p: &LpProblem) -> Result<StandardForm, ModelError> {
    let slack_sign = p
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| match (p.sense, c.relation) {
            (_, Relation::Eq) => Ok(None),
            (Sense::Maximize, Relation::Le) => Ok(Some(1)),
            (Sense::Minimize, Relation::Ge) => Ok(Some(-1)),
            (_, rel) => Err(ModelError::MixedRelations(i, rel.symbol())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StandardForm { base: p.clone(), slack_sign })
}

/// Body `[[C^T, 0], [A, ±I]]` with last column `(d; b)`.
pub fn assemble_augmented(sf: &StandardForm) -> ParamMatrix {
    let p = &sf.base;
    let total = sf.total_vars();
    let cols = sf.slack_columns();
    let mut body = Vec::with_capacity(p.m() + 1);
    let mut last = Vec::with_capacity(p.m() + 1);
    let mut top = p.objective.clone();
    top.resize(total, Rational::zero());
    body.push(top);
    last.push(AffineForm::param());
    for (i, c) in p.constraints.iter().enumerate() {
        let mut row = c.coeffs.clone();
        row.resize(total, Rational::zero());
        if let (Some(col), Some(sign)) = (cols[i], sf.slack_sign[i]) {
            row[col] = Rational::from_int(sign as i64);
        }
        body.push(row);
        last.push(AffineForm::constant(c.rhs.clone()));
    }
    ParamMatrix::new(body, last)
}

/// Standard LP dual of `max{C^T x : Ax <= b}` or `min{C^T x : Ax >= b}`.
pub fn dual_of(p: &LpProblem) -> Result<LpProblem, ModelError> {
    let expected = match p.sense {
        Sense::Maximize => Relation::Le,
        Sense::Minimize => Relation::Ge,
    };
    if let Some(i) = p.constraints.iter().position(|c| c.relation != expected) {
        return Err(ModelError::Unsupported(format!(
            "dual needs uniform {} rows; row {} is {}",
            expected.symbol(),
            i,
            p.constraints[i].relation.symbol()
        )));
    }
    let m = p.m();
    let objective: Vec<Rational> = p.constraints.iter().map(|c| c.rhs.clone()).collect();
    let relation = expected.negated();
    let constraints = (0..p.n())
        .map(|j| {
            let coeffs = p.constraints.iter().map(|c| c.coeffs[j].clone()).collect();
            Constraint::new(coeffs, relation, p.objective[j].clone())
        })
        .collect();
    let mut d = LpProblem::new(p.sense.flip(), objective, constraints)?;
    d.names = (1..=m).map(|i| format!("w{i}")).collect();
    Ok(d)
}

/// New row `i` is old row `perm[i]`.
pub fn permute_constraints(p: &LpProblem, perm: &[usize]) -> Result<LpProblem, ModelError> {
    let m = p.m();
    if perm.len() != m {
        return Err(ModelError::BadPermutation);
    }
    let mut seen = vec![false; m];
    for &j in perm {
        if j >= m || seen[j] {
            return Err(ModelError::BadPermutation);
        }
        seen[j] = true;
    }
    let mut q = p.clone();
    q.constraints = perm.iter().map(|&j| p.constraints[j].clone()).collect();
    Ok(q)
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &j) in perm.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// Violations of the admissible column shapes (rise-then-flat, fall-then-flat,
/// fall-then-rise): once a column has risen, every later fall counts.
pub fn column_shape_violations(col: &[Rational]) -> usize {
    let mut risen = false;
    let mut bad = 0;
    for w in col.windows(2) {
        if w[1] > w[0] {
            risen = true;
        } else if w[1] < w[0] && risen {
            bad += 1;
        }
    }
    bad
}

pub fn monotonicity_score(p: &LpProblem) -> usize {
    (0..p.n())
        .map(|j| {
            let col: Vec<Rational> = p.constraints.iter().map(|c| c.coeffs[j].clone()).collect();
            column_shape_violations(&col)
        })
        .sum()
}

pub const MAX_REORDER_CANDIDATES: usize = 24;

fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], &mut out);
    out
}

/// Row permutations ordered by shape score, ties by permutation; at most 24.
pub fn heuristic_reorder(p: &LpProblem) -> Vec<(Vec<usize>, LpProblem)> {
    let m = p.m();
    let mut scored: Vec<(usize, Vec<usize>, LpProblem)> = if m <= 7 {
        permutations(m)
            .into_iter()
            .map(|perm| {
                let q = permute_constraints(p, &perm).expect("valid permutation");
                (monotonicity_score(&q), perm, q)
            })
            .collect()
    } else {
        // Too many permutations to score them all: order rows column by column instead.
        let mut seeds = vec![(0..m).collect::<Vec<_>>()];
        for j in 0..p.n() {
            let mut perm: Vec<usize> = (0..m).collect();
            perm.sort_by(|&a, &b| p.constraints[a].coeffs[j].cmp(&p.constraints[b].coeffs[j]));
            seeds.push(perm.clone());
            perm.reverse();
            seeds.push(perm);
        }
        seeds.sort();
        seeds.dedup();
        seeds
            .into_iter()
            .map(|perm| {
                let q = permute_constraints(p, &perm).expect("valid permutation");
                (monotonicity_score(&q), perm, q)
            })
            .collect()
    };
    scored.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    scored.truncate(MAX_REORDER_CANDIDATES);
    scored.into_iter().map(|(_, perm, q)| (perm, q)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Optimal,
    Unbounded,
    Infeasible,
    Inconsistent,
    Fallback,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tag::Optimal => "optimal",
            Tag::Unbounded => "unbounded",
            Tag::Infeasible => "infeasible",
            Tag::Inconsistent => "inconsistent",
            Tag::Fallback => "fallback",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceStep {
    Canonicalize { row: usize },
    Reorder(Vec<usize>),
    Op(RowOp),
    Note(String),
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceStep::Canonicalize { row } => write!(f, "negate constraint {}", row + 1),
            TraceStep::Reorder(perm) => {
                let p: Vec<String> = perm.iter().map(|i| (i + 1).to_string()).collect();
                write!(f, "reorder constraints ({})", p.join(","))
            }
            TraceStep::Op(op) => write!(f, "{op}"),
            TraceStep::Note(s) => f.write_str(s),
        }
    }
}

/// Result of any of the LP/IP solvers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpOutcome {
    pub tag: Tag,
    /// Optimal objective value (for `Fallback`, the oracle's value if optimal).
    pub value: Option<Rational>,
    /// Values of the problem variables.
    pub x: Vec<Rational>,
    /// Values of the slack/surplus variables in standard-form order.
    pub slacks: Vec<Rational>,
    pub trace: Vec<TraceStep>,
    /// For `Fallback`: the oracle's classification.
    pub oracle_tag: Option<Tag>,
}

impl LpOutcome {
    pub fn status(tag: Tag) -> Self {
        LpOutcome { tag, value: None, x: Vec::new(), slacks: Vec::new(), trace: Vec::new(), oracle_tag: None }
    }

    pub fn optimal(p: &LpProblem, x: Vec<Rational>) -> Self {
        LpOutcome {
            tag: Tag::Optimal,
            value: Some(p.objective_value(&x)),
            slacks: p.slack_values(&x),
            x,
            trace: Vec::new(),
            oracle_tag: None,
        }
    }

    /// Classification after resolving a fallback to the oracle's answer.
    pub fn effective_tag(&self) -> Tag {
        match self.tag {
            Tag::Fallback => self.oracle_tag.unwrap_or(Tag::Fallback),
            Tag::Inconsistent => Tag::Infeasible,
            t => t,
        }
    }

    /// Re-checks an optimal assignment against the problem by substitution.
    pub fn verify(&self, p: &LpProblem) -> bool {
        match &self.value {
            Some(v) if !self.x.is_empty() => p.is_feasible(&self.x) && &p.objective_value(&self.x) == v,
            _ => false,
        }
    }
}
