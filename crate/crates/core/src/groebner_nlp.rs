//! Quadratic programs through polynomial ideals: the system `f - d = 0`,
//! `g_j ± s_j = 0`, its reduced lex Gröbner basis, and the read-off of the
//! optimal `d`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::exact_arith::{affine_solution_space, dot, solve_linear, Rational};
use crate::lp_model::{Relation, Sense};

/// Exponent vector. Index 0 is the most significant variable in lex order.
pub type Monomial = Vec<u32>;

/// Sparse polynomial over the rationals. Terms are kept in lex order, so the
/// leading term is the last entry.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

fn divides(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn lcm(a: &[u32], b: &[u32]) -> Monomial {
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = MultiPoly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        MultiPoly::monomial(e, Rational::one())
    }

    pub fn monomial(exp: Monomial, c: Rational) -> Self {
        let mut p = MultiPoly::zero(exp.len());
        p.add_term(exp, c);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = MultiPoly::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length");
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    pub fn coeff(&self, exp: &[u32]) -> Rational {
        self.terms.get(exp).cloned().unwrap_or_default()
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&vec![0; self.nvars])
    }

    pub fn add_term(&mut self, exp: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(exp).or_default();
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    pub fn contains_var(&self, i: usize) -> bool {
        self.terms.keys().any(|e| e[i] > 0)
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return MultiPoly::zero(self.nvars);
        }
        MultiPoly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect() }
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some((_, c)) => self.scale(&c.recip()),
            None => self.clone(),
        }
    }

    pub fn mul_monomial(&self, exp: &[u32], k: &Rational) -> Self {
        MultiPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.iter().zip(exp).map(|(a, b)| a + b).collect(), c * k))
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = MultiPoly::constant(self.nvars, Rational::one());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = c.clone();
                for (xi, &k) in x.iter().zip(e) {
                    for _ in 0..k {
                        v *= xi;
                    }
                }
                v
            })
            .sum()
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c.to_f64() * x.iter().zip(e).map(|(xi, &k)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Replaces variable `i` by the polynomial `q`.
    pub fn substitute(&self, i: usize, q: &MultiPoly) -> Self {
        let mut out = MultiPoly::zero(self.nvars);
        let mut powers: Vec<MultiPoly> = vec![MultiPoly::constant(self.nvars, Rational::one())];
        for (e, c) in &self.terms {
            let k = e[i] as usize;
            while powers.len() <= k {
                let next = powers.last().expect("nonempty") * q;
                powers.push(next);
            }
            let mut rest = e.clone();
            rest[i] = 0;
            out = &out + &powers[k].mul_monomial(&rest, c);
        }
        out
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = MultiPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                out.add_term(f, c * &Rational::from_int(e[i]));
            }
        }
        out
    }

    /// If the polynomial is `c*v + r` with `c` a nonzero constant and `r` free
    /// of `v`, returns `(c, r)`.
    pub fn split_linear(&self, v: usize) -> Option<(Rational, MultiPoly)> {
        let mut c = None;
        let mut rest = MultiPoly::zero(self.nvars);
        for (e, k) in &self.terms {
            if e[v] == 0 {
                rest.add_term(e.clone(), k.clone());
            } else if e[v] == 1 && e.iter().enumerate().all(|(j, &p)| j == v || p == 0) {
                c = Some(k.clone());
            } else {
                return None;
            }
        }
        c.map(|c| (c, rest))
    }

    /// Renders with the given variable names, leading term first.
    pub fn render(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (e, c)) in self.terms.iter().rev().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, &k)| if k == 1 { names[j].clone() } else { format!("{}^{}", names[j], k) })
                .collect();
            let neg = c.is_negative();
            let mag = c.abs();
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if mono.is_empty() {
                out.push_str(&mag.to_string());
            } else {
                if !mag.is_one() {
                    out.push_str(&mag.to_string());
                    out.push('*');
                }
                out.push_str(&mono.join("*"));
            }
        }
        out
    }

    fn default_names(&self) -> Vec<String> {
        (1..=self.nvars).map(|i| format!("v{i}")).collect()
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&self.default_names()))
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars);
        for (e, c) in &rhs.terms {
            out = &out + &self.mul_monomial(e, c);
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&-Rational::one())
    }
}

/// Remainder of full multivariate division of `p` by `g` under lex order.
pub fn normal_form(p: &MultiPoly, g: &[MultiPoly]) -> MultiPoly {
    let divisors: Vec<&MultiPoly> = g.iter().filter(|q| !q.is_zero()).collect();
    let mut p = p.clone();
    let mut rem = MultiPoly::zero(p.nvars);
    while let Some((m, c)) = p.leading().map(|(m, c)| (m.clone(), c.clone())) {
        let hit = divisors.iter().find(|q| divides(q.leading().expect("nonzero").0, &m));
        match hit {
            Some(q) => {
                let (qm, qc) = q.leading().expect("nonzero");
                let shift: Monomial = m.iter().zip(qm).map(|(a, b)| a - b).collect();
                p = &p - &q.mul_monomial(&shift, &(&c / qc));
            }
            None => {
                rem.add_term(m.clone(), c.clone());
                p.add_term(m, -c);
            }
        }
    }
    rem
}

pub fn s_polynomial(f: &MultiPoly, g: &MultiPoly) -> MultiPoly {
    let (fm, fc) = f.leading().expect("nonzero");
    let (gm, gc) = g.leading().expect("nonzero");
    let l = lcm(fm, gm);
    let fs: Monomial = l.iter().zip(fm).map(|(a, b)| a - b).collect();
    let gs: Monomial = l.iter().zip(gm).map(|(a, b)| a - b).collect();
    &f.mul_monomial(&fs, &fc.recip()) - &g.mul_monomial(&gs, &gc.recip())
}

/// Reduced lex Gröbner basis, monic and sorted by ascending leading monomial.
pub fn buchberger(f: &[MultiPoly]) -> Vec<MultiPoly> {
    let mut g: Vec<MultiPoly> = f.iter().filter(|p| !p.is_zero()).map(MultiPoly::monic).collect();
    let mut pairs: VecDeque<(usize, usize)> =
        (0..g.len()).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    while let Some((i, j)) = pairs.pop_front() {
        let (im, jm) = (g[i].leading().expect("nonzero").0, g[j].leading().expect("nonzero").0);
        if im.iter().zip(jm).all(|(a, b)| *a == 0 || *b == 0) {
            continue;
        }
        let r = normal_form(&s_polynomial(&g[i], &g[j]), &g);
        if !r.is_zero() {
            let k = g.len();
            g.push(r.monic());
            pairs.extend((0..k).map(|i| (i, k)));
        }
    }
    reduce_basis(g)
}

fn reduce_basis(mut g: Vec<MultiPoly>) -> Vec<MultiPoly> {
    g.sort_by(|a, b| a.leading().expect("nonzero").0.cmp(b.leading().expect("nonzero").0));
    let mut minimal: Vec<MultiPoly> = Vec::new();
    for p in g {
        let lm = p.leading().expect("nonzero").0;
        if !minimal.iter().any(|q| divides(q.leading().expect("nonzero").0, lm)) {
            minimal.push(p);
        }
    }
    let mut out = Vec::with_capacity(minimal.len());
    for i in 0..minimal.len() {
        let others: Vec<MultiPoly> =
            minimal.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| q.clone()).collect();
        let (lm, lc) = minimal[i].leading().expect("nonzero");
        let mut tail = minimal[i].clone();
        tail.add_term(lm.clone(), -lc);
        let mut r = normal_form(&tail, &others);
        r.add_term(lm.clone(), lc.clone());
        out.push(r.monic());
    }
    out.sort_by(|a, b| a.leading().expect("nonzero").0.cmp(b.leading().expect("nonzero").0));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NlpError {
    #[error("polynomial of degree {0} exceeds the supported degree 2")]
    DegreeTooHigh(u32),
    #[error("unsupported basis shape: {0}")]
    UnsupportedShape(String),
    #[error("the polynomial system has no solutions")]
    Inconsistent,
    #[error("no feasible candidate point was found")]
    NoCandidate,
}

/// A polynomial constraint `poly <rel> rhs` over the problem variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NlpConstraint {
    pub name: String,
    pub poly: MultiPoly,
    pub relation: Relation,
    pub rhs: Rational,
}

impl NlpConstraint {
    pub fn new(poly: MultiPoly, relation: Relation, rhs: Rational) -> Self {
        NlpConstraint { name: String::new(), poly, relation, rhs }
    }

    /// Coefficients and right-hand side when the constraint is linear.
    pub fn linear_row(&self, n: usize) -> Option<(Vec<Rational>, Rational)> {
        if self.poly.total_degree() > 1 {
            return None;
        }
        let mut a = vec![Rational::zero(); n];
        for (j, slot) in a.iter_mut().enumerate() {
            let mut e = vec![0; n];
            e[j] = 1;
            *slot = self.poly.coeff(&e);
        }
        Some((a, &self.rhs - self.poly.constant_term()))
    }

    /// Upper bounds implied by `sum a_j x_j^2 + c <= r` with every `a_j > 0`.
    pub fn sphere_bounds(&self, n: usize) -> Option<Vec<Option<f64>>> {
        if self.relation != Relation::Le || self.poly.total_degree() != 2 {
            return None;
        }
        let mut bounds = vec![None; n];
        let budget = (&self.rhs - self.poly.constant_term()).to_f64();
        for (e, c) in self.poly.terms() {
            let deg: u32 = e.iter().sum();
            if deg == 0 {
                continue;
            }
            let j = e.iter().position(|&k| k == 2)?;
            if deg != 2 || !c.is_positive() {
                return None;
            }
            bounds[j] = Some((budget / c.to_f64()).max(0.0).sqrt());
        }
        Some(bounds)
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        self.relation.holds(&self.poly.eval(x), &self.rhs)
    }
}

/// `max/min f(x)` subject to polynomial constraints, all variables nonnegative.
/// Polynomials are over `x1..xn` with `x1` at index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NlpProblem {
    pub sense: Sense,
    pub objective: MultiPoly,
    pub constraints: Vec<NlpConstraint>,
    pub names: Vec<String>,
}

impl NlpProblem {
    pub fn new(sense: Sense, objective: MultiPoly, constraints: Vec<NlpConstraint>) -> Self {
        let n = objective.nvars();
        for c in &constraints {
            assert_eq!(c.poly.nvars(), n, "constraint arity");
        }
        let names = (1..=n).map(|i| format!("x{i}")).collect();
        NlpProblem { sense, objective, constraints, names }
    }

    pub fn n(&self) -> usize {
        self.objective.nvars()
    }

    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.n() && x.iter().all(|v| !v.is_negative()) && self.constraints.iter().all(|c| c.holds(x))
    }

    pub fn is_feasible_f64(&self, x: &[f64], tol: f64) -> bool {
        x.iter().all(|&v| v >= -tol)
            && self.constraints.iter().all(|c| {
                let lhs = c.poly.eval_f64(x);
                let rhs = c.rhs.to_f64();
                let scale = 1.0 + rhs.abs();
                match c.relation {
                    Relation::Le => lhs <= rhs + tol * scale,
                    Relation::Ge => lhs >= rhs - tol * scale,
                    Relation::Eq => (lhs - rhs).abs() <= tol * scale,
                }
            })
    }
}

/// The polynomial system of a problem. Variable order, most significant
/// first: `x_n, ..., x_1, d, s_1, ..., s_m`.
#[derive(Debug, Clone)]
pub struct NlpSystem {
    pub n: usize,
    pub m: usize,
    pub names: Vec<String>,
    pub polys: Vec<MultiPoly>,
    /// Slack index of each constraint row, `None` for equalities.
    pub row_slack: Vec<Option<usize>>,
}

impl NlpSystem {
    pub fn nvars(&self) -> usize {
        self.n + 1 + self.m
    }

    pub fn x_index(&self, j: usize) -> usize {
        self.n - 1 - j
    }

    pub fn d_index(&self) -> usize {
        self.n
    }

    pub fn s_index(&self, k: usize) -> usize {
        self.n + 1 + k
    }

    fn embed(&self, p: &MultiPoly) -> MultiPoly {
        let nv = self.nvars();
        MultiPoly::from_terms(
            nv,
            p.terms().map(|(e, c)| {
                let mut f = vec![0; nv];
                for (j, &k) in e.iter().enumerate() {
                    f[self.x_index(j)] = k;
                }
                (f, c.clone())
            }),
        )
    }

    /// Full assignment vector from problem values, `d`, and slacks.
    pub fn point(&self, x: &[Rational], d: &Rational, s: &[Rational]) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.nvars()];
        for (j, xj) in x.iter().enumerate() {
            v[self.x_index(j)] = xj.clone();
        }
        v[self.d_index()] = d.clone();
        for (k, sk) in s.iter().enumerate() {
            v[self.s_index(k)] = sk.clone();
        }
        v
    }
}

pub fn build_nlp_system(p: &NlpProblem) -> Result<NlpSystem, NlpError> {
    let n = p.n();
    for poly in std::iter::once(&p.objective).chain(p.constraints.iter().map(|c| &c.poly)) {
        let deg = poly.total_degree();
        if deg > 2 {
            return Err(NlpError::DegreeTooHigh(deg));
        }
    }
    let mut row_slack = Vec::with_capacity(p.constraints.len());
    let mut m = 0;
    for c in &p.constraints {
        if c.relation == Relation::Eq {
            row_slack.push(None);
        } else {
            row_slack.push(Some(m));
            m += 1;
        }
    }
    let mut names: Vec<String> = (0..n).rev().map(|j| p.names[j].clone()).collect();
    names.push("d".to_string());
    names.extend((1..=m).map(|k| format!("s{k}")));
    let mut sys = NlpSystem { n, m, names, polys: Vec::new(), row_slack };
    let nv = sys.nvars();
    let obj = &sys.embed(&p.objective) - &MultiPoly::var(nv, sys.d_index());
    let mut polys = vec![obj];
    for (c, slack) in p.constraints.iter().zip(&sys.row_slack) {
        let mut q = &sys.embed(&c.poly) - &MultiPoly::constant(nv, c.rhs.clone());
        if let Some(k) = slack {
            let s = MultiPoly::var(nv, sys.s_index(*k));
            q = match c.relation {
                Relation::Le => &q + &s,
                _ => &q - &s,
            };
        }
        polys.push(q);
    }
    sys.polys = polys;
    Ok(sys)
}

/// How the optimum was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Sign rule and stationarity of `d` with recursive fixing at zero.
    Stationary,
    /// Stationary point on a face where some bounds are active.
    Boundary,
}

#[derive(Debug, Clone)]
pub struct NlpSolution {
    pub value: Rational,
    pub x: Vec<Rational>,
    pub slacks: Vec<Rational>,
    pub branch: Branch,
    /// `d` as a polynomial in the free variables after back-substitution.
    pub phi: MultiPoly,
    pub free: Vec<usize>,
}

/// `phi(z) = c0 + g.z + z^T H z / 2` over the free variables.
struct Quadratic {
    g: Vec<Rational>,
    h: Vec<Vec<Rational>>,
}

impl Quadratic {
    fn from_poly(phi: &MultiPoly, free: &[usize]) -> Self {
        let k = free.len();
        let nv = phi.nvars();
        let mut g = vec![Rational::zero(); k];
        let mut h = vec![vec![Rational::zero(); k]; k];
        let unit = |a: usize, b: Option<usize>| {
            let mut e = vec![0u32; nv];
            e[free[a]] += 1;
            if let Some(b) = b {
                e[free[b]] += 1;
            }
            e
        };
        for a in 0..k {
            g[a] = phi.coeff(&unit(a, None));
            for b in 0..k {
                let c = phi.coeff(&unit(a, Some(b)));
                h[a][b] = if a == b { c * Rational::from_int(2) } else { c };
            }
        }
        Quadratic { g, h }
    }

    /// Gradient restricted to `idx` set to zero, as `H z = -g`.
    fn stationary(&self, idx: &[usize]) -> Option<(Vec<Rational>, bool)> {
        let a: Vec<Vec<Rational>> = idx.iter().map(|&i| idx.iter().map(|&j| self.h[i][j].clone()).collect()).collect();
        let b: Vec<Rational> = idx.iter().map(|&i| -&self.g[i]).collect();
        solve_linear(&a, &b)
    }
}

/// A linear condition `a.z + b >= 0` on the free variables.
struct LinearBound {
    a: Vec<Rational>,
    b: Rational,
}

struct Reduced {
    phi: MultiPoly,
    free: Vec<usize>,
    deps: Vec<(usize, MultiPoly)>,
}

fn reduce_to_free(sys: &NlpSystem, basis: &[MultiPoly]) -> Result<Reduced, NlpError> {
    let di = sys.d_index();
    if basis.iter().any(|p| p.is_constant() && !p.is_zero()) {
        return Err(NlpError::Inconsistent);
    }
    let with_d: Vec<usize> = (0..basis.len()).filter(|&i| basis[i].contains_var(di)).collect();
    if with_d.len() != 1 {
        return Err(NlpError::UnsupportedShape(format!("{} basis elements contain d", with_d.len())));
    }
    let (c, rest) = basis[with_d[0]]
        .split_linear(di)
        .ok_or_else(|| NlpError::UnsupportedShape("d does not appear linearly".into()))?;
    let mut phi = rest.scale(&-c.recip());
    let mut deps: Vec<(usize, MultiPoly)> = Vec::new();
    for (i, g) in basis.iter().enumerate() {
        if i == with_d[0] {
            continue;
        }
        let lead = g.leading().expect("nonzero").0.iter().position(|&k| k > 0);
        let order = lead.into_iter().chain(0..sys.nvars());
        let pick = order
            .filter(|&v| v != di && !deps.iter().any(|(w, _)| *w == v))
            .find_map(|v| g.split_linear(v).map(|(c, r)| (v, r.scale(&-c.recip()))));
        match pick {
            Some(dep) => deps.push(dep),
            None => return Err(NlpError::UnsupportedShape(format!("cannot solve element {i} for one variable"))),
        }
    }
    for _ in 0..=deps.len() {
        let snapshot = deps.clone();
        for (v, e) in deps.iter_mut() {
            for (w, q) in &snapshot {
                if w != v && e.contains_var(*w) {
                    *e = e.substitute(*w, q);
                }
            }
        }
    }
    if deps.iter().any(|(_, e)| deps.iter().any(|(w, _)| e.contains_var(*w))) {
        return Err(NlpError::UnsupportedShape("cyclic dependent variables".into()));
    }
    for (w, q) in &deps {
        phi = phi.substitute(*w, q);
    }
    if phi.total_degree() > 2 {
        return Err(NlpError::UnsupportedShape("objective relation has degree above 2".into()));
    }
    let free: Vec<usize> = (0..sys.nvars()).filter(|&v| v != di && !deps.iter().any(|(w, _)| *w == v)).collect();
    Ok(Reduced { phi, free, deps })
}

impl Reduced {
    fn assignment(&self, sys: &NlpSystem, z: &[Rational]) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); sys.nvars()];
        for (&f, zi) in self.free.iter().zip(z) {
            v[f] = zi.clone();
        }
        for (w, q) in &self.deps {
            v[*w] = q.eval(&v);
        }
        v[sys.d_index()] = self.phi.eval(&v);
        v
    }

    fn feasible(&self, sys: &NlpSystem, v: &[Rational]) -> bool {
        let di = sys.d_index();
        v.iter().enumerate().all(|(i, x)| i == di || !x.is_negative())
            && sys.polys.iter().all(|p| p.eval(v).is_zero())
    }

    fn linear_bounds(&self) -> Vec<LinearBound> {
        let k = self.free.len();
        let mut out: Vec<LinearBound> = (0..k)
            .map(|i| {
                let mut a = vec![Rational::zero(); k];
                a[i] = Rational::one();
                LinearBound { a, b: Rational::zero() }
            })
            .collect();
        for (_, q) in &self.deps {
            if q.total_degree() <= 1 {
                let nv = q.nvars();
                let a = self
                    .free
                    .iter()
                    .map(|&f| {
                        let mut e = vec![0; nv];
                        e[f] = 1;
                        q.coeff(&e)
                    })
                    .collect();
                out.push(LinearBound { a, b: q.constant_term() });
            }
        }
        out
    }
}

fn improves(sense: Sense, a: &Rational, b: Option<&Rational>) -> bool {
    b.is_none_or(|b| sense.better(a, b))
}

/// Reads the optimal `d` from a reduced basis of `sys`.
pub fn optimize_parametric(
    sys: &NlpSystem,
    basis: &[MultiPoly],
    sense: Sense,
) -> Result<NlpSolution, NlpError> {
    let red = reduce_to_free(sys, basis)?;
    let k = red.free.len();
    let quad = Quadratic::from_poly(&red.phi, &red.free);
    let wrong_sign = |g: &Rational| match sense {
        Sense::Maximize => g.is_negative(),
        Sense::Minimize => g.is_positive(),
    };
    let mut best: Option<(Rational, Vec<Rational>, Branch)> = None;

    // Sign rule, stationarity, and fixing offending variables at zero.
    let mut fixed: BTreeSet<usize> = BTreeSet::new();
    let stationary = loop {
        let act: Vec<usize> = (0..k).filter(|i| !fixed.contains(i)).collect();
        let linear_only: Vec<usize> =
            act.iter().copied().filter(|&i| act.iter().all(|&j| quad.h[i][j].is_zero())).collect();
        let drop: Vec<usize> = linear_only.iter().copied().filter(|&i| wrong_sign(&quad.g[i])).collect();
        if !drop.is_empty() {
            fixed.extend(drop);
            continue;
        }
        if act.is_empty() {
            break Some(vec![Rational::zero(); k]);
        }
        match quad.stationary(&act) {
            Some((z, true)) => {
                let worst = act.iter().zip(&z).filter(|(_, v)| v.is_negative()).min_by(|a, b| a.1.cmp(b.1));
                match worst {
                    None => {
                        let mut full = vec![Rational::zero(); k];
                        for (&i, v) in act.iter().zip(z) {
                            full[i] = v;
                        }
                        break Some(full);
                    }
                    Some((&i, _)) => {
                        fixed.insert(i);
                    }
                }
            }
            _ => {
                // Singular: use each variable's own stationarity with the rest at zero.
                let own = act
                    .iter()
                    .filter(|&&i| !quad.h[i][i].is_zero())
                    .map(|&i| (i, -(&quad.g[i] / &quad.h[i][i])))
                    .filter(|(_, v)| v.is_negative())
                    .min_by(|a, b| a.1.cmp(&b.1));
                match own {
                    Some((i, _)) => {
                        fixed.insert(i);
                    }
                    None => break None,
                }
            }
        }
    };
    if let Some(z) = stationary {
        let v = red.assignment(sys, &z);
        if red.feasible(sys, &v) {
            best = Some((v[sys.d_index()].clone(), v, Branch::Stationary));
        }
    }

    // Faces of the linear bounds: stationary points with up to k bounds active.
    let bounds = red.linear_bounds();
    let mut active: Vec<usize> = Vec::new();
    let mut visit = |active: &[usize]| {
        let a: Vec<Vec<Rational>> = active.iter().map(|&r| bounds[r].a.clone()).collect();
        let b: Vec<Rational> = active.iter().map(|&r| -&bounds[r].b).collect();
        let Some((z0, dirs)) = affine_solution_space(k, &a, &b) else {
            return;
        };
        let z = if dirs.is_empty() {
            z0
        } else {
            let hz0: Vec<Rational> = quad.h.iter().map(|row| dot(row, &z0)).collect();
            let grad: Vec<Rational> = quad.g.iter().zip(&hz0).map(|(g, h)| g + h).collect();
            let hn: Vec<Vec<Rational>> =
                dirs.iter().map(|d| quad.h.iter().map(|row| dot(row, d)).collect()).collect();
            let m: Vec<Vec<Rational>> = dirs.iter().map(|di| hn.iter().map(|hd| dot(di, hd)).collect()).collect();
            let rhs: Vec<Rational> = dirs.iter().map(|d| -dot(d, &grad)).collect();
            let Some((y, true)) = solve_linear(&m, &rhs) else {
                return;
            };
            let mut z = z0;
            for (yi, d) in y.iter().zip(&dirs) {
                for (zj, dj) in z.iter_mut().zip(d) {
                    *zj += yi * dj;
                }
            }
            z
        };
        let v = red.assignment(sys, &z);
        if red.feasible(sys, &v) && improves(sense, &v[sys.d_index()], best.as_ref().map(|b| &b.0)) {
            best = Some((v[sys.d_index()].clone(), v, Branch::Boundary));
        }
    };
    subsets(bounds.len(), k, &mut active, 0, &mut visit);

    let (value, v, branch) = best.ok_or(NlpError::NoCandidate)?;
    let x = (0..sys.n).map(|j| v[sys.x_index(j)].clone()).collect();
    let slacks = (0..sys.m).map(|s| v[sys.s_index(s)].clone()).collect();
    Ok(NlpSolution { value, x, slacks, branch, phi: red.phi, free: red.free })
}

fn subsets(n: usize, cap: usize, cur: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    f(cur);
    if cur.len() == cap {
        return;
    }
    for i in start..n {
        cur.push(i);
        subsets(n, cap, cur, i + 1, f);
        cur.pop();
    }
}

/// Builds the system, computes its basis, and reads off the optimum.
pub fn solve_nlp(p: &NlpProblem) -> Result<(NlpSystem, Vec<MultiPoly>, NlpSolution), NlpError> {
    let sys = build_nlp_system(p)?;
    let basis = buchberger(&sys.polys);
    let sol = optimize_parametric(&sys, &basis, p.sense)?;
    Ok((sys, basis, sol))
}
