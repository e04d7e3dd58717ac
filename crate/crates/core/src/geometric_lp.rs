//! Interior paths for linear programs: advance along `C` to the boundary,
//! then restart from a centrally located point of the objective plane.

use thiserror::Error;

use crate::exact_arith::{dot, Rational};
use crate::lp_model::{LpProblem, Relation, Sense};
use crate::reference_oracle::interior_point;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeoError {
    #[error("no constraint limits the ray")]
    UnboundedRay,
    #[error("no usable intersection or direction on the objective plane")]
    DegenerateGeometry,
    #[error("start point is not strictly feasible")]
    InfeasibleStart,
}

/// Boundary margin, iteration cap, and minimum improvement per iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeoConfig {
    /// Fraction of the full step left unused. Zero lands exactly on the boundary.
    pub epsilon: Rational,
    pub max_iters: usize,
    pub stall_tol: Rational,
}

impl Default for GeoConfig {
    fn default() -> Self {
        GeoConfig { epsilon: Rational::pow2(-20), max_iters: 100, stall_tol: Rational::pow2(-40) }
    }
}

impl GeoConfig {
    pub fn exact() -> Self {
        GeoConfig { epsilon: Rational::zero(), ..GeoConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeoAlgorithm {
    Centroid,
    Chord,
    PerpPlanes,
    PerpEdges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerpVariant {
    Planes,
    Edges,
}

/// Rows `a.x <= b` plus `x >= 0`, with `c` oriented for maximization.
#[derive(Debug, Clone)]
struct Polytope {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    c: Vec<Rational>,
}

impl Polytope {
    fn of(p: &LpProblem) -> Self {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for row in &p.constraints {
            if row.relation != Relation::Ge {
                a.push(row.coeffs.clone());
                b.push(row.rhs.clone());
            }
            if row.relation != Relation::Le {
                a.push(row.coeffs.iter().map(|v| -v).collect());
                b.push(-&row.rhs);
            }
        }
        let c = match p.sense {
            Sense::Maximize => p.objective.clone(),
            Sense::Minimize => p.objective.iter().map(|v| -v).collect(),
        };
        Polytope { a, b, c }
    }

    fn n(&self) -> usize {
        self.c.len()
    }

    /// Constraint planes followed by the coordinate planes, as `(normal, rhs)`.
    fn planes(&self) -> Vec<(Vec<Rational>, Rational)> {
        let n = self.n();
        let mut out: Vec<(Vec<Rational>, Rational)> = self.a.iter().cloned().zip(self.b.iter().cloned()).collect();
        for k in 0..n {
            let mut e = vec![Rational::zero(); n];
            e[k] = Rational::one();
            out.push((e, Rational::zero()));
        }
        out
    }

    fn margins(&self, x: &[Rational]) -> Vec<Rational> {
        self.a.iter().zip(&self.b).map(|(a, b)| b - dot(a, x)).chain(x.iter().cloned()).collect()
    }

    fn feasible(&self, x: &[Rational], strict: bool) -> bool {
        self.margins(x).iter().all(|m| if strict { m.is_positive() } else { !m.is_negative() })
    }

    /// Largest `t >= 0` keeping `x + t*dir` feasible; `None` if unlimited.
    fn max_step(&self, x: &[Rational], dir: &[Rational], coords: bool) -> Option<Rational> {
        let mut best: Option<Rational> = None;
        let mut take = |t: Rational| {
            let t = t.max(Rational::zero());
            best = Some(match best.take() {
                Some(b) => b.min(t),
                None => t,
            });
        };
        for (a, b) in self.a.iter().zip(&self.b) {
            let rate = dot(a, dir);
            if rate.is_positive() {
                take((b - dot(a, x)) / rate);
            }
        }
        if coords {
            for (xk, dk) in x.iter().zip(dir) {
                if dk.is_negative() {
                    take(-(xk / dk));
                }
            }
        }
        best
    }
}

/// A point with every margin strictly positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteriorPoint {
    pub coords: Vec<Rational>,
    pub margin: Vec<Rational>,
}

impl InteriorPoint {
    pub fn new(p: &LpProblem, coords: Vec<Rational>) -> Result<Self, GeoError> {
        let poly = Polytope::of(p);
        if coords.len() != p.n() || !poly.feasible(&coords, true) {
            return Err(GeoError::InfeasibleStart);
        }
        let margin = poly.margins(&coords);
        Ok(InteriorPoint { coords, margin })
    }

    /// `(1, ..., 1)` when strictly feasible, otherwise a point from the oracle.
    pub fn default_for(p: &LpProblem) -> Result<Self, GeoError> {
        InteriorPoint::new(p, vec![Rational::one(); p.n()])
            .or_else(|_| InteriorPoint::new(p, interior_point(p).ok_or(GeoError::InfeasibleStart)?))
    }
}

/// Shrinks a step by `eps` and trims it to about 48 significant bits.
fn shorten(alpha: Rational, eps: &Rational) -> Rational {
    if eps.is_zero() || alpha.is_zero() {
        return alpha;
    }
    let a = alpha * (Rational::one() - eps);
    let e = a.to_f64().log2().floor() as i64;
    let bits = (48 - e).clamp(0, 4096) as u32;
    a.floor_dyadic(bits)
}

fn along(x: &[Rational], dir: &[Rational], t: &Rational) -> Vec<Rational> {
    x.iter().zip(dir).map(|(xi, di)| xi + t * di).collect()
}

fn advance(
    poly: &Polytope,
    x: &[Rational],
    dir: &[Rational],
    eps: &Rational,
    coords: bool,
) -> Result<Vec<Rational>, GeoError> {
    let alpha = poly.max_step(x, dir, coords).ok_or(GeoError::UnboundedRay)?;
    Ok(along(x, dir, &shorten(alpha, eps)))
}

/// `x + alpha' * dir` with `alpha` the first boundary hit, coordinate bounds included.
pub fn ray_advance(x: &[Rational], dir: &[Rational], p: &LpProblem, eps: &Rational) -> Result<Vec<Rational>, GeoError> {
    advance(&Polytope::of(p), x, dir, eps, true)
}

/// Orthogonal projection of `x` onto `{c.y = d, a.y = b}`; `None` when `a` is parallel to `c`.
fn project_flat(x: &[Rational], c: &[Rational], d: &Rational, a: &[Rational], b: &Rational) -> Option<Vec<Rational>> {
    let cc = dot(c, c);
    let ca = dot(c, a);
    let aa = dot(a, a);
    let det = &cc * &aa - &ca * &ca;
    if det.is_zero() {
        return None;
    }
    let r1 = d - dot(c, x);
    let r2 = b - dot(a, x);
    let l1 = (&aa * &r1 - &ca * &r2) / &det;
    let l2 = (&cc * &r2 - &ca * &r1) / &det;
    Some(x.iter().zip(c).zip(a).map(|((xi, ci), ai)| xi + &l1 * ci + &l2 * ai).collect())
}

fn foot(x: &[Rational], a: &[Rational], b: &Rational) -> Option<Vec<Rational>> {
    let aa = dot(a, a);
    if aa.is_zero() {
        return None;
    }
    let t = (b - dot(a, x)) / aa;
    Some(along(x, a, &t))
}

fn mean(points: &[Vec<Rational>]) -> Vec<Rational> {
    let k = Rational::from_int(points.len() as i64);
    let n = points[0].len();
    (0..n).map(|j| points.iter().map(|p| &p[j]).sum::<Rational>() / &k).collect()
}

fn flat_points(poly: &Polytope, x_f: &[Rational]) -> Vec<Vec<Rational>> {
    let d_f = dot(&poly.c, x_f);
    poly.planes().iter().filter_map(|(a, b)| project_flat(x_f, &poly.c, &d_f, a, b)).collect()
}

/// Mean of `pts`; with `restart`, of the distinct points after pulling each into the region.
fn settle(poly: &Polytope, x_f: &[Rational], pts: Vec<Vec<Rational>>, restart: bool) -> Result<Vec<Rational>, GeoError> {
    if pts.is_empty() {
        return Err(GeoError::DegenerateGeometry);
    }
    if !restart {
        return Ok(mean(&pts));
    }
    let mut inside: Vec<Vec<Rational>> = Vec::new();
    for p in pts {
        let q = pull_in(poly, x_f, p);
        if !inside.contains(&q) {
            inside.push(q);
        }
    }
    Ok(mean(&inside))
}

/// `p` itself if feasible, else where the segment from `x_f` to `p` leaves the region.
fn pull_in(poly: &Polytope, x_f: &[Rational], p: Vec<Rational>) -> Vec<Rational> {
    if poly.feasible(&p, false) {
        return p;
    }
    let dir: Vec<Rational> = p.iter().zip(x_f).map(|(a, b)| a - b).collect();
    match poly.max_step(x_f, &dir, true) {
        Some(t) if t < Rational::one() => along(x_f, &dir, &t),
        _ => p,
    }
}

/// Mean of the projections of `x_f` onto each plane's intersection with the
/// objective plane through `x_f`.
pub fn polygon_centroid(x_f: &[Rational], p: &LpProblem) -> Result<Vec<Rational>, GeoError> {
    let poly = Polytope::of(p);
    settle(&poly, x_f, flat_points(&poly, x_f), false)
}

/// Directions orthogonal to `c`: for each nonzero `c_i`, ones everywhere with
/// coordinate `i` solved from `c.v = 0`; then their negations.
pub fn perpendicular_directions(c: &[Rational]) -> Vec<Vec<Rational>> {
    let n = c.len();
    let mut out: Vec<Vec<Rational>> = Vec::new();
    for i in 0..n {
        if c[i].is_zero() {
            continue;
        }
        let others: Rational = (0..n).filter(|&k| k != i).map(|k| &c[k]).sum();
        let mut v = vec![Rational::one(); n];
        v[i] = -(others / &c[i]);
        out.push(v);
    }
    let neg: Vec<Vec<Rational>> = out.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
    out.extend(neg);
    let mut uniq: Vec<Vec<Rational>> = Vec::new();
    for v in out {
        if v.iter().any(|x| !x.is_zero()) && !uniq.contains(&v) {
            uniq.push(v);
        }
    }
    uniq
}

fn chord_in(poly: &Polytope, x_f: &[Rational], eps: &Rational) -> Result<Vec<Rational>, GeoError> {
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    for dir in perpendicular_directions(&poly.c) {
        // The chord is limited by the constraint planes; coordinate planes only
        // when nothing else stops it.
        let x_g = match advance(poly, x_f, &dir, eps, false) {
            Ok(x) => x,
            Err(_) => match advance(poly, x_f, &dir, eps, true) {
                Ok(x) => x,
                Err(_) => continue,
            },
        };
        let dist: Rational = x_g.iter().zip(x_f).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| dist > *bd) {
            best = Some((dist, x_g));
        }
    }
    match best {
        Some((dist, x_g)) if dist.is_positive() => {
            Ok(x_f.iter().zip(&x_g).map(|(a, b)| (a + b) / Rational::from_int(2)).collect())
        }
        _ => Err(GeoError::DegenerateGeometry),
    }
}

/// Midpoint of `x_f` and the farthest point reachable along a direction in the
/// objective plane.
pub fn chord_midpoint(x_f: &[Rational], p: &LpProblem, eps: &Rational) -> Result<Vec<Rational>, GeoError> {
    chord_in(&Polytope::of(p), x_f, eps)
}

fn perp_in(poly: &Polytope, x_f: &[Rational], variant: PerpVariant, restart: bool) -> Result<Vec<Rational>, GeoError> {
    let pts: Vec<Vec<Rational>> = match variant {
        PerpVariant::Planes if !restart => poly.planes().iter().filter_map(|(a, b)| foot(x_f, a, b)).collect(),
        PerpVariant::Planes => {
            // Each foot is carried along `c` back onto the objective plane through `x_f`.
            let d_f = dot(&poly.c, x_f);
            let cc = dot(&poly.c, &poly.c);
            poly.planes()
                .iter()
                .filter_map(|(a, b)| foot(x_f, a, b))
                .map(|m| {
                    let t = (&d_f - dot(&poly.c, &m)) / &cc;
                    along(&m, &poly.c, &t)
                })
                .collect()
        }
        PerpVariant::Edges => flat_points(poly, x_f),
    };
    settle(poly, x_f, pts, restart)
}

/// Mean of the feet of perpendiculars from `x_f` onto every plane (`Planes`)
/// or onto every plane's intersection with the objective plane (`Edges`).
pub fn perpendicular_centroid(x_f: &[Rational], p: &LpProblem, variant: PerpVariant) -> Result<Vec<Rational>, GeoError> {
    perp_in(&Polytope::of(p), x_f, variant, false)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeoStep {
    pub point: Vec<Rational>,
    pub objective: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    Stalled,
    Degenerate,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct GeoRun {
    pub trajectory: Vec<GeoStep>,
    pub stop: StopReason,
}

impl GeoRun {
    /// Last (and best) trajectory point.
    pub fn best(&self) -> &GeoStep {
        self.trajectory.last().expect("trajectory starts with the start point")
    }
}

/// Keeps a restart that sits in the middle half of the feasible chord
/// on the line through `x_f` and the candidate; otherwise takes the chord's midpoint.
fn clamp(poly: &Polytope, x_f: &[Rational], cand: Vec<Rational>, strict: bool) -> Vec<Rational> {
    let dir: Vec<Rational> = cand.iter().zip(x_f).map(|(a, b)| a - b).collect();
    if dir.iter().all(Rational::is_zero) {
        return cand;
    }
    let back: Vec<Rational> = dir.iter().map(|v| -v).collect();
    let (Some(hi), Some(lo)) = (poly.max_step(x_f, &dir, true), poly.max_step(x_f, &back, true)) else {
        return if poly.feasible(&cand, strict) { cand } else { x_f.to_vec() };
    };
    let lo = -lo;
    let width = &hi - &lo;
    let quarter = &width / Rational::from_int(4);
    let one = Rational::one();
    if poly.feasible(&cand, strict) && one >= &lo + &quarter && one <= &hi - &quarter {
        return cand;
    }
    along(x_f, &dir, &((hi + lo) / Rational::from_int(2)))
}

fn tidy(poly: &Polytope, x: Vec<Rational>, strict: bool) -> Vec<Rational> {
    if x.iter().all(|v| v.denom_bits() <= 128) {
        return x;
    }
    let rounded: Vec<Rational> = x.iter().map(|v| v.round_dyadic(96)).collect();
    if poly.feasible(&rounded, strict) {
        rounded
    } else {
        x
    }
}

/// Iterates advance and restart from `start`, recording the start and every
/// improving boundary point.
pub fn solve_geometric(
    p: &LpProblem,
    algo: GeoAlgorithm,
    start: &[Rational],
    cfg: &GeoConfig,
) -> Result<GeoRun, GeoError> {
    let poly = Polytope::of(p);
    if start.len() != p.n() || !poly.feasible(start, true) {
        return Err(GeoError::InfeasibleStart);
    }
    let strict = cfg.epsilon.is_positive();
    let eps = &cfg.epsilon;
    let value = |x: &[Rational]| dot(&p.objective, x);
    let mut trajectory = vec![GeoStep { point: start.to_vec(), objective: value(start) }];
    let mut restart = start.to_vec();
    let mut last = dot(&poly.c, start);
    for _ in 0..cfg.max_iters {
        let x_f = match advance(&poly, &restart, &poly.c, eps, true) {
            Ok(x) => x,
            Err(_) => return Ok(GeoRun { trajectory, stop: StopReason::Unbounded }),
        };
        let d_f = dot(&poly.c, &x_f);
        let gain = &d_f - &last;
        if !gain.is_positive() {
            return Ok(GeoRun { trajectory, stop: StopReason::Stalled });
        }
        trajectory.push(GeoStep { objective: value(&x_f), point: x_f.clone() });
        last = d_f.clone();
        if gain < cfg.stall_tol {
            return Ok(GeoRun { trajectory, stop: StopReason::Stalled });
        }
        let cand = match algo {
            GeoAlgorithm::Centroid => settle(&poly, &x_f, flat_points(&poly, &x_f), true),
            GeoAlgorithm::Chord => chord_in(&poly, &x_f, eps),
            GeoAlgorithm::PerpPlanes => perp_in(&poly, &x_f, PerpVariant::Planes, true),
            GeoAlgorithm::PerpEdges => perp_in(&poly, &x_f, PerpVariant::Edges, true),
        };
        let cand = match cand {
            Ok(c) => c,
            Err(_) => return Ok(GeoRun { trajectory, stop: StopReason::Degenerate }),
        };
        restart = tidy(&poly, clamp(&poly, &x_f, cand, strict), strict);
    }
    Ok(GeoRun { trajectory, stop: StopReason::MaxIters })
}

/// Strict feasibility with respect to every row and coordinate.
pub fn strictly_feasible(p: &LpProblem, x: &[Rational]) -> bool {
    Polytope::of(p).feasible(x, true)
}
