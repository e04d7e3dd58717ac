//! Exact rational scalars, affine forms in the parameter `d`, and parametric
//! reduced row echelon form.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
    #[error("row scale factor must be nonzero")]
    ZeroScale,
    #[error("row index {0} out of range")]
    RowOutOfRange(usize),
}

/// Arbitrary-precision fraction kept in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        Rational(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(v.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        match self.0.numer().sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn to_integer(&self) -> Option<BigInt> {
        self.is_integer().then(|| self.0.to_integer())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact binary value of a finite float.
    pub fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(Rational)
    }

    /// Bit length of the denominator.
    pub fn denom_bits(&self) -> u64 {
        self.0.denom().bits()
    }

    /// Largest value `k / 2^bits` not exceeding `self`.
    pub fn floor_dyadic(&self, bits: u32) -> Self {
        let scale = BigInt::one() << bits;
        let n = (self.0.clone() * BigRational::from_integer(scale.clone())).floor().to_integer();
        Rational(BigRational::new(n, scale))
    }

    /// Nearest value `k / 2^bits`.
    pub fn round_dyadic(&self, bits: u32) -> Self {
        let scale = BigInt::one() << bits;
        let n = (self.0.clone() * BigRational::from_integer(scale.clone())).round().to_integer();
        Rational(BigRational::new(n, scale))
    }

    pub fn pow2(exp: i32) -> Self {
        if exp >= 0 {
            Rational::from_int(BigInt::one() << exp as u32)
        } else {
            Rational::new(1, BigInt::one() << (-exp) as u32)
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self { other } else { self }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self { other } else { self }
    }

    /// Fixed-point decimal rendering with `places` digits after the point.
    pub fn to_decimal(&self, places: usize) -> String {
        let scale = BigInt::from(10u32).pow(places as u32);
        let scaled = (self.0.clone() * BigRational::from_integer(scale.clone())).round().to_integer();
        let neg = scaled.is_negative();
        let digits = scaled.abs().to_string();
        let digits = if digits.len() <= places {
            format!("{}{}", "0".repeat(places + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (int_part, frac_part) = digits.split_at(digits.len() - places);
        let sign = if neg { "-" } else { "" };
        if places == 0 {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_part}")
        }
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::from_int(v)
    }
}

impl From<i32> for Rational {
    fn from(v: i32) -> Self {
        Rational::from_int(v)
    }
}

impl From<BigInt> for Rational {
    fn from(v: BigInt) -> Self {
        Rational::from_int(v)
    }
}

impl From<BigRational> for Rational {
    fn from(v: BigRational) -> Self {
        Rational(v)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `p`, `p/q`, and decimals such as `-3.25` or `1e-3`.
impl FromStr for Rational {
    type Err = ArithError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ArithError::Parse(s.to_string());
        let t = s.trim();
        if t.is_empty() {
            return Err(err());
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| err())?;
            let q: BigInt = q.trim().parse().map_err(|_| err())?;
            if q.is_zero() {
                return Err(err());
            }
            return Ok(Rational::new(p, q));
        }
        let (mantissa, exp) = match t.find(['e', 'E']) {
            Some(i) => {
                let e: i32 = t[i + 1..].parse().map_err(|_| err())?;
                (&t[..i], e)
            }
            None => (t, 0),
        };
        let (neg, body) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut numer: BigInt = digits.parse().map_err(|_| err())?;
        if neg {
            numer = -numer;
        }
        let shift = exp - frac_part.len() as i32;
        let ten = BigInt::from(10u32);
        let v = if shift >= 0 {
            Rational::from_int(numer * ten.pow(shift as u32))
        } else {
            Rational::new(numer, ten.pow((-shift) as u32))
        };
        Ok(v)
    }
}

macro_rules! bin_op {
    ($tr:ident, $m:ident, $atr:ident, $am:ident) => {
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational($tr::$m(self.0, rhs.0))
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational($tr::$m(self.0, &rhs.0))
            }
        }
        impl $tr<Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational($tr::$m(&self.0, rhs.0))
            }
        }
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational($tr::$m(&self.0, &rhs.0))
            }
        }
        impl $atr<Rational> for Rational {
            fn $am(&mut self, rhs: Rational) {
                $atr::$am(&mut self.0, rhs.0);
            }
        }
        impl $atr<&Rational> for Rational {
            fn $am(&mut self, rhs: &Rational) {
                $atr::$am(&mut self.0, &rhs.0);
            }
        }
    };
}

bin_op!(Add, add, AddAssign, add_assign);
bin_op!(Sub, sub, SubAssign, sub_assign);
bin_op!(Mul, mul, MulAssign, mul_assign);

impl Div<Rational> for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        Rational(self.0 / rhs.0)
    }
}

impl Div<&Rational> for Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        Rational(self.0 / &rhs.0)
    }
}

impl Div<&Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        Rational(&self.0 / &rhs.0)
    }
}

impl Div<Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        Rational(&self.0 / rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

/// Shorthand for `Rational::new(p, q)` on machine integers.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(p, q)
}

/// Shorthand for an integer-valued rational.
pub fn int(p: i64) -> Rational {
    Rational::from_int(p)
}

/// Dot product of two equal-length rational vectors.
pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn gcd_bigint(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}

/// `c*d + e`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct AffineForm {
    pub dcoeff: Rational,
    pub constant: Rational,
}

impl AffineForm {
    pub fn new(dcoeff: Rational, constant: Rational) -> Self {
        AffineForm { dcoeff, constant }
    }

    pub fn constant(c: Rational) -> Self {
        AffineForm { dcoeff: Rational::zero(), constant: c }
    }

    /// The form `1*d + 0`.
    pub fn param() -> Self {
        AffineForm { dcoeff: Rational::one(), constant: Rational::zero() }
    }

    pub fn zero() -> Self {
        AffineForm::default()
    }

    pub fn is_zero(&self) -> bool {
        self.dcoeff.is_zero() && self.constant.is_zero()
    }

    pub fn eval(&self, d: &Rational) -> Rational {
        &self.dcoeff * d + &self.constant
    }

    /// Value of `d` where the form vanishes.
    pub fn root(&self) -> Option<Rational> {
        if self.dcoeff.is_zero() {
            None
        } else {
            Some(-(&self.constant / &self.dcoeff))
        }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        AffineForm { dcoeff: &self.dcoeff * k, constant: &self.constant * k }
    }

    /// `self + k * other`.
    pub fn add_scaled(&self, other: &AffineForm, k: &Rational) -> Self {
        AffineForm {
            dcoeff: &self.dcoeff + &other.dcoeff * k,
            constant: &self.constant + &other.constant * k,
        }
    }
}

impl Add for &AffineForm {
    type Output = AffineForm;
    fn add(self, rhs: &AffineForm) -> AffineForm {
        AffineForm { dcoeff: &self.dcoeff + &rhs.dcoeff, constant: &self.constant + &rhs.constant }
    }
}

impl Sub for &AffineForm {
    type Output = AffineForm;
    fn sub(self, rhs: &AffineForm) -> AffineForm {
        AffineForm { dcoeff: &self.dcoeff - &rhs.dcoeff, constant: &self.constant - &rhs.constant }
    }
}

impl Neg for &AffineForm {
    type Output = AffineForm;
    fn neg(self) -> AffineForm {
        AffineForm { dcoeff: -&self.dcoeff, constant: -&self.constant }
    }
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*d + {}", self.dcoeff, self.constant)
    }
}

impl fmt::Debug for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Elementary row operation on a [`ParamMatrix`]. Rows are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowOp {
    Swap(usize, usize),
    Scale(usize, Rational),
    /// `row[target] += k * row[source]`
    AddMultiple { target: usize, source: usize, k: Rational },
}

impl fmt::Display for RowOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowOp::Swap(i, j) => write!(f, "R{} <-> R{}", i + 1, j + 1),
            RowOp::Scale(i, k) => write!(f, "R{} <- ({})*R{}", i + 1, k, i + 1),
            RowOp::AddMultiple { target, source, k } => {
                write!(f, "R{} <- R{} + ({})*R{}", target + 1, target + 1, k, source + 1)
            }
        }
    }
}

/// Rational matrix whose last column holds affine forms in `d`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ParamMatrix {
    pub body: Vec<Vec<Rational>>,
    pub last_col: Vec<AffineForm>,
}

impl ParamMatrix {
    pub fn new(body: Vec<Vec<Rational>>, last_col: Vec<AffineForm>) -> Self {
        assert_eq!(body.len(), last_col.len(), "row count mismatch");
        if let Some(first) = body.first() {
            assert!(body.iter().all(|r| r.len() == first.len()), "ragged body");
        }
        ParamMatrix { body, last_col }
    }

    pub fn rows(&self) -> usize {
        self.body.len()
    }

    pub fn cols(&self) -> usize {
        self.body.first().map_or(0, Vec::len)
    }

    pub fn is_zero_row(&self, i: usize) -> bool {
        self.body[i].iter().all(Rational::is_zero)
    }

    /// Substitutes a value for `d`, giving a plain augmented matrix.
    pub fn substitute(&self, d: &Rational) -> Vec<Vec<Rational>> {
        self.body
            .iter()
            .zip(&self.last_col)
            .map(|(row, f)| {
                let mut r = row.clone();
                r.push(f.eval(d));
                r
            })
            .collect()
    }

    pub fn apply(&self, op: &RowOp) -> Result<ParamMatrix, ArithError> {
        let mut m = self.clone();
        m.apply_in_place(op)?;
        Ok(m)
    }

    pub fn apply_in_place(&mut self, op: &RowOp) -> Result<(), ArithError> {
        let n = self.rows();
        let check = |i: usize| if i < n { Ok(()) } else { Err(ArithError::RowOutOfRange(i)) };
        match op {
            RowOp::Swap(i, j) => {
                check(*i)?;
                check(*j)?;
                self.body.swap(*i, *j);
                self.last_col.swap(*i, *j);
            }
            RowOp::Scale(i, k) => {
                check(*i)?;
                if k.is_zero() {
                    return Err(ArithError::ZeroScale);
                }
                for v in &mut self.body[*i] {
                    *v *= k;
                }
                self.last_col[*i] = self.last_col[*i].scale(k);
            }
            RowOp::AddMultiple { target, source, k } => {
                check(*target)?;
                check(*source)?;
                if k.is_zero() {
                    return Ok(());
                }
                let src = self.body[*source].clone();
                for (v, s) in self.body[*target].iter_mut().zip(&src) {
                    if !s.is_zero() {
                        *v += s * k;
                    }
                }
                let f = self.last_col[*target].add_scaled(&self.last_col[*source], k);
                self.last_col[*target] = f;
            }
        }
        Ok(())
    }

    /// Pivot on entry `(r, c)`: clear column `c` in every other row, then scale row `r`.
    /// Returns the operations performed.
    pub fn pivot(&mut self, r: usize, c: usize) -> Vec<RowOp> {
        let p = self.body[r][c].clone();
        assert!(!p.is_zero(), "pivot on zero entry");
        let mut ops = Vec::new();
        for i in 0..self.rows() {
            if i == r || self.body[i][c].is_zero() {
                continue;
            }
            let k = -(&self.body[i][c] / &p);
            let op = RowOp::AddMultiple { target: i, source: r, k };
            self.apply_in_place(&op).expect("valid rows");
            ops.push(op);
        }
        if !p.is_one() {
            let op = RowOp::Scale(r, p.recip());
            self.apply_in_place(&op).expect("nonzero pivot");
            ops.push(op);
        }
        ops
    }

    /// Reduced row echelon form over the body columns, with pivot columns.
    pub fn rref_with_pivots(&self) -> (ParamMatrix, Vec<usize>) {
        let mut m = self.clone();
        let rows = m.rows();
        let cols = m.cols();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(p) = (r..rows).find(|&i| !m.body[i][c].is_zero()) else {
                continue;
            };
            if p != r {
                m.apply_in_place(&RowOp::Swap(p, r)).expect("in range");
            }
            m.pivot(r, c);
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rref(&self) -> ParamMatrix {
        self.rref_with_pivots().0
    }
}

impl fmt::Debug for ParamMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (row, lc) in self.body.iter().zip(&self.last_col) {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(f, "[{} | {}]", cells.join(", "), lc)?;
        }
        Ok(())
    }
}

/// In-place reduced row echelon form of a plain rational matrix, treating every
/// column as a pivot candidate. Returns the pivot columns.
pub fn rref_rational(m: &mut [Vec<Rational>]) -> Vec<usize> {
    rref_rational_cols(m, usize::MAX)
}

/// As [`rref_rational`], but pivots are only taken among the first `pivot_cols` columns.
pub fn rref_rational_cols(m: &mut [Vec<Rational>], pivot_cols: usize) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len).min(pivot_cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(p, r);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let k = row[c].clone();
            for (v, s) in row.iter_mut().zip(&pivot_row) {
                if !s.is_zero() {
                    *v -= s * &k;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Solves `A x = b` exactly. Returns `None` when inconsistent, otherwise one
/// solution (free variables set to zero) and whether it is unique.
pub fn solve_linear(a: &[Vec<Rational>], b: &[Rational]) -> Option<(Vec<Rational>, bool)> {
    let n = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref_rational_cols(&mut m, n);
    for row in m.iter().skip(pivots.len()) {
        if !row[n].is_zero() {
            return None;
        }
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = m[i][n].clone();
    }
    Some((x, pivots.len() == n))
}

/// All solutions of `A x = b` in `n` unknowns as `x0 + N y`. `None` when inconsistent.
pub fn affine_solution_space(
    n: usize,
    a: &[Vec<Rational>],
    b: &[Rational],
) -> Option<(Vec<Rational>, Vec<Vec<Rational>>)> {
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref_rational_cols(&mut m, n);
    if m.iter().skip(pivots.len()).any(|row| !row[n].is_zero()) {
        return None;
    }
    let mut x0 = vec![Rational::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        x0[c] = m[i][n].clone();
    }
    let dirs = (0..n)
        .filter(|j| !pivots.contains(j))
        .map(|f| {
            let mut v = vec![Rational::zero(); n];
            v[f] = Rational::one();
            for (i, &c) in pivots.iter().enumerate() {
                v[c] = -&m[i][f];
            }
            v
        })
        .collect();
    Some((x0, dirs))
}
