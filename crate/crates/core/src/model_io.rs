//! Line-oriented text format for LP, IP and quadratic models.
//!
//! ```text
//! # optional comments
//! nlp                      (only for polynomial models)
//! maximize
//! obj: 3 x + 2 y
//! st
//! c1: x + y <= 4
//! c2: 2 x + y <= 5
//! int x y                  (optional)
//! end
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::exact_arith::Rational;
use crate::groebner_nlp::{MultiPoly, NlpConstraint, NlpProblem};
use crate::lp_model::{Constraint, LpProblem, Relation, Sense};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Model {
    Lp(LpProblem),
    Nlp(NlpProblem),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelFile {
    pub name: Option<String>,
    pub comments: Vec<String>,
    pub model: Model,
}

impl ModelFile {
    pub fn lp(&self) -> Option<&LpProblem> {
        match &self.model {
            Model::Lp(p) => Some(p),
            Model::Nlp(_) => None,
        }
    }

    pub fn nlp(&self) -> Option<&NlpProblem> {
        match &self.model {
            Model::Nlp(p) => Some(p),
            Model::Lp(_) => None,
        }
    }

    /// Reads a model file; the name is the file stem.
    pub fn load(path: &Path) -> Result<ModelFile, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(path.display().to_string(), e.to_string()))?;
        let mut m = parse_model(&text)?;
        m.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        Ok(m)
    }

    pub fn render(&self) -> String {
        let text = self.render_with(false);
        match parse_model(&text) {
            Ok(back) if back.names() == self.names() => text,
            _ => self.render_with(true),
        }
    }

    fn names(&self) -> &[String] {
        match &self.model {
            Model::Lp(p) => &p.names,
            Model::Nlp(p) => &p.names,
        }
    }

    /// With `declare`, the objective opens with a zero term per variable so
    /// that first-appearance order matches the variable order.
    fn render_with(&self, declare: bool) -> String {
        let mut out = String::new();
        for c in &self.comments {
            if c.is_empty() {
                out.push_str("#\n");
            } else {
                out.push_str(&format!("# {c}\n"));
            }
        }
        let with_decl = |body: String| -> String {
            if !declare {
                return body;
            }
            let zeros: Vec<String> = self.names().iter().map(|n| format!("0*{n}")).collect();
            match body.strip_prefix('-') {
                Some(rest) => format!("{} - {rest}", zeros.join(" + ")),
                None => format!("{} + {body}", zeros.join(" + ")),
            }
        };
        match &self.model {
            Model::Lp(p) => {
                out.push_str(&format!("{}\nobj: {}\nst\n", sense_word(p.sense), with_decl(linear(&p.objective, &p.names))));
                for (i, c) in p.constraints.iter().enumerate() {
                    out.push_str(&format!(
                        "{}: {} {} {}\n",
                        row_name(&c.name, i),
                        linear(&c.coeffs, &p.names),
                        c.relation.symbol(),
                        c.rhs
                    ));
                }
                let ints: Vec<&str> =
                    p.names.iter().zip(&p.integer).filter(|(_, &b)| b).map(|(n, _)| n.as_str()).collect();
                if !ints.is_empty() {
                    out.push_str(&format!("int {}\n", ints.join(" ")));
                }
            }
            Model::Nlp(p) => {
                out.push_str(&format!(
                    "nlp\n{}\nobj: {}\nst\n",
                    sense_word(p.sense),
                    with_decl(p.objective.render(&p.names))
                ));
                for (i, c) in p.constraints.iter().enumerate() {
                    out.push_str(&format!(
                        "{}: {} {} {}\n",
                        row_name(&c.name, i),
                        c.poly.render(&p.names),
                        c.relation.symbol(),
                        c.rhs
                    ));
                }
            }
        }
        out.push_str("end\n");
        out
    }
}

impl fmt::Display for ModelFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for ModelFile {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_model(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("{0}: {1}")]
    Io(String, String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

fn sense_word(s: Sense) -> &'static str {
    match s {
        Sense::Maximize => "maximize",
        Sense::Minimize => "minimize",
    }
}

fn row_name(name: &str, i: usize) -> String {
    if name.is_empty() {
        format!("c{}", i + 1)
    } else {
        name.to_string()
    }
}

fn linear(coeffs: &[Rational], names: &[String]) -> String {
    let mut out = String::new();
    for (c, name) in coeffs.iter().zip(names) {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        if out.is_empty() {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
        }
        if !mag.is_one() {
            out.push_str(&format!("{mag}*"));
        }
        out.push_str(name);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Op(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Num(s) => write!(f, "'{s}'"),
            Tok::Op(s) => write!(f, "'{s}'"),
        }
    }
}

struct Line {
    no: usize,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_col: usize,
}

fn tokenize(no: usize, src: &str) -> Result<Line, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((col, Tok::Ident(chars[s..i].iter().collect())));
        } else if c.is_ascii_digit() || c == '.' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            toks.push((col, Tok::Num(chars[s..i].iter().collect())));
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let op = match (two.as_str(), c) {
                ("<=", _) => "<=",
                (">=", _) => ">=",
                ("==", _) => "=",
                (_, '=') => "=",
                (_, '+') => "+",
                (_, '-') => "-",
                (_, '*') => "*",
                (_, '/') => "/",
                (_, '^') => "^",
                (_, ':') => ":",
                _ => {
                    return Err(ParseError {
                        line: no,
                        col,
                        expected: "a term, operator or relation".into(),
                        found: format!("'{c}'"),
                    })
                }
            };
            i += if matches!(op, "<=" | ">=") || two == "==" { 2 } else { 1 };
            toks.push((col, Tok::Op(op)));
        }
    }
    Ok(Line { no, toks, pos: 0, end_col: chars.len() + 1 })
}

impl Line {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(c, _)| *c)
    }

    fn err(&self, expected: &str) -> ParseError {
        ParseError {
            line: self.no,
            col: self.col(),
            expected: expected.to_string(),
            found: self.peek().map_or("end of line".to_string(), Tok::to_string),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.peek().cloned();
        self.pos += 1;
        t
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &'static str) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.err(&format!("'{op}'")))
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err("end of line"))
        }
    }
}

/// Sparse term list over variable ids: monomial exponents keyed by id.
type Terms = Vec<(BTreeMap<usize, u32>, Rational)>;

struct Vars {
    names: Vec<String>,
}

impl Vars {
    fn id(&mut self, name: &str) -> usize {
        match self.names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.names.push(name.to_string());
                self.names.len() - 1
            }
        }
    }
}

fn number(line: &mut Line) -> Result<Option<Rational>, ParseError> {
    let Some(Tok::Num(s)) = line.peek().cloned() else { return Ok(None) };
    let col = line.col();
    line.pos += 1;
    let mut v: Rational = s.parse().map_err(|_| ParseError {
        line: line.no,
        col,
        expected: "a number".into(),
        found: format!("'{s}'"),
    })?;
    if line.eat_op("/") {
        let col = line.col();
        match line.next() {
            Some(Tok::Num(q)) => {
                let q: Rational = q.parse().map_err(|_| ParseError {
                    line: line.no,
                    col,
                    expected: "a denominator".into(),
                    found: format!("'{q}'"),
                })?;
                if q.is_zero() {
                    return Err(ParseError { line: line.no, col, expected: "a nonzero denominator".into(), found: "'0'".into() });
                }
                v = v / q;
            }
            _ => {
                line.pos -= 1;
                return Err(line.err("a denominator"));
            }
        }
    }
    Ok(Some(v))
}

fn monomial(line: &mut Line, vars: &mut Vars) -> Result<BTreeMap<usize, u32>, ParseError> {
    let mut exps = BTreeMap::new();
    loop {
        let Some(Tok::Ident(name)) = line.peek().cloned() else { return Err(line.err("a variable")) };
        line.pos += 1;
        let mut k = 1;
        if line.eat_op("^") {
            let col = line.col();
            match line.next() {
                Some(Tok::Num(s)) if s.parse::<u32>().is_ok() => k = s.parse().unwrap(),
                _ => {
                    return Err(ParseError {
                        line: line.no,
                        col,
                        expected: "an integer exponent".into(),
                        found: line.toks.get(line.pos - 1).map_or("end of line".into(), |(_, t)| t.to_string()),
                    })
                }
            }
        }
        *exps.entry(vars.id(&name)).or_insert(0) += k;
        if !line.eat_op("*") {
            return Ok(exps);
        }
    }
}

fn expression(line: &mut Line, vars: &mut Vars) -> Result<Terms, ParseError> {
    let mut terms = Terms::new();
    let mut first = true;
    loop {
        let mut neg = false;
        if line.eat_op("-") {
            neg = true;
        } else if !line.eat_op("+") && !first {
            return Ok(terms);
        }
        first = false;
        let coef = number(line)?;
        let mono = match (coef.is_some(), line.peek()) {
            (true, Some(Tok::Op("*"))) => {
                line.pos += 1;
                monomial(line, vars)?
            }
            (_, Some(Tok::Ident(_))) => monomial(line, vars)?,
            (true, _) => BTreeMap::new(),
            (false, _) => return Err(line.err("a number or variable")),
        };
        let mut c = coef.unwrap_or_else(Rational::one);
        if neg {
            c = -c;
        }
        terms.push((mono, c));
    }
}

fn relation(line: &mut Line) -> Result<Relation, ParseError> {
    let r = match line.peek() {
        Some(Tok::Op("<=")) => Relation::Le,
        Some(Tok::Op(">=")) => Relation::Ge,
        Some(Tok::Op("=")) => Relation::Eq,
        _ => return Err(line.err("'<=', '>=' or '='")),
    };
    line.pos += 1;
    Ok(r)
}

fn signed_number(line: &mut Line) -> Result<Rational, ParseError> {
    let neg = line.eat_op("-");
    if !neg {
        line.eat_op("+");
    }
    let v = number(line)?.ok_or_else(|| line.err("a number"))?;
    Ok(if neg { -v } else { v })
}

struct RawRow {
    name: String,
    terms: Terms,
    relation: Relation,
    rhs: Rational,
    line: usize,
}

#[derive(PartialEq)]
enum Stage {
    Header,
    Objective,
    St,
    Rows,
    Ints,
    Done,
}

/// Parses the text format. Variables are numbered in order of first appearance.
pub fn parse_model(text: &str) -> Result<ModelFile, ParseError> {
    let mut comments = Vec::new();
    let mut nlp = false;
    let mut sense = None;
    let mut vars = Vars { names: Vec::new() };
    let mut obj: Option<(Terms, usize)> = None;
    let mut rows: Vec<RawRow> = Vec::new();
    let mut ints: Vec<(usize, usize, String)> = Vec::new();
    let mut stage = Stage::Header;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        last_line = no;
        let (body, comment) = match raw.find('#') {
            Some(i) => (&raw[..i], Some(&raw[i + 1..])),
            None => (raw, None),
        };
        if let Some(c) = comment {
            let c = c.strip_prefix(' ').unwrap_or(c);
            comments.push(c.trim_end().to_string());
        }
        let mut line = tokenize(no, body)?;
        if line.at_end() {
            continue;
        }
        let word = match line.peek() {
            Some(Tok::Ident(w)) => Some(w.clone()),
            _ => None,
        };
        match stage {
            Stage::Header => {
                match word.as_deref() {
                    Some("nlp") if !nlp => nlp = true,
                    Some("maximize") => sense = Some(Sense::Maximize),
                    Some("minimize") => sense = Some(Sense::Minimize),
                    _ => return Err(line.err(if nlp { "'maximize' or 'minimize'" } else { "'nlp', 'maximize' or 'minimize'" })),
                }
                line.pos += 1;
                line.expect_end()?;
                if sense.is_some() {
                    stage = Stage::Objective;
                }
            }
            Stage::Objective => {
                if word.as_deref() != Some("obj") {
                    return Err(line.err("'obj:'"));
                }
                line.pos += 1;
                line.expect_op(":")?;
                let e = expression(&mut line, &mut vars)?;
                line.expect_end()?;
                obj = Some((e, no));
                stage = Stage::St;
            }
            Stage::St => {
                if word.as_deref() != Some("st") {
                    return Err(line.err("'st'"));
                }
                line.pos += 1;
                line.expect_end()?;
                stage = Stage::Rows;
            }
            Stage::Rows | Stage::Ints => {
                let labelled = matches!(line.toks.get(1), Some((_, Tok::Op(":"))));
                match word.as_deref() {
                    Some("end") if !labelled => {
                        line.pos += 1;
                        line.expect_end()?;
                        stage = Stage::Done;
                        continue;
                    }
                    Some("int") if !labelled && !matches!(line.toks.get(1), Some((_, Tok::Op(_)))) => {
                        line.pos += 1;
                        while let Some((col, t)) = line.toks.get(line.pos).cloned() {
                            match t {
                                Tok::Ident(v) => ints.push((no, col, v)),
                                _ => return Err(line.err("a variable name")),
                            }
                            line.pos += 1;
                        }
                        stage = Stage::Ints;
                        continue;
                    }
                    _ => {}
                }
                if stage == Stage::Ints {
                    return Err(line.err("'int' or 'end'"));
                }
                let mut name = String::new();
                if labelled {
                    name = word.unwrap_or_default();
                    line.pos += 2;
                }
                let terms = expression(&mut line, &mut vars)?;
                let rel = relation(&mut line)?;
                let rhs = signed_number(&mut line)?;
                line.expect_end()?;
                rows.push(RawRow { name, terms, relation: rel, rhs, line: no });
            }
            Stage::Done => return Err(line.err("nothing after 'end'")),
        }
    }
    if stage != Stage::Done {
        let expected = match stage {
            Stage::Header => "'maximize' or 'minimize'",
            Stage::Objective => "'obj:'",
            Stage::St => "'st'",
            _ => "'end'",
        };
        return Err(ParseError { line: last_line + 1, col: 1, expected: expected.into(), found: "end of input".into() });
    }
    let sense = sense.expect("header parsed");
    let (obj, obj_line) = obj.expect("objective parsed");
    if rows.is_empty() {
        return Err(ParseError { line: obj_line + 1, col: 1, expected: "at least one constraint".into(), found: "none".into() });
    }
    let n = vars.names.len();
    if n == 0 {
        return Err(ParseError { line: obj_line, col: 1, expected: "at least one variable".into(), found: "none".into() });
    }
    let model = if nlp {
        if let Some((l, c, _)) = ints.first() {
            return Err(ParseError { line: *l, col: *c, expected: "no 'int' section in an nlp model".into(), found: "'int'".into() });
        }
        let poly = |t: &Terms| MultiPoly::from_terms(n, t.iter().map(|(m, c)| (dense(m, n), c.clone())));
        let constraints = rows
            .iter()
            .map(|r| NlpConstraint { name: r.name.clone(), ..NlpConstraint::new(poly(&r.terms), r.relation, r.rhs.clone()) })
            .collect();
        let mut p = NlpProblem::new(sense, poly(&obj), constraints);
        p.names = vars.names.clone();
        Model::Nlp(p)
    } else {
        let lin = |t: &Terms, line: usize, allow_const: bool| -> Result<(Vec<Rational>, Rational), ParseError> {
            let mut a = vec![Rational::zero(); n];
            let mut k = Rational::zero();
            for (m, c) in t {
                match m.len() {
                    0 if allow_const || c.is_zero() => k += c.clone(),
                    1 if m.values().all(|&e| e == 1) => {
                        let j = *m.keys().next().expect("one key");
                        a[j] += c.clone();
                    }
                    _ => {
                        return Err(ParseError {
                            line,
                            col: 1,
                            expected: if m.is_empty() { "no constant in a linear objective" } else { "a linear term (use 'nlp' for polynomials)" }
                                .into(),
                            found: "a nonlinear term".into(),
                        })
                    }
                }
            }
            Ok((a, k))
        };
        let (c, _) = lin(&obj, obj_line, false)?;
        let mut constraints = Vec::with_capacity(rows.len());
        for r in &rows {
            let (a, k) = lin(&r.terms, r.line, true)?;
            constraints.push(Constraint { name: r.name.clone(), ..Constraint::new(a, r.relation, &r.rhs - &k) });
        }
        let mut p = LpProblem::new(sense, c, constraints).expect("shape checked");
        p.names = vars.names.clone();
        for (l, col, v) in &ints {
            match p.names.iter().position(|x| x == v) {
                Some(j) => p.integer[j] = true,
                None => {
                    return Err(ParseError { line: *l, col: *col, expected: "a declared variable".into(), found: format!("'{v}'") })
                }
            }
        }
        Model::Lp(p)
    };
    Ok(ModelFile { name: None, comments, model })
}

fn dense(m: &BTreeMap<usize, u32>, n: usize) -> Vec<u32> {
    let mut e = vec![0; n];
    for (&j, &k) in m {
        e[j] = k;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_arith::{int, rat};

    const EX2_1: &str = "# Example\nmaximize\nobj: x + y\nst\nc1: x + 2 y <= 4\nc2: -x + y <= 1\nc3: 4 x + 2 y <= 12\nend\n";

    #[test]
    fn parses_lp() {
        let m = parse_model(EX2_1).unwrap();
        let p = m.lp().unwrap();
        assert_eq!(p.objective, vec![int(1), int(1)]);
        assert_eq!(p.names, vec!["x", "y"]);
        assert_eq!(p.constraints[1].coeffs, vec![int(-1), int(1)]);
        assert_eq!(p.constraints[2].rhs, int(12));
        assert_eq!(m.comments, vec!["Example"]);
    }

    #[test]
    fn decimal_coefficient() {
        let m = parse_model("maximize\nobj: 4 x + 3 y\nst\nx + 3.5 y <= 9\nend").unwrap();
        assert_eq!(m.lp().unwrap().constraints[0].coeffs[1], rat(7, 2));
        assert_eq!(m.lp().unwrap().constraints[0].name, "");
    }

    #[test]
    fn parses_quadratic() {
        let m = parse_model("nlp\nmaximize\nobj: -1 x1^2 + 4 x1 + 2 x2\nst\nc1: x1 + x2 <= 4\nend\n").unwrap();
        let p = m.nlp().unwrap();
        assert_eq!(p.objective.coeff(&[2, 0]), int(-1));
        assert_eq!(p.objective.coeff(&[0, 1]), int(2));
    }

    #[test]
    fn nonlinear_needs_nlp() {
        let e = parse_model("maximize\nobj: x*y\nst\nx <= 1\nend").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn error_position() {
        let e = parse_model("maximize\nobj: x + y\nst\nc1: x + y < 4\nend").unwrap_err();
        assert_eq!((e.line, e.col), (4, 11));
        let e = parse_model("maximize\nobj: x\nst\nc1: x <= 4\n").unwrap_err();
        assert_eq!(e.expected, "'end'");
    }

    #[test]
    fn render_round_trip() {
        let m = parse_model(EX2_1).unwrap();
        let text = m.render();
        assert_eq!(parse_model(&text).unwrap(), m);
        assert!(text.contains("c3: 4*x + 2*y <= 12"));
    }
}
