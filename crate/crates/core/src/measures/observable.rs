//! Observables: named built-ins and a small expression format.
//!
//! Expressions are evaluated over the complex numbers on the unit
//! representative `z0, ..., zk` and the real part of the result is used.
//! Only phase-invariant expressions (ratios `zi/zj`, moduli) are meaningful
//! on projective space.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'z' digits | ident '(' [expr (',' expr)*] ')' | '(' expr ')'
//! ```
//!
//! Functions: `re im abs arg conj log exp sqrt cos sin` (one argument),
//! `step(x)` (1 where `re x > 0`), `bump(x, y, cx, cy, r)` (smooth bump of
//! radius `r` around `(cx, cy)` in the real plane) and `logdist()`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::maps::RationalMap;
use crate::numeric::Precision;
use crate::poly::CompiledVector;
use crate::potentials::quasi_potential_with;

#[derive(Clone, Debug, PartialEq)]
enum Expr {
    Num(f64),
    Coord(usize),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

const UNARY: &[&str] = &["re", "im", "abs", "arg", "conj", "log", "exp", "sqrt", "cos", "sin", "step"];

/// Named observables and their expression forms.
pub const BUILTINS: &[(&str, &str)] = &[
    ("one", "1"),
    ("hemisphere", "step(abs(z0) - abs(z1))"),
    ("log_alg_dist", "logdist()"),
    ("cos_arg", "cos(arg(z1/z0))"),
    ("sin_arg", "sin(arg(z1/z0))"),
    ("log_modulus", "log(abs(z1/z0))"),
];

/// A parsed observable, bound to a map when it uses `logdist`.
#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    expr: Expr,
    dist: Option<DistProxy>,
}

#[derive(Clone, Debug)]
struct DistProxy {
    cv: CompiledVector<f64>,
    holomorphic: bool,
}

impl Observable {
    /// Parses a built-in name or an expression. `map` is required for
    /// `logdist`, which is `u/2` for `map` and `0` for holomorphic maps.
    pub fn parse(text: &str, map: Option<&RationalMap>) -> Result<Observable> {
        let src = BUILTINS.iter().find(|(n, _)| *n == text.trim()).map_or(text, |(_, e)| *e);
        let mut p = Parser { s: src.as_bytes(), i: 0 };
        let expr = p.expr()?;
        p.ws();
        if p.i != p.s.len() {
            return Err(p.err("trailing input"));
        }
        let dist = if uses_logdist(&expr) {
            let f = map.ok_or_else(|| Error::invalid("logdist() needs a map"))?;
            Some(DistProxy {
                cv: f.lift().compile(Precision::DOUBLE),
                holomorphic: f.is_holomorphic(),
            })
        } else {
            None
        };
        Ok(Observable {
            name: text.trim().to_string(),
            expr,
            dist,
        })
    }

    /// Highest coordinate index referenced.
    pub fn max_coord(&self) -> Option<usize> {
        max_coord(&self.expr)
    }

    pub fn eval(&self, z: &[Complex64]) -> f64 {
        eval(&self.expr, z, self.dist.as_ref()).re
    }

    /// Sup of `|obs|` over the given points.
    pub fn sup_abs(&self, pts: &[Vec<Complex64>]) -> f64 {
        pts.iter().map(|p| self.eval(p).abs()).fold(0.0, f64::max)
    }
}

fn uses_logdist(e: &Expr) -> bool {
    match e {
        Expr::Call(n, args) => n == "logdist" || args.iter().any(uses_logdist),
        Expr::Neg(a) => uses_logdist(a),
        Expr::Bin(_, a, b) => uses_logdist(a) || uses_logdist(b),
        _ => false,
    }
}

fn max_coord(e: &Expr) -> Option<usize> {
    match e {
        Expr::Coord(i) => Some(*i),
        Expr::Neg(a) => max_coord(a),
        Expr::Bin(_, a, b) => max_coord(a).max(max_coord(b)),
        Expr::Call(_, args) => args.iter().filter_map(max_coord).max(),
        Expr::Num(_) => None,
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn eval(e: &Expr, z: &[Complex64], dist: Option<&DistProxy>) -> Complex64 {
    match e {
        Expr::Num(x) => c(*x),
        Expr::Coord(i) => z.get(*i).copied().unwrap_or(c(f64::NAN)),
        Expr::Neg(a) => -eval(a, z, dist),
        Expr::Bin(op, a, b) => {
            let (x, y) = (eval(a, z, dist), eval(b, z, dist));
            match op {
                '+' => x + y,
                '-' => x - y,
                '*' => x * y,
                '/' => x / y,
                _ => {
                    if y.im == 0.0 {
                        x.powf(y.re)
                    } else {
                        x.powc(y)
                    }
                }
            }
        }
        Expr::Call(name, args) => {
            let v: Vec<Complex64> = args.iter().map(|a| eval(a, z, dist)).collect();
            match name.as_str() {
                "re" => c(v[0].re),
                "im" => c(v[0].im),
                "abs" => c(v[0].norm()),
                "arg" => c(v[0].arg()),
                "conj" => v[0].conj(),
                "log" => {
                    if v[0].norm() == 0.0 {
                        c(f64::NEG_INFINITY)
                    } else {
                        v[0].ln()
                    }
                }
                "exp" => v[0].exp(),
                "sqrt" => v[0].sqrt(),
                "cos" => v[0].cos(),
                "sin" => v[0].sin(),
                "step" => c(if v[0].re > 0.0 { 1.0 } else { 0.0 }),
                "bump" => {
                    let (x, y, cx, cy, r) = (v[0].re, v[1].re, v[2].re, v[3].re, v[4].re);
                    let t = ((x - cx).powi(2) + (y - cy).powi(2)) / (r * r);
                    c(if t < 1.0 { (1.0 - 1.0 / (1.0 - t)).exp() } else { 0.0 })
                }
                "logdist" => {
                    let d = dist.expect("bound at parse time");
                    c(if d.holomorphic { 0.0 } else { quasi_potential_with(&d.cv, z) / 2.0 })
                }
                _ => unreachable!("checked at parse time"),
            }
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::invalid(format!("observable: {msg} at offset {}", self.i))
    }

    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn eat(&mut self, ch: u8) -> bool {
        if self.peek() == Some(ch) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => '+',
                Some(b'-') => '-',
                _ => return Ok(lhs),
            };
            self.i += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => '*',
                Some(b'/') => '/',
                _ => return Ok(lhs),
            };
            self.i += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(Expr::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.i += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(ch) if ch.is_ascii_digit() || ch == b'.' => {
                let start = self.i;
                while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || b".eE".contains(&self.s[self.i])) {
                    // Exponent sign.
                    if b"eE".contains(&self.s[self.i]) && self.i + 1 < self.s.len() && b"+-".contains(&self.s[self.i + 1]) {
                        self.i += 1;
                    }
                    self.i += 1;
                }
                let text = std::str::from_utf8(&self.s[start..self.i]).expect("ascii");
                text.parse::<f64>().map(Expr::Num).map_err(|_| self.err("bad number"))
            }
            Some(ch) if ch.is_ascii_alphabetic() => {
                let start = self.i;
                while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || self.s[self.i] == b'_') {
                    self.i += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.i]).expect("ascii").to_string();
                if let Some(idx) = name.strip_prefix('z').filter(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit())) {
                    return Ok(Expr::Coord(idx.parse().map_err(|_| self.err("bad coordinate"))?));
                }
                if name == "pi" {
                    return Ok(Expr::Num(std::f64::consts::PI));
                }
                let arity = match name.as_str() {
                    n if UNARY.contains(&n) => 1,
                    "bump" => 5,
                    "logdist" => 0,
                    _ => return Err(self.err(&format!("unknown function '{name}'"))),
                };
                if !self.eat(b'(') {
                    return Err(self.err("expected '('"));
                }
                let mut args = Vec::new();
                if !self.eat(b')') {
                    loop {
                        args.push(self.expr()?);
                        if self.eat(b')') {
                            break;
                        }
                        if !self.eat(b',') {
                            return Err(self.err("expected ',' or ')'"));
                        }
                    }
                }
                if args.len() != arity {
                    return Err(self.err(&format!("{name} takes {arity} arguments")));
                }
                Ok(Expr::Call(name, args))
            }
            _ => Err(self.err("unexpected input")),
        }
    }
}
