//! Coefficient expressions `θ_q(μ)`: literals, variables `mu1..muP`, the four
//! arithmetic operators, unary minus, `cos`, `sin`, `exp`, `sqrt` and
//! parentheses.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Cos,
    Sin,
    Exp,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Cos => "cos",
            Func::Sin => "sin",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        match name {
            "cos" => Some(Func::Cos),
            "sin" => Some(Func::Sin),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based parameter index; `mu1` is `Var(0)`.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn var(index: usize) -> Self {
        Expr::Var(index)
    }

    pub fn product(a: Expr, b: Expr) -> Self {
        Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b))
    }

    /// Number of parameters referenced: one more than the largest index.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn eval(&self, mu: &[f64]) -> Result<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => *mu.get(*i).ok_or_else(|| {
                Error::Evaluation(format!("mu{} referenced but only {} parameters given", i + 1, mu.len()))
            })?,
            Expr::Neg(a) => -a.eval(mu)?,
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(mu)?, b.eval(mu)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(Error::Evaluation(format!("division by zero in {self}")));
                        }
                        x / y
                    }
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(mu)?;
                match f {
                    Func::Cos => x.cos(),
                    Func::Sin => x.sin(),
                    Func::Exp => x.exp(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(Error::Evaluation(format!("sqrt of negative value {x} in {self}")));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!("{self} is not finite at {mu:?}")))
        }
    }

    /// Partial derivative with respect to parameter `var`, lightly simplified.
    pub fn derivative(&self, var: usize) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.derivative(var)),
            Bin(op, a, b) => {
                let (da, db) = (a.derivative(var), b.derivative(var));
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => add(da, db),
                    BinOp::Sub => sub(da, db),
                    BinOp::Mul => add(mul(da, b.clone()), mul(a, db)),
                    BinOp::Div => div(sub(mul(da, b.clone()), mul(a, db)), mul(b.clone(), b)),
                }
            }
            Call(f, a) => {
                let da = a.derivative(var);
                let inner = (**a).clone();
                let outer = match f {
                    Func::Cos => neg(Call(Func::Sin, Box::new(inner))),
                    Func::Sin => Call(Func::Cos, Box::new(inner)),
                    Func::Exp => Call(Func::Exp, Box::new(inner)),
                    Func::Sqrt => div(Num(0.5), Call(Func::Sqrt, Box::new(inner))),
                };
                mul(outer, da)
            }
        }
    }

    /// Evaluates at `samples` uniform points of `domain` and reports the
    /// first failure.
    pub fn probe(&self, domain: &[(f64, f64)], samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let mu: Vec<f64> =
                domain.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo }).collect();
            self.eval(&mu)?;
        }
        Ok(())
    }
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(x) if *x == v)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        b
    } else if is_num(&b, 0.0) {
        a
    } else {
        Expr::Bin(BinOp::Add, Box::new(a), Box::new(b))
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 0.0) {
        a
    } else if is_num(&a, 0.0) {
        neg(b)
    } else {
        Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b))
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&a, 1.0) {
        b
    } else if is_num(&b, 1.0) {
        a
    } else {
        Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b))
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&b, 1.0) {
        a
    } else {
        Expr::Bin(BinOp::Div, Box::new(a), Box::new(b))
    }
}

/// Fully parenthesized; numbers use the shortest round-tripping form, so
/// re-parsing the output evaluates identically.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => write!(f, "(-{:?})", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(i) => write!(f, "mu{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

pub fn parse_theta(text: &str) -> Result<Expr> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(p.pos, "unexpected trailing input", &["operator", "end of input"]));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, offset: usize, message: &str, expected: &[&str]) -> Error {
        Error::Parse {
            offset,
            message: message.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        const START: &[&str] = &["number", "mu<k>", "function", "(", "-"];
        let start = self.pos;
        match self.peek() {
            None => Err(self.error(self.pos, "unexpected end of input", START)),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_close()?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let begin = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[begin..self.pos]).unwrap_or("");
                if let Some(rest) = name.strip_prefix("mu") {
                    if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                        let k: usize =
                            rest.parse().map_err(|_| self.error(begin, "parameter index too large", &["mu<k>"]))?;
                        if k == 0 {
                            return Err(self.error(begin, "parameters are numbered from mu1", &["mu<k> with k >= 1"]));
                        }
                        return Ok(Expr::Var(k - 1));
                    }
                }
                let Some(func) = Func::lookup(name) else {
                    let what = if self.peek() == Some(b'(') { "unknown function" } else { "unknown identifier" };
                    return Err(self.error(
                        begin,
                        &format!("{what} `{name}`"),
                        &["cos", "sin", "exp", "sqrt", "mu<k>"],
                    ));
                };
                if self.peek() != Some(b'(') {
                    return Err(self.error(self.pos, &format!("`{name}` must be called"), &["("]));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() == Some(b',') {
                    return Err(self.error(begin, &format!("arity mismatch: `{name}` takes one argument"), &[")"]));
                }
                self.expect_close()?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Some(_) => Err(self.error(start.max(self.pos), "unexpected character", START)),
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        if self.peek() == Some(b')') {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(self.pos, "missing closing parenthesis", &[")", "operator"]))
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let begin = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            let st = *p;
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - st
        };
        let mut p = self.pos;
        let mut n = digits(&mut p);
        if p < s.len() && s[p] == b'.' {
            p += 1;
            n += digits(&mut p);
        }
        if n == 0 {
            return Err(self.error(begin, "malformed number", &["digit"]));
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) == 0 {
                return Err(self.error(p, "malformed exponent", &["digit"]));
            }
            p = q;
        }
        let text = std::str::from_utf8(&s[begin..p]).unwrap_or("");
        let v: f64 = text.parse().map_err(|_| self.error(begin, "malformed number", &["number"]))?;
        self.pos = p;
        Ok(Expr::Num(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ev(s: &str, mu: &[f64]) -> f64 {
        parse_theta(s).unwrap().eval(mu).unwrap()
    }

    #[test]
    fn spec_examples() {
        assert_eq!(ev("cos(mu1)", &[0.0]), 1.0);
        assert_eq!(ev("1 + mu2*mu2", &[0.0, 0.5]), 1.25);
        let v = ev("sin(mu1)*cos(mu2) - mu1/2", &[PI / 2.0, 0.0]);
        assert!((v - (1.0 - PI / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_unary() {
        assert_eq!(ev("2 - 3 - 4", &[]), -5.0);
        assert_eq!(ev("8 / 4 / 2", &[]), 1.0);
        assert_eq!(ev("-2 * -3", &[]), 6.0);
        assert_eq!(ev("1 + 2 * 3", &[]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", &[]), 9.0);
        assert_eq!(ev("1.5e1 + .5", &[]), 15.5);
        assert_eq!(ev("sqrt(exp(0))", &[]), 1.0);
    }

    #[test]
    fn unknown_function_at_offset_zero() {
        match parse_theta("co(mu1)") {
            Err(Error::Parse { offset, message, .. }) => {
                assert_eq!(offset, 0);
                assert!(message.contains("unknown function"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_theta("x"), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(parse_theta("cos(mu1, mu2)"), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(parse_theta("1 2"), Err(Error::Parse { offset: 2, .. })));
        assert!(matches!(parse_theta("(1"), Err(Error::Parse { offset: 2, .. })));
        assert!(matches!(parse_theta("mu0"), Err(Error::Parse { .. })));
        assert!(matches!(parse_theta(""), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(parse_theta("1e"), Err(Error::Parse { .. })));
        assert!(parse_theta("1/mu1").unwrap().eval(&[0.0]).is_err());
        assert!(parse_theta("sqrt(mu1)").unwrap().eval(&[-1.0]).is_err());
        assert!(parse_theta("mu3").unwrap().eval(&[1.0]).is_err());
    }

    #[test]
    fn display_round_trip() {
        for s in ["-mu1 - -2", "0.1*cos(mu2)/3 + exp(-mu1)", "1e-300 * mu1", "sqrt(2)"] {
            let e = parse_theta(s).unwrap();
            let again = parse_theta(&e.to_string()).unwrap();
            let mu = [0.3, 0.7];
            assert_eq!(e.eval(&mu).unwrap().to_bits(), again.eval(&mu).unwrap().to_bits(), "{s}");
        }
        assert_eq!(Expr::Num(-2.5).to_string(), "(-2.5)");
    }

    #[test]
    fn derivatives() {
        let e = parse_theta("sin(mu1)*mu2 + exp(mu1) / mu2 - sqrt(mu2)").unwrap();
        let mu = [0.4, 1.7];
        let h = 1e-6;
        for var in 0..2 {
            let d = e.derivative(var).eval(&mu).unwrap();
            let mut a = mu;
            let mut b = mu;
            a[var] += h;
            b[var] -= h;
            let fd = (e.eval(&a).unwrap() - e.eval(&b).unwrap()) / (2.0 * h);
            assert!((d - fd).abs() < 1e-8, "var {var}: {d} vs {fd}");
        }
        assert_eq!(parse_theta("3").unwrap().derivative(0), Expr::Num(0.0));
        assert_eq!(parse_theta("mu1").unwrap().derivative(0), Expr::Num(1.0));
    }

    #[test]
    fn arity_and_probe() {
        assert_eq!(parse_theta("mu3 + mu1").unwrap().arity(), 3);
        assert!(parse_theta("1/mu1").unwrap().probe(&[(0.0, 0.0)], 3, 1).is_err());
        assert!(parse_theta("1/mu1").unwrap().probe(&[(1.0, 2.0)], 100, 1).is_ok());
    }
}
