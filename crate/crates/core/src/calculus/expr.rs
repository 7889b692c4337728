use std::collections::BTreeMap;
use std::fmt;

use super::Scalar;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }
}

/// Expression tree over the variables `x, y, z` (indices 0..3) and named parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

const VARS: [&str; 3] = ["x", "y", "z"];

/// Parse with every non-reserved identifier treated as a parameter.
pub fn parse_expr(text: &str) -> Result<Expr> {
    Parser {
        src: text.as_bytes(),
        pos: 0,
        known: None,
    }
    .parse_all()
}

/// Parse, rejecting identifiers outside `params` (besides x, y, z, pi).
pub fn parse_expr_with(text: &str, params: &[&str]) -> Result<Expr> {
    Parser {
        src: text.as_bytes(),
        pos: 0,
        known: Some(params),
    }
    .parse_all()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    known: Option<&'a [&'a str]>,
}

impl Parser<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            offset: self.pos,
            message: message.into(),
        })
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_all(mut self) -> Result<Expr> {
        let e = self.expr()?;
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let a = self.atom()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return self.err("expected integer exponent");
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let n: u32 = match digits.parse() {
                Ok(n) => n,
                Err(_) => {
                    self.pos = start;
                    return self.err("exponent out of range");
                }
            };
            return Ok(Expr::Pow(Box::new(a), n));
        }
        Ok(a)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => self.err("unexpected character"),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos > s
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if !digits(self) {
                self.pos = save;
                return self.err("malformed exponent in number");
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
            _ => {
                self.pos = start;
                self.err("invalid number")
            }
        }
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let func = match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            _ => None,
        };
        if let Some(f) = func {
            if !self.eat(b'(') {
                return self.err(format!("expected '(' after {name}"));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return self.err("expected ')'");
            }
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        if self.peek() == Some(b'(') {
            return Err(Error::UnknownIdentifier(name.to_string()));
        }
        if name == "pi" {
            return Ok(Expr::Pi);
        }
        if let Some(i) = VARS.iter().position(|v| *v == name) {
            return Ok(Expr::Var(i));
        }
        if let Some(known) = self.known {
            if !known.contains(&name) {
                return Err(Error::UnknownIdentifier(name.to_string()));
            }
        }
        Ok(Expr::Param(name.to_string()))
    }
}

// Binding strength used by the printer; mirrors the grammar levels.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

impl Expr {
    fn write(&self, f: &mut fmt::Formatter<'_>, need: u8) -> fmt::Result {
        let paren = prec(self) < need;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(v) => write!(f, "{v}")?,
            Expr::Pi => f.write_str("pi")?,
            Expr::Var(i) => f.write_str(VARS[*i])?,
            Expr::Param(p) => f.write_str(p)?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write(f, 3)?;
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write(f, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) {
                    " + "
                } else {
                    " - "
                })?;
                b.write(f, 2)?;
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write(f, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) {
                    "*"
                } else {
                    "/"
                })?;
                b.write(f, 3)?;
            }
            Expr::Pow(a, n) => {
                a.write(f, 5)?;
                write!(f, "^{n}")?;
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(f, 0)?;
                f.write_str(")")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }

    /// Names of all parameters referenced, sorted and deduplicated.
    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(p) => out.push(p.clone()),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.collect_params(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            _ => {}
        }
    }

    /// Unsimplified symbolic partial derivative in variable `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        use Expr::*;
        let b = Box::new;
        match self {
            Num(_) | Pi | Param(_) => Num(0.0),
            Var(i) => Num(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => Neg(b(a.derivative(var))),
            Add(p, q) => Add(b(p.derivative(var)), b(q.derivative(var))),
            Sub(p, q) => Sub(b(p.derivative(var)), b(q.derivative(var))),
            Mul(p, q) => Add(
                b(Mul(b(p.derivative(var)), q.clone())),
                b(Mul(p.clone(), b(q.derivative(var)))),
            ),
            Div(p, q) => Div(
                b(Sub(
                    b(Mul(b(p.derivative(var)), q.clone())),
                    b(Mul(p.clone(), b(q.derivative(var)))),
                )),
                b(Pow(q.clone(), 2)),
            ),
            Pow(_, 0) => Num(0.0),
            Pow(a, n) => Mul(
                b(Mul(b(Num(*n as f64)), b(Pow(a.clone(), n - 1)))),
                b(a.derivative(var)),
            ),
            Call(Func::Sin, a) => Mul(b(Call(Func::Cos, a.clone())), b(a.derivative(var))),
            Call(Func::Cos, a) => Neg(b(Mul(b(Call(Func::Sin, a.clone())), b(a.derivative(var))))),
            Call(Func::Exp, a) => Mul(b(self.clone()), b(a.derivative(var))),
        }
    }

    /// Resolve parameter names against `names` (index = position).
    pub fn compile(&self, names: &[String]) -> Result<Compiled> {
        let mut ops = Vec::new();
        self.emit(names, &mut ops)?;
        Ok(Compiled { ops })
    }

    fn emit(&self, names: &[String], ops: &mut Vec<Op>) -> Result<()> {
        match self {
            Expr::Num(v) => ops.push(Op::Const(*v)),
            Expr::Pi => ops.push(Op::Const(std::f64::consts::PI)),
            Expr::Var(i) => ops.push(Op::Var(*i)),
            Expr::Param(p) => match names.iter().position(|n| n == p) {
                Some(i) => ops.push(Op::Param(i)),
                None => return Err(Error::UnboundParameter(p.clone())),
            },
            Expr::Neg(a) => {
                a.emit(names, ops)?;
                ops.push(Op::Neg);
            }
            Expr::Pow(a, n) => {
                a.emit(names, ops)?;
                ops.push(Op::Pow(*n));
            }
            Expr::Call(func, a) => {
                a.emit(names, ops)?;
                ops.push(Op::Call(*func));
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.emit(names, ops)?;
                b.emit(names, ops)?;
                ops.push(match self {
                    Expr::Add(..) => Op::Add,
                    Expr::Sub(..) => Op::Sub,
                    Expr::Mul(..) => Op::Mul,
                    _ => Op::Div,
                });
            }
        }
        Ok(())
    }

    /// Convenience evaluation at a point with named parameter values.
    pub fn eval_at<T: Scalar>(&self, vars: &[T; 3], params: &BTreeMap<String, f64>) -> Result<T> {
        let names: Vec<String> = params.keys().cloned().collect();
        let vals: Vec<T> = params.values().map(|v| vars[0].constant_like(*v)).collect();
        self.compile(&names)?.eval(vars, &vals)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Param(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(u32),
    Call(Func),
}

/// Postfix program produced by [`Expr::compile`].
#[derive(Clone, Debug, PartialEq)]
pub struct Compiled {
    ops: Vec<Op>,
}

impl Compiled {
    pub fn eval<T: Scalar>(&self, vars: &[T; 3], params: &[T]) -> Result<T> {
        let mut stack: Vec<T> = Vec::with_capacity(8);
        for op in &self.ops {
            match op {
                Op::Const(c) => stack.push(vars[0].constant_like(*c)),
                Op::Var(i) => stack.push(vars[*i].clone()),
                Op::Param(i) => stack.push(params[*i].clone()),
                Op::Neg => {
                    let a = stack.pop().unwrap();
                    stack.push(a.negate());
                }
                Op::Pow(n) => {
                    let a = stack.pop().unwrap();
                    stack.push(a.pow_int(*n));
                }
                Op::Call(f) => {
                    let a = stack.pop().unwrap();
                    stack.push(match f {
                        Func::Sin => a.sine(),
                        Func::Cos => a.cosine(),
                        Func::Exp => a.expo(),
                    });
                }
                bin => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push(match bin {
                        Op::Add => a.plus(&b),
                        Op::Sub => a.minus(&b),
                        Op::Mul => a.times(&b),
                        _ => {
                            if b.value() == 0.0 {
                                return Err(Error::DivisionByZero);
                            }
                            a.over(&b)
                        }
                    });
                }
            }
        }
        let out = stack.pop().expect("compiled program leaves one value");
        if !out.all_finite() {
            return Err(Error::NonFinite("expression evaluation".into()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::Jet2;

    fn at(e: &str, p: [f64; 3]) -> f64 {
        parse_expr(e)
            .unwrap()
            .eval_at(&p, &BTreeMap::new())
            .unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(at("-x^2", [3.0, 0.0, 0.0]), -9.0);
        assert_eq!(at("2*3+4", [0.0; 3]), 10.0);
        assert_eq!(at("8/2/2", [0.0; 3]), 2.0);
        assert_eq!(at("1-2-3", [0.0; 3]), -4.0);
        assert_eq!(at("x", [1.0, 2.0, 3.0]), 1.0);
    }

    #[test]
    fn quadratic_form_value() {
        let v = at("x^2+x*y+y^2/2", [0.2, 0.4, 0.0]);
        assert!((v - 0.2).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_offsets() {
        match parse_expr("x + * y") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            parse_expr("tan(x)"),
            Err(Error::UnknownIdentifier("tan".into()))
        );
        assert_eq!(
            parse_expr_with("eps*x", &[]),
            Err(Error::UnknownIdentifier("eps".into()))
        );
        let e = parse_expr("eps*x").unwrap();
        assert_eq!(e.compile(&[]), Err(Error::UnboundParameter("eps".into())));
        assert_eq!(
            parse_expr("1/(x-1)")
                .unwrap()
                .eval_at(&[1.0, 0.0, 0.0], &BTreeMap::new()),
            Err(Error::DivisionByZero)
        );
        assert!(matches!(
            parse_expr("exp(x)")
                .unwrap()
                .eval_at(&[1e4, 0.0, 0.0], &BTreeMap::new()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn print_round_trip() {
        for s in [
            "-x^2",
            "(x + y)*z",
            "x - (y - z)",
            "sin(2*pi*x)/(1 + y^2)",
            "-(-x)",
            "(-x)^3",
            "x*-y",
            "1.5e-7*eps",
        ] {
            let e = parse_expr(s).unwrap();
            assert_eq!(parse_expr(&e.to_string()).unwrap(), e, "{s} -> {e}");
        }
    }

    #[test]
    fn jets_of_quadratic_form() {
        let e = parse_expr("z + x^2 + x*y + y^2/2").unwrap();
        let p = [0.3, -0.7, 0.1];
        let v = [
            Jet2::variable(p[0], 0),
            Jet2::variable(p[1], 1),
            Jet2::variable(p[2], 2),
        ];
        let j = e.eval_at(&v, &BTreeMap::new()).unwrap();
        assert!((j.g[0] - (2.0 * p[0] + p[1])).abs() < 1e-15);
        assert!((j.g[1] - (p[0] + p[1])).abs() < 1e-15);
        assert_eq!(j.h, [[2.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]]);
    }

    #[test]
    fn pi_and_sine_at_zero() {
        let v = [
            Jet2::variable(0.0, 0),
            Jet2::variable(0.0, 1),
            Jet2::variable(0.0, 2),
        ];
        let none = BTreeMap::new();
        let j = parse_expr("pi").unwrap().eval_at(&v, &none).unwrap();
        assert_eq!(j.v, std::f64::consts::PI);
        assert_eq!(j.g, [0.0; 3]);
        let s = parse_expr("sin(x)").unwrap().eval_at(&v, &none).unwrap();
        assert_eq!((s.v, s.g[0], s.h[0][0]), (0.0, 1.0, 0.0));
    }

    #[test]
    fn symbolic_derivative_matches_jet() {
        let e = parse_expr("sin(x)*cos(y)/(2 + exp(z))").unwrap();
        let p = [0.4, 1.1, -0.3];
        let v = [
            Jet2::variable(p[0], 0),
            Jet2::variable(p[1], 1),
            Jet2::variable(p[2], 2),
        ];
        let none = BTreeMap::new();
        let j = e.eval_at(&v, &none).unwrap();
        for k in 0..3 {
            let d = e.derivative(k).eval_at(&p, &none).unwrap();
            assert!((d - j.g[k]).abs() < 1e-14);
        }
    }
}
