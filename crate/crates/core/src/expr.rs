//! Expressions for time- and state-dependent matrix entries and vector
//! fields.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?          right-associative
//! atom  := number | 't' | 'u' | 'x'N | func '(' expr ')' | '(' expr ')'
//! func  := sin cos tan sinh cosh tanh exp log sqrt abs
//! ```
//!
//! Angles are in radians. State variables are 1-based (`x1 .. xn`).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message} (expected {})", .expected.join(", "))]
    Syntax {
        offset: usize,
        message: String,
        expected: Vec<String>,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable `{0}` is not bound in this context")]
    UnboundVariable(String),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    U,
    /// 1-based state coordinate.
    X(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    fn apply(self, v: f64) -> Result<f64, ExprError> {
        let out = match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Exp => v.exp(),
            Func::Log => {
                if v <= 0.0 {
                    return Err(ExprError::Domain(format!("log of nonpositive value {v}")));
                }
                v.ln()
            }
            Func::Sqrt => {
                if v < 0.0 {
                    return Err(ExprError::Domain(format!("sqrt of negative value {v}")));
                }
                v.sqrt()
            }
            Func::Abs => v.abs(),
        };
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Values bound during evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalContext<'a> {
    pub t: f64,
    pub x: Option<&'a [f64]>,
    pub u: Option<f64>,
}

impl<'a> EvalContext<'a> {
    pub fn time(t: f64) -> Self {
        Self { t, x: None, u: None }
    }

    pub fn state(t: f64, x: &'a [f64], u: Option<f64>) -> Self {
        Self { t, x: Some(x), u }
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn t() -> Expr {
        Expr::Var(Var::T)
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        parse(src)
    }

    pub fn eval(&self, ctx: &EvalContext) -> Result<f64, ExprError> {
        let v = self.eval_inner(ctx)?;
        if !v.is_finite() {
            return Err(ExprError::Domain(format!("non-finite result {v}")));
        }
        Ok(v)
    }

    fn eval_inner(&self, ctx: &EvalContext) -> Result<f64, ExprError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(Var::T) => Ok(ctx.t),
            Expr::Var(Var::U) => ctx.u.ok_or_else(|| ExprError::UnboundVariable("u".into())),
            Expr::Var(Var::X(i)) => ctx
                .x
                .and_then(|x| x.get(i - 1).copied())
                .ok_or_else(|| ExprError::UnboundVariable(format!("x{i}"))),
            Expr::Neg(a) => Ok(-a.eval_inner(ctx)?),
            Expr::Call(f, a) => f.apply(a.eval_inner(ctx)?),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval_inner(ctx)?, b.eval_inner(ctx)?);
                let v = match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(ExprError::Domain("division by zero".into()));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        let v = x.powf(y);
                        if v.is_nan() {
                            return Err(ExprError::Domain(format!("{x}^{y} is undefined")));
                        }
                        v
                    }
                };
                if !v.is_finite() {
                    return Err(ExprError::Domain(format!("non-finite intermediate {v}")));
                }
                Ok(v)
            }
        }
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::Call(_, a) => a.visit(f),
            Expr::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    /// Largest state index referenced, 0 if none.
    pub fn max_state_index(&self) -> usize {
        let mut m = 0;
        self.visit(&mut |e| {
            if let Expr::Var(Var::X(i)) = e {
                m = m.max(*i);
            }
        });
        m
    }

    pub fn uses_input(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Var(Var::U)));
        found
    }

    /// No state variables and no input: a function of `t` alone.
    pub fn is_time_only(&self) -> bool {
        self.max_state_index() == 0 && !self.uses_input()
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Neg(a) => a.as_constant().map(|v| -v),
            _ => None,
        }
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized so the output reparses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "({v:?})")
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Var(Var::U) => write!(f, "u"),
            Expr::Var(Var::X(i)) => write!(f, "x{i}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
        }
    }
}

impl FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::End => "end of input".into(),
    }
}

fn syntax(offset: usize, message: impl Into<String>, expected: &[&str]) -> ExprError {
    ExprError::Syntax {
        offset,
        message: message.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| syntax(start, format!("malformed number `{text}`"), &["number"]))?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    let ch = src[start..].chars().next().unwrap();
                    return Err(syntax(
                        start,
                        format!("unexpected character `{ch}`"),
                        &["number", "identifier", "operator", "`(`", "`)`"],
                    ));
                }
            };
            i += 1;
            out.push((start, tok));
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

const ATOM_START: &[&str] = &["number", "variable", "function", "`(`", "`-`"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::bin(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::bin(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            return Ok(Expr::bin(BinOp::Pow, base, self.unary()?));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if *self.peek() != Tok::RParen {
            return Err(syntax(
                self.offset(),
                format!("unexpected {}", describe(self.peek())),
                &["`)`", "operator"],
            ));
        }
        self.bump();
        Ok(())
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let off = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(syntax(
                            self.offset(),
                            format!("function `{name}` needs an argument"),
                            &["`(`"],
                        ));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::call(f, arg));
                }
                match name.as_str() {
                    "t" => Ok(Expr::Var(Var::T)),
                    "u" => Ok(Expr::Var(Var::U)),
                    _ => match name.strip_prefix('x').map(str::parse::<usize>) {
                        Some(Ok(i)) if i >= 1 && !name[1..].starts_with('0') => {
                            Ok(Expr::Var(Var::X(i)))
                        }
                        _ => Err(ExprError::UnknownIdentifier { name, offset: off }),
                    },
                }
            }
            other => Err(syntax(off, format!("unexpected {}", describe(&other)), ATOM_START)),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(syntax(
            p.offset(),
            format!("unexpected {}", describe(p.peek())),
            &["operator", "end of input"],
        ));
    }
    Ok(e)
}

/// Parse and reject state variables and the input.
pub fn parse_time_only(src: &str) -> Result<Expr, ExprError> {
    let e = parse(src)?;
    if let Some(v) = first_non_time_var(&e) {
        return Err(ExprError::UnboundVariable(v));
    }
    Ok(e)
}

fn first_non_time_var(e: &Expr) -> Option<String> {
    let mut found = None;
    e.visit(&mut |x| {
        if found.is_none() {
            match x {
                Expr::Var(Var::U) => found = Some("u".to_string()),
                Expr::Var(Var::X(i)) => found = Some(format!("x{i}")),
                _ => {}
            }
        }
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(src: &str, t: f64) -> f64 {
        parse(src).unwrap().eval(&EvalContext::time(t)).unwrap()
    }

    #[test]
    fn grammar_shapes() {
        assert_eq!(
            parse("3/2 - cos(t)").unwrap(),
            Expr::bin(
                BinOp::Sub,
                Expr::bin(BinOp::Div, Expr::num(3.0), Expr::num(2.0)),
                Expr::call(Func::Cos, Expr::t())
            )
        );
        // ^ binds tighter than unary minus and is right-associative
        assert_eq!(at("-2^2", 0.0), -4.0);
        assert_eq!(at("2^3^2", 0.0), 512.0);
        assert_eq!(at("2^-1", 0.0), 0.5);
        assert_eq!(at("8/4/2", 0.0), 1.0);
        assert_eq!(at("1-2-3", 0.0), -4.0);
        assert_eq!(at("1.5e1 + .5", 0.0), 15.5);
    }

    #[test]
    fn evaluation_examples() {
        assert!((at("1 + sin(t)", std::f64::consts::FRAC_PI_2) - 2.0).abs() < 1e-15);
        let e = parse("-2*x1^3 + x1*u").unwrap();
        assert_eq!(e.eval(&EvalContext::state(0.0, &[1.0], Some(1.0))).unwrap(), -1.0);
        assert_eq!(at("cosh((t^2 - 0^2)/2)", 1.0), 0.5f64.cosh());
        assert_eq!(at("t", 0.0), 0.0);
        for k in 0..20 {
            let t = k as f64 * 0.37;
            let v = at("(3/2 - cos(t))*(2 + cos(t)) + (3/2 + cos(t))*(-2 + cos(t))", t);
            assert!((v + t.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        match parse("1 + * 2") {
            Err(ExprError::Syntax { offset, expected, .. }) => {
                assert_eq!(offset, 4);
                assert!(expected.contains(&"number".to_string()));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("(1 + 2"), Err(ExprError::Syntax { offset: 6, .. })));
        assert!(matches!(parse("1 2"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("sin t"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("1 $ 2"), Err(ExprError::Syntax { offset: 2, .. })));
        assert_eq!(
            parse("2*pi"),
            Err(ExprError::UnknownIdentifier { name: "pi".into(), offset: 2 })
        );
        assert!(matches!(parse("x0"), Err(ExprError::UnknownIdentifier { .. })));
        assert!(matches!(parse("x01"), Err(ExprError::UnknownIdentifier { .. })));
        let ctx = EvalContext::time(0.0);
        assert_eq!(parse("x2").unwrap().eval(&ctx), Err(ExprError::UnboundVariable("x2".into())));
        assert_eq!(parse("u").unwrap().eval(&ctx), Err(ExprError::UnboundVariable("u".into())));
        assert!(matches!(parse("1/t").unwrap().eval(&ctx), Err(ExprError::Domain(_))));
        assert!(matches!(parse("log(t)").unwrap().eval(&ctx), Err(ExprError::Domain(_))));
        assert!(matches!(parse("sqrt(t - 1)").unwrap().eval(&ctx), Err(ExprError::Domain(_))));
        assert!(matches!(parse("(-8)^(1/3)").unwrap().eval(&ctx), Err(ExprError::Domain(_))));
        assert!(matches!(parse("exp(1000)").unwrap().eval(&ctx), Err(ExprError::Domain(_))));
        assert!(matches!(parse_time_only("t + x1"), Err(ExprError::UnboundVariable(_))));
    }

    #[test]
    fn variable_queries() {
        let e = parse("x3*u + sin(x1)").unwrap();
        assert_eq!(e.max_state_index(), 3);
        assert!(e.uses_input() && !e.is_time_only());
        assert!(parse("cos(2*t)").unwrap().is_time_only());
        assert_eq!(parse("-2.5").unwrap().as_constant(), Some(-2.5));
    }

    #[test]
    fn display_reparses() {
        for src in ["-2*x1^3 + x1*u", "2^3^2", "-(t)", "1e-7*t", "((1))", "abs(-t)/3 - -2"] {
            let e = parse(src).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{src} -> {e}");
        }
    }
}
