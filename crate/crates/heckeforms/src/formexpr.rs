//! A small expression language for forms: rational literals, the symbols
//! E2, E4, …, E2μ, J, Delta and q, the operators + − * / and ^ with integer
//! exponents, and parentheses.
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := "-" unary | power
//! power := atom ("^" int | "^" "(" int ")")?
//! atom  := integer | symbol | "(" expr ")"
//! int   := "-"? integer
//! ```

use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::Zero;
use thiserror::Error;

use crate::forms::FormSystem;
use crate::series::QSeries;

type Q = BigRational;
type S = QSeries<Q>;

/// Byte range in the source.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    fn join(self, o: Span) -> Span {
        Span {
            start: self.start.min(o.start),
            end: self.end.max(o.end),
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{message} at {span}")]
pub struct ParseError {
    pub message: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("division by a series without an invertible lead at {0}")]
    Division(Span),
    #[error("cannot raise to power {exp} at {span}: {message}")]
    Power { exp: i64, span: Span, message: String },
    #[error("symbol `{name}` unavailable at {span}: {message}")]
    Symbol { name: String, span: Span, message: String },
    #[error("series arithmetic failed at {span}: {message}")]
    Series { span: Span, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Clone, Debug)]
pub enum NodeKind {
    Literal(BigInt),
    Symbol(String),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i64),
}

/// Expression node. Equality compares structure and ignores spans.
#[derive(Clone, Debug)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        use NodeKind::*;
        match (&self.kind, &o.kind) {
            (Literal(a), Literal(b)) => a == b,
            (Symbol(a), Symbol(b)) => a == b,
            (Neg(a), Neg(b)) => a == b,
            (Binary(p, a, b), Binary(q, c, d)) => p == q && a == c && b == d,
            (Pow(a, m), Pow(b, n)) => m == n && a == b,
            _ => false,
        }
    }
}

/// Weight tag of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    Of(i64),
    Weightless,
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Of(w) => write!(f, "{w}"),
            Weight::Weightless => f.write_str("weightless"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Warning {
    pub message: String,
    pub span: Span,
}

/// A parsed expression with its inferred weight and diagnostics.
#[derive(Clone, Debug)]
pub struct FormExpr {
    pub root: Node,
    pub weight: Weight,
    pub warnings: Vec<Warning>,
    pub mu: i64,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
            continue;
        }
        if c.is_ascii_digit() {
            let mut end = i;
            while let Some(&(j, d)) = it.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                end = j + d.len_utf8();
                it.next();
            }
            let n: BigInt = src[i..end].parse().expect("digits");
            out.push((Tok::Int(n), Span { start: i, end }));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let mut end = i;
            while let Some(&(j, d)) = it.peek() {
                if !d.is_ascii_alphanumeric() {
                    break;
                }
                end = j + d.len_utf8();
                it.next();
            }
            out.push((Tok::Ident(src[i..end].to_string()), Span { start: i, end }));
            continue;
        }
        let span = Span {
            start: i,
            end: i + c.len_utf8(),
        };
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '−' => Tok::Op('-'),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => {
                return Err(ParseError {
                    message: format!("unexpected character `{c}`"),
                    span,
                })
            }
        };
        out.push((tok, span));
        it.next();
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    src_len: usize,
    mu: i64,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn span_here(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(Span {
            start: self.src_len,
            end: self.src_len,
        })
    }

    fn bump(&mut self) -> Option<(Tok, Span)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let message = if self.pos >= self.toks.len() {
            format!("{}: unexpected end of input", message.into())
        } else {
            message.into()
        };
        Err(ParseError {
            message,
            span: self.span_here(),
        })
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.bump();
            let rhs = self.term()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.bump();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            let (_, span) = self.bump().expect("peeked");
            let inner = self.unary()?;
            let span = span.join(inner.span);
            return Ok(Node {
                kind: NodeKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.bump();
            let (exp, end) = self.exponent()?;
            let span = Span {
                start: base.span.start,
                end,
            };
            if let Some(Tok::Op('^')) = self.peek() {
                return self.error("chained `^` needs parentheses");
            }
            return Ok(Node {
                kind: NodeKind::Pow(Box::new(base), exp),
                span,
            });
        }
        Ok(base)
    }

    fn signed_int(&mut self) -> Result<(i64, usize), ParseError> {
        let neg = matches!(self.peek(), Some(Tok::Op('-')));
        if neg {
            self.bump();
        }
        match self.bump() {
            Some((Tok::Int(n), span)) => {
                let n: i64 = match i64::try_from(&n) {
                    Ok(v) => v,
                    Err(_) => {
                        return Err(ParseError {
                            message: "exponent too large".into(),
                            span,
                        })
                    }
                };
                Ok((if neg { -n } else { n }, span.end))
            }
            _ => {
                self.pos -= 1;
                self.error("expected an integer exponent")
            }
        }
    }

    fn exponent(&mut self) -> Result<(i64, usize), ParseError> {
        if let Some(Tok::LParen) = self.peek() {
            self.bump();
            let (n, _) = self.signed_int()?;
            match self.bump() {
                Some((Tok::RParen, span)) => Ok((n, span.end)),
                _ => {
                    self.pos -= 1;
                    self.error("expected `)`")
                }
            }
        } else {
            self.signed_int()
        }
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.bump() {
            Some((Tok::Int(n), span)) => Ok(Node {
                kind: NodeKind::Literal(n),
                span,
            }),
            Some((Tok::Ident(name), span)) => {
                if symbol_weight(&name, self.mu).is_none() {
                    return Err(ParseError {
                        message: format!("unknown symbol `{name}` for μ = {}", self.mu),
                        span,
                    });
                }
                Ok(Node {
                    kind: NodeKind::Symbol(name),
                    span,
                })
            }
            Some((Tok::LParen, open)) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some((Tok::RParen, close)) => Ok(Node {
                        kind: inner.kind,
                        span: open.join(close),
                    }),
                    _ => {
                        self.pos -= 1;
                        self.error("expected `)`")
                    }
                }
            }
            _ => {
                self.pos -= 1;
                self.error("expected a number, symbol or `(`")
            }
        }
    }
}

fn binary(op: BinOp, lhs: Node, rhs: Node) -> Node {
    let span = lhs.span.join(rhs.span);
    Node {
        kind: NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)),
        span,
    }
}

/// Weight of a symbol for the given μ, or `None` if it is not defined there.
pub fn symbol_weight(name: &str, mu: i64) -> Option<i64> {
    match name {
        "J" | "q" => Some(0),
        "Delta" => Some(2 * num_integer::lcm(2, mu)),
        _ => {
            let w: i64 = name.strip_prefix('E')?.parse().ok()?;
            (w >= 2 && w % 2 == 0 && w <= 2 * mu && !name[1..].starts_with('0')).then_some(w)
        }
    }
}

fn infer(node: &Node, mu: i64, warnings: &mut Vec<Warning>) -> Weight {
    use Weight::*;
    match &node.kind {
        NodeKind::Literal(_) => Of(0),
        NodeKind::Symbol(s) => symbol_weight(s, mu).map_or(Weightless, Of),
        NodeKind::Neg(a) => infer(a, mu, warnings),
        NodeKind::Pow(a, n) => match infer(a, mu, warnings) {
            Of(w) => Of(w * n),
            Weightless => Weightless,
        },
        NodeKind::Binary(op, a, b) => {
            let (x, y) = (infer(a, mu, warnings), infer(b, mu, warnings));
            match (op, x, y) {
                (_, Weightless, _) | (_, _, Weightless) => Weightless,
                (BinOp::Mul, Of(p), Of(q)) => Of(p + q),
                (BinOp::Div, Of(p), Of(q)) => Of(p - q),
                (_, Of(p), Of(q)) if p == q => Of(p),
                (_, Of(p), Of(q)) => {
                    warnings.push(Warning {
                        message: format!("adding weight {p} to weight {q}"),
                        span: node.span,
                    });
                    Weightless
                }
            }
        }
    }
}

/// Parses `src`, checking symbols against μ and inferring the weight.
pub fn parse(src: &str, mu: i64) -> Result<FormExpr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        src_len: src.len(),
        mu,
    };
    let root = p.expr()?;
    if p.pos < p.toks.len() {
        return p.error("unexpected token");
    }
    let mut warnings = Vec::new();
    let weight = infer(&root, mu, &mut warnings);
    Ok(FormExpr {
        root,
        weight,
        warnings,
        mu,
    })
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // Binding strength of each node; a child weaker than its slot needs parentheses.
    fn strength(n: &Node) -> u8 {
        match &n.kind {
            NodeKind::Literal(_) | NodeKind::Symbol(_) => 5,
            NodeKind::Pow(..) => 4,
            NodeKind::Neg(_) => 3,
            NodeKind::Binary(op, ..) => op.precedence(),
        }
    }
    fn wrapped(n: &Node, need: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if strength(n) < need {
            f.write_str("(")?;
            write_node(n, f)?;
            f.write_str(")")
        } else {
            write_node(n, f)
        }
    }
    match &n.kind {
        NodeKind::Literal(v) => write!(f, "{v}"),
        NodeKind::Symbol(s) => f.write_str(s),
        NodeKind::Neg(a) => {
            f.write_str("-")?;
            wrapped(a, 3, f)
        }
        NodeKind::Pow(a, e) => {
            wrapped(a, 5, f)?;
            if *e < 0 {
                write!(f, "^({e})")
            } else {
                write!(f, "^{e}")
            }
        }
        NodeKind::Binary(op, a, b) => {
            let p = op.precedence();
            wrapped(a, p, f)?;
            write!(f, " {} ", op.symbol())?;
            wrapped(b, p + 1, f)
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(self, f)
    }
}

impl fmt::Display for FormExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

/// Exact q-series of the expression, truncated at absolute order `n_terms`.
pub fn eval_series(e: &FormExpr, fs: &FormSystem, n_terms: usize) -> Result<S, EvalError> {
    let out = eval_node(&e.root, fs, n_terms)?;
    Ok(out.truncate(Rational64::from_integer(n_terms as i64)))
}

fn series_err(span: Span) -> impl Fn(crate::series::SeriesError) -> EvalError {
    move |err| EvalError::Series {
        span,
        message: err.to_string(),
    }
}

fn eval_node(n: &Node, fs: &FormSystem, len: usize) -> Result<S, EvalError> {
    Ok(match &n.kind {
        NodeKind::Literal(v) => S::constant(Q::from_integer(v.clone()), len),
        NodeKind::Symbol(name) => {
            let s = if name == "q" {
                S::q(len)
            } else {
                fs.symbol(name).map_err(|err| EvalError::Symbol {
                    name: name.clone(),
                    span: n.span,
                    message: err.to_string(),
                })?
            };
            s.truncate(Rational64::from_integer(len as i64))
        }
        NodeKind::Neg(a) => -eval_node(a, fs, len)?,
        NodeKind::Pow(a, e) => {
            let base = eval_node(a, fs, len)?;
            if *e < 0 && base.is_zero() {
                return Err(EvalError::Division(n.span));
            }
            base.pow_int(*e).map_err(|err| EvalError::Power {
                exp: *e,
                span: n.span,
                message: err.to_string(),
            })?
        }
        NodeKind::Binary(op, a, b) => {
            let x = eval_node(a, fs, len)?;
            let y = eval_node(b, fs, len)?;
            match op {
                BinOp::Add => x.try_add(&y).map_err(series_err(n.span))?,
                BinOp::Sub => x.try_sub(&y).map_err(series_err(n.span))?,
                BinOp::Mul => x.mul_series(&y),
                BinOp::Div => {
                    if y.is_zero() || y.lead_coeff().is_some_and(|c| c.is_zero()) {
                        return Err(EvalError::Division(b.span));
                    }
                    x.try_div(&y).map_err(|_| EvalError::Division(b.span))?
                }
            }
        }
    })
}
