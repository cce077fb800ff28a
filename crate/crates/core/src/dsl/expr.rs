//! Arithmetic expressions over reals.
//!
//! Grammar, loosest to tightest:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | ident | ident '(' sum ')' | '(' sum ')'
//! ```
//!
//! So `-2^2 = -4`, `-a*b = (-a)*b` and `2^3^2 = 2^9`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        /// 0-based character offset into the source.
        offset: usize,
        message: String,
    },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Asinh,
    Exp,
    Log,
    Abs,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Asinh,
        Func::Exp,
        Func::Log,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Asinh => "asinh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Result<f64, ExprError> {
        let v = self.apply_raw(x)?;
        if v.is_nan() {
            return Err(ExprError::Domain(format!("{}({x})", self.name())));
        }
        Ok(v)
    }

    fn apply_raw(self, x: f64) -> Result<f64, ExprError> {
        match self {
            Func::Sqrt if x < 0.0 => Err(ExprError::Domain(format!("sqrt({x})"))),
            Func::Log if x <= 0.0 => Err(ExprError::Domain(format!("log({x})"))),
            Func::Sqrt => Ok(x.sqrt()),
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Sinh => Ok(x.sinh()),
            Func::Cosh => Ok(x.cosh()),
            Func::Asinh => Ok(x.asinh()),
            Func::Exp => Ok(x.exp()),
            Func::Log => Ok(x.ln()),
            Func::Abs => Ok(x.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn apply(self, a: f64, b: f64) -> Result<f64, ExprError> {
        let v = match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => {
                if b == 0.0 {
                    return Err(ExprError::Domain(format!("{a} / 0")));
                }
                a / b
            }
            BinOp::Pow => a.powf(b),
        };
        if v.is_nan() {
            return Err(ExprError::Domain(format!("{a} {} {b}", self.symbol())));
        }
        Ok(v)
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let tokens = lex(src)?;
        let mut p = Parser {
            src,
            tokens,
            pos: 0,
        };
        let e = p.sum()?;
        match p.peek() {
            None => Ok(e),
            Some(t) => Err(p.error_at(t.offset, format!("unexpected {}", t.kind))),
        }
    }

    /// Names of all variables referenced.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => out.push(v),
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn eval(&self, bindings: &HashMap<String, f64>) -> Result<f64, ExprError> {
        self.eval_with(&|name| bindings.get(name).copied())
    }

    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, ExprError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(name) => lookup(name).ok_or_else(|| ExprError::Unbound(name.clone())),
            Expr::Neg(e) => Ok(-e.eval_with(lookup)?),
            Expr::Bin(op, a, b) => op.apply(a.eval_with(lookup)?, b.eval_with(lookup)?),
            Expr::Call(f, e) => f.apply(e.eval_with(lookup)?),
        }
    }

    /// Resolve variable names to slots for repeated evaluation.
    pub fn compile(&self, slot_of: &dyn Fn(&str) -> Option<usize>) -> Result<Compiled, ExprError> {
        Ok(Compiled(self.compile_node(slot_of)?))
    }

    fn compile_node(&self, slot_of: &dyn Fn(&str) -> Option<usize>) -> Result<Node, ExprError> {
        Ok(match self {
            Expr::Num(v) => Node::Num(*v),
            Expr::Var(name) => {
                Node::Slot(slot_of(name).ok_or_else(|| ExprError::UnknownIdentifier(name.clone()))?)
            }
            Expr::Neg(e) => Node::Neg(Box::new(e.compile_node(slot_of)?)),
            Expr::Bin(op, a, b) => Node::Bin(
                *op,
                Box::new(a.compile_node(slot_of)?),
                Box::new(b.compile_node(slot_of)?),
            ),
            Expr::Call(f, e) => Node::Call(*f, Box::new(e.compile_node(slot_of)?)),
        })
    }

    /// Binding strength used by the printer; higher binds tighter.
    fn level(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }
}

/// `eval_expr(e, bindings)`.
pub fn eval_expr(e: &Expr, bindings: &HashMap<String, f64>) -> Result<f64, ExprError> {
    e.eval(bindings)
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min_level: u8) -> fmt::Result {
    if e.level() >= min_level {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

/// Prints with the minimum parentheses needed to reparse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(f, "({v:?})")
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Neg(e) => {
                write!(f, "-")?;
                write_operand(f, e, 3)
            }
            Expr::Bin(op, a, b) => {
                let (left_min, right_min) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 3),
                };
                write_operand(f, a, left_min)?;
                write!(f, "{}", op.symbol())?;
                write_operand(f, b, right_min)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Slot(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// An expression with variables resolved to indices into a value slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled(Node);

impl Compiled {
    pub fn eval(&self, slots: &[f64]) -> Result<f64, ExprError> {
        fn go(n: &Node, slots: &[f64]) -> Result<f64, ExprError> {
            match n {
                Node::Num(v) => Ok(*v),
                Node::Slot(i) => Ok(slots[*i]),
                Node::Neg(e) => Ok(-go(e, slots)?),
                Node::Bin(op, a, b) => op.apply(go(a, slots)?, go(b, slots)?),
                Node::Call(f, e) => f.apply(go(e, slots)?),
            }
        }
        go(&self.0, slots)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Num(v) => write!(f, "number {v}"),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Op(c) => write!(f, "`{c}`"),
            TokenKind::LParen => write!(f, "`(`"),
            TokenKind::RParen => write!(f, "`)`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for c in src.chars().take(offset) {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn syntax(src: &str, offset: usize, message: String) -> ExprError {
    let (line, column) = line_col(src, offset);
    ExprError::Syntax {
        line,
        column,
        offset,
        message,
    }
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| syntax(src, start, format!("malformed number `{text}`")))?;
            TokenKind::Num(v)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            TokenKind::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => TokenKind::Op(c),
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                _ => return Err(syntax(src, start, format!("unexpected character `{c}`"))),
            }
        };
        tokens.push(Token {
            kind,
            offset: start,
        });
    }
    Ok(tokens)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn end_offset(&self) -> usize {
        self.src.chars().count()
    }

    fn error_at(&self, offset: usize, message: String) -> ExprError {
        syntax(self.src, offset, message)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Op(c),
                ..
            }) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self, open_offset: usize) -> Result<(), ExprError> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::RParen,
                ..
            }) => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error_at(t.offset, format!("expected `)`, found {}", t.kind))),
            None => Err(self.error_at(
                self.end_offset(),
                format!("unclosed `(` opened at offset {open_offset}"),
            )),
        }
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_at(self.end_offset(), "expected operand, found end of input".into()));
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Num(v) => Ok(Expr::Num(v)),
            TokenKind::LParen => {
                let e = self.sum()?;
                self.expect_rparen(tok.offset)?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                let is_call = matches!(
                    self.peek(),
                    Some(Token {
                        kind: TokenKind::LParen,
                        ..
                    })
                );
                if !is_call {
                    return Ok(Expr::Var(name));
                }
                let func = Func::from_name(&name).ok_or_else(|| {
                    self.error_at(tok.offset, format!("unknown function `{name}`"))
                })?;
                let open = self.peek().map(|t| t.offset).unwrap_or(tok.offset);
                self.pos += 1;
                let arg = self.sum()?;
                self.expect_rparen(open)?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            other => Err(self.error_at(tok.offset, format!("expected operand, found {other}"))),
        }
    }
}
