use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Cell, Column, ColumnKind, LineageEntry, Representation};

/// Arithmetic over columns and constants.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Col(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

/// Evaluation outcome for one row.
enum Value {
    Num(f64),
    DivByZero,
}

impl Expr {
    /// Parses `+ - * /`, parentheses, numeric literals and column names.
    /// Names with spaces or operators go in backticks.
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expression(format!(
                "unexpected `{}`",
                p.tokens[p.pos]
            )));
        }
        Ok(e)
    }

    /// Distinct column references.
    pub fn columns(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Col(c) => {
                out.insert(c.clone());
            }
            Expr::Neg(a) => a.collect(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    fn eval(&self, lookup: &dyn Fn(&str) -> f64) -> Value {
        use Value::*;
        let bin =
            |a: &Expr, b: &Expr, f: fn(f64, f64) -> Value| match (a.eval(lookup), b.eval(lookup)) {
                (Num(x), Num(y)) => f(x, y),
                _ => DivByZero,
            };
        match self {
            Expr::Const(v) => Num(*v),
            Expr::Col(c) => Num(lookup(c)),
            Expr::Neg(a) => match a.eval(lookup) {
                Num(x) => Num(-x),
                d => d,
            },
            Expr::Add(a, b) => bin(a, b, |x, y| Num(x + y)),
            Expr::Sub(a, b) => bin(a, b, |x, y| Num(x - y)),
            Expr::Mul(a, b) => bin(a, b, |x, y| Num(x * y)),
            Expr::Div(a, b) => bin(a, b, |x, y| if y == 0.0 { DivByZero } else { Num(x / y) }),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Col(c) => write!(f, "`{c}`"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "{v}"),
            Token::Ident(s) => f.write_str(s),
            Token::Op(c) => write!(f, "{c}"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if "+-*/()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let v = lit
                .parse::<f64>()
                .map_err(|_| Error::Expression(format!("bad number `{lit}`")))?;
            out.push(Token::Num(v));
        } else if c == '`' {
            let end = chars[i + 1..]
                .iter()
                .position(|&ch| ch == '`')
                .ok_or_else(|| Error::Expression("unterminated backtick".into()))?;
            out.push(Token::Ident(chars[i + 1..i + 1 + end].iter().collect()));
            i += end + 2;
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.')
            {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else {
            return Err(Error::Expression(format!(
                "unexpected character `{c}` at {i}"
            )));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, ops: &str) -> Option<char> {
        match self.peek() {
            Some(Token::Op(c)) if ops.contains(*c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op("+-") {
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op("*/") {
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op("-").is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Token::Ident(s)) => {
                self.pos += 1;
                Ok(Expr::Col(s))
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if self.eat_op(")").is_none() {
                    return Err(Error::Expression("missing `)`".into()));
                }
                Ok(e)
            }
            Some(t) => Err(Error::Expression(format!("unexpected `{t}`"))),
            None => Err(Error::Expression("unexpected end of expression".into())),
        }
    }
}

/// Appends `out_col` computed row-wise from `expr`. Division by zero yields a
/// missing cell and is counted as a warning.
pub fn derive(rep: &Representation, expr: &Expr, out_col: &str) -> Result<Representation> {
    let t = rep.as_table()?;
    if t.has_column(out_col) {
        return Err(Error::param(format!("column `{out_col}` already exists")));
    }
    let refs: Vec<String> = expr.columns().into_iter().collect();
    for c in &refs {
        t.numeric_column(c)?;
    }
    let names: Vec<&str> = refs.iter().map(String::as_str).collect();
    let (mut t, dropped) = t.drop_missing(&names)?;
    let idx: Vec<(String, usize)> = refs
        .iter()
        .map(|c| Ok((c.clone(), t.index_of(c)?)))
        .collect::<Result<_>>()?;
    let mut warnings = 0;
    let cells: Vec<Cell> = (0..t.n_rows())
        .map(|r| {
            let lookup = |name: &str| {
                let i = idx
                    .iter()
                    .find(|(c, _)| c == name)
                    .map(|(_, i)| *i)
                    .unwrap();
                t.columns[i].cells[r].as_f64().unwrap()
            };
            match expr.eval(&lookup) {
                Value::Num(v) => Cell::num(v),
                Value::DivByZero => {
                    warnings += 1;
                    Cell::Missing
                }
            }
        })
        .collect();
    t.push_column(Column::new(out_col, ColumnKind::Continuous, cells))?;
    let entry = LineageEntry::new("derive")
        .dropped(dropped)
        .warned(warnings);
    Ok(Representation::sample(t).with_lineage(Representation::extended(&rep.lineage, entry)))
}
