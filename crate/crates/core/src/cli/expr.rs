//! Arithmetic expressions over `x1..xn`: numbers, `+ - * / ^`, parentheses,
//! `abs(e)`, `max(e, ...)` and `min(e, ...)`. `^` binds tighter than unary
//! minus and associates to the right.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
    Max(Vec<Expr>),
    Min(Vec<Expr>),
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => {
                let e = b.eval(x);
                if e.fract() == 0.0 && e.abs() <= 64.0 {
                    a.eval(x).powi(e as i32)
                } else {
                    a.eval(x).powf(e)
                }
            }
            Expr::Abs(a) => a.eval(x).abs(),
            Expr::Max(v) => v.iter().map(|e| e.eval(x)).fold(f64::NEG_INFINITY, f64::max),
            Expr::Min(v) => v.iter().map(|e| e.eval(x)).fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<(usize, Token)>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse().map_err(|_| Error::Argument(format!("bad number '{text}' at column {}", start + 1)))?;
            out.push((start, Token::Num(v)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Token::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Token::Op(c)));
            i += 1;
        } else {
            return Err(Error::Argument(format!("unexpected '{c}' at column {}", i + 1)));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(usize::MAX, |t| t.0 + 1)
    }

    fn fail<T>(&self, what: &str) -> Result<T> {
        match self.tokens.get(self.pos) {
            Some((c, _)) => Err(Error::Argument(format!("{what} at column {}", c + 1))),
            None => Err(Error::Argument(format!("{what} at end of expression"))),
        }
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn args(&mut self) -> Result<Vec<Expr>> {
        if !self.eat('(') {
            return self.fail("expected '('");
        }
        let mut v = vec![self.expr()?];
        while self.eat(',') {
            v.push(self.expr()?);
        }
        if !self.eat(')') {
            return self.fail("expected ')'");
        }
        Ok(v)
    }

    fn atom(&mut self) -> Result<Expr> {
        let col = self.column();
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.fail("expected ')'");
                }
                Ok(e)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "abs" => {
                        let mut a = self.args()?;
                        if a.len() != 1 {
                            return Err(Error::Argument(format!("abs takes one argument (column {col})")));
                        }
                        Ok(Expr::Abs(Box::new(a.remove(0))))
                    }
                    "max" => Ok(Expr::Max(self.args()?)),
                    "min" => Ok(Expr::Min(self.args()?)),
                    _ => {
                        let idx = name
                            .strip_prefix('x')
                            .and_then(|d| d.parse::<usize>().ok())
                            .filter(|&i| (1..=self.dim).contains(&i))
                            .ok_or_else(|| {
                                Error::Argument(format!("unknown name '{name}' at column {col} (variables are x1..x{})", self.dim))
                            })?;
                        Ok(Expr::Var(idx - 1))
                    }
                }
            }
            _ => self.fail("expected a number, variable, function or '('"),
        }
    }
}

/// Parses `source` as an expression in the variables `x1..x{dim}`.
pub fn parse(source: &str, dim: usize) -> Result<Expr> {
    let mut p = Parser { tokens: tokenize(source)?, pos: 0, dim };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return p.fail("unexpected trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_functions() {
        let e = parse("x1^2 + 2*x2 - -3", 2).unwrap();
        assert_eq!(e.eval(&[3.0, 1.0]), 14.0);
        assert_eq!(parse("-x1^2", 1).unwrap().eval(&[2.0]), -4.0);
        assert_eq!(parse("2^3^2", 1).unwrap().eval(&[0.0]), 512.0);
        assert_eq!(parse("max(abs(x1), x2, 0.5) / 2", 2).unwrap().eval(&[-3.0, 1.0]), 1.5);
        assert_eq!(parse("1.5e-1 * (x1 + x1)", 1).unwrap().eval(&[1.0]), 0.3);
    }

    #[test]
    fn errors_name_the_column() {
        let msg = parse("x1 + x4", 3).unwrap_err().to_string();
        assert!(msg.contains("x4") && msg.contains("column 6"), "{msg}");
        assert!(parse("x1 +", 2).is_err());
        assert!(parse("(x1", 2).is_err());
        assert!(parse("x1 $ 2", 2).unwrap_err().to_string().contains("column 4"));
    }
}
