//! Closed expression language for conformal factors.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'pi' | 'x1' | 'x2' | func '(' expr ')' | '(' expr ')'
//! func   := 'sin' | 'cos' | 'exp'
//! ```

use std::fmt;

use thiserror::Error;

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Exp,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    X1,
    X2,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Node::Num(c) => *c,
            Node::X1 => x1,
            Node::X2 => x2,
            Node::Neg(a) => -a.eval(x1, x2),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(x1, x2), b.eval(x1, x2));
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
            Node::Call(f, a) => {
                let a = a.eval(x1, x2);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                }
            }
        }
    }
}

/// A parsed scalar function of `(x1, x2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Self {
            source: src.to_string(),
            root,
        })
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.root.eval(x1, x2)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl Node {
    // fully parenthesized source with `x -> x + shift`
    fn write(&self, out: &mut String, shift: (f64, f64)) {
        match self {
            Node::Num(c) => out.push_str(&format!("{c:?}")),
            Node::X1 if shift.0 == 0.0 => out.push_str("x1"),
            Node::X2 if shift.1 == 0.0 => out.push_str("x2"),
            Node::X1 => out.push_str(&format!("(x1+{:?})", shift.0)),
            Node::X2 => out.push_str(&format!("(x2+{:?})", shift.1)),
            Node::Neg(a) => {
                out.push_str("(-");
                a.write(out, shift);
                out.push(')');
            }
            Node::Bin(op, a, b) => {
                out.push('(');
                a.write(out, shift);
                out.push(*op);
                b.write(out, shift);
                out.push(')');
            }
            Node::Call(f, a) => {
                out.push_str(match f {
                    Func::Sin => "sin(",
                    Func::Cos => "cos(",
                    Func::Exp => "exp(",
                });
                a.write(out, shift);
                out.push(')');
            }
        }
    }
}

impl Expr {
    /// `(1/k) Σ f(x + s)` over the given shifts, as a new expression.
    pub fn translation_average(&self, shifts: &[(f64, f64)]) -> Expr {
        let mut src = String::from("(");
        for (k, &s) in shifts.iter().enumerate() {
            if k > 0 {
                src.push('+');
            }
            self.root.write(&mut src, s);
        }
        src.push_str(&format!(")/{:?}", shifts.len() as f64));
        Expr::parse(&src).expect("printed expressions parse")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError {
            pos: self.pos,
            msg: msg.to_string(),
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

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(c as char, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(c as char, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                let func = match ident {
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "x1" => return Ok(Node::X1),
                    "x2" => return Ok(Node::X2),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    _ => {
                        self.pos = start;
                        return Err(self.err(&format!("unknown identifier '{ident}'")));
                    }
                };
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(Node::Call(func, Box::new(arg)))
            }
            Some(c) => Err(self.err(&format!("unexpected character '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map(Node::Num).map_err(|_| ParseError {
            pos: start,
            msg: format!("malformed number '{text}'"),
        })
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn evaluates() {
        let e = Expr::parse("1+0.5*sin(2*pi*x1)").unwrap();
        assert!((e.eval(0.25, 0.0) - 1.5).abs() < 1e-15);
        let e = Expr::parse("(1 + 0.5*sin(2*pi*x1))^2").unwrap();
        assert!((e.eval(0.75, 0.3) - 0.25).abs() < 1e-15);
        let e = Expr::parse("-x2 * 3 - -2 / 4").unwrap();
        assert!((e.eval(0.0, 1.0) - (-2.5)).abs() < 1e-15);
        let e = Expr::parse("exp(cos(pi*x1)) + 1e-1").unwrap();
        assert!((e.eval(1.0, 0.0) - ((-1f64).exp() + 0.1)).abs() < 1e-15);
        assert_eq!(Expr::parse("2^3^2").unwrap().eval(0.0, 0.0), 512.0);
        assert!((Expr::parse("pi").unwrap().eval(0.0, 0.0) - PI).abs() == 0.0);
    }

    #[test]
    fn translation_average() {
        let e = Expr::parse("-sin(2*pi*x1) + x2^2").unwrap();
        let a = e.translation_average(&[(0.0, 0.0), (0.5, 0.25)]);
        let (x1, x2) = (0.1, 0.3);
        let want = 0.5 * (e.eval(x1, x2) + e.eval(x1 + 0.5, x2 + 0.25));
        assert!((a.eval(x1, x2) - want).abs() < 1e-14);
    }

    #[test]
    fn positioned_errors() {
        let e = Expr::parse("1 + foo(x1)").unwrap_err();
        assert_eq!(e.pos, 4);
        let e = Expr::parse("sin(x1").unwrap_err();
        assert_eq!(e.pos, 6);
        let e = Expr::parse("1 + ").unwrap_err();
        assert_eq!(e.pos, 4);
        let e = Expr::parse("x1 x2").unwrap_err();
        assert_eq!(e.pos, 3);
        assert!(Expr::parse("3 $ 4").is_err());
    }
}
