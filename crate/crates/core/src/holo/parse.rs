//! Text form of [`HoloExpr`].
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := ('+' | '-') unary | power
//! power    := atom ('^' exponent)?
//! exponent := ['+' | '-'] number | '(' ['+' | '-'] number ')'
//! atom     := number ['i'] | 'i' | 'pi' | var | func '(' expr ')'
//!           | '(' re ('+' | '-') im 'i' ')'          -- no whitespace inside
//!           | '(' expr ')'
//! var      := 'z' digits | 't' digits | 'z' | 't'
//! func     := 'exp' | 'log' | 'sin' | 'cos'
//! ```
//!
//! A term whose first factor is a bare literal becomes `ScalarMul`; `a / b`
//! is left-associative. `cos(x)` is sugar for `sin(x + π/2)`, and `t_k` is
//! an alias of `z_k` for expressions over real variables.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

use super::{HoloExpr, Node};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("parse error at position {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

/// Parses the expression mini-language. The arity is the largest variable
/// index used (zero when no variables occur).
pub fn parse_expr(text: &str) -> Result<HoloExpr, ParseError> {
    let mut p = Parser { chars: text.chars().collect(), pos: 0 };
    let (node, _) = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(format!("unexpected '{}'", p.chars[p.pos])));
    }
    HoloExpr::from_node(node).map_err(|e| ParseError { pos: 0, msg: e.to_string() })
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<(Node, bool), ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                let (t, bare) = self.term()?;
                terms.push((negate(t), bare));
            } else {
                break;
            }
        }
        if terms.len() == 1 {
            Ok(terms.pop().unwrap())
        } else {
            Ok((Node::Sum(terms.into_iter().map(|t| t.0).collect()), false))
        }
    }

    fn term(&mut self) -> Result<(Node, bool), ParseError> {
        let mut items = vec![self.unary()?];
        loop {
            if self.eat('*') {
                items.push(self.unary()?);
            } else if self.eat('/') {
                let den = self.unary()?.0;
                let num = build_product(std::mem::take(&mut items));
                items.push((Node::Quotient(Box::new(num), Box::new(den)), false));
            } else {
                break;
            }
        }
        if items.len() == 1 {
            Ok(items.pop().unwrap())
        } else {
            Ok((build_product(items), false))
        }
    }

    fn unary(&mut self) -> Result<(Node, bool), ParseError> {
        if self.eat('-') {
            let (n, bare) = self.unary()?;
            return Ok(match (n, bare) {
                (Node::Const(c), true) => (Node::Const(-c), true),
                (n, _) => (negate(n), false),
            });
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<(Node, bool), ParseError> {
        let (base, bare) = self.atom()?;
        if !self.eat('^') {
            return Ok((base, bare));
        }
        let paren = self.eat('(');
        let neg = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        self.skip_ws();
        let start = self.pos;
        let r =
            self.number().ok_or_else(|| ParseError { pos: start, msg: "exponent must be a real literal".into() })?;
        if paren {
            self.expect(')')?;
        }
        let r = if neg { -r } else { r };
        Ok((Node::RealPow(Box::new(base), r), false))
    }

    fn atom(&mut self) -> Result<(Node, bool), ParseError> {
        let Some(c) = self.peek() else {
            return Err(self.error("unexpected end of input"));
        };
        if c.is_ascii_digit() || c == '.' {
            let start = self.pos;
            let v = self.number().ok_or_else(|| ParseError { pos: start, msg: "bad number".into() })?;
            if self.imag_suffix() {
                return Ok((Node::Const(Complex64::new(0.0, v)), true));
            }
            return Ok((Node::Const(Complex64::new(v, 0.0)), true));
        }
        if c == '(' {
            if let Some(v) = self.compact_complex() {
                return Ok((Node::Const(v), true));
            }
            self.pos += 1;
            let (n, _) = self.expr()?;
            self.expect(')')?;
            return Ok((n, false));
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            let mut name = String::new();
            while let Some(&ch) = self.chars.get(self.pos) {
                if ch.is_ascii_alphabetic() {
                    name.push(ch);
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let mut digits = String::new();
            while let Some(&ch) = self.chars.get(self.pos) {
                if ch.is_ascii_digit() {
                    digits.push(ch);
                    self.pos += 1;
                } else {
                    break;
                }
            }
            return match (name.as_str(), digits.is_empty()) {
                ("z" | "t", true) => Ok((Node::Var(0), false)),
                ("z" | "t", false) => {
                    let k: usize = digits
                        .parse()
                        .ok()
                        .filter(|&k| k >= 1)
                        .ok_or_else(|| ParseError { pos: start, msg: format!("bad variable {name}{digits}") })?;
                    Ok((Node::Var(k - 1), false))
                }
                ("i", true) => Ok((Node::Const(Complex64::new(0.0, 1.0)), true)),
                ("pi", true) => Ok((Node::Const(Complex64::new(PI, 0.0)), true)),
                ("exp" | "log" | "sin" | "cos", true) => {
                    self.expect('(')?;
                    let (arg, _) = self.expr()?;
                    self.expect(')')?;
                    let arg = Box::new(arg);
                    Ok((
                        match name.as_str() {
                            "exp" => Node::Exp(arg),
                            "log" => Node::Log(arg),
                            "sin" => Node::Sin(arg),
                            _ => {
                                Node::Sin(Box::new(Node::Sum(vec![*arg, Node::Const(Complex64::new(FRAC_PI_2, 0.0))])))
                            }
                        },
                        false,
                    ))
                }
                _ => Err(ParseError { pos: start, msg: format!("unknown identifier '{name}{digits}'") }),
            };
        }
        Err(self.error(format!("unexpected '{c}'")))
    }

    /// Unsigned decimal literal at the current position (no leading whitespace skip).
    fn number(&mut self) -> Option<f64> {
        let start = self.pos;
        let n = self.chars.len();
        let mut i = self.pos;
        while i < n && self.chars[i].is_ascii_digit() {
            i += 1;
        }
        if i < n && self.chars[i] == '.' {
            i += 1;
            while i < n && self.chars[i].is_ascii_digit() {
                i += 1;
            }
        }
        let mantissa: String = self.chars[start..i].iter().collect();
        if mantissa.is_empty() || mantissa == "." {
            return None;
        }
        if i < n && (self.chars[i] == 'e' || self.chars[i] == 'E') {
            let mut j = i + 1;
            if j < n && (self.chars[j] == '+' || self.chars[j] == '-') {
                j += 1;
            }
            if j < n && self.chars[j].is_ascii_digit() {
                while j < n && self.chars[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text: String = self.chars[start..i].iter().collect();
        let v = text.parse().ok()?;
        self.pos = i;
        Some(v)
    }

    fn imag_suffix(&mut self) -> bool {
        let save = self.pos;
        if self.peek() == Some('i') {
            let next = self.chars.get(self.pos + 1);
            if !next.is_some_and(|c| c.is_ascii_alphanumeric()) {
                self.pos += 1;
                return true;
            }
        }
        self.pos = save;
        false
    }

    /// Matches `(re±imi)` written without whitespace.
    fn compact_complex(&mut self) -> Option<Complex64> {
        let save = self.pos;
        let r = self.try_compact();
        if r.is_none() {
            self.pos = save;
        }
        r
    }

    fn try_compact(&mut self) -> Option<Complex64> {
        let at = |p: &Parser, i: usize| p.chars.get(i).copied();
        if at(self, self.pos) != Some('(') {
            return None;
        }
        self.pos += 1;
        let re_neg = at(self, self.pos) == Some('-');
        if re_neg {
            self.pos += 1;
        }
        let re = self.number()?;
        let im_neg = match at(self, self.pos)? {
            '+' => false,
            '-' => true,
            _ => return None,
        };
        self.pos += 1;
        let im = self.number()?;
        if at(self, self.pos) != Some('i') || at(self, self.pos + 1) != Some(')') {
            return None;
        }
        self.pos += 2;
        Some(Complex64::new(if re_neg { -re } else { re }, if im_neg { -im } else { im }))
    }
}

fn negate(n: Node) -> Node {
    match n {
        Node::Const(c) => Node::Const(-c),
        Node::ScalarMul(c, x) => Node::ScalarMul(-c, x),
        other => Node::ScalarMul(Complex64::new(-1.0, 0.0), Box::new(other)),
    }
}

fn build_product(mut items: Vec<(Node, bool)>) -> Node {
    if items.len() == 1 {
        return items.pop().unwrap().0;
    }
    if let (Node::Const(c), true) = &items[0] {
        let c = *c;
        let mut rest: Vec<Node> = items.into_iter().skip(1).map(|i| i.0).collect();
        let inner = if rest.len() == 1 { rest.pop().unwrap() } else { Node::Product(rest) };
        return Node::ScalarMul(c, Box::new(inner));
    }
    Node::Product(items.into_iter().map(|i| i.0).collect())
}

fn real_lit(v: f64) -> String {
    format!("{v}")
}

pub(crate) fn complex_lit(c: Complex64) -> String {
    if c.im == 0.0 {
        real_lit(c.re)
    } else if c.re == 0.0 {
        format!("{}i", real_lit(c.im))
    } else {
        format!("({}{}{}i)", real_lit(c.re), if c.im < 0.0 { "-" } else { "+" }, real_lit(c.im.abs()))
    }
}

fn wrap(s: String) -> String {
    format!("({s})")
}

pub(crate) fn print_node(node: &Node) -> String {
    match node {
        Node::Var(i) => format!("z{}", i + 1),
        Node::Const(c) => complex_lit(*c),
        Node::Sum(ch) => ch
            .iter()
            .map(|c| match c {
                Node::Sum(_) => wrap(print_node(c)),
                _ => print_node(c),
            })
            .collect::<Vec<_>>()
            .join(" + "),
        Node::Product(ch) => ch
            .iter()
            .enumerate()
            .map(|(k, c)| match c {
                Node::Sum(_) | Node::Product(_) | Node::Quotient(..) | Node::ScalarMul(..) => wrap(print_node(c)),
                Node::Const(_) if k == 0 => wrap(print_node(c)),
                _ => print_node(c),
            })
            .collect::<Vec<_>>()
            .join(" * "),
        Node::Quotient(a, b) => {
            let left = match **a {
                Node::Sum(_) => wrap(print_node(a)),
                _ => print_node(a),
            };
            let right = match **b {
                Node::Sum(_) | Node::Product(_) | Node::Quotient(..) | Node::ScalarMul(..) => wrap(print_node(b)),
                _ => print_node(b),
            };
            format!("{left} / {right}")
        }
        Node::RealPow(a, r) => {
            let base = match **a {
                Node::Var(_) | Node::Exp(_) | Node::Log(_) | Node::Sin(_) => print_node(a),
                Node::Const(c) if !complex_lit(c).starts_with('-') => print_node(a),
                _ => wrap(print_node(a)),
            };
            format!("{base}^{}", real_lit(*r))
        }
        Node::Exp(a) => format!("exp({})", print_node(a)),
        Node::Log(a) => format!("log({})", print_node(a)),
        Node::Sin(a) => format!("sin({})", print_node(a)),
        Node::ScalarMul(c, a) => {
            let inner = match **a {
                Node::Sum(_) | Node::ScalarMul(..) | Node::Quotient(..) => wrap(print_node(a)),
                _ => print_node(a),
            };
            format!("{} * {inner}", complex_lit(*c))
        }
    }
}
