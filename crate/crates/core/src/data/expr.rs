//! Small arithmetic expression language for data given in configuration
//! files: `+ - * /`, unary minus, parentheses, `sin`, `cos`, `exp`, `sqrt`,
//! numeric literals, the constant `pi` and a fixed list of variables.
//! Expressions are differentiated symbolically so configured data carries
//! exact gradients.

use std::fmt;

use crate::error::{data, Result};

use super::{FieldProfile, Profile};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
        }
    }
}

fn num(v: f64) -> Node {
    Node::Num(v)
}

fn neg(a: Node) -> Node {
    match a {
        Node::Num(v) => num(-v),
        Node::Neg(inner) => *inner,
        a => Node::Neg(Box::new(a)),
    }
}

fn add(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) => num(x + y),
        (Node::Num(z), b) if z == 0.0 => b,
        (a, Node::Num(z)) if z == 0.0 => a,
        (a, b) => Node::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) => num(x - y),
        (Node::Num(z), b) if z == 0.0 => neg(b),
        (a, Node::Num(z)) if z == 0.0 => a,
        (a, b) => Node::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) => num(x * y),
        (Node::Num(z), _) | (_, Node::Num(z)) if z == 0.0 => num(0.0),
        (Node::Num(o), b) if o == 1.0 => b,
        (a, Node::Num(o)) if o == 1.0 => a,
        (a, b) => Node::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(z), _) if z == 0.0 => num(0.0),
        (a, Node::Num(o)) if o == 1.0 => a,
        (a, b) => Node::Div(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Node) -> Node {
    match a {
        Node::Num(v) => num(f.apply(v)),
        a => Node::Call(f, Box::new(a)),
    }
}

impl Node {
    fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(k) => vars[*k],
            Node::Neg(a) => -a.eval(vars),
            Node::Add(a, b) => a.eval(vars) + b.eval(vars),
            Node::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Node::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Node::Div(a, b) => a.eval(vars) / b.eval(vars),
            Node::Call(f, a) => f.apply(a.eval(vars)),
        }
    }

    fn derivative(&self, var: usize) -> Node {
        match self {
            Node::Num(_) => num(0.0),
            Node::Var(k) => num(if *k == var { 1.0 } else { 0.0 }),
            Node::Neg(a) => neg(a.derivative(var)),
            Node::Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Node::Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Node::Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Node::Div(a, b) => div(
                sub(
                    mul(a.derivative(var), (**b).clone()),
                    mul((**a).clone(), b.derivative(var)),
                ),
                mul((**b).clone(), (**b).clone()),
            ),
            Node::Call(f, a) => {
                let inner = a.derivative(var);
                let outer = match f {
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                    Func::Exp => call(Func::Exp, (**a).clone()),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, (**a).clone())),
                };
                mul(outer, inner)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| data(format!("bad number '{text}' at offset {start} in '{src}'")))?;
            out.push((start, Token::Num(v)));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < bytes.len()
                && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            out.push((start, Token::Ident(src[start..i].to_string())));
        } else if "+-*/()".contains(ch) {
            out.push((i, Token::Op(ch)));
            i += 1;
        } else {
            return Err(data(format!(
                "unexpected character '{ch}' at offset {i} in '{src}'"
            )));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<(usize, Token)>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn fail(&self, what: &str) -> crate::error::Error {
        let at = self
            .tokens
            .get(self.pos)
            .map_or(self.src.len(), |(o, _)| *o);
        data(format!("{what} at offset {at} in '{}'", self.src))
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if let Some(f) = Func::from_name(&name) {
                    if !self.eat('(') {
                        return Err(self.fail(&format!("expected '(' after {name}")));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.fail("expected ')'"));
                    }
                    Ok(Node::Call(f, Box::new(arg)))
                } else if name == "pi" {
                    Ok(Node::Num(std::f64::consts::PI))
                } else if let Some(k) = self.vars.iter().position(|v| *v == name) {
                    Ok(Node::Var(k))
                } else {
                    self.pos -= 1;
                    Err(self.fail(&format!(
                        "unknown identifier '{name}' (variables: {})",
                        self.vars.join(", ")
                    )))
                }
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.fail("expected ')'"));
                }
                Ok(inner)
            }
            _ => Err(self.fail("expected a number, variable, function or '('")),
        }
    }
}

/// A parsed expression in a fixed list of variables.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    vars: Vec<String>,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?} in {:?})", self.source, self.vars)
    }
}

impl Expr {
    pub fn parse(source: &str, vars: &[&str]) -> Result<Expr> {
        let tokens = tokenize(source)?;
        let mut p = Parser {
            src: source,
            tokens,
            pos: 0,
            vars,
        };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.fail("unexpected trailing input"));
        }
        Ok(Expr {
            source: source.to_string(),
            vars: vars.iter().map(|s| s.to_string()).collect(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluates with `args` in the order of the variable list.
    pub fn eval(&self, args: &[f64]) -> f64 {
        debug_assert_eq!(args.len(), self.vars.len());
        self.root.eval(args)
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        Expr {
            source: format!("d({})/d{}", self.source, self.vars[var]),
            vars: self.vars.clone(),
            root: self.root.derivative(var),
        }
    }
}

/// Two-variable profile from an expression and its symbolic gradient.
#[derive(Debug, Clone)]
pub struct ExprProfile {
    value: Expr,
    gradient: [Expr; 2],
}

impl ExprProfile {
    pub fn parse(source: &str, vars: [&str; 2]) -> Result<Self> {
        let value = Expr::parse(source, &vars)?;
        let gradient = [value.derivative(0), value.derivative(1)];
        Ok(ExprProfile { value, gradient })
    }
}

impl Profile for ExprProfile {
    fn value(&self, a: f64, b: f64) -> f64 {
        self.value.eval(&[a, b])
    }
    fn gradient(&self, a: f64, b: f64) -> Option<[f64; 2]> {
        Some([
            self.gradient[0].eval(&[a, b]),
            self.gradient[1].eval(&[a, b]),
        ])
    }
}

/// Space-time profile in `(t, x, y)` from an expression.
#[derive(Debug, Clone)]
pub struct ExprField {
    value: Expr,
    gradient: [Expr; 3],
}

impl ExprField {
    pub fn parse(source: &str) -> Result<Self> {
        let value = Expr::parse(source, &["t", "x", "y"])?;
        let gradient = [
            value.derivative(0),
            value.derivative(1),
            value.derivative(2),
        ];
        Ok(ExprField { value, gradient })
    }
}

impl FieldProfile for ExprField {
    fn value(&self, t: f64, x: f64, y: f64) -> f64 {
        self.value.eval(&[t, x, y])
    }
    fn gradient(&self, t: f64, x: f64, y: f64) -> Option<[f64; 3]> {
        let p = [t, x, y];
        Some(std::array::from_fn(|k| self.gradient[k].eval(&p)))
    }
}
