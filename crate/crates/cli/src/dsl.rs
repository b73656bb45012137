//! Input language: session statements, jet expressions, operators and matrices.
//!
//! ```text
//! file  := stmt*                       (statements end at newline or ';')
//! stmt  := "vars" INT | "params" ident+ | ident "=" expr | ident "=" matrix
//! matrix:= "[" row ("," row)* "]"      row := "[" expr ("," expr)* "]"
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := "-" unary | power
//! power := atom ("^" INT)?
//! atom  := INT | "(" expr ")" | "x" | "d" | name | jet
//! jet   := ("u" | "u" INT | ident) ("'"+ | "^(" INT ")")?
//! ```
//!
//! `*` is composition of operators, so `d*u` is `u*d + u'`. Identifiers that are
//! neither declared parameters nor earlier definitions are free functions of x.

use num_bigint::BigInt;
use num_rational::BigRational;
use std::fmt;
use varpois::diffalg::DiffPoly;
use varpois::diffop::{MatDiffOp, ScalarOp};
use varpois::field::poly::Var;
use varpois::{Error, FieldElem, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Rationals,
    RationalsInX,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionConfig {
    pub ell: usize,
    pub params: Vec<String>,
    pub field: FieldKind,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            ell: 1,
            params: Vec::new(),
            field: FieldKind::Rationals,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Op(ScalarOp),
    Matrix(MatDiffOp),
}

impl Value {
    pub fn to_matrix(&self) -> MatDiffOp {
        match self {
            Value::Op(op) => MatDiffOp::scalar(op.clone()),
            Value::Matrix(m) => m.clone(),
        }
    }

    /// The expression as an element of V, if it has order zero.
    pub fn to_poly(&self) -> Option<DiffPoly> {
        match self {
            Value::Op(op) if op.order().unwrap_or(0) == 0 => Some(op.get(0)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Op(op) => write!(f, "{op}"),
            Value::Matrix(m) if m.rows() == 1 && m.cols() == 1 => write!(f, "[[{}]]", m.get(0, 0)),
            Value::Matrix(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Session {
    pub config: SessionConfig,
    /// Definitions in source order.
    pub defs: Vec<(String, Value)>,
}

impl Session {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.defs.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn define(&mut self, name: String, v: Value) {
        if value_mentions_x(&v) {
            self.config.field = FieldKind::RationalsInX;
        }
        self.defs.retain(|(n, _)| *n != name);
        self.defs.push((name, v));
    }

    /// Canonical source that parses back to the same session.
    pub fn to_source(&self) -> String {
        let mut out = format!("vars {}\n", self.config.ell);
        if !self.config.params.is_empty() {
            out.push_str(&format!("params {}\n", self.config.params.join(" ")));
        }
        for (n, v) in &self.defs {
            out.push_str(&format!("{n} = {v}\n"));
        }
        out
    }

    /// Parse one standalone expression or matrix against this session.
    pub fn eval(&self, src: &str) -> Result<Value> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0, session: self };
        p.skip_separators();
        let v = p.value()?;
        p.skip_separators();
        if let Some(t) = p.peek() {
            return Err(p.err_at(t, "unexpected trailing input"));
        }
        Ok(v)
    }

    /// A name defined in the session, or else an inline expression.
    pub fn resolve(&self, arg: &str) -> Result<Value> {
        match self.get(arg.trim()) {
            Some(v) => Ok(v.clone()),
            None => self.eval(arg),
        }
    }
}

fn value_mentions_x(v: &Value) -> bool {
    let m = v.to_matrix();
    let found = m
        .entries()
        .iter()
        .flatten()
        .flat_map(|e| e.coeffs())
        .flat_map(|(_, c)| c.terms())
        .any(|(_, f)| f.vars().contains(&Var::X));
    found
}

pub fn parse_session(src: &str) -> Result<Session> {
    parse_session_with(src, Session::default())
}

/// Parse statements on top of an existing session (flags given on the command line).
pub fn parse_session_with(src: &str, base: Session) -> Result<Session> {
    let toks = lex(src)?;
    let mut session = base;
    let mut pos = 0;
    loop {
        let mut p = Parser {
            toks: toks.clone(),
            pos,
            session: &session,
        };
        p.skip_separators();
        let Some(t) = p.peek().cloned() else { break };
        let Tok::Ident(word) = &t.kind else {
            return Err(p.err_at(&t, "expected a statement"));
        };
        p.pos += 1;
        match word.as_str() {
            "vars" => {
                let n = p.int()?;
                let ell = usize::try_from(n)
                    .ok()
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| p.err_at(&t, "vars needs a positive count"))?;
                p.end_statement()?;
                pos = p.pos;
                session.config.ell = ell;
            }
            "params" => {
                let mut names = Vec::new();
                while let Some(t) = p.peek().cloned() {
                    let Tok::Ident(n) = t.kind.clone() else { break };
                    if is_reserved(&n) {
                        return Err(p.err_at(&t, &format!("'{n}' cannot be a parameter")));
                    }
                    names.push(n);
                    p.pos += 1;
                }
                if names.is_empty() {
                    return Err(p.err_here("params needs at least one name"));
                }
                p.end_statement()?;
                pos = p.pos;
                for n in names {
                    if !session.config.params.contains(&n) {
                        session.config.params.push(n);
                    }
                }
            }
            name => {
                if is_reserved(name) {
                    return Err(p.err_at(&t, &format!("'{name}' cannot be defined")));
                }
                p.expect(&TokKind::Eq, "expected '='")?;
                let v = p.value()?;
                p.end_statement()?;
                pos = p.pos;
                let name = name.to_string();
                session.define(name, v);
            }
        }
    }
    Ok(session)
}

fn is_reserved(n: &str) -> bool {
    matches!(n, "x" | "d" | "vars" | "params") || jet_index(n).is_some()
}

/// `u` is u1; `u7` is u7.
fn jet_index(n: &str) -> Option<usize> {
    let rest = n.strip_prefix('u')?;
    if rest.is_empty() {
        return Some(1);
    }
    if rest.starts_with('0') {
        return None;
    }
    rest.parse().ok()
}

#[derive(Clone, Debug, PartialEq)]
enum TokKind {
    Int(BigInt),
    Ident(String),
    Primes(u32),
    Caret,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Sep,
}

use TokKind as Tok;

#[derive(Clone, Debug)]
struct Token {
    kind: TokKind,
    line: usize,
    col: usize,
}

fn tok(kind: TokKind, line: usize, col: usize) -> Token {
    Token { kind, line, col }
}

fn parse_err(line: usize, col: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        col,
        msg: msg.to_string(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (li, line) in src.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (ln, col) = (li + 1, i + 1);
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(tok(Tok::Int(s.parse().expect("digits")), ln, col));
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(tok(Tok::Ident(chars[start..i].iter().collect()), ln, col));
                continue;
            }
            if c == '\'' || c == '′' || c == '″' {
                let mut n = 0;
                while i < chars.len() && matches!(chars[i], '\'' | '′' | '″') {
                    n += if chars[i] == '″' { 2 } else { 1 };
                    i += 1;
                }
                out.push(tok(Tok::Primes(n), ln, col));
                continue;
            }
            let kind = match c {
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                ',' => Tok::Comma,
                '+' => Tok::Plus,
                '-' | '−' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '=' => Tok::Eq,
                ';' => Tok::Sep,
                _ => return Err(parse_err(ln, col, &format!("unexpected character '{c}'"))),
            };
            out.push(tok(kind, ln, col));
            i += 1;
        }
        out.push(tok(Tok::Sep, li + 1, chars.len() + 1));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    session: &'a Session,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokKind> {
        self.peek().map(|t| &t.kind)
    }

    fn err_at(&self, t: &Token, msg: &str) -> Error {
        parse_err(t.line, t.col, msg)
    }

    /// Error at the next token, or just past the last one.
    fn err_here(&self, msg: &str) -> Error {
        match self.peek() {
            Some(t) if t.kind != Tok::Sep => self.err_at(t, msg),
            Some(t) => self.err_at(t, &format!("{msg}, found end of line")),
            None => {
                let (l, c) = self.toks.last().map(|t| (t.line, t.col)).unwrap_or((1, 1));
                parse_err(l, c, &format!("{msg}, found end of input"))
            }
        }
    }

    fn expect(&mut self, k: &TokKind, msg: &str) -> Result<()> {
        if self.peek_kind() == Some(k) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err_here(msg))
        }
    }

    fn skip_separators(&mut self) {
        while self.peek_kind() == Some(&Tok::Sep) {
            self.pos += 1;
        }
    }

    fn end_statement(&mut self) -> Result<()> {
        match self.peek_kind() {
            None | Some(Tok::Sep) => Ok(()),
            _ => Err(self.err_here("expected end of statement")),
        }
    }

    fn int(&mut self) -> Result<BigInt> {
        match self.peek_kind() {
            Some(Tok::Int(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.err_here("expected an integer")),
        }
    }

    fn small_int(&mut self) -> Result<u32> {
        let t = self.peek().cloned();
        let n = self.int()?;
        u32::try_from(n).map_err(|_| self.err_at(t.as_ref().unwrap(), "integer too large"))
    }

    fn value(&mut self) -> Result<Value> {
        if self.peek_kind() == Some(&Tok::LBrack) {
            return self.matrix();
        }
        Ok(Value::Op(self.expr()?))
    }

    fn matrix(&mut self) -> Result<Value> {
        let open = self.peek().cloned().unwrap();
        self.pos += 1;
        let mut rows = Vec::new();
        loop {
            self.expect(&Tok::LBrack, "expected '[' opening a matrix row")?;
            let mut row = vec![self.expr()?];
            while self.peek_kind() == Some(&Tok::Comma) {
                self.pos += 1;
                row.push(self.expr()?);
            }
            self.expect(&Tok::RBrack, "expected ']' closing a matrix row")?;
            rows.push(row);
            if self.peek_kind() == Some(&Tok::Comma) {
                self.pos += 1;
                continue;
            }
            break;
        }
        if self.peek_kind() != Some(&Tok::RBrack) {
            return Err(self.err_at(&open, "unclosed '['"));
        }
        self.pos += 1;
        let m = MatDiffOp::from_rows(rows).map_err(|e| self.err_at(&open, &e.to_string()))?;
        Ok(Value::Matrix(m))
    }

    fn expr(&mut self) -> Result<ScalarOp> {
        let mut acc = self.term()?;
        loop {
            match self.peek_kind() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<ScalarOp> {
        let mut acc = self.unary()?;
        loop {
            match self.peek_kind() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.compose(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    let at = self.peek().cloned().unwrap();
                    self.pos += 1;
                    let rhs = self.unary()?;
                    let inv = rhs
                        .field_coeffs()
                        .filter(|c| c.keys().all(|&n| n == 0))
                        .and_then(|c| c.get(&0).and_then(|f| f.inv()))
                        .ok_or_else(|| self.err_at(&at, "can only divide by a nonzero element of the coefficient field"))?;
                    acc = acc.compose(&ScalarOp::from_field(inv));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<ScalarOp> {
        if self.peek_kind() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<ScalarOp> {
        let base = self.atom()?;
        if self.peek_kind() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let e = self.small_int()?;
        let mut acc = ScalarOp::one();
        for _ in 0..e {
            acc = acc.compose(&base);
        }
        Ok(acc)
    }

    /// Derivative order after a jet-like name: primes or `^(n)`.
    fn jet_order(&mut self) -> Result<u32> {
        match self.peek_kind() {
            Some(Tok::Primes(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            Some(Tok::Caret) if matches!(self.toks.get(self.pos + 1).map(|t| &t.kind), Some(Tok::LParen)) => {
                let open = self.toks[self.pos + 1].clone();
                self.pos += 2;
                let n = self.small_int()?;
                if self.peek_kind() != Some(&Tok::RParen) {
                    return Err(self.err_at(&open, "unclosed '('"));
                }
                self.pos += 1;
                Ok(n)
            }
            _ => Ok(0),
        }
    }

    fn atom(&mut self) -> Result<ScalarOp> {
        let Some(t) = self.peek().cloned() else {
            return Err(self.err_here("expected an expression"));
        };
        match &t.kind {
            Tok::Int(n) => {
                self.pos += 1;
                Ok(ScalarOp::from_field(FieldElem::from_q(BigRational::from_integer(n.clone()))))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek_kind() != Some(&Tok::RParen) {
                    return Err(self.err_at(&t, "unclosed '('"));
                }
                self.pos += 1;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                self.named(name, &t)
            }
            _ => Err(self.err_here("expected an expression")),
        }
    }

    fn named(&mut self, name: &str, t: &Token) -> Result<ScalarOp> {
        match name {
            "x" => Ok(ScalarOp::from_field(FieldElem::x())),
            "d" => Ok(ScalarOp::d(1)),
            _ => {
                if let Some(idx) = jet_index(name) {
                    let n = self.jet_order()?;
                    let ell = self.session.config.ell;
                    if idx > ell {
                        return Err(Error::Arity { index: idx, ell });
                    }
                    return Ok(ScalarOp::mul_by(DiffPoly::jet(idx - 1, n)));
                }
                if self.session.config.params.iter().any(|p| p == name) {
                    return Ok(ScalarOp::from_field(FieldElem::param(name)));
                }
                if let Some(v) = self.session.get(name) {
                    return match v {
                        Value::Op(op) => Ok(op.clone()),
                        Value::Matrix(_) => Err(self.err_at(t, &format!("'{name}' is a matrix and cannot appear inside an expression"))),
                    };
                }
                let n = self.jet_order()?;
                Ok(ScalarOp::from_field(FieldElem::fun(name, n)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(n: u32) -> DiffPoly {
        DiffPoly::jet(0, n)
    }

    #[test]
    fn magri_operator() {
        let s = parse_session("vars 1\nparams c\nH = u' + 2*u*d + c*d^3").unwrap();
        let c = DiffPoly::from_field(FieldElem::param("c"));
        let expect = ScalarOp::from_coeffs([(0, u(1)), (1, u(0).scale(&FieldElem::int(2))), (3, c)]);
        assert_eq!(s.get("H"), Some(&Value::Op(expect)));
        assert_eq!(s.get("H").unwrap().to_string(), "u' + 2*u*d + c*d^3");
    }

    #[test]
    fn gfz_and_composition_order() {
        let s = parse_session("K = d\nA = d*u\nB = u*d").unwrap();
        assert_eq!(s.get("K"), Some(&Value::Op(ScalarOp::d(1))));
        assert_eq!(s.get("A").unwrap().to_string(), "u' + u*d");
        assert_eq!(s.get("B").unwrap().to_string(), "u*d");
    }

    #[test]
    fn unclosed_parenthesis() {
        let e = parse_session("H = u^(2").unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 1,
                col: 7,
                msg: "unclosed '('".into()
            }
        );
        let e = parse_session("vars 1\nH = (u + 1").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, col: 5, .. }));
    }

    #[test]
    fn arity_and_precedence() {
        assert_eq!(parse_session("vars 1\nP = u2").unwrap_err(), Error::Arity { index: 2, ell: 1 });
        let s = parse_session("vars 2\nP = -u2^2 + 1/2*u''").unwrap();
        let expect = DiffPoly::jet(1, 0).pow(2).neg().add(&u(2).scale(&FieldElem::ratio(1, 2)));
        assert_eq!(s.get("P").unwrap().to_poly(), Some(expect));
        let s = parse_session("P = u^(3) - 2*3^2").unwrap();
        assert_eq!(s.get("P").unwrap().to_poly(), Some(u(3).sub(&DiffPoly::int(18))));
    }

    #[test]
    fn matrices_and_functions() {
        let s = parse_session("M = [[1, a], [d, a*d]]").unwrap();
        let m = s.get("M").unwrap().to_matrix();
        assert_eq!(m.get(1, 1).to_string(), "a*d");
        assert_eq!(s.eval("a'").unwrap(), Value::Op(ScalarOp::from_field(FieldElem::fun("a", 1))));
        assert!(matches!(parse_session("M = [[1, 2], [3]]").unwrap_err(), Error::Parse { .. }));
    }

    #[test]
    fn canonical_round_trip() {
        let src = "vars 2\nparams c k\nH = [[u' + 2*u*d + c*d^3, x*d], [-x*d - 1, (x + 1)/x*u2^(3)*d^2]]\nF = 1/2*u^2 - c/(x^2 + 1)*u2''\n";
        let s = parse_session(src).unwrap();
        let printed = s.to_source();
        assert_eq!(parse_session(&printed).unwrap(), s);
        assert_eq!(parse_session(&printed).unwrap().to_source(), printed);
    }
}
