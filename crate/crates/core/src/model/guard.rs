//! Boolean guard expressions over equality atoms on finite-sorted monitored
//! variables.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! disj := conj ('|' conj)*
//! conj := atom ('&' atom)*
//! atom := ident '=' value | '!' atom | '(' disj ')'
//! ```
//!
//! The canonical printing of a guard is its token sequence with no
//! whitespace; it doubles as the identifier of the guard's input class.

use std::fmt;

use thiserror::Error;

use super::interface::{is_value_ident, is_var_ident, Interface};
use super::valuation::{Valuation, ValuationSpace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GuardError {
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` is not monitored")]
    NotMonitored(String),
    #[error("value `{value}` is not in the sort of `{var}`")]
    ValueNotInSort { var: String, value: String },
    #[error("variable `{0}` is unbound in the valuation")]
    Unbound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Guard {
    Atom { var: String, value: String },
    And(Vec<Guard>),
    Or(Vec<Guard>),
    Not(Box<Guard>),
    Group(Box<Guard>),
}

impl Guard {
    pub fn atom(var: impl Into<String>, value: impl Into<String>) -> Guard {
        Guard::Atom {
            var: var.into(),
            value: value.into(),
        }
    }

    /// Conjunction of atoms in the given order; a single atom stays bare.
    pub fn conjunction(mut atoms: Vec<Guard>) -> Guard {
        if atoms.len() == 1 {
            atoms.pop().unwrap()
        } else {
            Guard::And(atoms)
        }
    }

    /// Parses without checking variables against an interface.
    pub fn parse(text: &str) -> Result<Guard, GuardError> {
        let tokens = tokenize(text)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            end: text.len(),
        };
        let guard = parser.disj()?;
        if let Some(tok) = parser.peek() {
            return Err(GuardError::Syntax {
                pos: tok.pos,
                message: format!("unexpected `{}`", tok.kind),
            });
        }
        Ok(guard)
    }

    /// Atoms in left-to-right order.
    pub fn atoms(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<(&'a str, &'a str)>) {
        match self {
            Guard::Atom { var, value } => out.push((var, value)),
            Guard::And(gs) | Guard::Or(gs) => gs.iter().for_each(|g| g.collect_atoms(out)),
            Guard::Not(g) | Guard::Group(g) => g.collect_atoms(out),
        }
    }

    /// Checks every atom names a monitored variable and a value of its sort.
    pub fn check(&self, iface: &Interface) -> Result<(), GuardError> {
        for (var, value) in self.atoms() {
            let decl = iface
                .var(var)
                .ok_or_else(|| GuardError::UnknownVariable(var.to_string()))?;
            if !decl.kind.is_input() {
                return Err(GuardError::NotMonitored(var.to_string()));
            }
            if !iface.domain(var).unwrap().iter().any(|v| v == value) {
                return Err(GuardError::ValueNotInSort {
                    var: var.to_string(),
                    value: value.to_string(),
                });
            }
        }
        Ok(())
    }

    /// `s ⊨ g`: `Atom(v=c)` holds iff `s(v) = c`.
    pub fn eval(&self, s: &Valuation) -> Result<bool, GuardError> {
        Ok(match self {
            Guard::Atom { var, value } => s.get(var).ok_or_else(|| GuardError::Unbound(var.clone()))? == value,
            Guard::And(gs) => {
                for g in gs {
                    if !g.eval(s)? {
                        return Ok(false);
                    }
                }
                true
            }
            Guard::Or(gs) => {
                for g in gs {
                    if g.eval(s)? {
                        return Ok(true);
                    }
                }
                false
            }
            Guard::Not(g) => !g.eval(s)?,
            Guard::Group(g) => g.eval(s)?,
        })
    }

    /// Resolves atoms to positions in `space` for fast evaluation on digit
    /// tuples. Atoms over variables outside the space are unbound.
    pub fn compile(&self, space: &ValuationSpace<'_>) -> Result<CompiledGuard, GuardError> {
        Ok(match self {
            Guard::Atom { var, value } => {
                let pos = space
                    .names()
                    .iter()
                    .position(|n| n == var)
                    .ok_or_else(|| GuardError::Unbound(var.clone()))?;
                let value = space.domains()[pos].iter().position(|v| v == value);
                CompiledGuard::Atom { pos, value }
            }
            Guard::And(gs) => CompiledGuard::And(gs.iter().map(|g| g.compile(space)).collect::<Result<_, _>>()?),
            Guard::Or(gs) => CompiledGuard::Or(gs.iter().map(|g| g.compile(space)).collect::<Result<_, _>>()?),
            Guard::Not(g) => CompiledGuard::Not(Box::new(g.compile(space)?)),
            Guard::Group(g) => g.compile(space)?,
        })
    }
}

/// Parses `text` and checks it against the monitored variables of `iface`.
pub fn parse_guard(text: &str, iface: &Interface) -> Result<Guard, GuardError> {
    let guard = Guard::parse(text)?;
    guard.check(iface)?;
    Ok(guard)
}

/// Every valuation over the monitored variables satisfying `g`, in
/// canonical enumeration order.
pub fn satisfying_valuations(g: &Guard, iface: &Interface) -> Result<Vec<Valuation>, GuardError> {
    g.check(iface)?;
    let space = ValuationSpace::inputs(iface);
    let compiled = g.compile(&space)?;
    Ok(space
        .digits()
        .filter(|d| compiled.eval(d))
        .map(|d| space.valuation(&d))
        .collect())
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::Atom { var, value } => write!(f, "{var}={value}"),
            Guard::And(gs) => join(f, gs, "&"),
            Guard::Or(gs) => join(f, gs, "|"),
            Guard::Not(g) => write!(f, "!{g}"),
            Guard::Group(g) => write!(f, "({g})"),
        }
    }
}

fn join(f: &mut fmt::Formatter<'_>, gs: &[Guard], sep: &str) -> fmt::Result {
    for (i, g) in gs.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{g}")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub enum CompiledGuard {
    /// `value` is `None` when the atom's value is outside the sort; such an
    /// atom never holds.
    Atom {
        pos: usize,
        value: Option<usize>,
    },
    And(Vec<CompiledGuard>),
    Or(Vec<CompiledGuard>),
    Not(Box<CompiledGuard>),
}

impl CompiledGuard {
    pub fn eval(&self, digits: &[usize]) -> bool {
        match self {
            CompiledGuard::Atom { pos, value } => Some(digits[*pos]) == *value,
            CompiledGuard::And(gs) => gs.iter().all(|g| g.eval(digits)),
            CompiledGuard::Or(gs) => gs.iter().any(|g| g.eval(digits)),
            CompiledGuard::Not(g) => !g.eval(digits),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    Word(String),
    Eq,
    Amp,
    Bar,
    Bang,
    LParen,
    RParen,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Word(w) => f.write_str(w),
            TokenKind::Eq => f.write_str("="),
            TokenKind::Amp => f.write_str("&"),
            TokenKind::Bar => f.write_str("|"),
            TokenKind::Bang => f.write_str("!"),
            TokenKind::LParen => f.write_str("("),
            TokenKind::RParen => f.write_str(")"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, GuardError> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'=' => TokenKind::Eq,
            b'&' => TokenKind::Amp,
            b'|' => TokenKind::Bar,
            b'!' => TokenKind::Bang,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Word(text[start..i].to_string()),
                    pos: start,
                });
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap();
                return Err(GuardError::Syntax {
                    pos: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        tokens.push(Token { kind, pos: i });
        i += 1;
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn error(&self, expected: &str) -> GuardError {
        let message = match self.peek() {
            Some(t) => format!("expected {expected}, found `{}`", t.kind),
            None => format!("expected {expected}, found end of input"),
        };
        GuardError::Syntax {
            pos: self.offset(),
            message,
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn disj(&mut self) -> Result<Guard, GuardError> {
        let mut parts = vec![self.conj()?];
        while self.eat(&TokenKind::Bar) {
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Guard::Or(parts)
        })
    }

    fn conj(&mut self) -> Result<Guard, GuardError> {
        let mut parts = vec![self.atom()?];
        while self.eat(&TokenKind::Amp) {
            parts.push(self.atom()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Guard::And(parts)
        })
    }

    fn atom(&mut self) -> Result<Guard, GuardError> {
        if self.eat(&TokenKind::Bang) {
            return Ok(Guard::Not(Box::new(self.atom()?)));
        }
        if self.eat(&TokenKind::LParen) {
            let inner = self.disj()?;
            if !self.eat(&TokenKind::RParen) {
                return Err(self.error("`)`"));
            }
            return Ok(Guard::Group(Box::new(inner)));
        }
        let var = match self.peek() {
            Some(Token {
                kind: TokenKind::Word(w),
                ..
            }) if is_var_ident(w) => w.clone(),
            _ => return Err(self.error("a variable name, `!` or `(`")),
        };
        self.pos += 1;
        if !self.eat(&TokenKind::Eq) {
            return Err(self.error("`=`"));
        }
        let value = match self.peek() {
            Some(Token {
                kind: TokenKind::Word(w),
                ..
            }) if is_value_ident(w) => w.clone(),
            _ => return Err(self.error("a value")),
        };
        self.pos += 1;
        Ok(Guard::Atom { var, value })
    }
}
