//! Recursive-descent parser for the ASCII formula grammar.
//!
//! ```text
//! formula  := quant | iff ;
//! quant    := ("forall" | "exists") VAR "." formula ;
//! iff      := imp { "<->" imp } ;
//! imp      := or { "->" or } ;
//! or       := and { "|" and } ;
//! and      := unary { "&" unary } ;
//! unary    := "!" unary | "(" formula ")" | atom ;
//! atom     := REL "(" term { "," term } ")" | term "=" term ;
//! term     := VAR | CONST | FUNC "(" term { "," term } ")" ;
//! ```
//!
//! A formula may be prefixed by a partition annotation `[x1, x2 ; y1]`
//! (objects before the semicolon, parameters after). `[x1, x2]` declares the
//! objects and takes every other free variable as a parameter.
//! Binary connectives associate to the left.

use super::syntax::{is_keyword, PartitionedFormula, Signature, SymbolKind, Term};
use super::{FolError, Formula};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Dot,
    Eq,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DArrow,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, FolError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let tok = match c {
            c if c.is_ascii_whitespace() => {
                i += 1;
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '.' => Tok::Dot,
            '=' => Tok::Eq,
            '!' => Tok::Bang,
            '&' => Tok::Amp,
            '|' => Tok::Pipe,
            '-' if text[i..].starts_with("->") => {
                i += 1;
                Tok::Arrow
            }
            '<' if text[i..].starts_with("<->") => {
                i += 2;
                Tok::DArrow
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or(c);
                return Err(FolError::Lex { pos: i, ch });
            }
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    sig: &'a Signature,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error(&self, msg: impl Into<String>) -> FolError {
        FolError::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), FolError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Option<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Some(s)
            }
            _ => None,
        }
    }

    fn variable(&mut self) -> Result<String, FolError> {
        let name = self.ident().ok_or_else(|| self.error("expected a variable"))?;
        if is_keyword(&name) {
            return Err(self.error(format!("keyword `{name}` cannot be a variable")));
        }
        if self.sig.kind(&name).is_some() {
            return Err(FolError::SymbolMisuse(name));
        }
        Ok(name)
    }

    fn formula(&mut self) -> Result<Formula, FolError> {
        match self.peek() {
            Some(Tok::Ident(k)) if k == "forall" || k == "exists" => {
                let universal = k == "forall";
                self.pos += 1;
                let var = self.variable()?;
                self.expect(Tok::Dot, "`.` after quantified variable")?;
                let body = self.formula()?;
                Ok(if universal {
                    Formula::Forall(var, Box::new(body))
                } else {
                    Formula::Exists(var, Box::new(body))
                })
            }
            _ => self.iff(),
        }
    }

    fn iff(&mut self) -> Result<Formula, FolError> {
        let mut lhs = self.imp()?;
        while self.eat(&Tok::DArrow) {
            lhs = lhs.iff(self.imp()?);
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<Formula, FolError> {
        let mut lhs = self.or()?;
        while self.eat(&Tok::Arrow) {
            lhs = lhs.implies(self.or()?);
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, FolError> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Pipe) {
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, FolError> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::Amp) {
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, FolError> {
        if self.eat(&Tok::Bang) {
            return Ok(self.unary()?.not());
        }
        if self.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(f);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, FolError> {
        if let Some(Tok::Ident(name)) = self.peek() {
            if let Some(SymbolKind::Relation(arity)) = self.sig.kind(name) {
                let name = name.clone();
                self.pos += 1;
                let args = self.arguments(&name)?;
                if args.len() != arity {
                    return Err(FolError::Arity {
                        symbol: name,
                        expected: arity,
                        found: args.len(),
                    });
                }
                return Ok(Formula::Rel(name, args));
            }
        }
        let lhs = self.term()?;
        self.expect(Tok::Eq, "`=` or a relation atom")?;
        let rhs = self.term()?;
        Ok(Formula::Eq(lhs, rhs))
    }

    fn arguments(&mut self, symbol: &str) -> Result<Vec<Term>, FolError> {
        self.expect(Tok::LParen, &format!("`(` after `{symbol}`"))?;
        let mut args = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            args.push(self.term()?);
        }
        self.expect(Tok::RParen, "`)` closing argument list")?;
        Ok(args)
    }

    fn term(&mut self) -> Result<Term, FolError> {
        let name = self.ident().ok_or_else(|| self.error("expected a term"))?;
        if is_keyword(&name) {
            self.pos -= 1;
            return Err(self.error(format!("unexpected keyword `{name}`")));
        }
        match self.sig.kind(&name) {
            Some(SymbolKind::Function(arity)) => {
                let args = self.arguments(&name)?;
                if args.len() != arity {
                    return Err(FolError::Arity {
                        symbol: name,
                        expected: arity,
                        found: args.len(),
                    });
                }
                Ok(Term::App(name, args))
            }
            Some(SymbolKind::Constant) => Ok(Term::Const(name)),
            Some(SymbolKind::Relation(_)) => Err(FolError::SymbolMisuse(name)),
            None if self.peek() == Some(&Tok::LParen) => Err(FolError::Undeclared(name)),
            None => Ok(Term::Var(name)),
        }
    }

    fn var_list(&mut self, stop: &[Tok]) -> Result<Vec<String>, FolError> {
        let mut vars = Vec::new();
        if self.peek().is_some_and(|t| stop.contains(t)) {
            return Ok(vars);
        }
        vars.push(self.variable()?);
        while self.eat(&Tok::Comma) {
            vars.push(self.variable()?);
        }
        Ok(vars)
    }

    fn annotation(&mut self) -> Result<Option<(Vec<String>, Option<Vec<String>>)>, FolError> {
        if !self.eat(&Tok::LBracket) {
            return Ok(None);
        }
        let objects = self.var_list(&[Tok::Semi, Tok::RBracket])?;
        let params = if self.eat(&Tok::Semi) {
            Some(self.var_list(&[Tok::RBracket])?)
        } else {
            None
        };
        self.expect(Tok::RBracket, "`]` closing the partition")?;
        Ok(Some((objects, params)))
    }

    fn finish(&self) -> Result<(), FolError> {
        if self.pos < self.toks.len() {
            Err(self.error("unexpected trailing input"))
        } else {
            Ok(())
        }
    }
}

fn parser<'a>(text: &str, sig: &'a Signature) -> Result<Parser<'a>, FolError> {
    Ok(Parser {
        toks: lex(text)?,
        pos: 0,
        end: text.len(),
        sig,
    })
}

/// Parses a bare formula (no partition annotation allowed).
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, FolError> {
    let mut p = parser(text, sig)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Parses a formula with an optional leading partition annotation. Without an
/// annotation, `default_objects` supplies the object variables and the
/// remaining free variables become parameters.
pub fn parse_partitioned(
    text: &str,
    sig: &Signature,
    default_objects: &[&str],
) -> Result<PartitionedFormula, FolError> {
    let mut p = parser(text, sig)?;
    let annotation = p.annotation()?;
    let f = p.formula()?;
    p.finish()?;
    match annotation {
        Some((objects, Some(params))) => PartitionedFormula::new(f, objects, params),
        Some((objects, None)) => {
            let refs: Vec<&str> = objects.iter().map(String::as_str).collect();
            PartitionedFormula::with_objects(f, &refs)
        }
        None => PartitionedFormula::with_objects(f, default_objects),
    }
}
