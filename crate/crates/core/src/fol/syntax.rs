use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::FolError;

/// Relational/functional vocabulary shared by formulas and structures.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    relations: BTreeMap<String, usize>,
    functions: BTreeMap<String, usize>,
    constants: BTreeSet<String>,
}

/// What a declared symbol is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Relation(usize),
    Function(usize),
    Constant,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_relation(mut self, name: &str, arity: usize) -> Result<Self, FolError> {
        self.add_relation(name, arity)?;
        Ok(self)
    }

    pub fn with_function(mut self, name: &str, arity: usize) -> Result<Self, FolError> {
        self.add_function(name, arity)?;
        Ok(self)
    }

    pub fn with_constant(mut self, name: &str) -> Result<Self, FolError> {
        self.add_constant(name)?;
        Ok(self)
    }

    pub fn add_relation(&mut self, name: &str, arity: usize) -> Result<(), FolError> {
        self.check_fresh(name)?;
        if arity == 0 {
            return Err(FolError::ZeroArity(name.to_string()));
        }
        self.relations.insert(name.to_string(), arity);
        Ok(())
    }

    pub fn add_function(&mut self, name: &str, arity: usize) -> Result<(), FolError> {
        self.check_fresh(name)?;
        if arity == 0 {
            return Err(FolError::ZeroArity(name.to_string()));
        }
        self.functions.insert(name.to_string(), arity);
        Ok(())
    }

    pub fn add_constant(&mut self, name: &str) -> Result<(), FolError> {
        self.check_fresh(name)?;
        self.constants.insert(name.to_string());
        Ok(())
    }

    fn check_fresh(&self, name: &str) -> Result<(), FolError> {
        if !is_identifier(name) || is_keyword(name) {
            return Err(FolError::BadIdentifier(name.to_string()));
        }
        if self.kind(name).is_some() {
            return Err(FolError::DuplicateSymbol(name.to_string()));
        }
        Ok(())
    }

    pub fn kind(&self, name: &str) -> Option<SymbolKind> {
        if let Some(&a) = self.relations.get(name) {
            Some(SymbolKind::Relation(a))
        } else if let Some(&a) = self.functions.get(name) {
            Some(SymbolKind::Function(a))
        } else if self.constants.contains(name) {
            Some(SymbolKind::Constant)
        } else {
            None
        }
    }

    pub fn relations(&self) -> &BTreeMap<String, usize> {
        &self.relations
    }

    pub fn functions(&self) -> &BTreeMap<String, usize> {
        &self.functions
    }

    pub fn constants(&self) -> &BTreeSet<String> {
        &self.constants
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn is_keyword(s: &str) -> bool {
    s == "forall" || s == "exists"
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Const(_) => {}
            Term::App(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
        }
    }

    fn rename_var(&self, from: &str, to: &str) -> Term {
        match self {
            Term::Var(v) if v == from => Term::Var(to.to_string()),
            Term::Var(_) | Term::Const(_) => self.clone(),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|t| t.rename_var(from, to)).collect()),
        }
    }

    /// Checks arities and symbol kinds against `sig`.
    pub fn check(&self, sig: &Signature) -> Result<(), FolError> {
        match self {
            Term::Var(v) => match sig.kind(v) {
                None => Ok(()),
                Some(_) => Err(FolError::SymbolMisuse(v.clone())),
            },
            Term::Const(c) => match sig.kind(c) {
                Some(SymbolKind::Constant) => Ok(()),
                Some(_) => Err(FolError::SymbolMisuse(c.clone())),
                None => Err(FolError::Undeclared(c.clone())),
            },
            Term::App(f, args) => match sig.kind(f) {
                Some(SymbolKind::Function(a)) if a == args.len() => args.iter().try_for_each(|t| t.check(sig)),
                Some(SymbolKind::Function(a)) => Err(FolError::Arity {
                    symbol: f.clone(),
                    expected: a,
                    found: args.len(),
                }),
                Some(_) => Err(FolError::SymbolMisuse(f.clone())),
                None => Err(FolError::Undeclared(f.clone())),
            },
        }
    }
}

/// First-order formula tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Rel(String, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

impl Formula {
    pub fn rel(name: &str, vars: &[&str]) -> Self {
        Formula::Rel(name.to_string(), vars.iter().map(|v| Term::var(v)).collect())
    }

    pub fn eq_vars(a: &str, b: &str) -> Self {
        Formula::Eq(Term::var(a), Term::var(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Self {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Formula) -> Self {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    pub fn iff(self, other: Formula) -> Self {
        Formula::Iff(Box::new(self), Box::new(other))
    }

    pub fn forall(var: &str, body: Formula) -> Self {
        Formula::Forall(var.to_string(), Box::new(body))
    }

    pub fn exists(var: &str, body: Formula) -> Self {
        Formula::Exists(var.to_string(), Box::new(body))
    }

    /// Left-nested conjunction; `None` for an empty list.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        parts.into_iter().reduce(Formula::and)
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let mut push_terms = |terms: &[&Term], bound: &Vec<String>| {
            let mut vs = Vec::new();
            terms.iter().for_each(|t| t.collect_vars(&mut vs));
            for v in vs {
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match self {
            Formula::Rel(_, args) => push_terms(&args.iter().collect::<Vec<_>>(), bound),
            Formula::Eq(a, b) => push_terms(&[a, b], bound),
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                bound.push(v.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk_vars(&mut out);
        out
    }

    fn walk_vars(&self, out: &mut BTreeSet<String>) {
        let mut add = |t: &Term| {
            let mut vs = Vec::new();
            t.collect_vars(&mut vs);
            out.extend(vs);
        };
        match self {
            Formula::Rel(_, args) => args.iter().for_each(&mut add),
            Formula::Eq(a, b) => {
                add(a);
                add(b);
            }
            Formula::Not(f) => f.walk_vars(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.walk_vars(out);
                b.walk_vars(out);
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                out.insert(v.clone());
                body.walk_vars(out);
            }
        }
    }

    /// Renames free occurrences of `from` to `to`. `to` must not occur in the
    /// formula, otherwise it could be captured.
    pub fn rename_free(&self, from: &str, to: &str) -> Formula {
        match self {
            Formula::Rel(r, args) => Formula::Rel(r.clone(), args.iter().map(|t| t.rename_var(from, to)).collect()),
            Formula::Eq(a, b) => Formula::Eq(a.rename_var(from, to), b.rename_var(from, to)),
            Formula::Not(f) => Formula::Not(Box::new(f.rename_free(from, to))),
            Formula::And(a, b) => Formula::And(Box::new(a.rename_free(from, to)), Box::new(b.rename_free(from, to))),
            Formula::Or(a, b) => Formula::Or(Box::new(a.rename_free(from, to)), Box::new(b.rename_free(from, to))),
            Formula::Implies(a, b) => {
                Formula::Implies(Box::new(a.rename_free(from, to)), Box::new(b.rename_free(from, to)))
            }
            Formula::Iff(a, b) => Formula::Iff(Box::new(a.rename_free(from, to)), Box::new(b.rename_free(from, to))),
            Formula::Forall(v, _) | Formula::Exists(v, _) if v == from => self.clone(),
            Formula::Forall(v, body) => Formula::Forall(v.clone(), Box::new(body.rename_free(from, to))),
            Formula::Exists(v, body) => Formula::Exists(v.clone(), Box::new(body.rename_free(from, to))),
        }
    }

    /// Well-typedness against `sig`.
    pub fn check(&self, sig: &Signature) -> Result<(), FolError> {
        match self {
            Formula::Rel(r, args) => match sig.kind(r) {
                Some(SymbolKind::Relation(a)) if a == args.len() => args.iter().try_for_each(|t| t.check(sig)),
                Some(SymbolKind::Relation(a)) => Err(FolError::Arity {
                    symbol: r.clone(),
                    expected: a,
                    found: args.len(),
                }),
                Some(_) => Err(FolError::SymbolMisuse(r.clone())),
                None => Err(FolError::Undeclared(r.clone())),
            },
            Formula::Eq(a, b) => {
                a.check(sig)?;
                b.check(sig)
            }
            Formula::Not(f) => f.check(sig),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.check(sig)?;
                b.check(sig)
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                if sig.kind(v).is_some() {
                    return Err(FolError::SymbolMisuse(v.clone()));
                }
                body.check(sig)
            }
        }
    }

    /// Nesting depth of connectives and quantifiers; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Rel(..) | Formula::Eq(..) => 0,
            Formula::Not(f) | Formula::Forall(_, f) | Formula::Exists(_, f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Forall(..) | Formula::Exists(..) => 0,
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(..) => 3,
            Formula::And(..) => 4,
            Formula::Not(_) => 5,
            Formula::Rel(..) | Formula::Eq(..) => 6,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.precedence();
        let wrap = prec < min_prec;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Formula::Rel(r, args) => {
                write!(f, "{r}(")?;
                write_terms(f, args)?;
                f.write_str(")")?;
            }
            Formula::Eq(a, b) => write!(f, "{a} = {b}")?,
            Formula::Not(inner) => {
                f.write_str("!")?;
                // `!x = y` is legal but reads badly
                let need = if matches!(**inner, Formula::Eq(..)) { 7 } else { 5 };
                inner.fmt_at(f, need)?;
            }
            Formula::And(a, b) => binary(f, a, b, " & ", prec)?,
            Formula::Or(a, b) => binary(f, a, b, " | ", prec)?,
            Formula::Implies(a, b) => binary(f, a, b, " -> ", prec)?,
            Formula::Iff(a, b) => binary(f, a, b, " <-> ", prec)?,
            Formula::Forall(v, body) => {
                write!(f, "forall {v}. ")?;
                body.fmt_at(f, 0)?;
            }
            Formula::Exists(v, body) => {
                write!(f, "exists {v}. ")?;
                body.fmt_at(f, 0)?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

// Binary connectives associate to the left, so the right operand needs a
// strictly tighter precedence. Quantifiers only appear bare in formula position.
fn binary(f: &mut fmt::Formatter<'_>, a: &Formula, b: &Formula, op: &str, prec: u8) -> fmt::Result {
    a.fmt_at(f, prec.max(1))?;
    f.write_str(op)?;
    b.fmt_at(f, prec + 1)
}

fn write_terms(f: &mut fmt::Formatter<'_>, terms: &[Term]) -> fmt::Result {
    for (i, t) in terms.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                write_terms(f, args)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// A formula together with its split of free variables into object
/// variables `x` and parameter variables `y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionedFormula {
    formula: Formula,
    objects: Vec<String>,
    params: Vec<String>,
}

impl PartitionedFormula {
    /// Every free variable must be declared on exactly one side. Declared
    /// variables that do not occur free are allowed (dummy coordinates).
    pub fn new(formula: Formula, objects: Vec<String>, params: Vec<String>) -> Result<Self, FolError> {
        let mut seen = BTreeSet::new();
        for v in objects.iter().chain(params.iter()) {
            if !is_identifier(v) || is_keyword(v) {
                return Err(FolError::BadIdentifier(v.clone()));
            }
            if !seen.insert(v.clone()) {
                return Err(FolError::DuplicateVariable(v.clone()));
            }
        }
        let undeclared: Vec<String> = formula.free_vars().into_iter().filter(|v| !seen.contains(v)).collect();
        if !undeclared.is_empty() {
            return Err(FolError::Unbound(undeclared));
        }
        Ok(Self {
            formula,
            objects,
            params,
        })
    }

    /// Uses `objects` as `x`; every other free variable becomes a parameter,
    /// in order of first occurrence.
    pub fn with_objects(formula: Formula, objects: &[&str]) -> Result<Self, FolError> {
        let objects: Vec<String> = objects.iter().map(|s| s.to_string()).collect();
        let params = formula.free_vars().into_iter().filter(|v| !objects.contains(v)).collect();
        Self::new(formula, objects, params)
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn object_arity(&self) -> usize {
        self.objects.len()
    }

    pub fn param_arity(&self) -> usize {
        self.params.len()
    }

    /// Object variables followed by parameter variables.
    pub fn variables(&self) -> Vec<String> {
        self.objects.iter().chain(self.params.iter()).cloned().collect()
    }

    pub fn into_parts(self) -> (Formula, Vec<String>, Vec<String>) {
        (self.formula, self.objects, self.params)
    }
}

impl fmt::Display for PartitionedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} ; {}] {}", self.objects.join(", "), self.params.join(", "), self.formula)
    }
}
