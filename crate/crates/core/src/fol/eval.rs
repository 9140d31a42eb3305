use std::collections::BTreeMap;

use super::{FolError, Formula, Term};
use crate::structures::{FiniteStructure, FunctionTable, RelationTable};

/// Values for free variables.
pub type Assignment = BTreeMap<String, usize>;

enum CTerm<'m> {
    Slot(usize),
    Elem(usize),
    App(&'m FunctionTable, Vec<CTerm<'m>>),
}

enum Node<'m> {
    Rel(&'m RelationTable, Vec<CTerm<'m>>),
    Eq(CTerm<'m>, CTerm<'m>),
    Not(Box<Node<'m>>),
    And(Box<Node<'m>>, Box<Node<'m>>),
    Or(Box<Node<'m>>, Box<Node<'m>>),
    Implies(Box<Node<'m>>, Box<Node<'m>>),
    Iff(Box<Node<'m>>, Box<Node<'m>>),
    Forall(usize, Box<Node<'m>>),
    Exists(usize, Box<Node<'m>>),
}

/// A formula compiled against one structure, with its free variables bound
/// to positional slots. Quantifiers run over the whole universe and
/// short-circuit.
pub struct Evaluator<'m> {
    structure: &'m FiniteStructure,
    root: Node<'m>,
    inputs: usize,
    slots: usize,
}

struct Compiler<'m> {
    m: &'m FiniteStructure,
    scope: Vec<(String, usize)>,
    slots: usize,
}

impl<'m> Compiler<'m> {
    fn lookup(&self, v: &str) -> Result<usize, FolError> {
        self.scope
            .iter()
            .rev()
            .find(|(name, _)| name == v)
            .map(|(_, s)| *s)
            .ok_or_else(|| FolError::MissingAssignment(v.to_string()))
    }

    fn term(&self, t: &Term) -> Result<CTerm<'m>, FolError> {
        Ok(match t {
            Term::Var(v) => CTerm::Slot(self.lookup(v)?),
            Term::Const(c) => CTerm::Elem(self.m.constant(c).ok_or_else(|| FolError::SignatureMismatch(c.clone()))?),
            Term::App(f, args) => {
                let table = self
                    .m
                    .function(f)
                    .filter(|t| t.arity() == args.len())
                    .ok_or_else(|| FolError::SignatureMismatch(f.clone()))?;
                CTerm::App(table, args.iter().map(|a| self.term(a)).collect::<Result<_, _>>()?)
            }
        })
    }

    fn node(&mut self, f: &Formula) -> Result<Node<'m>, FolError> {
        let bin = |c: &mut Self, a: &Formula, b: &Formula| -> Result<_, FolError> {
            Ok((Box::new(c.node(a)?), Box::new(c.node(b)?)))
        };
        Ok(match f {
            Formula::Rel(r, args) => {
                let table = self
                    .m
                    .relation(r)
                    .filter(|t| t.arity() == args.len())
                    .ok_or_else(|| FolError::SignatureMismatch(r.clone()))?;
                Node::Rel(table, args.iter().map(|a| self.term(a)).collect::<Result<_, _>>()?)
            }
            Formula::Eq(a, b) => Node::Eq(self.term(a)?, self.term(b)?),
            Formula::Not(g) => Node::Not(Box::new(self.node(g)?)),
            Formula::And(a, b) => {
                let (a, b) = bin(self, a, b)?;
                Node::And(a, b)
            }
            Formula::Or(a, b) => {
                let (a, b) = bin(self, a, b)?;
                Node::Or(a, b)
            }
            Formula::Implies(a, b) => {
                let (a, b) = bin(self, a, b)?;
                Node::Implies(a, b)
            }
            Formula::Iff(a, b) => {
                let (a, b) = bin(self, a, b)?;
                Node::Iff(a, b)
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let slot = self.slots;
                self.slots += 1;
                self.scope.push((v.clone(), slot));
                let body = Box::new(self.node(body)?);
                self.scope.pop();
                if matches!(f, Formula::Forall(..)) {
                    Node::Forall(slot, body)
                } else {
                    Node::Exists(slot, body)
                }
            }
        })
    }
}

impl<'m> Evaluator<'m> {
    /// Compiles `formula` with `inputs` as its positional free variables. Any
    /// free variable not listed is reported as a missing assignment.
    pub fn new<S: AsRef<str>>(structure: &'m FiniteStructure, formula: &Formula, inputs: &[S]) -> Result<Self, FolError> {
        let mut c = Compiler {
            m: structure,
            scope: inputs.iter().enumerate().map(|(i, v)| (v.as_ref().to_string(), i)).collect(),
            slots: inputs.len(),
        };
        let root = c.node(formula)?;
        Ok(Self {
            structure,
            root,
            inputs: inputs.len(),
            slots: c.slots,
        })
    }

    pub fn structure(&self) -> &'m FiniteStructure {
        self.structure
    }

    pub fn input_count(&self) -> usize {
        self.inputs
    }

    /// Evaluates with `values[i]` bound to the i-th input variable. Panics if
    /// `values` has the wrong length or holds out-of-range elements; use
    /// [`Evaluator::try_eval`] for checked input.
    pub fn eval(&self, values: &[usize]) -> bool {
        assert_eq!(values.len(), self.inputs, "wrong number of input values");
        let mut env = vec![0; self.slots];
        env[..self.inputs].copy_from_slice(values);
        self.node(&self.root, &mut env)
    }

    pub fn try_eval(&self, values: &[usize]) -> Result<bool, FolError> {
        if values.len() != self.inputs {
            return Err(FolError::ValueCount {
                what: "input variables",
                expected: self.inputs,
                found: values.len(),
            });
        }
        let size = self.structure.size();
        if let Some(&element) = values.iter().find(|&&e| e >= size) {
            return Err(FolError::OutOfRange { element, size });
        }
        Ok(self.eval(values))
    }

    fn term(&self, t: &CTerm<'m>, env: &[usize]) -> usize {
        match t {
            CTerm::Slot(s) => env[*s],
            CTerm::Elem(e) => *e,
            CTerm::App(table, args) => {
                let vals: Vec<usize> = args.iter().map(|a| self.term(a, env)).collect();
                table.apply(&vals, self.structure.size())
            }
        }
    }

    fn node(&self, node: &Node<'m>, env: &mut Vec<usize>) -> bool {
        match node {
            Node::Rel(table, args) => {
                let vals: Vec<usize> = args.iter().map(|a| self.term(a, env)).collect();
                table.contains(&vals, self.structure.size())
            }
            Node::Eq(a, b) => self.term(a, env) == self.term(b, env),
            Node::Not(f) => !self.node(f, env),
            Node::And(a, b) => self.node(a, env) && self.node(b, env),
            Node::Or(a, b) => self.node(a, env) || self.node(b, env),
            Node::Implies(a, b) => !self.node(a, env) || self.node(b, env),
            Node::Iff(a, b) => self.node(a, env) == self.node(b, env),
            Node::Forall(slot, body) => (0..self.structure.size()).all(|e| {
                env[*slot] = e;
                self.node(body, env)
            }),
            Node::Exists(slot, body) => (0..self.structure.size()).any(|e| {
                env[*slot] = e;
                self.node(body, env)
            }),
        }
    }
}

/// Tarskian truth of `formula` in `structure` under `assignment`.
pub fn evaluate(structure: &FiniteStructure, formula: &Formula, assignment: &Assignment) -> Result<bool, FolError> {
    formula.check(structure.signature()).map_err(|e| match e {
        FolError::Undeclared(s) | FolError::SymbolMisuse(s) => FolError::SignatureMismatch(s),
        other => other,
    })?;
    let free = formula.free_vars();
    let values = free
        .iter()
        .map(|v| assignment.get(v).copied().ok_or_else(|| FolError::MissingAssignment(v.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Evaluator::new(structure, formula, &free)?.try_eval(&values)
}
