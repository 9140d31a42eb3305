//! Finite structures and their constructors: Paley graphs, finite groups given
//! by Cayley tables, and ordered sequences of structures.

mod graph;
mod group;
mod json;
mod paley;
mod sequence;

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::fol::{FolError, Signature, SymbolKind};
use crate::tuples::{tuple_index, TupleIter};

pub use graph::{complete_graph, extension_property, graph_from_edges};
pub(crate) use graph::sole_binary_relation;
pub use group::{
    cyclic_group, dihedral_group, group_from_table, quaternion_group, symmetric_group_s3, GroupTable,
};
pub use json::{structure_from_json, structure_to_json};
pub use paley::{is_prime, paley};
pub use sequence::StructureSequence;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error(transparent)]
    Signature(#[from] FolError),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not congruent to 1 mod 4; the relation would not be symmetric")]
    NotOneModFour(u64),
    #[error("`{0}` is not declared in the signature")]
    Undeclared(String),
    #[error("`{symbol}`: {msg}")]
    BadTable { symbol: String, msg: String },
    #[error("element {element} outside universe of size {size}")]
    OutOfRange { element: usize, size: usize },
    #[error("missing interpretation for `{0}`")]
    Missing(String),
    #[error("group law violated: {0}")]
    GroupLaw(String),
    #[error("not a simple graph: {0}")]
    NotAGraph(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("malformed structure file: {0}")]
    Format(String),
    #[error("sequence: {0}")]
    Sequence(String),
}

/// Interpretation of a relation symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationTable {
    arity: usize,
    tuples: BTreeSet<Vec<usize>>,
    // membership bitmap indexed by the row-major tuple index, when it fits
    dense: Option<Vec<bool>>,
}

const DENSE_LIMIT: usize = 1 << 22;

impl RelationTable {
    fn new(arity: usize, n: usize, tuples: BTreeSet<Vec<usize>>) -> Self {
        let dense = n.checked_pow(arity as u32).filter(|&s| s <= DENSE_LIMIT).map(|size| {
            let mut bits = vec![false; size];
            for t in &tuples {
                bits[tuple_index(t, n)] = true;
            }
            bits
        });
        Self { arity, tuples, dense }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &BTreeSet<Vec<usize>> {
        &self.tuples
    }

    #[inline]
    pub(crate) fn contains(&self, tuple: &[usize], n: usize) -> bool {
        match &self.dense {
            Some(bits) => bits[tuple_index(tuple, n)],
            None => self.tuples.contains(tuple),
        }
    }
}

/// Total interpretation of a function symbol, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionTable {
    arity: usize,
    values: Vec<usize>,
}

impl FunctionTable {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    #[inline]
    pub(crate) fn apply(&self, args: &[usize], n: usize) -> usize {
        self.values[tuple_index(args, n)]
    }
}

/// A finite structure with universe `0..n`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    signature: Signature,
    size: usize,
    relations: BTreeMap<String, RelationTable>,
    functions: BTreeMap<String, FunctionTable>,
    constants: BTreeMap<String, usize>,
}

impl FiniteStructure {
    pub fn builder(signature: Signature, size: usize) -> StructureBuilder {
        StructureBuilder {
            signature,
            size,
            relations: BTreeMap::new(),
            functions: BTreeMap::new(),
            constants: BTreeMap::new(),
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn relation(&self, name: &str) -> Option<&RelationTable> {
        self.relations.get(name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionTable> {
        self.functions.get(name)
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.constants.get(name).copied()
    }

    pub fn relations(&self) -> &BTreeMap<String, RelationTable> {
        &self.relations
    }

    pub fn functions(&self) -> &BTreeMap<String, FunctionTable> {
        &self.functions
    }

    pub fn constants(&self) -> &BTreeMap<String, usize> {
        &self.constants
    }

    pub fn holds(&self, relation: &str, tuple: &[usize]) -> bool {
        self.relations
            .get(relation)
            .is_some_and(|r| r.arity == tuple.len() && tuple.iter().all(|&e| e < self.size) && r.contains(tuple, self.size))
    }

    pub fn apply(&self, function: &str, args: &[usize]) -> Option<usize> {
        let f = self.functions.get(function)?;
        (f.arity == args.len() && args.iter().all(|&e| e < self.size)).then(|| f.apply(args, self.size))
    }

    /// All `k`-tuples of universe elements in lexicographic order.
    pub fn tuples(&self, k: usize) -> TupleIter {
        TupleIter::new(self.size, k)
    }

    pub fn check_element(&self, element: usize) -> Result<(), StructureError> {
        if element < self.size {
            Ok(())
        } else {
            Err(StructureError::OutOfRange {
                element,
                size: self.size,
            })
        }
    }
}

pub struct StructureBuilder {
    signature: Signature,
    size: usize,
    relations: BTreeMap<String, BTreeSet<Vec<usize>>>,
    functions: BTreeMap<String, Vec<usize>>,
    constants: BTreeMap<String, usize>,
}

impl StructureBuilder {
    pub fn relation<I>(mut self, name: &str, tuples: I) -> Self
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        self.relations.entry(name.to_string()).or_default().extend(tuples);
        self
    }

    /// Row-major table over all argument tuples.
    pub fn function(mut self, name: &str, values: Vec<usize>) -> Self {
        self.functions.insert(name.to_string(), values);
        self
    }

    pub fn constant(mut self, name: &str, element: usize) -> Self {
        self.constants.insert(name.to_string(), element);
        self
    }

    pub fn build(self) -> Result<FiniteStructure, StructureError> {
        let n = self.size;
        let in_range = |e: usize| {
            if e < n {
                Ok(())
            } else {
                Err(StructureError::OutOfRange { element: e, size: n })
            }
        };
        let mut relations = BTreeMap::new();
        for (name, arity) in self.signature.relations() {
            let tuples = self.relations.get(name).cloned().unwrap_or_default();
            for t in &tuples {
                if t.len() != *arity {
                    return Err(StructureError::BadTable {
                        symbol: name.clone(),
                        msg: format!("tuple {t:?} has length {}, expected {arity}", t.len()),
                    });
                }
                t.iter().try_for_each(|&e| in_range(e))?;
            }
            relations.insert(name.clone(), RelationTable::new(*arity, n, tuples));
        }
        let mut functions = BTreeMap::new();
        for (name, arity) in self.signature.functions() {
            let values = self.functions.get(name).ok_or_else(|| StructureError::Missing(name.clone()))?;
            let expected = n.pow(*arity as u32);
            if values.len() != expected {
                return Err(StructureError::BadTable {
                    symbol: name.clone(),
                    msg: format!("table has {} entries, expected {expected}", values.len()),
                });
            }
            values.iter().try_for_each(|&e| in_range(e))?;
            functions.insert(
                name.clone(),
                FunctionTable {
                    arity: *arity,
                    values: values.clone(),
                },
            );
        }
        let mut constants = BTreeMap::new();
        for name in self.signature.constants() {
            let e = *self.constants.get(name).ok_or_else(|| StructureError::Missing(name.clone()))?;
            in_range(e)?;
            constants.insert(name.clone(), e);
        }
        let undeclared = self
            .relations
            .keys()
            .chain(self.functions.keys())
            .chain(self.constants.keys())
            .find(|k| match self.signature.kind(k) {
                None => true,
                Some(SymbolKind::Relation(_)) => !self.relations.contains_key(*k),
                Some(SymbolKind::Function(_)) => !self.functions.contains_key(*k),
                Some(SymbolKind::Constant) => !self.constants.contains_key(*k),
            });
        if let Some(name) = undeclared {
            return Err(StructureError::Undeclared(name.clone()));
        }
        if n == 0 {
            return Err(StructureError::Invalid("universe must be nonempty".into()));
        }
        Ok(FiniteStructure {
            signature: self.signature,
            size: n,
            relations,
            functions,
            constants,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_rejects_out_of_range_and_partial_tables() {
        let sig = Signature::new().with_relation("R", 2).unwrap();
        let err = FiniteStructure::builder(sig.clone(), 3).relation("R", [vec![0, 3]]).build().unwrap_err();
        assert_eq!(err, StructureError::OutOfRange { element: 3, size: 3 });

        let sig = Signature::new().with_function("f", 1).unwrap();
        let err = FiniteStructure::builder(sig.clone(), 3).function("f", vec![0, 1]).build().unwrap_err();
        assert!(matches!(err, StructureError::BadTable { .. }));
        let err = FiniteStructure::builder(sig, 3).build().unwrap_err();
        assert_eq!(err, StructureError::Missing("f".into()));
    }

    #[test]
    fn builder_rejects_symbols_outside_signature() {
        let sig = Signature::new().with_relation("R", 1).unwrap();
        let err = FiniteStructure::builder(sig, 2).relation("S", [vec![0]]).build().unwrap_err();
        assert_eq!(err, StructureError::Undeclared("S".into()));
    }

    #[test]
    fn lookup() {
        let sig = Signature::new().with_relation("R", 2).unwrap().with_function("s", 1).unwrap();
        let m = FiniteStructure::builder(sig, 3)
            .relation("R", [vec![0, 1], vec![1, 2]])
            .function("s", vec![1, 2, 0])
            .build()
            .unwrap();
        assert!(m.holds("R", &[1, 2]));
        assert!(!m.holds("R", &[2, 1]));
        assert!(!m.holds("R", &[2, 7]));
        assert_eq!(m.apply("s", &[2]), Some(0));
        assert_eq!(m.tuples(2).count(), 9);
    }
}
