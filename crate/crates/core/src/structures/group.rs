use std::sync::Arc;

use super::{FiniteStructure, StructureError};
use crate::fol::Signature;

/// A finite group presented as a structure over `mul/2`, `inv/1` and `e`,
/// with the group laws verified at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupTable {
    structure: Arc<FiniteStructure>,
    identity: usize,
}

fn group_signature() -> Signature {
    Signature::new()
        .with_function("mul", 2)
        .and_then(|s| s.with_function("inv", 1))
        .and_then(|s| s.with_constant("e"))
        .expect("fixed group signature is valid")
}

impl GroupTable {
    /// Validates a structure that interprets `mul`, `inv` and `e`. Other
    /// symbols are allowed.
    pub fn from_structure(structure: FiniteStructure) -> Result<Self, StructureError> {
        let n = structure.size();
        let mul = structure.function("mul").filter(|f| f.arity() == 2);
        let inv = structure.function("inv").filter(|f| f.arity() == 1);
        let (Some(mul), Some(inv), Some(e)) = (mul, inv, structure.constant("e")) else {
            return Err(StructureError::GroupLaw("signature must provide mul/2, inv/1 and e".into()));
        };
        let m = |a: usize, b: usize| mul.values()[a * n + b];
        for a in 0..n {
            if m(e, a) != a || m(a, e) != a {
                return Err(StructureError::GroupLaw(format!("{e} is not an identity for {a}")));
            }
            let ia = inv.values()[a];
            if m(a, ia) != e || m(ia, a) != e {
                return Err(StructureError::GroupLaw(format!("inv({a}) = {ia} is not an inverse")));
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = m(a, b);
                for c in 0..n {
                    if m(ab, c) != m(a, m(b, c)) {
                        return Err(StructureError::GroupLaw(format!("associativity fails at ({a},{b},{c})")));
                    }
                }
            }
        }
        Ok(Self {
            structure: Arc::new(structure),
            identity: e,
        })
    }

    pub fn structure(&self) -> &Arc<FiniteStructure> {
        &self.structure
    }

    pub fn order(&self) -> usize {
        self.structure.size()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.structure.function("mul").expect("validated").values()[a * self.order() + b]
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.structure.function("inv").expect("validated").values()[a]
    }

    /// The multiplication table as rows.
    pub fn table(&self) -> Vec<Vec<usize>> {
        let n = self.order();
        (0..n).map(|a| (0..n).map(|b| self.mul(a, b)).collect()).collect()
    }

    /// Same group with elements renamed by the permutation `relabel`
    /// (old element `a` becomes `relabel[a]`).
    pub fn relabeled(&self, relabel: &[usize]) -> Result<Self, StructureError> {
        let n = self.order();
        let mut seen = vec![false; n];
        if relabel.len() != n || relabel.iter().any(|&x| x >= n || std::mem::replace(&mut seen[x], true)) {
            return Err(StructureError::Invalid("relabelling must be a permutation".into()));
        }
        let mut table = vec![vec![0; n]; n];
        for a in 0..n {
            for b in 0..n {
                table[relabel[a]][relabel[b]] = relabel[self.mul(a, b)];
            }
        }
        group_from_table(&table)
    }
}

/// Builds a group from a square multiplication table, finding the identity
/// and inverses and validating associativity.
pub fn group_from_table(table: &[Vec<usize>]) -> Result<GroupTable, StructureError> {
    let n = table.len();
    if n == 0 {
        return Err(StructureError::GroupLaw("empty table".into()));
    }
    if let Some((i, row)) = table.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(StructureError::BadTable {
            symbol: "mul".into(),
            msg: format!("row {i} has {} entries, expected {n}", row.len()),
        });
    }
    if let Some(&bad) = table.iter().flatten().find(|&&x| x >= n) {
        return Err(StructureError::OutOfRange { element: bad, size: n });
    }
    let e = (0..n)
        .find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a))
        .ok_or_else(|| StructureError::GroupLaw("no identity element".into()))?;
    let inv = (0..n)
        .map(|a| {
            (0..n)
                .find(|&b| table[a][b] == e && table[b][a] == e)
                .ok_or_else(|| StructureError::GroupLaw(format!("{a} has no inverse")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let m = FiniteStructure::builder(group_signature(), n)
        .function("mul", table.iter().flatten().copied().collect())
        .function("inv", inv)
        .constant("e", e)
        .build()?;
    GroupTable::from_structure(m)
}

/// `Z/n` under addition.
pub fn cyclic_group(n: usize) -> Result<GroupTable, StructureError> {
    if n == 0 {
        return Err(StructureError::Invalid("group order must be at least 1".into()));
    }
    let table: Vec<Vec<usize>> = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
    group_from_table(&table)
}

/// Symmetries of the regular `n`-gon, of order `2n`. Element `k < n` is the
/// rotation `r^k`; element `n + k` is the reflection `s r^k`.
pub fn dihedral_group(n: usize) -> Result<GroupTable, StructureError> {
    if n == 0 {
        return Err(StructureError::Invalid("dihedral group needs n >= 1".into()));
    }
    let compose = |x: usize, y: usize| -> usize {
        let (xs, xk) = (x >= n, x % n);
        let (ys, yk) = (y >= n, y % n);
        match (xs, ys) {
            (false, false) => (xk + yk) % n,
            (false, true) => n + (yk + n - xk) % n,
            (true, false) => n + (xk + yk) % n,
            (true, true) => (yk + n - xk) % n,
        }
    };
    let table: Vec<Vec<usize>> = (0..2 * n).map(|a| (0..2 * n).map(|b| compose(a, b)).collect()).collect();
    group_from_table(&table)
}

/// The quaternion group `{+-1, +-i, +-j, +-k}`; element `4s + u` is
/// `(-1)^s` times unit `u` in `1, i, j, k`.
pub fn quaternion_group() -> GroupTable {
    // unit products: (sign flip, unit)
    const UNIT: [[(usize, usize); 4]; 4] = [
        [(0, 0), (0, 1), (0, 2), (0, 3)],
        [(0, 1), (1, 0), (0, 3), (1, 2)],
        [(0, 2), (1, 3), (1, 0), (0, 1)],
        [(0, 3), (0, 2), (1, 1), (1, 0)],
    ];
    let table: Vec<Vec<usize>> = (0..8)
        .map(|a| {
            (0..8)
                .map(|b| {
                    let (flip, u) = UNIT[a % 4][b % 4];
                    ((a / 4 + b / 4 + flip) % 2) * 4 + u
                })
                .collect()
        })
        .collect();
    group_from_table(&table).expect("quaternion table is a group")
}

/// Permutations of three points in lexicographic order; `mul(a, b)` applies
/// `b` first.
pub fn symmetric_group_s3() -> GroupTable {
    let perms: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).expect("permutation");
    let table: Vec<Vec<usize>> = perms
        .iter()
        .map(|a| perms.iter().map(|b| index([a[b[0]], a[b[1]], a[b[2]]])).collect())
        .collect();
    group_from_table(&table).expect("S3 table is a group")
}
