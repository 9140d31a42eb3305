use std::collections::BTreeSet;
use std::ops::Range;

use super::{FolError, Formula, PartitionedFormula};

/// Exchanges the object and parameter roles: `phi(x; y)` becomes `phi*(y; x)`.
/// The formula tree is untouched.
pub fn swap_partition(phi: &PartitionedFormula) -> PartitionedFormula {
    let (f, objects, params) = phi.clone().into_parts();
    PartitionedFormula::new(f, params, objects).expect("swapping a valid partition stays valid")
}

/// The selector formula `gamma(x, y_1..y_n, z_*, z_1..z_n)` that behaves as
/// `theta_i(x, y_i)` whenever `z_i` is the only selector equal to `z_*`, and
/// is true when no selector pattern holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorEncoding {
    gamma: PartitionedFormula,
    blocks: Vec<Range<usize>>,
    family_size: usize,
}

impl SelectorEncoding {
    pub fn formula(&self) -> &PartitionedFormula {
        &self.gamma
    }

    pub fn family_size(&self) -> usize {
        self.family_size
    }

    /// Position range of `theta_i`'s parameters inside gamma's parameter list.
    pub fn block(&self, i: usize) -> Range<usize> {
        self.blocks[i].clone()
    }

    /// Index of `z_*` in gamma's parameters; `z_1..z_n` follow it.
    pub fn selector_offset(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.end)
    }

    /// Lays out a full parameter tuple for gamma.
    pub fn assemble(&self, ys: &[&[usize]], z_star: usize, zs: &[usize]) -> Result<Vec<usize>, FolError> {
        if ys.len() != self.family_size || zs.len() != self.family_size {
            return Err(FolError::ValueCount {
                what: "selector family members",
                expected: self.family_size,
                found: ys.len().min(zs.len()),
            });
        }
        let mut out = Vec::with_capacity(self.gamma.param_arity());
        for (y, block) in ys.iter().zip(&self.blocks) {
            if y.len() != block.len() {
                return Err(FolError::ValueCount {
                    what: "family member parameters",
                    expected: block.len(),
                    found: y.len(),
                });
            }
            out.extend_from_slice(y);
        }
        out.push(z_star);
        out.extend_from_slice(zs);
        Ok(out)
    }
}

fn fresh(base: &str, taken: &mut BTreeSet<String>) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    taken.insert(name.clone());
    name
}

/// Builds the selector encoding of `thetas`, which must share their object
/// variables. Parameters of each member are renamed apart.
pub fn encode_selector(thetas: &[PartitionedFormula]) -> Result<SelectorEncoding, FolError> {
    let first = thetas.first().ok_or(FolError::EmptyFamily)?;
    let objects = first.objects().to_vec();
    if let Some(bad) = thetas.iter().find(|t| t.objects() != objects.as_slice()) {
        return Err(FolError::IncompatibleFamily(format!(
            "object variables {:?} differ from {:?}",
            bad.objects(),
            objects
        )));
    }
    let mut taken: BTreeSet<String> = objects.iter().cloned().collect();
    for t in thetas {
        taken.extend(t.formula().all_vars());
        taken.extend(t.params().iter().cloned());
    }

    let mut params = Vec::new();
    let mut blocks = Vec::new();
    let mut renamed = Vec::new();
    for (i, t) in thetas.iter().enumerate() {
        let start = params.len();
        let mut f = t.formula().clone();
        // two-step rename so a new name never collides with an old one still pending
        let fresh_names: Vec<String> =
            (0..t.param_arity()).map(|j| fresh(&format!("y{}_{}", i + 1, j), &mut taken)).collect();
        for (old, new) in t.params().iter().zip(&fresh_names) {
            f = f.rename_free(old, new);
        }
        params.extend(fresh_names);
        blocks.push(start..params.len());
        renamed.push(f);
    }
    let z_star = fresh("zs", &mut taken);
    let zs: Vec<String> = (1..=thetas.len()).map(|i| fresh(&format!("z{i}"), &mut taken)).collect();

    let clauses = renamed.into_iter().enumerate().map(|(i, theta)| {
        let selected = Formula::eq_vars(&z_star, &zs[i]);
        let others = zs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, z)| Formula::eq_vars(z, &z_star).not());
        let pattern = Formula::conjunction(std::iter::once(selected).chain(others)).expect("nonempty");
        pattern.implies(theta)
    });
    let gamma = Formula::conjunction(clauses).expect("family is nonempty");

    params.push(z_star);
    params.extend(zs);
    Ok(SelectorEncoding {
        gamma: PartitionedFormula::new(gamma, objects, params)?,
        blocks,
        family_size: thetas.len(),
    })
}
