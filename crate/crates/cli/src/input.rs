use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use keisler_core::exact::parse_rational;
use keisler_core::fol::{parse_partitioned, PartitionedFormula};
use keisler_core::measures::{counting, Measure};
use keisler_core::structures::{
    cyclic_group, dihedral_group, paley, quaternion_group, structure_from_json, symmetric_group_s3, FiniteStructure,
    GroupTable,
};
use keisler_core::BigRational;

use crate::report::UsageError;

fn read(path: &Path) -> Result<String, UsageError> {
    std::fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// Structure file (JSON)
    #[arg(long, visible_alias = "table")]
    pub input: Option<PathBuf>,
    /// Use the Paley graph of order q
    #[arg(long)]
    pub q: Option<u64>,
}

impl Source {
    pub fn load(&self) -> Result<Arc<FiniteStructure>, UsageError> {
        match (&self.input, self.q) {
            (Some(path), None) => Ok(Arc::new(structure_from_json(&read(path)?)?)),
            (None, Some(q)) => Ok(Arc::new(paley(q)?)),
            _ => Err(UsageError("give exactly one of --input or --q".into())),
        }
    }

    pub fn describe(&self) -> String {
        match (&self.input, self.q) {
            (Some(p), _) => p.display().to_string(),
            (None, Some(q)) => format!("paley({q})"),
            _ => String::new(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GroupSource {
    /// Group structure file interpreting mul/2, inv/1 and e
    #[arg(long, visible_alias = "table")]
    pub input: Option<PathBuf>,
    /// Built-in group: cyclic:N, dihedral:N (order 2N), q8 or s3
    #[arg(long)]
    pub group: Option<String>,
}

impl GroupSource {
    pub fn load(&self) -> Result<GroupTable, UsageError> {
        match (&self.input, &self.group) {
            (Some(path), None) => Ok(GroupTable::from_structure(structure_from_json(&read(path)?)?)?),
            (None, Some(name)) => named_group(name),
            _ => Err(UsageError("give exactly one of --table or --group".into())),
        }
    }

    pub fn describe(&self) -> String {
        match (&self.input, &self.group) {
            (Some(p), _) => p.display().to_string(),
            (None, Some(g)) => g.clone(),
            _ => String::new(),
        }
    }
}

pub fn named_group(name: &str) -> Result<GroupTable, UsageError> {
    let order = |s: &str| s.parse::<usize>().map_err(|_| UsageError(format!("bad group size `{s}`")));
    Ok(match name.split_once(':') {
        Some(("cyclic", n)) => cyclic_group(order(n)?)?,
        Some(("dihedral", n)) => dihedral_group(order(n)?)?,
        None if name == "q8" => quaternion_group(),
        None if name == "s3" => symmetric_group_s3(),
        _ => return Err(UsageError(format!("unknown group `{name}`"))),
    })
}

#[derive(Debug, Clone, Args)]
pub struct FormulaArgs {
    /// Formula, optionally prefixed by a partition `[x1,x2 ; y1]`
    #[arg(long)]
    pub formula: Option<String>,
    /// Object variables when the formula has no partition annotation
    #[arg(long, value_delimiter = ',', default_value = "x")]
    pub objects: Vec<String>,
}

impl FormulaArgs {
    pub fn parse(&self, m: &FiniteStructure) -> Result<PartitionedFormula, UsageError> {
        let text = self.formula.as_deref().ok_or_else(|| UsageError("--formula is required".into()))?;
        parse_with(text, m, &self.objects)
    }
}

pub fn parse_with(text: &str, m: &FiniteStructure, objects: &[String]) -> Result<PartitionedFormula, UsageError> {
    let objs: Vec<&str> = objects.iter().map(String::as_str).collect();
    Ok(parse_partitioned(text, m.signature(), &objs)?)
}

/// The measure in `path`, or the counting measure in `arity` variables.
pub fn measure_or_counting(path: Option<&Path>, m: &Arc<FiniteStructure>, arity: usize) -> Result<Measure, UsageError> {
    let mu = match path {
        Some(p) => Measure::from_json(m.clone(), &read(p)?)?,
        None => counting(m.clone(), arity),
    };
    if mu.arity() != arity {
        return Err(UsageError(format!("measure has {} variables, formula needs {arity}", mu.arity())));
    }
    Ok(mu)
}

pub fn load_measure(path: &Path, m: &Arc<FiniteStructure>) -> Result<Measure, UsageError> {
    Ok(Measure::from_json(m.clone(), &read(path)?)?)
}

pub fn rational(text: &str) -> Result<BigRational, UsageError> {
    Ok(parse_rational(text)?)
}

/// `"0,1;2,3"` into `[[0, 1], [2, 3]]`.
pub fn tuples(text: &str) -> Result<Vec<Vec<usize>>, UsageError> {
    text.split(';')
        .map(|t| elements(t.trim()))
        .collect()
}

pub fn elements(text: &str) -> Result<Vec<usize>, UsageError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|e| e.trim().parse::<usize>().map_err(|_| UsageError(format!("`{e}` is not an element"))))
        .collect()
}
