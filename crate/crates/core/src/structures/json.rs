//! Structure files:
//!
//! ```json
//! {"signature": {"relations": {"R": 2}, "functions": {"mul": 2}, "constants": ["e"]},
//!  "universe": 4,
//!  "relations": {"R": [[0, 1], [1, 0]]},
//!  "functions": {"mul": [[0, 1, 2, 3], ...]},
//!  "constants": {"e": 0}}
//! ```
//!
//! Function tables are nested row-major arrays, one nesting level per argument.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{json, Value};

use super::{FiniteStructure, StructureError};
use crate::fol::Signature;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SignatureFile {
    #[serde(default)]
    relations: BTreeMap<String, usize>,
    #[serde(default)]
    functions: BTreeMap<String, usize>,
    #[serde(default)]
    constants: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureFile {
    signature: SignatureFile,
    universe: usize,
    #[serde(default)]
    relations: BTreeMap<String, Vec<Vec<usize>>>,
    #[serde(default)]
    functions: BTreeMap<String, Value>,
    #[serde(default)]
    constants: BTreeMap<String, usize>,
}

fn flatten_table(name: &str, value: &Value, depth: usize, n: usize, out: &mut Vec<usize>) -> Result<(), StructureError> {
    let bad = |msg: String| StructureError::BadTable {
        symbol: name.to_string(),
        msg,
    };
    if depth == 0 {
        let e = value.as_u64().ok_or_else(|| bad(format!("expected an element, found {value}")))?;
        out.push(usize::try_from(e).map_err(|_| bad(format!("element {e} too large")))?);
        return Ok(());
    }
    let rows = value.as_array().ok_or_else(|| bad(format!("expected an array, found {value}")))?;
    if rows.len() != n {
        return Err(bad(format!("array has {} entries, expected {n}", rows.len())));
    }
    rows.iter().try_for_each(|r| flatten_table(name, r, depth - 1, n, out))
}

fn nest_table(values: &[usize], depth: usize, n: usize) -> Value {
    if depth <= 1 {
        return json!(values);
    }
    let chunk = values.len() / n;
    Value::Array(values.chunks(chunk).map(|c| nest_table(c, depth - 1, n)).collect())
}

pub fn structure_from_json(text: &str) -> Result<FiniteStructure, StructureError> {
    let file: StructureFile = serde_json::from_str(text).map_err(|e| StructureError::Format(e.to_string()))?;
    let mut sig = Signature::new();
    for (name, &arity) in &file.signature.relations {
        sig.add_relation(name, arity)?;
    }
    for (name, &arity) in &file.signature.functions {
        sig.add_function(name, arity)?;
    }
    for name in &file.signature.constants {
        sig.add_constant(name)?;
    }
    let n = file.universe;
    let mut builder = FiniteStructure::builder(sig.clone(), n);
    for (name, tuples) in file.relations {
        builder = builder.relation(&name, tuples);
    }
    for (name, table) in &file.functions {
        let arity = *sig.functions().get(name).ok_or_else(|| StructureError::Undeclared(name.clone()))?;
        let mut flat = Vec::new();
        flatten_table(name, table, arity, n, &mut flat)?;
        builder = builder.function(name, flat);
    }
    for (name, e) in file.constants {
        builder = builder.constant(&name, e);
    }
    builder.build()
}

pub fn structure_to_json(m: &FiniteStructure) -> Value {
    let sig = m.signature();
    json!({
        "signature": {
            "relations": sig.relations(),
            "functions": sig.functions(),
            "constants": sig.constants(),
        },
        "universe": m.size(),
        "relations": m.relations().iter().map(|(k, r)| (k.clone(), json!(r.tuples()))).collect::<BTreeMap<_, _>>(),
        "functions": m
            .functions()
            .iter()
            .map(|(k, f)| (k.clone(), nest_table(f.values(), f.arity(), m.size())))
            .collect::<BTreeMap<_, _>>(),
        "constants": m.constants(),
    })
}
