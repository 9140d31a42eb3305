//! Tail-stability diagnostics along sequences of finite structures.
//!
//! An ultralimit is not computable, so reports use a stand-in: a quantity
//! is evaluated exactly at every index, and for each tolerance `eps` the
//! report gives the least index from which all later values lie within
//! `eps` of each other. Whenever the tail stabilizes, the limit along any
//! non-principal ultrafilter lies in the reported band.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::defnlab::{definability_table, DefnError};
use crate::exact::{format_rational, from_usize, is_probability, ExactValue};
use crate::fol::{evaluate, Assignment, FolError, Formula, PartitionedFormula};
use crate::measures::{counting, morley, random_measure, MeasureError};
use crate::structures::{
    extension_property, paley, sole_binary_relation, structure_from_json, FiniteStructure, StructureError,
    StructureSequence,
};

/// Atoms per random comparison measure in Morley quantities; matches the
/// obstruction report so both reproduce the same values for one seed.
pub const MORLEY_MAX_ATOMS: usize = 8;

pub const ULTRAFILTER_NOTE: &str =
    "the limit along a non-principal ultrafilter agrees with the stable value whenever the tail stabilizes";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeqError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Formula(#[from] FolError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Definability(#[from] DefnError),
    #[error("probability {0} is outside [0, 1]")]
    NotProbability(String),
    #[error("repeated parameter {0}")]
    RepeatedParameter(usize),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("sentence has free variables {0:?}")]
    NotSentence(Vec<String>),
}

/// What to compute at each index of a sequence.
#[derive(Debug, Clone)]
pub enum Quantity {
    /// 1 if the sentence holds, else 0.
    Sentence(Formula),
    /// Counting measure of `phi(x; b)` at the canonical `b = (0, ..., 0)`;
    /// the report also carries min/max over `b` when it is not constant.
    Counting(PartitionedFormula),
    /// `mu ⊗ nu (phi)` (or `nu ⊗ mu` when `counting_first` is false) with
    /// `mu` the counting measure and `nu` the first random measure drawn
    /// from `seed`.
    Morley {
        formula: PartitionedFormula,
        seed: u64,
        counting_first: bool,
    },
    /// 1 if the `(s, t)` extension axiom holds, else 0.
    Extension { s: usize, t: usize },
}

impl Quantity {
    pub fn label(&self) -> String {
        match self {
            Quantity::Sentence(f) => format!("truth of {f}"),
            Quantity::Counting(f) => format!("counting measure of {f}"),
            Quantity::Morley {
                formula,
                seed,
                counting_first,
            } => {
                let order = if *counting_first { "counting ⊗ nu" } else { "nu ⊗ counting" };
                format!("{order} of {formula} (nu seed {seed})")
            }
            Quantity::Extension { s, t } => format!("extension property ({s}, {t})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexValue {
    pub label: u64,
    pub value: ExactValue,
    /// Present when a canonical-parameter value was not constant in `b`.
    pub min: Option<ExactValue>,
    pub max: Option<ExactValue>,
    #[serde(skip)]
    pub exact: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stability {
    pub epsilon: ExactValue,
    /// `None` means unstable at this horizon.
    pub index: Option<usize>,
    /// Reals within `eps` of every tail value; `None` when unstable.
    pub band: Option<(ExactValue, ExactValue)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceReport {
    pub quantity: String,
    pub values: Vec<IndexValue>,
    pub stability: Vec<Stability>,
    pub final_value: f64,
    pub note: &'static str,
}

impl SequenceReport {
    pub fn exact_values(&self) -> Vec<BigRational> {
        self.values.iter().map(|v| v.exact.clone()).collect()
    }
}

/// Least `N` such that the tail `values[N..]` has at least two entries and
/// spread (max minus min) below `eps`; `None` when no such `N` exists.
pub fn tail_stable(values: &[BigRational], eps: &BigRational) -> Option<usize> {
    if values.len() < 2 {
        return None;
    }
    // scan from the end, tracking the running spread
    let last = values.len() - 1;
    let (mut lo, mut hi) = (&values[last], &values[last]);
    let mut best = None;
    for i in (0..last).rev() {
        lo = lo.min(&values[i]);
        hi = hi.max(&values[i]);
        if &(hi - lo) < eps {
            best = Some(i);
        } else {
            break;
        }
    }
    best
}

/// `[max - eps, min + eps]` over the tail from `index`.
pub fn stable_band(values: &[BigRational], index: usize, eps: &BigRational) -> Option<(BigRational, BigRational)> {
    let tail = values.get(index..).filter(|t| !t.is_empty())?;
    let lo = tail.iter().min()?;
    let hi = tail.iter().max()?;
    Some((hi - eps, lo + eps))
}

fn stability(values: &[BigRational], eps: &BigRational) -> Stability {
    let index = tail_stable(values, eps);
    Stability {
        epsilon: eps.into(),
        index,
        band: index
            .and_then(|i| stable_band(values, i, eps))
            .map(|(a, b)| (ExactValue::from(a), ExactValue::from(b))),
    }
}

fn bool_value(b: bool) -> BigRational {
    if b {
        BigRational::one()
    } else {
        BigRational::zero()
    }
}

fn value_at(m: &Arc<FiniteStructure>, quantity: &Quantity) -> Result<(BigRational, Option<(BigRational, BigRational)>), SeqError> {
    Ok(match quantity {
        Quantity::Sentence(f) => {
            let free = f.free_vars();
            if !free.is_empty() {
                return Err(SeqError::NotSentence(free));
            }
            (bool_value(evaluate(m, f, &Assignment::new())?), None)
        }
        Quantity::Counting(phi) => {
            let table = definability_table(&counting(m.clone(), phi.object_arity()), phi)?;
            let canonical = table.value(&vec![0; phi.param_arity()]).cloned().unwrap_or_default();
            let range = match table.constant_value() {
                Some(_) => None,
                None => table.min_max().map(|(a, b)| (a.clone(), b.clone())),
            };
            (canonical, range)
        }
        Quantity::Morley {
            formula,
            seed,
            counting_first,
        } => {
            let mu = counting(m.clone(), formula.object_arity());
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let nu = random_measure(m.clone(), formula.param_arity(), MORLEY_MAX_ATOMS, &mut rng);
            let v = if *counting_first {
                morley(&mu, &nu, formula, &[])?
            } else {
                let swapped = crate::fol::swap_partition(formula);
                morley(&nu, &mu, &swapped, &[])?
            };
            (v, None)
        }
        Quantity::Extension { s, t } => (bool_value(extension_property(m, *s, *t)?), None),
    })
}

/// Evaluates `quantity` at every index and analyses the tail at each
/// tolerance in `epsilons`.
pub fn evaluate_along(seq: &StructureSequence, quantity: &Quantity, epsilons: &[BigRational]) -> Result<SequenceReport, SeqError> {
    let mut values = Vec::with_capacity(seq.len());
    for (label, m) in seq.iter() {
        let (v, range) = value_at(m, quantity)?;
        values.push(IndexValue {
            label,
            value: (&v).into(),
            min: range.as_ref().map(|(a, _)| a.into()),
            max: range.as_ref().map(|(_, b)| b.into()),
            exact: v,
        });
    }
    let exact: Vec<BigRational> = values.iter().map(|v| v.exact.clone()).collect();
    Ok(SequenceReport {
        quantity: quantity.label(),
        stability: epsilons.iter().map(|e| stability(&exact, e)).collect(),
        final_value: values.last().map_or(f64::NAN, |v| v.value.decimal),
        values,
        note: ULTRAFILTER_NOTE,
    })
}

/// `p^n (1 - p)^m`, the mass a coin with bias `p` gives to a pattern of `n`
/// required edges and `m` required non-edges.
pub fn coin_flip_target(p: &BigRational, n: u32, m: u32) -> Result<BigRational, SeqError> {
    if !is_probability(p) {
        return Err(SeqError::NotProbability(format_rational(p)));
    }
    let q = BigRational::one() - p;
    Ok(Pow::pow(p, n) * Pow::pow(&q, m))
}

/// The reciprocal form `(1/p)^n (1/(1-p))^m`, kept only for side-by-side
/// display; it exceeds 1 for every bias in `(0, 1)` with `n + m > 0`.
pub fn coin_flip_reciprocal(p: &BigRational, n: u32, m: u32) -> Option<BigRational> {
    let q = BigRational::one() - p;
    if p.is_zero() || q.is_zero() {
        return None;
    }
    Some(Pow::pow(p.recip(), n) * Pow::pow(q.recip(), m))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoinFlipReport {
    pub bias: ExactValue,
    pub n: u32,
    pub m: u32,
    pub unfair: bool,
    pub target: ExactValue,
    pub reciprocal_form: Option<ExactValue>,
    pub annotation: String,
}

pub fn coin_flip_report(p: &BigRational, n: u32, m: u32) -> Result<CoinFlipReport, SeqError> {
    let target = coin_flip_target(p, n, m)?;
    let reciprocal = coin_flip_reciprocal(p, n, m);
    Ok(CoinFlipReport {
        bias: p.into(),
        n,
        m,
        unfair: p != &BigRational::new(BigInt::from(1), BigInt::from(2)),
        target: (&target).into(),
        annotation: "target is p^n (1-p)^m; the reciprocal form (1/p)^n (1/(1-p))^m is not a probability and is shown for comparison only".into(),
        reciprocal_form: reciprocal.as_ref().map(ExactValue::from),
    })
}

/// Fraction of vertices `x` adjacent to every `a` in `adjacent` and to no `b`
/// in `non_adjacent`, under the counting measure.
pub fn empirical_pattern_density(m: &FiniteStructure, adjacent: &[usize], non_adjacent: &[usize]) -> Result<BigRational, SeqError> {
    let rel = sole_binary_relation(m)?;
    let mut seen = std::collections::BTreeSet::new();
    for &p in adjacent.iter().chain(non_adjacent) {
        m.check_element(p)?;
        if !seen.insert(p) {
            return Err(SeqError::RepeatedParameter(p));
        }
    }
    let count = (0..m.size())
        .filter(|&x| adjacent.iter().all(|&a| m.holds(rel, &[x, a])) && non_adjacent.iter().all(|&b| !m.holds(rel, &[x, b])))
        .count();
    Ok(BigRational::new(BigInt::from(count), BigInt::from(m.size())))
}

/// Parses a sequence manifest: a JSON array whose entries are a structure
/// file path, `{"paley": q}`, or `{"path": ...}`, each optionally with a
/// `"label"`. Paley entries default to label `q`, files to their position.
/// Relative paths resolve against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<StructureSequence, SeqError> {
    let bad = |msg: String| SeqError::Manifest(msg);
    let v: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let entries = v.as_array().ok_or_else(|| bad("expected a JSON array".into()))?;
    let load = |p: &str| -> Result<Arc<FiniteStructure>, SeqError> {
        let path: PathBuf = base.join(p);
        let text = std::fs::read_to_string(&path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Ok(Arc::new(structure_from_json(&text)?))
    };
    let mut out = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        let (default_label, m) = match e {
            Value::String(p) => (i as u64, load(p)?),
            Value::Object(o) => match (o.get("paley"), o.get("path")) {
                (Some(q), None) => {
                    let q = q.as_u64().ok_or_else(|| bad(format!("entry {i}: paley order must be a natural number")))?;
                    (q, Arc::new(paley(q)?))
                }
                (None, Some(Value::String(p))) => (i as u64, load(p)?),
                _ => return Err(bad(format!("entry {i}: expected exactly one of \"paley\" or \"path\""))),
            },
            _ => return Err(bad(format!("entry {i}: expected a string or an object"))),
        };
        let label = match e.get("label") {
            None => default_label,
            Some(l) => l.as_u64().ok_or_else(|| bad(format!("entry {i}: label must be a natural number")))?,
        };
        out.push((label, m));
    }
    Ok(StructureSequence::new(out)?)
}

pub fn load_manifest(path: &Path) -> Result<StructureSequence, SeqError> {
    let text = std::fs::read_to_string(path).map_err(|e| SeqError::Manifest(format!("{}: {e}", path.display())))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

/// `3 / sqrt(q)` bound helper for quasi-randomness checks: true when
/// `|value - target| * sqrt(q) < 3`, decided exactly by squaring.
pub fn within_quasi_random_bound(value: &BigRational, target: &BigRational, q: u64) -> bool {
    let d = value - target;
    &d * &d * from_usize(q as usize) < from_usize(9)
}
