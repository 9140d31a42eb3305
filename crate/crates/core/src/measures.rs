//! Finitely supported Keisler measures with exact rational weights, and the
//! three ways of combining them: the product measure, the Morley product
//! (integrating the definability map of the left measure against the right
//! one) and convolution on a finite group.
//!
//! Over a finite structure every type is realized, so every measure is a
//! convex combination of Dirac measures and is stored as an explicit table.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::exact::{format_rational, from_usize, parse_rational};
use crate::fol::{Evaluator, FolError, Formula, PartitionedFormula, Term};
use crate::structures::{FiniteStructure, GroupTable};
use crate::tuples::TupleIter;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("a measure needs at least one point")]
    Empty,
    #[error("point {point:?} lies outside the universe of size {size}")]
    OutOfRange { point: Vec<usize>, size: usize },
    #[error("point {point:?} has length {found}, expected {expected}")]
    PointArity {
        point: Vec<usize>,
        expected: usize,
        found: usize,
    },
    #[error("weights sum to {0}, not 1")]
    NotNormalized(String),
    #[error("negative weight {0}")]
    NegativeWeight(String),
    #[error("{weights} weights for {measures} measures")]
    WeightCount { weights: usize, measures: usize },
    #[error("measures live on different structures")]
    StructureMismatch,
    #[error("variable arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("convolution needs single-variable measures on the group's own structure")]
    NotOnGroup,
    #[error(transparent)]
    Formula(#[from] FolError),
    #[error("malformed measure file: {0}")]
    Format(String),
}

/// A probability measure on `k`-tuples of a finite structure. Only points
/// with strictly positive weight are stored; the weights sum to exactly one.
#[derive(Debug, Clone)]
pub struct Measure {
    structure: Arc<FiniteStructure>,
    arity: usize,
    weights: BTreeMap<Vec<usize>, BigRational>,
}

impl PartialEq for Measure {
    fn eq(&self, other: &Self) -> bool {
        same_structure(&self.structure, &other.structure) && self.arity == other.arity && self.weights == other.weights
    }
}

impl Eq for Measure {}

pub(crate) fn same_structure(a: &Arc<FiniteStructure>, b: &Arc<FiniteStructure>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Measure {
    /// Builds a measure from weighted points. Repeated points accumulate and
    /// zero weights are dropped.
    pub fn from_weights<I>(structure: Arc<FiniteStructure>, arity: usize, atoms: I) -> Result<Self, MeasureError>
    where
        I: IntoIterator<Item = (Vec<usize>, BigRational)>,
    {
        let mut weights: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
        let mut total = BigRational::zero();
        for (point, w) in atoms {
            check_point(&structure, arity, &point)?;
            if w.is_negative() {
                return Err(MeasureError::NegativeWeight(format_rational(&w)));
            }
            total += &w;
            if !w.is_zero() {
                *weights.entry(point).or_insert_with(BigRational::zero) += w;
            }
        }
        if weights.is_empty() && total.is_zero() {
            return Err(MeasureError::Empty);
        }
        if !total.is_one() {
            return Err(MeasureError::NotNormalized(format_rational(&total)));
        }
        Ok(Self {
            structure,
            arity,
            weights,
        })
    }

    pub fn structure(&self) -> &Arc<FiniteStructure> {
        &self.structure
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn weights(&self) -> &BTreeMap<Vec<usize>, BigRational> {
        &self.weights
    }

    pub fn weight(&self, point: &[usize]) -> BigRational {
        self.weights.get(point).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.weights.keys()
    }

    pub fn total(&self) -> BigRational {
        self.weights.values().fold(BigRational::zero(), |acc, w| acc + w)
    }

    /// Compiles `phi` with this measure's object variables followed by its
    /// parameters as inputs.
    pub(crate) fn compile<'m>(&'m self, phi: &PartitionedFormula) -> Result<Evaluator<'m>, MeasureError> {
        if phi.object_arity() != self.arity {
            return Err(MeasureError::ArityMismatch {
                expected: self.arity,
                found: phi.object_arity(),
            });
        }
        phi.formula().check(self.structure.signature()).map_err(|e| match e {
            FolError::Undeclared(s) | FolError::SymbolMisuse(s) => FolError::SignatureMismatch(s),
            other => other,
        })?;
        Ok(Evaluator::new(&self.structure, phi.formula(), &phi.variables())?)
    }

    /// Mass of `{a : phi(a, params)}` for a compiled formula.
    pub(crate) fn mass(&self, ev: &Evaluator<'_>, params: &[usize]) -> BigRational {
        let mut input = vec![0; self.arity + params.len()];
        input[self.arity..].copy_from_slice(params);
        let mut sum = BigRational::zero();
        for (a, w) in &self.weights {
            input[..self.arity].copy_from_slice(a);
            if ev.eval(&input) {
                sum += w;
            }
        }
        sum
    }

    pub(crate) fn check_params(&self, phi: &PartitionedFormula, params: &[usize]) -> Result<(), MeasureError> {
        if params.len() != phi.param_arity() {
            return Err(FolError::ValueCount {
                what: "parameters",
                expected: phi.param_arity(),
                found: params.len(),
            }
            .into());
        }
        let size = self.structure.size();
        match params.iter().find(|&&e| e >= size) {
            Some(&element) => Err(FolError::OutOfRange { element, size }.into()),
            None => Ok(()),
        }
    }

    /// Pushes the measure forward along a choice of coordinates.
    pub fn marginal(&self, coordinates: &[usize]) -> Result<Measure, MeasureError> {
        if let Some(&c) = coordinates.iter().find(|&&c| c >= self.arity) {
            return Err(MeasureError::ArityMismatch {
                expected: self.arity,
                found: c + 1,
            });
        }
        let atoms = self
            .weights
            .iter()
            .map(|(p, w)| (coordinates.iter().map(|&c| p[c]).collect(), w.clone()));
        Measure::from_weights(self.structure.clone(), coordinates.len(), atoms)
    }

    /// Moves the first `left` coordinates after the rest: `(a, b) -> (b, a)`.
    pub fn swap_blocks(&self, left: usize) -> Result<Measure, MeasureError> {
        let left = left.min(self.arity);
        let order: Vec<usize> = (left..self.arity).chain(0..left).collect();
        self.marginal(&order)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "variable_arity": self.arity,
            "atoms": self.weights.iter().map(|(p, w)| json!({"point": p, "weight": format_rational(w)})).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(structure: Arc<FiniteStructure>, text: &str) -> Result<Self, MeasureError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Atom {
            point: Vec<usize>,
            weight: String,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            variable_arity: usize,
            atoms: Vec<Atom>,
        }
        let file: File = serde_json::from_str(text).map_err(|e| MeasureError::Format(e.to_string()))?;
        let atoms = file
            .atoms
            .into_iter()
            .map(|a| Ok((a.point, parse_rational(&a.weight).map_err(|e| MeasureError::Format(e.to_string()))?)))
            .collect::<Result<Vec<_>, MeasureError>>()?;
        Measure::from_weights(structure, file.variable_arity, atoms)
    }
}

fn check_point(m: &FiniteStructure, arity: usize, point: &[usize]) -> Result<(), MeasureError> {
    if point.len() != arity {
        return Err(MeasureError::PointArity {
            point: point.to_vec(),
            expected: arity,
            found: point.len(),
        });
    }
    if point.iter().any(|&e| e >= m.size()) {
        return Err(MeasureError::OutOfRange {
            point: point.to_vec(),
            size: m.size(),
        });
    }
    Ok(())
}

/// Dirac measure at a realized tuple.
pub fn dirac(structure: Arc<FiniteStructure>, point: &[usize]) -> Result<Measure, MeasureError> {
    let arity = point.len();
    Measure::from_weights(structure, arity, [(point.to_vec(), BigRational::one())])
}

/// `Av(a_1, ..., a_n)`: each listed point weighs its multiplicity over `n`.
pub fn average(structure: Arc<FiniteStructure>, points: &[Vec<usize>]) -> Result<Measure, MeasureError> {
    let first = points.first().ok_or(MeasureError::Empty)?;
    let share = BigRational::new(BigInt::one(), BigInt::from(points.len()));
    Measure::from_weights(structure, first.len(), points.iter().map(|p| (p.clone(), share.clone())))
}

/// `sum r_i mu_i` for positive rationals `r_i` summing to one.
pub fn convex(weights: &[BigRational], measures: &[Measure]) -> Result<Measure, MeasureError> {
    if weights.len() != measures.len() {
        return Err(MeasureError::WeightCount {
            weights: weights.len(),
            measures: measures.len(),
        });
    }
    let first = measures.first().ok_or(MeasureError::Empty)?;
    if let Some(w) = weights.iter().find(|w| w.is_negative()) {
        return Err(MeasureError::NegativeWeight(format_rational(w)));
    }
    let total = weights.iter().fold(BigRational::zero(), |a, w| a + w);
    if !total.is_one() {
        return Err(MeasureError::NotNormalized(format_rational(&total)));
    }
    for m in measures {
        if !same_structure(&m.structure, &first.structure) {
            return Err(MeasureError::StructureMismatch);
        }
        if m.arity != first.arity {
            return Err(MeasureError::ArityMismatch {
                expected: first.arity,
                found: m.arity,
            });
        }
    }
    let atoms = weights
        .iter()
        .zip(measures)
        .flat_map(|(r, m)| m.weights.iter().map(move |(p, w)| (p.clone(), r * w)));
    Measure::from_weights(first.structure.clone(), first.arity, atoms)
}

/// Uniform measure on all `arity`-tuples.
pub fn counting(structure: Arc<FiniteStructure>, arity: usize) -> Measure {
    let count = TupleIter::new(structure.size(), arity).count();
    let share = BigRational::new(BigInt::one(), BigInt::from(count));
    let atoms: Vec<_> = TupleIter::new(structure.size(), arity).map(|t| (t, share.clone())).collect();
    Measure::from_weights(structure, arity, atoms).expect("uniform weights are normalized")
}

/// `mu(phi(x, params))`.
pub fn measure_of(mu: &Measure, phi: &PartitionedFormula, params: &[usize]) -> Result<BigRational, MeasureError> {
    let ev = mu.compile(phi)?;
    mu.check_params(phi, params)?;
    Ok(mu.mass(&ev, params))
}

fn check_same(mu: &Measure, nu: &Measure) -> Result<(), MeasureError> {
    if same_structure(&mu.structure, &nu.structure) {
        Ok(())
    } else {
        Err(MeasureError::StructureMismatch)
    }
}

/// The product measure on `xy`: weight of `(a, b)` is `mu(a) nu(b)`.
pub fn product(mu: &Measure, nu: &Measure) -> Result<Measure, MeasureError> {
    check_same(mu, nu)?;
    let atoms = mu.weights.iter().flat_map(|(a, wa)| {
        nu.weights.iter().map(move |(b, wb)| {
            let mut p = a.clone();
            p.extend_from_slice(b);
            (p, wa * wb)
        })
    });
    Measure::from_weights(mu.structure.clone(), mu.arity + nu.arity, atoms)
}

/// Morley product value `(mu (x) nu)(phi(x, y, c))`: the integral over `nu`
/// of `b -> mu(phi(x, b, c))`. The formula's parameters are `y` (one per
/// coordinate of `nu`) followed by the extra parameters `c`.
pub fn morley(mu: &Measure, nu: &Measure, phi: &PartitionedFormula, extra: &[usize]) -> Result<BigRational, MeasureError> {
    check_same(mu, nu)?;
    let expected = nu.arity + extra.len();
    if phi.param_arity() != expected {
        return Err(MeasureError::ArityMismatch {
            expected,
            found: phi.param_arity(),
        });
    }
    let ev = mu.compile(phi)?;
    let mut params = vec![0; expected];
    params[nu.arity..].copy_from_slice(extra);
    mu.check_params(phi, &params)?;
    let mut total = BigRational::zero();
    for (b, w) in &nu.weights {
        params[..nu.arity].copy_from_slice(b);
        let inner = mu.mass(&ev, &params);
        if !inner.is_zero() {
            total += inner * w;
        }
    }
    Ok(total)
}

/// The point formula `x = c & y = d` with objects `x`, parameters `y, c, d`.
fn point_formula(k: usize, l: usize) -> PartitionedFormula {
    let xs: Vec<String> = (0..k).map(|i| format!("x{i}")).collect();
    let ys: Vec<String> = (0..l).map(|i| format!("y{i}")).collect();
    let cs: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
    let ds: Vec<String> = (0..l).map(|i| format!("d{i}")).collect();
    let eqs = xs.iter().zip(&cs).chain(ys.iter().zip(&ds)).map(|(v, p)| Formula::Eq(Term::var(v), Term::var(p)));
    // x0 = x0 stands in for the empty conjunction
    let body = Formula::conjunction(eqs).unwrap_or_else(|| Formula::eq_vars("x0", "x0"));
    let params = ys.into_iter().chain(cs).chain(ds).collect();
    PartitionedFormula::new(body, xs, params).expect("fresh variable names")
}

/// The Morley product as a measure on `xy`, assembled point by point from
/// [`morley`] applied to the formulas `x = c & y = d`. It never multiplies
/// weights of `mu` and `nu` directly, so comparing it with [`product`] is a
/// genuine check.
pub fn morley_measure(mu: &Measure, nu: &Measure) -> Result<Measure, MeasureError> {
    check_same(mu, nu)?;
    let phi = point_formula(mu.arity, nu.arity);
    let mut atoms = Vec::new();
    for c in mu.weights.keys() {
        for d in nu.weights.keys() {
            let extra: Vec<usize> = c.iter().chain(d).copied().collect();
            let w = morley(mu, nu, &phi, &extra)?;
            let point = extra;
            atoms.push((point, w));
        }
    }
    Measure::from_weights(mu.structure.clone(), mu.arity + nu.arity, atoms)
}

/// `(mu * nu)(c) = sum over ab = c of mu(a) nu(b)`.
pub fn convolution(group: &GroupTable, mu: &Measure, nu: &Measure) -> Result<Measure, MeasureError> {
    for m in [mu, nu] {
        if m.arity != 1 || !same_structure(&m.structure, group.structure()) {
            return Err(MeasureError::NotOnGroup);
        }
    }
    let mut out: BTreeMap<usize, BigRational> = BTreeMap::new();
    for (a, wa) in &mu.weights {
        for (b, wb) in &nu.weights {
            *out.entry(group.mul(a[0], b[0])).or_insert_with(BigRational::zero) += wa * wb;
        }
    }
    Measure::from_weights(group.structure().clone(), 1, out.into_iter().map(|(c, w)| (vec![c], w)))
}

/// Total variation distance `1/2 sum |mu(a) - nu(a)|`.
pub fn tv_distance(mu: &Measure, nu: &Measure) -> Result<BigRational, MeasureError> {
    check_same(mu, nu)?;
    if mu.arity != nu.arity {
        return Err(MeasureError::ArityMismatch {
            expected: mu.arity,
            found: nu.arity,
        });
    }
    let mut sum = BigRational::zero();
    for (p, w) in &mu.weights {
        sum += (w - nu.weight(p)).abs();
    }
    for (p, w) in &nu.weights {
        if !mu.weights.contains_key(p) {
            sum += w;
        }
    }
    Ok(sum / from_usize(2))
}

/// A random convex measure with between 1 and `max_atoms` atoms and small
/// integer weights, normalized.
pub fn random_measure<R: Rng>(structure: Arc<FiniteStructure>, arity: usize, max_atoms: usize, rng: &mut R) -> Measure {
    let atoms = rng.random_range(1..=max_atoms.max(1));
    let raw: Vec<(Vec<usize>, u64)> = (0..atoms)
        .map(|_| {
            let point = (0..arity).map(|_| rng.random_range(0..structure.size())).collect();
            (point, rng.random_range(1..=9))
        })
        .collect();
    let total: u64 = raw.iter().map(|(_, w)| w).sum();
    let atoms = raw
        .into_iter()
        .map(|(p, w)| (p, BigRational::new(BigInt::from(w), BigInt::from(total))));
    Measure::from_weights(structure, arity, atoms).expect("normalized by construction")
}

/// Serializable summary of a measure for reports.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureSummary {
    pub variable_arity: usize,
    pub atoms: Vec<(Vec<usize>, crate::exact::ExactValue)>,
}

impl From<&Measure> for MeasureSummary {
    fn from(m: &Measure) -> Self {
        Self {
            variable_arity: m.arity,
            atoms: m.weights.iter().map(|(p, w)| (p.clone(), w.into())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;
    use crate::fol::{parse_partitioned, swap_partition};
    use crate::structures::{cyclic_group, paley};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(q: u64) -> Arc<FiniteStructure> {
        Arc::new(paley(q).unwrap())
    }

    fn formula(m: &FiniteStructure, text: &str) -> PartitionedFormula {
        parse_partitioned(text, m.signature(), &["x"]).unwrap()
    }

    #[test]
    fn dirac_values() {
        let m = p(5);
        let d = dirac(m.clone(), &[0]).unwrap();
        assert_eq!(measure_of(&d, &formula(&m, "R(x,y)"), &[1]).unwrap(), ratio(1, 1));
        assert_eq!(measure_of(&d, &formula(&m, "x = y"), &[0]).unwrap(), ratio(1, 1));
        assert_eq!(measure_of(&d, &formula(&m, "!(x = y)"), &[0]).unwrap(), ratio(0, 1));
        assert!(matches!(dirac(m, &[5]), Err(MeasureError::OutOfRange { .. })));
    }

    #[test]
    fn average_values() {
        let m = p(5);
        assert_eq!(average(m.clone(), &[vec![3]]).unwrap(), dirac(m.clone(), &[3]).unwrap());
        let av = average(m.clone(), &[vec![0], vec![1]]).unwrap();
        // 1 ~ 2 but 0 is not adjacent to 2
        assert_eq!(measure_of(&av, &formula(&m, "R(x,y)"), &[2]).unwrap(), ratio(1, 2));
        let rep = average(m.clone(), &[vec![0], vec![0], vec![1]]).unwrap();
        assert_eq!(rep.weight(&[0]), ratio(2, 3));
        assert_eq!(average(m, &[]).unwrap_err(), MeasureError::Empty);
    }

    #[test]
    fn convex_combinations() {
        let m = p(5);
        let mu = counting(m.clone(), 1);
        assert_eq!(convex(&[ratio(1, 1)], std::slice::from_ref(&mu)).unwrap(), mu);
        let (da, db) = (dirac(m.clone(), &[1]).unwrap(), dirac(m.clone(), &[3]).unwrap());
        assert_eq!(
            convex(&[ratio(1, 2), ratio(1, 2)], &[da.clone(), db.clone()]).unwrap(),
            average(m, &[vec![1], vec![3]]).unwrap()
        );
        assert!(matches!(
            convex(&[ratio(1, 2), ratio(1, 3)], &[da.clone(), db.clone()]),
            Err(MeasureError::NotNormalized(_))
        ));
        assert!(matches!(
            convex(&[ratio(3, 2), ratio(-1, 2)], &[da, db]),
            Err(MeasureError::NegativeWeight(_))
        ));
    }

    #[test]
    fn counting_values() {
        for (q, value) in [(13, ratio(6, 13)), (5, ratio(2, 5))] {
            let m = p(q);
            let mu = counting(m.clone(), 1);
            let phi = formula(&m, "R(x,y)");
            for b in 0..q as usize {
                assert_eq!(measure_of(&mu, &phi, &[b]).unwrap(), value);
            }
            assert_eq!(measure_of(&mu, &formula(&m, "x = x"), &[]).unwrap(), ratio(1, 1));
        }
    }

    #[test]
    fn common_neighbours_in_paley13() {
        let m = p(13);
        let mu = counting(m.clone(), 1);
        let phi = formula(&m, "[x ; b, c] R(x,b) & R(x,c)");
        // brute-force neighbour intersection
        let n = 13;
        for b in 0..n {
            for c in 0..n {
                if !m.holds("R", &[b, c]) {
                    continue;
                }
                let common = (0..n).filter(|&x| m.holds("R", &[x, b]) && m.holds("R", &[x, c])).count();
                assert_eq!(common, 2);
                assert_eq!(measure_of(&mu, &phi, &[b, c]).unwrap(), ratio(2, 13));
            }
        }
    }

    #[test]
    fn variable_mismatch() {
        let m = p(5);
        let mu = counting(m.clone(), 2);
        let phi = formula(&m, "R(x,y)");
        assert!(matches!(measure_of(&mu, &phi, &[0]), Err(MeasureError::ArityMismatch { .. })));
        let mu = counting(m.clone(), 1);
        assert!(matches!(measure_of(&mu, &phi, &[]), Err(MeasureError::Formula(FolError::ValueCount { .. }))));
    }

    #[test]
    fn products() {
        let m = p(5);
        let (a, b) = (dirac(m.clone(), &[1]).unwrap(), dirac(m.clone(), &[4]).unwrap());
        assert_eq!(product(&a, &b).unwrap(), dirac(m.clone(), &[1, 4]).unwrap());

        let c = counting(m.clone(), 1);
        let prod = product(&c, &c).unwrap();
        let r = parse_partitioned("[x, y ;] R(x,y)", m.signature(), &[]).unwrap();
        // 10 ordered edges out of 25 pairs
        assert_eq!(measure_of(&prod, &r, &[]).unwrap(), ratio(2, 5));
        assert_eq!(prod.marginal(&[0]).unwrap(), c);
        assert_eq!(prod.marginal(&[1]).unwrap(), c);

        let other = Arc::new(paley(13).unwrap());
        assert_eq!(product(&c, &counting(other, 1)).unwrap_err(), MeasureError::StructureMismatch);
    }

    #[test]
    fn morley_values() {
        let m = p(13);
        let phi = formula(&m, "[x ; y] R(x,y)");
        let (a, b) = (dirac(m.clone(), &[0]).unwrap(), dirac(m.clone(), &[1]).unwrap());
        assert_eq!(morley(&a, &b, &phi, &[]).unwrap(), ratio(1, 1));
        let c = counting(m.clone(), 1);
        assert_eq!(morley(&c, &c, &phi, &[]).unwrap(), ratio(6, 13));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let phi = formula(&m, "[x ; y] R(x,y) & (exists z. R(z,x) & !R(z,y))");
        for _ in 0..100 {
            let mu = random_measure(m.clone(), 1, 4, &mut rng);
            let nu = random_measure(m.clone(), 1, 4, &mut rng);
            let left = morley(&mu, &nu, &phi, &[]).unwrap();
            let right = morley(&nu, &mu, &swap_partition(&phi), &[]).unwrap();
            assert_eq!(left, right);
        }
    }

    #[test]
    fn morley_measure_equals_product() {
        let m = p(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mu = random_measure(m.clone(), 1, 4, &mut rng);
            let nu = random_measure(m.clone(), 2, 4, &mut rng);
            let mm = morley_measure(&mu, &nu).unwrap();
            assert_eq!(mm, product(&mu, &nu).unwrap());
            assert_eq!(morley_measure(&nu, &mu).unwrap().swap_blocks(2).unwrap(), mm);
        }
    }

    #[test]
    fn convolution_basics() {
        let z4 = cyclic_group(4).unwrap();
        let g = z4.structure().clone();
        let d = |a: usize| dirac(g.clone(), &[a]).unwrap();
        assert_eq!(convolution(&z4, &d(1), &d(2)).unwrap(), d(3));
        let h = average(g.clone(), &[vec![0], vec![2]]).unwrap();
        assert_eq!(convolution(&z4, &h, &h).unwrap(), h);

        let z2 = cyclic_group(2).unwrap();
        let half = average(z2.structure().clone(), &[vec![0], vec![1]]).unwrap();
        assert_eq!(convolution(&z2, &half, &half).unwrap(), counting(z2.structure().clone(), 1));
        assert_eq!(convolution(&z2, &half, &h).unwrap_err(), MeasureError::NotOnGroup);
    }

    #[test]
    fn total_variation() {
        let z2 = cyclic_group(2).unwrap();
        let g = z2.structure().clone();
        let (d0, d1) = (dirac(g.clone(), &[0]).unwrap(), dirac(g.clone(), &[1]).unwrap());
        let u = counting(g, 1);
        assert_eq!(tv_distance(&u, &u).unwrap(), ratio(0, 1));
        assert_eq!(tv_distance(&d0, &d1).unwrap(), ratio(1, 1));
        assert_eq!(tv_distance(&d0, &u).unwrap(), ratio(1, 2));
        assert_eq!(tv_distance(&u, &d0).unwrap(), ratio(1, 2));
    }

    #[test]
    fn json_round_trip() {
        let m = p(5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mu = random_measure(m.clone(), 2, 4, &mut rng);
        let text = mu.to_json().to_string();
        assert_eq!(Measure::from_json(m.clone(), &text).unwrap(), mu);
        let bad = r#"{"variable_arity": 1, "atoms": [{"point": [0], "weight": "1/3"}]}"#;
        assert!(matches!(Measure::from_json(m, bad), Err(MeasureError::NotNormalized(_))));
    }
}
