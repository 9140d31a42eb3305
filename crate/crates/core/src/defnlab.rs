//! Definability tables `b -> mu(phi(x, b))`, their level-set buckets, the
//! floor/ceiling rounding step, integration of a table against a measure, and
//! the Paley-graph obstruction report.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{abs_diff, format_rational, from_usize, is_probability, ratio, ExactValue};
use crate::fol::{parse_partitioned, PartitionedFormula};
use crate::measures::{counting, morley, random_measure, same_structure, Measure, MeasureError};
use crate::structures::{paley, FiniteStructure, StructureError};
use crate::tuples::{tuple_at, tuple_count, tuple_index, TupleIter};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DefnError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("granularity must be at least 1")]
    ZeroGranularity,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parameter space of {0} tuples is too large to tabulate")]
    TooLarge(String),
}

/// The map `b -> mu(phi(x, b))` over every parameter tuple `b`, indexed in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefinabilityTable {
    formula: PartitionedFormula,
    structure: Arc<FiniteStructure>,
    values: Vec<BigRational>,
}

const MAX_TABLE: usize = 1 << 24;

impl DefinabilityTable {
    pub fn formula(&self) -> &PartitionedFormula {
        &self.formula
    }

    pub fn structure(&self) -> &Arc<FiniteStructure> {
        &self.structure
    }

    pub fn param_arity(&self) -> usize {
        self.formula.param_arity()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn value(&self, params: &[usize]) -> Option<&BigRational> {
        if params.len() != self.param_arity() || params.iter().any(|&e| e >= self.structure.size()) {
            return None;
        }
        self.values.get(tuple_index(params, self.structure.size()))
    }

    pub fn params_at(&self, index: usize) -> Vec<usize> {
        tuple_at(index, self.structure.size(), self.param_arity())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, &BigRational)> {
        TupleIter::new(self.structure.size(), self.param_arity()).zip(&self.values)
    }

    /// The table's value if it does not depend on the parameter.
    pub fn constant_value(&self) -> Option<&BigRational> {
        let first = self.values.first()?;
        self.values.iter().all(|v| v == first).then_some(first)
    }

    pub fn min_max(&self) -> Option<(&BigRational, &BigRational)> {
        Some((self.values.iter().min()?, self.values.iter().max()?))
    }
}

pub(crate) fn param_space(structure: &FiniteStructure, arity: usize) -> Result<usize, DefnError> {
    tuple_count(structure.size(), arity)
        .filter(|&c| c <= MAX_TABLE)
        .ok_or_else(|| DefnError::TooLarge(format!("{}^{}", structure.size(), arity)))
}

pub fn definability_table(mu: &Measure, phi: &PartitionedFormula) -> Result<DefinabilityTable, DefnError> {
    param_space(mu.structure(), phi.param_arity())?;
    let ev = mu.compile(phi)?;
    let values = mu.structure().tuples(phi.param_arity()).map(|b| mu.mass(&ev, &b)).collect();
    Ok(DefinabilityTable {
        formula: phi.clone(),
        structure: mu.structure().clone(),
        values,
    })
}

/// `sum_b nu(b) table[b]`.
pub fn integrate_table(table: &DefinabilityTable, nu: &Measure) -> Result<BigRational, DefnError> {
    if !same_structure(&table.structure, nu.structure()) {
        return Err(MeasureError::StructureMismatch.into());
    }
    if nu.arity() != table.param_arity() {
        return Err(MeasureError::ArityMismatch {
            expected: table.param_arity(),
            found: nu.arity(),
        }
        .into());
    }
    let n = table.structure.size();
    Ok(nu
        .weights()
        .iter()
        .fold(BigRational::zero(), |acc, (b, w)| acc + w * &table.values[tuple_index(b, n)]))
}

/// Level sets of a definability table at granularity `n`: bucket `i` holds
/// the parameters whose value lies strictly within `1/n` of `i/n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelBuckets {
    granularity: usize,
    /// Parameter indices (lexicographic) per bucket `0..=n`.
    buckets: Vec<Vec<usize>>,
}

/// Which of the three bucket conditions failed, and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BucketViolation {
    Uncovered { param: Vec<usize> },
    Inaccurate { bucket: usize, param: Vec<usize> },
    MissingNear { level: usize, param: Vec<usize> },
}

/// `|value - i/n| < 1/n`, i.e. `|n value - i| < 1`.
fn within_one_step(value: &BigRational, i: usize, n: usize) -> bool {
    abs_diff(&(value * from_usize(n)), &from_usize(i)) < BigRational::one()
}

impl LevelBuckets {
    pub fn granularity(&self) -> usize {
        self.granularity
    }

    pub fn bucket(&self, i: usize) -> &[usize] {
        &self.buckets[i]
    }

    pub fn buckets(&self) -> &[Vec<usize>] {
        &self.buckets
    }

    pub fn contains(&self, i: usize, param_index: usize) -> bool {
        self.buckets.get(i).is_some_and(|b| b.binary_search(&param_index).is_ok())
    }

    /// Re-checks, against `table`, that the buckets cover the parameter
    /// space, that membership in bucket `i` forces the value within `1/n` of
    /// `i/n`, and that a value within `1/n` of `k/n` lands in bucket
    /// `k - 1`, `k` or `k + 1`.
    pub fn verify(&self, table: &DefinabilityTable) -> Result<(), BucketViolation> {
        let n = self.granularity;
        for (idx, value) in table.values.iter().enumerate() {
            let member: Vec<usize> = (0..=n).filter(|&i| self.contains(i, idx)).collect();
            if member.is_empty() {
                return Err(BucketViolation::Uncovered {
                    param: table.params_at(idx),
                });
            }
            if let Some(&bucket) = member.iter().find(|&&i| !within_one_step(value, i, n)) {
                return Err(BucketViolation::Inaccurate {
                    bucket,
                    param: table.params_at(idx),
                });
            }
            for level in (0..=n).filter(|&k| within_one_step(value, k, n)) {
                if !member.iter().any(|&i| i + 1 >= level && i <= level + 1) {
                    return Err(BucketViolation::MissingNear {
                        level,
                        param: table.params_at(idx),
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn level_buckets(table: &DefinabilityTable, n: usize) -> Result<LevelBuckets, DefnError> {
    if n == 0 {
        return Err(DefnError::ZeroGranularity);
    }
    let mut buckets = vec![Vec::new(); n + 1];
    for (idx, value) in table.values.iter().enumerate() {
        for (i, bucket) in buckets.iter_mut().enumerate() {
            if within_one_step(value, i, n) {
                bucket.push(idx);
            }
        }
    }
    Ok(LevelBuckets {
        granularity: n,
        buckets,
    })
}

/// Which of `floor(r)/m` and `ceil(r)/m` lie strictly within `1/m` of `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundingChoice {
    pub floor: BigInt,
    pub ceil: BigInt,
    pub floor_ok: bool,
    pub ceil_ok: bool,
}

/// Given `|q - r/m| < 1/m`, reports which rounding of `r` keeps `q` within
/// `1/m`. At least one always does; that is re-verified here.
pub fn rounding_bucket(q: &BigRational, r: &BigRational, m: usize) -> Result<RoundingChoice, DefnError> {
    if m == 0 {
        return Err(DefnError::ZeroGranularity);
    }
    let m_r = from_usize(m);
    let step = BigRational::one() / &m_r;
    if abs_diff(q, &(r / &m_r)) >= step {
        return Err(DefnError::Precondition(format!(
            "|{} - {}/{m}| is not below 1/{m}",
            format_rational(q),
            format_rational(r)
        )));
    }
    let floor = r.numer().div_floor(r.denom());
    let ceil = r.numer().div_ceil(r.denom());
    let ok = |k: &BigInt| abs_diff(q, &(BigRational::from_integer(k.clone()) / &m_r)) < step;
    let choice = RoundingChoice {
        floor_ok: ok(&floor),
        ceil_ok: ok(&ceil),
        floor,
        ceil,
    };
    if !(choice.floor_ok || choice.ceil_ok) {
        return Err(DefnError::Precondition("neither rounding is within 1/m".into()));
    }
    Ok(choice)
}

/// One random comparison measure in the obstruction report.
#[derive(Debug, Clone, Serialize)]
pub struct ObstructionSample {
    pub atoms: usize,
    pub left: ExactValue,
    pub right: ExactValue,
    pub left_matches: bool,
    pub right_matches: bool,
}

/// Counting measure `mu_q` on `Paley(q)` against random convex measures, in
/// both product orders, and the gap between a target edge density `p` and
/// what any limit of convex measures can achieve.
#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    pub q: u64,
    pub seed: u64,
    pub constant_value: ExactValue,
    pub table_is_constant: bool,
    pub expected_value: ExactValue,
    pub samples: Vec<ObstructionSample>,
    pub all_products_match: bool,
    pub target: ExactValue,
    pub gap: ExactValue,
    pub obstructed: bool,
    #[serde(skip)]
    pub gap_exact: BigRational,
    #[serde(skip)]
    pub constant_exact: Option<BigRational>,
}

pub fn paley_obstruction_report(q: u64, p: &BigRational, samples: usize, seed: u64) -> Result<ObstructionReport, DefnError> {
    if !is_probability(p) {
        return Err(DefnError::Precondition(format!("target {} is not in [0, 1]", format_rational(p))));
    }
    let m = Arc::new(paley(q)?);
    let mu = counting(m.clone(), 1);
    let r = parse_partitioned("[x ; y] R(x,y)", m.signature(), &[]).expect("edge formula");
    let table = definability_table(&mu, &r)?;
    let expected = ratio(q as i64 - 1, 2 * q as i64);
    let constant = table.constant_value().cloned();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(samples);
    for _ in 0..samples {
        let nu = random_measure(m.clone(), 1, 8, &mut rng);
        let left = morley(&mu, &nu, &r, &[])?;
        let right = morley(&nu, &mu, &r, &[])?;
        rows.push(ObstructionSample {
            atoms: nu.weights().len(),
            left_matches: left == expected,
            right_matches: right == expected,
            left: left.into(),
            right: right.into(),
        });
    }
    let half = ratio(1, 2);
    let gap = abs_diff(p, &half) - ratio(1, 2 * q as i64);
    Ok(ObstructionReport {
        q,
        seed,
        table_is_constant: constant.is_some(),
        constant_value: constant.clone().unwrap_or_else(BigRational::zero).into(),
        expected_value: (&expected).into(),
        all_products_match: rows.iter().all(|s| s.left_matches && s.right_matches) && constant.as_ref() == Some(&expected),
        samples: rows,
        target: p.into(),
        obstructed: gap.is_positive(),
        gap: (&gap).into(),
        gap_exact: gap,
        constant_exact: constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{average, convex, dirac, product};
    use crate::structures::paley;

    fn paley13() -> Arc<FiniteStructure> {
        Arc::new(paley(13).unwrap())
    }

    fn edge(m: &FiniteStructure) -> PartitionedFormula {
        parse_partitioned("[x ; y] R(x,y)", m.signature(), &[]).unwrap()
    }

    #[test]
    fn counting_table_is_constant() {
        let m = paley13();
        let t = definability_table(&counting(m.clone(), 1), &edge(&m)).unwrap();
        assert_eq!(t.len(), 13);
        assert_eq!(t.constant_value(), Some(&ratio(6, 13)));
    }

    #[test]
    fn dirac_table_is_zero_one() {
        let m = paley13();
        let t = definability_table(&dirac(m.clone(), &[4]).unwrap(), &edge(&m)).unwrap();
        assert!(t.values().iter().all(|v| v.is_zero() || v.is_one()));
    }

    #[test]
    fn table_is_affine() {
        let m = paley13();
        let a = average(m.clone(), &[vec![0], vec![1], vec![5]]).unwrap();
        let b = dirac(m.clone(), &[7]).unwrap();
        let c = convex(&[ratio(1, 2), ratio(1, 2)], &[a.clone(), b.clone()]).unwrap();
        let phi = edge(&m);
        let (ta, tb, tc) = (
            definability_table(&a, &phi).unwrap(),
            definability_table(&b, &phi).unwrap(),
            definability_table(&c, &phi).unwrap(),
        );
        for i in 0..13 {
            assert_eq!(tc.values()[i], (&ta.values()[i] + &tb.values()[i]) / from_usize(2));
        }
    }

    fn constant_table(value: BigRational) -> DefinabilityTable {
        let m = paley13();
        let mut t = definability_table(&counting(m.clone(), 1), &edge(&m)).unwrap();
        t.values.iter_mut().for_each(|v| *v = value.clone());
        t
    }

    #[test]
    fn buckets_for_one_half() {
        let t = constant_table(ratio(1, 2));
        let b = level_buckets(&t, 2).unwrap();
        assert!(b.bucket(0).is_empty() && b.bucket(2).is_empty());
        assert_eq!(b.bucket(1).len(), 13);
        b.verify(&t).unwrap();
    }

    #[test]
    fn buckets_for_six_thirteenths() {
        let m = paley13();
        let t = definability_table(&counting(m.clone(), 1), &edge(&m)).unwrap();
        let b = level_buckets(&t, 4).unwrap();
        // |6/13 - 1/4| = 11/52 and |6/13 - 1/2| = 1/26, both below 1/4
        let full: Vec<usize> = (0..13).collect();
        assert_eq!(b.bucket(1), full.as_slice());
        assert_eq!(b.bucket(2), full.as_slice());
        for i in [0, 3, 4] {
            assert!(b.bucket(i).is_empty(), "bucket {i}");
        }
        b.verify(&t).unwrap();
    }

    #[test]
    fn exact_level_only_in_its_own_bucket() {
        for (num, den, n) in [(1, 4, 4), (3, 5, 5), (0, 1, 3), (1, 1, 3)] {
            let t = constant_table(ratio(num, den));
            let b = level_buckets(&t, n).unwrap();
            let i = (num as usize * n) / den as usize;
            for j in 0..=n {
                assert_eq!(!b.bucket(j).is_empty(), j == i);
            }
        }
        assert_eq!(level_buckets(&constant_table(ratio(1, 2)), 0).unwrap_err(), DefnError::ZeroGranularity);
    }

    #[test]
    fn verify_catches_tampering() {
        let t = constant_table(ratio(1, 2));
        let mut b = level_buckets(&t, 2).unwrap();
        b.buckets[0].push(3);
        b.buckets[0].sort();
        assert!(matches!(b.verify(&t), Err(BucketViolation::Inaccurate { bucket: 0, .. })));
        let mut b = level_buckets(&t, 2).unwrap();
        b.buckets[1].clear();
        assert!(matches!(b.verify(&t), Err(BucketViolation::Uncovered { .. })));
    }

    #[test]
    fn rounding() {
        let c = rounding_bucket(&ratio(3, 10), &ratio(6, 5), 4).unwrap();
        assert_eq!(c.floor, BigInt::from(1));
        assert_eq!(c.ceil, BigInt::from(2));
        // |3/10 - 1/4| = 1/20
        assert!(c.floor_ok);
        let c = rounding_bucket(&ratio(1, 2), &ratio(2, 1), 4).unwrap();
        assert_eq!(c.floor, c.ceil);
        assert!(c.floor_ok && c.ceil_ok);
        let c = rounding_bucket(&ratio(7, 10), &ratio(7, 2), 5).unwrap();
        assert!(c.floor_ok || c.ceil_ok);
        assert!(matches!(rounding_bucket(&ratio(0, 1), &ratio(1, 1), 1), Err(DefnError::Precondition(_))));
    }

    #[test]
    fn integration() {
        let m = paley13();
        let phi = edge(&m);
        let mu = average(m.clone(), &[vec![0], vec![3], vec![3]]).unwrap();
        let t = definability_table(&mu, &phi).unwrap();
        let nu = dirac(m.clone(), &[5]).unwrap();
        assert_eq!(&integrate_table(&t, &nu).unwrap(), t.value(&[5]).unwrap());
        let ct = definability_table(&counting(m.clone(), 1), &phi).unwrap();
        assert_eq!(integrate_table(&ct, &mu).unwrap(), ratio(6, 13));
        let p = Arc::new(paley(5).unwrap());
        assert!(matches!(integrate_table(&ct, &counting(p, 1)), Err(DefnError::Measure(MeasureError::StructureMismatch))));
        assert!(integrate_table(&ct, &counting(m.clone(), 2)).is_err());

        let prod = product(&mu, &nu).unwrap();
        let r2 = parse_partitioned("[x, y ;] R(x,y)", m.signature(), &[]).unwrap();
        assert_eq!(
            integrate_table(&t, &nu).unwrap(),
            crate::measures::measure_of(&prod, &r2, &[]).unwrap()
        );
    }

    #[test]
    fn obstruction_for_paley13() {
        let rep = paley_obstruction_report(13, &ratio(3, 10), 10, 1).unwrap();
        assert_eq!(rep.constant_exact, Some(ratio(6, 13)));
        assert!(rep.all_products_match);
        assert_eq!(rep.gap_exact, ratio(21, 130));
        assert!(rep.obstructed);
        let fair = paley_obstruction_report(13, &ratio(1, 2), 2, 1).unwrap();
        assert!(!fair.obstructed);
        assert!(fair.gap_exact.is_negative());
        assert!(paley_obstruction_report(7, &ratio(1, 2), 1, 1).is_err());
        assert!(paley_obstruction_report(13, &ratio(3, 2), 1, 1).is_err());
    }
}
