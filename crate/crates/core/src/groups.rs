//! Subgroups, Haar measures, idempotent classification and convolution-power
//! dynamics on finite groups. All comparisons are exact.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::{from_usize, ExactValue};
use crate::measures::{convolution, convex, tv_distance, Measure, MeasureError, MeasureSummary};
use crate::structures::GroupTable;

/// Largest group order accepted by [`subgroups`].
pub const MAX_ENUMERATION_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("group of order {0} exceeds the enumeration limit of {MAX_ENUMERATION_ORDER}")]
    TooLarge(usize),
    #[error("{0:?} is not a subgroup")]
    NotSubgroup(Vec<usize>),
    #[error("element {0} is not in the group")]
    OutOfRange(usize),
    #[error("max_n must be at least 1")]
    ZeroIterations,
    /// An idempotent whose support is not a subgroup carrying uniform weight.
    #[error("idempotent measure with support {support:?} is not a Haar measure: {reason}")]
    Inconsistent { support: Vec<usize>, reason: String },
}

/// A verified subgroup, stored as a sorted element list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Subgroup {
    elements: Vec<usize>,
}

impl Subgroup {
    /// Checks that `elements` contains the identity and is closed under
    /// multiplication and inverses.
    pub fn new(group: &GroupTable, elements: impl IntoIterator<Item = usize>) -> Result<Self, GroupError> {
        let set: BTreeSet<usize> = elements.into_iter().collect();
        if let Some(&a) = set.iter().find(|&&a| a >= group.order()) {
            return Err(GroupError::OutOfRange(a));
        }
        let closed = set.contains(&group.identity())
            && set.iter().all(|&a| set.contains(&group.inv(a)))
            && set.iter().all(|&a| set.iter().all(|&b| set.contains(&group.mul(a, b))));
        let elements: Vec<usize> = set.into_iter().collect();
        if !closed {
            return Err(GroupError::NotSubgroup(elements));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, a: usize) -> bool {
        self.elements.binary_search(&a).is_ok()
    }
}

/// The subgroup generated by `generators`.
pub fn generated(group: &GroupTable, generators: impl IntoIterator<Item = usize>) -> Result<Subgroup, GroupError> {
    let mut set = BTreeSet::from([group.identity()]);
    let gens: Vec<usize> = generators.into_iter().collect();
    if let Some(&a) = gens.iter().find(|&&a| a >= group.order()) {
        return Err(GroupError::OutOfRange(a));
    }
    // in a finite group, closure under right multiplication by generators suffices
    let mut frontier = vec![group.identity()];
    while let Some(a) = frontier.pop() {
        for &g in &gens {
            let b = group.mul(a, g);
            if set.insert(b) {
                frontier.push(b);
            }
        }
    }
    Subgroup::new(group, set)
}

/// All subgroups, sorted by order and then elements. Starts from the
/// subgroups generated by at most two elements and closes under joins.
pub fn subgroups(group: &GroupTable) -> Result<Vec<Subgroup>, GroupError> {
    let n = group.order();
    if n > MAX_ENUMERATION_ORDER {
        return Err(GroupError::TooLarge(n));
    }
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    for a in 0..n {
        for b in a..n {
            found.insert(generated(group, [a, b])?.elements);
        }
    }
    loop {
        let current: Vec<Vec<usize>> = found.iter().cloned().collect();
        let mut grew = false;
        for (i, h) in current.iter().enumerate() {
            for k in &current[i + 1..] {
                if h.iter().all(|a| k.binary_search(a).is_ok()) || k.iter().all(|a| h.binary_search(a).is_ok()) {
                    continue;
                }
                let join = generated(group, h.iter().chain(k).copied())?;
                grew |= found.insert(join.elements);
            }
        }
        if !grew {
            break;
        }
    }
    let mut out = found
        .into_iter()
        .map(|e| Subgroup::new(group, e))
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.elements.cmp(&b.elements)));
    Ok(out)
}

/// Uniform probability on `h`.
pub fn haar(group: &GroupTable, h: &Subgroup) -> Result<Measure, GroupError> {
    let h = Subgroup::new(group, h.elements.iter().copied())?;
    let w = BigRational::one() / from_usize(h.order());
    Ok(Measure::from_weights(
        group.structure().clone(),
        1,
        h.elements.iter().map(|&a| (vec![a], w.clone())),
    )?)
}

/// Exact test of `mu * mu == mu`.
pub fn is_idempotent(group: &GroupTable, mu: &Measure) -> Result<bool, GroupError> {
    Ok(&convolution(group, mu, mu)? == mu)
}

/// Returns the subgroup `H` with `mu = haar(H)` when `mu` is idempotent, or
/// `None` otherwise. The Haar shape of an idempotent is checked rather than
/// assumed; a failure is reported as [`GroupError::Inconsistent`].
pub fn classify_idempotent(group: &GroupTable, mu: &Measure) -> Result<Option<Subgroup>, GroupError> {
    if !is_idempotent(group, mu)? {
        return Ok(None);
    }
    let support: Vec<usize> = mu.support().map(|p| p[0]).collect();
    let inconsistent = |reason: &str| GroupError::Inconsistent {
        support: support.clone(),
        reason: reason.to_string(),
    };
    let h = Subgroup::new(group, support.iter().copied()).map_err(|_| inconsistent("support is not a subgroup"))?;
    let w = BigRational::one() / from_usize(h.order());
    if mu.weights().values().any(|v| v != &w) {
        return Err(inconsistent("weights are not uniform"));
    }
    if haar(group, &h)? != *mu {
        return Err(inconsistent("does not match the Haar measure of its support"));
    }
    Ok(Some(h))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitBehavior {
    /// `mu^(*index)` is within tolerance of its successor and of `haar(limit)`.
    Converged { index: usize, limit: Subgroup },
    /// `mu^(*start) = mu^(*(start + period))` exactly, with no convergence.
    Periodic { start: usize, period: usize },
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CesaroRoute {
    /// Exact average over the detected cycle, which is the exact limit.
    CycleAverage,
    /// The powers themselves converge, hence so do their averages.
    OrbitLimit,
    /// Successive averages and the nearest Haar measure within tolerance.
    Tolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CesaroReport {
    #[serde(skip)]
    pub averages: Vec<Measure>,
    pub limit: Option<Subgroup>,
    pub route: Option<CesaroRoute>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvolutionOrbit {
    #[serde(skip)]
    pub base: Measure,
    #[serde(skip)]
    pub iterates: Vec<Measure>,
    pub behavior: OrbitBehavior,
    pub tolerance: ExactValue,
    /// `tv(mu^(*n), mu^(*(n+1)))` for each computed `n`.
    pub successive_tv: Vec<ExactValue>,
    pub cesaro: Option<CesaroReport>,
}

impl ConvolutionOrbit {
    /// `mu^(*n)`, 1-based.
    pub fn power(&self, n: usize) -> Option<&Measure> {
        n.checked_sub(1).and_then(|i| self.iterates.get(i))
    }

    pub fn iterate_summaries(&self) -> Vec<MeasureSummary> {
        self.iterates.iter().map(MeasureSummary::from).collect()
    }
}

/// Subgroup whose Haar measure is nearest to `mu` in total variation, with
/// that distance. Ties go to the first in enumeration order.
fn nearest_haar(subs: &[(Subgroup, Measure)], mu: &Measure) -> Result<(usize, BigRational), GroupError> {
    let mut best: Option<(usize, BigRational)> = None;
    for (i, (_, h)) in subs.iter().enumerate() {
        let d = tv_distance(mu, h)?;
        if best.as_ref().is_none_or(|(_, b)| &d < b) {
            best = Some((i, d));
        }
    }
    Ok(best.expect("every group has a subgroup"))
}

/// Accepts `candidate` as a limit only if it classifies back to itself.
fn verified_limit(group: &GroupTable, candidate: &(Subgroup, Measure)) -> Result<Subgroup, GroupError> {
    match classify_idempotent(group, &candidate.1)? {
        Some(h) if h == candidate.0 => Ok(h),
        _ => Err(GroupError::Inconsistent {
            support: candidate.0.elements.clone(),
            reason: "Haar candidate failed to classify".into(),
        }),
    }
}

/// A measure on a group as integer numerators over one shared denominator,
/// so that walk steps need no per-entry reduction.
#[derive(Clone)]
struct Scaled {
    num: Vec<BigInt>,
    den: BigInt,
}

impl Scaled {
    fn from_measure(mu: &Measure, order: usize) -> Self {
        let den = mu.weights().values().fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
        let mut num = vec![BigInt::zero(); order];
        for (p, w) in mu.weights() {
            num[p[0]] = w.numer() * (&den / w.denom());
        }
        Self { num, den }
    }

    fn convolve(&self, base: &Scaled, group: &GroupTable) -> Scaled {
        let mut num = vec![BigInt::zero(); self.num.len()];
        for (a, x) in self.num.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (b, y) in base.num.iter().enumerate().filter(|(_, y)| !y.is_zero()) {
                num[group.mul(a, b)] += x * y;
            }
        }
        Scaled {
            num,
            den: &self.den * &base.den,
        }
    }

    /// Total variation distance, exactly.
    fn tv(&self, other: &Scaled) -> BigRational {
        let sum = self
            .num
            .iter()
            .zip(&other.num)
            .fold(BigInt::zero(), |acc, (x, y)| acc + (x * &other.den - y * &self.den).abs());
        BigRational::new(sum, BigInt::from(2) * &self.den * &other.den)
    }

    fn to_measure(&self, group: &GroupTable) -> Result<Measure, MeasureError> {
        let atoms = self
            .num
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(a, x)| (vec![a], BigRational::new(x.clone(), self.den.clone())));
        Measure::from_weights(group.structure().clone(), 1, atoms)
    }
}

/// Computes `mu^(*1), ..., mu^(*max_n)` exactly, stopping at convergence or
/// at the first exact recurrence. With `cesaro`, also tracks the running
/// averages `A_N = (1/N) sum_{n <= N} mu^(*n)` and their limit.
pub fn convolution_powers(
    group: &GroupTable,
    mu: &Measure,
    max_n: usize,
    tol: &BigRational,
    cesaro: bool,
) -> Result<ConvolutionOrbit, GroupError> {
    if max_n == 0 {
        return Err(GroupError::ZeroIterations);
    }
    convolution(group, mu, mu)?;
    let subs: Vec<(Subgroup, Measure)> = subgroups(group)?
        .into_iter()
        .map(|h| {
            let m = haar(group, &h)?;
            Ok((h, m))
        })
        .collect::<Result<_, GroupError>>()?;

    let base = Scaled::from_measure(mu, group.order());
    let mut scaled = vec![base.clone()];
    let mut iterates = vec![mu.clone()];
    let mut seen: BTreeMap<Vec<(usize, BigRational)>, usize> = BTreeMap::new();
    let key = |m: &Measure| -> Vec<(usize, BigRational)> { m.weights().iter().map(|(p, w)| (p[0], w.clone())).collect() };
    seen.insert(key(mu), 1);
    let mut successive = Vec::new();
    let mut behavior = OrbitBehavior::BudgetExhausted;
    for n in 1..=max_n {
        let next = scaled[n - 1].convolve(&base, group);
        let step = scaled[n - 1].tv(&next);
        successive.push(ExactValue::from(&step));
        let cur = &iterates[n - 1];
        if step.is_zero() {
            // mu^(*n) * mu = mu^(*n) forces mu^(*2n) = mu^(*n), an idempotent
            let limit = classify_idempotent(group, cur)?.ok_or_else(|| GroupError::Inconsistent {
                support: cur.support().map(|p| p[0]).collect(),
                reason: "fixed point of the walk is not idempotent".into(),
            })?;
            behavior = OrbitBehavior::Converged { index: n, limit };
            break;
        }
        if &step < tol {
            let (i, d) = nearest_haar(&subs, cur)?;
            if &d < tol {
                behavior = OrbitBehavior::Converged {
                    index: n,
                    limit: verified_limit(group, &subs[i])?,
                };
                break;
            }
        }
        if n == max_n {
            break;
        }
        let next_measure = next.to_measure(group)?;
        let k = key(&next_measure);
        scaled.push(next);
        iterates.push(next_measure);
        if let Some(&start) = seen.get(&k) {
            behavior = OrbitBehavior::Periodic {
                start,
                period: n + 1 - start,
            };
            break;
        }
        seen.insert(k, n + 1);
    }

    let cesaro = if cesaro {
        Some(cesaro_report(group, &subs, &scaled, &iterates, &behavior, tol)?)
    } else {
        None
    };
    Ok(ConvolutionOrbit {
        base: mu.clone(),
        iterates,
        behavior,
        tolerance: tol.into(),
        successive_tv: successive,
        cesaro,
    })
}

fn cesaro_report(
    group: &GroupTable,
    subs: &[(Subgroup, Measure)],
    scaled: &[Scaled],
    iterates: &[Measure],
    behavior: &OrbitBehavior,
    tol: &BigRational,
) -> Result<CesaroReport, GroupError> {
    // running sums share the iterate's denominator D^N
    let mut averages: Vec<Measure> = Vec::with_capacity(scaled.len());
    let mut sum: Option<Scaled> = None;
    for (i, it) in scaled.iter().enumerate() {
        let s = match sum.take() {
            None => it.clone(),
            Some(prev) => {
                let factor = &it.den / &prev.den;
                Scaled {
                    num: prev.num.iter().zip(&it.num).map(|(p, x)| p * &factor + x).collect(),
                    den: it.den.clone(),
                }
            }
        };
        let avg = Scaled {
            num: s.num.clone(),
            den: &s.den * BigInt::from(i + 1),
        };
        averages.push(avg.to_measure(group)?);
        sum = Some(s);
    }
    let (limit, route) = match behavior {
        OrbitBehavior::Converged { limit, .. } => (Some(limit.clone()), Some(CesaroRoute::OrbitLimit)),
        OrbitBehavior::Periodic { start, period } => {
            let cycle: Vec<Measure> = iterates[start - 1..start - 1 + period].to_vec();
            let w = BigRational::one() / from_usize(*period);
            let avg = convex(&vec![w; *period], &cycle)?;
            let h = classify_idempotent(group, &avg)?.ok_or_else(|| GroupError::Inconsistent {
                support: avg.support().map(|p| p[0]).collect(),
                reason: "cycle average is not idempotent".into(),
            })?;
            (Some(h), Some(CesaroRoute::CycleAverage))
        }
        OrbitBehavior::BudgetExhausted => {
            let n = averages.len();
            let mut out = (None, None);
            if n >= 2 && &tv_distance(&averages[n - 1], &averages[n - 2])? < tol {
                let (i, d) = nearest_haar(subs, &averages[n - 1])?;
                if &d < tol {
                    out = (Some(verified_limit(group, &subs[i])?), Some(CesaroRoute::Tolerance));
                }
            }
            out
        }
    };
    Ok(CesaroReport { averages, limit, route })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;
    use crate::measures::{dirac, random_measure};
    use crate::structures::{cyclic_group, dihedral_group, quaternion_group, symmetric_group_s3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform(g: &GroupTable, elems: &[usize]) -> Measure {
        let w = ratio(1, elems.len() as i64);
        Measure::from_weights(g.structure().clone(), 1, elems.iter().map(|&a| (vec![a], w.clone()))).unwrap()
    }

    fn orders(subs: &[Subgroup]) -> Vec<usize> {
        subs.iter().map(Subgroup::order).collect()
    }

    #[test]
    fn subgroup_counts() {
        let z4 = subgroups(&cyclic_group(4).unwrap()).unwrap();
        assert_eq!(z4.iter().map(|h| h.elements().to_vec()).collect::<Vec<_>>(), vec![vec![0], vec![0, 2], vec![0, 1, 2, 3]]);
        assert_eq!(orders(&subgroups(&cyclic_group(6).unwrap()).unwrap()), vec![1, 2, 3, 6]);
        assert_eq!(subgroups(&cyclic_group(1).unwrap()).unwrap().len(), 1);
        // S3: trivial, three of order 2, A3, S3
        assert_eq!(orders(&subgroups(&symmetric_group_s3()).unwrap()), vec![1, 2, 2, 2, 3, 6]);
        // Q8: trivial, centre, three cyclic of order 4, whole
        assert_eq!(orders(&subgroups(&quaternion_group()).unwrap()), vec![1, 2, 4, 4, 4, 8]);
        // D4 (order 8) has 10 subgroups
        assert_eq!(subgroups(&dihedral_group(4).unwrap()).unwrap().len(), 10);
        assert_eq!(subgroups(&cyclic_group(65).unwrap()).unwrap_err(), GroupError::TooLarge(65));
    }

    #[test]
    fn haar_examples() {
        let z4 = cyclic_group(4).unwrap();
        let h = Subgroup::new(&z4, [0, 2]).unwrap();
        let m = haar(&z4, &h).unwrap();
        assert_eq!(m.weight(&[0]), ratio(1, 2));
        assert_eq!(m.weight(&[1]), ratio(0, 1));
        let triv = Subgroup::new(&z4, [0]).unwrap();
        assert_eq!(haar(&z4, &triv).unwrap(), dirac(z4.structure().clone(), &[0]).unwrap());
        assert!(matches!(Subgroup::new(&z4, [0, 1]), Err(GroupError::NotSubgroup(_))));
    }

    #[test]
    fn idempotence_examples() {
        let z2 = cyclic_group(2).unwrap();
        let mu = Measure::from_weights(z2.structure().clone(), 1, [(vec![0], ratio(2, 3)), (vec![1], ratio(1, 3))]).unwrap();
        assert!(!is_idempotent(&z2, &mu).unwrap());
        assert_eq!(convolution(&z2, &mu, &mu).unwrap().weight(&[0]), ratio(5, 9));
        let z5 = cyclic_group(5).unwrap();
        assert!(!is_idempotent(&z5, &dirac(z5.structure().clone(), &[2]).unwrap()).unwrap());

        let z6 = cyclic_group(6).unwrap();
        let h = Subgroup::new(&z6, [0, 3]).unwrap();
        assert_eq!(classify_idempotent(&z6, &haar(&z6, &h).unwrap()).unwrap(), Some(h));
        let z3 = cyclic_group(3).unwrap();
        assert_eq!(classify_idempotent(&z3, &uniform(&z3, &[0, 1])).unwrap(), None);
        let e = dirac(z3.structure().clone(), &[0]).unwrap();
        assert_eq!(classify_idempotent(&z3, &e).unwrap().unwrap().elements(), &[0]);
    }

    #[test]
    fn haar_idempotent_on_small_groups() {
        let mut groups: Vec<GroupTable> = (1..=12).map(|n| cyclic_group(n).unwrap()).collect();
        groups.extend((3..=6).map(|n| dihedral_group(n).unwrap()));
        groups.push(quaternion_group());
        groups.push(symmetric_group_s3());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for g in &groups {
            let subs = subgroups(g).unwrap();
            for h in &subs {
                let m = haar(g, h).unwrap();
                assert!(is_idempotent(g, &m).unwrap());
                assert_eq!(classify_idempotent(g, &m).unwrap().as_ref(), Some(h));
            }
            let haars: Vec<Measure> = subs.iter().map(|h| haar(g, h).unwrap()).collect();
            for _ in 0..20 {
                let mu = random_measure(g.structure().clone(), 1, 5, &mut rng);
                if !haars.contains(&mu) {
                    assert_eq!(classify_idempotent(g, &mu).unwrap(), None);
                }
            }
        }
    }

    #[test]
    fn relabeling_commutes_with_classification() {
        let z6 = cyclic_group(6).unwrap();
        // a -> 5a is an automorphism of Z6
        let perm: Vec<usize> = (0..6).map(|a| 5 * a % 6).collect();
        let relabeled = z6.relabeled(&perm).unwrap();
        assert_eq!(relabeled.table(), z6.table());
        for h in subgroups(&z6).unwrap() {
            let image = Subgroup::new(&relabeled, h.elements().iter().map(|&a| perm[a])).unwrap();
            let classified = classify_idempotent(&relabeled, &haar(&relabeled, &image).unwrap()).unwrap();
            assert_eq!(classified, Some(image));
        }
    }

    #[test]
    fn dynamics_examples() {
        let z3 = cyclic_group(3).unwrap();
        let d1 = dirac(z3.structure().clone(), &[1]).unwrap();
        let orbit = convolution_powers(&z3, &d1, 50, &ratio(1, 1_000_000_000), true).unwrap();
        assert_eq!(orbit.behavior, OrbitBehavior::Periodic { start: 1, period: 3 });
        let ces = orbit.cesaro.unwrap();
        assert_eq!(ces.limit.unwrap().elements(), &[0, 1, 2]);
        assert_eq!(ces.route, Some(CesaroRoute::CycleAverage));
        assert_eq!(ces.averages[2], uniform(&z3, &[0, 1, 2]));

        let z4 = cyclic_group(4).unwrap();
        let walk = uniform(&z4, &[0, 1]);
        let orbit = convolution_powers(&z4, &walk, 500, &ratio(1, 1_000_000_000), false).unwrap();
        match &orbit.behavior {
            OrbitBehavior::Converged { index, limit } => {
                assert!(*index <= 500);
                assert_eq!(limit.order(), 4);
            }
            other => panic!("{other:?}"),
        }

        let h = Subgroup::new(&z4, [0, 2]).unwrap();
        let orbit = convolution_powers(&z4, &haar(&z4, &h).unwrap(), 10, &ratio(1, 100), true).unwrap();
        assert_eq!(orbit.behavior, OrbitBehavior::Converged { index: 1, limit: h.clone() });
        assert_eq!(orbit.iterates.len(), 1);
        assert_eq!(orbit.cesaro.unwrap().limit, Some(h));
        assert_eq!(convolution_powers(&z4, &walk, 0, &ratio(1, 2), false).unwrap_err(), GroupError::ZeroIterations);
    }

    #[test]
    fn slow_walk_exhausts_budget() {
        let z4 = cyclic_group(4).unwrap();
        let orbit = convolution_powers(&z4, &uniform(&z4, &[0, 1]), 3, &ratio(1, 1_000_000_000), true).unwrap();
        assert_eq!(orbit.behavior, OrbitBehavior::BudgetExhausted);
        assert_eq!(orbit.iterates.len(), 3);
        assert_eq!(orbit.cesaro.unwrap().limit, None);
    }
}
