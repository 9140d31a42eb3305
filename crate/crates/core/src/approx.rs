//! Finite approximation of measures by averages of points.
//!
//! Searches are heuristic (sampling from the measure, greedy point exchange)
//! but every accepted witness is re-verified exhaustively in exact
//! arithmetic over all parameter tuples before it is returned. Also here:
//! shatter functions and VC dimension of the trace family `{phi(M, b)}`,
//! and the extensional check that a point list certifies a family of level
//! buckets.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::defnlab::{definability_table, param_space, DefnError, LevelBuckets};
use crate::exact::{abs_diff, from_usize, to_f64, ExactValue};
use crate::fol::{encode_selector, Evaluator, FolError, PartitionedFormula};
use crate::measures::{average, measure_of, Measure, MeasureError};
use crate::structures::FiniteStructure;
use crate::tuples::{tuple_count, tuple_index, TupleIter};

/// Initial sample size is `ceil(SAMPLE_CONSTANT / eps^2)`, capped by the budget.
pub const SAMPLE_CONSTANT: u64 = 8;

/// Largest allowed cap for [`vc_dimension`].
pub const MAX_VC_CAP: usize = 6;

const MAX_CANDIDATES: usize = 1 << 14;
const MAX_SUBSETS: u128 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApproxError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Definability(#[from] DefnError),
    #[error(transparent)]
    Formula(#[from] FolError),
    #[error("need at least one point")]
    EmptyPoints,
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("need at least one formula")]
    NoFormulas,
    #[error("budget exhausted; best sup-error {} with {} points", .best.sup_error.exact, .best.points.len())]
    BudgetExhausted { best: Box<ApproxResult> },
    #[error("cap {0} exceeds the limit of {MAX_VC_CAP}")]
    CapExceeded(usize),
    #[error("search space too large: {0}")]
    TooLarge(String),
    #[error("buckets have granularity {found}, expected {expected}")]
    GranularityMismatch { expected: usize, found: usize },
    #[error("selector encoding and per-formula checks disagree")]
    RouteDisagreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// i.i.d. samples from the measure, doubling the sample on retry.
    Sampling,
    /// Greedy point-exchange descent on the sup-error from a sampled start.
    Greedy,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sampling" => Ok(Strategy::Sampling),
            "greedy" => Ok(Strategy::Greedy),
            other => Err(format!("unknown strategy `{other}` (expected sampling or greedy)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// Sampling rounds (or greedy restarts).
    pub rounds: usize,
    /// Upper bound on the number of points in a witness.
    pub max_points: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            rounds: 64,
            max_points: 4096,
        }
    }
}

/// A candidate witness `a_1..a_r` together with its exactly recomputed error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxResult {
    pub points: Vec<Vec<usize>>,
    pub sup_error: ExactValue,
    #[serde(skip)]
    pub sup_error_exact: BigRational,
    pub threshold: ExactValue,
    /// Set only after the exhaustive exact recomputation.
    pub verified: bool,
    pub strategy: Strategy,
    pub seed: u64,
    pub rounds_used: usize,
}

/// `max_b |mu(phi(x, b)) - Av(points)(phi(x, b))|` over every parameter tuple.
pub fn sup_error(mu: &Measure, phi: &PartitionedFormula, points: &[Vec<usize>]) -> Result<BigRational, ApproxError> {
    if points.is_empty() {
        return Err(ApproxError::EmptyPoints);
    }
    let av = average(mu.structure().clone(), points)?;
    let target = definability_table(mu, phi)?;
    let approx = definability_table(&av, phi)?;
    Ok(target
        .values()
        .iter()
        .zip(approx.values())
        .map(|(a, b)| abs_diff(a, b))
        .max()
        .unwrap_or_else(BigRational::zero))
}

/// Truth of each formula on every (candidate point, parameter) pair, with
/// float targets, for fast incremental error bookkeeping during search.
struct SearchSpace {
    candidates: Vec<Vec<usize>>,
    // per row block: threshold, per-param targets, sat[candidate][param]
    blocks: Vec<Block>,
}

struct Block {
    threshold: f64,
    targets: Vec<f64>,
    sat: Vec<Vec<bool>>,
}

impl SearchSpace {
    fn new(mu: &Measure, formulas: &[(&PartitionedFormula, f64)]) -> Result<Self, ApproxError> {
        let m = mu.structure();
        let count = tuple_count(m.size(), mu.arity())
            .filter(|&c| c <= MAX_CANDIDATES)
            .ok_or_else(|| ApproxError::TooLarge(format!("{}^{} candidate points", m.size(), mu.arity())))?;
        let candidates: Vec<Vec<usize>> = TupleIter::new(m.size(), mu.arity()).collect();
        debug_assert_eq!(candidates.len(), count);
        let mut blocks = Vec::new();
        for (phi, threshold) in formulas {
            let table = definability_table(mu, phi)?;
            let ev = mu.compile(phi)?;
            let params: Vec<Vec<usize>> = m.tuples(phi.param_arity()).collect();
            let sat = candidates
                .iter()
                .map(|c| {
                    params
                        .iter()
                        .map(|b| {
                            let input: Vec<usize> = c.iter().chain(b).copied().collect();
                            ev.eval(&input)
                        })
                        .collect()
                })
                .collect();
            blocks.push(Block {
                threshold: *threshold,
                targets: table.values().iter().map(to_f64).collect(),
                sat,
            });
        }
        Ok(Self { candidates, blocks })
    }

    fn counts(&self, chosen: &[usize]) -> Vec<Vec<u32>> {
        self.blocks
            .iter()
            .map(|blk| {
                let mut c = vec![0u32; blk.targets.len()];
                for &p in chosen {
                    for (slot, &s) in c.iter_mut().zip(&blk.sat[p]) {
                        *slot += s as u32;
                    }
                }
                c
            })
            .collect()
    }

    /// `(max over blocks of error / threshold, number of params attaining it)`.
    fn score(&self, counts: &[Vec<u32>], r: usize) -> (f64, usize) {
        let mut worst = 0.0f64;
        let mut at_worst = 0usize;
        for (blk, c) in self.blocks.iter().zip(counts) {
            for (t, &k) in blk.targets.iter().zip(c) {
                let e = (t - k as f64 / r as f64).abs() / blk.threshold;
                if e > worst + 1e-12 {
                    worst = e;
                    at_worst = 1;
                } else if (e - worst).abs() <= 1e-12 {
                    at_worst += 1;
                }
            }
        }
        (worst, at_worst)
    }

    fn swap_score(&self, counts: &[Vec<u32>], r: usize, out: usize, inp: usize) -> (f64, usize) {
        let mut worst = 0.0f64;
        let mut at_worst = 0usize;
        for (blk, c) in self.blocks.iter().zip(counts) {
            let (so, si) = (&blk.sat[out], &blk.sat[inp]);
            for (j, (t, &k)) in blk.targets.iter().zip(c).enumerate() {
                let k = k as i64 - so[j] as i64 + si[j] as i64;
                let e = (t - k as f64 / r as f64).abs() / blk.threshold;
                if e > worst + 1e-12 {
                    worst = e;
                    at_worst = 1;
                } else if (e - worst).abs() <= 1e-12 {
                    at_worst += 1;
                }
            }
        }
        (worst, at_worst)
    }

    fn apply_swap(&self, counts: &mut [Vec<u32>], out: usize, inp: usize) {
        for (blk, c) in self.blocks.iter().zip(counts.iter_mut()) {
            for (j, slot) in c.iter_mut().enumerate() {
                *slot = *slot - blk.sat[out][j] as u32 + blk.sat[inp][j] as u32;
            }
        }
    }

    /// Greedy descent: repeatedly takes the lexicographically first
    /// (position, candidate) swap that improves the score.
    fn descend(&self, chosen: &mut [usize], max_passes: usize) {
        let r = chosen.len();
        let mut counts = self.counts(chosen);
        let mut current = self.score(&counts, r);
        for _ in 0..max_passes {
            if current.0 < 1.0 - 1e-9 {
                return;
            }
            let mut improved = false;
            'search: for pos in 0..r {
                for cand in 0..self.candidates.len() {
                    if cand == chosen[pos] {
                        continue;
                    }
                    let s = self.swap_score(&counts, r, chosen[pos], cand);
                    if s.0 < current.0 - 1e-12 || ((s.0 - current.0).abs() <= 1e-12 && s.1 < current.1) {
                        self.apply_swap(&mut counts, chosen[pos], cand);
                        chosen[pos] = cand;
                        current = s;
                        improved = true;
                        break 'search;
                    }
                }
            }
            if !improved {
                return;
            }
        }
    }
}

fn candidate_sampler(mu: &Measure) -> (Vec<usize>, WeightedIndex<f64>) {
    let n = mu.structure().size();
    let (idx, w): (Vec<usize>, Vec<f64>) = mu.weights().iter().map(|(p, w)| (tuple_index(p, n), to_f64(w))).unzip();
    (idx, WeightedIndex::new(w).expect("measure weights are positive"))
}

fn initial_size(eps: &BigRational) -> usize {
    // ceil(C / eps^2)
    let v = BigRational::from_integer(BigInt::from(SAMPLE_CONSTANT)) / (eps * eps);
    v.ceil().to_integer().to_usize().unwrap_or(usize::MAX).max(1)
}

struct SearchOutcome {
    points: Vec<Vec<usize>>,
    rounds: usize,
}

/// Runs the chosen strategy until `accept` holds for a candidate witness, or
/// the budget runs out. Returns the best witness seen by the fast score.
fn search(
    space: &SearchSpace,
    mu: &Measure,
    strategy: Strategy,
    start_size: usize,
    seed: u64,
    budget: Budget,
    mut accept: impl FnMut(&[Vec<usize>]) -> Result<bool, ApproxError>,
) -> Result<(bool, SearchOutcome), ApproxError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (index, sampler) = candidate_sampler(mu);
    let cap = budget.max_points.max(1);
    let mut size = start_size.clamp(1, cap);
    let mut best: Option<((f64, usize), Vec<usize>)> = None;
    for round in 0..budget.rounds.max(1) {
        let mut chosen: Vec<usize> = (0..size).map(|_| index[sampler.sample(&mut rng)]).collect();
        if strategy == Strategy::Greedy {
            space.descend(&mut chosen, 4 * size + 64);
        }
        let score = space.score(&space.counts(&chosen), chosen.len());
        let points: Vec<Vec<usize>> = chosen.iter().map(|&c| space.candidates[c].clone()).collect();
        if score.0 < 1.0 + 1e-9 && accept(&points)? {
            return Ok((true, SearchOutcome { points, rounds: round + 1 }));
        }
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, chosen));
        }
        size = (size * 2).min(cap);
    }
    let (_, chosen) = best.expect("at least one round");
    Ok((
        false,
        SearchOutcome {
            points: chosen.iter().map(|&c| space.candidates[c].clone()).collect(),
            rounds: budget.rounds.max(1),
        },
    ))
}

/// Searches for `a_1..a_r` with `sup_b |mu(phi(x,b)) - Av(a)(phi(x,b))| < eps`.
pub fn find_approximation(
    mu: &Measure,
    phi: &PartitionedFormula,
    eps: &BigRational,
    strategy: Strategy,
    seed: u64,
    budget: Budget,
) -> Result<ApproxResult, ApproxError> {
    if eps <= &BigRational::zero() {
        return Err(ApproxError::NonPositiveEpsilon);
    }
    param_space(mu.structure(), phi.param_arity())?;
    let space = SearchSpace::new(mu, &[(phi, to_f64(eps))])?;
    let start = match strategy {
        Strategy::Sampling => initial_size(eps),
        // exchange descent gets by with far fewer points
        Strategy::Greedy => (2.0 / to_f64(eps)).ceil() as usize,
    };
    let mut last_error = None;
    let (ok, outcome) = search(&space, mu, strategy, start, seed, budget, |points| {
        let e = sup_error(mu, phi, points)?;
        let ok = &e < eps;
        last_error = Some(e);
        Ok(ok)
    })?;
    let exact = match (ok, last_error) {
        (true, Some(e)) => e,
        _ => sup_error(mu, phi, &outcome.points)?,
    };
    let result = ApproxResult {
        points: outcome.points,
        sup_error: (&exact).into(),
        sup_error_exact: exact,
        threshold: eps.into(),
        verified: true,
        strategy,
        seed,
        rounds_used: outcome.rounds,
    };
    if ok {
        Ok(result)
    } else {
        Err(ApproxError::BudgetExhausted { best: Box::new(result) })
    }
}

/// Outcome of a simultaneous approximation of several formulas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformApproxResult {
    pub result: ApproxResult,
    pub per_formula: Vec<ExactValue>,
    pub direct_accepts: bool,
    /// `None` when the universe is too small to realize the selector patterns.
    pub selector_accepts: Option<bool>,
}

/// Per-formula route: every `theta_i` within `bound`.
fn direct_errors(mu: &Measure, thetas: &[PartitionedFormula], points: &[Vec<usize>]) -> Result<Vec<BigRational>, ApproxError> {
    thetas.iter().map(|t| sup_error(mu, t, points)).collect()
}

/// Selector route: the sup-error of the single encoded formula `gamma` over
/// each selector pattern, with the other members' parameters fixed at 0.
/// Returns `None` if the patterns cannot be realized (universe of size 1
/// with more than one formula).
pub fn selector_sup_error(
    mu: &Measure,
    thetas: &[PartitionedFormula],
    points: &[Vec<usize>],
) -> Result<Option<BigRational>, ApproxError> {
    let n = thetas.len();
    let m = mu.structure();
    if n > 1 && m.size() < 2 {
        return Ok(None);
    }
    let enc = encode_selector(thetas)?;
    let gamma = enc.formula();
    let av = average(m.clone(), points)?;
    let zeros: Vec<Vec<usize>> = thetas.iter().map(|t| vec![0; t.param_arity()]).collect();
    let mut worst = BigRational::zero();
    for (i, theta) in thetas.iter().enumerate() {
        param_space(m, theta.param_arity())?;
        // z_* = 0, z_i = 0 and every other selector 1
        let zs: Vec<usize> = (0..n).map(|j| usize::from(j != i)).collect();
        for y in m.tuples(theta.param_arity()) {
            let mut ys: Vec<&[usize]> = zeros.iter().map(Vec::as_slice).collect();
            ys[i] = &y;
            let params = enc.assemble(&ys, 0, &zs)?;
            let e = abs_diff(&measure_of(mu, gamma, &params)?, &measure_of(&av, gamma, &params)?);
            if e > worst {
                worst = e;
            }
        }
    }
    Ok(Some(worst))
}

/// One point list that approximates every `theta_i` to within `1/n`, where
/// `n` is the number of formulas. Acceptance is decided both per formula and
/// through the selector encoding; the two must agree.
pub fn find_uniform_approximation(
    mu: &Measure,
    thetas: &[PartitionedFormula],
    seed: u64,
    budget: Budget,
) -> Result<UniformApproxResult, ApproxError> {
    if thetas.is_empty() {
        return Err(ApproxError::NoFormulas);
    }
    let bound = BigRational::new(BigInt::from(1), BigInt::from(thetas.len()));
    for t in thetas {
        param_space(mu.structure(), t.param_arity())?;
    }
    let f_bound = to_f64(&bound);
    let rows: Vec<(&PartitionedFormula, f64)> = thetas.iter().map(|t| (t, f_bound)).collect();
    let space = SearchSpace::new(mu, &rows)?;

    let mut verdict: Option<(Vec<BigRational>, Option<bool>)> = None;
    let (ok, outcome) = search(&space, mu, Strategy::Sampling, initial_size(&bound), seed, budget, |points| {
        let errors = direct_errors(mu, thetas, points)?;
        let direct = errors.iter().all(|e| e < &bound);
        let selector = selector_sup_error(mu, thetas, points)?.map(|e| e < bound);
        if selector.is_some_and(|s| s != direct) {
            return Err(ApproxError::RouteDisagreement);
        }
        verdict = Some((errors, selector));
        Ok(direct)
    })?;
    let (errors, selector) = match (ok, verdict) {
        (true, Some(v)) => v,
        _ => (
            direct_errors(mu, thetas, &outcome.points)?,
            selector_sup_error(mu, thetas, &outcome.points)?.map(|e| e < bound),
        ),
    };
    let sup = errors.iter().max().cloned().unwrap_or_else(BigRational::zero);
    let direct = errors.iter().all(|e| e < &bound);
    if selector.is_some_and(|s| s != direct) {
        return Err(ApproxError::RouteDisagreement);
    }
    let result = ApproxResult {
        points: outcome.points,
        sup_error: (&sup).into(),
        sup_error_exact: sup,
        threshold: (&bound).into(),
        verified: true,
        strategy: Strategy::Sampling,
        seed,
        rounds_used: outcome.rounds,
    };
    if !ok {
        return Err(ApproxError::BudgetExhausted { best: Box::new(result) });
    }
    Ok(UniformApproxResult {
        result,
        per_formula: errors.iter().map(ExactValue::from).collect(),
        direct_accepts: direct,
        selector_accepts: selector,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VcDimension {
    Exact(usize),
    AtLeast(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShatterReport {
    /// `shatter[d - 1]` is the shatter function at `d`.
    pub shatter: Vec<u64>,
    pub vc_dimension: VcDimension,
}

impl ShatterReport {
    pub fn value(&self, d: usize) -> Option<u64> {
        if d == 0 {
            return Some(1);
        }
        self.shatter.get(d - 1).copied()
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Shatter function of the trace family `{phi(M, b) : b}` on sets of object
/// tuples of size `1..=cap`, by exhaustive subset search.
pub fn vc_dimension(m: &Arc<FiniteStructure>, phi: &PartitionedFormula, cap: usize) -> Result<ShatterReport, ApproxError> {
    if cap > MAX_VC_CAP {
        return Err(ApproxError::CapExceeded(cap));
    }
    phi.formula().check(m.signature())?;
    let k = phi.object_arity();
    let points = tuple_count(m.size(), k)
        .filter(|&c| c <= MAX_CANDIDATES)
        .ok_or_else(|| ApproxError::TooLarge(format!("{}^{k} points", m.size())))?;
    param_space(m, phi.param_arity())?;
    let ev = Evaluator::new(m, phi.formula(), &phi.variables())?;
    let objects: Vec<Vec<usize>> = TupleIter::new(m.size(), k).collect();
    // traces[b][point]
    let traces: Vec<Vec<bool>> = m
        .tuples(phi.param_arity())
        .map(|b| {
            objects
                .iter()
                .map(|a| ev.eval(&a.iter().chain(&b).copied().collect::<Vec<_>>()))
                .collect()
        })
        .collect();

    let mut shatter = Vec::new();
    let mut vc = 0;
    let max_d = cap.min(points);
    for d in 1..=max_d {
        if binomial(points as u128, d as u128) > MAX_SUBSETS {
            return Err(ApproxError::TooLarge(format!("C({points}, {d}) subsets")));
        }
        let full = 1u64 << d;
        let mut best = 0u64;
        let mut subset: Vec<usize> = (0..d).collect();
        loop {
            let mut seen = vec![false; full as usize];
            let mut distinct = 0u64;
            for tr in &traces {
                let mask = subset.iter().enumerate().fold(0usize, |acc, (i, &p)| acc | (usize::from(tr[p]) << i));
                if !seen[mask] {
                    seen[mask] = true;
                    distinct += 1;
                    if distinct == full {
                        break;
                    }
                }
            }
            best = best.max(distinct);
            if best == full || !next_subset(&mut subset, points) {
                break;
            }
        }
        shatter.push(best);
        if best == full {
            vc = d;
        }
    }
    let vc_dimension = if vc == cap && cap < points { VcDimension::AtLeast(cap) } else { VcDimension::Exact(vc) };
    Ok(ShatterReport { shatter, vc_dimension })
}

fn next_subset(subset: &mut [usize], n: usize) -> bool {
    let d = subset.len();
    for i in (0..d).rev() {
        if subset[i] < n - d + i {
            subset[i] += 1;
            for j in i + 1..d {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Sauer–Shelah bound `sum_{i <= vc} C(d, i)` on the shatter function.
pub fn sauer_shelah_bound(vc: usize, d: usize) -> u128 {
    (0..=vc.min(d)).map(|i| binomial(d as u128, i as u128)).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertificateFailure {
    pub params: Vec<usize>,
    /// 1: bucket membership without the average near the level;
    /// 2: the satisfying-index set points to no nearby bucket.
    pub condition: u8,
    pub bucket: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub granularity: usize,
    pub point_count: usize,
    pub points: Vec<Vec<usize>>,
    pub passed: bool,
    pub counterexample: Option<CertificateFailure>,
}

/// Checks, for every parameter `b`, that (1) membership of `b` in bucket `j`
/// puts `Av(points)(phi(x, b))` strictly within `2/n` of `j/n`, and (2) with
/// `A` the set of points satisfying `phi(-, b)` and `j_A = floor(|A| n / r)`,
/// `b` lies in one of the buckets `j_A - 1 ..= j_A + 2`.
pub fn certificate_check(
    mu: &Measure,
    phi: &PartitionedFormula,
    points: &[Vec<usize>],
    buckets: &LevelBuckets,
    n: usize,
) -> Result<Certificate, ApproxError> {
    if buckets.granularity() != n {
        return Err(ApproxError::GranularityMismatch {
            expected: n,
            found: buckets.granularity(),
        });
    }
    if points.is_empty() {
        return Err(ApproxError::EmptyPoints);
    }
    let m = mu.structure();
    param_space(m, phi.param_arity())?;
    let ev = mu.compile(phi)?;
    let r = points.len();
    let two = from_usize(2);
    let mut failure = None;
    'params: for (idx, b) in m.tuples(phi.param_arity()).enumerate() {
        let mut input = vec![0; phi.object_arity() + b.len()];
        input[phi.object_arity()..].copy_from_slice(&b);
        let satisfied = points
            .iter()
            .filter(|a| {
                input[..a.len()].copy_from_slice(a);
                ev.eval(&input)
            })
            .count();
        // |Av - j/n| < 2/n  <=>  |n |A| / r - j| < 2
        let scaled = BigRational::new(BigInt::from(satisfied * n), BigInt::from(r));
        for j in 0..=n {
            if buckets.contains(j, idx) && abs_diff(&scaled, &from_usize(j)) >= two {
                failure = Some(CertificateFailure {
                    params: b,
                    condition: 1,
                    bucket: j,
                });
                break 'params;
            }
        }
        let j_a = satisfied * n / r;
        let near = (j_a.saturating_sub(1)..=j_a + 2).any(|j| buckets.contains(j, idx));
        if !near {
            failure = Some(CertificateFailure {
                params: b,
                condition: 2,
                bucket: j_a,
            });
            break;
        }
    }
    Ok(Certificate {
        granularity: n,
        point_count: r,
        points: points.to_vec(),
        passed: failure.is_none(),
        counterexample: failure,
    })
}
