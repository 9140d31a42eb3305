//! Shared fixtures and brute-force oracles for the integration tests. The
//! oracles only use the public structure accessors and walk formulas
//! directly, independently of the compiled evaluator.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use keisler_core::fol::{Formula, PartitionedFormula, Signature, Term};
use keisler_core::measures::Measure;
use keisler_core::structures::{FiniteStructure, GroupTable};
use keisler_core::BigRational;
use num_bigint::BigInt;
use num_traits::Zero;
use rand::Rng;

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub const PALEY_QS: [u64; 12] = [5, 13, 17, 29, 37, 41, 53, 61, 73, 89, 97, 101];

fn term(m: &FiniteStructure, t: &Term, env: &BTreeMap<String, usize>) -> usize {
    match t {
        Term::Var(v) => env[v],
        Term::Const(c) => m.constant(c).unwrap(),
        Term::App(f, args) => {
            let vals: Vec<usize> = args.iter().map(|a| term(m, a, env)).collect();
            m.apply(f, &vals).unwrap()
        }
    }
}

/// Tarskian truth by direct recursion over the syntax tree.
pub fn oracle_holds(m: &FiniteStructure, f: &Formula, env: &mut BTreeMap<String, usize>) -> bool {
    match f {
        Formula::Rel(r, args) => {
            let vals: Vec<usize> = args.iter().map(|a| term(m, a, env)).collect();
            m.holds(r, &vals)
        }
        Formula::Eq(a, b) => term(m, a, env) == term(m, b, env),
        Formula::Not(g) => !oracle_holds(m, g, env),
        Formula::And(a, b) => oracle_holds(m, a, env) & oracle_holds(m, b, env),
        Formula::Or(a, b) => oracle_holds(m, a, env) | oracle_holds(m, b, env),
        Formula::Implies(a, b) => !oracle_holds(m, a, env) | oracle_holds(m, b, env),
        Formula::Iff(a, b) => oracle_holds(m, a, env) == oracle_holds(m, b, env),
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let saved = env.get(v).copied();
            let mut results = Vec::with_capacity(m.size());
            for e in 0..m.size() {
                env.insert(v.clone(), e);
                results.push(oracle_holds(m, body, env));
            }
            match saved {
                Some(s) => env.insert(v.clone(), s),
                None => env.remove(v),
            };
            if matches!(f, Formula::Forall(..)) {
                results.iter().all(|&b| b)
            } else {
                results.iter().any(|&b| b)
            }
        }
    }
}

/// Truth of `phi(a, b)` with `a` for the objects and `b` for the params.
pub fn oracle_sat(m: &FiniteStructure, phi: &PartitionedFormula, a: &[usize], b: &[usize]) -> bool {
    let mut env: BTreeMap<String, usize> = phi.objects().iter().cloned().zip(a.iter().copied()).collect();
    env.extend(phi.params().iter().cloned().zip(b.iter().copied()));
    oracle_holds(m, phi.formula(), &mut env)
}

/// All `k`-tuples over `0..n`, built by nested extension.
pub fn all_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |e| {
                    let mut t = t.clone();
                    t.push(e);
                    t
                })
            })
            .collect();
    }
    out
}

/// `mu(phi(x, b))` by summing the weights of satisfying support points.
pub fn oracle_measure(mu: &Measure, phi: &PartitionedFormula, b: &[usize]) -> BigRational {
    let m = mu.structure();
    mu.weights()
        .iter()
        .filter(|(a, _)| oracle_sat(m, phi, a, b))
        .fold(BigRational::zero(), |acc, (_, w)| acc + w)
}

/// Average of `points` on `phi(x, b)`.
pub fn oracle_average(m: &FiniteStructure, phi: &PartitionedFormula, points: &[Vec<usize>], b: &[usize]) -> BigRational {
    let hits = points.iter().filter(|a| oracle_sat(m, phi, a, b)).count();
    q(hits as i64, points.len() as i64)
}

pub fn oracle_sup_error(mu: &Measure, phi: &PartitionedFormula, points: &[Vec<usize>]) -> BigRational {
    let m = mu.structure();
    all_tuples(m.size(), phi.param_arity())
        .iter()
        .map(|b| {
            let d = oracle_measure(mu, phi, b) - oracle_average(m, phi, points, b);
            if d < BigRational::zero() {
                -d
            } else {
                d
            }
        })
        .max()
        .unwrap_or_default()
}

/// A structure on `1..=max_size` elements with a binary `R` and a unary `P`.
pub fn random_structure<R: Rng>(rng: &mut R, max_size: usize) -> Arc<FiniteStructure> {
    let n = rng.random_range(1..=max_size);
    let sig = Signature::new().with_relation("R", 2).unwrap().with_relation("P", 1).unwrap();
    let density = rng.random_range(1..=4) as f64 / 5.0;
    let r: Vec<Vec<usize>> = all_tuples(n, 2).into_iter().filter(|_| rng.random_bool(density)).collect();
    let p: Vec<Vec<usize>> = (0..n).filter(|_| rng.random_bool(0.5)).map(|a| vec![a]).collect();
    Arc::new(FiniteStructure::builder(sig, n).relation("R", r).relation("P", p).build().unwrap())
}

/// Random formula over `R/2`, `P/1` and `=` of depth at most `depth`, whose
/// free variables lie in `vars`. Quantifiers bind fresh names `u0, u1, ...`.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize, vars: &[String]) -> Formula {
    fn go<R: Rng>(rng: &mut R, depth: usize, scope: &mut Vec<String>, fresh: &mut usize) -> Formula {
        let pick = |rng: &mut R, scope: &[String]| scope[rng.random_range(0..scope.len())].clone();
        if depth == 0 || rng.random_range(0..4) == 0 {
            return match rng.random_range(0..3) {
                0 => Formula::rel("R", &[&pick(rng, scope), &pick(rng, scope)]),
                1 => Formula::rel("P", &[&pick(rng, scope)]),
                _ => Formula::eq_vars(&pick(rng, scope), &pick(rng, scope)),
            };
        }
        match rng.random_range(0..7) {
            0 => go(rng, depth - 1, scope, fresh).not(),
            1 => go(rng, depth - 1, scope, fresh).and(go(rng, depth - 1, scope, fresh)),
            2 => go(rng, depth - 1, scope, fresh).or(go(rng, depth - 1, scope, fresh)),
            3 => go(rng, depth - 1, scope, fresh).implies(go(rng, depth - 1, scope, fresh)),
            4 => go(rng, depth - 1, scope, fresh).iff(go(rng, depth - 1, scope, fresh)),
            k => {
                let v = format!("u{fresh}");
                *fresh += 1;
                scope.push(v.clone());
                let body = go(rng, depth - 1, scope, fresh);
                scope.pop();
                if k == 5 {
                    Formula::forall(&v, body)
                } else {
                    Formula::exists(&v, body)
                }
            }
        }
    }
    let mut scope = vars.to_vec();
    go(rng, depth, &mut scope, &mut 0)
}

/// Random `phi(x_1..x_k ; y_1..y_l)` of depth at most `depth`.
pub fn random_partitioned<R: Rng>(rng: &mut R, depth: usize, k: usize, l: usize) -> PartitionedFormula {
    let objects: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
    let params: Vec<String> = (1..=l).map(|i| format!("y{i}")).collect();
    let vars: Vec<String> = objects.iter().chain(&params).cloned().collect();
    let f = random_formula(rng, depth, &vars);
    PartitionedFormula::new(f, objects, params).unwrap()
}

/// Convex combination of at most `max_atoms` point masses with small weights.
pub fn random_convex<R: Rng>(rng: &mut R, m: &Arc<FiniteStructure>, arity: usize, max_atoms: usize) -> Measure {
    let atoms = rng.random_range(1..=max_atoms);
    let raw: Vec<(Vec<usize>, i64)> = (0..atoms)
        .map(|_| ((0..arity).map(|_| rng.random_range(0..m.size())).collect(), rng.random_range(1..=6)))
        .collect();
    let total: i64 = raw.iter().map(|(_, w)| w).sum();
    Measure::from_weights(m.clone(), arity, raw.into_iter().map(|(p, w)| (p, q(w, total)))).unwrap()
}

/// Subgroup generated by `gens`, by iterating products until nothing new.
pub fn oracle_generated(g: &GroupTable, gens: &[usize]) -> BTreeSet<usize> {
    let mut set: BTreeSet<usize> = gens.iter().copied().collect();
    set.insert(g.identity());
    loop {
        let next: BTreeSet<usize> = set.iter().flat_map(|&a| set.iter().map(move |&b| (a, b))).map(|(a, b)| g.mul(a, b)).collect();
        let next: BTreeSet<usize> = next.union(&set).copied().collect();
        if next == set {
            return set;
        }
        set = next;
    }
}

/// Convolution straight from the multiplication table, as a dense vector.
pub fn oracle_convolution(g: &GroupTable, mu: &Measure, nu: &Measure) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); g.order()];
    for a in 0..g.order() {
        for b in 0..g.order() {
            out[g.mul(a, b)] += mu.weight(&[a]) * nu.weight(&[b]);
        }
    }
    out
}

pub fn dense(mu: &Measure) -> Vec<BigRational> {
    (0..mu.structure().size()).map(|a| mu.weight(&[a])).collect()
}
