//! Invariant suites behind `--selftest`, one per subcommand. Each check is
//! exact and seeded by the run's seed.

use std::sync::Arc;

use keisler_core::approx::{certificate_check, find_approximation, sauer_shelah_bound, sup_error, vc_dimension, Budget, Strategy, VcDimension};
use keisler_core::defnlab::{definability_table, level_buckets, rounding_bucket};
use keisler_core::exact::ratio;
use keisler_core::fol::{evaluate, parse_formula, parse_partitioned, swap_partition, Assignment, PartitionedFormula};
use keisler_core::groups::{classify_idempotent, convolution_powers, haar, is_idempotent, subgroups, OrbitBehavior};
use keisler_core::measures::{counting, dirac, measure_of, morley, morley_measure, product, random_measure, Measure};
use keisler_core::seqlab::{coin_flip_target, tail_stable};
use keisler_core::structures::{
    cyclic_group, dihedral_group, extension_property, paley, quaternion_group, symmetric_group_s3, FiniteStructure,
    GroupTable,
};
use keisler_core::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::report::Report;

type Check = Result<bool, String>;

fn graph(q: u64) -> Result<Arc<FiniteStructure>, String> {
    paley(q).map(Arc::new).map_err(|e| e.to_string())
}

fn phi(m: &FiniteStructure, text: &str) -> Result<PartitionedFormula, String> {
    parse_partitioned(text, m.signature(), &[]).map_err(|e| e.to_string())
}

fn groups() -> Vec<GroupTable> {
    let mut gs: Vec<GroupTable> = (1..=8).map(|n| cyclic_group(n).expect("cyclic")).collect();
    gs.extend((3..=4).map(|n| dihedral_group(n).expect("dihedral")));
    gs.push(quaternion_group());
    gs.push(symmetric_group_s3());
    gs
}

const FORMULAS: [&str; 4] = ["[x ; y] R(x,y)", "[x ; y] !R(x,y) & !(x = y)", "[x ; y] exists z. (R(x,z) & R(z,y))", "[x ; y] R(x,y) | x = y"];

fn eval_suite(_: u64) -> Vec<(&'static str, Check)> {
    let run = |text: &str, q: u64| -> Check {
        let m = graph(q)?;
        let f = parse_formula(text, m.signature()).map_err(|e| e.to_string())?;
        evaluate(&m, &f, &Assignment::new()).map_err(|e| e.to_string())
    };
    vec![
        ("every vertex of Paley(13) has a neighbour", run("forall x. exists y. R(x,y)", 13)),
        ("Paley(13) has no loops", run("exists x. R(x,x)", 13).map(|b| !b)),
        ("edge relation is symmetric", run("forall x. forall y. (R(x,y) -> R(y,x))", 13)),
        (
            "De Morgan on a sentence",
            run("!(exists x. forall y. R(x,y))", 5).and_then(|a| run("forall x. exists y. !R(x,y)", 5).map(|b| a == b)),
        ),
    ]
}

fn measure_suite(seed: u64) -> Vec<(&'static str, Check)> {
    let complement = || -> Check {
        let m = graph(13)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_measure(m.clone(), 1, 6, &mut rng);
        let f = phi(&m, "[x ; y] R(x,y)")?;
        let g = phi(&m, "[x ; y] !R(x,y)")?;
        Ok((0..m.size()).all(|b| {
            let s = measure_of(&mu, &f, &[b]).unwrap() + measure_of(&mu, &g, &[b]).unwrap();
            s == ratio(1, 1)
        }))
    };
    let paley_density = || -> Check {
        let m = graph(13)?;
        let t = definability_table(&counting(m.clone(), 1), &phi(&m, "[x ; y] R(x,y)")?).map_err(|e| e.to_string())?;
        Ok(t.constant_value() == Some(&ratio(6, 13)))
    };
    let dirac_truth = || -> Check {
        let m = graph(5)?;
        let d = dirac(m.clone(), &[0]).map_err(|e| e.to_string())?;
        let f = phi(&m, "[x ; y] R(x,y)")?;
        Ok((0..5).all(|b| (measure_of(&d, &f, &[b]).unwrap() == ratio(1, 1)) == m.holds("R", &[0, b])))
    };
    vec![
        ("phi and its negation sum to one", complement()),
        ("counting measure of R on Paley(13) is 6/13", paley_density()),
        ("Dirac measures evaluate truth", dirac_truth()),
    ]
}

fn product_suite(seed: u64) -> Vec<(&'static str, Check)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agree = Ok(true);
    let mut counting_commutes = Ok(true);
    for q in [5, 13] {
        let mut run = || -> Check {
            let m = graph(q)?;
            let mu = random_measure(m.clone(), 1, 5, &mut rng);
            let nu = random_measure(m.clone(), 1, 5, &mut rng);
            let same = product(&mu, &nu).map_err(|e| e.to_string())?.weights() == morley_measure(&mu, &nu).map_err(|e| e.to_string())?.weights();
            Ok(same)
        };
        agree = agree.and_then(|a| run().map(|b| a && b));
        let commute = || -> Check {
            let m = graph(q)?;
            let c = counting(m.clone(), 1);
            let f = phi(&m, "[x ; y] R(x,y)")?;
            let l = morley(&c, &c, &f, &[]).map_err(|e| e.to_string())?;
            let r = morley(&c, &c, &swap_partition(&f), &[]).map_err(|e| e.to_string())?;
            Ok(l == r)
        };
        counting_commutes = counting_commutes.and_then(|a| commute().map(|b| a && b));
    }
    vec![
        ("Morley product equals product measure", agree),
        ("counting measures commute on R", counting_commutes),
    ]
}

fn buckets_suite(seed: u64) -> Vec<(&'static str, Check)> {
    let run = || -> Check {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = graph(13)?;
        for text in FORMULAS {
            let mu = random_measure(m.clone(), 1, 6, &mut rng);
            let t = definability_table(&mu, &phi(&m, text)?).map_err(|e| e.to_string())?;
            for n in 1..=5 {
                let b = level_buckets(&t, n).map_err(|e| e.to_string())?;
                if b.verify(&t).is_err() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };
    let rounding = || -> Check {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let m = rng.random_range(1..=12i64);
            let qv = ratio(rng.random_range(0..=m * 4), m * 4);
            let r = &qv * BigRational::from_integer(m.into()) + ratio(rng.random_range(-3..=3), 4 * m);
            if rounding_bucket(&qv, &r, m as usize).is_err() {
                return Ok(false);
            }
        }
        Ok(true)
    };
    vec![("level buckets verify", run()), ("some rounding lands within 1/m", rounding())]
}

fn approx_suite(seed: u64) -> Vec<(&'static str, Check)> {
    let run = || -> Check {
        let m = graph(13)?;
        let mu = counting(m.clone(), 1);
        let f = phi(&m, "[x ; y] R(x,y)")?;
        let eps = ratio(1, 4);
        let res = find_approximation(&mu, &f, &eps, Strategy::Greedy, seed, Budget::default()).map_err(|e| e.to_string())?;
        let recomputed = sup_error(&mu, &f, &res.points).map_err(|e| e.to_string())?;
        Ok(res.verified && recomputed == res.sup_error_exact && recomputed < eps)
    };
    vec![("greedy witness re-verifies below epsilon", run())]
}

fn vc_suite(_: u64) -> Vec<(&'static str, Check)> {
    let run = || -> Check {
        let m = graph(13)?;
        let rep = vc_dimension(&m, &phi(&m, "[x ; y] R(x,y)")?, 3).map_err(|e| e.to_string())?;
        let VcDimension::Exact(v) = rep.vc_dimension else {
            return Ok(true);
        };
        Ok(rep.shatter.iter().enumerate().all(|(i, &s)| u128::from(s) <= sauer_shelah_bound(v, i + 1)))
    };
    let equality = || -> Check {
        let m = graph(5)?;
        let rep = vc_dimension(&m, &phi(&m, "[x ; y] x = y")?, 3).map_err(|e| e.to_string())?;
        Ok(rep.vc_dimension == VcDimension::Exact(1))
    };
    vec![("Sauer-Shelah bound on Paley(13)", run()), ("equality has VC dimension 1", equality())]
}

fn certify_suite(seed: u64) -> Vec<(&'static str, Check)> {
    let run = || -> Check {
        let m = graph(13)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_measure(m.clone(), 1, 6, &mut rng);
        let f = phi(&m, "[x ; y] R(x,y)")?;
        let n = 3;
        let res = find_approximation(&mu, &f, &ratio(1, 6), Strategy::Greedy, seed, Budget::default()).map_err(|e| e.to_string())?;
        let t = definability_table(&mu, &f).map_err(|e| e.to_string())?;
        let b = level_buckets(&t, n).map_err(|e| e.to_string())?;
        Ok(certificate_check(&mu, &f, &res.points, &b, n).map_err(|e| e.to_string())?.passed)
    };
    vec![("certificate holds for a 1/(2n) witness", run())]
}

fn paley_suite(_: u64) -> Vec<(&'static str, Check)> {
    let regular = || -> Check {
        for q in [5u64, 13, 17, 29] {
            let m = graph(q)?;
            let rel = &m.relations()["R"];
            let mut deg = vec![0u64; m.size()];
            rel.tuples().iter().for_each(|t| deg[t[0]] += 1);
            if deg.iter().any(|&d| d != (q - 1) / 2) {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let extension = || -> Check {
        let m = graph(13)?;
        extension_property(&m, 1, 1).map_err(|e| e.to_string())
    };
    vec![
        ("Paley graphs are (q-1)/2-regular", regular()),
        ("Paley(13) has the (1,1) extension property", extension()),
        ("Paley(7) is rejected", Ok(paley(7).is_err())),
    ]
}

fn seq_suite(seed: u64) -> Vec<(&'static str, Check)> {
    let monotone = || -> Check {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<BigRational> = (0..12).map(|_| ratio(rng.random_range(0..=20), 20)).collect();
        let a = tail_stable(&values, &ratio(1, 10));
        let b = tail_stable(&values, &ratio(1, 2));
        Ok(match (a, b) {
            (Some(a), Some(b)) => b <= a,
            (Some(_), None) => false,
            _ => true,
        })
    };
    let fair = || -> Check {
        let v = coin_flip_target(&ratio(1, 2), 2, 3).map_err(|e| e.to_string())?;
        Ok(v == ratio(1, 32))
    };
    vec![("larger tolerance stabilizes no later", monotone()), ("fair coin gives 2^-(n+m)", fair())]
}

fn group_suite(seed: u64) -> Vec<(&'static str, Check)> {
    let haar_ok = || -> Check {
        for g in groups() {
            for h in subgroups(&g).map_err(|e| e.to_string())? {
                let mu = haar(&g, &h).map_err(|e| e.to_string())?;
                if !is_idempotent(&g, &mu).map_err(|e| e.to_string())? || classify_idempotent(&g, &mu).map_err(|e| e.to_string())? != Some(h) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };
    let random_not = || -> Check {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in groups().into_iter().filter(|g| g.order() > 1) {
            let haars: Vec<Measure> = subgroups(&g).unwrap().iter().map(|h| haar(&g, h).unwrap()).collect();
            for _ in 0..10 {
                let mu = random_measure(g.structure().clone(), 1, 6, &mut rng);
                if haars.iter().any(|h| h.weights() == mu.weights()) {
                    continue;
                }
                if is_idempotent(&g, &mu).map_err(|e| e.to_string())? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };
    let z6 = || -> Check { Ok(subgroups(&cyclic_group(6).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.len() == 4) };
    vec![
        ("Haar measures are idempotent and classify back", haar_ok()),
        ("random non-Haar measures are not idempotent", random_not()),
        ("Z6 has four subgroups", z6()),
    ]
}

fn dynamics_suite(_: u64) -> Vec<(&'static str, Check)> {
    let periodic = || -> Check {
        let g = cyclic_group(4).map_err(|e| e.to_string())?;
        let mu = dirac(g.structure().clone(), &[1]).map_err(|e| e.to_string())?;
        let o = convolution_powers(&g, &mu, 16, &ratio(1, 1000), false).map_err(|e| e.to_string())?;
        Ok(matches!(o.behavior, OrbitBehavior::Periodic { period: 4, .. }))
    };
    let lazy = || -> Check {
        let g = cyclic_group(4).map_err(|e| e.to_string())?;
        let mu = Measure::from_weights(g.structure().clone(), 1, [(vec![0], ratio(1, 2)), (vec![1], ratio(1, 2))]).map_err(|e| e.to_string())?;
        let o = convolution_powers(&g, &mu, 128, &ratio(1, 1000), false).map_err(|e| e.to_string())?;
        Ok(matches!(&o.behavior, OrbitBehavior::Converged { limit, .. } if limit.order() == 4))
    };
    vec![("rotation on Z4 has period 4", periodic()), ("lazy walk on Z4 converges to uniform", lazy())]
}

pub fn run(command: &'static str, seed: u64) -> Report {
    let checks = match command {
        "eval" => eval_suite(seed),
        "measure" => measure_suite(seed),
        "product" => product_suite(seed),
        "buckets" => buckets_suite(seed),
        "approx" => approx_suite(seed),
        "vc" => vc_suite(seed),
        "certify" => certify_suite(seed),
        "paley" => paley_suite(seed),
        "seq" => seq_suite(seed),
        "group" => group_suite(seed),
        "dynamics" => dynamics_suite(seed),
        other => unreachable!("no selftest for {other}"),
    };
    let mut r = Report::new(command, seed);
    let mut rows = Vec::new();
    for (name, outcome) in checks {
        let (passed, error) = match outcome {
            Ok(b) => (b, None),
            Err(e) => (false, Some(e)),
        };
        r.line(format!("[{}] {name}{}", if passed { "PASS" } else { "FAIL" }, error.as_ref().map_or(String::new(), |e| format!(": {e}"))))
            .check(passed);
        rows.push(json!({"name": name, "passed": passed, "error": error}));
    }
    r.field("selftest", rows);
    r
}
