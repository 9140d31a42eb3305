//! Small worked examples with values derived by hand, each also recomputed
//! by the brute-force oracles in `common`.

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::*;
use keisler_core::approx::{find_uniform_approximation, sup_error, Budget};
use keisler_core::defnlab::{definability_table, level_buckets, paley_obstruction_report, rounding_bucket};
use keisler_core::fol::{parse_formula, parse_partitioned, PartitionedFormula};
use keisler_core::groups::{classify_idempotent, convolution_powers, haar, is_idempotent, subgroups, CesaroRoute, OrbitBehavior, Subgroup};
use keisler_core::measures::{average, counting, dirac, measure_of, product, Measure};
use keisler_core::seqlab::{coin_flip_target, empirical_pattern_density, evaluate_along, Quantity};
use keisler_core::structures::{cyclic_group, extension_property, paley, FiniteStructure, StructureSequence};
use keisler_core::BigRational;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

fn graph(q: u64) -> Arc<FiniteStructure> {
    Arc::new(paley(q).unwrap())
}

fn phi(m: &FiniteStructure, text: &str) -> PartitionedFormula {
    parse_partitioned(text, m.signature(), &[]).unwrap()
}

#[test]
fn paley_5_is_the_five_cycle() {
    let m = graph(5);
    // residues mod 5 are {1, 4}: neighbours differ by +-1
    for a in 0..5 {
        for b in 0..5 {
            let cyc = (a + 1) % 5 == b || (b + 1) % 5 == a;
            assert_eq!(m.holds("R", &[a, b]), cyc, "{a} {b}");
        }
    }
    let f = parse_formula("R(x,y)", m.signature()).unwrap();
    let mut env = BTreeMap::from([("x".to_string(), 1), ("y".to_string(), 2)]);
    assert!(oracle_holds(&m, &f, &mut env));
}

#[test]
fn paley_5_extension_axioms() {
    let m = graph(5);
    // oracle: every (A, B) pattern with |A| = s, |B| = t has a witness
    let oracle = |s: usize, t: usize| {
        all_tuples(5, s + t).into_iter().filter(|v| {
            let mut seen = v.clone();
            seen.sort();
            seen.dedup();
            seen.len() == v.len()
        }).all(|v| {
            (0..5).any(|x| !v.contains(&x) && v[..s].iter().all(|&a| m.holds("R", &[x, a])) && v[s..].iter().all(|&b| !m.holds("R", &[x, b])))
        })
    };
    assert!(oracle(1, 0));
    assert!(extension_property(&m, 1, 0).unwrap());
    assert_eq!(extension_property(&m, 1, 1).unwrap(), oracle(1, 1));
    assert!(oracle(1, 1));
}

#[test]
fn point_masses_and_averages_on_paley_5() {
    let m = graph(5);
    let r = phi(&m, "[x ; y] R(x,y)");
    let d = dirac(m.clone(), &[0]).unwrap();
    assert_eq!(measure_of(&d, &r, &[1]).unwrap(), q(1, 1));
    assert_eq!(oracle_measure(&d, &r, &[1]), q(1, 1));
    let av = average(m.clone(), &[vec![0], vec![1]]).unwrap();
    assert_eq!(measure_of(&av, &r, &[2]).unwrap(), q(1, 2));
    assert_eq!(oracle_average(&m, &r, &[vec![0], vec![1]], &[2]), q(1, 2));
    let c = counting(m.clone(), 1);
    for b in 0..5 {
        assert_eq!(measure_of(&c, &r, &[b]).unwrap(), q(2, 5));
        assert_eq!(oracle_measure(&c, &r, &[b]), q(2, 5));
    }
    let pair = product(&c, &c).unwrap();
    let edge = phi(&m, "[x,y ; ] R(x,y)");
    assert_eq!(measure_of(&pair, &edge, &[]).unwrap(), q(10, 25));
    assert_eq!(oracle_measure(&pair, &edge, &[]), q(2, 5));
}

#[test]
fn common_neighbours_in_paley_13() {
    let m = graph(13);
    let c = counting(m.clone(), 1);
    let both = phi(&m, "[x ; y,z] R(x,y) & R(x,z)");
    // strongly regular with lambda = (q - 5) / 4 = 2
    for (b, d) in all_tuples(13, 2).into_iter().map(|t| (t[0], t[1])).filter(|&(b, d)| m.holds("R", &[b, d])) {
        assert_eq!(measure_of(&c, &both, &[b, d]).unwrap(), q(2, 13));
        assert_eq!(oracle_measure(&c, &both, &[b, d]), q(2, 13));
    }
}

#[test]
fn bucket_and_rounding_arithmetic() {
    let m = graph(13);
    let t = definability_table(&counting(m.clone(), 1), &phi(&m, "[x ; y] R(x,y)")).unwrap();
    let b = level_buckets(&t, 4).unwrap();
    // |6/13 - 1/4| = 11/52 < 1/4 and |6/13 - 1/2| = 1/26 < 1/4
    let full: Vec<usize> = (0..13).collect();
    for (i, expect) in [(0, false), (1, true), (2, true), (3, false), (4, false)] {
        assert_eq!(b.bucket(i) == full.as_slice(), expect, "bucket {i}");
        assert_eq!(b.bucket(i).is_empty(), !expect, "bucket {i}");
    }
    let c = rounding_bucket(&q(3, 10), &q(6, 5), 4).unwrap();
    assert_eq!(c.floor, BigInt::from(1));
    assert!(c.floor_ok);
}

#[test]
fn obstruction_gap_on_paley_13() {
    let rep = paley_obstruction_report(13, &q(3, 10), 4, 0).unwrap();
    assert_eq!(rep.constant_exact, Some(q(6, 13)));
    // |3/10 - 1/2| - 1/26
    assert_eq!(rep.gap_exact, q(21, 130));
    assert!(rep.obstructed && rep.all_products_match);
    let fair = paley_obstruction_report(13, &q(1, 2), 4, 0).unwrap();
    assert!(fair.gap_exact < BigRational::zero());
    assert!(!fair.obstructed);
}

#[test]
fn single_points_approximate_badly() {
    let m = graph(13);
    let c = counting(m.clone(), 1);
    let r = phi(&m, "[x ; y] R(x,y)");
    let all: Vec<Vec<usize>> = (0..13).map(|a| vec![a]).collect();
    assert_eq!(sup_error(&c, &r, &all).unwrap(), BigRational::zero());
    assert_eq!(oracle_sup_error(&c, &r, &all), BigRational::zero());
    for a in 0..13 {
        let e = sup_error(&c, &r, &[vec![a]]).unwrap();
        assert_eq!(e, oracle_sup_error(&c, &r, &[vec![a]]));
        assert!(e >= q(6, 13));
    }
}

#[test]
fn uniform_pair_with_a_conjunction_on_paley_101() {
    let m = graph(101);
    let c = counting(m.clone(), 1);
    let thetas = [phi(&m, "[x ; y] R(x,y)"), phi(&m, "[x ; y,w] R(x,y) & R(x,w)")];
    let res = find_uniform_approximation(&c, &thetas, 3, Budget::default()).unwrap();
    assert!(res.direct_accepts);
    for t in &thetas {
        assert!(oracle_sup_error(&c, t, &res.result.points) < q(1, 2), "{t}");
    }
}

#[test]
fn complement_has_the_same_error() {
    let m = graph(29);
    let c = counting(m.clone(), 1);
    let r = phi(&m, "[x ; y] R(x,y)");
    let nr = phi(&m, "[x ; y] !R(x,y)");
    for pts in [vec![vec![0]], vec![vec![1], vec![5], vec![7]], (0..10).map(|a| vec![a]).collect()] {
        assert_eq!(oracle_sup_error(&c, &r, &pts), oracle_sup_error(&c, &nr, &pts));
        assert_eq!(sup_error(&c, &r, &pts).unwrap(), sup_error(&c, &nr, &pts).unwrap());
    }
}

fn on_group(n: usize, atoms: &[(usize, (i64, i64))]) -> (keisler_core::structures::GroupTable, Measure) {
    let g = cyclic_group(n).unwrap();
    let mu = Measure::from_weights(g.structure().clone(), 1, atoms.iter().map(|&(a, (p, d))| (vec![a], q(p, d)))).unwrap();
    (g, mu)
}

#[test]
fn small_group_idempotents() {
    let g = cyclic_group(4).unwrap();
    let subs: Vec<Vec<usize>> = subgroups(&g).unwrap().iter().map(|h| h.elements().to_vec()).collect();
    assert_eq!(subs, [vec![0], vec![0, 2], vec![0, 1, 2, 3]]);
    for h in &subs {
        assert_eq!(oracle_generated(&g, h).into_iter().collect::<Vec<_>>(), *h);
    }
    let z6 = cyclic_group(6).unwrap();
    let orders: Vec<usize> = subgroups(&z6).unwrap().iter().map(Subgroup::order).collect();
    assert_eq!(orders, [1, 2, 3, 6]);

    // (2/3, 1/3) on Z2 squares to weight 5/9 at 0
    let (z2, mu) = on_group(2, &[(0, (2, 3)), (1, (1, 3))]);
    assert_eq!(oracle_convolution(&z2, &mu, &mu)[0], q(5, 9));
    assert!(!is_idempotent(&z2, &mu).unwrap());

    // uniform on {0, 1} in Z3 spreads to all of Z3 unevenly
    let (z3, mu) = on_group(3, &[(0, (1, 2)), (1, (1, 2))]);
    assert_eq!(oracle_convolution(&z3, &mu, &mu), [q(1, 4), q(1, 2), q(1, 4)]);
    assert_eq!(classify_idempotent(&z3, &mu).unwrap(), None);

    let h = Subgroup::new(&z6, [0, 3]).unwrap();
    assert_eq!(classify_idempotent(&z6, &haar(&z6, &h).unwrap()).unwrap(), Some(h));
}

#[test]
fn convolution_orbits() {
    let (z3, rot) = on_group(3, &[(1, (1, 1))]);
    let o = convolution_powers(&z3, &rot, 20, &q(1, 1000), true).unwrap();
    assert!(matches!(o.behavior, OrbitBehavior::Periodic { period: 3, .. }));
    let ces = o.cesaro.unwrap();
    assert_eq!(ces.route, Some(CesaroRoute::CycleAverage));
    assert_eq!(ces.limit.unwrap().order(), 3);

    let (z4, lazy) = on_group(4, &[(0, (1, 2)), (1, (1, 2))]);
    let tol = BigRational::new(BigInt::one(), BigInt::from(10u64).pow(9));
    let o = convolution_powers(&z4, &lazy, 200, &tol, false).unwrap();
    let OrbitBehavior::Converged { index, limit } = &o.behavior else {
        panic!("{:?}", o.behavior);
    };
    assert_eq!(limit.order(), 4);
    // oracle: iterate the dense convolution and check the distance at `index`
    let mut power = lazy.clone();
    for _ in 1..*index {
        let next = oracle_convolution(&z4, &power, &lazy);
        power = Measure::from_weights(z4.structure().clone(), 1, next.into_iter().enumerate().filter(|(_, w)| !w.is_zero()).map(|(a, w)| (vec![a], w))).unwrap();
    }
    let tv: BigRational = dense(&power).iter().map(|w| (w - q(1, 4)).abs()).sum::<BigRational>() / q(2, 1);
    assert!(tv < tol);

    let h = Subgroup::new(&z4, [0, 2]).unwrap();
    let o = convolution_powers(&z4, &haar(&z4, &h).unwrap(), 10, &q(1, 1000), false).unwrap();
    assert_eq!(o.behavior, OrbitBehavior::Converged { index: 1, limit: h });
}

#[test]
fn paley_densities_along_a_sequence() {
    let qs = [5, 13, 17, 29, 37, 41];
    let seq = StructureSequence::paley(&qs).unwrap();
    let (_, first) = seq.iter().next().unwrap();
    let r = phi(first, "[x ; y] R(x,y)");
    let rep = evaluate_along(&seq, &Quantity::Counting(r.clone()), &[q(1, 10)]).unwrap();
    let expected = [q(2, 5), q(6, 13), q(8, 17), q(14, 29), q(18, 37), q(20, 41)];
    assert_eq!(rep.exact_values(), expected);
    for ((_, m), e) in seq.iter().zip(&expected) {
        assert_eq!(oracle_measure(&counting(m.clone(), 1), &r, &[0]), *e);
    }
    assert_eq!(rep.stability[0].index, Some(0));

    // adjacent to a, not to b, for an adjacent pair: (q + 3) / 4q by brute count
    let mut densities = Vec::new();
    for (q_, m) in seq.iter() {
        let (a, b) = (0, (1..m.size()).find(|&b| m.holds("R", &[0, b])).unwrap());
        let v = empirical_pattern_density(m, &[a], &[b]).unwrap();
        let brute = (0..m.size()).filter(|&x| m.holds("R", &[x, a]) && !m.holds("R", &[x, b])).count();
        assert_eq!(v, q(brute as i64, q_ as i64));
        densities.push(v);
    }
    let last = densities.last().unwrap();
    assert!((last - q(1, 4)).abs() < (last - q(21, 100)).abs());
}

#[test]
fn coin_flip_values() {
    assert_eq!(coin_flip_target(&q(1, 3), 0, 0).unwrap(), BigRational::one());
    assert_eq!(coin_flip_target(&q(1, 2), 2, 1).unwrap(), q(1, 8));
    assert_eq!(coin_flip_target(&q(3, 10), 1, 1).unwrap(), q(3, 10) * q(7, 10));
}
