use std::sync::Arc;

use keisler_core::approx::{
    certificate_check, find_approximation, find_uniform_approximation, sauer_shelah_bound, vc_dimension, ApproxError,
    ApproxResult, Budget, Strategy, VcDimension,
};
use keisler_core::defnlab::{definability_table, level_buckets, paley_obstruction_report};
use keisler_core::exact::{format_rational, ratio, ExactValue};
use keisler_core::fol::{evaluate, parse_formula, swap_partition, Assignment, Evaluator};
use keisler_core::groups::{classify_idempotent, convolution_powers, haar, is_idempotent, subgroups, GroupError, OrbitBehavior};
use keisler_core::measures::{measure_of, morley, morley_measure, product, random_measure, Measure, MeasureSummary};
use keisler_core::seqlab::{
    coin_flip_report, empirical_pattern_density, evaluate_along, load_manifest, within_quasi_random_bound, Quantity,
};
use keisler_core::structures::{extension_property, paley as paley_graph, FiniteStructure, StructureSequence};
use num_traits::Pow;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::input::{elements, load_measure, measure_or_counting, parse_with, rational, tuples};
use crate::report::{Outcome, Report, UsageError};
use crate::{
    ApproxArgs, BucketArgs, CertifyArgs, DynamicsArgs, EvalArgs, GroupArgs, MeasureArgs, PaleyArgs, PaleyCheck,
    ProductArgs, ProductCheck, QuantityKind, SeqArgs, VcArgs,
};

/// Rows shown in table mode before eliding.
const TABLE_ROWS: usize = 32;

fn exact(r: &keisler_core::BigRational) -> String {
    format!("{} ({:.6})", format_rational(r), ExactValue::from(r).decimal)
}

fn shown(v: &ExactValue) -> String {
    format!("{} ({:.6})", v.exact, v.decimal)
}

fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, UsageError> {
    v.clone().ok_or_else(|| UsageError(format!("{flag} is required")))
}

pub fn eval(a: &EvalArgs, seed: u64) -> Outcome {
    let m = a.source.load()?;
    let f = parse_formula(&required(&a.formula, "--formula")?, m.signature())?;
    let free = f.free_vars();
    let mut r = Report::new("eval", seed);
    r.field("structure", a.source.describe())
        .field("size", m.size())
        .field("formula", f.to_string())
        .field("free_vars", &free);
    if free.is_empty() {
        let holds = evaluate(&m, &f, &Assignment::new())?;
        r.field("holds", holds).line(format!("{f}: {holds}"));
        if let Some(e) = a.expect {
            r.field("expected", e).check(holds == e);
        }
        return Ok(r);
    }
    if a.expect.is_some() {
        return Err(UsageError("--expect needs a sentence".into()));
    }
    let ev = Evaluator::new(&m, &f, &free)?;
    let mut count = 0usize;
    let mut listed = Vec::new();
    for t in m.tuples(free.len()) {
        if ev.eval(&t) {
            count += 1;
            if listed.len() < a.limit {
                listed.push(t);
            }
        }
    }
    r.line(format!("{f}: {count} satisfying tuple(s) in ({})", free.join(", ")));
    for t in listed.iter().take(TABLE_ROWS) {
        r.line(format!("  {t:?}"));
    }
    r.field("satisfying_count", count)
        .field("truncated", count > listed.len())
        .field("satisfying", listed);
    Ok(r)
}

pub fn measure(a: &MeasureArgs, seed: u64) -> Outcome {
    let m = a.source.load()?;
    let phi = a.formula.parse(&m)?;
    let mu = measure_or_counting(a.measure.as_deref(), &m, phi.object_arity())?;
    let mut r = Report::new("measure", seed);
    r.field("structure", a.source.describe())
        .field("formula", phi.to_string())
        .field("measure", MeasureSummary::from(&mu));
    if let Some(p) = &a.params {
        let b = elements(p)?;
        let v = measure_of(&mu, &phi, &b)?;
        r.field("params", &b).field("value", ExactValue::from(&v));
        r.line(format!("mu({phi}) at {b:?} = {}", exact(&v)));
        return Ok(r);
    }
    let table = definability_table(&mu, &phi)?;
    let rows: Vec<_> = table.iter().map(|(b, v)| json!({"params": b, "value": ExactValue::from(v)})).collect();
    r.field("values", rows);
    match table.constant_value() {
        Some(c) => {
            r.field("constant", ExactValue::from(c));
            r.line(format!("mu({phi}) is constant: {}", exact(c)));
        }
        None => {
            let (lo, hi) = table.min_max().expect("non-constant table is non-empty");
            r.field("min", ExactValue::from(lo)).field("max", ExactValue::from(hi));
            r.line(format!("mu({phi}) ranges over [{}, {}]", exact(lo), exact(hi)));
            for (b, v) in table.iter().take(TABLE_ROWS) {
                r.line(format!("  {b:?}: {}", exact(v)));
            }
        }
    }
    Ok(r)
}

pub fn product_cmd(a: &ProductArgs, seed: u64) -> Outcome {
    let m = a.source.load()?;
    let phi = a.formula.parse(&m)?;
    let mu = measure_or_counting(a.mu.as_deref(), &m, phi.object_arity())?;
    let nu = match &a.nu {
        Some(p) => load_measure(p, &m)?,
        None => random_measure(m.clone(), phi.param_arity(), 8, &mut ChaCha8Rng::seed_from_u64(seed)),
    };
    if nu.arity() != phi.param_arity() {
        return Err(UsageError(format!("nu has {} variables, formula has {} parameters", nu.arity(), phi.param_arity())));
    }
    let left = morley(&mu, &nu, &phi, &[])?;
    let right = morley(&nu, &mu, &swap_partition(&phi), &[])?;
    let agrees = product(&mu, &nu)?.weights() == morley_measure(&mu, &nu)?.weights();
    let mut r = Report::new("product", seed);
    r.field("structure", a.source.describe())
        .field("formula", phi.to_string())
        .field("mu", MeasureSummary::from(&mu))
        .field("nu", MeasureSummary::from(&nu))
        .field("mu_then_nu", ExactValue::from(&left))
        .field("nu_then_mu", ExactValue::from(&right))
        .field("commute", left == right)
        .field("product_agrees", agrees);
    r.line(format!("(mu ⊗ nu)({phi}) = {}", exact(&left)))
        .line(format!("(nu ⊗ mu)({phi}) = {}", exact(&right)))
        .line(format!("orders commute: {}", left == right))
        .line(format!("Morley product equals product measure: {agrees}"));
    r.check(agrees);
    if a.check == Some(ProductCheck::Commute) {
        r.check(left == right);
    }
    Ok(r)
}

pub fn buckets(a: &BucketArgs, seed: u64) -> Outcome {
    let m = a.source.load()?;
    let phi = a.formula.parse(&m)?;
    let n = required(&a.n, "--n")?;
    let mu = measure_or_counting(a.measure.as_deref(), &m, phi.object_arity())?;
    let table = definability_table(&mu, &phi)?;
    let lb = level_buckets(&table, n)?;
    let verified = lb.verify(&table);
    let mut r = Report::new("buckets", seed);
    let rows: Vec<_> = (0..=n)
        .map(|i| {
            let params: Vec<Vec<usize>> = lb.bucket(i).iter().map(|&idx| table.params_at(idx)).collect();
            json!({"level": format!("{i}/{n}"), "params": params})
        })
        .collect();
    r.field("structure", a.source.describe())
        .field("formula", phi.to_string())
        .field("granularity", n)
        .field("buckets", rows)
        .field("verified", verified.is_ok());
    for i in 0..=n {
        r.line(format!("level {i}/{n}: {} parameter(s)", lb.bucket(i).len()));
    }
    if let Err(v) = &verified {
        r.field("violation", format!("{v:?}")).line(format!("violation: {v:?}"));
    }
    r.check(verified.is_ok());
    Ok(r)
}

fn approx_lines(r: &mut Report, res: &ApproxResult) {
    r.line(format!("{} point(s), sup-error {} < {}", res.points.len(), shown(&res.sup_error), res.threshold.exact))
        .line(format!("verified exactly: {}, rounds used: {}", res.verified, res.rounds_used));
    let head: Vec<String> = res.points.iter().take(TABLE_ROWS).map(|p| format!("{p:?}")).collect();
    r.line(format!("points: {}{}", head.join(" "), if res.points.len() > TABLE_ROWS { " ..." } else { "" }));
}

pub fn approx(a: &ApproxArgs, seed: u64) -> Outcome {
    let m = a.source.load()?;
    if a.formula.is_empty() {
        return Err(UsageError("--formula is required".into()));
    }
    let thetas = a.formula.iter().map(|f| parse_with(f, &m, &a.objects)).collect::<Result<Vec<_>, _>>()?;
    let mu = measure_or_counting(a.measure.as_deref(), &m, thetas[0].object_arity())?;
    let strategy: Strategy = a.strategy.parse()?;
    let budget = Budget {
        rounds: a.budget,
        max_points: a.max_points,
    };
    let mut r = Report::new("approx", seed);
    r.field("structure", a.source.describe())
        .field("formulas", thetas.iter().map(|t| t.to_string()).collect::<Vec<_>>())
        .field("budget", budget);
    let outcome = if thetas.len() == 1 {
        let eps = rational(&required(&a.epsilon, "--epsilon")?)?;
        r.field("epsilon", ExactValue::from(&eps));
        find_approximation(&mu, &thetas[0], &eps, strategy, seed, budget).map(|res| {
            approx_lines(&mut r, &res);
            r.field("result", &res);
        })
    } else {
        find_uniform_approximation(&mu, &thetas, seed, budget).map(|u| {
            approx_lines(&mut r, &u.result);
            for (t, e) in thetas.iter().zip(&u.per_formula) {
                r.line(format!("  {t}: {}", shown(e)));
            }
            r.line(format!("per-formula route accepts: {}", u.direct_accepts)).line(format!(
                "selector route accepts: {}",
                u.selector_accepts.map_or("n/a".to_string(), |b| b.to_string())
            ));
            r.check(u.direct_accepts);
            r.field("result", &u);
        })
    };
    match outcome {
        Ok(()) => Ok(r),
        Err(ApproxError::BudgetExhausted { best }) => {
            r.line("budget exhausted; best witness follows");
            approx_lines(&mut r, &best);
            r.field("result", &*best).field("budget_exhausted", true).check(false);
            Ok(r)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn vc(a: &VcArgs, seed: u64) -> Outcome {
    let m = a.source.load()?;
    let phi = a.formula.parse(&m)?;
    let rep = vc_dimension(&m, &phi, a.cap)?;
    let mut r = Report::new("vc", seed);
    r.field("structure", a.source.describe()).field("formula", phi.to_string()).field("cap", a.cap);
    let (dim, exact_dim) = match rep.vc_dimension {
        VcDimension::Exact(d) => (format!("{d}"), Some(d)),
        VcDimension::AtLeast(d) => (format!("at least {d}"), None),
    };
    r.line(format!("VC dimension: {dim}"));
    let mut bounds = Vec::new();
    for (i, &s) in rep.shatter.iter().enumerate() {
        let d = i + 1;
        match exact_dim {
            Some(v) => {
                let bound = sauer_shelah_bound(v, d);
                r.line(format!("shatter({d}) = {s} <= {bound}")).check(u128::from(s) <= bound);
                bounds.push(json!({"d": d, "shatter": s, "bound": bound.to_string()}));
            }
            None => {
                r.line(format!("shatter({d}) = {s}"));
            }
        }
    }
    r.field("report", &rep).field("sauer_shelah", bounds);
    Ok(r)
}

pub fn certify(a: &CertifyArgs, seed: u64) -> Outcome {
    let m = a.source.load()?;
    let phi = a.formula.parse(&m)?;
    let n = required(&a.n, "--n")?;
    if n == 0 {
        return Err(UsageError("--n must be at least 1".into()));
    }
    let mu = measure_or_counting(a.measure.as_deref(), &m, phi.object_arity())?;
    let mut r = Report::new("certify", seed);
    r.field("structure", a.source.describe()).field("formula", phi.to_string()).field("granularity", n);
    let points = match &a.points {
        Some(p) => tuples(p)?,
        None => {
            let eps = ratio(1, 2 * n as i64);
            let budget = Budget {
                rounds: a.budget,
                ..Budget::default()
            };
            r.field("epsilon", ExactValue::from(&eps));
            match find_approximation(&mu, &phi, &eps, Strategy::Greedy, seed, budget) {
                Ok(res) => res.points,
                Err(ApproxError::BudgetExhausted { best }) => {
                    r.line("approximation budget exhausted; certifying the best witness").check(false);
                    best.points
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    let table = definability_table(&mu, &phi)?;
    let lb = level_buckets(&table, n)?;
    let cert = certificate_check(&mu, &phi, &points, &lb, n)?;
    r.line(format!("{} point(s), certificate {}", cert.point_count, if cert.passed { "passed" } else { "failed" }));
    if let Some(cx) = &cert.counterexample {
        r.line(format!("counterexample: params {:?}, condition {}, bucket {}", cx.params, cx.condition, cx.bucket));
    }
    r.check(cert.passed).field("certificate", &cert);
    Ok(r)
}

fn degree_check(m: &FiniteStructure, q: u64, r: &mut Report) {
    let rel = m.relations().values().next().expect("Paley graphs carry one relation");
    let mut degrees = vec![0usize; m.size()];
    for t in rel.tuples() {
        degrees[t[0]] += 1;
    }
    let expected = ((q - 1) / 2) as usize;
    let regular = degrees.iter().all(|&d| d == degrees[0]);
    if regular {
        r.line(format!("regular of degree {}", degrees[0]));
    } else {
        r.line(format!("not regular: degrees range over {:?}", (degrees.iter().min(), degrees.iter().max())));
    }
    r.field("degrees", &degrees)
        .field("regular", regular)
        .field("expected_degree", expected)
        .check(regular && degrees[0] == expected);
}

pub fn paley(a: &PaleyArgs, seed: u64) -> Outcome {
    let q = required(&a.q, "--q")?;
    let m = paley_graph(q)?;
    let mut r = Report::new("paley", seed);
    r.field("q", q);
    match a.check {
        PaleyCheck::Degree => degree_check(&m, q, &mut r),
        PaleyCheck::Extension => {
            let holds = extension_property(&m, a.s, a.t)?;
            r.field("s", a.s).field("t", a.t).field("holds", holds);
            r.line(format!("extension property ({}, {}): {holds}", a.s, a.t)).check(holds);
        }
        PaleyCheck::Obstruction => {
            let p = rational(&a.p)?;
            let rep = paley_obstruction_report(q, &p, a.samples, seed)?;
            r.line(format!("counting measure of R(x,y): {}", shown(&rep.constant_value)))
                .line(format!("both product orders match on {} sample(s): {}", rep.samples.len(), rep.all_products_match))
                .line(format!("gap to target {}: {}", rep.target.exact, shown(&rep.gap)))
                .line(format!("obstructed: {}", rep.obstructed));
            r.check(rep.all_products_match && rep.table_is_constant).field("report", &rep);
        }
        PaleyCheck::QuasiRandom => {
            let adj = elements(&a.adjacent)?;
            let non = elements(&a.non_adjacent)?;
            let density = empirical_pattern_density(&m, &adj, &non)?;
            let k = u32::try_from(adj.len() + non.len()).map_err(UsageError::from)?;
            let target = Pow::pow(ratio(1, 2), k as i32);
            let within = within_quasi_random_bound(&density, &target, q);
            r.field("adjacent", &adj)
                .field("non_adjacent", &non)
                .field("density", ExactValue::from(&density))
                .field("target", ExactValue::from(&target))
                .field("within_bound", within);
            r.line(format!("pattern density {} against {}", exact(&density), exact(&target)))
                .line(format!("within 3/sqrt(q): {within}"))
                .check(within);
        }
    }
    Ok(r)
}

pub fn seq(a: &SeqArgs, seed: u64) -> Outcome {
    let mut r = Report::new("seq", seed);
    if let Some(bias) = &a.bias {
        let rep = coin_flip_report(&rational(bias)?, a.n, a.m)?;
        r.line(format!("p^n (1-p)^m = {}", shown(&rep.target)));
        if let Some(rf) = &rep.reciprocal_form {
            r.line(format!("reciprocal form (not a probability): {}", shown(rf)));
        }
        r.field("coin_flip", &rep);
        return Ok(r);
    }
    let sequence = match (&a.manifest, a.qs.is_empty()) {
        (Some(p), true) => load_manifest(p)?,
        (None, false) => StructureSequence::paley(&a.qs)?,
        _ => return Err(UsageError("give exactly one of --manifest or --qs".into())),
    };
    let (_, first) = sequence.iter().next().expect("sequences are non-empty");
    let first: Arc<FiniteStructure> = first.clone();
    let formula = || required(&a.formula, "--formula");
    let quantity = match a.quantity {
        QuantityKind::Sentence => Quantity::Sentence(parse_formula(&formula()?, first.signature())?),
        QuantityKind::Counting => Quantity::Counting(parse_with(&formula()?, &first, &a.objects)?),
        QuantityKind::Morley => Quantity::Morley {
            formula: parse_with(&formula()?, &first, &a.objects)?,
            seed,
            counting_first: !a.reverse,
        },
        QuantityKind::Extension => Quantity::Extension { s: a.s, t: a.t },
    };
    let eps = a.epsilon.iter().map(|e| rational(e)).collect::<Result<Vec<_>, _>>()?;
    let rep = evaluate_along(&sequence, &quantity, &eps)?;
    r.line(rep.quantity.clone());
    for v in &rep.values {
        r.line(format!("  {}: {}", v.label, shown(&v.value)));
    }
    for s in &rep.stability {
        match (&s.index, &s.band) {
            (Some(i), Some((lo, hi))) => {
                r.line(format!("eps {}: stable from index {i}, band [{}, {}]", s.epsilon.exact, lo.exact, hi.exact))
            }
            _ => r.line(format!("eps {}: not stable at this horizon", s.epsilon.exact)),
        };
    }
    if a.require_stable {
        r.check(rep.stability.iter().all(|s| s.index.is_some()));
    }
    r.field("sequence", &rep);
    Ok(r)
}

pub fn group(a: &GroupArgs, seed: u64) -> Outcome {
    let g = a.source.load()?;
    let subs = subgroups(&g)?;
    let mut r = Report::new("group", seed);
    r.field("group", a.source.describe()).field("order", g.order()).field("subgroups", &subs);
    r.line(format!("group of order {} with {} subgroup(s)", g.order(), subs.len()));
    if a.classify_idempotents {
        let mut rows = Vec::new();
        for h in &subs {
            let mu = haar(&g, h)?;
            let idempotent = is_idempotent(&g, &mu)?;
            let roundtrip = classify_idempotent(&g, &mu)?.as_ref() == Some(h);
            r.line(format!(
                "Haar measure on {:?}: weight 1/{} each, idempotent: {idempotent}, classified back: {roundtrip}",
                h.elements(),
                h.order()
            ))
            .check(idempotent && roundtrip);
            rows.push(json!({"subgroup": h, "measure": MeasureSummary::from(&mu), "idempotent": idempotent, "roundtrip": roundtrip}));
        }
        r.line(format!("{} Haar measure(s)", rows.len())).field("haar_measures", rows);
    }
    if let Some(p) = &a.measure {
        let mu = load_measure(p, g.structure())?;
        r.field("measure", MeasureSummary::from(&mu));
        match classify_idempotent(&g, &mu) {
            Ok(Some(h)) => {
                r.line(format!("idempotent: Haar measure on {:?}", h.elements()))
                    .field("idempotent", true)
                    .field("haar_of", &h);
            }
            Ok(None) => {
                r.line("not idempotent").field("idempotent", false).check(!a.require_idempotent);
            }
            Err(e @ GroupError::Inconsistent { .. }) => {
                r.line(format!("classification inconsistent: {e}")).field("inconsistent", e.to_string()).check(false);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(r)
}

pub fn dynamics(a: &DynamicsArgs, seed: u64) -> Outcome {
    let g = a.source.load()?;
    let mu: Measure = match &a.measure {
        Some(p) => load_measure(p, g.structure())?,
        None => random_measure(g.structure().clone(), 1, 8, &mut ChaCha8Rng::seed_from_u64(seed)),
    };
    let tol = rational(&a.tol)?;
    let orbit = convolution_powers(&g, &mu, a.n, &tol, a.cesaro)?;
    let mut r = Report::new("dynamics", seed);
    r.field("group", a.source.describe()).field("start", MeasureSummary::from(&mu)).field("max_n", a.n);
    match &orbit.behavior {
        OrbitBehavior::Converged { index, limit } => {
            r.line(format!("converged at n = {index} to the Haar measure on {:?}", limit.elements()))
        }
        OrbitBehavior::Periodic { start, period } => r.line(format!("periodic from n = {start} with period {period}")),
        OrbitBehavior::BudgetExhausted => r.line(format!("no convergence or recurrence within {} powers", a.n)),
    };
    if let Some(c) = &orbit.cesaro {
        match &c.limit {
            Some(h) => r.line(format!(
                "Cesàro averages tend to the Haar measure on {:?} via {}",
                h.elements(),
                serde_json::to_value(c.route).expect("route serializes")
            )),
            None => r.line("Cesàro averages undecided"),
        };
    }
    if a.require_convergence {
        r.check(matches!(orbit.behavior, OrbitBehavior::Converged { .. }));
    }
    if let Some(last) = orbit.iterates.last() {
        r.field("last_iterate", MeasureSummary::from(last));
    }
    r.field("orbit", &orbit);
    Ok(r)
}
