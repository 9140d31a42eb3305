//! Python module `keisler_lab`. Rationals cross the boundary as
//! `fractions.Fraction`; ints and `"p/q"` strings are accepted on input, floats
//! are refused. Structured reports come back as plain dicts.

use std::sync::Arc;

use keisler_core::approx::{self, Budget, Strategy};
use keisler_core::defnlab::{definability_table, level_buckets as buckets};
use keisler_core::exact::{format_rational, parse_rational};
use keisler_core::fol::{self, parse_formula, parse_partitioned, PartitionedFormula};
use keisler_core::groups::{self, Subgroup};
use keisler_core::measures::{self, Measure as CoreMeasure};
use keisler_core::seqlab::{self, Quantity};
use keisler_core::structures::{self, FiniteStructure, GroupTable, StructureSequence};
use keisler_core::BigRational;
use num_bigint::BigInt;
use pyo3::exceptions::{PyTypeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, r: &BigRational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((format_rational(r),))
}

fn rational(obj: &Bound<'_, PyAny>) -> PyResult<BigRational> {
    if let Ok(s) = obj.extract::<String>() {
        return parse_rational(&s).map_err(err);
    }
    if obj.hasattr("numerator")? && obj.hasattr("denominator")? {
        let part = |name: &str| -> PyResult<BigInt> {
            obj.getattr(name)?.str()?.to_str()?.parse::<BigInt>().map_err(err)
        };
        let den = part("denominator")?;
        if den == BigInt::from(0) {
            return Err(PyValueError::new_err("zero denominator"));
        }
        return Ok(BigRational::new(part("numerator")?, den));
    }
    Err(PyTypeError::new_err("expected an int, a Fraction or a \"p/q\" string"))
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A finite structure.
#[pyclass(frozen)]
struct Structure {
    inner: Arc<FiniteStructure>,
}

#[pymethods]
impl Structure {
    #[staticmethod]
    fn paley(q: u64) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(structures::paley(q).map_err(err)?),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(structures::structure_from_json(text).map_err(err)?),
        })
    }

    fn to_json(&self) -> String {
        structures::structure_to_json(&self.inner).to_string()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    fn holds(&self, relation: &str, elements: Vec<usize>) -> bool {
        self.inner.holds(relation, &elements)
    }

    /// Truth of a sentence.
    fn evaluate(&self, sentence: &str) -> PyResult<bool> {
        let f = parse_formula(sentence, self.inner.signature()).map_err(err)?;
        fol::evaluate(&self.inner, &f, &fol::Assignment::new()).map_err(err)
    }

    /// Satisfying tuples of a formula in its free variables, in order of
    /// first occurrence.
    fn satisfying(&self, formula: &str) -> PyResult<(Vec<String>, Vec<Vec<usize>>)> {
        let f = parse_formula(formula, self.inner.signature()).map_err(err)?;
        let free = f.free_vars();
        let ev = fol::Evaluator::new(&self.inner, &f, &free).map_err(err)?;
        let hits = self.inner.tuples(free.len()).filter(|t| ev.eval(t)).collect();
        Ok((free, hits))
    }

    fn extension_property(&self, s: usize, t: usize) -> PyResult<bool> {
        structures::extension_property(&self.inner, s, t).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Structure(size={})", self.inner.size())
    }
}

/// A formula with its variables split into objects and parameters.
#[pyclass(frozen)]
struct Formula {
    inner: PartitionedFormula,
}

#[pymethods]
impl Formula {
    /// Parses `text` over the signature of `structure`. Without a leading
    /// `[x ; y]` annotation, `objects` names the object variables.
    #[new]
    #[pyo3(signature = (text, structure, objects = vec!["x".to_string()]))]
    fn new(text: &str, structure: &Structure, objects: Vec<String>) -> PyResult<Self> {
        let objs: Vec<&str> = objects.iter().map(String::as_str).collect();
        Ok(Self {
            inner: parse_partitioned(text, structure.inner.signature(), &objs).map_err(err)?,
        })
    }

    #[getter]
    fn objects(&self) -> Vec<String> {
        self.inner.objects().to_vec()
    }

    #[getter]
    fn params(&self) -> Vec<String> {
        self.inner.params().to_vec()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Formula({:?})", self.inner.to_string())
    }
}

/// An exact probability measure on tuples of a structure.
#[pyclass(frozen)]
struct Measure {
    inner: CoreMeasure,
}

impl Measure {
    fn wrap(inner: CoreMeasure) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl Measure {
    #[staticmethod]
    fn counting(structure: &Structure, arity: usize) -> Self {
        Self::wrap(measures::counting(structure.inner.clone(), arity))
    }

    #[staticmethod]
    fn dirac(structure: &Structure, point: Vec<usize>) -> PyResult<Self> {
        Ok(Self::wrap(measures::dirac(structure.inner.clone(), &point).map_err(err)?))
    }

    #[staticmethod]
    fn average(structure: &Structure, points: Vec<Vec<usize>>) -> PyResult<Self> {
        Ok(Self::wrap(measures::average(structure.inner.clone(), &points).map_err(err)?))
    }

    /// From `[(point, weight), ...]`; weights must sum to exactly one.
    #[staticmethod]
    fn from_weights(structure: &Structure, arity: usize, atoms: Vec<(Vec<usize>, Bound<'_, PyAny>)>) -> PyResult<Self> {
        let atoms = atoms
            .iter()
            .map(|(p, w)| Ok((p.clone(), rational(w)?)))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self::wrap(CoreMeasure::from_weights(structure.inner.clone(), arity, atoms).map_err(err)?))
    }

    #[staticmethod]
    fn from_json(structure: &Structure, text: &str) -> PyResult<Self> {
        Ok(Self::wrap(CoreMeasure::from_json(structure.inner.clone(), text).map_err(err)?))
    }

    #[staticmethod]
    #[pyo3(signature = (structure, arity, seed, max_atoms = 8))]
    fn random(structure: &Structure, arity: usize, seed: u64, max_atoms: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::wrap(measures::random_measure(structure.inner.clone(), arity, max_atoms, &mut rng))
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[getter]
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    /// `{point: Fraction}` over the support.
    fn weights<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (p, w) in self.inner.weights() {
            d.set_item(pyo3::types::PyTuple::new(py, p)?, fraction(py, w)?)?;
        }
        Ok(d)
    }

    /// `mu(phi(x, params))`.
    #[pyo3(signature = (formula, params = vec![]))]
    fn of<'py>(&self, py: Python<'py>, formula: &Formula, params: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &measures::measure_of(&self.inner, &formula.inner, &params).map_err(err)?)
    }

    /// `{params: Fraction}` over every parameter tuple.
    fn table<'py>(&self, py: Python<'py>, formula: &Formula) -> PyResult<Bound<'py, PyDict>> {
        let t = definability_table(&self.inner, &formula.inner).map_err(err)?;
        let d = PyDict::new(py);
        for (b, v) in t.iter() {
            d.set_item(pyo3::types::PyTuple::new(py, b)?, fraction(py, v)?)?;
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Measure(arity={}, atoms={})", self.inner.arity(), self.inner.weights().len())
    }
}

#[pyfunction]
fn product(mu: &Measure, nu: &Measure) -> PyResult<Measure> {
    Ok(Measure::wrap(measures::product(&mu.inner, &nu.inner).map_err(err)?))
}

/// `(mu ⊗ nu)(phi)`, integrating `b -> mu(phi(x, b))` against `nu`.
#[pyfunction]
fn morley<'py>(py: Python<'py>, mu: &Measure, nu: &Measure, formula: &Formula) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &measures::morley(&mu.inner, &nu.inner, &formula.inner, &[]).map_err(err)?)
}

#[pyfunction]
fn morley_measure(mu: &Measure, nu: &Measure) -> PyResult<Measure> {
    Ok(Measure::wrap(measures::morley_measure(&mu.inner, &nu.inner).map_err(err)?))
}

#[pyfunction]
fn tv_distance<'py>(py: Python<'py>, mu: &Measure, nu: &Measure) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &measures::tv_distance(&mu.inner, &nu.inner).map_err(err)?)
}

/// Parameter tuples per level `0/n ..= n/n`.
#[pyfunction]
fn level_buckets(mu: &Measure, formula: &Formula, n: usize) -> PyResult<Vec<Vec<Vec<usize>>>> {
    let t = definability_table(&mu.inner, &formula.inner).map_err(err)?;
    let b = buckets(&t, n).map_err(err)?;
    b.verify(&t).map_err(|v| err(format!("{v:?}")))?;
    Ok(b.buckets().iter().map(|idx| idx.iter().map(|&i| t.params_at(i)).collect()).collect())
}

#[pyfunction]
#[pyo3(signature = (mu, formula, epsilon, strategy = "greedy", seed = 0, rounds = 64, max_points = 4096))]
#[allow(clippy::too_many_arguments)]
fn find_approximation<'py>(
    py: Python<'py>,
    mu: &Measure,
    formula: &Formula,
    epsilon: Bound<'py, PyAny>,
    strategy: &str,
    seed: u64,
    rounds: usize,
    max_points: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let strategy: Strategy = strategy.parse().map_err(err)?;
    let budget = Budget { rounds, max_points };
    let res = approx::find_approximation(&mu.inner, &formula.inner, &rational(&epsilon)?, strategy, seed, budget).map_err(err)?;
    to_py(py, &res)
}

#[pyfunction]
#[pyo3(signature = (mu, formulas, seed = 0, rounds = 64, max_points = 4096))]
fn find_uniform_approximation<'py>(
    py: Python<'py>,
    mu: &Measure,
    formulas: Vec<PyRef<'py, Formula>>,
    seed: u64,
    rounds: usize,
    max_points: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let thetas: Vec<PartitionedFormula> = formulas.iter().map(|f| f.inner.clone()).collect();
    let res = approx::find_uniform_approximation(&mu.inner, &thetas, seed, Budget { rounds, max_points }).map_err(err)?;
    to_py(py, &res)
}

#[pyfunction]
fn sup_error<'py>(py: Python<'py>, mu: &Measure, formula: &Formula, points: Vec<Vec<usize>>) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &approx::sup_error(&mu.inner, &formula.inner, &points).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (structure, formula, cap = 3))]
fn vc_dimension<'py>(py: Python<'py>, structure: &Structure, formula: &Formula, cap: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &approx::vc_dimension(&structure.inner, &formula.inner, cap).map_err(err)?)
}

#[pyfunction]
fn certificate_check<'py>(
    py: Python<'py>,
    mu: &Measure,
    formula: &Formula,
    points: Vec<Vec<usize>>,
    n: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let t = definability_table(&mu.inner, &formula.inner).map_err(err)?;
    let b = buckets(&t, n).map_err(err)?;
    to_py(py, &approx::certificate_check(&mu.inner, &formula.inner, &points, &b, n).map_err(err)?)
}

/// A finite group with its subgroup lattice and idempotent measures.
#[pyclass(frozen)]
struct Group {
    inner: GroupTable,
}

impl Group {
    fn subgroup(&self, elements: Vec<usize>) -> PyResult<Subgroup> {
        Subgroup::new(&self.inner, elements).map_err(err)
    }
}

#[pymethods]
impl Group {
    #[staticmethod]
    fn cyclic(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: structures::cyclic_group(n).map_err(err)?,
        })
    }

    /// The dihedral group of order `2n`.
    #[staticmethod]
    fn dihedral(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: structures::dihedral_group(n).map_err(err)?,
        })
    }

    #[staticmethod]
    fn quaternion() -> Self {
        Self {
            inner: structures::quaternion_group(),
        }
    }

    #[staticmethod]
    fn s3() -> Self {
        Self {
            inner: structures::symmetric_group_s3(),
        }
    }

    #[staticmethod]
    fn from_table(table: Vec<Vec<usize>>) -> PyResult<Self> {
        Ok(Self {
            inner: structures::group_from_table(&table).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let m = structures::structure_from_json(text).map_err(err)?;
        Ok(Self {
            inner: GroupTable::from_structure(m).map_err(err)?,
        })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn structure(&self) -> Structure {
        Structure {
            inner: self.inner.structure().clone(),
        }
    }

    fn mul(&self, a: usize, b: usize) -> usize {
        self.inner.mul(a, b)
    }

    fn subgroups(&self) -> PyResult<Vec<Vec<usize>>> {
        Ok(groups::subgroups(&self.inner).map_err(err)?.into_iter().map(|h| h.elements().to_vec()).collect())
    }

    fn haar(&self, elements: Vec<usize>) -> PyResult<Measure> {
        let h = self.subgroup(elements)?;
        Ok(Measure::wrap(groups::haar(&self.inner, &h).map_err(err)?))
    }

    fn convolve(&self, mu: &Measure, nu: &Measure) -> PyResult<Measure> {
        Ok(Measure::wrap(measures::convolution(&self.inner, &mu.inner, &nu.inner).map_err(err)?))
    }

    fn is_idempotent(&self, mu: &Measure) -> PyResult<bool> {
        groups::is_idempotent(&self.inner, &mu.inner).map_err(err)
    }

    /// Elements of `H` if `mu` is the Haar measure of `H`, `None` if `mu` is
    /// not idempotent.
    fn classify_idempotent(&self, mu: &Measure) -> PyResult<Option<Vec<usize>>> {
        Ok(groups::classify_idempotent(&self.inner, &mu.inner).map_err(err)?.map(|h| h.elements().to_vec()))
    }

    #[pyo3(signature = (mu, max_n = 64, tol = None, cesaro = false))]
    fn convolution_powers<'py>(
        &self,
        py: Python<'py>,
        mu: &Measure,
        max_n: usize,
        tol: Option<Bound<'py, PyAny>>,
        cesaro: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let tol = match tol {
            Some(t) => rational(&t)?,
            None => parse_rational("1/1000").expect("literal"),
        };
        to_py(py, &groups::convolution_powers(&self.inner, &mu.inner, max_n, &tol, cesaro).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("Group(order={})", self.inner.order())
    }
}

/// Counting-measure values of `formula` along Paley graphs of orders `qs`,
/// with tail stability at each tolerance.
#[pyfunction]
#[pyo3(signature = (qs, formula, epsilons = None))]
fn paley_sequence<'py>(
    py: Python<'py>,
    qs: Vec<u64>,
    formula: &str,
    epsilons: Option<Vec<Bound<'py, PyAny>>>,
) -> PyResult<Bound<'py, PyAny>> {
    let seq = StructureSequence::paley(&qs).map_err(err)?;
    let (_, first) = seq.iter().next().expect("non-empty");
    let phi = parse_partitioned(formula, first.signature(), &["x"]).map_err(err)?;
    let eps = match epsilons {
        Some(es) => es.iter().map(rational).collect::<PyResult<Vec<_>>>()?,
        None => vec![parse_rational("1/10").expect("literal")],
    };
    to_py(py, &seqlab::evaluate_along(&seq, &Quantity::Counting(phi), &eps).map_err(err)?)
}

#[pyfunction]
fn tail_stable(values: Vec<Bound<'_, PyAny>>, epsilon: Bound<'_, PyAny>) -> PyResult<Option<usize>> {
    let vs = values.iter().map(rational).collect::<PyResult<Vec<_>>>()?;
    Ok(seqlab::tail_stable(&vs, &rational(&epsilon)?))
}

#[pyfunction]
fn coin_flip_target<'py>(py: Python<'py>, p: Bound<'py, PyAny>, n: u32, m: u32) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &seqlab::coin_flip_target(&rational(&p)?, n, m).map_err(err)?)
}

#[pymodule]
pub fn keisler_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Structure>()?;
    m.add_class::<Formula>()?;
    m.add_class::<Measure>()?;
    m.add_class::<Group>()?;
    m.add_function(wrap_pyfunction!(product, m)?)?;
    m.add_function(wrap_pyfunction!(morley, m)?)?;
    m.add_function(wrap_pyfunction!(morley_measure, m)?)?;
    m.add_function(wrap_pyfunction!(tv_distance, m)?)?;
    m.add_function(wrap_pyfunction!(level_buckets, m)?)?;
    m.add_function(wrap_pyfunction!(find_approximation, m)?)?;
    m.add_function(wrap_pyfunction!(find_uniform_approximation, m)?)?;
    m.add_function(wrap_pyfunction!(sup_error, m)?)?;
    m.add_function(wrap_pyfunction!(vc_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(certificate_check, m)?)?;
    m.add_function(wrap_pyfunction!(paley_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(tail_stable, m)?)?;
    m.add_function(wrap_pyfunction!(coin_flip_target, m)?)?;
    Ok(())
}
