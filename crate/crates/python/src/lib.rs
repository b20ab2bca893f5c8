//! Python bindings. Reports are handed over as plain dicts, decoded from the
//! same JSON the command line prints.

use std::collections::HashMap;

use maltsev_kit::algebra::{validate_algebra, AlgebraDocument, FiniteAlgebra};
use maltsev_kit::bounds;
use maltsev_kit::corpus::{builtin, BUILTIN_NAMES};
use maltsev_kit::free::{free_algebra_with_cap, term_expression_of, DEFAULT_ELEMENT_CAP};
use maltsev_kit::identity::{
    check_quantified, find_min_parameter, parse_identity, pretty_print, CheckOptions, IdentityAst,
};
use maltsev_kit::maltsev::{
    condition_ii_setup, decide_condition_ii, extract_terms, verify_condition_f, verify_day_conditions,
    verify_term_chain, ConditionIISetup, TermChain,
};
use maltsev_kit::relations::{all_congruences_bounded, DEFAULT_CONGRUENCE_BOUND};
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn options(jobs: usize) -> CheckOptions {
    CheckOptions {
        jobs,
        ..CheckOptions::default()
    }
}

#[pyclass(name = "Algebra", module = "maltsev_kit", frozen)]
struct PyAlgebra {
    inner: FiniteAlgebra,
}

impl PyAlgebra {
    fn setup(&self, cap: Option<usize>) -> PyResult<ConditionIISetup> {
        condition_ii_setup(&self.inner, cap.unwrap_or(DEFAULT_ELEMENT_CAP)).map_err(value_error)
    }
}

#[pymethods]
impl PyAlgebra {
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        builtin(name)
            .map(|inner| PyAlgebra { inner })
            .ok_or_else(|| PyKeyError::new_err(format!("unknown built-in `{name}`")))
    }

    /// Parses `{"name", "size", "operations": [{"name", "arity", "table"}]}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc: AlgebraDocument = serde_json::from_str(text).map_err(value_error)?;
        let inner = validate_algebra(&doc).map_err(value_error)?;
        Ok(PyAlgebra { inner })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn operations(&self) -> Vec<(String, usize, Vec<usize>)> {
        self.inner
            .operations()
            .iter()
            .map(|op| (op.name().to_string(), op.arity(), op.table().to_vec()))
            .collect()
    }

    fn apply(&self, op: &str, args: Vec<usize>) -> PyResult<usize> {
        let i = self
            .inner
            .operation_index(op)
            .ok_or_else(|| PyKeyError::new_err(format!("no operation `{op}`")))?;
        self.inner.apply_op(i, &args).map_err(value_error)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_document()).map_err(value_error)
    }

    /// Congruences as canonical labellings: each element maps to the least
    /// element of its block.
    #[pyo3(signature = (bound = DEFAULT_CONGRUENCE_BOUND))]
    fn congruences(&self, bound: usize) -> PyResult<Vec<Vec<usize>>> {
        let congs = all_congruences_bounded(&self.inner, bound).map_err(value_error)?;
        Ok(congs.iter().map(|c| c.partition().to_vec()).collect())
    }

    #[pyo3(signature = (cap = None))]
    fn free_size(&self, cap: Option<usize>) -> PyResult<usize> {
        let f = free_algebra_with_cap(&self.inner, cap.unwrap_or(DEFAULT_ELEMENT_CAP)).map_err(value_error)?;
        Ok(f.len())
    }

    /// Least k, or `None` when no k exists or it exceeds `k_max`.
    #[pyo3(signature = (k_max = None, cap = None))]
    fn min_k(&self, k_max: Option<usize>, cap: Option<usize>) -> PyResult<Option<usize>> {
        let setup = self.setup(cap)?;
        Ok(decide_condition_ii(&setup, k_max).map_err(value_error)?.min_k())
    }

    #[pyo3(signature = (k_max = None, cap = None))]
    fn decide<'py>(&self, py: Python<'py>, k_max: Option<usize>, cap: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
        let setup = self.setup(cap)?;
        to_py(py, &decide_condition_ii(&setup, k_max).map_err(value_error)?)
    }

    /// Term chain of the least length, padded to `k` links if longer.
    #[pyo3(signature = (k = None, cap = None))]
    fn terms(&self, k: Option<usize>, cap: Option<usize>) -> PyResult<Option<PyTermChain>> {
        let setup = self.setup(cap)?;
        let Some(least) = decide_condition_ii(&setup, None).map_err(value_error)?.min_k() else {
            return Ok(None);
        };
        let chain = extract_terms(&setup, least.max(k.unwrap_or(0))).map_err(value_error)?;
        let expressions = chain
            .element_ids
            .iter()
            .flatten()
            .map(|&e| term_expression_of(&setup.free, e).to_string())
            .collect();
        Ok(Some(PyTermChain { chain, expressions }))
    }

    #[pyo3(signature = (identity, params = None, jobs = 1))]
    fn check<'py>(
        &self,
        py: Python<'py>,
        identity: &PyIdentity,
        params: Option<HashMap<String, usize>>,
        jobs: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let verdict = check_quantified(&self.inner, &identity.ast, &params.unwrap_or_default(), &options(jobs))
            .map_err(value_error)?;
        to_py(py, &verdict)
    }

    #[pyo3(signature = (identity, params = None, k_max = None, jobs = 1))]
    fn min_parameter<'py>(
        &self,
        py: Python<'py>,
        identity: &PyIdentity,
        params: Option<HashMap<String, usize>>,
        k_max: Option<usize>,
        jobs: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let result = find_min_parameter(&self.inner, &identity.ast, &params.unwrap_or_default(), k_max, &options(jobs))
            .map_err(value_error)?;
        to_py(py, &result)
    }

    fn __repr__(&self) -> String {
        format!("Algebra({:?}, size={})", self.inner.name(), self.inner.size())
    }
}

#[pyclass(name = "Identity", module = "maltsev_kit", frozen)]
struct PyIdentity {
    ast: IdentityAst,
}

#[pymethods]
impl PyIdentity {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        parse_identity(text).map(|ast| PyIdentity { ast }).map_err(value_error)
    }

    fn variables(&self) -> Vec<(String, String)> {
        self.ast
            .quantifiers
            .iter()
            .map(|(n, s)| (n.clone(), s.keyword().to_string()))
            .collect()
    }

    fn params(&self) -> Vec<(String, Option<usize>)> {
        self.ast.params.iter().map(|p| (p.name.clone(), p.value)).collect()
    }

    fn __str__(&self) -> String {
        pretty_print(&self.ast)
    }

    fn __repr__(&self) -> String {
        format!("Identity({:?})", pretty_print(&self.ast))
    }

    fn __eq__(&self, other: &PyIdentity) -> bool {
        self.ast == other.ast
    }
}

#[pyclass(name = "TermChain", module = "maltsev_kit", frozen)]
struct PyTermChain {
    chain: TermChain,
    expressions: Vec<String>,
}

#[pymethods]
impl PyTermChain {
    #[getter]
    fn k(&self) -> usize {
        self.chain.k()
    }

    #[getter]
    fn terms(&self) -> Vec<String> {
        self.expressions.clone()
    }

    fn value(&self, i: usize, x: usize, y: usize, z: usize, w: usize) -> PyResult<usize> {
        let n = self.chain.base_size;
        if i > self.chain.k() || [x, y, z, w].iter().any(|&a| a >= n) {
            return Err(PyValueError::new_err("index or argument out of range"));
        }
        Ok(self.chain.value(i, [x, y, z, w]))
    }

    /// Reports for the chain equations, the extra equation `f` and the
    /// derived Day conditions, keyed by group.
    fn verify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let reports = serde_json::json!({
            "chain": verify_term_chain(&self.chain),
            "f": verify_condition_f(&self.chain),
            "day": verify_day_conditions(&self.chain),
        });
        to_py(py, &reports)
    }

    fn __len__(&self) -> usize {
        self.chain.k() + 1
    }
}

#[pyfunction]
fn builtin_names() -> Vec<&'static str> {
    BUILTIN_NAMES.to_vec()
}

#[pyfunction]
fn r_of_k(k: u64) -> PyResult<u64> {
    bounds::r_of_k(k).map_err(value_error)
}

#[pymodule]
#[pyo3(name = "maltsev_kit")]
pub fn python_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAlgebra>()?;
    m.add_class::<PyIdentity>()?;
    m.add_class::<PyTermChain>()?;
    m.add_function(wrap_pyfunction!(builtin_names, m)?)?;
    m.add_function(wrap_pyfunction!(r_of_k, m)?)?;
    Ok(())
}
