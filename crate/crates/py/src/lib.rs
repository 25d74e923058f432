//! Python bindings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use maxtype_core::experiments::rwt::{rwt_search as core_rwt_search, Search};
use maxtype_core::experiments::{
    extremal_function, glue_consistency_check, growth_table as core_growth_table,
    strong11_check as core_strong11_check,
};
use maxtype_core::generators::{build, derive_sequences, glue, GenParams, Generation};
use maxtype_core::maximal::{maximal, rwt_functional, weak_ratio};
use maxtype_core::{ExtScalar, Mode, Operator, PointId, PointSet, WeightedFunction};

fn err(e: maxtype_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn generation(name: &str) -> PyResult<Generation> {
    match name {
        "first" => Ok(Generation::First),
        "second" => Ok(Generation::Second),
        other => Err(PyValueError::new_err(format!(
            "unknown generation '{other}'"
        ))),
    }
}

fn mode(name: &str) -> PyResult<Mode> {
    name.parse().map_err(err)
}

fn operator(name: &str) -> PyResult<Operator> {
    name.parse().map_err(err)
}

/// A finite metric measure space.
#[pyclass(name = "Space", frozen)]
struct PySpace {
    inner: maxtype_core::Space,
    params: Option<(GenParams, Generation)>,
}

impl PySpace {
    fn function(&self, values: Vec<f64>) -> PyResult<WeightedFunction> {
        let v = values.into_iter().map(ExtScalar::from_f64).collect();
        WeightedFunction::from_values(&self.inner, v).map_err(err)
    }
}

#[pymethods]
impl PySpace {
    /// Generated space for the preset sequences of `p0`.
    #[staticmethod]
    #[pyo3(signature = (p0, nmax, gen = "first", mode = "explicit"))]
    fn generated(p0: f64, nmax: u32, gen: &str, mode: &str) -> PyResult<Self> {
        let params = derive_sequences(p0, nmax).map_err(err)?;
        let g = generation(gen)?;
        let inner = build(&params, g, self::mode(mode)?).map_err(err)?;
        Ok(PySpace {
            inner,
            params: Some((params, g)),
        })
    }

    /// First-generation space with a custom table, `F = 1` and `m_n = 2^n`.
    #[staticmethod]
    #[pyo3(signature = (tau, mode = "explicit"))]
    fn custom(tau: Vec<Vec<u128>>, mode: &str) -> PyResult<Self> {
        let params = GenParams::simple(tau).map_err(err)?;
        let inner = build(&params, Generation::First, self::mode(mode)?).map_err(err)?;
        Ok(PySpace {
            inner,
            params: Some((params, Generation::First)),
        })
    }

    /// Disjoint union at distance 2.
    #[staticmethod]
    fn glued(a: &PySpace, b: &PySpace) -> PyResult<Self> {
        Ok(PySpace {
            inner: glue(&a.inner, &b.inner).map_err(err)?,
            params: None,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Space({} stored points, {} points)",
            self.inner.len(),
            self.inner.point_count()
        )
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.inner.mode() {
            Mode::Explicit => "explicit",
            Mode::Quotient => "quotient",
        }
    }

    fn labels(&self) -> Vec<String> {
        self.inner
            .ids()
            .map(|p| self.inner.label(p).to_string())
            .collect()
    }

    fn find(&self, label: &str) -> Option<PointId> {
        self.inner
            .ids()
            .find(|&p| self.inner.label(p).to_string() == label)
    }

    fn multiplicities(&self) -> Vec<u128> {
        self.inner
            .ids()
            .map(|p| self.inner.multiplicity(p))
            .collect()
    }

    fn masses(&self) -> Vec<f64> {
        self.inner
            .ids()
            .map(|p| self.inner.mass(p).to_f64())
            .collect()
    }

    /// Masses as exact `0x<mantissa>p<exp>` strings.
    fn masses_exact(&self) -> Vec<String> {
        self.inner
            .ids()
            .map(|p| self.inner.mass(p).to_exp2_string())
            .collect()
    }

    fn total_mass(&self) -> f64 {
        self.inner.total_mass().to_f64()
    }

    fn dist(&self, a: PointId, b: PointId) -> PyResult<u8> {
        self.inner.check(a).map_err(err)?;
        self.inner.check(b).map_err(err)?;
        Ok(self.inner.dist(a, b))
    }

    /// Values of the extremal function of level `n` at the stored points.
    fn extremal(&self, n: u32) -> PyResult<Vec<f64>> {
        let (params, g) = self
            .params
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("glued spaces have no extremal functions"))?;
        let f = extremal_function(&self.inner, params, n, *g).map_err(err)?;
        Ok(f.values().iter().map(ExtScalar::to_f64).collect())
    }

    #[pyo3(signature = (values, op = "centered"))]
    fn maximal(&self, values: Vec<f64>, op: &str) -> PyResult<Vec<f64>> {
        let g = maximal(&self.inner, &self.function(values)?, operator(op)?).map_err(err)?;
        Ok(g.values().iter().map(ExtScalar::to_f64).collect())
    }

    /// Like `maximal`, with exact `0x<mantissa>p<exp>` results.
    #[pyo3(signature = (values, op = "centered"))]
    fn maximal_exact(&self, values: Vec<f64>, op: &str) -> PyResult<Vec<String>> {
        let g = maximal(&self.inner, &self.function(values)?, operator(op)?).map_err(err)?;
        Ok(g.values().iter().map(ExtScalar::to_exp2_string).collect())
    }

    #[pyo3(signature = (values, p, op = "noncentered"))]
    fn weak_ratio(&self, values: Vec<f64>, p: f64, op: &str) -> PyResult<f64> {
        Ok(
            weak_ratio(&self.inner, &self.function(values)?, p, operator(op)?)
                .map_err(err)?
                .to_f64(),
        )
    }

    /// Restricted weak functional of the set of stored points `points`.
    #[pyo3(signature = (points, p, op = "noncentered"))]
    fn rwt(&self, points: Vec<PointId>, p: f64, op: &str) -> PyResult<f64> {
        let set = PointSet::of_points(&self.inner, points).map_err(err)?;
        Ok(rwt_functional(&self.inner, &set, p, operator(op)?)
            .map_err(err)?
            .to_f64())
    }

    /// Report of a subset search, as JSON.
    #[pyo3(signature = (p, op = "noncentered", budget = None, seed = 0))]
    fn rwt_search(&self, p: f64, op: &str, budget: Option<u64>, seed: u64) -> PyResult<String> {
        let search = match budget {
            None => Search::Exhaustive,
            Some(budget) => Search::Random { budget, seed },
        };
        let (report, _) = core_rwt_search(&self.inner, p, operator(op)?, search).map_err(err)?;
        Ok(report.to_json())
    }

    /// Strong (1,1) report for a generated second-generation space, as JSON.
    #[pyo3(signature = (trials = 1000, seed = 0))]
    fn strong11_check(&self, trials: u64, seed: u64) -> PyResult<String> {
        let (params, _) = self
            .params
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("needs a generated space"))?;
        Ok(core_strong11_check(&self.inner, params, trials, seed)
            .map_err(err)?
            .to_json())
    }
}

/// Growth table report as JSON.
#[pyfunction]
#[pyo3(signature = (p0, nmax, gen = "first", op = "centered"))]
fn growth_table(p0: f64, nmax: u32, gen: &str, op: &str) -> PyResult<String> {
    Ok(core_growth_table(p0, nmax, generation(gen)?, operator(op)?)
        .map_err(err)?
        .to_json())
}

/// Glue report for the two generations of `p0`, as JSON.
#[pyfunction]
#[pyo3(signature = (p0, nmax, trials = 500, seed = 1))]
fn glue_check(p0: f64, nmax: u32, trials: u64, seed: u64) -> PyResult<String> {
    let params = derive_sequences(p0, nmax).map_err(err)?;
    let x = build(&params, Generation::First, Mode::Explicit).map_err(err)?;
    let y = build(&params, Generation::Second, Mode::Explicit).map_err(err)?;
    Ok(glue_consistency_check(&x, &y, trials, seed)
        .map_err(err)?
        .to_json())
}

/// Sets the mantissa width of values created afterwards.
#[pyfunction]
fn set_precision(bits: usize) {
    maxtype_core::scalar::set_working_precision(bits);
}

#[pyfunction]
fn precision() -> usize {
    maxtype_core::scalar::working_precision()
}

/// Runs the command-line tool with `args` (without the program name) and
/// returns its exit status.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    maxtype_core::cli::run(std::iter::once("maxtype".to_string()).chain(args))
}

#[pymodule]
fn maxtype(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpace>()?;
    m.add_function(wrap_pyfunction!(growth_table, m)?)?;
    m.add_function(wrap_pyfunction!(glue_check, m)?)?;
    m.add_function(wrap_pyfunction!(set_precision, m)?)?;
    m.add_function(wrap_pyfunction!(precision, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
