//! Python module `gibbs`.

use gibbs_core::approx::{self, CountableModel, CountableObservable};
use gibbs_core::bounds::{self, BoundReport};
use gibbs_core::error::Error;
use gibbs_core::experiment;
use gibbs_core::measures::{self, MarkovMeasure};
use gibbs_core::potential::{builtin_potential, LocallyConstantFunction, DEFAULT_THETA};
use gibbs_core::random::{random_function, random_markov_measure};
use gibbs_core::shift::{build_sft, builtin_shift, TransitionMatrix};
use gibbs_core::transfer::{self, Equilibrium};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(gibbs, GibbsError, PyValueError);

fn err(e: Error) -> PyErr {
    GibbsError::new_err(e.to_string())
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for Result<T, Error> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

#[pyclass(name = "Shift", module = "gibbs", frozen)]
struct PyShift {
    inner: TransitionMatrix,
}

#[pymethods]
impl PyShift {
    /// `Shift(states, edges)` with edges as `(from, to)` label pairs.
    #[new]
    fn new(states: Vec<String>, edges: Vec<(String, String)>) -> PyResult<Self> {
        Ok(PyShift {
            inner: build_sft(&states, &edges).py()?.matrix,
        })
    }

    /// One of `full2`, `full3`, `golden`, `loop3`.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        builtin_shift(name)
            .map(|inner| PyShift { inner })
            .ok_or_else(|| GibbsError::new_err(format!("unknown builtin shift '{name}'")))
    }

    #[staticmethod]
    fn full(k: usize) -> Self {
        PyShift {
            inner: TransitionMatrix::full_shift(k),
        }
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn count_words(&self, n: usize) -> u128 {
        self.inner.count_words(n)
    }

    fn count_periodic(&self, k: usize) -> u128 {
        self.inner.count_periodic(k)
    }

    fn is_mixing(&self) -> bool {
        self.inner.is_topologically_mixing()
    }

    fn is_admissible(&self, word: &str) -> bool {
        self.inner.parse_word(word).is_ok()
    }

    fn __repr__(&self) -> String {
        format!("Shift(labels={:?}, edges={})", self.inner.labels(), self.inner.edge_count())
    }
}

#[pyclass(name = "Potential", module = "gibbs", frozen)]
struct PyPotential {
    inner: LocallyConstantFunction,
}

#[pymethods]
impl PyPotential {
    /// Table of values on admissible words of length `range`; missing words
    /// take `default`.
    #[new]
    #[pyo3(signature = (shift, range, values, default=None, theta=DEFAULT_THETA))]
    fn new(
        shift: &PyShift,
        range: usize,
        values: Vec<(String, f64)>,
        default: Option<f64>,
        theta: f64,
    ) -> PyResult<Self> {
        let base = &shift.inner;
        let mut entries = Vec::with_capacity(values.len());
        for (w, v) in values {
            entries.push((base.parse_word(&w).py()?.into_symbols(), v));
        }
        Ok(PyPotential {
            inner: LocallyConstantFunction::from_entries(base, range, theta, &entries, default).py()?,
        })
    }

    #[staticmethod]
    fn zero(shift: &PyShift) -> Self {
        PyPotential {
            inner: LocallyConstantFunction::zero(&shift.inner),
        }
    }

    #[staticmethod]
    fn builtin(name: &str, shift: &PyShift) -> PyResult<Self> {
        builtin_potential(name, &shift.inner)
            .map(|inner| PyPotential { inner })
            .ok_or_else(|| GibbsError::new_err(format!("unknown builtin potential '{name}' for this shift")))
    }

    #[staticmethod]
    fn indicator(shift: &PyShift, word: &str) -> PyResult<Self> {
        let w = shift.inner.parse_word(word).py()?;
        Ok(PyPotential {
            inner: LocallyConstantFunction::indicator(&shift.inner, w.symbols()).py()?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (shift, range, seed, lo=-1.0, hi=1.0, theta=DEFAULT_THETA))]
    fn random(shift: &PyShift, range: usize, seed: u64, lo: f64, hi: f64, theta: f64) -> PyResult<Self> {
        Ok(PyPotential {
            inner: random_function(&shift.inner, range, theta, lo, hi, seed).py()?,
        })
    }

    #[getter]
    fn range(&self) -> usize {
        self.inner.range()
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta()
    }

    fn value(&self, word: &str) -> PyResult<f64> {
        let w = self.inner.base().parse_word(word).py()?;
        self.inner.evaluate(w.symbols()).py()
    }

    fn birkhoff_sum(&self, word: &str, n: usize, cyclic: bool) -> PyResult<f64> {
        let w = self.inner.base().parse_word(word).py()?;
        self.inner.birkhoff_sum(w.symbols(), n, cyclic).py()
    }

    fn variation(&self, n: usize) -> f64 {
        self.inner.variation(n)
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn l_norm(&self) -> f64 {
        self.inner.l_norm()
    }

    fn __add__(&self, other: &PyPotential) -> PyResult<Self> {
        Ok(PyPotential {
            inner: self.inner.add(&other.inner).py()?,
        })
    }

    fn __sub__(&self, other: &PyPotential) -> PyResult<Self> {
        Ok(PyPotential {
            inner: self.inner.sub(&other.inner).py()?,
        })
    }

    fn __mul__(&self, c: f64) -> Self {
        PyPotential {
            inner: self.inner.scale(c),
        }
    }
}

#[pyclass(name = "Measure", module = "gibbs", frozen)]
struct PyMeasure {
    inner: MarkovMeasure,
}

#[pymethods]
impl PyMeasure {
    /// Markov measure from a row-stochastic kernel.
    #[new]
    fn new(shift: &PyShift, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyMeasure {
            inner: MarkovMeasure::from_rows(&shift.inner, &rows).py()?,
        })
    }

    #[staticmethod]
    fn random(shift: &PyShift, seed: u64) -> PyResult<Self> {
        Ok(PyMeasure {
            inner: random_markov_measure(&shift.inner, seed).py()?,
        })
    }

    #[staticmethod]
    fn bernoulli(shift: &PyShift, weights: Vec<f64>) -> PyResult<Self> {
        Ok(PyMeasure {
            inner: MarkovMeasure::bernoulli(&shift.inner, &weights).py()?,
        })
    }

    #[staticmethod]
    fn point_mass(shift: &PyShift, state: &str) -> PyResult<Self> {
        let s = shift.inner.state_index(state).py()?;
        Ok(PyMeasure {
            inner: MarkovMeasure::point_mass(&shift.inner, s).py()?,
        })
    }

    #[getter]
    fn stationary(&self) -> Vec<f64> {
        self.inner.stationary().to_vec()
    }

    fn kernel(&self) -> Vec<Vec<f64>> {
        let p = self.inner.kernel();
        (0..p.nrows()).map(|i| p.row(i).iter().copied().collect()).collect()
    }

    fn entropy_rate(&self) -> f64 {
        self.inner.entropy_rate()
    }

    fn cylinder_mass(&self, word: &str) -> PyResult<f64> {
        let w = self.inner.base().parse_word(word).py()?;
        Ok(self.inner.cylinder_mass(w.symbols()))
    }

    fn integrate(&self, f: &PyPotential) -> PyResult<f64> {
        self.inner.integrate(&f.inner).py()
    }

    fn block_entropy(&self, n: usize) -> PyResult<f64> {
        self.inner.block_entropy(n).py()
    }

    fn conditional_entropy(&self, n: usize) -> f64 {
        self.inner.conditional_entropy(n)
    }

    fn metric_pressure(&self, phi: &PyPotential) -> PyResult<f64> {
        self.inner.metric_pressure(&phi.inner).py()
    }
}

#[pyclass(name = "Equilibrium", module = "gibbs", frozen)]
struct PyEquilibrium {
    inner: Equilibrium,
}

#[pymethods]
impl PyEquilibrium {
    #[new]
    fn new(phi: &PyPotential) -> PyResult<Self> {
        Ok(PyEquilibrium {
            inner: Equilibrium::new(&phi.inner).py()?,
        })
    }

    #[getter]
    fn pressure(&self) -> f64 {
        self.inner.pressure()
    }

    #[getter]
    fn eigenvalue(&self) -> f64 {
        self.inner.perron().lambda
    }

    #[getter]
    fn left_eigenvector(&self) -> Vec<f64> {
        self.inner.perron().h.clone()
    }

    #[getter]
    fn right_eigenvector(&self) -> Vec<f64> {
        self.inner.perron().nu.clone()
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.perron().kappa
    }

    #[getter]
    fn constants(&self) -> (f64, f64, f64) {
        let p = self.inner.perron();
        (p.c, p.a, p.b)
    }

    /// The working shift (recoded when the potential has range above 2).
    fn shift(&self) -> PyShift {
        PyShift {
            inner: self.inner.base().clone(),
        }
    }

    fn recoded(&self) -> bool {
        self.inner.recoding().is_some()
    }

    fn measure(&self) -> PyMeasure {
        PyMeasure {
            inner: self.inner.measure().clone(),
        }
    }

    /// An observable of the original shift moved to the working shift.
    fn lift(&self, f: &PyPotential) -> PyResult<PyPotential> {
        Ok(PyPotential {
            inner: self.inner.lift(&f.inner).py()?,
        })
    }

    fn cohomology_residual(&self) -> PyResult<f64> {
        bounds::cohomology_residual(&self.inner).py()
    }

    fn gibbs_certificate<'py>(&self, py: Python<'py>, n_max: usize) -> PyResult<Bound<'py, PyDict>> {
        let c = self.inner.perron().gibbs_property_certificate(n_max).py()?;
        let d = PyDict::new(py);
        d.set_item("empirical_c", c.empirical_c)?;
        d.set_item("window_c", c.window_c)?;
        d.set_item("a_priori_c", c.a_priori_c)?;
        d.set_item("min_ratio", c.min_ratio)?;
        d.set_item("max_ratio", c.max_ratio)?;
        d.set_item("within_window", c.within_window)?;
        Ok(d)
    }
}

fn report_dict<'py>(py: Python<'py>, r: &BoundReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("kind", r.kind.name())?;
    d.set_item("n", r.n)?;
    d.set_item("ell", r.ell)?;
    d.set_item("lhs", r.lhs)?;
    d.set_item("rhs", r.rhs)?;
    d.set_item("slack", r.slack)?;
    d.set_item("constant", r.constant)?;
    d.set_item("f_norm", r.f_norm)?;
    d.set_item("pressure_gap", r.pressure_gap)?;
    d.set_item("kl_integral", r.kl_integral)?;
    d.set_item("decay_term", r.decay_term)?;
    d.set_item("tail_term", r.tail_term)?;
    d.set_item("conditional_entropy", r.conditional_entropy)?;
    d.set_item("block_entropy_rate", r.block_entropy_rate)?;
    d.set_item("radicand_raw", r.radicand_raw)?;
    d.set_item("radicand_with_present", r.radicand_with_present)?;
    d.set_item("radicand_violation", r.radicand_violation)?;
    d.set_item("vacuous", r.vacuous)?;
    d.set_item("passed", r.passed())?;
    Ok(d)
}

#[pyfunction]
fn pressure(phi: &PyPotential) -> PyResult<f64> {
    transfer::pressure(&phi.inner).py()
}

/// `(enumeration, matrix)` values of the periodic-point sum through `state`.
#[pyfunction]
fn partition_sum(phi: &PyPotential, state: &str, n: usize) -> PyResult<(f64, f64)> {
    let s = phi.inner.base().state_index(state).py()?;
    let z = transfer::partition_sum(&phi.inner, s, n).py()?;
    Ok((z.enumeration, z.matrix))
}

#[pyfunction]
fn pressure_gap_check<'py>(
    py: Python<'py>,
    eq: &PyEquilibrium,
    mu: &PyMeasure,
    f: &PyPotential,
) -> PyResult<Bound<'py, PyDict>> {
    report_dict(py, &bounds::pressure_gap_check(&eq.inner, &mu.inner, &f.inner).py()?)
}

#[pyfunction]
fn finitary_check<'py>(
    py: Python<'py>,
    eq: &PyEquilibrium,
    mu: &PyMeasure,
    f: &PyPotential,
    n: usize,
) -> PyResult<Bound<'py, PyDict>> {
    report_dict(py, &bounds::finitary_check(&eq.inner, &mu.inner, &f.inner, n).py()?)
}

#[pyfunction]
fn finitary_markov_check<'py>(
    py: Python<'py>,
    eq: &PyEquilibrium,
    mu: &PyMeasure,
    f: &PyPotential,
    n: usize,
    ell: usize,
) -> PyResult<Bound<'py, PyDict>> {
    report_dict(py, &bounds::finitary_markov_check(&eq.inner, &mu.inner, &f.inner, n, ell).py()?)
}

#[pyfunction]
fn stability_check<'py>(
    py: Python<'py>,
    phi: &PyPotential,
    psi: &PyPotential,
    f: &PyPotential,
) -> PyResult<Bound<'py, PyDict>> {
    let r = approx::stability_check(&phi.inner, &psi.inner, &f.inner).py()?;
    let d = PyDict::new(py);
    d.set_item("lhs", r.lhs)?;
    d.set_item("rhs", r.rhs)?;
    d.set_item("slack", r.slack)?;
    d.set_item("sup_distance", r.sup_distance)?;
    d.set_item("gap", r.gap)?;
    d.set_item("identity_residual", r.identity_residual)?;
    Ok(d)
}

/// `D_p(q) = sum q log(q / p)`.
#[pyfunction]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    Ok(measures::kl_divergence(&p, &q).py()?.value)
}

#[pyfunction]
fn conditional_kl_integral(m: &PyMeasure, mu: &PyMeasure) -> PyResult<f64> {
    Ok(measures::conditional_kl_integral(&m.inner, &mu.inner).py()?.value)
}

#[pyclass(name = "CountableModel", module = "gibbs", frozen)]
struct PyCountableModel {
    inner: CountableModel,
}

#[pymethods]
impl PyCountableModel {
    /// `geometric(r[, scale])` or `zeta(e[, scale])`.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(PyCountableModel {
            inner: CountableModel::parse(spec).py()?,
        })
    }

    fn weight(&self, s: usize) -> f64 {
        self.inner.weight(s)
    }

    fn pressure(&self) -> f64 {
        self.inner.pressure()
    }

    fn truncated_pressure(&self, n: usize) -> f64 {
        self.inner.truncated_pressure(n)
    }

    fn pressure_gap(&self, n: usize) -> f64 {
        self.inner.pressure_gap(n)
    }

    /// Rows `(n, lhs, rhs, slack)` for the indicator of `state` (1-based).
    fn truncation_table(&self, state: usize, ns: Vec<usize>) -> PyResult<Vec<(usize, f64, f64, f64)>> {
        let f = CountableObservable::indicator(state).py()?;
        let rows = approx::truncation_harness(&self.inner, &f, ns).py()?;
        Ok(rows.iter().map(|r| (r.n, r.lhs, r.rhs, r.slack)).collect())
    }
}

/// Runs an experiment config given as text without writing files.
#[pyfunction]
#[pyo3(signature = (text, seed=None))]
fn run_config<'py>(py: Python<'py>, text: &str, seed: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
    let config = experiment::parse_config(text).py()?;
    let options = experiment::RunOptions {
        seed,
        dry_run: true,
        ..Default::default()
    };
    let out = experiment::run_experiment(&config, &options).py()?;
    let d = PyDict::new(py);
    d.set_item("csv", &out.csv)?;
    d.set_item("summary", &out.summary)?;
    d.set_item("rows", out.rows)?;
    d.set_item("passed", out.passed())?;
    Ok(d)
}

#[pyfunction]
fn list_builtins() -> String {
    experiment::list_builtins()
}

#[pymodule]
fn gibbs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GibbsError", m.py().get_type::<GibbsError>())?;
    m.add_class::<PyShift>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyMeasure>()?;
    m.add_class::<PyEquilibrium>()?;
    m.add_class::<PyCountableModel>()?;
    m.add_function(wrap_pyfunction!(pressure, m)?)?;
    m.add_function(wrap_pyfunction!(partition_sum, m)?)?;
    m.add_function(wrap_pyfunction!(pressure_gap_check, m)?)?;
    m.add_function(wrap_pyfunction!(finitary_check, m)?)?;
    m.add_function(wrap_pyfunction!(finitary_markov_check, m)?)?;
    m.add_function(wrap_pyfunction!(stability_check, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_kl_integral, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(list_builtins, m)?)?;
    Ok(())
}
