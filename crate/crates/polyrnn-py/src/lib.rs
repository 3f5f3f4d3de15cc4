//! Python bindings: the network type plus the constructors and oracles.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use polyrnn::poly::{self, PolynomialSpec};
use polyrnn::{harness, powers, primitives};

fn err(e: polyrnn::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A fixed-weight ReLU recurrent network.
#[pyclass(frozen)]
struct Rnn {
    inner: polyrnn::RnnWeights,
}

#[pymethods]
impl Rnn {
    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }

    #[getter]
    fn hidden_dim(&self) -> usize {
        self.inner.hidden_dim()
    }

    /// Output vectors at t = 0..=steps under the one-shot input.
    fn run(&self, x: Vec<f64>, steps: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.inner.run_delta(&x, steps).map_err(err)?.outputs)
    }

    /// Output at a single time, O(hidden) memory.
    fn output_at(&self, x: Vec<f64>, t: usize) -> PyResult<Vec<f64>> {
        self.inner.output_at(&x, t).map_err(err)
    }

    /// Hidden states at t = 0..=steps.
    fn states(&self, x: Vec<f64>, steps: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.inner.run_delta(&x, steps).map_err(err)?.states)
    }

    /// Evaluates the weight-shared feed-forward unfolding at depth `steps`;
    /// bit-identical to `output_at(x, steps)`.
    fn unfolded_eval(&self, x: Vec<f64>, steps: usize) -> PyResult<Vec<f64>> {
        self.inner.unfold(steps).map_err(err)?.eval(&x).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Rnn> {
        Ok(Rnn {
            inner: polyrnn::RnnWeights::from_json(text).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Rnn(d_in={}, d_out={}, m={})",
            self.inner.input_dim(),
            self.inner.output_dim(),
            self.inner.hidden_dim()
        )
    }
}

/// Network approximating x^2 on [-domain, domain].
#[pyfunction]
fn square_rnn(domain: f64) -> PyResult<Rnn> {
    Ok(Rnn {
        inner: primitives::square_rnn(domain).map_err(err)?,
    })
}

/// Network approximating x1 * x2 on [-domain, domain]^2.
#[pyfunction]
fn mult_rnn(domain: f64) -> PyResult<Rnn> {
    Ok(Rnn {
        inner: primitives::mult_rnn(domain).map_err(err)?,
    })
}

/// Network holding its input exactly for all time.
#[pyfunction]
fn identity_rnn() -> Rnn {
    Rnn {
        inner: primitives::identity_rnn(),
    }
}

/// The five-neuron clock; its output pulses to 1 at times 2^k - 2, k >= 2.
#[pyfunction]
fn clock_rnn() -> Rnn {
    Rnn {
        inner: polyrnn::clock_rnn(),
    }
}

/// Monomial network carrying (x, x^2, ..., x^(2^levels)) at readout times
/// t = 2^k - 2. Returns (network, first valid k).
#[pyfunction]
fn powers_rnn(domain: f64, levels: usize) -> PyResult<(Rnn, usize)> {
    let pw = powers::powers_rnn(domain, levels).map_err(err)?;
    let min_k = pw.min_k;
    Ok((
        Rnn {
            inner: pw.weights().map_err(err)?,
        },
        min_k,
    ))
}

/// Closed-form readout error bound for level `level` at readout index `k`.
#[pyfunction]
fn epsilon(domain: f64, level: usize, k: usize) -> PyResult<f64> {
    powers::epsilon(domain, level, k).map_err(err)
}

/// Builds the polynomial network for coefficients (constant term first) on
/// [-domain, domain]. Returns (network, info dict) where info carries
/// clip_bound, c1, c2, t_min, exact, and smoothed.
#[pyfunction]
fn build_poly_rnn(py: Python<'_>, coeffs: Vec<f64>, domain: f64) -> PyResult<(Rnn, Py<PyAny>)> {
    let spec = PolynomialSpec::new(coeffs, domain).map_err(err)?;
    let (net, model) = poly::build_poly_rnn(&spec).map_err(err)?;
    let info = pyo3::types::PyDict::new(py);
    info.set_item("clip_bound", net.clip_bound)?;
    info.set_item("c1", model.c1)?;
    info.set_item("c2", model.c2)?;
    info.set_item("t_min", model.t_min)?;
    info.set_item("coeff_l1", model.coeff_l1)?;
    info.set_item("exact", model.exact)?;
    info.set_item("smoothed", net.smoothed)?;
    Ok((Rnn { inner: net.weights }, info.into()))
}

/// Runtime error bound |a|_1 * C1 * 4^(-C2 t); degree >= 2, t >= t_min.
#[pyfunction]
fn error_bound(coeffs: Vec<f64>, domain: f64, t: usize) -> PyResult<f64> {
    let spec = PolynomialSpec::new(coeffs, domain).map_err(err)?;
    poly::error_bound(&spec, t).map_err(err)
}

/// Horner evaluation of the polynomial (constant term first).
#[pyfunction]
fn horner_eval(coeffs: Vec<f64>, x: f64) -> f64 {
    harness::horner_eval(&coeffs, x)
}

/// Max deviation from the polynomial over the augmented grid at time t.
#[pyfunction]
fn sup_error(net: &Rnn, coeffs: Vec<f64>, domain: f64, t: usize, grid_n: usize) -> PyResult<f64> {
    let spec = PolynomialSpec::new(coeffs, domain).map_err(err)?;
    harness::sup_error(&net.inner, &spec, t, grid_n).map_err(err)
}

#[pymodule]
fn polyrnn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Rnn>()?;
    m.add_function(wrap_pyfunction!(square_rnn, m)?)?;
    m.add_function(wrap_pyfunction!(mult_rnn, m)?)?;
    m.add_function(wrap_pyfunction!(identity_rnn, m)?)?;
    m.add_function(wrap_pyfunction!(clock_rnn, m)?)?;
    m.add_function(wrap_pyfunction!(powers_rnn, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(build_poly_rnn, m)?)?;
    m.add_function(wrap_pyfunction!(error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(horner_eval, m)?)?;
    m.add_function(wrap_pyfunction!(sup_error, m)?)?;
    Ok(())
}
