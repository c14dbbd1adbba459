//! Python bindings: potentials, spectral tables, the distorted transform,
//! propagation and the estimate checks. Arrays cross the boundary as lists.

use distwave_core::evolution::{energy, Propagator};
use distwave_core::potential::{count_bound_states, Potential as CorePotential};
use distwave_core::spectral::{build_spectral_table, spectral_point, SpectralTable as CoreTable, TableConfig};
use distwave_core::transform::{forward_values, hankel_transform as core_hankel, inverse_values, GridFunction, Parity};
use distwave_core::vectorfield::apply_b_values;
use distwave_core::verify::{verify_dispersive, verify_energy, EstimateReport};
use distwave_core::odesolve::JostOptions;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: distwave_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(frozen, skip_from_py_object, module = "distwave")]
#[derive(Clone)]
pub struct Potential {
    inner: CorePotential,
}

#[pymethods]
impl Potential {
    #[staticmethod]
    fn zero() -> Self {
        Potential { inner: CorePotential::zero() }
    }

    #[staticmethod]
    #[pyo3(signature = (core = 4.0))]
    fn model(core: f64) -> Self {
        Potential { inner: CorePotential::model(core) }
    }

    #[staticmethod]
    fn poschl_teller(depth: f64) -> Self {
        Potential { inner: CorePotential::poschl_teller(depth) }
    }

    #[staticmethod]
    fn tail(x_cut: f64) -> Self {
        Potential { inner: CorePotential::tail(x_cut) }
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    fn __call__(&self, x: f64) -> f64 {
        self.inner.eval(x)
    }

    /// Number of eigenvalues below zero.
    #[pyo3(signature = (e_floor = -50.0, x_max = 60.0))]
    fn bound_states(&self, e_floor: f64, x_max: f64) -> PyResult<usize> {
        count_bound_states(&self.inner, e_floor, x_max).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Potential({})", self.inner.name())
    }
}

/// m, rho and a at a single frequency.
#[pyfunction]
fn spectral_data<'py>(py: Python<'py>, potential: &Potential, xi: f64) -> PyResult<Bound<'py, PyDict>> {
    let p = spectral_point(&potential.inner, xi, &JostOptions::default()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("xi", p.xi)?;
    d.set_item("m", (p.m.re, p.m.im))?;
    d.set_item("rho", p.rho)?;
    d.set_item("rho_tilde", p.rho_tilde)?;
    d.set_item("a", (p.a_coeff.re, p.a_coeff.im))?;
    d.set_item("wronskian_variation", p.wronskian_variation)?;
    Ok(d)
}

#[pyfunction]
fn hankel_transform(x: Vec<f64>, values: Vec<f64>) -> PyResult<Vec<f64>> {
    if x.len() != values.len() {
        return Err(PyValueError::new_err("x and values differ in length"));
    }
    let f = GridFunction::new(x, values, Parity::None);
    Ok(core_hankel(&f).map_err(err)?.values)
}

fn report_dict<'py>(py: Python<'py>, r: &EstimateReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("estimate_id", r.estimate_id.as_str())?;
    d.set_item("t", r.t_samples.clone())?;
    d.set_item("lhs", r.lhs.clone())?;
    d.set_item("rhs", r.rhs.clone())?;
    d.set_item("sup_ratio", r.sup_ratio)?;
    d.set_item("fitted_exponent", r.fitted_exponent)?;
    d.set_item("exponent_halfwidth", r.exponent_halfwidth)?;
    d.set_item("trend_slope", r.trend_slope)?;
    Ok(d)
}

/// phi(x, xi^2) sampled on a uniform x grid for a set of frequencies.
#[pyclass(frozen, module = "distwave")]
pub struct SpectralTable {
    inner: CoreTable,
}

impl SpectralTable {
    fn even(&self, values: Vec<f64>, name: &str) -> PyResult<GridFunction> {
        if values.len() != self.inner.n_x() {
            return Err(PyValueError::new_err(format!(
                "{name} has {} samples, the x grid has {}",
                values.len(),
                self.inner.n_x()
            )));
        }
        Ok(GridFunction::new(self.inner.x.clone(), values, Parity::Even))
    }

    fn on_xi(&self, values: &[f64]) -> PyResult<()> {
        if values.len() != self.inner.n_xi() {
            return Err(PyValueError::new_err(format!(
                "expected {} frequency samples, got {}",
                self.inner.n_xi(),
                values.len()
            )));
        }
        Ok(())
    }
}

#[pymethods]
impl SpectralTable {
    #[new]
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (potential, x_max = 40.0, dx = 0.02, xi_min = 1e-3, xi_max = 10.0, t_max = 20.0, log_points_per_decade = 48))]
    fn new(
        py: Python<'_>,
        potential: &Potential,
        x_max: f64,
        dx: f64,
        xi_min: f64,
        xi_max: f64,
        t_max: f64,
        log_points_per_decade: usize,
    ) -> PyResult<Self> {
        let cfg = TableConfig {
            x_max,
            dx,
            xi_min,
            xi_max,
            t_max,
            log_points_per_decade,
            ..Default::default()
        };
        let pot = potential.inner.clone();
        let inner = py.detach(move || build_spectral_table(&pot, &cfg)).map_err(err)?;
        Ok(SpectralTable { inner })
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.x.clone()
    }

    #[getter]
    fn xi(&self) -> Vec<f64> {
        self.inner.xi.clone()
    }

    #[getter]
    fn rho_tilde(&self) -> Vec<f64> {
        self.inner.rho_tilde.clone()
    }

    /// Plancherel weight times quadrature weight per frequency.
    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn resonant(&self) -> Option<bool> {
        self.inner.coeffs.as_ref().map(|c| c.resonant)
    }

    #[getter]
    fn wronskian_residual(&self) -> f64 {
        self.inner.residual
    }

    fn forward(&self, f: Vec<f64>) -> PyResult<Vec<f64>> {
        let f = self.even(f, "f")?;
        Ok(forward_values(&f.values, &self.inner))
    }

    fn inverse(&self, g: Vec<f64>) -> PyResult<Vec<f64>> {
        self.on_xi(&g)?;
        Ok(inverse_values(&g, &self.inner))
    }

    /// B acting on a function of xi.
    fn apply_b(&self, g: Vec<f64>) -> PyResult<Vec<f64>> {
        self.on_xi(&g)?;
        Ok(apply_b_values(&g, &self.inner))
    }

    /// (u, u_t) at time t for data (f, g).
    fn propagate(&self, f: Vec<f64>, g: Vec<f64>, t: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let prop = Propagator::new(&self.even(f, "f")?, &self.even(g, "g")?, &self.inner).map_err(err)?;
        let s = prop.state(t, &self.inner).map_err(err)?;
        Ok((s.u, s.ut))
    }

    /// Total energy of the solution at time t.
    fn energy(&self, f: Vec<f64>, g: Vec<f64>, t: f64) -> PyResult<f64> {
        let prop = Propagator::new(&self.even(f, "f")?, &self.even(g, "g")?, &self.inner).map_err(err)?;
        let s = prop.state(t, &self.inner).map_err(err)?;
        Ok(energy(&s, &self.inner.potential).total)
    }

    #[pyo3(signature = (f, g, times, k = 0, l = 0))]
    fn verify_energy<'py>(
        &self,
        py: Python<'py>,
        f: Vec<f64>,
        g: Vec<f64>,
        times: Vec<f64>,
        k: usize,
        l: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let r = verify_energy(&self.even(f, "f")?, &self.even(g, "g")?, k, l, &times, &self.inner).map_err(err)?;
        report_dict(py, &r)
    }

    fn verify_dispersive<'py>(
        &self,
        py: Python<'py>,
        f: Vec<f64>,
        g: Vec<f64>,
        sigma: f64,
        times: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let r = verify_dispersive(&self.even(f, "f")?, &self.even(g, "g")?, sigma, &times, &self.inner).map_err(err)?;
        report_dict(py, &r)
    }

    fn __repr__(&self) -> String {
        format!(
            "SpectralTable({}, {} frequencies, {} samples)",
            self.inner.potential.name(),
            self.inner.n_xi(),
            self.inner.n_x()
        )
    }
}

#[pymodule]
fn distwave(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Potential>()?;
    m.add_class::<SpectralTable>()?;
    m.add_function(wrap_pyfunction!(spectral_data, m)?)?;
    m.add_function(wrap_pyfunction!(hankel_transform, m)?)?;
    Ok(())
}
