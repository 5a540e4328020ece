//! Python bindings for the shockfit solver: the gas model, the background
//! normal shock, the shock locator, and the linearized and fitted-front
//! solves, with profiles given as polynomial coefficients or uniform
//! samples.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use shockfit::background::{
    background_constants, solve_normal_shock, unit_flux_inflow, BackgroundConstants,
    BackgroundShock,
};
use shockfit::gas::{FlowState, GasModel, IgnitionParams};
use shockfit::linfield::LinearGridSpec;
use shockfit::locator::{Hypothesis, HypothesisCase, Locator, NozzlePerturbation, RootPolicy};
use shockfit::nonlinear::{solve_transonic, TransonicOptions};
use shockfit::profile::Profile;

fn err(e: shockfit::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Polytropic gas with Arrhenius ignition kinetics.
#[pyclass(name = "Gas", skip_from_py_object)]
#[derive(Clone)]
struct PyGas {
    inner: GasModel,
}

#[pymethods]
impl PyGas {
    #[new]
    #[pyo3(signature = (gamma, c_v, q_e, kappa, t0, a, activation_energy, r0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        gamma: f64,
        c_v: f64,
        q_e: f64,
        kappa: f64,
        t0: f64,
        a: f64,
        activation_energy: f64,
        r0: f64,
    ) -> PyResult<Self> {
        let ignition = IgnitionParams::new(t0, a, activation_energy, r0).map_err(err)?;
        Ok(Self {
            inner: GasModel::new(gamma, c_v, q_e, kappa, ignition).map_err(err)?,
        })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn gas_constant(&self) -> f64 {
        self.inner.gas_constant
    }

    fn density(&self, p: f64, s: f64) -> PyResult<f64> {
        self.inner.density(p, s).map_err(err)
    }

    fn temperature(&self, p: f64, rho: f64) -> PyResult<f64> {
        self.inner.temperature(p, rho).map_err(err)
    }

    fn sound_speed(&self, p: f64, rho: f64) -> PyResult<f64> {
        self.inner.sound_speed(p, rho).map_err(err)
    }

    fn ignition_phi(&self, t: f64) -> f64 {
        self.inner.ignition_phi(t)
    }

    /// The five jump residuals `G1..G5` between two states `(p, theta, q, S, Z)`.
    fn jump_functions(
        &self,
        plus: (f64, f64, f64, f64, f64),
        minus: (f64, f64, f64, f64, f64),
        psi_slope: f64,
    ) -> PyResult<[f64; 5]> {
        let mk = |t: (f64, f64, f64, f64, f64)| FlowState {
            p: t.0,
            theta: t.1,
            q: t.2,
            s: t.3,
            z: t.4,
        };
        self.inner
            .jump_functions(&mk(plus), &mk(minus), psi_slope)
            .map_err(err)
    }
}

/// Background normal-shock pair with its derived constants.
#[pyclass(name = "Background")]
struct PyBackground {
    bg: BackgroundShock,
    consts: BackgroundConstants,
}

#[pymethods]
impl PyBackground {
    #[getter]
    fn p_minus(&self) -> f64 {
        self.bg.minus.state.p
    }

    #[getter]
    fn p_plus(&self) -> f64 {
        self.bg.plus.state.p
    }

    #[getter]
    fn mach_minus(&self) -> f64 {
        self.bg.minus.mach
    }

    #[getter]
    fn mach_plus(&self) -> f64 {
        self.bg.plus.mach
    }

    #[getter]
    fn rho_minus(&self) -> f64 {
        self.bg.minus.rho
    }

    #[getter]
    fn rho_plus(&self) -> f64 {
        self.bg.plus.rho
    }

    #[getter]
    fn mass_flux(&self) -> f64 {
        self.bg.mass_flux
    }

    #[getter]
    fn k1(&self) -> f64 {
        self.consts.k1
    }

    #[getter]
    fn k2(&self) -> f64 {
        self.consts.k2
    }

    /// Frozen reaction source `f1` behind the shock.
    #[getter]
    fn f1_plus(&self) -> f64 {
        self.consts.f1_plus
    }

    /// Elliptic coefficient `(1/(rho+ q+)) (1-M+^2)/(rho+ q+^2)`.
    #[getter]
    fn c_plus(&self) -> f64 {
        self.bg.c_plus()
    }

    fn rh_residuals(&self, gas: &PyGas) -> PyResult<[f64; 4]> {
        self.bg.rh_residuals(&gas.inner).map_err(err)
    }
}

/// Solve the background normal shock from `(p, mach)` at unit mass flux, or
/// from an explicit upstream density.
#[pyfunction]
#[pyo3(signature = (gas, p, mach, z, rho=None, require_ignition=true))]
fn normal_shock(
    gas: &PyGas,
    p: f64,
    mach: f64,
    z: f64,
    rho: Option<f64>,
    require_ignition: bool,
) -> PyResult<PyBackground> {
    let inflow = match rho {
        Some(rho) => {
            let c = gas.inner.sound_speed(p, rho).map_err(err)?;
            let s = gas.inner.entropy(p, rho).map_err(err)?;
            FlowState::new(p, 0.0, mach * c, s, z).map_err(err)?
        }
        None => unit_flux_inflow(&gas.inner, p, mach, z).map_err(err)?,
    };
    let bg = solve_normal_shock(&gas.inner, inflow, require_ignition).map_err(err)?;
    let consts = background_constants(&gas.inner, &bg).map_err(err)?;
    Ok(PyBackground { bg, consts })
}

fn profile_from(spec: &ProfileArg) -> PyResult<Profile> {
    match spec {
        ProfileArg::Poly(c) => Profile::poly(c.clone()).map_err(err),
        ProfileArg::Samples { values, x0, x1 } => {
            Profile::samples(*x0, *x1, values.clone()).map_err(err)
        }
    }
}

#[derive(FromPyObject)]
enum ProfileArg {
    /// Polynomial coefficients, constant term first.
    Poly(Vec<f64>),
    /// Uniform samples on `[x0, x1]`.
    Samples { values: Vec<f64>, x0: f64, x1: f64 },
}

/// Nozzle and exit-pressure perturbation data.
#[pyclass(name = "Nozzle")]
struct PyNozzle {
    pert: NozzlePerturbation,
}

#[pymethods]
impl PyNozzle {
    #[new]
    fn new(
        length: f64,
        sigma: f64,
        kappa: f64,
        theta: ProfileArg,
        p_sigma: ProfileArg,
        p_kappa: ProfileArg,
    ) -> PyResult<Self> {
        Ok(Self {
            pert: NozzlePerturbation::new(
                length,
                sigma,
                kappa,
                profile_from(&theta)?,
                profile_from(&p_sigma)?,
                profile_from(&p_kappa)?,
            )
            .map_err(err)?,
        })
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.pert.sigma
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.pert.kappa
    }
}

fn hypothesis_from(
    case: &str,
    a: Option<f64>,
    s: Option<f64>,
    beta0: Option<f64>,
) -> PyResult<Hypothesis> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| PyValueError::new_err(format!("hypothesis {case} needs {name}")))
    };
    let case = match case.to_ascii_lowercase().as_str() {
        "h1" => HypothesisCase::H1 {
            a1: need(a, "a")?,
            s: need(s, "s")?,
        },
        "h2" => HypothesisCase::H2 {
            a2: need(a, "a")?,
            s: need(s, "s")?,
        },
        "h3" => HypothesisCase::H3 { a: need(a, "a")? },
        "h4" => HypothesisCase::H4,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown hypothesis {other:?}"
            )))
        }
    };
    Ok(Hypothesis { case, beta0 })
}

/// Front-location result.
#[pyclass(name = "Location")]
struct PyLocation {
    #[pyo3(get)]
    xi_dot: f64,
    #[pyo3(get)]
    xi_star: Option<f64>,
    #[pyo3(get)]
    roots: Vec<f64>,
    #[pyo3(get)]
    admissible: bool,
    #[pyo3(get)]
    margin: f64,
    #[pyo3(get)]
    beta0: f64,
    #[pyo3(get)]
    p_star: f64,
    #[pyo3(get)]
    r_inf: f64,
    #[pyo3(get)]
    r_sup: f64,
}

/// Solve the front-location equation `R(xi) = P*`.
#[pyfunction]
#[pyo3(signature = (gas, background, nozzle, case="h4", a=None, s=None, beta0=None))]
#[allow(clippy::too_many_arguments)]
fn locate(
    gas: &PyGas,
    background: &PyBackground,
    nozzle: &PyNozzle,
    case: &str,
    a: Option<f64>,
    s: Option<f64>,
    beta0: Option<f64>,
) -> PyResult<PyLocation> {
    let _ = gas;
    let hyp = hypothesis_from(case, a, s, beta0)?;
    let loc = Locator::new(&background.bg, &background.consts, &nozzle.pert);
    let sol = loc
        .locate_at(
            &hyp,
            nozzle.pert.sigma,
            nozzle.pert.kappa,
            RootPolicy::NearestXiStar,
        )
        .map_err(err)?;
    Ok(PyLocation {
        xi_dot: sol.xi_dot,
        xi_star: sol.xi_star,
        roots: sol.all_roots,
        admissible: sol.admissible,
        margin: sol.margin,
        beta0: sol.beta0,
        p_star: sol.p_star,
        r_inf: sol.r_inf,
        r_sup: sol.r_sup,
    })
}

/// Fitted-front solution summary.
#[pyclass(name = "Transonic")]
struct PyTransonic {
    #[pyo3(get)]
    xi: f64,
    #[pyo3(get)]
    dxi: f64,
    #[pyo3(get)]
    psi: Vec<f64>,
    #[pyo3(get)]
    slope: Vec<f64>,
    #[pyo3(get)]
    sweeps: usize,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    rh_residual_max: f64,
    #[pyo3(get)]
    slope_distance: f64,
}

/// Run the linearized solve followed by the fitted-front iteration.
#[pyfunction]
#[pyo3(signature = (gas, background, nozzle, xi_dot, beta0, nx=96, ny=48, tol=None, max_sweeps=100))]
#[allow(clippy::too_many_arguments)]
fn solve(
    gas: &PyGas,
    background: &PyBackground,
    nozzle: &PyNozzle,
    xi_dot: f64,
    beta0: f64,
    nx: usize,
    ny: usize,
    tol: Option<f64>,
    max_sweeps: usize,
) -> PyResult<PyTransonic> {
    let opts = TransonicOptions {
        nx_down: nx,
        ny,
        nx_up: None,
        tol,
        max_sweeps,
        beta0,
    };
    let ts = solve_transonic(
        &gas.inner,
        &background.bg,
        &background.consts,
        &nozzle.pert,
        xi_dot,
        beta0,
        &opts,
    )
    .map_err(err)?;
    Ok(PyTransonic {
        xi: ts.front.xi,
        dxi: ts.state.dxi,
        psi: ts.front.psi(),
        slope: ts.front.slope.clone(),
        sweeps: ts.log.len(),
        converged: ts.converged,
        rh_residual_max: ts.rh_residual_max,
        slope_distance: ts.slope_distance,
    })
}

/// Linearized front slope only, for quick comparisons.
#[pyfunction]
#[pyo3(signature = (gas, background, nozzle, xi_dot, nx=96, ny=48))]
fn solve_linear(
    gas: &PyGas,
    background: &PyBackground,
    nozzle: &PyNozzle,
    xi_dot: f64,
    nx: usize,
    ny: usize,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let nx_up =
        shockfit::linfield::upstream_required_nx(&background.bg, nozzle.pert.length, ny).max(nx);
    let lin = shockfit::linfield::solve_linear(
        &gas.inner,
        &background.bg,
        &background.consts,
        &nozzle.pert,
        xi_dot,
        LinearGridSpec {
            nx_up,
            nx_down: nx,
            ny,
        },
    )
    .map_err(err)?;
    Ok((lin.psi, lin.psi_slope))
}

#[pymodule]
fn shockfit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGas>()?;
    m.add_class::<PyBackground>()?;
    m.add_class::<PyNozzle>()?;
    m.add_class::<PyLocation>()?;
    m.add_class::<PyTransonic>()?;
    m.add_function(wrap_pyfunction!(normal_shock, m)?)?;
    m.add_function(wrap_pyfunction!(locate, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_linear, m)?)?;
    Ok(())
}
