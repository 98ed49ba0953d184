//! Python bindings for `cogradio`.
//!
//! Complex vectors cross the boundary as lists of Python `complex`; user sets
//! as lists of zero-based indices.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cogradio::cli::{parse_scenario, run_experiment_with, Experiment, RunOptions};
use cogradio::linalg::CVector;
use cogradio::mld::{mld_power_min, mld_rate_opt, MldRateOptions};
use cogradio::mmse::{algorithm1_power_min, algorithm2_rate_opt, duality_gap, PowerMinOptions, RateOptOptions};
use cogradio::network::{
    channel_matching_beams, primary_beams_default, primary_interference, received_sinr, sample_channels,
    single_user_rates, weighted_sum_power, BeamformerSet, ChannelSet, MatchingMode, NetworkConfig,
};
use cogradio::sdp::SdpOptions;
use cogradio::sets::UserSet;
use cogradio::ugd::{self, AllocationOptions, AllocationResult, EffectiveNetwork};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_list(v: &CVector) -> Vec<Complex64> {
    v.as_slice().to_vec()
}

fn to_family(f: &[Vec<CVector>]) -> Vec<Vec<Vec<Complex64>>> {
    f.iter().map(|row| row.iter().map(to_list).collect()).collect()
}

fn from_family(f: Vec<Vec<Vec<Complex64>>>) -> Vec<Vec<CVector>> {
    f.into_iter()
        .map(|row| row.into_iter().map(CVector::from_vec).collect())
        .collect()
}

fn user_set(indices: &[usize], ms: usize) -> PyResult<UserSet> {
    match indices.iter().find(|&&k| k >= ms) {
        Some(k) => Err(PyValueError::new_err(format!("user index {k} out of range for {ms} users"))),
        None => Ok(UserSet::from_indices(indices)),
    }
}

fn check_len(name: &str, v: &[f64], len: usize) -> PyResult<()> {
    if v.len() == len {
        Ok(())
    } else {
        Err(PyValueError::new_err(format!("{name} has {} entries, expected {len}", v.len())))
    }
}

/// Network dimensions, noise, weights, margins and budget.
#[pyclass(name = "Network", module = "cogradio", from_py_object)]
#[derive(Clone)]
struct PyNetwork {
    inner: NetworkConfig,
}

#[pymethods]
impl PyNetwork {
    #[new]
    #[pyo3(signature = (ms, mp, ns, np=None, *, sigma_s=None, alpha=None, rho=None, beta=None, p0=100.0, primary_power=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        ms: usize,
        mp: usize,
        ns: usize,
        np: Option<usize>,
        sigma_s: Option<Vec<f64>>,
        alpha: Option<Vec<f64>>,
        rho: Option<Vec<f64>>,
        beta: Option<Vec<f64>>,
        p0: f64,
        primary_power: f64,
    ) -> PyResult<Self> {
        let mut cfg = NetworkConfig::new(ms, mp, ns, np.unwrap_or(ns)).with_p0(p0);
        cfg.primary_power = primary_power;
        if let Some(v) = sigma_s {
            cfg.sigma_s = v;
        }
        if let Some(v) = alpha {
            cfg.alpha = v;
        }
        if let Some(v) = rho {
            cfg.rho = v;
        }
        if let Some(v) = beta {
            cfg.beta = v;
        }
        cfg.validate().map_err(value_err)?;
        Ok(PyNetwork { inner: cfg })
    }

    #[getter]
    fn ms(&self) -> usize {
        self.inner.ms
    }
    #[getter]
    fn mp(&self) -> usize {
        self.inner.mp
    }
    #[getter]
    fn ns(&self) -> usize {
        self.inner.ns
    }
    #[getter]
    fn np(&self) -> usize {
        self.inner.np
    }
    #[getter]
    fn sigma_s(&self) -> Vec<f64> {
        self.inner.sigma_s.clone()
    }
    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.alpha.clone()
    }
    #[getter]
    fn rho(&self) -> Vec<f64> {
        self.inner.rho.clone()
    }
    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.beta.clone()
    }
    #[getter]
    fn p0(&self) -> f64 {
        self.inner.p0
    }
    #[getter]
    fn primary_power(&self) -> f64 {
        self.inner.primary_power
    }

    /// SINR targets `2^(ρ_i·scale) − 1`.
    fn gamma_for_scale(&self, scale: f64) -> Vec<f64> {
        self.inner.gamma_for_scale(scale)
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!("Network(ms={}, mp={}, ns={}, np={}, p0={})", c.ms, c.mp, c.ns, c.np, c.p0)
    }
}

/// Every channel of one realization plus the primary beams.
#[pyclass(name = "Channels", module = "cogradio", from_py_object)]
#[derive(Clone)]
struct PyChannels {
    inner: ChannelSet,
}

#[pymethods]
impl PyChannels {
    /// Builds channels from nested lists `family[rx][tx] = [complex, ...]`.
    /// The primary beams default to the matched ones.
    #[staticmethod]
    #[pyo3(signature = (network, hss, hsp, hps, hpp, wp=None))]
    fn from_lists(
        network: &PyNetwork,
        hss: Vec<Vec<Vec<Complex64>>>,
        hsp: Vec<Vec<Vec<Complex64>>>,
        hps: Vec<Vec<Vec<Complex64>>>,
        hpp: Vec<Vec<Vec<Complex64>>>,
        wp: Option<Vec<Vec<Complex64>>>,
    ) -> PyResult<Self> {
        let mut ch = ChannelSet {
            hss: from_family(hss),
            hsp: from_family(hsp),
            hps: from_family(hps),
            hpp: from_family(hpp),
            wp: Vec::new(),
        };
        ch.wp = match wp {
            Some(w) => w.into_iter().map(CVector::from_vec).collect(),
            None => {
                ch.wp = vec![CVector::zeros(network.inner.np); network.inner.mp];
                ch.validate(&network.inner).map_err(value_err)?;
                primary_beams_default(&network.inner, &ch).map_err(value_err)?
            }
        };
        ch.validate(&network.inner).map_err(value_err)?;
        Ok(PyChannels { inner: ch })
    }

    #[getter]
    fn hss(&self) -> Vec<Vec<Vec<Complex64>>> {
        to_family(&self.inner.hss)
    }
    #[getter]
    fn hsp(&self) -> Vec<Vec<Vec<Complex64>>> {
        to_family(&self.inner.hsp)
    }
    #[getter]
    fn hps(&self) -> Vec<Vec<Vec<Complex64>>> {
        to_family(&self.inner.hps)
    }
    #[getter]
    fn hpp(&self) -> Vec<Vec<Vec<Complex64>>> {
        to_family(&self.inner.hpp)
    }
    #[getter]
    fn wp(&self) -> Vec<Vec<Complex64>> {
        self.inner.wp.iter().map(to_list).collect()
    }
}

/// Secondary transmit beamformers, one vector per user.
#[pyclass(name = "Beams", module = "cogradio", from_py_object)]
#[derive(Clone)]
struct PyBeams {
    inner: BeamformerSet,
}

#[pymethods]
impl PyBeams {
    #[new]
    fn new(vectors: Vec<Vec<Complex64>>) -> Self {
        PyBeams {
            inner: BeamformerSet {
                ws: vectors.into_iter().map(CVector::from_vec).collect(),
            },
        }
    }

    #[getter]
    fn vectors(&self) -> Vec<Vec<Complex64>> {
        self.inner.ws.iter().map(to_list).collect()
    }

    /// `‖w_i‖²` per user.
    fn powers(&self) -> Vec<f64> {
        self.inner.powers()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Outcome of power minimization.
#[pyclass(name = "PowerMinResult", module = "cogradio", get_all, skip_from_py_object)]
struct PyPowerMinResult {
    optimal: bool,
    objective: f64,
    dual_value: f64,
    /// Relative primal-dual gap, NaN when infeasible.
    gap: f64,
    multipliers: Vec<f64>,
    iterations: usize,
    beams: Option<PyBeams>,
}

/// Outcome of a rate allocation.
#[pyclass(name = "Allocation", module = "cogradio", get_all, skip_from_py_object)]
struct PyAllocation {
    rates: Vec<f64>,
    iterations: usize,
    trace: Vec<Vec<f64>>,
    /// Decoding group of every receiver in the last round.
    groups: Vec<Vec<usize>>,
}

impl From<AllocationResult> for PyAllocation {
    fn from(r: AllocationResult) -> Self {
        PyAllocation {
            rates: r.r_star,
            iterations: r.iterations,
            trace: r.trace,
            groups: r.partitions.iter().map(|s| s.to_vec()).collect(),
        }
    }
}

/// Scalar gains `h_ij·w_j` seen by every receiver.
#[pyclass(name = "EffectiveNetwork", module = "cogradio", from_py_object)]
#[derive(Clone)]
struct PyEffectiveNetwork {
    inner: EffectiveNetwork,
}

#[pymethods]
impl PyEffectiveNetwork {
    /// `gains[i][j]`: scalar gain of user `j` at receiver `i`, with unit noise.
    #[new]
    fn new(gains: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let ms = gains.len();
        if ms == 0 || gains.iter().any(|r| r.len() != ms) {
            return Err(PyValueError::new_err("gains must be a nonempty square matrix"));
        }
        Ok(PyEffectiveNetwork {
            inner: EffectiveNetwork::new(gains),
        })
    }

    #[getter]
    fn ms(&self) -> usize {
        self.inner.ms()
    }

    /// Sum rate the receiver `i` can decode for users `s` while treating
    /// `b` as suppressed.
    fn group_rank(&self, i: usize, s: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
        let ms = self.inner.ms();
        if i >= ms {
            return Err(PyValueError::new_err(format!("receiver {i} out of range")));
        }
        Ok(ugd::group_rank(&self.inner, i, user_set(&s, ms)?, user_set(&b, ms)?))
    }

    fn ugd_decodable(&self, rates: Vec<f64>) -> PyResult<bool> {
        check_len("rates", &rates, self.inner.ms())?;
        Ok(ugd::ugd_decodable(&self.inner, &rates))
    }

    fn mld_decodable(&self, rates: Vec<f64>) -> PyResult<bool> {
        check_len("rates", &rates, self.inner.ms())?;
        Ok(ugd::mld_decodable_effective(&self.inner, &rates))
    }
}

#[pyfunction]
fn sample(network: &PyNetwork, seed: u64) -> PyChannels {
    PyChannels {
        inner: sample_channels(&network.inner, seed),
    }
}

/// Beams matched to the direct channels. `mode` is `"lower"` (largest
/// common power within budget and margins) or `"genie"` (full budget each).
#[pyfunction]
#[pyo3(signature = (network, channels, mode="lower"))]
fn matching_beams(network: &PyNetwork, channels: &PyChannels, mode: &str) -> PyResult<PyBeams> {
    let mode = match mode {
        "lower" => MatchingMode::Lower,
        "genie" => MatchingMode::Genie,
        other => return Err(PyValueError::new_err(format!("unknown matching mode `{other}`"))),
    };
    channel_matching_beams(&network.inner, &channels.inner, mode)
        .map(|inner| PyBeams { inner })
        .map_err(value_err)
}

fn check_beams(network: &PyNetwork, beams: &PyBeams) -> PyResult<()> {
    let c = &network.inner;
    if beams.inner.len() != c.ms || beams.inner.ws.iter().any(|w| w.len() != c.ns) {
        return Err(PyValueError::new_err(format!("expected {} beams of length {}", c.ms, c.ns)));
    }
    Ok(())
}

#[pyfunction]
fn sinr(network: &PyNetwork, channels: &PyChannels, beams: &PyBeams) -> PyResult<Vec<f64>> {
    check_beams(network, beams)?;
    Ok((0..network.inner.ms)
        .map(|i| received_sinr(&network.inner, &channels.inner, &beams.inner, i))
        .collect())
}

/// `log2(1 + SINR_i)` per user.
#[pyfunction]
fn rates(network: &PyNetwork, channels: &PyChannels, beams: &PyBeams) -> PyResult<Vec<f64>> {
    check_beams(network, beams)?;
    Ok(single_user_rates(&network.inner, &channels.inner, &beams.inner))
}

/// Interference received by every primary.
#[pyfunction]
fn leakage(network: &PyNetwork, channels: &PyChannels, beams: &PyBeams) -> PyResult<Vec<f64>> {
    check_beams(network, beams)?;
    Ok((0..network.inner.mp)
        .map(|i| primary_interference(&channels.inner, &beams.inner, i))
        .collect())
}

/// `Σ α_i ‖w_i‖²`.
#[pyfunction]
fn weighted_power(network: &PyNetwork, beams: &PyBeams) -> PyResult<f64> {
    check_beams(network, beams)?;
    Ok(weighted_sum_power(&network.inner, &beams.inner))
}

/// Minimum weighted power meeting SINR targets `gamma` and every margin.
#[pyfunction]
#[pyo3(signature = (network, channels, gamma, max_outer=None))]
fn power_min(network: &PyNetwork, channels: &PyChannels, gamma: Vec<f64>, max_outer: Option<usize>) -> PyResult<PyPowerMinResult> {
    check_len("gamma", &gamma, network.inner.ms)?;
    let mut opts = PowerMinOptions::default();
    if let Some(k) = max_outer {
        opts.max_outer = k;
    }
    let r = algorithm1_power_min(&network.inner, &channels.inner, &gamma, &opts);
    let optimal = r.is_optimal();
    Ok(PyPowerMinResult {
        optimal,
        objective: r.objective,
        dual_value: r.dual_value,
        gap: if optimal { duality_gap(&r) } else { f64::NAN },
        multipliers: r.dual.lambda.clone(),
        iterations: r.dual.iteration,
        beams: optimal.then_some(PyBeams { inner: r.beams }),
    })
}

/// Largest common rate scale with single-user receivers: `(scale, beams)`.
#[pyfunction]
#[pyo3(signature = (network, channels, delta=1e-3))]
fn rate_opt(network: &PyNetwork, channels: &PyChannels, delta: f64) -> PyResult<(f64, PyBeams)> {
    let opts = RateOptOptions {
        delta,
        ..Default::default()
    };
    let r = algorithm2_rate_opt(&network.inner, &channels.inner, &opts).map_err(runtime_err)?;
    Ok((r.rho_star, PyBeams { inner: r.beams }))
}

/// Largest common rate scale with joint receivers: `(scale, beams)`.
#[pyfunction]
#[pyo3(signature = (network, channels, delta=1e-3))]
fn mld_rate(network: &PyNetwork, channels: &PyChannels, delta: f64) -> PyResult<(f64, PyBeams)> {
    let opts = MldRateOptions {
        delta,
        ..Default::default()
    };
    let r = mld_rate_opt(&network.inner, &channels.inner, &opts).map_err(runtime_err)?;
    Ok((r.rho_star, PyBeams { inner: r.beams }))
}

/// Joint-receiver power minimization for target rates:
/// `(beams, power, relaxation lower bound)`.
#[pyfunction]
fn mld_power(network: &PyNetwork, channels: &PyChannels, rates: Vec<f64>) -> PyResult<(PyBeams, f64, f64)> {
    check_len("rates", &rates, network.inner.ms)?;
    let r = mld_power_min(&network.inner, &channels.inner, &rates, &SdpOptions::default()).map_err(runtime_err)?;
    let bound = r.relaxation_bound();
    Ok((PyBeams { inner: r.beams }, r.power, bound))
}

#[pyfunction]
fn effective_network(network: &PyNetwork, channels: &PyChannels, beams: &PyBeams) -> PyResult<PyEffectiveNetwork> {
    check_beams(network, beams)?;
    Ok(PyEffectiveNetwork {
        inner: ugd::effective_network(&network.inner, &channels.inner, &beams.inner),
    })
}

/// Rate increments receiver `i` proposes above `rmin`.
#[pyfunction]
fn recommend(net: &PyEffectiveNetwork, i: usize, rmin: Vec<f64>, rho: Vec<f64>) -> PyResult<Vec<f64>> {
    let ms = net.inner.ms();
    check_len("rmin", &rmin, ms)?;
    check_len("rho", &rho, ms)?;
    if i >= ms {
        return Err(PyValueError::new_err(format!("receiver {i} out of range")));
    }
    ugd::algorithm3(&net.inner, i, &rmin, &rho)
        .map(|r| r.increments)
        .map_err(value_err)
}

/// Max-min fair allocation starting from `rmin`. `decoder` is `"ugd"` or
/// `"mld"`.
#[pyfunction]
#[pyo3(signature = (net, rmin, rho, decoder="ugd", max_rounds=50, conv_eps=1e-9))]
fn allocate(
    net: &PyEffectiveNetwork,
    rmin: Vec<f64>,
    rho: Vec<f64>,
    decoder: &str,
    max_rounds: usize,
    conv_eps: f64,
) -> PyResult<PyAllocation> {
    let ms = net.inner.ms();
    check_len("rmin", &rmin, ms)?;
    check_len("rho", &rho, ms)?;
    let opts = AllocationOptions { conv_eps, max_rounds };
    let r = match decoder {
        "ugd" => ugd::algorithm4(&net.inner, &rmin, &rho, &opts),
        "mld" => ugd::algorithm4mld(&net.inner, &rmin, &rho, &opts),
        other => return Err(PyValueError::new_err(format!("unknown decoder `{other}`"))),
    };
    r.map(PyAllocation::from).map_err(value_err)
}

/// `rmin + x·rho` with `x` the smallest weighted gain of `rates` over `rmin`.
#[pyfunction]
fn strict_fair_rate(rates: Vec<f64>, rmin: Vec<f64>, rho: Vec<f64>) -> PyResult<Vec<f64>> {
    check_len("rmin", &rmin, rates.len())?;
    check_len("rho", &rho, rates.len())?;
    Ok(ugd::strict_fair_rate(&rates, &rmin, &rho))
}

/// Runs a scenario file and returns its result rows as dictionaries.
#[pyfunction]
#[pyo3(signature = (path, experiment=None))]
fn run_scenario<'py>(py: Python<'py>, path: &str, experiment: Option<&str>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let scenario = parse_scenario(path).map_err(value_err)?;
    let experiment = match experiment {
        Some(name) => name.parse::<Experiment>().map_err(value_err)?,
        None => scenario
            .experiment
            .ok_or_else(|| PyValueError::new_err("the scenario names no experiment"))?,
    };
    let out = py.detach(|| run_experiment_with(&scenario, experiment, &RunOptions::default()));
    out.rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("seed", r.seed)?;
            d.set_item("experiment", r.experiment.name())?;
            d.set_item("method", r.method.tag())?;
            d.set_item("min_rate", r.min_rate)?;
            d.set_item("sum_rate", r.sum_rate)?;
            d.set_item("sum_power", r.sum_power)?;
            d.set_item("feasible", r.feasible)?;
            d.set_item("iterations", r.iterations)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "cogradio")]
pub fn cogradio_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyChannels>()?;
    m.add_class::<PyBeams>()?;
    m.add_class::<PyPowerMinResult>()?;
    m.add_class::<PyAllocation>()?;
    m.add_class::<PyEffectiveNetwork>()?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(matching_beams, m)?)?;
    m.add_function(wrap_pyfunction!(sinr, m)?)?;
    m.add_function(wrap_pyfunction!(rates, m)?)?;
    m.add_function(wrap_pyfunction!(leakage, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_power, m)?)?;
    m.add_function(wrap_pyfunction!(power_min, m)?)?;
    m.add_function(wrap_pyfunction!(rate_opt, m)?)?;
    m.add_function(wrap_pyfunction!(mld_rate, m)?)?;
    m.add_function(wrap_pyfunction!(mld_power, m)?)?;
    m.add_function(wrap_pyfunction!(effective_network, m)?)?;
    m.add_function(wrap_pyfunction!(recommend, m)?)?;
    m.add_function(wrap_pyfunction!(allocate, m)?)?;
    m.add_function(wrap_pyfunction!(strict_fair_rate, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
