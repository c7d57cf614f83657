//! Python module `ehaoi`.
//!
//! Budgets are floats, with `None` or `math.inf` meaning unbounded.
//! Probabilities outside `[0, 1]` and invalid budgets raise `ValueError`;
//! solver failures raise `RuntimeError`.

use ehaoi::capacity::CapacityOptions;
use ehaoi::regions::{self, Source};
use ehaoi::simulator::SimConfig;
use ehaoi::{AgeConstraints, Battery, Error, InterUpdatePmf, PolicySpec, Probability};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. } | Error::Truncation { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn prob(x: f64) -> PyResult<Probability> {
    Probability::new(x).map_err(py_err)
}

fn budget(x: Option<f64>) -> ehaoi::Bound {
    match x {
        Some(v) if v.is_finite() => ehaoi::Bound::Finite(v),
        _ => ehaoi::Bound::Unbounded,
    }
}

fn constraints(c_p: Option<f64>, c_a: Option<f64>) -> PyResult<AgeConstraints> {
    AgeConstraints::new(budget(c_p), budget(c_a)).map_err(py_err)
}

fn battery(name: &str) -> PyResult<Battery> {
    name.parse().map_err(py_err)
}

/// Probability mass function of the interval between updates.
#[pyclass(name = "InterUpdatePmf", module = "ehaoi", frozen)]
#[derive(Clone)]
struct PyPmf(InterUpdatePmf);

#[pymethods]
impl PyPmf {
    /// Masses for v = 1, 2, ...
    #[new]
    fn new(masses: Vec<f64>) -> PyResult<Self> {
        InterUpdatePmf::from_masses(masses).map(Self).map_err(py_err)
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        self.0.masses().to_vec()
    }

    #[getter]
    fn support_max(&self) -> usize {
        self.0.support_max()
    }

    #[getter]
    fn tail_mass(&self) -> f64 {
        self.0.tail_mass()
    }

    fn entropy(&self) -> f64 {
        self.0.entropy()
    }

    /// `(E[V], E[V^2])`.
    fn moments(&self) -> (f64, f64) {
        self.0.moments()
    }

    fn peak_age(&self) -> f64 {
        ehaoi::peak_age(&self.0)
    }

    fn avg_age(&self) -> f64 {
        ehaoi::avg_age(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.support_max()
    }

    fn __repr__(&self) -> String {
        format!(
            "InterUpdatePmf(support_max={}, mean={:.6})",
            self.0.support_max(),
            self.0.mean()
        )
    }
}

#[pyclass(name = "CapacityResult", module = "ehaoi", frozen, get_all)]
struct PyCapacity {
    feasible: bool,
    /// "feasible", "infeasible_peak" or "infeasible_avg".
    status: String,
    value: f64,
    k_star: Option<f64>,
    pmf: Option<PyPmf>,
}

#[pymethods]
impl PyCapacity {
    fn __repr__(&self) -> String {
        format!(
            "CapacityResult(status={:?}, value={}, k_star={:?})",
            self.status, self.value, self.k_star
        )
    }
}

/// A policy with its rate and ages.
#[pyclass(name = "PolicyResult", module = "ehaoi", frozen, get_all)]
struct PyPolicy {
    kind: String,
    omega: Option<usize>,
    g: Option<f64>,
    p: Option<f64>,
    period_low: Option<usize>,
    g_f: Option<f64>,
    rate: f64,
    peak_age: f64,
    avg_age: f64,
}

impl PyPolicy {
    fn new(policy: &PolicySpec, m: &ehaoi::PolicyMetrics) -> Self {
        let mut out = Self {
            kind: String::new(),
            omega: None,
            g: None,
            p: None,
            period_low: None,
            g_f: None,
            rate: m.rate,
            peak_age: m.peak_age,
            avg_age: m.avg_age,
        };
        match policy {
            PolicySpec::ZeroBattery { p } => {
                out.kind = "zero_battery".into();
                out.p = Some(p.get());
            }
            PolicySpec::ZeroWait { g } => {
                out.kind = "zero_wait".into();
                out.omega = Some(1);
                out.g = Some(g.get());
            }
            PolicySpec::WaitAndTransmit { omega, g } => {
                out.kind = "wait_and_transmit".into();
                out.omega = Some(*omega);
                out.g = Some(g.get());
            }
            PolicySpec::ProbPeriodic { period_low, g_f } => {
                out.kind = "prob_periodic".into();
                out.period_low = Some(*period_low);
                out.g_f = Some(g_f.get());
            }
            PolicySpec::ExplicitPmf { .. } => out.kind = "explicit_pmf".into(),
        }
        out
    }
}

#[pymethods]
impl PyPolicy {
    fn __repr__(&self) -> String {
        format!(
            "PolicyResult(kind={:?}, rate={}, peak_age={}, avg_age={})",
            self.kind, self.rate, self.peak_age, self.avg_age
        )
    }
}

/// One sample of a rate/state-information boundary.
#[pyclass(name = "RegionPoint", module = "ehaoi", frozen, get_all)]
struct PyRegionPoint {
    source: String,
    c_p: f64,
    c_a: f64,
    rate: f64,
    delta: f64,
    delta_kind: String,
    peak_age: Option<f64>,
    avg_age: Option<f64>,
    feasible: bool,
}

impl From<regions::RegionPoint> for PyRegionPoint {
    fn from(pt: regions::RegionPoint) -> Self {
        Self {
            source: pt.source.name().into(),
            c_p: pt.constraints.c_p.as_f64(),
            c_a: pt.constraints.c_a.as_f64(),
            rate: pt.rate,
            delta: pt.delta,
            delta_kind: match pt.delta_kind {
                ehaoi::DeltaKind::Amplification => "amplification".into(),
                ehaoi::DeltaKind::MaskingLowerBound => "masking_lower_bound".into(),
            },
            peak_age: pt.peak_age,
            avg_age: pt.avg_age,
            feasible: pt.feasible,
        }
    }
}

#[pymethods]
impl PyRegionPoint {
    fn __repr__(&self) -> String {
        format!(
            "RegionPoint(source={:?}, c_p={}, rate={}, delta={})",
            self.source, self.c_p, self.rate, self.delta
        )
    }
}

#[pyclass(name = "SimStats", module = "ehaoi", frozen, get_all)]
struct PySimStats {
    n_slots: u64,
    seed: u64,
    update_count: u64,
    empirical_peak_age: Option<f64>,
    empirical_avg_age: Option<f64>,
    interval_avg_age: Option<f64>,
    interval_entropy_rate: Option<f64>,
    empirical_mi_per_slot: Option<f64>,
    battery_violations: u64,
    final_battery: u64,
    save_phase_slots: u64,
    degenerate: bool,
}

impl From<ehaoi::SimStats> for PySimStats {
    fn from(s: ehaoi::SimStats) -> Self {
        Self {
            n_slots: s.n_slots,
            seed: s.seed,
            update_count: s.update_count,
            empirical_peak_age: s.empirical_peak_age,
            empirical_avg_age: s.empirical_avg_age,
            interval_avg_age: s.interval_avg_age,
            interval_entropy_rate: s.interval_entropy_rate,
            empirical_mi_per_slot: s.empirical_mi_per_slot,
            battery_violations: s.battery_violations,
            final_battery: s.final_battery,
            save_phase_slots: s.save_phase_slots,
            degenerate: s.degenerate,
        }
    }
}

#[pymethods]
impl PySimStats {
    fn __repr__(&self) -> String {
        format!(
            "SimStats(update_count={}, empirical_peak_age={:?}, battery_violations={})",
            self.update_count, self.empirical_peak_age, self.battery_violations
        )
    }
}

#[pyfunction]
fn binary_entropy(x: f64) -> PyResult<f64> {
    Ok(ehaoi::binary_entropy(prob(x)?))
}

/// `(peak_min, avg_min, g_f)` for battery `"zero"` or `"infinite"`.
#[pyfunction]
fn min_ages(q: f64, battery: &str) -> PyResult<(f64, f64, Option<f64>)> {
    let r = match self::battery(battery)? {
        Battery::Zero => ehaoi::min_ages_zero(prob(q)?),
        Battery::Infinite => ehaoi::min_ages_infinite(prob(q)?),
    }
    .map_err(py_err)?;
    Ok((r.peak_min, r.avg_min, r.g_f))
}

#[pyfunction]
#[pyo3(signature = (q, c_p=None, c_a=None))]
fn capacity(py: Python<'_>, q: f64, c_p: Option<f64>, c_a: Option<f64>) -> PyResult<PyCapacity> {
    let (q, c) = (prob(q)?, constraints(c_p, c_a)?);
    let res = py
        .allow_threads(|| ehaoi::capacity(q, &c, &CapacityOptions::default()))
        .map_err(py_err)?;
    let status = match res.status {
        ehaoi::Feasibility::Feasible => "feasible",
        ehaoi::Feasibility::InfeasiblePeak => "infeasible_peak",
        ehaoi::Feasibility::InfeasibleAvg => "infeasible_avg",
    };
    Ok(PyCapacity {
        feasible: res.is_feasible(),
        status: status.into(),
        value: res.value,
        k_star: res.k_star,
        pmf: res.pmf_star.map(PyPmf),
    })
}

/// Maximum-entropy interval law with mean `k` and average-age budget `c_a`
/// on the support `1..=v_max`.
#[pyfunction]
#[pyo3(signature = (k, c_a, v_max, tol=1e-10))]
fn max_entropy_pmf(k: f64, c_a: Option<f64>, v_max: usize, tol: f64) -> PyResult<PyPmf> {
    ehaoi::max_entropy_pmf(k, budget(c_a), v_max, tol)
        .map(PyPmf)
        .map_err(py_err)
}

/// Best policy of a family: `"zero_wait"`, `"wat"` or `"periodic"`. Returns
/// `None` when no member meets the budgets.
#[pyfunction]
#[pyo3(signature = (family, q, c_p=None, c_a=None))]
fn optimize_policy(family: &str, q: f64, c_p: Option<f64>, c_a: Option<f64>) -> PyResult<Option<PyPolicy>> {
    let (q, c) = (prob(q)?, constraints(c_p, c_a)?);
    let opt = match family {
        "zero_wait" | "zero-wait" => ehaoi::zero_wait_optimize(q, &c).map_err(py_err)?,
        "wat" | "wait_and_transmit" => ehaoi::optimize_wat(q, &c).map_err(py_err)?,
        "periodic" => {
            let policy = ehaoi::prob_periodic_policy(q).map_err(py_err)?;
            let metrics = ehaoi::policy_metrics(&policy, q).map_err(py_err)?;
            c.admits(metrics.peak_age, metrics.avg_age)
                .then_some(ehaoi::PolicyOptimum { policy, metrics })
        }
        other => return Err(PyValueError::new_err(format!("unknown policy family `{other}`"))),
    };
    Ok(opt.map(|o| PyPolicy::new(&o.policy, &o.metrics)))
}

/// Zero-battery bounds at strategy probability `p` as a dict with keys
/// `r_max`, `delta_cap`, `sum_cap`, `mask_bound`, `peak_age`, `avg_age`.
#[pyfunction]
fn zero_battery<'py>(py: Python<'py>, p: f64, q: f64) -> PyResult<Bound<'py, PyDict>> {
    let (pp, qq) = (prob(p)?, prob(q)?);
    let amp = regions::zero_battery_amp(pp, qq).map_err(py_err)?;
    let (_, mask) = regions::zero_battery_mask(pp, qq).map_err(py_err)?;
    let (peak, avg) = regions::zero_battery_age(pp, qq).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("r_max", amp.r_max)?;
    d.set_item("delta_cap", amp.delta_cap)?;
    d.set_item("sum_cap", amp.sum_cap)?;
    d.set_item("mask_bound", mask)?;
    d.set_item("peak_age", peak)?;
    d.set_item("avg_age", avg)?;
    Ok(d)
}

/// Best Δa with rate at least `r_min` for each peak-age budget and source.
#[pyfunction]
#[pyo3(signature = (q, r_min, c_p_grid, c_a=None, sources=None))]
fn tradeoff_sweep(
    py: Python<'_>,
    q: f64,
    r_min: f64,
    c_p_grid: Vec<f64>,
    c_a: Option<f64>,
    sources: Option<Vec<String>>,
) -> PyResult<Vec<PyRegionPoint>> {
    let q = prob(q)?;
    let sources: Vec<Source> = match sources {
        None => Source::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()
            .map_err(py_err)?,
    };
    let pts = py
        .allow_threads(|| {
            regions::tradeoff_sweep(q, r_min, budget(c_a), &c_p_grid, &sources, &CapacityOptions::default())
        })
        .map_err(py_err)?;
    Ok(pts.into_iter().map(Into::into).collect())
}

/// Masking boundary for battery `"zero"` or `"infinite"`.
#[pyfunction]
#[pyo3(signature = (q, c_p=None, grid=101, battery="zero"))]
fn mask_region(q: f64, c_p: Option<f64>, grid: usize, battery: &str) -> PyResult<Vec<PyRegionPoint>> {
    let sweep = regions::mask_region_sweep(prob(q)?, budget(c_p), grid, self::battery(battery)?).map_err(py_err)?;
    Ok(sweep.points.into_iter().map(Into::into).collect())
}

/// Infinite-battery amplification boundary.
#[pyfunction]
#[pyo3(signature = (q, c_p=None, c_a=None, grid=101))]
fn amp_region(py: Python<'_>, q: f64, c_p: Option<f64>, c_a: Option<f64>, grid: usize) -> PyResult<Vec<PyRegionPoint>> {
    let (q, c) = (prob(q)?, constraints(c_p, c_a)?);
    let pts = py
        .allow_threads(|| regions::amp_region_infinite(q, &c, grid, &CapacityOptions::default()))
        .map_err(py_err)?;
    Ok(pts.into_iter().map(Into::into).collect())
}

/// Monte Carlo run. `policy` is `"zero_battery"` (needs `p`),
/// `"zero_wait"` (`g`), `"wat"` (`omega`, `g`), `"periodic"` or `"pmf"`
/// (`pmf`).
#[pyfunction]
#[pyo3(signature = (q, battery, policy, n_slots, seed, p=None, g=None, omega=None, pmf=None, save_phase_slots=None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    q: f64,
    battery: &str,
    policy: &str,
    n_slots: u64,
    seed: u64,
    p: Option<f64>,
    g: Option<f64>,
    omega: Option<usize>,
    pmf: Option<PyPmf>,
    save_phase_slots: Option<u64>,
) -> PyResult<PySimStats> {
    let missing = |name: &str| PyValueError::new_err(format!("policy `{policy}` needs `{name}`"));
    let spec = match policy {
        "zero_battery" => PolicySpec::ZeroBattery {
            p: prob(p.ok_or_else(|| missing("p"))?)?,
        },
        "zero_wait" => PolicySpec::ZeroWait {
            g: prob(g.ok_or_else(|| missing("g"))?)?,
        },
        "wat" => PolicySpec::WaitAndTransmit {
            omega: omega.ok_or_else(|| missing("omega"))?,
            g: prob(g.ok_or_else(|| missing("g"))?)?,
        },
        "periodic" => ehaoi::prob_periodic_policy(prob(q)?).map_err(py_err)?,
        "pmf" => PolicySpec::ExplicitPmf {
            pmf: pmf.ok_or_else(|| missing("pmf"))?.0,
        },
        other => return Err(PyValueError::new_err(format!("unknown policy `{other}`"))),
    };
    let config = SimConfig {
        q: prob(q)?,
        battery: self::battery(battery)?,
        policy: spec,
        n_slots,
        seed,
        save_phase_slots,
        miller_madow: false,
    };
    let stats = py.allow_threads(|| ehaoi::simulate(&config)).map_err(py_err)?;
    Ok(stats.into())
}

/// Plug-in entropy rate of observed intervals, bits per slot.
#[pyfunction]
fn estimate_interval_entropy(intervals: Vec<u64>) -> PyResult<f64> {
    ehaoi::estimate_interval_entropy(&intervals).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "ehaoi")]
fn ehaoi_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyPmf>()?;
    m.add_class::<PyCapacity>()?;
    m.add_class::<PyPolicy>()?;
    m.add_class::<PyRegionPoint>()?;
    m.add_class::<PySimStats>()?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(min_ages, m)?)?;
    m.add_function(wrap_pyfunction!(capacity, m)?)?;
    m.add_function(wrap_pyfunction!(max_entropy_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_policy, m)?)?;
    m.add_function(wrap_pyfunction!(zero_battery, m)?)?;
    m.add_function(wrap_pyfunction!(tradeoff_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(mask_region, m)?)?;
    m.add_function(wrap_pyfunction!(amp_region, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_interval_entropy, m)?)?;
    Ok(())
}
