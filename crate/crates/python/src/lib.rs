//! Python bindings: `import primegap`.

use std::collections::BTreeMap;

use primegap::analytic::{self, Constants};
use primegap::cli::{self, RunConfig};
use primegap::fit;
use primegap::fluct::{self, FluctuationSample, ScanKind};
use primegap::selberg::{self, Pairing};
use primegap::sieve::{self, PrimeTable, SievePlan};
use primegap::Error;
use pyo3::exceptions::{PyMemoryError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    match e {
        Error::Resource { .. } => PyMemoryError::new_err(e.to_string()),
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Range { .. } | Error::Domain { .. } | Error::Invalid(_) | Error::Overflow(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn plan(limit: u64, workers: Option<usize>, segment_size: Option<u64>) -> SievePlan {
    let mut p = SievePlan::new(limit);
    if let Some(w) = workers {
        p = p.with_workers(w);
    }
    if let Some(s) = segment_size {
        p = p.with_segment_size(s);
    }
    p
}

fn constants(c: f64, b: f64, k_all: f64) -> PyResult<Constants> {
    let k = Constants { c, b, k_all, ..Constants::default() };
    k.validate().map_err(err)?;
    Ok(k)
}

fn pairing(name: &str) -> PyResult<Pairing> {
    match name {
        "ordered" => Ok(Pairing::Ordered),
        "unordered" => Ok(Pairing::Unordered),
        _ => Err(PyValueError::new_err(format!("pairing must be 'ordered' or 'unordered', got '{name}'"))),
    }
}

#[pyfunction]
fn li(x: f64) -> PyResult<f64> {
    analytic::li(x).map_err(err)
}

#[pyfunction]
fn skewes_log10(alpha: f64) -> PyResult<f64> {
    analytic::skewes_log10(alpha).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (c=1.0, b=5.0))]
fn monotonicity_threshold(c: f64, b: f64) -> f64 {
    analytic::monotonicity_threshold(c, b)
}

#[pyfunction]
#[pyo3(signature = (p, c=1.0))]
fn condition19_rhs(p: f64, c: f64) -> f64 {
    analytic::condition19_rhs(p, c)
}

#[pyfunction]
#[pyo3(signature = (p, c=1.0))]
fn condition24_rhs(p: f64, c: f64) -> f64 {
    analytic::condition24_rhs(p, c)
}

#[pyfunction]
fn dusart_bounds(x: f64) -> (f64, f64) {
    analytic::dusart_bounds(x)
}

#[pyfunction]
fn smooth_s1(x: f64) -> f64 {
    analytic::smooth_s1(x)
}

#[pyfunction]
fn smooth_s2(x: f64) -> f64 {
    analytic::smooth_s2(x)
}

#[pyfunction]
fn primes_up_to(py: Python<'_>, x: u64) -> PyResult<Vec<u64>> {
    py.detach(|| sieve::primes_up_to(x)).map_err(err)
}

#[pyfunction]
fn prime_count(py: Python<'_>, x: u64) -> PyResult<u64> {
    py.detach(|| sieve::prime_count(x)).map_err(err)
}

#[pyfunction]
fn nth_prime(py: Python<'_>, n: u64) -> PyResult<u64> {
    py.detach(|| sieve::nth_prime(n)).map_err(err)
}

/// `(n, p, g)` for every prime whose successor is at most `limit`.
#[pyfunction]
#[pyo3(signature = (limit, workers=None, segment_size=None))]
fn gap_stream(py: Python<'_>, limit: u64, workers: Option<usize>, segment_size: Option<u64>) -> PyResult<Vec<(u64, u64, u64)>> {
    let gaps = py.detach(|| sieve::gap_stream(&plan(limit, workers, segment_size))).map_err(err)?;
    Ok(gaps.into_iter().map(|g| (g.n, g.p, g.g)).collect())
}

#[pyclass(name = "SelbergSums", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PySelbergSums {
    x: u64,
    s1: f64,
    s2_ordered: f64,
    s2_unordered: f64,
    residual_per_x: f64,
    lemma1_holds: bool,
}

#[pymethods]
impl PySelbergSums {
    fn __repr__(&self) -> String {
        format!(
            "SelbergSums(x={}, s1={}, s2_ordered={}, s2_unordered={})",
            self.x, self.s1, self.s2_ordered, self.s2_unordered
        )
    }
}

/// Prime table with `θ` prefix sums for `S1`, `S2` and `θ` queries up to `limit`.
#[pyclass(name = "Selberg", frozen)]
struct PySelberg(selberg::Selberg);

#[pymethods]
impl PySelberg {
    #[new]
    #[pyo3(signature = (limit, workers=None))]
    fn new(py: Python<'_>, limit: u64, workers: Option<usize>) -> PyResult<Self> {
        py.detach(|| selberg::Selberg::with_plan(&plan(limit, workers, None))).map(Self).map_err(err)
    }

    fn theta(&self, y: u64) -> PyResult<f64> {
        self.0.theta(y).map_err(err)
    }

    fn s1(&self, x: u64) -> PyResult<f64> {
        self.0.s1(x).map_err(err)
    }

    #[pyo3(signature = (x, pairing="ordered"))]
    fn s2(&self, x: u64, pairing: &str) -> PyResult<f64> {
        self.0.s2(x, self::pairing(pairing)?).map_err(err)
    }

    fn sums(&self, x: u64) -> PyResult<PySelbergSums> {
        let s = self.0.sums(x).map_err(err)?;
        Ok(PySelbergSums {
            x: s.x,
            s1: s.s1,
            s2_ordered: s.s2_ordered,
            s2_unordered: s.s2_unordered,
            residual_per_x: s.residual_per_x,
            lemma1_holds: s.lemma1_holds(),
        })
    }

    fn lemma1_check(&self, x: u64) -> PyResult<bool> {
        self.0.lemma1_check(x).map_err(err)
    }

    #[getter]
    fn limit(&self) -> u64 {
        self.0.table().limit()
    }
}

/// `(N0, [(N, gap_sum, logsq_sum, holds), ...])` for `N ≤ n_max`.
#[pyfunction]
fn theorem2_scan(py: Python<'_>, n_max: u64) -> PyResult<(u64, Vec<(u64, u64, f64, bool)>)> {
    let (records, n0) = py.detach(|| selberg::theorem2_scan(n_max)).map_err(err)?;
    Ok((n0, records.into_iter().map(|r| (r.n, r.gap_sum, r.logsq_sum, r.holds)).collect()))
}

#[pyclass(name = "ScanReport", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyScanReport {
    scan: String,
    limit: u64,
    c: f64,
    violations: Vec<u64>,
    max_ratio: f64,
    max_ratio_at: u64,
    thresholds: BTreeMap<String, f64>,
    passed: bool,
}

impl From<fluct::ScanReport> for PyScanReport {
    fn from(r: fluct::ScanReport) -> Self {
        Self {
            scan: r.scan.name().to_string(),
            limit: r.limit,
            c: r.c,
            violations: r.violations,
            max_ratio: r.max_ratio,
            max_ratio_at: r.max_ratio_at,
            thresholds: r.thresholds,
            passed: r.passed,
        }
    }
}

#[pymethods]
impl PyScanReport {
    fn __repr__(&self) -> String {
        format!(
            "ScanReport(scan={:?}, limit={}, violations={}, max_ratio={}, passed={})",
            self.scan,
            self.limit,
            self.violations.len(),
            self.max_ratio,
            if self.passed { "True" } else { "False" }
        )
    }
}

/// Run one scan (`cg`, `b`, `k`, `delta`, `schoenfeld`, `dusart`, `bbound`).
#[pyfunction]
#[pyo3(signature = (which, limit, c=1.0, b=5.0, k_all=1.0/3.0, workers=None, segment_size=None))]
#[allow(clippy::too_many_arguments)]
fn run_scan(
    py: Python<'_>,
    which: &str,
    limit: u64,
    c: f64,
    b: f64,
    k_all: f64,
    workers: Option<usize>,
    segment_size: Option<u64>,
) -> PyResult<PyScanReport> {
    let kind: ScanKind = which.parse().map_err(err)?;
    let k = constants(c, b, k_all)?;
    let p = plan(limit, workers, segment_size);
    py.detach(|| fluct::run_scan(&p, &k, kind)).map(Into::into).map_err(err)
}

/// `[(n, p, b_prime, k_prime, rhs19, rhs24, ok19, ok24), ...]`
#[pyfunction]
#[pyo3(signature = (limit, c=1.0, workers=None))]
#[allow(clippy::type_complexity)]
fn derivative_records(
    py: Python<'_>,
    limit: u64,
    c: f64,
    workers: Option<usize>,
) -> PyResult<Vec<(u64, u64, f64, f64, f64, f64, bool, bool)>> {
    let k = constants(c, 5.0, 1.0 / 3.0)?;
    let recs = py.detach(|| fluct::kprime_records(&plan(limit, workers, None), &k)).map_err(err)?;
    Ok(recs.into_iter().map(|r| (r.n, r.p, r.b_prime, r.k_prime, r.rhs19, r.rhs24, r.ok19, r.ok24)).collect())
}

#[pyclass(name = "FluctuationSample", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyFluctuationSample {
    x: u64,
    pi: u64,
    li: f64,
    f: f64,
    fhat: f64,
    b: f64,
    k: f64,
}

impl From<FluctuationSample> for PyFluctuationSample {
    fn from(s: FluctuationSample) -> Self {
        Self { x: s.x, pi: s.pi, li: s.li, f: s.f, fhat: s.fhat, b: s.b, k: s.k }
    }
}

#[pymethods]
impl PyFluctuationSample {
    fn __repr__(&self) -> String {
        format!("FluctuationSample(x={}, pi={}, f={}, b={}, k={})", self.x, self.pi, self.f, self.b, self.k)
    }
}

/// `π`, `Li`, `f`, `f̂`, `b` and `k` at each of `xs`.
#[pyfunction]
fn fluctuations(py: Python<'_>, xs: Vec<u64>) -> PyResult<Vec<PyFluctuationSample>> {
    let Some(&top) = xs.iter().max() else { return Ok(Vec::new()) };
    let k = Constants::default();
    py.detach(|| {
        let table = PrimeTable::up_to(top.max(2))?;
        xs.iter().map(|&x| fluct::fluctuation_at(&table, x, &k)).collect::<primegap::Result<Vec<_>>>()
    })
    .map(|v| v.into_iter().map(Into::into).collect())
    .map_err(err)
}

#[pyclass(name = "FitResult", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyFitResult {
    #[pyo3(name = "A")]
    a: f64,
    alpha: f64,
    log10_sk1: f64,
    rms_residual: f64,
    bin_count: usize,
    range: (f64, f64),
    alpha_shift_without_last_bin: Option<f64>,
}

impl From<fit::FitResult> for PyFitResult {
    fn from(f: fit::FitResult) -> Self {
        Self {
            a: f.a,
            alpha: f.alpha,
            log10_sk1: f.log10_sk1,
            rms_residual: f.rms_residual,
            bin_count: f.bin_count,
            range: f.range,
            alpha_shift_without_last_bin: f.alpha_shift_without_last_bin,
        }
    }
}

#[pymethods]
impl PyFitResult {
    fn __repr__(&self) -> String {
        format!("FitResult(A={}, alpha={}, log10_sk1={})", self.a, self.alpha, self.log10_sk1)
    }
}

/// Fit `k = -A (alpha - log log log x)` to binned means given as
/// `(log_x, mean_k)` pairs.
#[pyfunction]
fn fit_binned(points: Vec<(f64, f64)>) -> PyResult<PyFitResult> {
    let bins: Vec<fit::BinnedPoint> =
        points.into_iter().map(|(log_x, mean_k)| fit::BinnedPoint { log_x, mean_k, count: 1 }).collect();
    fit::fit_skewes(&bins).map(Into::into).map_err(err)
}

/// Sample `k(x)` up to `limit`, bin it and fit the triple-log model.
#[pyfunction]
#[pyo3(signature = (limit, bins=20, workers=None))]
fn fit_primes(py: Python<'_>, limit: u64, bins: usize, workers: Option<usize>) -> PyResult<PyFitResult> {
    let mut cfg = RunConfig { limit, bins, ..RunConfig::default() };
    if let Some(w) = workers {
        cfg.workers = w;
    }
    py.detach(|| {
        cfg.validate()?;
        if limit < cli::FIT_MIN_LIMIT {
            return Err(Error::Invalid(format!("fit needs limit >= {}", cli::FIT_MIN_LIMIT)));
        }
        let k = cfg.constants();
        let mut scans = fluct::Scans::new(k).with_sampler(cli::default_sampler(k.fhat_cubic));
        primegap::stream::run(&cfg.plan(), &mut scans)?;
        let samples = scans.sampler.map(|s| s.samples).unwrap_or_default();
        fit::fit_skewes(&fit::bin_average_k(&samples, bins)?)
    })
    .map(Into::into)
    .map_err(err)
}

fn run_config(options: BTreeMap<String, String>) -> PyResult<RunConfig> {
    let flags: Vec<(&str, String)> = options.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    RunConfig::resolve(None, Vec::<(String, String)>::new(), &flags).map_err(err)
}

/// The full report as a JSON string. `options` take the same keys as the
/// config file (`limit`, `c`, `B`, `K`, `workers`, ...).
#[pyfunction]
#[pyo3(signature = (**options))]
fn report(py: Python<'_>, options: Option<BTreeMap<String, String>>) -> PyResult<String> {
    let cfg = run_config(options.unwrap_or_default())?;
    let r = py.detach(|| cli::build_report(&cfg)).map_err(err)?;
    serde_json::to_string_pretty(&r).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Run a command as the `primegap` binary would and return its exit code.
/// `command` is `selberg`, `figure1`, `fit`, `report` or `scan:<which>`.
#[pyfunction]
#[pyo3(signature = (command, **options))]
fn run_command(py: Python<'_>, command: &str, options: Option<BTreeMap<String, String>>) -> PyResult<i32> {
    let cfg = run_config(options.unwrap_or_default())?;
    let exit = match command.split_once(':') {
        Some(("scan", which)) => {
            let kind: ScanKind = which.parse().map_err(err)?;
            py.detach(|| cli::cmd_scan(&cfg, kind))
        }
        None => match command {
            "selberg" => py.detach(|| cli::cmd_selberg(&cfg)),
            "figure1" => py.detach(|| cli::cmd_figure1(&cfg)),
            "fit" => py.detach(|| cli::cmd_fit(&cfg)),
            "report" => py.detach(|| cli::cmd_report(&cfg)),
            _ => return Err(PyValueError::new_err(format!("unknown command '{command}'"))),
        },
        _ => return Err(PyValueError::new_err(format!("unknown command '{command}'"))),
    };
    Ok(exit.code())
}

#[pymodule]
#[pyo3(name = "primegap")]
fn primegap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QUOTED_S1_MINUS_S2", selberg::QUOTED_S1_MINUS_S2)?;
    m.add("SCANS", ScanKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>())?;
    m.add_function(wrap_pyfunction!(li, m)?)?;
    m.add_function(wrap_pyfunction!(skewes_log10, m)?)?;
    m.add_function(wrap_pyfunction!(monotonicity_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(condition19_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(condition24_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(dusart_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_s1, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_s2, m)?)?;
    m.add_function(wrap_pyfunction!(primes_up_to, m)?)?;
    m.add_function(wrap_pyfunction!(prime_count, m)?)?;
    m.add_function(wrap_pyfunction!(nth_prime, m)?)?;
    m.add_function(wrap_pyfunction!(gap_stream, m)?)?;
    m.add_function(wrap_pyfunction!(theorem2_scan, m)?)?;
    m.add_function(wrap_pyfunction!(run_scan, m)?)?;
    m.add_function(wrap_pyfunction!(derivative_records, m)?)?;
    m.add_function(wrap_pyfunction!(fluctuations, m)?)?;
    m.add_function(wrap_pyfunction!(fit_binned, m)?)?;
    m.add_function(wrap_pyfunction!(fit_primes, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    m.add_class::<PySelberg>()?;
    m.add_class::<PySelbergSums>()?;
    m.add_class::<PyScanReport>()?;
    m.add_class::<PyFluctuationSample>()?;
    m.add_class::<PyFitResult>()?;
    Ok(())
}
