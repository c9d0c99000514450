//! Python bindings. Exact quantities cross the boundary as `"p/q"` strings,
//! which `fractions.Fraction` parses directly.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use cachesim_core::bits::BitBlock;
use cachesim_core::bounds::{self, CurveKind, TradeoffCurve};
use cachesim_core::combinatorics::{fmt_rational, parse_rational, to_f64, Composition, Rational};
use cachesim_core::converse;
use cachesim_core::delivery::{codeword_counts, deliver, DeliveryOptions, DemandVector};
use cachesim_core::erasure::ErasureCode;
use cachesim_core::inactivity::{self, DecodeStatus};
use cachesim_core::placement::{generate_database, man_placement};
use cachesim_core::repro;
use cachesim_core::subset::UserSet;

/// 1-based user and `None` or `(have, need)` blocks.
type UserStatus = (usize, Option<(usize, usize)>);

fn err(e: cachesim_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn frac(r: &Rational) -> String {
    fmt_rational(r)
}

fn rat(text: &str) -> PyResult<Rational> {
    parse_rational(text).map_err(err)
}

fn demand(files: usize, one_based: &[usize]) -> PyResult<DemandVector> {
    DemandVector::from_one_based(one_based, files).map_err(err)
}

/// A placement scenario with integer `t = KM/N`.
#[pyclass(frozen)]
struct Scenario {
    inner: cachesim_core::placement::Scenario,
}

#[pymethods]
impl Scenario {
    #[new]
    #[pyo3(signature = (files, users, memory, file_bits=None))]
    fn new(files: usize, users: usize, memory: &str, file_bits: Option<u64>) -> PyResult<Self> {
        let m = rat(memory)?;
        let f = match file_bits {
            Some(f) => f,
            None => {
                let t = bounds::integer_t(files, users, &m)
                    .ok_or_else(|| PyValueError::new_err("t = KM/N must be an integer"))?;
                cachesim_core::placement::Scenario::min_file_bits(users, t, 1)
            }
        };
        let inner = cachesim_core::placement::Scenario::new(files, users, m, f).map_err(err)?;
        inner.subpiece_bits().map_err(err)?;
        Ok(Scenario { inner })
    }

    #[getter]
    fn files(&self) -> usize {
        self.inner.files()
    }

    #[getter]
    fn users(&self) -> usize {
        self.inner.users()
    }

    #[getter]
    fn memory(&self) -> String {
        frac(self.inner.memory())
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.t()
    }

    #[getter]
    fn file_bits(&self) -> u64 {
        self.inner.file_bits()
    }

    #[getter]
    fn subpiece_bits(&self) -> u64 {
        self.inner.subpiece_bits().unwrap_or(0)
    }

    /// Places, delivers and decodes one demand (1-based file indices).
    #[pyo3(signature = (demand, seed=0))]
    fn simulate(&self, demand: Vec<usize>, seed: u64) -> PyResult<Simulation> {
        let d = crate::demand(self.inner.files(), &demand)?;
        if d.users() != self.inner.users() {
            return Err(PyValueError::new_err(format!(
                "demand has {} entries, K = {}",
                d.users(),
                self.inner.users()
            )));
        }
        let store = generate_database(&self.inner, seed).map_err(err)?;
        let cache = man_placement(&store);
        let report = deliver(&d, &store, &cache, DeliveryOptions::all_active(d.users()));
        let decoded = (0..d.users())
            .map(|k| {
                report.decoded[k]
                    .as_ref()
                    .is_ok_and(|x| x.file == store.file_contents(d.file_of(k)))
            })
            .collect();
        Ok(Simulation {
            load: frac(&report.log.load()),
            formula: frac(&bounds::d2d_per_demand(d.users(), self.inner.t(), &d)),
            codewords: codeword_counts(&report.log),
            decoded,
            one_shot: report.one_shot(),
            wire: report.log.to_bytes(),
        })
    }

    fn __repr__(&self) -> String {
        format!("Scenario({})", self.inner)
    }
}

/// Outcome of `Scenario.simulate`.
#[pyclass(frozen, get_all)]
struct Simulation {
    load: String,
    formula: String,
    codewords: Vec<usize>,
    decoded: Vec<bool>,
    one_shot: bool,
    wire: Vec<u8>,
}

#[pymethods]
impl Simulation {
    fn wire_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.wire)
    }

    fn __repr__(&self) -> String {
        format!(
            "Simulation(load={}, codewords={:?}, decoded={:?})",
            self.load, self.codewords, self.decoded
        )
    }
}

/// Load of the one-shot scheme for a demand (1-based) at integer `t`.
#[pyfunction]
fn d2d_load(files: usize, t: usize, demand: Vec<usize>) -> PyResult<String> {
    let d = crate::demand(files, &demand)?;
    Ok(frac(&bounds::d2d_per_demand(d.users(), t, &d)))
}

/// Corner value of a named curve (`proposed_worst`, `ji_average`, ...) at `t`.
#[pyfunction]
fn curve_corner(kind: &str, files: usize, users: usize, t: usize) -> PyResult<String> {
    let kind: CurveKind = kind.parse().map_err(err)?;
    Ok(frac(&kind.corner(files, users, t)))
}

/// Value of a named curve at memory `M`, memory sharing between corners.
#[pyfunction]
fn curve_value(kind: &str, files: usize, users: usize, memory: &str) -> PyResult<String> {
    let kind: CurveKind = kind.parse().map_err(err)?;
    let curve = TradeoffCurve::new(kind, files, users).map_err(err)?;
    curve
        .value_at(&rat(memory)?)
        .map(|r| frac(&r))
        .ok_or_else(|| PyValueError::new_err("memory outside the curve"))
}

#[pyfunction]
fn curve_kinds() -> Vec<&'static str> {
    CurveKind::ALL.iter().map(|k| k.label()).collect()
}

/// Converse for a demand type given per-file request counts, at `t0`.
#[pyfunction]
fn converse_value(py: Python<'_>, counts: Vec<usize>, t: &str) -> PyResult<Converse> {
    let users = counts.iter().sum();
    let comp = Composition::new(counts, users).map_err(err)?;
    let t0 = rat(t)?;
    let (rep, ledger) = py
        .detach(|| {
            let rep = converse::converse_value(&comp, &t0)?;
            let ledger = converse::TypeLedger::build(&comp)?;
            Ok::<_, cachesim_core::Error>((rep, ledger))
        })
        .map_err(err)?;
    Ok(Converse {
        r: rep.r.iter().map(frac).collect(),
        envelope: frac(&rep.envelope_value),
        lp: frac(&rep.lp_value),
        achievable: rep.achievable.as_ref().map(frac),
        tight: rep.tight(),
        symmetric: ledger.symmetric,
        aggregate_symmetric: ledger.aggregate_symmetric,
    })
}

#[pyclass(frozen, get_all)]
struct Converse {
    r: Vec<String>,
    envelope: String,
    lp: String,
    achievable: Option<String>,
    tight: bool,
    symmetric: bool,
    aggregate_symmetric: bool,
}

#[pymethods]
impl Converse {
    fn __repr__(&self) -> String {
        format!(
            "Converse(envelope={}, achievable={:?}, tight={})",
            self.envelope, self.achievable, self.tight
        )
    }
}

/// MDS-robust scheme tolerating `a` inactive users.
#[pyclass(frozen)]
struct RobustConfig {
    inner: inactivity::RobustConfig,
}

#[pymethods]
impl RobustConfig {
    #[new]
    fn new(files: usize, users: usize, t: usize, a: usize, p: &str) -> PyResult<Self> {
        let inner = inactivity::RobustConfig::new(files, users, t, a, rat(p)?).map_err(err)?;
        Ok(RobustConfig { inner })
    }

    #[getter]
    fn m(&self) -> String {
        self.inner.m().to_string()
    }

    #[getter]
    fn n(&self) -> String {
        self.inner.n().to_string()
    }

    #[getter]
    fn factor(&self) -> String {
        frac(&self.inner.factor())
    }

    #[getter]
    fn memory(&self) -> String {
        frac(&self.inner.memory())
    }

    #[getter]
    fn outage(&self) -> String {
        frac(&self.inner.outage())
    }

    /// Runs the scheme with the given 1-based users inactive. Returns the
    /// load and, per active user, `None` on success or `(have, need)`.
    #[pyo3(signature = (demand, inactive, seed=0))]
    fn simulate(&self, demand: Vec<usize>, inactive: Vec<usize>, seed: u64) -> PyResult<(String, Vec<UserStatus>)> {
        let d = crate::demand(self.inner.files, &demand)?;
        let k = self.inner.users;
        if inactive.iter().any(|&u| u == 0 || u > k) {
            return Err(PyValueError::new_err(format!("inactive users must be in [1, {k}]")));
        }
        let off: UserSet = inactive.iter().map(|u| u - 1).collect();
        let out = inactivity::robust_place_and_deliver(&self.inner, &d, UserSet::full(k).difference(off), seed, None)
            .map_err(err)?;
        let statuses = out
            .statuses
            .iter()
            .map(|(u, s)| match s {
                DecodeStatus::Decoded => Ok((u + 1, None)),
                DecodeStatus::Insufficient { have, need } => Ok((u + 1, Some((*have, *need)))),
                DecodeStatus::Mismatch => Err(PyValueError::new_err("decoded file differs")),
            })
            .collect::<PyResult<_>>()?;
        Ok((frac(&out.load), statuses))
    }
}

/// `P(more than a of K users inactive)` as an exact fraction.
#[pyfunction]
fn outage_probability(users: usize, p: &str, a: usize) -> PyResult<String> {
    Ok(frac(&inactivity::outage_probability_exact(users, &rat(p)?, a)))
}

/// Seeded Monte Carlo estimate: `(estimate, std_error)`.
#[pyfunction]
fn monte_carlo_outage(py: Python<'_>, users: usize, p: f64, a: usize, trials: u64, seed: u64) -> PyResult<(f64, f64)> {
    let mc = py
        .detach(|| inactivity::monte_carlo_outage(users, p, a, trials, seed))
        .map_err(err)?;
    Ok((mc.estimate, mc.std_error))
}

/// Systematic `(m, n)` erasure encoding of `m` equal-length byte blocks.
#[pyfunction]
fn erasure_encode<'py>(
    py: Python<'py>,
    m: usize,
    n: usize,
    blocks: Vec<Vec<u8>>,
) -> PyResult<Vec<Bound<'py, PyBytes>>> {
    let code = ErasureCode::new(m, n).map_err(err)?;
    let msg: Vec<BitBlock> = blocks.iter().map(|b| BitBlock::from_bytes(b, b.len() * 8)).collect();
    let coded = code.encode(&msg).map_err(err)?;
    Ok(coded.iter().map(|b| PyBytes::new(py, b.as_bytes())).collect())
}

/// Recovers the message from any `m` `(index, block)` pairs.
#[pyfunction]
fn erasure_decode<'py>(
    py: Python<'py>,
    m: usize,
    n: usize,
    received: Vec<(usize, Vec<u8>)>,
) -> PyResult<Vec<Bound<'py, PyBytes>>> {
    let code = ErasureCode::new(m, n).map_err(err)?;
    let got: Vec<(usize, BitBlock)> = received
        .iter()
        .map(|(j, b)| (*j, BitBlock::from_bytes(b, b.len() * 8)))
        .collect();
    let msg = code.decode(&got).map_err(err)?;
    Ok(msg.iter().map(|b| PyBytes::new(py, b.as_bytes())).collect())
}

/// Regenerates `"fig2"` or `"fig3"`: `(passed, summary_lines, csv_rows)`.
#[pyfunction]
#[pyo3(signature = (figure, seed=0))]
fn reproduce(py: Python<'_>, figure: &str, seed: u64) -> PyResult<(bool, Vec<String>, Vec<String>)> {
    let report = py
        .detach(|| match figure {
            "fig2" => repro::repro_fig2(),
            "fig3" => repro::repro_fig3(seed),
            other => Err(cachesim_core::Error::Parse(format!("unknown figure {other:?}"))),
        })
        .map_err(err)?;
    Ok((report.pass(), report.summary_lines(), report.point_rows()))
}

/// Float view of a `"p/q"` string, for convenience.
#[pyfunction]
fn to_float(value: &str) -> PyResult<f64> {
    Ok(to_f64(&rat(value)?))
}

#[pymodule]
fn cachesim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Simulation>()?;
    m.add_class::<Converse>()?;
    m.add_class::<RobustConfig>()?;
    m.add_function(wrap_pyfunction!(d2d_load, m)?)?;
    m.add_function(wrap_pyfunction!(curve_corner, m)?)?;
    m.add_function(wrap_pyfunction!(curve_value, m)?)?;
    m.add_function(wrap_pyfunction!(curve_kinds, m)?)?;
    m.add_function(wrap_pyfunction!(converse_value, m)?)?;
    m.add_function(wrap_pyfunction!(outage_probability, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_outage, m)?)?;
    m.add_function(wrap_pyfunction!(erasure_encode, m)?)?;
    m.add_function(wrap_pyfunction!(erasure_decode, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    m.add_function(wrap_pyfunction!(to_float, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
