//! Python bindings: thin wrappers over the core channel, auxiliary, region,
//! and optimizer types. All errors surface as `ValueError` with the Rust
//! error text.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use bcbounds::auxdist::{
    bssc_reference_pair, bssc_reference_triple, load_aux_triple, save_aux_triple,
    split_construction,
};
use bcbounds::channel::{load_channel, save_channel};
use bcbounds::regions::{
    cvdm_rts_constraints, km_oy_constraints, km_oz_constraints, ne_outer_constraints,
    ne_outer_constraints_theorem31_form, RateConstraintSet2,
};
use bcbounds::{
    bssc, AuxTriple, BoundKind, BroadcastChannel, OptimizerConfig, SearchMode,
};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_bound(name: &str) -> PyResult<BoundKind> {
    name.parse::<BoundKind>().map_err(err)
}

fn config(
    seed: u64,
    restarts: usize,
    u_card: Option<usize>,
    v_card: Option<usize>,
    mode: &str,
) -> PyResult<OptimizerConfig> {
    let mode = match mode {
        "auto" => SearchMode::Auto,
        "ascent" => SearchMode::ContinuousAscent,
        "det" => SearchMode::DeterministicEnumeration,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown mode `{other}` (expected auto, ascent, or det)"
            )))
        }
    };
    let cfg = OptimizerConfig {
        seed,
        restarts,
        u_card,
        v_card,
        mode,
        ..OptimizerConfig::default()
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// `(r1_max, r2_max, sum_max_a, sum_max_b)`.
type Caps = (f64, f64, f64, f64);

/// `(corner points, per-angle (lambda, weighted sum), sum rate)`.
type Trace = (Vec<(f64, f64)>, Vec<(f64, f64)>, f64);

fn constraints_tuple(s: &RateConstraintSet2) -> Caps {
    (s.r1_max, s.r2_max, s.sum_max_a, s.sum_max_b)
}

/// A two-receiver discrete memoryless broadcast channel.
#[pyclass(name = "Channel")]
struct PyChannel {
    inner: BroadcastChannel,
}

#[pymethods]
impl PyChannel {
    /// Builds a channel from `w[x][y][z]` transition probabilities.
    #[new]
    fn new(w: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        let nx = w.len();
        let ny = w.first().map_or(0, Vec::len);
        let nz = w.first().and_then(|s| s.first()).map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(nx * ny * nz);
        for slice in &w {
            if slice.len() != ny {
                return Err(PyValueError::new_err("ragged y dimension"));
            }
            for row in slice {
                if row.len() != nz {
                    return Err(PyValueError::new_err("ragged z dimension"));
                }
                flat.extend_from_slice(row);
            }
        }
        Ok(Self {
            inner: BroadcastChannel::new(nx, ny, nz, flat).map_err(err)?,
        })
    }

    /// The binary skew-symmetric channel with parameter `p`.
    #[staticmethod]
    fn bssc(p: f64) -> PyResult<Self> {
        Ok(Self {
            inner: bssc(p).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: load_channel(path.as_ref()).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_channel(&self.inner, path.as_ref()).map_err(err)
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx()
    }

    #[getter]
    fn ny(&self) -> usize {
        self.inner.ny()
    }

    #[getter]
    fn nz(&self) -> usize {
        self.inner.nz()
    }

    fn __repr__(&self) -> String {
        format!(
            "Channel(|X|={}, |Y|={}, |Z|={})",
            self.inner.nx(),
            self.inner.ny(),
            self.inner.nz()
        )
    }
}

/// A joint auxiliary distribution `p(u,v)` with input rows `p(x|u,v)`.
#[pyclass(name = "AuxTriple")]
struct PyAuxTriple {
    inner: AuxTriple,
}

#[pymethods]
impl PyAuxTriple {
    /// Builds a triple from `puv[u][v]` and `rows[u][v][x]`.
    #[new]
    fn new(puv: Vec<Vec<f64>>, rows: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        Ok(Self {
            inner: AuxTriple::from_nested(&puv, &rows).map_err(err)?,
        })
    }

    /// The published maximizing triple for the skew-symmetric channel.
    #[staticmethod]
    fn bssc_reference() -> Self {
        Self {
            inner: bssc_reference_triple(),
        }
    }

    /// The published single-auxiliary pair, lifted to a triple with a
    /// constant second auxiliary.
    #[staticmethod]
    fn bssc_reference_pair() -> Self {
        let pair = bssc_reference_pair();
        let puv: Vec<Vec<f64>> = pair.pu().probs().iter().map(|&m| vec![m]).collect();
        let rows: Vec<Vec<Vec<f64>>> = pair
            .rows()
            .iter()
            .map(|r| vec![r.probs().to_vec()])
            .collect();
        Self {
            inner: AuxTriple::from_nested(&puv, &rows).expect("reference pair lifts"),
        }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: load_aux_triple(path.as_ref()).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_aux_triple(&self.inner, path.as_ref()).map_err(err)
    }

    #[getter]
    fn nu(&self) -> usize {
        self.inner.nu()
    }

    #[getter]
    fn nv(&self) -> usize {
        self.inner.nv()
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx()
    }

    /// True when every input row is a point mass.
    #[getter]
    fn deterministic(&self) -> bool {
        self.inner.deterministic()
    }

    /// Applies the splitting construction, yielding a deterministic triple
    /// with the same pair statistics.
    fn split(&self) -> Self {
        Self {
            inner: split_construction(&self.inner),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "AuxTriple(|U|={}, |V|={}, |X|={}, deterministic={})",
            self.inner.nu(),
            self.inner.nv(),
            self.inner.nx(),
            self.inner.deterministic()
        )
    }
}

/// Evaluates the two-auxiliary outer bound at a fixed triple. Returns
/// `(r1_max, r2_max, sum_max_a, sum_max_b)`.
#[pyfunction]
#[pyo3(signature = (channel, triple, form = "lemma"))]
fn ne_constraints(channel: &PyChannel, triple: &PyAuxTriple, form: &str) -> PyResult<Caps> {
    let s = match form {
        "lemma" => ne_outer_constraints(&triple.inner, &channel.inner).map_err(err)?,
        "theorem31" => {
            ne_outer_constraints_theorem31_form(&triple.inner, &channel.inner).map_err(err)?
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown form `{other}` (expected lemma or theorem31)"
            )))
        }
    };
    Ok(constraints_tuple(&s))
}

/// Evaluates both halves of the intersection bound at the triple's
/// single-auxiliary margins. Returns the z half then the y half.
#[pyfunction]
fn km_constraints(channel: &PyChannel, triple: &PyAuxTriple) -> PyResult<(Caps, Caps)> {
    let oz = km_oz_constraints(&triple.inner.u_pair(), &channel.inner).map_err(err)?;
    let oy = km_oy_constraints(&triple.inner.v_pair(), &channel.inner).map_err(err)?;
    Ok((constraints_tuple(&oz), constraints_tuple(&oy)))
}

/// Evaluates the randomized time-sharing constraints, reading the scheduler
/// from the triple's first auxiliary (which must be binary).
#[pyfunction]
fn cvdm_constraints(channel: &PyChannel, triple: &PyAuxTriple) -> PyResult<Caps> {
    if triple.inner.nu() != 2 {
        return Err(PyValueError::new_err(format!(
            "time-sharing evaluation needs a binary scheduler, |U| = {}",
            triple.inner.nu()
        )));
    }
    let pair = triple.inner.u_pair();
    let s = cvdm_rts_constraints(pair.pu(), pair.rows(), &channel.inner).map_err(err)?;
    Ok(constraints_tuple(&s))
}

/// Maximizes `lam*R1 + (1-lam)*R2` over the bound region. Returns the
/// support value and the maximizing triple.
#[pyfunction]
#[pyo3(signature = (channel, lam, bound = "ne", seed = 0, restarts = 16, u_card = None, v_card = None, mode = "auto"))]
#[allow(clippy::too_many_arguments)]
fn max_weighted_sum(
    channel: &PyChannel,
    lam: f64,
    bound: &str,
    seed: u64,
    restarts: usize,
    u_card: Option<usize>,
    v_card: Option<usize>,
    mode: &str,
) -> PyResult<(f64, PyAuxTriple)> {
    let cfg = config(seed, restarts, u_card, v_card, mode)?;
    let (value, best) =
        bcbounds::max_weighted_sum(&channel.inner, lam, parse_bound(bound)?, &cfg).map_err(err)?;
    Ok((value, PyAuxTriple { inner: best }))
}

/// Exhaustive grid scan over the coarse auxiliary family; a floor for the
/// ascent value at the same weight.
#[pyfunction]
#[pyo3(signature = (channel, lam, bound = "ne", grid_step = 0.125, u_card = None, v_card = None, det = false))]
fn brute_force_oracle(
    channel: &PyChannel,
    lam: f64,
    bound: &str,
    grid_step: f64,
    u_card: Option<usize>,
    v_card: Option<usize>,
    det: bool,
) -> PyResult<f64> {
    let cfg = config(0, 1, u_card, v_card, if det { "det" } else { "auto" })?;
    bcbounds::brute_force_oracle(&channel.inner, lam, parse_bound(bound)?, grid_step, &cfg)
        .map_err(err)
}

/// Traces a bound region. Returns `(vertices, per_angle, sum_rate)` where
/// `vertices` is the boundary polygon and `per_angle` holds
/// `(lambda, support_value)` samples.
#[pyfunction]
#[pyo3(signature = (channel, bound = "ne", angles = 17, seed = 0, restarts = 16, u_card = None, v_card = None, mode = "auto"))]
#[allow(clippy::too_many_arguments)]
fn trace_region(
    channel: &PyChannel,
    bound: &str,
    angles: usize,
    seed: u64,
    restarts: usize,
    u_card: Option<usize>,
    v_card: Option<usize>,
    mode: &str,
) -> PyResult<Trace> {
    let cfg = config(seed, restarts, u_card, v_card, mode)?;
    let tr =
        bcbounds::trace_region(&channel.inner, parse_bound(bound)?, angles, &cfg).map_err(err)?;
    let vertices = tr.polygon.vertices().iter().map(|p| (p.r1, p.r2)).collect();
    let samples = tr.per_angle.iter().map(|a| (a.lambda, a.value)).collect();
    Ok((vertices, samples, tr.sum_rate()))
}

/// Traces all three bounds and checks the containment chain. Returns
/// `(cvdm_sum, ne_sum, km_sum, violation_count)`.
#[pyfunction]
#[pyo3(signature = (channel, angles = 17, seed = 0, restarts = 4, tol = 1e-3))]
fn compare_bounds(
    channel: &PyChannel,
    angles: usize,
    seed: u64,
    restarts: usize,
    tol: f64,
) -> PyResult<(f64, f64, f64, usize)> {
    let cfg = config(seed, restarts, None, None, "auto")?;
    let rep =
        bcbounds::optimize::compare_bounds_with(&channel.inner, &cfg, angles, tol).map_err(err)?;
    Ok((
        rep.cvdm.sum_rate(),
        rep.ne.sum_rate(),
        rep.km.sum_rate(),
        rep.violations.len(),
    ))
}

#[pymodule]
fn bcbounds_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannel>()?;
    m.add_class::<PyAuxTriple>()?;
    m.add_function(wrap_pyfunction!(ne_constraints, m)?)?;
    m.add_function(wrap_pyfunction!(km_constraints, m)?)?;
    m.add_function(wrap_pyfunction!(cvdm_constraints, m)?)?;
    m.add_function(wrap_pyfunction!(max_weighted_sum, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(trace_region, m)?)?;
    m.add_function(wrap_pyfunction!(compare_bounds, m)?)?;
    Ok(())
}
