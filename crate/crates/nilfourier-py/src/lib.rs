//! Python bindings for the `nilfourier` crate.

use nilfourier::coadjoint::{self, Functional};
use nilfourier::fourier::{self, QuadratureSpec, SchwartzFunction};
use nilfourier::lie_basis::left_normed_3_3;
use nilfourier::polarization as pol;
use nilfourier::signatures::{self, PiecewiseLinearPath};
use nilfourier::{build_layered_basis, BasisConvention, Flavor, GroupSpec, LayeredBasis};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyComplex, PyDict};

create_exception!(nilfourier, NilfourierError, PyException);

fn py_err(e: nilfourier::Error) -> PyErr {
    NilfourierError::new_err(format!("{}: {e}", e.kind()))
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for nilfourier::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Graded basis of a free nilpotent (or full tensor) Lie algebra in Malcev order.
#[pyclass(name = "Basis", module = "nilfourier", frozen)]
struct PyBasis {
    inner: LayeredBasis,
}

#[pymethods]
impl PyBasis {
    #[new]
    #[pyo3(signature = (d, level, full_tensor = false, left_normed = false))]
    fn new(d: usize, level: usize, full_tensor: bool, left_normed: bool) -> PyResult<Self> {
        let flavor = if full_tensor { Flavor::FullTensor } else { Flavor::FreeNilpotent };
        let spec = GroupSpec::with_flavor(d, level, flavor).py()?;
        let convention = if left_normed {
            if (d, level, flavor) != (3, 3, Flavor::FreeNilpotent) {
                return Err(NilfourierError::new_err("Input: the left-normed basis exists for d=3, N=3 only"));
            }
            BasisConvention::UserList(left_normed_3_3())
        } else {
            BasisConvention::Lyndon
        };
        Ok(PyBasis { inner: build_layered_basis(spec, convention).py()? })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.spec().d
    }

    #[getter]
    fn level(&self) -> usize {
        self.inner.spec().level
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn layer_dims(&self) -> Vec<usize> {
        self.inner.layer_dims()
    }

    fn labels(&self) -> Vec<String> {
        (0..self.inner.dim()).map(|j| self.inner.label(j)).collect()
    }

    /// `(layer, index)` pairs, top layer first.
    fn malcev_order(&self) -> Vec<(usize, usize)> {
        self.inner.malcev_order()
    }

    /// Lie bracket of two coordinate vectors.
    fn bracket(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        Ok(self.inner.bracket(&x, &y))
    }

    /// Basis coordinates of `log(exp(x) exp(y))`.
    fn bch(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        let a = self.inner.to_algebra(&x).py()?;
        let b = self.inner.to_algebra(&y).py()?;
        self.inner.coords_of(&a.bch(&b).py()?).py()
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn __repr__(&self) -> String {
        format!("Basis({}, dim={})", self.inner.spec(), self.inner.dim())
    }
}

impl PyBasis {
    fn check_len(&self, n: usize) -> PyResult<()> {
        if n != self.inner.dim() {
            return Err(NilfourierError::new_err(format!("DimensionMismatch: expected {} coordinates, got {n}", self.inner.dim())));
        }
        Ok(())
    }

    fn functional(&self, coords: Vec<f64>) -> PyResult<Functional> {
        Functional::new(&self.inner, coords).py()
    }
}

/// Signature levels `0..=level` of a piecewise-linear path.
#[pyfunction]
#[pyo3(signature = (points, level, full_tensor = false))]
fn signature(points: Vec<Vec<f64>>, level: usize, full_tensor: bool) -> PyResult<Vec<Vec<f64>>> {
    let path = PiecewiseLinearPath::new(points).py()?;
    let flavor = if full_tensor { Flavor::FullTensor } else { Flavor::FreeNilpotent };
    let spec = GroupSpec::with_flavor(path.dim(), level, flavor).py()?;
    Ok(signatures::path_signature(&path, spec).py()?.levels())
}

/// `(label, coefficient)` rows of the log-signature, layer 1 first.
#[pyfunction]
fn log_signature(points: Vec<Vec<f64>>, basis: &PyBasis) -> PyResult<Vec<(String, f64)>> {
    let path = PiecewiseLinearPath::new(points).py()?;
    Ok(signatures::log_signature(&path, &basis.inner).py()?.rows())
}

#[pyfunction]
fn is_generic(basis: &PyBasis, coords: Vec<f64>) -> PyResult<bool> {
    coadjoint::is_generic(&basis.inner, &basis.functional(coords)?).py()
}

/// A standard normal functional in general position.
#[pyfunction]
fn sample_generic(basis: &PyBasis, seed: u64) -> PyResult<Vec<f64>> {
    Ok(coadjoint::sample_generic(&basis.inner, seed).py()?.coords().to_vec())
}

/// `Ad*(exp x) ℓ` in basis coordinates.
#[pyfunction]
fn coadjoint_apply(basis: &PyBasis, x: Vec<f64>, coords: Vec<f64>) -> PyResult<Vec<f64>> {
    basis.check_len(x.len())?;
    Ok(coadjoint::coadjoint_apply_coords(&basis.inner, &x, &basis.functional(coords)?))
}

#[pyfunction]
fn full_orbit_dim(basis: &PyBasis, coords: Vec<f64>) -> PyResult<usize> {
    Ok(coadjoint::full_orbit_dim(&basis.inner, &basis.functional(coords)?))
}

#[pyfunction]
fn jump_sets<'py>(py: Python<'py>, basis: &PyBasis) -> PyResult<Bound<'py, PyDict>> {
    let j = coadjoint::jump_sets(&basis.inner);
    let out = PyDict::new(py);
    out.set_item("S", j.s)?;
    out.set_item("T", j.t)?;
    out.set_item("prefix_dims", j.prefix_dims)?;
    out.set_item("derived_from_jumps", j.derived_from_jumps)?;
    Ok(out)
}

/// Polarization of ℓ as a list of spanning vectors, with its checks.
#[pyfunction]
fn polarization<'py>(py: Python<'py>, basis: &PyBasis, coords: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let ell = basis.functional(coords)?;
    let h = pol::polarization_for(&basis.inner, &ell).py()?;
    let report = pol::polarization_check(&basis.inner, &ell, &h);
    let out = PyDict::new(py);
    out.set_item("vectors", (0..h.dim()).map(|c| h.column(c)).collect::<Vec<_>>())?;
    out.set_item("dim", report.dim)?;
    out.set_item("expected_dim", report.expected_dim)?;
    out.set_item("subordinate", report.subordinate)?;
    out.set_item("bracket_closed", report.bracket_closed)?;
    out.set_item("pass", report.pass)?;
    Ok(out)
}

fn quadrature(json: Option<&str>) -> PyResult<QuadratureSpec> {
    let q: QuadratureSpec = match json {
        Some(s) => serde_json::from_str(s).map_err(|e| NilfourierError::new_err(format!("Json: {e}")))?,
        None => QuadratureSpec::default(),
    };
    q.validate().py()?;
    Ok(q)
}

/// Reconstructs a Gaussian at `exp(x)` from its Fourier transform.
#[pyfunction]
#[pyo3(signature = (basis, widths, centre, x, quadrature_json = None))]
fn invert_gaussian<'py>(
    py: Python<'py>,
    basis: &PyBasis,
    widths: Vec<f64>,
    centre: Vec<f64>,
    x: Vec<f64>,
    quadrature_json: Option<&str>,
) -> PyResult<Bound<'py, PyComplex>> {
    let q = quadrature(quadrature_json)?;
    let f = SchwartzFunction::gaussian(widths, centre).py()?;
    let g = basis.inner.to_algebra(&x).py()?.exp_t().py()?;
    let report = py.detach(|| fourier::invert(&basis.inner, &f, &g, &q)).py()?;
    Ok(PyComplex::from_doubles(py, report.value[0], report.value[1]))
}

/// `(‖f‖², c ∫ √det D ‖π_ℓ(f)‖²_HS dℓ)` for a Gaussian.
#[pyfunction]
#[pyo3(signature = (basis, widths, centre, quadrature_json = None))]
fn plancherel_gaussian(
    py: Python<'_>,
    basis: &PyBasis,
    widths: Vec<f64>,
    centre: Vec<f64>,
    quadrature_json: Option<&str>,
) -> PyResult<(f64, f64)> {
    let q = quadrature(quadrature_json)?;
    let f = SchwartzFunction::gaussian(widths, centre).py()?;
    let report = py.detach(|| fourier::plancherel(&basis.inner, &f, &q)).py()?;
    Ok((report.lhs, report.rhs))
}

#[pymodule]
#[pyo3(name = "nilfourier")]
fn nilfourier_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NilfourierError", m.py().get_type::<NilfourierError>())?;
    m.add_class::<PyBasis>()?;
    m.add_function(wrap_pyfunction!(signature, m)?)?;
    m.add_function(wrap_pyfunction!(log_signature, m)?)?;
    m.add_function(wrap_pyfunction!(is_generic, m)?)?;
    m.add_function(wrap_pyfunction!(sample_generic, m)?)?;
    m.add_function(wrap_pyfunction!(coadjoint_apply, m)?)?;
    m.add_function(wrap_pyfunction!(full_orbit_dim, m)?)?;
    m.add_function(wrap_pyfunction!(jump_sets, m)?)?;
    m.add_function(wrap_pyfunction!(polarization, m)?)?;
    m.add_function(wrap_pyfunction!(invert_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(plancherel_gaussian, m)?)?;
    Ok(())
}
