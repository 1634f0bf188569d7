//! Python module `maxface`: configurations, presets, balance, singularity
//! prediction, finite-t surfaces, defects and meshes.
//!
//! Structured results are returned as plain dicts and lists.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;

use maxface_core::balance::{newton_balance, rigidity, topology, GaugeFixing};
use maxface_core::config::{
    all_forces, force, force_via_residue, max_force, neck_sizes, r_function, Configuration, NeckId,
};
use maxface_core::exact;
use maxface_core::format::to_json;
use maxface_core::preset;
use maxface_core::singularity::predict;
use maxface_core::surface::{
    all_cycles, build_mesh, defect_report, divisor_defect, initial_params, refine_params, solve_divisor, write_obj,
    write_ply, MeshE31, MeshOptions, Surface as CoreSurface, SurfaceAtlas,
};
use maxface_core::{MaxfaceError, C64};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: MaxfaceError) -> PyErr {
    match e {
        MaxfaceError::InvalidConfiguration(_)
        | MaxfaceError::NonZeroGrowthSum { .. }
        | MaxfaceError::NotAPole { .. }
        | MaxfaceError::NotBalanced { .. }
        | MaxfaceError::DisksOverlap(_)
        | MaxfaceError::OutsideAnnulus { .. }
        | MaxfaceError::InvalidInput(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Round-trips through JSON so that nested results become dicts and lists.
fn to_py<'py, T: Serialize + ?Sized>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn neck(config: &Configuration, level: usize, index: usize) -> PyResult<NeckId> {
    let id = NeckId::new(level, index);
    config.check_neck(id).map_err(err)?;
    Ok(id)
}

#[pyclass(name = "Configuration", module = "maxface", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConfiguration {
    inner: Configuration,
}

#[pymethods]
impl PyConfiguration {
    /// `necks[l]` lists the complex positions of the necks above plane `l + 1`.
    #[new]
    fn new(necks: Vec<Vec<C64>>, growth: Vec<f64>) -> PyResult<Self> {
        let levels = necks.len() + 1;
        Ok(PyConfiguration { inner: Configuration::new(levels, necks, growth).map_err(err)? })
    }

    #[staticmethod]
    fn from_sizes(necks: Vec<Vec<C64>>, sizes: Vec<f64>) -> PyResult<Self> {
        Ok(PyConfiguration { inner: Configuration::from_sizes(necks, &sizes).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyConfiguration { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn levels(&self) -> usize {
        self.inner.levels()
    }

    #[getter]
    fn necks(&self) -> Vec<Vec<C64>> {
        self.inner.all_positions().to_vec()
    }

    #[getter]
    fn growth(&self) -> Vec<f64> {
        self.inner.growth().to_vec()
    }

    fn neck_ids(&self) -> Vec<(usize, usize)> {
        self.inner.neck_ids().into_iter().map(|n| (n.level, n.index)).collect()
    }

    fn neck_sizes(&self) -> PyResult<Vec<f64>> {
        Ok(neck_sizes(&self.inner).map_err(err)?.c)
    }

    /// Forces in `neck_ids()` order.
    fn forces(&self) -> PyResult<Vec<C64>> {
        Ok(all_forces(&self.inner, &neck_sizes(&self.inner).map_err(err)?))
    }

    /// `(direct sum, residue form)` at one neck.
    fn force(&self, level: usize, index: usize) -> PyResult<(C64, C64)> {
        let id = neck(&self.inner, level, index)?;
        let sizes = neck_sizes(&self.inner).map_err(err)?;
        Ok((force(&self.inner, &sizes, id), force_via_residue(&self.inner, &sizes, id)))
    }

    fn max_force(&self) -> PyResult<f64> {
        Ok(max_force(&self.inner, &neck_sizes(&self.inner).map_err(err)?))
    }

    /// Newton balancing with the default pins; returns `(config, iterations, residual)`.
    #[pyo3(signature = (max_iter = 50, tol = 1e-12))]
    fn balance(&self, max_iter: usize, tol: f64) -> PyResult<(PyConfiguration, usize, f64)> {
        let gauge = GaugeFixing::default_for(&self.inner);
        let out = newton_balance(&self.inner, &gauge, max_iter, tol).map_err(err)?;
        Ok((PyConfiguration { inner: out.config }, out.iterations, out.residual))
    }

    fn rigidity<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let rep = rigidity(&self.inner, &neck_sizes(&self.inner).map_err(err)?);
        to_py(py, &rep)
    }

    fn topology<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &topology(&self.inner))
    }

    /// Singularity predictions for every neck.
    fn predict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let sizes = neck_sizes(&self.inner).map_err(err)?;
        let out: Vec<_> = self.inner.neck_ids().into_iter().map(|n| predict(&self.inner, &sizes, n)).collect();
        to_py(py, &out)
    }

    /// Coefficients `{frequency: amplitude}` of `R^{(r)}` at a neck.
    fn r_function(&self, level: usize, index: usize, r: usize) -> PyResult<BTreeMap<u32, C64>> {
        let id = neck(&self.inner, level, index)?;
        let sizes = neck_sizes(&self.inner).map_err(err)?;
        Ok(r_function(&self.inner, &sizes, id, r).coefficients)
    }

    fn __repr__(&self) -> String {
        format!("Configuration(L={}, necks={:?}, Q={:?})", self.inner.levels(), self.inner.neck_counts(), self.inner.growth())
    }
}

#[pyfunction]
fn catenoid() -> PyConfiguration {
    PyConfiguration { inner: preset::catenoid() }
}

#[pyfunction]
fn chm(m: usize) -> PyResult<PyConfiguration> {
    Ok(PyConfiguration { inner: preset::chm(m).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (levels, m, sizes = None))]
fn dihedral(levels: usize, m: usize, sizes: Option<Vec<f64>>) -> PyResult<PyConfiguration> {
    let sizes = sizes.unwrap_or_else(|| preset::dihedral_default_sizes(levels));
    Ok(PyConfiguration { inner: preset::dihedral(levels, m, &sizes).map_err(err)?.config })
}

/// Exact value as `(numerator, denominator)` strings.
#[pyfunction]
fn identity1(m: i64, n: i64, l: i64) -> (String, String) {
    let v = exact::identity1(m, n, l);
    (v.numer().to_string(), v.denom().to_string())
}

#[pyfunction]
fn identity2(m: i64) -> (String, String) {
    let v = exact::identity2(m);
    (v.numer().to_string(), v.denom().to_string())
}

#[pyclass(name = "Mesh", module = "maxface", frozen)]
struct PyMesh {
    inner: MeshE31,
}

#[pymethods]
impl PyMesh {
    #[getter]
    fn vertices(&self) -> Vec<[f64; 3]> {
        self.inner.vertices.clone()
    }

    #[getter]
    fn faces(&self) -> Vec<[usize; 3]> {
        self.inner.faces.clone()
    }

    /// 0 regular, 1 singular curve, 2 swallowtail.
    #[getter]
    fn flags(&self) -> Vec<i32> {
        self.inner.vertex_flags.iter().map(|f| f.code()).collect()
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.stats)
    }

    fn swallowtail_count(&self, level: usize, index: usize) -> usize {
        self.inner.swallowtail_count(NeckId::new(level, index))
    }

    fn write_obj(&self, path: &str) -> PyResult<()> {
        let f = File::create(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        write_obj(&self.inner, None, BufWriter::new(f)).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn write_ply(&self, path: &str) -> PyResult<()> {
        let f = File::create(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        write_ply(&self.inner, None, BufWriter::new(f)).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.vertices.len()
    }
}

#[pyclass(name = "Surface", module = "maxface", frozen)]
struct PySurface {
    config: Configuration,
    surface: CoreSurface,
    atlas: SurfaceAtlas,
}

#[pymethods]
impl PySurface {
    /// Opened surface at neck parameter `t`. The divisor is projected unless
    /// `divisor=False`; `refine` runs that many damped Newton steps.
    #[new]
    #[pyo3(signature = (config, t, refine = 0, divisor = true))]
    fn new(config: &PyConfiguration, t: f64, refine: usize, divisor: bool) -> PyResult<Self> {
        let cfg = config.inner.clone();
        let sizes = neck_sizes(&cfg).map_err(err)?;
        let mut params = initial_params(&cfg, &sizes, t, None).map_err(err)?;
        if divisor {
            params = solve_divisor(&params, 60).map_err(err)?;
        }
        if refine > 0 {
            params = refine_params(&params, &all_cycles(&params), refine).map_err(err)?.params;
        }
        let surface = CoreSurface::new(params).map_err(err)?;
        let atlas = SurfaceAtlas::new(&surface).map_err(err)?;
        Ok(PySurface { config: cfg, surface, atlas })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.surface.t()
    }

    #[getter]
    fn chart_radius(&self) -> f64 {
        self.surface.chart_radius()
    }

    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, self.surface.params())
    }

    /// Governing function on the waist of a neck at angle `theta`.
    fn governing_a(&self, level: usize, index: usize, theta: f64) -> PyResult<C64> {
        let id = neck(&self.config, level, index)?;
        self.surface.governing_a(id, theta).map_err(err)
    }

    fn gauss_map(&self, level: usize, z: C64) -> PyResult<C64> {
        self.surface.gauss_map(level, z).map_err(err)
    }

    fn defects<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &defect_report(&self.surface, &self.atlas).map_err(err)?)
    }

    fn divisor_defect(&self) -> PyResult<Vec<Option<f64>>> {
        Ok(divisor_defect(&self.surface).map_err(err)?.per_level)
    }

    /// Mesh with swallowtail markers at the predicted angles.
    #[pyo3(signature = (resolution = 64, outer_radius = None))]
    fn mesh(&self, resolution: usize, outer_radius: Option<f64>) -> PyResult<PyMesh> {
        let sizes = neck_sizes(&self.config).map_err(err)?;
        let markers = self.config.neck_ids().into_iter().map(|n| (n, predict(&self.config, &sizes, n).angles)).collect();
        let options = MeshOptions { resolution, outer_radius, markers, ..MeshOptions::default() };
        Ok(PyMesh { inner: build_mesh(&self.surface, &self.atlas, &options).map_err(err)? })
    }
}

#[pymodule]
fn maxface(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfiguration>()?;
    m.add_class::<PySurface>()?;
    m.add_class::<PyMesh>()?;
    m.add_function(wrap_pyfunction!(catenoid, m)?)?;
    m.add_function(wrap_pyfunction!(chm, m)?)?;
    m.add_function(wrap_pyfunction!(dihedral, m)?)?;
    m.add_function(wrap_pyfunction!(identity1, m)?)?;
    m.add_function(wrap_pyfunction!(identity2, m)?)?;
    Ok(())
}
