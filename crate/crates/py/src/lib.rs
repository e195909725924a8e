//! Python bindings: charts, zonal flows, Misiolek-curvature evaluation and
//! positivity certificates. Reports cross the boundary as JSON strings so
//! Python callers can inspect every residual.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use zonalmc_core::error::Error as CoreError;
use zonalmc_core::manifolds::{make_ellipsoid_2d, make_ellipsoid_3d, Ellipsoid2D, Ellipsoid3D};
use zonalmc_core::mc;
use zonalmc_core::ops;
use zonalmc_core::perturb::{
    build_bump_with_shape, certify_positive, BumpProfile, BumpShape, CertifyOptions,
};
use zonalmc_core::profiles::ProfileSpec;
use zonalmc_core::quad::QuadratureRule;
use zonalmc_core::rng::Rng;
use zonalmc_core::zonal::{
    check_zonal, classify_3d, sample_points, zonal_flow_2d, zonal_flow_3d, Tolerances, ZonalFlow,
};

fn core_err(e: CoreError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn profile_from(family: &str, center: f64, radius: f64, amplitude: f64) -> PyResult<ProfileSpec> {
    match family {
        "bump" => Ok(ProfileSpec::Bump {
            center,
            radius,
            amplitude,
        }),
        "raised-cosine" => Ok(ProfileSpec::RaisedCosine {
            center,
            radius,
            amplitude,
        }),
        other => Err(PyValueError::new_err(format!(
            "unknown profile family `{other}` (bump|raised-cosine)"
        ))),
    }
}

/// 3D ellipsoid of revolution in Hopf-type coordinates (ξ, μ, χ).
#[pyclass(name = "Ellipsoid3")]
struct PyEllipsoid3 {
    e3: Ellipsoid3D,
}

#[pymethods]
impl PyEllipsoid3 {
    #[new]
    fn new(a: f64) -> PyResult<Self> {
        Ok(PyEllipsoid3 {
            e3: make_ellipsoid_3d(a).map_err(core_err)?,
        })
    }

    #[getter]
    fn a(&self) -> f64 {
        self.e3.a
    }

    /// Volume density √det g at (ξ, μ, χ).
    fn sqrt_det_g(&self, xi: f64, mu: f64, chi: f64) -> PyResult<f64> {
        self.e3.chart().sqrt_det_g([xi, mu, chi]).map_err(core_err)
    }

    /// Christoffel symbols Γ[k][i][j] at (ξ, μ, χ) from the generic engine.
    fn christoffel(&self, xi: f64, mu: f64, chi: f64) -> PyResult<Vec<Vec<Vec<f64>>>> {
        let g = self
            .e3
            .chart()
            .christoffel([xi, mu, chi])
            .map_err(core_err)?;
        Ok(g.iter()
            .map(|m| m.iter().map(|r| r.to_vec()).collect())
            .collect())
    }

    /// Max Killing defect of p∂_ξ + q∂_μ over a seeded random sample.
    #[pyo3(signature = (p, q, seed=42))]
    fn killing_residual(&self, p: f64, q: f64, seed: u64) -> PyResult<f64> {
        let pts = sample_points(self.e3.chart(), &mut Rng::new(seed), 100, 1e-3);
        ops::killing_residual(&self.e3.killing_pq(p, q), &pts).map_err(core_err)
    }

    /// Collar-trimmed volume under the default tensor-product rule.
    #[pyo3(signature = (periodic=16, bounded=96, collar=1e-3))]
    fn volume(&self, periodic: usize, bounded: usize, collar: f64) -> PyResult<f64> {
        QuadratureRule::for_chart(self.e3.chart(), [periodic, periodic, bounded], collar)
            .and_then(|r| r.volume())
            .map_err(core_err)
    }
}

/// 2D ellipsoid of revolution in arclength coordinates (r, θ).
#[pyclass(name = "Ellipsoid2")]
struct PyEllipsoid2 {
    e2: Ellipsoid2D,
}

#[pymethods]
impl PyEllipsoid2 {
    #[new]
    #[pyo3(signature = (a, profile_resolution=256))]
    fn new(a: f64, profile_resolution: usize) -> PyResult<Self> {
        Ok(PyEllipsoid2 {
            e2: make_ellipsoid_2d(a, profile_resolution).map_err(core_err)?,
        })
    }

    #[getter]
    fn a(&self) -> f64 {
        self.e2.a
    }

    /// Half-length of the arclength interval (quarter-ellipse arc length).
    #[getter]
    fn d(&self) -> f64 {
        self.e2.d
    }

    /// Generating-curve radius c₁(r).
    fn c1(&self, r: f64) -> f64 {
        self.e2.c1(r).d[0]
    }

    fn christoffel(&self, r: f64, theta: f64) -> PyResult<Vec<Vec<Vec<f64>>>> {
        let g = self.e2.chart().christoffel([r, theta]).map_err(core_err)?;
        Ok(g.iter()
            .map(|m| m.iter().map(|row| row.to_vec()).collect())
            .collect())
    }

    #[pyo3(signature = (periodic=32, bounded=96, collar=1e-3))]
    fn volume(&self, periodic: usize, bounded: usize, collar: f64) -> PyResult<f64> {
        QuadratureRule::for_chart(self.e2.chart(), [bounded, periodic], collar)
            .and_then(|r| r.volume())
            .map_err(core_err)
    }

    /// Classification report (JSON) for the zonal flow f(r) ∂_θ.
    #[pyo3(signature = (family, center, radius, amplitude=1.0, seed=42))]
    fn classify_flow(
        &self,
        family: &str,
        center: f64,
        radius: f64,
        amplitude: f64,
        seed: u64,
    ) -> PyResult<String> {
        let profile = profile_from(family, center, radius, amplitude)?;
        let flow = zonal_flow_2d(&self.e2, &profile, Tolerances::default()).map_err(core_err)?;
        let pts = sample_points(self.e2.chart(), &mut Rng::new(seed), 150, 1e-3);
        let report = check_zonal(&flow, &pts).map_err(core_err)?;
        serde_json::to_string(&report).map_err(json_err)
    }
}

/// A zonal flow f(χ)(p ∂_ξ + q ∂_μ) on the 3D ellipsoid.
#[pyclass(name = "ZonalFlow3")]
struct PyZonalFlow3 {
    e3: Ellipsoid3D,
    flow: ZonalFlow<3>,
}

#[pymethods]
impl PyZonalFlow3 {
    #[new]
    #[pyo3(signature = (a, p, q, family="bump", center=0.65, radius=0.30, amplitude=1.0))]
    fn new(
        a: f64,
        p: i64,
        q: i64,
        family: &str,
        center: f64,
        radius: f64,
        amplitude: f64,
    ) -> PyResult<Self> {
        let e3 = make_ellipsoid_3d(a).map_err(core_err)?;
        let profile = profile_from(family, center, radius, amplitude)?;
        let flow = zonal_flow_3d(&e3, p, q, &profile, Tolerances::default()).map_err(core_err)?;
        Ok(PyZonalFlow3 { e3, flow })
    }

    /// Classification report (JSON): zonality residuals, geodesic/S¹/positive.
    #[pyo3(signature = (seed=42))]
    fn classify(&self, seed: u64) -> PyResult<String> {
        let pts = sample_points(self.e3.chart(), &mut Rng::new(seed), 150, 1e-3);
        let report = classify_3d(&self.e3, &self.flow, &pts).map_err(core_err)?;
        serde_json::to_string(&report).map_err(json_err)
    }

    /// Collinearity factor F at χ (0 outside U₀).
    fn f_factor(&self, chi: f64) -> PyResult<f64> {
        self.flow.f_factor_at([0.0, 0.0, chi]).map_err(core_err)
    }

    /// sgn(Z) at χ.
    fn sgn(&self, chi: f64) -> PyResult<i8> {
        self.flow.sgn_at([0.0, 0.0, chi]).map_err(core_err)
    }

    /// U⁺ as a list of χ-intervals.
    fn u_plus(&self) -> PyResult<Vec<(f64, f64)>> {
        self.flow.u_plus_intervals(2001).map_err(core_err)
    }

    /// McReport (JSON) for a constructed ring/disk bump perturbation.
    #[pyo3(signature = (t0=0.0, chi0=0.5, radius=0.12, amplitude=1.0, shape="ring",
                        ring_order=6, periodic=32, bounded=96, collar=1e-3))]
    #[allow(clippy::too_many_arguments)]
    fn mc_bump(
        &self,
        t0: f64,
        chi0: f64,
        radius: f64,
        amplitude: f64,
        shape: &str,
        ring_order: u32,
        periodic: usize,
        bounded: usize,
        collar: f64,
    ) -> PyResult<String> {
        let shape = match shape {
            "ring" => BumpShape::Ring { order: ring_order },
            "disk" => BumpShape::Disk,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown shape `{other}` (ring|disk)"
                )))
            }
        };
        let bump = BumpProfile {
            t0,
            chi0,
            radius,
            amplitude,
        };
        let pf =
            build_bump_with_shape(&self.e3, &self.flow, &bump, shape, collar).map_err(core_err)?;
        let rule =
            QuadratureRule::for_chart(self.e3.chart(), [periodic, periodic, bounded], collar)
                .map_err(core_err)?;
        let report = mc::mc_report(&self.flow, &pf.field, &rule).map_err(core_err)?;
        serde_json::to_string(&report).map_err(json_err)
    }

    /// Run the positivity search; returns the Certificate as JSON.
    #[pyo3(signature = (budget=200, periodic=32, bounded=96, collar=1e-3))]
    fn certify(
        &self,
        budget: usize,
        periodic: usize,
        bounded: usize,
        collar: f64,
    ) -> PyResult<String> {
        let rule =
            QuadratureRule::for_chart(self.e3.chart(), [periodic, periodic, bounded], collar)
                .map_err(core_err)?;
        let opts = CertifyOptions {
            budget,
            ..CertifyOptions::default()
        };
        let cert = certify_positive(&self.e3, &self.flow, &rule, &opts).map_err(core_err)?;
        serde_json::to_string(&cert).map_err(json_err)
    }
}

#[pymodule]
fn zonalmc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyEllipsoid2>()?;
    m.add_class::<PyEllipsoid3>()?;
    m.add_class::<PyZonalFlow3>()?;
    Ok(())
}
