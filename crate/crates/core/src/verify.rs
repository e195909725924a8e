//! Invariant suite behind the `verify` command: metric sanity, closed-form
//! vs generic Christoffel symbols, jet-vs-finite-difference cross-checks,
//! Killing identities, connection axioms, and volume convergence.

use crate::chart::Chart;
use crate::error::Result;
use crate::fd;
use crate::field::{ScalarField, VectorField};
use crate::jet::Jet;
use crate::manifolds::{Ellipsoid2D, Ellipsoid3D};
use crate::ops;
use crate::quad::QuadratureRule;
use crate::rng::Rng;
use crate::zonal::sample_points;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub manifold: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn new() -> Self {
        Suite { checks: Vec::new() }
    }

    fn push(&mut self, name: &str, residual: f64, threshold: f64) {
        self.checks.push(CheckResult {
            name: name.into(),
            residual,
            threshold,
            pass: residual.is_finite() && residual <= threshold,
        });
    }

    fn finish(self, manifold: &str, seed: u64) -> VerifyReport {
        let passed = self.checks.iter().all(|c| c.pass);
        VerifyReport {
            schema_version: 1,
            manifold: manifold.into(),
            seed,
            checks: self.checks,
            passed,
        }
    }
}

/// Smooth scalar test battery over chart coordinates.
fn test_scalar<const D: usize>(chart: &Chart<D>, k: usize) -> ScalarField<D> {
    ScalarField::from_jet_fn(chart, &format!("test-h{k}"), move |p| {
        let mut acc = Jet::constant(0.3 + 0.1 * k as f64);
        for (i, x) in p.iter().enumerate() {
            let a = 0.4 + 0.23 * ((i + k) % 3) as f64;
            acc = acc + (*x * a).sin() * (0.7 + 0.2 * i as f64) + (*x * (0.5 + a)).cos() * 0.3;
        }
        acc * (p[0] * 0.2).cos()
    })
}

fn test_vector<const D: usize>(chart: &Chart<D>, k: usize) -> VectorField<D> {
    VectorField::from_jet_fn(chart, &format!("test-v{k}"), move |p| {
        std::array::from_fn(|c| {
            let a = 0.3 + 0.17 * ((c + k) % 4) as f64;
            let mut acc = Jet::constant(0.1 * (c + 1) as f64);
            for x in p.iter() {
                acc = acc + (*x * a + 0.2 * c as f64).sin() * 0.5;
            }
            acc
        })
    })
}

/// Metric sanity: symmetry, positive definiteness (leading minors), and
/// periodic-endpoint agreement.
fn metric_checks<const D: usize>(
    suite: &mut Suite,
    chart: &Chart<D>,
    pts: &[[f64; D]],
) -> Result<()> {
    let mut sym = 0.0_f64;
    let mut min_minor = f64::INFINITY;
    for &p in pts {
        let gj = chart.metric_components(p)?;
        let g: [[f64; D]; D] = std::array::from_fn(|i| std::array::from_fn(|j| gj[i][j].v));
        for i in 0..D {
            for j in 0..D {
                sym = sym.max((g[i][j] - g[j][i]).abs());
            }
        }
        // leading principal minors
        let m1 = g[0][0];
        min_minor = min_minor.min(m1);
        if D >= 2 {
            let m2 = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            min_minor = min_minor.min(m2);
        }
        if D >= 3 {
            let det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
                - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
                + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
            min_minor = min_minor.min(det);
        }
    }
    suite.push("metric: symmetry", sym, 1e-12);
    suite.push(
        "metric: positive definiteness (min leading minor > 0)",
        if min_minor > 0.0 {
            0.0
        } else {
            min_minor.abs() + 1.0
        },
        0.0,
    );

    // periodic axes: components agree at identified endpoints
    let mut periodic_res = 0.0_f64;
    for (axis, spec) in chart.coords().iter().enumerate() {
        if !spec.periodic {
            continue;
        }
        let mut p_lo = pts[0];
        let mut p_hi = pts[0];
        p_lo[axis] = spec.lo + 1e-9;
        p_hi[axis] = spec.hi - 1e-9;
        let g_lo = chart.metric_components(p_lo)?;
        let g_hi = chart.metric_components(p_hi)?;
        for i in 0..D {
            for j in 0..D {
                periodic_res = periodic_res.max((g_lo[i][j].v - g_hi[i][j].v).abs());
            }
        }
    }
    suite.push("metric: periodic endpoint agreement", periodic_res, 1e-8);
    Ok(())
}

/// Closed-form vs generic Christoffel symbols over a trimmed grid
/// (n points per axis).
fn christoffel_check<const D: usize>(
    suite: &mut Suite,
    chart: &Chart<D>,
    n: usize,
    collar: f64,
) -> Result<()> {
    if chart.closed_christoffel([0.0; D].map(|_| 0.5)).is_none() {
        return Ok(());
    }
    let mut worst = 0.0_f64;
    let mut idx = vec![0usize; D];
    loop {
        let mut p = [0.0; D];
        for i in 0..D {
            let spec = &chart.coords()[i];
            let margin = if spec.periodic { 0.0 } else { collar.max(1e-3) };
            let (lo, hi) = (spec.lo + margin, spec.hi - margin);
            p[i] = lo + (hi - lo) * (idx[i] as f64 + 0.5) / n as f64;
        }
        let generic = chart.christoffel(p)?;
        let closed = chart.closed_christoffel(p).unwrap();
        for k in 0..D {
            for i in 0..D {
                for j in 0..D {
                    worst = worst.max((generic[k][i][j] - closed[k][i][j]).abs());
                }
            }
        }
        let mut axis = D;
        loop {
            if axis == 0 {
                suite.push("christoffel: closed form vs generic engine", worst, 1e-8);
                return Ok(());
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < n {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Forward jets vs central finite differences on smooth test fields.
fn jet_vs_fd_check<const D: usize>(
    suite: &mut Suite,
    chart: &Chart<D>,
    pts: &[[f64; D]],
) -> Result<()> {
    let mut worst = 0.0_f64;
    for k in 0..3 {
        let h = test_scalar(chart, k);
        let hv = h.clone();
        let plain = move |x: [f64; D]| hv.value(x).unwrap();
        for &p in pts.iter().take(20) {
            let jet = h.jet(p, 2)?;
            let (grad, hess) = fd::grad_hess_fd(&plain, p, 1e-5);
            for i in 0..D {
                let scale = 1.0 + grad[i].abs();
                worst = worst.max((jet.d[i] - grad[i]).abs() / scale);
                for j in 0..D {
                    let scale = 100.0 * (1.0 + hess[i][j].abs());
                    worst = worst.max((jet.h[i][j] - hess[i][j]).abs() / scale);
                }
            }
        }
    }
    suite.push("jets: forward-mode vs central differences", worst, 1e-6);
    Ok(())
}

/// g(grad h, V) = V(h) on random (h, V, point) triples.
fn grad_pairing_check<const D: usize>(
    suite: &mut Suite,
    chart: &Chart<D>,
    pts: &[[f64; D]],
) -> Result<()> {
    let mut worst = 0.0_f64;
    let mut count = 0;
    'outer: for k in 0..5 {
        let h = test_scalar(chart, k);
        let v = test_vector(chart, k + 1);
        let gh = ops::grad(&h)?;
        let lhs = ops::inner(&gh, &v)?;
        let rhs = ops::directional(&v, &h)?;
        for &p in pts {
            let a = lhs.value(p)?;
            let b = rhs.value(p)?;
            worst = worst.max((a - b).abs() / (1.0 + a.abs().max(b.abs())));
            count += 1;
            if count >= 100 {
                break 'outer;
            }
        }
    }
    suite.push(
        "grad: g(grad h, V) = V(h) on 100 random triples",
        worst,
        1e-9,
    );
    Ok(())
}

/// Killing identities for a basis: the defining residual, the derived
/// identities 2∇_X X + grad‖X‖² = 0 and X(‖X‖²) = 0, and div X = 0.
fn killing_checks<const D: usize>(
    suite: &mut Suite,
    label: &str,
    x: &VectorField<D>,
    pts: &[[f64; D]],
) -> Result<()> {
    let chart = x.chart().clone();
    let res = ops::killing_residual(x, pts)?;
    suite.push(&format!("killing[{label}]: defining residual"), res, 1e-8);

    let norm_sq = ops::norm_sq(x)?;
    let grad_n = ops::grad(&norm_sq)?;
    let nxx = ops::covariant_derivative(x, x)?;
    let xn = ops::directional(x, &norm_sq)?;
    let div_x = ops::divergence(x)?;
    let mut grad_identity = 0.0_f64;
    let mut self_derivative = 0.0_f64;
    let mut div_res = 0.0_f64;
    for &p in pts {
        let a = nxx.jet(p, 0)?.c;
        let b = grad_n.jet(p, 0)?.c;
        let mj = chart.metric_jet(p)?;
        let mut s = 0.0;
        for i in 0..D {
            for j in 0..D {
                s += mj.g[i][j].v * (2.0 * a[i] + b[i]) * (2.0 * a[j] + b[j]);
            }
        }
        grad_identity = grad_identity.max(s.max(0.0).sqrt());
        self_derivative = self_derivative.max(xn.value(p)?.abs());
        div_res = div_res.max(div_x.value(p)?.abs());
    }
    suite.push(
        &format!("killing[{label}]: 2∇_XX + grad‖X‖²"),
        grad_identity,
        1e-8,
    );
    suite.push(
        &format!("killing[{label}]: X(‖X‖²)"),
        self_derivative,
        1e-10,
    );
    suite.push(&format!("killing[{label}]: div X"), div_res, 1e-10);
    Ok(())
}

/// Torsion-freeness, metric compatibility, bracket antisymmetry and the
/// Jacobi identity on smooth test fields.
fn connection_checks<const D: usize>(
    suite: &mut Suite,
    chart: &Chart<D>,
    pts: &[[f64; D]],
) -> Result<()> {
    let v = test_vector(chart, 0);
    let w = test_vector(chart, 1);
    let u = test_vector(chart, 2);
    let nvw = ops::covariant_derivative(&v, &w)?;
    let nwv = ops::covariant_derivative(&w, &v)?;
    let bvw = ops::lie_bracket(&v, &w)?;
    let mut torsion = 0.0_f64;
    for &p in pts.iter().take(40) {
        let a = nvw.jet(p, 0)?.c;
        let b = nwv.jet(p, 0)?.c;
        let c = bvw.jet(p, 0)?.c;
        for k in 0..D {
            torsion = torsion.max((a[k] - b[k] - c[k]).abs());
        }
    }
    suite.push(
        "connection: torsion-free ∇_VW − ∇_WV = [V,W]",
        torsion,
        1e-8,
    );

    // metric compatibility V(g(W,U)) = g(∇_VW, U) + g(W, ∇_VU)
    let gwu = ops::inner(&w, &u)?;
    let lhs = ops::directional(&v, &gwu)?;
    let nvu = ops::covariant_derivative(&v, &u)?;
    let t1 = ops::inner(&nvw, &u)?;
    let t2 = ops::inner(&w, &nvu)?;
    let mut compat = 0.0_f64;
    for &p in pts.iter().take(40) {
        let r = lhs.value(p)? - t1.value(p)? - t2.value(p)?;
        compat = compat.max(r.abs());
    }
    suite.push("connection: metric compatibility", compat, 1e-8);

    // [V,W] + [W,V] = 0 and the Jacobi identity
    let bwv = ops::lie_bracket(&w, &v)?;
    let mut antisym = 0.0_f64;
    let jacobi_1 = ops::lie_bracket(&bvw, &u)?;
    let jacobi_2 = ops::lie_bracket(&ops::lie_bracket(&w, &u)?, &v)?;
    let jacobi_3 = ops::lie_bracket(&ops::lie_bracket(&u, &v)?, &w)?;
    let mut jacobi = 0.0_f64;
    for &p in pts.iter().take(40) {
        let a = bvw.jet(p, 0)?.c;
        let b = bwv.jet(p, 0)?.c;
        let j1 = jacobi_1.jet(p, 0)?.c;
        let j2 = jacobi_2.jet(p, 0)?.c;
        let j3 = jacobi_3.jet(p, 0)?.c;
        for k in 0..D {
            antisym = antisym.max((a[k] + b[k]).abs());
            jacobi = jacobi.max((j1[k] + j2[k] + j3[k]).abs());
        }
    }
    suite.push("bracket: antisymmetry", antisym, 1e-10);
    suite.push("bracket: Jacobi identity", jacobi, 1e-8);
    Ok(())
}

fn volume_checks<const D: usize>(
    suite: &mut Suite,
    chart: &Chart<D>,
    resolutions: [usize; D],
    collar: f64,
    expected_untrimmed: Option<f64>,
) -> Result<()> {
    let rule = QuadratureRule::for_chart(chart, resolutions, collar)?;
    let vol = rule.volume()?;
    let self_err = rule.volume_error_estimate()?;
    suite.push(
        "quadrature: volume self-consistency (vs doubled rule)",
        self_err,
        1e-9 * vol.abs().max(1.0),
    );
    if let Some(exact) = expected_untrimmed {
        // collar-trimmed volume approaches the closed form with an O(ε²) defect
        let defect = (vol - exact).abs() / exact;
        suite.push(
            "quadrature: trimmed volume vs closed form (O(ε²) collar defect)",
            defect,
            10.0 * collar * collar + 1e-9,
        );
    }
    Ok(())
}

/// Full invariant suite for the 2D ellipsoid.
pub fn verify_ellipsoid_2d(e2: &Ellipsoid2D, seed: u64, resolution: usize) -> Result<VerifyReport> {
    let chart = e2.chart();
    let mut rng = Rng::new(seed);
    let pts = sample_points(chart, &mut rng, 200, 1e-3);
    let mut suite = Suite::new();
    metric_checks(&mut suite, chart, &pts)?;
    christoffel_check(&mut suite, chart, 20, 1e-3)?;
    jet_vs_fd_check(&mut suite, chart, &pts)?;
    grad_pairing_check(&mut suite, chart, &pts)?;
    for (i, x) in e2.killing_basis().iter().enumerate() {
        killing_checks(&mut suite, &format!("basis {i}"), x, &pts)?;
    }
    connection_checks(&mut suite, chart, &pts)?;

    // arclength parametrization of the generating curve
    let mut unit_speed = 0.0_f64;
    for k in 0..64 {
        let r = -0.98 * e2.d + 1.96 * e2.d * k as f64 / 63.0;
        let c1 = e2.c1(r);
        let c2 = e2.c2(r);
        unit_speed = unit_speed.max((c1.d[1] * c1.d[1] + c2.d[1] * c2.d[1] - 1.0).abs());
    }
    suite.push("profile: unit-speed generating curve", unit_speed, 1e-8);
    let c1_values: Vec<f64> = (0..64)
        .map(|k| e2.c1(-0.98 * e2.d + 1.96 * e2.d * k as f64 / 63.0).d[0])
        .collect();
    let c1_min = c1_values.iter().copied().fold(f64::INFINITY, f64::min);
    let c1_max = c1_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    suite.push(
        "profile: c₁ > 0 on the open interval",
        if c1_min > 0.0 { 0.0 } else { 1.0 },
        0.0,
    );
    suite.push(
        "profile: c₁ non-constant",
        if c1_max - c1_min > 1e-6 { 0.0 } else { 1.0 },
        0.0,
    );

    let expected = if (e2.a - 1.0).abs() < 1e-12 {
        Some(4.0 * std::f64::consts::PI)
    } else {
        None
    };
    volume_checks(
        &mut suite,
        chart,
        [resolution, resolution / 2],
        1e-3,
        expected,
    )?;
    Ok(suite.finish(chart.name(), seed))
}

/// Full invariant suite for the 3D ellipsoid.
pub fn verify_ellipsoid_3d(e3: &Ellipsoid3D, seed: u64, resolution: usize) -> Result<VerifyReport> {
    let chart = e3.chart();
    let mut rng = Rng::new(seed);
    let pts = sample_points(chart, &mut rng, 200, 1e-3);
    let mut suite = Suite::new();
    metric_checks(&mut suite, chart, &pts)?;
    christoffel_check(&mut suite, chart, 20, 1e-3)?;
    jet_vs_fd_check(&mut suite, chart, &pts)?;
    grad_pairing_check(&mut suite, chart, &pts)?;
    for (i, x) in e3.killing_basis().iter().enumerate() {
        killing_checks(&mut suite, &format!("basis {i}"), x, &pts)?;
    }
    connection_checks(&mut suite, chart, &pts)?;

    // ‖p∂_ξ + q∂_μ‖² law and the constancy criterion a²p² = q²
    let mut law = 0.0_f64;
    for k in 0..10 {
        let p = rng.range(-3.0, 3.0);
        let q = rng.range(-3.0, 3.0);
        let x = e3.killing_pq(p, q);
        let n = ops::norm_sq(&x)?;
        for &pt in pts.iter().take(30) {
            let v = n.value(pt)?;
            let exact = e3.norm_sq_pq(p, q, pt[2]);
            law = law.max((v - exact).abs());
        }
        let _ = k;
    }
    suite.push("norm law: ‖p∂_ξ+q∂_μ‖² = a²p²sin²χ + q²cos²χ", law, 1e-10);

    if (e3.a - 1.0).abs() > 1e-12 {
        // constancy threshold check: geodesic pair vs generic pair
        let geop = 1.0;
        let geoq = e3.a; // a²p² = q²
        let n_geo = ops::norm_sq(&e3.killing_pq(geop, geoq))?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &pt in pts.iter().take(50) {
            let v = n_geo.value(pt)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        suite.push(
            "norm law: ‖X‖ constant iff a²p² = q²",
            (hi - lo) / hi,
            1e-12,
        );
    }

    let expected = if (e3.a - 1.0).abs() < 1e-12 {
        Some(2.0 * std::f64::consts::PI * std::f64::consts::PI)
    } else {
        None
    };
    volume_checks(
        &mut suite,
        chart,
        [resolution / 3, resolution / 3, resolution],
        1e-3,
        expected,
    )?;
    Ok(suite.finish(chart.name(), seed))
}

/// Metric sanity only — used on fault-injected charts where downstream
/// operations (which need the inverse metric) cannot run.
pub fn verify_metric_only<const D: usize>(chart: &Chart<D>, seed: u64) -> Result<VerifyReport> {
    let mut rng = Rng::new(seed);
    let pts = sample_points(chart, &mut rng, 60, 1e-3);
    let mut suite = Suite::new();
    metric_checks(&mut suite, chart, &pts)?;
    Ok(suite.finish(chart.name(), seed))
}

/// Fault-injection helper: same chart with g₂₂ negated, for exercising the
/// positive-definiteness detector.
pub fn corrupted_chart_negate_g22<const D: usize>(chart: &Chart<D>) -> Chart<D> {
    let base = chart.metric_fn();
    let coords = chart.coords().clone();
    Chart::new(
        &format!("{}+negated-g22", chart.name()),
        coords,
        Arc::new(move |p: &[Jet<D>; D]| {
            let mut g = base(p);
            g[1][1] = -g[1][1];
            g
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{make_ellipsoid_2d, make_ellipsoid_3d};

    #[test]
    fn sphere_suite_passes() {
        let e2 = make_ellipsoid_2d(1.0, 64).unwrap();
        let report = verify_ellipsoid_2d(&e2, 42, 64).unwrap();
        assert!(
            report.passed,
            "{:#?}",
            report.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>()
        );
    }

    #[test]
    fn ellipsoid3d_suite_passes() {
        let e3 = make_ellipsoid_3d(2.0).unwrap();
        let report = verify_ellipsoid_3d(&e3, 42, 48).unwrap();
        assert!(
            report.passed,
            "{:#?}",
            report.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>()
        );
    }

    #[test]
    fn corrupted_metric_is_caught() {
        let e2 = make_ellipsoid_2d(2.0, 64).unwrap();
        let bad = corrupted_chart_negate_g22(e2.chart());
        let mut rng = Rng::new(7);
        let pts = sample_points(&bad, &mut rng, 20, 1e-3);
        let mut suite = Suite::new();
        metric_checks(&mut suite, &bad, &pts).unwrap();
        let spd = suite
            .checks
            .iter()
            .find(|c| c.name.contains("positive definiteness"))
            .unwrap();
        assert!(!spd.pass, "negated g22 must fail the SPD check");
    }
}
