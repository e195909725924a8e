//! Built-in charts: 2D ellipsoids of revolution (arclength-parametrized
//! generating curve), 3D ellipsoids in Hopf-type coordinates, and a flat
//! 2-torus used as an auxiliary test bed.

use crate::chart::{Chart, CoordSpec};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::jet::Jet;
use crate::quad::gl_integrate;
use crate::series::Series;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

/// Arclength reparametrization of the quarter-ellipse generating curve
/// (a cos φ, sin φ). Stores a cumulative arclength table on a uniform φ-grid
/// and polishes each inversion with Newton iterations, so queries reach
/// machine precision regardless of table resolution.
pub struct ArclengthReparam {
    a: f64,
    phi_step: f64,
    r_cum: Vec<f64>,
    d: f64,
}

impl ArclengthReparam {
    fn new(a: f64, resolution: usize) -> Self {
        let k = resolution.max(16);
        let phi_step = FRAC_PI_2 / k as f64;
        let mut r_cum = Vec::with_capacity(k + 1);
        r_cum.push(0.0);
        let mut acc = 0.0;
        for i in 0..k {
            let lo = i as f64 * phi_step;
            let hi = lo + phi_step;
            acc += gl_integrate(lo, hi, 24, |phi| Self::speed_of(a, phi));
            r_cum.push(acc);
        }
        ArclengthReparam {
            a,
            phi_step,
            r_cum,
            d: acc,
        }
    }

    fn speed_of(a: f64, phi: f64) -> f64 {
        (1.0 + (a * a - 1.0) * phi.sin().powi(2)).sqrt()
    }

    pub fn speed(&self, phi: f64) -> f64 {
        Self::speed_of(self.a, phi)
    }

    /// Quarter-arc length, i.e. the half-length d of the r-interval.
    pub fn half_length(&self) -> f64 {
        self.d
    }

    fn r_of_phi(&self, phi: f64) -> f64 {
        let idx = ((phi / self.phi_step) as usize).min(self.r_cum.len() - 2);
        let base = idx as f64 * self.phi_step;
        self.r_cum[idx] + gl_integrate(base, phi, 16, |p| self.speed(p))
    }

    /// Invert r ↦ φ on [0, d] (callers handle the sign).
    fn phi_of_r_abs(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        let r = r.min(self.d);
        // bracket from the table
        let idx = match self.r_cum.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
        .min(self.r_cum.len() - 2);
        let (r0, r1) = (self.r_cum[idx], self.r_cum[idx + 1]);
        let frac = if r1 > r0 { (r - r0) / (r1 - r0) } else { 0.0 };
        let mut phi = (idx as f64 + frac) * self.phi_step;
        for _ in 0..50 {
            let f = self.r_of_phi(phi) - r;
            let step = f / self.speed(phi);
            phi -= step;
            phi = phi.clamp(0.0, FRAC_PI_2);
            if step.abs() < 1e-15 {
                break;
            }
        }
        phi
    }

    /// φ(r) with its first three derivatives.
    pub fn phi_series(&self, r: f64) -> Series {
        let sign = if r < 0.0 { -1.0 } else { 1.0 };
        let phi = sign * self.phi_of_r_abs(r.abs());
        let a2m1 = self.a * self.a - 1.0;
        let u = 1.0 + a2m1 * phi.sin().powi(2);
        let w = u.sqrt();
        let du = a2m1 * (2.0 * phi).sin();
        let ddu = 2.0 * a2m1 * (2.0 * phi).cos();
        let dw = du / (2.0 * w);
        let ddw = ddu / (2.0 * w) - du * du / (4.0 * u * w);
        let p1 = 1.0 / w;
        let p2 = -dw / (w * w * w);
        let p3 = -ddw / (w * w * w * w) + 3.0 * dw * dw / (w * w * w * w * w);
        Series {
            d: [phi, p1, p2, p3],
        }
    }

    /// c₁(r) = a cos φ(r) with derivatives.
    pub fn c1_series(&self, r: f64) -> Series {
        self.phi_series(r).cos() * self.a
    }

    /// c₂(r) = sin φ(r) with derivatives.
    pub fn c2_series(&self, r: f64) -> Series {
        self.phi_series(r).sin()
    }
}

/// 2D ellipsoid of revolution x² + y² = a²(1 − z²) in arclength coordinates
/// (r, θ) with metric diag(1, c₁(r)²).
#[derive(Clone)]
pub struct Ellipsoid2D {
    pub a: f64,
    pub d: f64,
    chart: Chart<2>,
    reparam: Arc<ArclengthReparam>,
}

pub fn make_ellipsoid_2d(a: f64, profile_resolution: usize) -> Result<Ellipsoid2D> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Argument(format!(
            "ellipsoid aspect a must be positive, got {a}"
        )));
    }
    let reparam = Arc::new(ArclengthReparam::new(a, profile_resolution));
    let d = reparam.half_length();
    let rp = reparam.clone();
    let metric = Arc::new(move |p: &[Jet<2>; 2]| {
        let c1 = p[0].compose_series(rp.c1_series(p[0].v));
        let zero = Jet::constant(0.0);
        [[Jet::constant(1.0), zero], [zero, c1 * c1]]
    });
    let rp2 = reparam.clone();
    let closed = Arc::new(move |x: [f64; 2]| {
        let c1 = rp2.c1_series(x[0]);
        let (c, dc) = (c1.d[0], c1.d[1]);
        let mut gamma = [[[0.0; 2]; 2]; 2];
        gamma[0][1][1] = -c * dc;
        gamma[1][0][1] = dc / c;
        gamma[1][1][0] = dc / c;
        gamma
    });
    let chart = Chart::new(
        &format!("ellipsoid2d(a={a})"),
        [
            CoordSpec::bounded("r", -d, d),
            CoordSpec::periodic("theta", -PI, PI),
        ],
        metric,
    )
    .with_closed_christoffel(closed);
    Ok(Ellipsoid2D {
        a,
        d,
        chart,
        reparam,
    })
}

impl Ellipsoid2D {
    pub fn chart(&self) -> &Chart<2> {
        &self.chart
    }

    pub fn c1(&self, r: f64) -> Series {
        self.reparam.c1_series(r)
    }

    pub fn c2(&self, r: f64) -> Series {
        self.reparam.c2_series(r)
    }

    /// Killing fields span: {∂_θ}.
    pub fn killing_basis(&self) -> Vec<VectorField<2>> {
        vec![VectorField::basis(&self.chart, 1)]
    }
}

/// 3D ellipsoid x² + y² = a²(1 − z² − w²) in Hopf-type coordinates
/// (ξ, μ, χ) with metric diag(a² sin²χ, cos²χ, a² cos²χ + sin²χ).
#[derive(Clone)]
pub struct Ellipsoid3D {
    pub a: f64,
    chart: Chart<3>,
}

pub fn make_ellipsoid_3d(a: f64) -> Result<Ellipsoid3D> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Argument(format!(
            "ellipsoid aspect a must be positive, got {a}"
        )));
    }
    let a2 = a * a;
    let metric = Arc::new(move |p: &[Jet<3>; 3]| {
        let chi = p[2];
        let s = chi.sin();
        let c = chi.cos();
        let zero = Jet::constant(0.0);
        [
            [s * s * a2, zero, zero],
            [zero, c * c, zero],
            [zero, zero, c * c * a2 + s * s],
        ]
    });
    let closed = Arc::new(move |x: [f64; 3]| {
        let chi = x[2];
        let (s, c) = chi.sin_cos();
        let w2 = a2 * c * c + s * s;
        let sc = s * c;
        let mut gamma = [[[0.0; 3]; 3]; 3];
        gamma[0][0][2] = c / s;
        gamma[0][2][0] = c / s;
        gamma[1][1][2] = -s / c;
        gamma[1][2][1] = -s / c;
        gamma[2][0][0] = -a2 * sc / w2;
        gamma[2][1][1] = sc / w2;
        gamma[2][2][2] = (1.0 - a2) * sc / w2;
        gamma
    });
    let chart = Chart::new(
        &format!("ellipsoid3d(a={a})"),
        [
            CoordSpec::periodic("xi", -PI, PI),
            CoordSpec::periodic("mu", -PI, PI),
            CoordSpec::bounded("chi", 0.0, FRAC_PI_2),
        ],
        metric,
    )
    .with_closed_christoffel(closed);
    Ok(Ellipsoid3D { a, chart })
}

impl Ellipsoid3D {
    pub fn chart(&self) -> &Chart<3> {
        &self.chart
    }

    /// Killing fields span: {∂_ξ, ∂_μ} (for a ≠ 1 this is the whole algebra).
    pub fn killing_basis(&self) -> Vec<VectorField<3>> {
        vec![
            VectorField::basis(&self.chart, 0),
            VectorField::basis(&self.chart, 1),
        ]
    }

    /// The Killing field p ∂_ξ + q ∂_μ.
    pub fn killing_pq(&self, p: f64, q: f64) -> VectorField<3> {
        VectorField::constant_combination(&self.chart, &format!("{p}*d_xi+{q}*d_mu"), [p, q, 0.0])
    }

    /// Closed form ‖p∂_ξ + q∂_μ‖² = a²p² sin²χ + q² cos²χ.
    pub fn norm_sq_pq(&self, p: f64, q: f64, chi: f64) -> f64 {
        let (s, c) = chi.sin_cos();
        self.a * self.a * p * p * s * s + q * q * c * c
    }

    /// ∂_χ ‖p∂_ξ + q∂_μ‖² = 2(a²p² − q²) sinχ cosχ.
    pub fn d_norm_sq_pq(&self, p: f64, q: f64, chi: f64) -> f64 {
        2.0 * (self.a * self.a * p * p - q * q) * chi.sin() * chi.cos()
    }
}

/// Flat 2-torus with identity metric; auxiliary chart for tests and checks.
pub struct FlatTorus2 {
    chart: Chart<2>,
}

pub fn make_flat_torus_2() -> FlatTorus2 {
    let metric = Arc::new(|_p: &[Jet<2>; 2]| {
        let zero = Jet::constant(0.0);
        [[Jet::constant(1.0), zero], [zero, Jet::constant(1.0)]]
    });
    let closed = Arc::new(|_x: [f64; 2]| [[[0.0; 2]; 2]; 2]);
    let chart = Chart::new(
        "flat-torus-2",
        [
            CoordSpec::periodic("x1", -PI, PI),
            CoordSpec::periodic("x2", -PI, PI),
        ],
        metric,
    )
    .with_closed_christoffel(closed);
    FlatTorus2 { chart }
}

impl FlatTorus2 {
    pub fn chart(&self) -> &Chart<2> {
        &self.chart
    }

    pub fn killing_basis(&self) -> Vec<VectorField<2>> {
        vec![
            VectorField::basis(&self.chart, 0),
            VectorField::basis(&self.chart, 1),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops;

    #[test]
    fn unit_sphere_reduces_to_trig_profile() {
        let e = make_ellipsoid_2d(1.0, 64).unwrap();
        assert!((e.d - FRAC_PI_2).abs() < 1e-12);
        // r = 0 is the equator
        let c1 = e.c1(0.0);
        let c2 = e.c2(0.0);
        assert!((c1.d[0] - 1.0).abs() < 1e-13);
        assert!(c2.d[0].abs() < 1e-13);
        // arclength on the unit circle is the angle: c1(π/4) = cos(π/4)
        let c1q = e.c1(FRAC_PI_2 / 2.0);
        assert!((c1q.d[0] - (FRAC_PI_2 / 2.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn generating_curve_is_unit_speed() {
        for a in [0.5, 1.0, 2.0, 3.7] {
            let e = make_ellipsoid_2d(a, 48).unwrap();
            for k in 0..20 {
                let r = -0.95 * e.d + k as f64 / 19.0 * 1.9 * e.d;
                let c1 = e.c1(r);
                let c2 = e.c2(r);
                let speed = c1.d[1] * c1.d[1] + c2.d[1] * c2.d[1];
                assert!((speed - 1.0).abs() < 1e-12, "a={a} r={r}: {speed}");
            }
        }
    }

    #[test]
    fn equator_radius_is_a() {
        let e = make_ellipsoid_2d(2.0, 64).unwrap();
        let g = e.chart().metric_at([0.0, 0.3]).unwrap();
        assert!((g[1][1] - 4.0).abs() < 1e-12); // g_θθ = c₁² = a²
    }

    #[test]
    fn sphere_christoffel_closed_form() {
        // Γ¹₂₂ = −c₁ ∂_r c₁ = cos r sin r on the unit sphere; at r = π/6
        let e = make_ellipsoid_2d(1.0, 64).unwrap();
        let r = PI / 6.0;
        let gamma = e.chart().christoffel([r, 0.0]).unwrap();
        let expected = r.cos() * r.sin(); // ≈ 0.43301
        assert!((gamma[0][1][1] - expected).abs() < 1e-10);
        assert!((expected - 0.43301).abs() < 1e-5);
        let closed = e.chart().closed_christoffel([r, 0.0]).unwrap();
        assert!((closed[0][1][1] - expected).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid3d_metric_and_density() {
        let e = make_ellipsoid_3d(2.0).unwrap();
        let chi = FRAC_PI_2 / 2.0;
        let g = e.chart().metric_at([0.1, -0.2, chi]).unwrap();
        assert!((g[0][0] - 4.0 * chi.sin().powi(2)).abs() < 1e-14);
        assert!((g[1][1] - chi.cos().powi(2)).abs() < 1e-14);
        assert!((g[2][2] - (4.0 * chi.cos().powi(2) + chi.sin().powi(2))).abs() < 1e-14);
        // √det g at χ = π/4: 2 · ½ · √2.5
        let sd = e.chart().sqrt_det_g([0.0, 0.0, chi]).unwrap();
        assert!((sd - 1.5811388300841898).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid3d_closed_christoffels_match_generic() {
        for a in [0.5, 2.0] {
            let e = make_ellipsoid_3d(a).unwrap();
            for k in 1..10 {
                let chi = k as f64 / 10.0 * FRAC_PI_2;
                let x = [0.4, -1.1, chi];
                let generic = e.chart().christoffel(x).unwrap();
                let closed = e.chart().closed_christoffel(x).unwrap();
                for kk in 0..3 {
                    for i in 0..3 {
                        for j in 0..3 {
                            assert!(
                                (generic[kk][i][j] - closed[kk][i][j]).abs() < 1e-10,
                                "a={a} chi={chi} Γ^{kk}_{i}{j}"
                            );
                        }
                    }
                }
            }
        }
        // Γ¹₁₃ = 1/tan χ and Γ³₃₃ = 0 at a = 1
        let e = make_ellipsoid_3d(1.0).unwrap();
        let gamma = e.chart().christoffel([0.0, 0.0, 0.7]).unwrap();
        assert!((gamma[0][0][2] - 1.0 / 0.7_f64.tan()).abs() < 1e-12);
        assert!(gamma[2][2][2].abs() < 1e-12);
    }

    #[test]
    fn killing_basis_sizes() {
        assert_eq!(make_ellipsoid_2d(2.0, 32).unwrap().killing_basis().len(), 1);
        assert_eq!(make_ellipsoid_3d(2.0).unwrap().killing_basis().len(), 2);
        assert_eq!(make_flat_torus_2().killing_basis().len(), 2);
    }

    #[test]
    fn grad_norm_sq_closed_form() {
        // grad ‖∂_ξ‖² = [0, 0, 2a²·sinχcosχ/(a²cos²χ+sin²χ)] = [0,0,1.6]
        // at a = 2, χ = π/4
        let e3 = make_ellipsoid_3d(2.0).unwrap();
        let x = e3.killing_pq(1.0, 0.0);
        let h = crate::ops::norm_sq(&x).unwrap();
        let grad = crate::ops::grad(&h).unwrap();
        let g = grad.jet([0.3, -0.8, FRAC_PI_2 / 2.0], 0).unwrap().c;
        assert!(g[0].abs() < 1e-14 && g[1].abs() < 1e-14);
        assert!((g[2] - 1.6).abs() < 1e-12, "{}", g[2]);
    }

    #[test]
    fn covariant_derivative_of_theta_basis() {
        // ∇_{∂_θ}∂_θ = −c₁ ∂_r c₁ ∂_r on the 2D ellipsoid
        let e2 = make_ellipsoid_2d(2.0, 64).unwrap();
        let theta = VectorField::basis(e2.chart(), 1);
        let nabla = crate::ops::covariant_derivative(&theta, &theta).unwrap();
        let r = 0.4;
        let c = nabla.jet([r, 1.0], 0).unwrap().c;
        let c1 = e2.c1(r);
        assert!(
            (c[0] - (-c1.d[0] * c1.d[1])).abs() < 1e-11,
            "{} vs {}",
            c[0],
            -c1.d[0] * c1.d[1]
        );
        assert!(c[1].abs() < 1e-12);
    }

    #[test]
    fn killing_bases_pass_residual() {
        let e2 = make_ellipsoid_2d(2.0, 64).unwrap();
        let pts2: Vec<[f64; 2]> = (1..8)
            .map(|k| [-0.8 * e2.d + k as f64 * 0.2 * e2.d, 0.3 * k as f64])
            .collect();
        for x in e2.killing_basis() {
            let r = ops::killing_residual(&x, &pts2).unwrap();
            assert!(r < 1e-10, "residual {r}");
        }

        let e3 = make_ellipsoid_3d(2.0).unwrap();
        let pts3: Vec<[f64; 3]> = (1..8)
            .map(|k| [0.2 * k as f64, -0.1, 0.15 * k as f64])
            .collect();
        for x in e3.killing_basis() {
            let r = ops::killing_residual(&x, &pts3).unwrap();
            assert!(r < 1e-12, "residual {r}");
        }
        let pq = e3.killing_pq(1.0, 2.0);
        assert!(ops::killing_residual(&pq, &pts3).unwrap() < 1e-12);

        // r ∂_r on the 2D ellipsoid is not Killing: residual is O(1)
        let not_killing =
            VectorField::from_jet_fn(e2.chart(), "r*d_r", |p| [p[0], Jet::constant(0.0)]);
        let r = ops::killing_residual(&not_killing, &pts2).unwrap();
        assert!(r > 0.1, "expected non-Killing residual, got {r}");
    }

    #[test]
    fn flat_torus_basis_residual_zero() {
        let t = make_flat_torus_2();
        let pts: Vec<[f64; 2]> = vec![[0.1, 0.2], [1.0, -1.0]];
        for x in t.killing_basis() {
            assert_eq!(ops::killing_residual(&x, &pts).unwrap(), 0.0);
        }
    }

    #[test]
    fn nonpositive_aspect_rejected() {
        assert!(make_ellipsoid_2d(0.0, 32).is_err());
        assert!(make_ellipsoid_2d(-1.0, 32).is_err());
        assert!(make_ellipsoid_3d(0.0).is_err());
    }
}
