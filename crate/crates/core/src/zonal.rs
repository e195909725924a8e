//! Zonal-flow analysis: zonality checks, the collinearity factor F, sign
//! structure, and the 3D-ellipsoid classification
//! (geodesic / S¹ / positive).

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::manifolds::{Ellipsoid2D, Ellipsoid3D};
use crate::ops;
use crate::profiles::ProfileSpec;
use crate::rng::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Residual thresholds; defaults follow the engine-wide policy
/// (identity residuals 1e-8 absolute, quadrature targets 1e-6 relative).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    pub identity_abs: f64,
    pub quad_rel: f64,
    /// Zonality accept threshold.
    pub zonal_accept: f64,
    /// Zonality reject threshold; between accept and reject → indeterminate.
    pub zonal_reject: f64,
    /// g-norm of grad‖X‖² below this counts as outside U₀.
    pub grad_cut: f64,
    /// |F| below this maps to sgn = 0.
    pub sgn_dead: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity_abs: 1e-8,
            quad_rel: 1e-6,
            zonal_accept: 1e-7,
            zonal_reject: 1e-4,
            grad_cut: 1e-12,
            sgn_dead: 1e-13,
        }
    }
}

/// How the Killing factor was declared; carries the rationality witness for
/// the S¹ test (floating-point rationality detection is refused).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KillingDescriptor {
    /// ∂_θ on a 2D surface of revolution.
    Theta,
    /// Integer pair p ∂_ξ + q ∂_μ on the 3D ellipsoid, reduced to coprime.
    IntegerPq { p: i64, q: i64 },
    /// Real pair declared non-rational: the flow is flagged non-S¹.
    IrrationalPq { p: f64, q: f64 },
}

/// A candidate zonal flow Z = f X with cached derived fields.
#[derive(Clone)]
pub struct ZonalFlow<const D: usize> {
    pub chart: Chart<D>,
    pub f: ScalarField<D>,
    pub x: VectorField<D>,
    pub z: VectorField<D>,
    /// ‖X‖² as an order-2 scalar field.
    pub norm_sq_x: ScalarField<D>,
    pub f_sq: ScalarField<D>,
    /// Axis the profile depends on (r for 2D, χ for 3D).
    pub profile_axis: usize,
    pub descriptor: KillingDescriptor,
    pub profile: Option<ProfileSpec>,
    pub tol: Tolerances,
}

impl<const D: usize> ZonalFlow<D> {
    pub fn new(
        f: ScalarField<D>,
        x: VectorField<D>,
        profile_axis: usize,
        descriptor: KillingDescriptor,
        profile: Option<ProfileSpec>,
        tol: Tolerances,
    ) -> Result<Self> {
        let z = x.mul_scalar(&f)?;
        let norm_sq_x = ops::norm_sq(&x)?;
        let f_sq = f.square();
        Ok(ZonalFlow {
            chart: f.chart().clone(),
            f,
            x,
            z,
            norm_sq_x,
            f_sq,
            profile_axis,
            descriptor,
            profile,
            tol,
        })
    }

    /// The rescaled representation (f/c, cX) of the same flow Z.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        ZonalFlow::new(
            self.f.scale(1.0 / c),
            self.x.scale(c),
            self.profile_axis,
            self.descriptor.clone(),
            self.profile.clone(),
            self.tol,
        )
    }

    /// Collinearity factor at a point: F = g(grad f², grad‖X‖²)/‖grad‖X‖²‖²,
    /// 0 outside U₀.
    pub fn f_factor_at(&self, x: [f64; D]) -> Result<f64> {
        let mj = self.chart.metric_jet(x)?;
        let f2 = self.f_sq.jet(x, 1)?;
        let h = self.norm_sq_x.jet(x, 1)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..D {
            for j in 0..D {
                num += mj.ginv[i][j].v * f2.d[i] * h.d[j];
                den += mj.ginv[i][j].v * h.d[i] * h.d[j];
            }
        }
        if den < self.tol.grad_cut * self.tol.grad_cut {
            return Ok(0.0);
        }
        Ok(num / den)
    }

    /// F as a scalar field of order 1 (0 outside U₀).
    pub fn f_factor_field(&self) -> Result<ScalarField<D>> {
        // verify U₀ is non-empty: a geodesic flow has no F
        if self.sampled_norm_variance(64)? < 1e-12 {
            return Err(Error::Domain(
                "F undefined: grad‖X‖² vanishes identically (geodesic flow)".into(),
            ));
        }
        let me = self.clone();
        Ok(ScalarField::from_raw(
            &self.chart,
            "F",
            1,
            Arc::new(move |x| {
                // value is the projection ratio; first derivatives via a
                // quotient of jet-level quantities
                let mj = me.chart.metric_jet(x)?;
                let f2 = me.f_sq.jet(x, 2)?;
                let h = me.norm_sq_x.jet(x, 2)?;
                let mut num = crate::jet::Jet::<D>::constant(0.0);
                let mut den = crate::jet::Jet::<D>::constant(0.0);
                for i in 0..D {
                    for j in 0..D {
                        let gij = mj.ginv[i][j];
                        // jets of ∂_i f² and ∂_j h to first order
                        let fi = crate::jet::Jet::<D> {
                            v: f2.d[i],
                            d: f2.h[i],
                            h: [[0.0; D]; D],
                        };
                        let hj = crate::jet::Jet::<D> {
                            v: h.d[j],
                            d: h.h[j],
                            h: [[0.0; D]; D],
                        };
                        let hi = crate::jet::Jet::<D> {
                            v: h.d[i],
                            d: h.h[i],
                            h: [[0.0; D]; D],
                        };
                        num = num + gij * fi * hj;
                        den = den + gij * hi * hj;
                    }
                }
                if den.v < me.tol.grad_cut * me.tol.grad_cut {
                    return Ok(crate::jet::Jet::constant(0.0));
                }
                Ok(num / den)
            }),
        ))
    }

    /// sgn(Z) at a point: sign of F on U₀, 0 elsewhere.
    pub fn sgn_at(&self, x: [f64; D]) -> Result<i8> {
        let f = self.f_factor_at(x)?;
        if f > self.tol.sgn_dead {
            Ok(1)
        } else if f < -self.tol.sgn_dead {
            Ok(-1)
        } else {
            Ok(0)
        }
    }

    /// Sampled variance measure of ‖X‖² (max−min over a 1D profile-axis scan).
    pub fn sampled_norm_variance(&self, n: usize) -> Result<f64> {
        let samples = self.profile_axis_scan(n)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &p in &samples {
            let v = self.norm_sq_x.value(p)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((hi - lo) / hi.abs().max(1e-300))
    }

    fn profile_axis_scan(&self, n: usize) -> Result<Vec<[f64; D]>> {
        let spec = &self.chart.coords()[self.profile_axis];
        let margin = 1e-3 * spec.span();
        let (lo, hi) = (spec.lo + margin, spec.hi - margin);
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let s = lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
            let mut p = [0.0; D];
            // keep periodic axes at generic values
            for (i, c) in self.chart.coords().iter().enumerate() {
                if i != self.profile_axis {
                    p[i] = 0.5 * (c.lo + c.hi) + 0.17 * c.span() * ((i + 1) as f64 / D as f64);
                }
            }
            p[self.profile_axis] = s;
            out.push(p);
        }
        Ok(out)
    }

    /// Geodesic test: ‖X‖ constant, cross-checked by ‖∇_X X‖ at samples.
    pub fn is_geodesic(&self, samples: &[[f64; D]]) -> Result<bool> {
        let variance = self.sampled_norm_variance(128)?;
        if variance > 1e-9 {
            return Ok(false);
        }
        let nxx = ops::covariant_derivative(&self.x, &self.x)?;
        let nxx_norm = ops::norm_sq(&nxx)?;
        for &p in samples {
            if nxx_norm.value(p)?.abs() > self.tol.identity_abs {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// U⁺ as a union of profile-axis intervals, from a dense 1D sign scan of
    /// ∂(f²)·∂(‖X‖²).
    pub fn u_plus_intervals(&self, resolution: usize) -> Result<Vec<(f64, f64)>> {
        let pts = self.profile_axis_scan(resolution)?;
        let mut intervals = Vec::new();
        let mut open: Option<f64> = None;
        let mut prev_s = 0.0;
        for p in &pts {
            let s = p[self.profile_axis];
            let positive = self.sgn_at(*p)? > 0;
            match (positive, open) {
                (true, None) => open = Some(s),
                (false, Some(lo)) => {
                    intervals.push((lo, prev_s));
                    open = None;
                }
                _ => {}
            }
            prev_s = s;
        }
        if let Some(lo) = open {
            intervals.push((lo, prev_s));
        }
        Ok(intervals)
    }
}

/// Residuals and verdicts from the zonality and classification checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub schema_version: u32,
    pub is_zonal: bool,
    /// "accept" | "indeterminate" | "reject"
    pub zonal_verdict: String,
    pub killing_residual: f64,
    pub div_residual: f64,
    pub collinearity_residual: f64,
    pub x_of_f_residual: f64,
    pub x_of_cap_f_residual: f64,
    pub accept_threshold: f64,
    pub reject_threshold: f64,
    pub is_geodesic: bool,
    pub norm_sq_relative_variance: f64,
    pub is_s1: bool,
    pub s1_witness: String,
    pub is_positive: bool,
    pub u_plus: Vec<(f64, f64)>,
    pub u_plus_sample: Option<f64>,
    pub rejects: Vec<String>,
}

/// Zonality check per the three defining conditions; condition (3) is
/// verified through the gradient-collinearity criterion, which is the
/// implementable surrogate for P(∇_Z Z) = 0.
pub fn check_zonal<const D: usize>(
    flow: &ZonalFlow<D>,
    samples: &[[f64; D]],
) -> Result<ClassificationReport> {
    let tol = flow.tol;
    let killing_res = ops::killing_residual(&flow.x, samples)?;
    if killing_res > tol.zonal_reject {
        return Err(Error::Precondition(format!(
            "X is not Killing: residual {killing_res:.3e} exceeds {:.1e}",
            tol.zonal_reject
        )));
    }

    // condition (2): div Z = 0 ⟺ X(f) = 0
    let xf = ops::directional(&flow.x, &flow.f)?;
    let mut xf_res = 0.0_f64;
    for &p in samples {
        xf_res = xf_res.max(xf.value(p)?.abs());
    }
    let div_z = ops::divergence(&flow.z)?;
    let mut div_res = 0.0_f64;
    for &p in samples {
        div_res = div_res.max(div_z.value(p)?.abs());
    }

    // condition (3): grad f² collinear with grad ‖X‖² on U₀
    let mut collin_res = 0.0_f64;
    for &p in samples {
        let mj = flow.chart.metric_jet(p)?;
        let f2 = flow.f_sq.jet(p, 1)?;
        let h = flow.norm_sq_x.jet(p, 1)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..D {
            for j in 0..D {
                num += mj.ginv[i][j].v * f2.d[i] * h.d[j];
                den += mj.ginv[i][j].v * h.d[i] * h.d[j];
            }
        }
        if den < tol.grad_cut * tol.grad_cut {
            continue;
        }
        let ffac = num / den;
        // residual vector grad f² − F grad h, measured in g
        let mut res2 = 0.0;
        for i in 0..D {
            for j in 0..D {
                res2 += mj.ginv[i][j].v * (f2.d[i] - ffac * h.d[i]) * (f2.d[j] - ffac * h.d[j]);
            }
        }
        collin_res = collin_res.max(res2.max(0.0).sqrt());
    }

    // X(F) = 0 on U₀
    let mut xf_cap_res = 0.0_f64;
    if flow.sampled_norm_variance(64)? > 1e-12 {
        let f_field = flow.f_factor_field()?;
        let xcapf = ops::directional(&flow.x, &f_field)?;
        for &p in samples {
            let h = flow.norm_sq_x.jet(p, 1)?;
            let mj = flow.chart.metric_jet(p)?;
            let mut den = 0.0;
            for i in 0..D {
                for j in 0..D {
                    den += mj.ginv[i][j].v * h.d[i] * h.d[j];
                }
            }
            if den < tol.grad_cut * tol.grad_cut {
                continue;
            }
            xf_cap_res = xf_cap_res.max(xcapf.value(p)?.abs());
        }
    }

    let worst = xf_res.max(collin_res);
    let zonal_verdict = if worst <= tol.zonal_accept {
        "accept"
    } else if worst >= tol.zonal_reject {
        "reject"
    } else {
        "indeterminate"
    };

    let mut rejects = Vec::new();
    if xf_res > tol.zonal_accept {
        rejects.push(format!("X(f) residual {xf_res:.3e} (div Z ≠ 0)"));
    }
    if collin_res > tol.zonal_accept {
        rejects.push(format!(
            "collinearity residual {collin_res:.3e} (∇_Z Z is not a gradient)"
        ));
    }

    let geodesic = flow.is_geodesic(samples)?;
    let (is_s1, s1_witness) = s1_verdict(&flow.descriptor);
    let u_plus = flow.u_plus_intervals(2001)?;
    let is_positive = !u_plus.is_empty();

    Ok(ClassificationReport {
        schema_version: 1,
        is_zonal: zonal_verdict == "accept",
        zonal_verdict: zonal_verdict.into(),
        killing_residual: killing_res,
        div_residual: div_res,
        collinearity_residual: collin_res,
        x_of_f_residual: xf_res,
        x_of_cap_f_residual: xf_cap_res,
        accept_threshold: tol.zonal_accept,
        reject_threshold: tol.zonal_reject,
        is_geodesic: geodesic,
        norm_sq_relative_variance: flow.sampled_norm_variance(128)?,
        is_s1,
        s1_witness,
        is_positive,
        u_plus_sample: u_plus.first().map(|(lo, hi)| 0.5 * (lo + hi)),
        u_plus,
        rejects,
    })
}

fn s1_verdict(desc: &KillingDescriptor) -> (bool, String) {
    match desc {
        KillingDescriptor::Theta => (true, "∂_θ generates a circle action".into()),
        KillingDescriptor::IntegerPq { p, q } => {
            if *p == 0 && *q == 0 {
                (false, "zero Killing field".into())
            } else if *p == 0 {
                (true, "q/p = ∞ ∈ Q ∪ {∞}".into())
            } else {
                (true, format!("q/p = {q}/{p} ∈ Q"))
            }
        }
        KillingDescriptor::IrrationalPq { p, q } => {
            (false, format!("q/p = {q}/{p} flagged irrational"))
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Build a zonal flow f(χ) (p ∂_ξ + q ∂_μ) on the 3D ellipsoid with integer
/// (p, q), reduced to coprime.
pub fn zonal_flow_3d(
    e3: &Ellipsoid3D,
    p: i64,
    q: i64,
    profile: &ProfileSpec,
    tol: Tolerances,
) -> Result<ZonalFlow<3>> {
    if p == 0 && q == 0 {
        return Err(Error::Argument("(p, q) must not both be zero".into()));
    }
    let g = gcd(p, q).max(1);
    let (p, q) = (p / g, q / g);
    let f = ScalarField::univariate(e3.chart(), "f", 2, profile.build()?);
    let x = e3.killing_pq(p as f64, q as f64);
    ZonalFlow::new(
        f,
        x,
        2,
        KillingDescriptor::IntegerPq { p, q },
        Some(profile.clone()),
        tol,
    )
}

/// Same with a real (p, q) pair flagged irrational: the S¹ verdict is false.
pub fn zonal_flow_3d_irrational(
    e3: &Ellipsoid3D,
    p: f64,
    q: f64,
    profile: &ProfileSpec,
    tol: Tolerances,
) -> Result<ZonalFlow<3>> {
    let f = ScalarField::univariate(e3.chart(), "f", 2, profile.build()?);
    let x = e3.killing_pq(p, q);
    ZonalFlow::new(
        f,
        x,
        2,
        KillingDescriptor::IrrationalPq { p, q },
        Some(profile.clone()),
        tol,
    )
}

/// Build a zonal flow f(r) ∂_θ on a 2D ellipsoid.
pub fn zonal_flow_2d(
    e2: &Ellipsoid2D,
    profile: &ProfileSpec,
    tol: Tolerances,
) -> Result<ZonalFlow<2>> {
    let f = ScalarField::univariate(e2.chart(), "f", 0, profile.build()?);
    let x = VectorField::basis(e2.chart(), 1);
    ZonalFlow::new(
        f,
        x,
        0,
        KillingDescriptor::Theta,
        Some(profile.clone()),
        tol,
    )
}

/// Classification of f(χ)(p∂_ξ + q∂_μ) on M³_a. Rejects a = 1, where the
/// isometry group is larger and the two-generator reasoning breaks down.
pub fn classify_3d(
    e3: &Ellipsoid3D,
    flow: &ZonalFlow<3>,
    samples: &[[f64; 3]],
) -> Result<ClassificationReport> {
    if (e3.a - 1.0).abs() < 1e-12 {
        return Err(Error::Capability {
            field: "classification undefined at a = 1 (round sphere)".into(),
            needed: 0,
            available: 0,
        });
    }
    let mut report = check_zonal(flow, samples)?;
    // geodesic ⟺ a²p² = q², cross-checked by the sampled variance test
    if let KillingDescriptor::IntegerPq { p, q } = flow.descriptor {
        let a2p2 = e3.a * e3.a * (p * p) as f64;
        let q2 = (q * q) as f64;
        let algebraic = (a2p2 - q2).abs() <= 1e-12 * (a2p2 + q2).max(1.0);
        if algebraic != report.is_geodesic {
            return Err(Error::Precondition(format!(
                "geodesic criterion disagreement: a²p²={a2p2}, q²={q2}, sampled variance {}",
                report.norm_sq_relative_variance
            )));
        }
        report.is_geodesic = algebraic;
    }
    Ok(report)
}

/// Random interior sample points on a chart, trimmed by a collar.
pub fn sample_points<const D: usize>(
    chart: &Chart<D>,
    rng: &mut Rng,
    n: usize,
    collar: f64,
) -> Vec<[f64; D]> {
    (0..n)
        .map(|_| {
            std::array::from_fn(|i| {
                let c = &chart.coords()[i];
                let margin = if c.periodic {
                    0.0
                } else {
                    collar.max(1e-6 * c.span())
                };
                rng.range(c.lo + margin, c.hi - margin)
            })
        })
        .collect()
}

/// Covariant-identity residuals for a zonal flow at one point, used by
/// invariant suites: (‖∇_Z Z − f²∇_X X‖_g, ‖∇_Z Z + (f²/2) grad‖X‖²‖_g).
pub fn nabla_zz_residuals<const D: usize>(flow: &ZonalFlow<D>, p: [f64; D]) -> Result<(f64, f64)> {
    let nzz = ops::covariant_derivative(&flow.z, &flow.z)?;
    let nxx = ops::covariant_derivative(&flow.x, &flow.x)?;
    let grad_h = ops::grad(&flow.norm_sq_x)?;
    let f2 = flow.f_sq.value(p)?;
    let a = nzz.jet(p, 0)?.c;
    let b = nxx.jet(p, 0)?.c;
    let c = grad_h.jet(p, 0)?.c;
    let mj = flow.chart.metric_jet(p)?;
    let norm = |v: [f64; D]| {
        let mut s = 0.0;
        for i in 0..D {
            for j in 0..D {
                s += mj.g[i][j].v * v[i] * v[j];
            }
        }
        s.max(0.0).sqrt()
    };
    let r1 = norm(std::array::from_fn(|i| a[i] - f2 * b[i]));
    let r2 = norm(std::array::from_fn(|i| a[i] + 0.5 * f2 * c[i]));
    Ok((r1, r2))
}

/// The mirrored flow: replaces f by f̃ = √(A − f²) with A > max f², so that
/// grad f̃² = −grad f² pointwise and hence F̃ = −F. Used for sign-structure
/// checks: the commuting-route mc flips sign exactly.
pub fn mirrored_flow<const D: usize>(flow: &ZonalFlow<D>) -> Result<ZonalFlow<D>> {
    let scan = flow.profile_axis_scan(512)?;
    let mut max_f2 = 0.0_f64;
    for &p in &scan {
        max_f2 = max_f2.max(flow.f_sq.value(p)?);
    }
    let level = max_f2 + 1.0;
    let f = flow.f.clone();
    let mirrored = ScalarField::from_raw(
        &flow.chart,
        "mirror(f)",
        2,
        Arc::new(move |x| {
            let fj = f.jet(x, 2)?;
            let f2 = fj * fj;
            Ok(((-f2) + level).sqrt())
        }),
    );
    ZonalFlow::new(
        mirrored,
        flow.x.clone(),
        flow.profile_axis,
        flow.descriptor.clone(),
        None,
        flow.tol,
    )
}

/// Relative residual of the intrinsic sign identity
/// g(grad‖Z‖² + 2∇_Z Z, 2∇_Z Z) + F f² ‖X‖² ‖grad‖X‖²‖² = 0 on U₀.
pub fn intrinsic_sign_residual<const D: usize>(
    flow: &ZonalFlow<D>,
    p: [f64; D],
) -> Result<Option<f64>> {
    let mj = flow.chart.metric_jet(p)?;
    let norm_sq_z = ops::norm_sq(&flow.z)?;
    let gz = ops::grad(&norm_sq_z)?.jet(p, 0)?.c;
    let nzz = ops::covariant_derivative(&flow.z, &flow.z)?.jet(p, 0)?.c;
    let gh = ops::grad(&flow.norm_sq_x)?.jet(p, 0)?.c;
    let pair = |u: [f64; D], v: [f64; D]| {
        let mut s = 0.0;
        for i in 0..D {
            for j in 0..D {
                s += mj.g[i][j].v * u[i] * v[j];
            }
        }
        s
    };
    let gh_norm2 = pair(gh, gh);
    if gh_norm2 < flow.tol.grad_cut * flow.tol.grad_cut {
        return Ok(None); // outside U₀
    }
    let lhs = pair(
        std::array::from_fn(|i| gz[i] + 2.0 * nzz[i]),
        std::array::from_fn(|i| 2.0 * nzz[i]),
    );
    let f2 = flow.f_sq.value(p)?;
    let h = flow.norm_sq_x.value(p)?;
    let ffac = flow.f_factor_at(p)?;
    let rhs = -ffac * f2 * h * gh_norm2;
    let scale = lhs.abs().max(rhs.abs()).max(1e-30);
    Ok(Some((lhs - rhs).abs() / scale))
}
