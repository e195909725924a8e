//! Construction of X-commuting divergence-free perturbation fields on the
//! 3D ellipsoid, and the derivative-free positivity search.
//!
//! Both constructions work in the adapted angles (s, t, χ) with
//! t = −q·ξ + p·μ and s chosen by a Bézout complement so that X = ∂_s.
//! A field with coefficients depending on (t, χ) only commutes with X; a
//! flat-divergence-free (t, χ) field divided by the volume density
//! H(χ) = √det g is divergence-free for the Riemannian volume
//! (div under the weighted density equals the flat divergence of the
//! weighted field).
//!
//! Shapes:
//!  * `Disk` — the rotational bump ρ(R/r)(−Δχ ∂_t + Δt ∂_χ) around
//!    (t₀, χ₀), with the plateau mollifier built from exp(−1/(1−x²));
//!  * `Ring` — stream function ψ = amp·T(t)·K(χ) with T a single harmonic
//!    and K = (1−x²)^order, supported in a χ-band. The single harmonic is
//!    resolved exactly by the periodic trapezoid axes, which keeps all mc
//!    routes in agreement at moderate resolution.

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::jet::Jet;
use crate::manifolds::Ellipsoid3D;
use crate::mc::{self, McReport, Verdict};
use crate::ops;
use crate::profiles;
use crate::quad::QuadratureRule;
use crate::series::Series;
use crate::zonal::{classify_3d, KillingDescriptor, ZonalFlow};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Bump parameters in the (t, χ) plane.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BumpProfile {
    pub t0: f64,
    pub chi0: f64,
    pub radius: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum BumpShape {
    Disk,
    Ring { order: u32 },
}

/// A constructed perturbation field with its support descriptor.
#[derive(Clone, Debug)]
pub struct PerturbationField {
    pub field: VectorField<3>,
    pub shape: BumpShape,
    pub bump: BumpProfile,
    pub p: i64,
    pub q: i64,
    /// Bézout complement: alpha·p + beta·q = 1.
    pub alpha: i64,
    pub beta: i64,
    pub chi_support: (f64, f64),
}

/// Residuals for the four positivity conditions:
/// (a) div Y = 0, (b) `[X,Y] = 0`, (c) supp Y ⊂ U⁺, (d) `Y(‖X‖²) ≠ 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub div_residual: f64,
    pub commute_residual: f64,
    pub support_inside_u_plus: bool,
    pub support_margin: f64,
    /// max ‖Y‖_g sampled outside the declared χ-support.
    pub outside_leak: f64,
    pub max_y_of_norm_sq: f64,
}

impl ConditionReport {
    pub fn satisfied(&self, tol: f64) -> bool {
        self.div_residual <= tol
            && self.commute_residual <= tol
            && self.support_inside_u_plus
            && self.support_margin > 0.0
            && self.outside_leak <= tol
            && self.max_y_of_norm_sq > 0.0
    }
}

fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = extended_gcd(b, a.rem_euclid(b));
        (g, y, x - (a.div_euclid(b)) * y)
    }
}

fn integer_pq(flow: &ZonalFlow<3>) -> Result<(i64, i64)> {
    match flow.descriptor {
        KillingDescriptor::IntegerPq { p, q } => Ok((p, q)),
        _ => Err(Error::Capability {
            field: "perturbation construction needs an integer (p, q) Killing factor".into(),
            needed: 0,
            available: 0,
        }),
    }
}

fn check_support_fits(
    flow: &ZonalFlow<3>,
    bump: &BumpProfile,
    collar: f64,
) -> Result<(f64, f64, f64)> {
    if !(bump.radius > 0.0) {
        return Err(Error::Construction("bump radius must be positive".into()));
    }
    if bump.radius >= PI {
        return Err(Error::Construction(format!(
            "bump radius {} does not fit the transverse circle (needs < π)",
            bump.radius
        )));
    }
    let (chi_lo, chi_hi) = (bump.chi0 - bump.radius, bump.chi0 + bump.radius);
    let trim = (collar, FRAC_PI_2 - collar);
    if chi_lo <= trim.0 || chi_hi >= trim.1 {
        return Err(Error::Construction(format!(
            "bump χ-support ({chi_lo:.4}, {chi_hi:.4}) leaves the collar-trimmed interval ({:.4}, {:.4})",
            trim.0, trim.1
        )));
    }
    let u_plus = flow.u_plus_intervals(2001)?;
    let host = u_plus
        .iter()
        .find(|(lo, hi)| chi_lo >= *lo && chi_hi <= *hi);
    match host {
        Some((lo, hi)) => {
            let margin = (chi_lo - lo).min(hi - chi_hi);
            if margin <= 0.0 {
                return Err(Error::Construction(format!(
                    "bump support touches the U⁺ boundary (margin {margin:.2e})"
                )));
            }
            Ok((chi_lo, chi_hi, margin))
        }
        None => Err(Error::Construction(format!(
            "bump χ-support ({chi_lo:.4}, {chi_hi:.4}) is not inside any U⁺ interval {u_plus:?}"
        ))),
    }
}

/// Volume density of M³_a as a jet of χ.
fn density_jet(a: f64, chi: Jet<3>) -> Jet<3> {
    let s = chi.sin();
    let c = chi.cos();
    (s * c * ((c * c * (a * a)) + s * s).sqrt()) * a
}

/// The rotational disk bump in the transverse (t, χ) plane:
/// W = amp·ρ(R²/r²)(−Δχ, Δt) in the (t, χ) plane, Y = W/H.
pub fn build_commuting_bump(
    e3: &Ellipsoid3D,
    flow: &ZonalFlow<3>,
    bump: &BumpProfile,
) -> Result<PerturbationField> {
    build_bump_with_shape(e3, flow, bump, BumpShape::Disk, 1e-3)
}

/// The ring bump: stream function amp·cos(t − t₀)·K(χ), K = (1−x²)^order.
pub fn build_ring_bump(
    e3: &Ellipsoid3D,
    flow: &ZonalFlow<3>,
    bump: &BumpProfile,
    order: u32,
) -> Result<PerturbationField> {
    build_bump_with_shape(e3, flow, bump, BumpShape::Ring { order }, 1e-3)
}

pub fn build_bump_with_shape(
    e3: &Ellipsoid3D,
    flow: &ZonalFlow<3>,
    bump: &BumpProfile,
    shape: BumpShape,
    collar: f64,
) -> Result<PerturbationField> {
    if (e3.a - 1.0).abs() < 1e-12 {
        return Err(Error::Capability {
            field: "perturbation construction rejects a = 1 (classification undefined)".into(),
            needed: 0,
            available: 0,
        });
    }
    let (p, q) = integer_pq(flow)?;
    let (chi_lo, chi_hi, _margin) = check_support_fits(flow, bump, collar)?;
    let (g, alpha, beta) = extended_gcd(p, q);
    if g.abs() != 1 {
        return Err(Error::Construction(format!(
            "(p, q) = ({p}, {q}) must be coprime"
        )));
    }
    // normalize so alpha·p + beta·q = +1
    let (alpha, beta) = if g == 1 {
        (alpha, beta)
    } else {
        (-alpha, -beta)
    };

    let a = e3.a;
    let b = *bump;
    let (pf, qf) = (p as f64, q as f64);
    let (alf, bef) = (alpha as f64, beta as f64);
    let field = match shape {
        BumpShape::Disk => VectorField::from_jet_fn(e3.chart(), "Y-disk", move |pt| {
            let [xi, mu, chi] = *pt;
            let t = xi * (-qf) + mu * pf;
            // wrap t − t₀ into (−π, π]; the shift is locally constant
            let shift = ((t.v - b.t0) / (2.0 * PI)).round() * 2.0 * PI;
            let dt = t - (b.t0 + shift);
            let dchi = chi - b.chi0;
            let u = (dt * dt + dchi * dchi) * (1.0 / (b.radius * b.radius));
            let rho = u.compose_series(profiles::plateau_of_u(Series::var(u.v)));
            let w_t = -(rho * dchi) * b.amplitude;
            let w_chi = (rho * dt) * b.amplitude;
            let hinv = density_jet(a, chi).recip();
            let yt = w_t * hinv;
            let ychi = w_chi * hinv;
            [yt * (-bef), yt * alf, ychi]
        }),
        BumpShape::Ring { order } => {
            let m = order.max(2) as i32;
            VectorField::from_jet_fn(e3.chart(), "Y-ring", move |pt| {
                let [xi, mu, chi] = *pt;
                let t = xi * (-qf) + mu * pf;
                let phase = t - b.t0;
                let big_t = phase.cos();
                let big_tp = -phase.sin();
                let x01 = (chi - b.chi0) * (1.0 / b.radius);
                let poly = |x: Series| -> Series {
                    let u = x * x;
                    if u.d[0] >= 1.0 {
                        return Series::ZERO;
                    }
                    (-u + 1.0).powi(m)
                };
                let k = x01.compose_series(poly(Series::var(x01.v)));
                let kp = x01
                    .compose_series(poly(Series::var(x01.v)).derivative_shift() * (1.0 / b.radius));
                let w_t = -(big_t * kp) * b.amplitude;
                let w_chi = (big_tp * k) * b.amplitude;
                let hinv = density_jet(a, chi).recip();
                let yt = w_t * hinv;
                let ychi = w_chi * hinv;
                [yt * (-bef), yt * alf, ychi]
            })
        }
    };
    Ok(PerturbationField {
        field,
        shape,
        bump: b,
        p,
        q,
        alpha,
        beta,
        chi_support: (chi_lo, chi_hi),
    })
}

/// Residuals for the four positivity conditions of a perturbation field.
pub fn condition_report(
    pf: &PerturbationField,
    flow: &ZonalFlow<3>,
    rule: &QuadratureRule<3>,
) -> Result<ConditionReport> {
    let (commute_res, div_res) = mc::commuting_preconditions(flow, &pf.field, rule)?;

    // (c) margins against U⁺ and sampled leak outside the declared support
    let u_plus = flow.u_plus_intervals(2001)?;
    let (chi_lo, chi_hi) = pf.chi_support;
    let host = u_plus
        .iter()
        .find(|(lo, hi)| chi_lo >= *lo && chi_hi <= *hi);
    let (inside, margin) = match host {
        Some((lo, hi)) => (true, (chi_lo - lo).min(hi - chi_hi)),
        None => (false, f64::NEG_INFINITY),
    };
    let chart = flow.chart.clone();
    let norm_g = |x: [f64; 3], c: [f64; 3]| -> Result<f64> {
        let mj = chart.metric_jet(x)?;
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += mj.g[i][j].v * c[i] * c[j];
            }
        }
        Ok(s.max(0.0).sqrt())
    };
    let mut leak = 0.0_f64;
    let collar = rule.collar().max(1e-6);
    let spec = &flow.chart.coords()[2];
    for k in 0..64 {
        let chi = spec.lo + collar + (spec.span() - 2.0 * collar) * k as f64 / 63.0;
        if chi > chi_lo && chi < chi_hi {
            continue;
        }
        for t in [-2.0, 0.3, 1.9] {
            let x = [t * 0.7, t, chi.clamp(spec.lo + collar, spec.hi - collar)];
            let c = pf.field.coefficients(x)?;
            leak = leak.max(norm_g(x, c)?);
        }
    }

    // (d) max |Y(‖X‖²)| over the support
    let mut max_yh = 0.0_f64;
    for k in 0..48 {
        let chi = chi_lo + (chi_hi - chi_lo) * (k as f64 + 0.5) / 48.0;
        for j in 0..16 {
            let t = -PI + 2.0 * PI * j as f64 / 16.0;
            let x = [0.37, t, chi];
            let h = flow.norm_sq_x.jet(x, 1)?;
            let y = pf.field.coefficients(x)?;
            let mut s = 0.0;
            for i in 0..3 {
                s += y[i] * h.d[i];
            }
            max_yh = max_yh.max(s.abs());
        }
    }

    Ok(ConditionReport {
        div_residual: div_res,
        commute_residual: commute_res,
        support_inside_u_plus: inside,
        support_margin: margin,
        outside_leak: leak,
        max_y_of_norm_sq: max_yh,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchStats {
    pub evaluations: usize,
    pub best_objective: f64,
    pub converged: bool,
}

/// A replayable positivity certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub tool_version: String,
    pub manifold_kind: String,
    pub a: f64,
    pub p: i64,
    pub q: i64,
    pub profile: crate::profiles::ProfileSpec,
    pub shape: BumpShape,
    pub bump: BumpProfile,
    pub conditions: ConditionReport,
    pub mc: McReport,
    pub verdict: Verdict,
    pub search: Option<SearchStats>,
}

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub budget: usize,
    pub shape: BumpShape,
    pub amp_min: f64,
    pub amp_max: f64,
    pub min_margin: f64,
    pub search_resolutions: [usize; 3],
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            budget: 200,
            shape: BumpShape::Ring { order: 6 },
            amp_min: 0.05,
            amp_max: 1.0,
            min_margin: 5e-3,
            search_resolutions: [12, 12, 48],
        }
    }
}

/// Pattern search over (t₀, χ₀, radius, amplitude) maximizing the
/// commuting-route mc, then a full-report validation of the best candidate.
/// Deterministic for fixed options.
pub fn certify_positive(
    e3: &Ellipsoid3D,
    flow: &ZonalFlow<3>,
    rule: &QuadratureRule<3>,
    opts: &CertifyOptions,
) -> Result<Certificate> {
    // hypothesis checks: non-geodesic positive S¹-zonal with supported profile
    let samples = crate::zonal::sample_points(
        &flow.chart,
        &mut crate::rng::Rng::new(0x5eed),
        64,
        rule.collar().max(1e-3),
    );
    let report = classify_3d(e3, flow, &samples)?;
    if report.is_geodesic {
        return Err(Error::Precondition(
            "certify: flow is geodesic (a²p² = q²); the positivity criterion does not apply".into(),
        ));
    }
    if !report.is_s1 {
        return Err(Error::Precondition(format!(
            "certify: flow is not S¹-zonal ({})",
            report.s1_witness
        )));
    }
    if !report.is_positive {
        return Err(Error::Precondition(
            "certify: flow is not positive (U⁺ empty)".into(),
        ));
    }
    if report.zonal_verdict == "reject" {
        return Err(Error::Precondition(format!(
            "certify: flow is not zonal: {:?}",
            report.rejects
        )));
    }
    let profile = flow
        .profile
        .clone()
        .ok_or_else(|| Error::Precondition("certify: flow has no profile descriptor".into()))?;
    if let Some((lo, hi)) = profile.support() {
        let trim = (rule.collar(), FRAC_PI_2 - rule.collar());
        if lo < trim.0 || hi > trim.1 {
            return Err(Error::Precondition(format!(
                "certify: profile support ({lo:.4}, {hi:.4}) reaches the degenerate circles (trimmed interval ({:.4}, {:.4}))",
                trim.0, trim.1
            )));
        }
    } else {
        return Err(Error::Precondition(
            "certify: profile is not compactly supported away from the degenerate circles".into(),
        ));
    }

    // search inside the widest U⁺ interval
    let u_plus = flow.u_plus_intervals(2001)?;
    let (ulo, uhi) = u_plus
        .iter()
        .copied()
        .max_by(|a, b| (a.1 - a.0).partial_cmp(&(b.1 - b.0)).unwrap())
        .unwrap();
    let search_rule =
        QuadratureRule::for_chart(e3.chart(), opts.search_resolutions, rule.collar())?;

    // candidates must sit inside U⁺ and inside the collar-trimmed interval,
    // both with positive margin, or the bump constructor would reject them
    let trim_lo = (ulo + opts.min_margin).max(rule.collar() + opts.min_margin);
    let trim_hi = (uhi - opts.min_margin).min(FRAC_PI_2 - rule.collar() - opts.min_margin);
    let feasible = |theta: &[f64; 4]| -> bool {
        let [_, chi0, r, amp] = *theta;
        r > 1e-4
            && amp >= opts.amp_min
            && amp <= opts.amp_max
            && chi0 - r > trim_lo
            && chi0 + r < trim_hi
    };
    let mut evals = 0usize;
    let mut best_theta = [
        0.0,
        0.5 * (ulo + uhi),
        0.28 * (uhi - ulo),
        (0.5 * (opts.amp_min + opts.amp_max)).clamp(opts.amp_min, opts.amp_max),
    ];
    if !feasible(&best_theta) {
        return Err(Error::Precondition(format!(
            "certify: U⁺ interval ({ulo:.4}, {uhi:.4}) is too thin for a feasible bump"
        )));
    }
    let evaluate = |theta: &[f64; 4], evals: &mut usize| -> Result<f64> {
        let bump = BumpProfile {
            t0: theta[0],
            chi0: theta[1],
            radius: theta[2],
            amplitude: theta[3],
        };
        let pf = build_bump_with_shape(e3, flow, &bump, opts.shape, rule.collar())?;
        *evals += 1;
        mc::mc_commuting(flow, &pf.field, &search_rule)
    };
    let mut best_val = evaluate(&best_theta, &mut evals)?;
    let mut steps = [
        0.5,
        0.12 * (uhi - ulo),
        0.12 * (uhi - ulo),
        0.25 * (opts.amp_max - opts.amp_min).max(1e-3),
    ];
    let mut converged = false;
    'outer: loop {
        let mut improved = false;
        for i in 0..4 {
            for dir in [-1.0, 1.0] {
                if evals >= opts.budget {
                    break 'outer;
                }
                let mut cand = best_theta;
                cand[i] += dir * steps[i];
                if !feasible(&cand) {
                    continue;
                }
                let val = evaluate(&cand, &mut evals)?;
                if val > best_val {
                    best_val = val;
                    best_theta = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            for s in steps.iter_mut() {
                *s *= 0.5;
            }
            if steps.iter().all(|s| *s < 1e-4) {
                converged = true;
                break;
            }
        }
    }

    let bump = BumpProfile {
        t0: best_theta[0],
        chi0: best_theta[1],
        radius: best_theta[2],
        amplitude: best_theta[3],
    };
    let pf = build_bump_with_shape(e3, flow, &bump, opts.shape, rule.collar())?;
    let conditions = condition_report(&pf, flow, rule)?;
    let mc_report = mc::mc_report(flow, &pf.field, rule)?;
    let verdict =
        if mc_report.verdict == Verdict::Positive && conditions.satisfied(flow.tol.identity_abs) {
            Verdict::Positive
        } else {
            Verdict::Indeterminate
        };
    let (p, q) = integer_pq(flow)?;
    Ok(Certificate {
        schema_version: 1,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        manifold_kind: "ellipsoid3d".into(),
        a: e3.a,
        p,
        q,
        profile,
        shape: opts.shape,
        bump,
        conditions,
        mc: mc_report,
        verdict,
        search: Some(SearchStats {
            evaluations: evals,
            best_objective: best_val,
            converged,
        }),
    })
}

/// Rebuild the perturbation stored in a certificate and re-validate it at
/// the given rule. The reproduced mc must match within the stored
/// Richardson error (plus the fresh one).
pub fn replay_certificate(
    e3: &Ellipsoid3D,
    flow: &ZonalFlow<3>,
    cert: &Certificate,
    rule: &QuadratureRule<3>,
) -> Result<(Certificate, f64)> {
    let pf = build_bump_with_shape(e3, flow, &cert.bump, cert.shape, rule.collar())?;
    let conditions = condition_report(&pf, flow, rule)?;
    let mc_report = mc::mc_report(flow, &pf.field, rule)?;
    let drift = (mc_report.mc_direct - cert.mc.mc_direct).abs();
    let budget_err = cert.mc.richardson_error + mc_report.richardson_error;
    let verdict = if mc_report.verdict == Verdict::Positive
        && conditions.satisfied(flow.tol.identity_abs)
        && drift <= budget_err.max(1e-12)
    {
        Verdict::Positive
    } else {
        Verdict::Indeterminate
    };
    let mut out = cert.clone();
    out.conditions = conditions;
    out.mc = mc_report;
    out.verdict = verdict;
    out.search = None;
    Ok((out, drift))
}

/// A divergence-free field on a 2D surface of revolution from the stream
/// function ψ = amp·cos(k(θ − θ₀))·K(r), K = (1−x²)^order supported in an
/// r-band: Y = (−∂_θψ ∂_r + ∂_rψ ∂_θ)/√det g. Supplied by the user through
/// the CLI; the 2D module does not construct commuting perturbations.
pub fn stream_bump_2d(
    e2: &crate::manifolds::Ellipsoid2D,
    r0: f64,
    radius: f64,
    harmonic: u32,
    theta0: f64,
    amplitude: f64,
    order: u32,
) -> Result<VectorField<2>> {
    if !(radius > 0.0) {
        return Err(Error::Construction(
            "stream bump radius must be positive".into(),
        ));
    }
    if r0 - radius <= -e2.d || r0 + radius >= e2.d {
        return Err(Error::Construction(format!(
            "stream bump r-support ({:.4}, {:.4}) leaves the chart interval ({:.4}, {:.4})",
            r0 - radius,
            r0 + radius,
            -e2.d,
            e2.d
        )));
    }
    let chart = e2.chart().clone();
    let m = order.max(2) as i32;
    let k = harmonic.max(1) as f64;
    let c1_chart = chart.clone();
    Ok(VectorField::from_raw(
        &chart,
        "Y-stream2d",
        2,
        std::sync::Arc::new(move |x| {
            let seeded = Jet::<2>::seed(x);
            let [r, theta] = seeded;
            let poly = |s: Series| -> Series {
                let u = s * s;
                if u.d[0] >= 1.0 {
                    return Series::ZERO;
                }
                (-u + 1.0).powi(m)
            };
            let x01 = (r - r0) * (1.0 / radius);
            let kr = x01.compose_series(poly(Series::var(x01.v)));
            let kpr =
                x01.compose_series(poly(Series::var(x01.v)).derivative_shift() * (1.0 / radius));
            let phase = (theta - theta0) * k;
            let dens = {
                let mj = c1_chart.metric_jet(x)?;
                mj.sqrt_det
            };
            let hinv = dens.recip();
            let y_r = (phase.sin() * kr) * (amplitude * k) * hinv;
            let y_theta = (phase.cos() * kpr) * amplitude * hinv;
            Ok(crate::field::VecJet::from_jets([y_r, y_theta]))
        }),
    ))
}

/// Vector field helper used by checks: g-norm of `[X,Y]` at a point.
pub fn commute_defect_at(flow: &ZonalFlow<3>, y: &VectorField<3>, x: [f64; 3]) -> Result<f64> {
    let b = ops::lie_bracket(&flow.x, y)?;
    let c = b.jet(x, 0)?.c;
    let mj = flow.chart.metric_jet(x)?;
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += mj.g[i][j].v * c[i] * c[j];
        }
    }
    Ok(s.max(0.0).sqrt())
}
