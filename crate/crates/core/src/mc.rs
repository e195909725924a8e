//! Misiolek-curvature evaluation.
//!
//! Three routes are computed and cross-validated:
//!
//! * `mc_direct` — the defining quadratic form
//!   `−∫ g([Z,Y],[Z,Y]) μ − ∫ g(Z, [[Z,Y],Y]) μ`, with the pairing form
//!   `⟨∇_Z[Z,Y] + ∇_{[Z,Y]}Z, Y⟩` as an internal cross-check (equal for
//!   divergence-free fields on a closed manifold);
//! * `mc_zonal` — the pointwise expansion for Z = fX:
//!   `−|f[X,Y]|² − ⟨f²X,[[X,Y],Y]⟩ + 2⟨Y(f²)X,[X,Y]⟩ − ½∫ Y²(f²)‖X‖² μ`;
//! * `mc_commuting` — for `[X,Y] = 0` and div Y = 0: `½ ∫_{U₀} F · Y(‖X‖²)² μ`.
//!
//! The ½ factors follow from Y²(f²) = 2(Y(f)² + f Y²(f)); the derivation is
//! pinned by the route-agreement tests.

use crate::chart::MetricJet;
use crate::error::{Error, Result};
use crate::field::{VecJet, VectorField};
use crate::ops;
use crate::quad::QuadratureRule;
use crate::zonal::ZonalFlow;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Positive,
    Nonpositive,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McDirect {
    /// `−|[Z,Y]|² − ⟨Z,[[Z,Y],Y]⟩`.
    pub value: f64,
    /// `−|[Z,Y]|²` alone (never positive).
    pub first_term: f64,
    /// `−⟨Z,[[Z,Y],Y]⟩` alone.
    pub second_term: f64,
    /// Pairing form `⟨∇_Z[Z,Y] + ∇_{[Z,Y]}Z, Y⟩`.
    pub cross: f64,
    /// max |div Y| over a node subsample (warning indicator).
    pub div_y_residual: f64,
}

/// Bracket `[A,B]` with value and Jacobian from order-2 input jets.
fn bracket_order1<const D: usize>(a: &VecJet<D>, b: &VecJet<D>) -> VecJet<D> {
    let mut out = VecJet::zero();
    for k in 0..D {
        for i in 0..D {
            out.c[k] += a.c[i] * b.jac[k][i] - b.c[i] * a.jac[k][i];
            for m in 0..D {
                out.jac[k][m] += a.jac[i][m] * b.jac[k][i] + a.c[i] * b.hess[k][i][m]
                    - b.jac[i][m] * a.jac[k][i]
                    - b.c[i] * a.hess[k][i][m];
            }
        }
    }
    out
}

fn bracket_value<const D: usize>(a: &VecJet<D>, b: &VecJet<D>) -> [f64; D] {
    std::array::from_fn(|k| {
        let mut s = 0.0;
        for i in 0..D {
            s += a.c[i] * b.jac[k][i] - b.c[i] * a.jac[k][i];
        }
        s
    })
}

fn pair_g<const D: usize>(mj: &MetricJet<D>, u: &[f64; D], v: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        for j in 0..D {
            s += mj.g[i][j].v * u[i] * v[j];
        }
    }
    s
}

/// (∇_A B)^k from A values, B values+Jacobian and Christoffel symbols.
fn covariant_value<const D: usize>(
    gamma: &[[[f64; D]; D]; D],
    a: &VecJet<D>,
    b_c: &[f64; D],
    b_jac: &[[f64; D]; D],
) -> [f64; D] {
    std::array::from_fn(|k| {
        let mut s = 0.0;
        for i in 0..D {
            s += a.c[i] * b_jac[k][i];
            for j in 0..D {
                s += gamma[k][i][j] * a.c[i] * b_c[j];
            }
        }
        s
    })
}

fn require_order2<const D: usize>(v: &VectorField<D>) -> Result<()> {
    if v.order() < 2 {
        return Err(Error::Capability {
            field: v.name().into(),
            needed: 2,
            available: v.order(),
        });
    }
    Ok(())
}

/// Eq-(1.2) integrand of mc(Z,Y) at a point, including the volume density.
pub fn mc_direct_integrand_at<const D: usize>(
    z: &VectorField<D>,
    y: &VectorField<D>,
    x: [f64; D],
) -> Result<f64> {
    let zj = z.jet(x, 2)?;
    let yj = y.jet(x, 2)?;
    let mj = z.chart().metric_jet(x)?;
    let b = bracket_order1(&zj, &yj);
    let c = bracket_value(&b, &yj);
    let t1 = -pair_g(&mj, &b.c, &b.c);
    let t2 = -pair_g(&mj, &zj.c, &c);
    Ok((t1 + t2) * mj.sqrt_det.v)
}

/// mc(Z,Y) by the defining formula, with the pairing form as cross-check.
pub fn mc_direct<const D: usize>(
    z: &VectorField<D>,
    y: &VectorField<D>,
    rule: &QuadratureRule<D>,
) -> Result<McDirect> {
    require_order2(z)?;
    require_order2(y)?;
    let chart = rule.chart().clone();
    let div_y = ops::divergence(y)?;
    let mut div_res = 0.0_f64;
    for p in rule.sample_nodes(200) {
        div_res = div_res.max(div_y.value(p)?.abs());
    }

    let mut first = 0.0;
    let mut second = 0.0;
    let mut cross = 0.0;
    rule.for_each_node(|x, w| {
        let zj = z.jet(x, 2)?;
        let yj = y.jet(x, 2)?;
        let mj = chart.metric_jet(x)?;
        let gamma = chart.christoffel(x)?;
        let b = bracket_order1(&zj, &yj);
        let c = bracket_value(&b, &yj);
        let dv = w * mj.sqrt_det.v;
        first += dv * -pair_g(&mj, &b.c, &b.c);
        second += dv * -pair_g(&mj, &zj.c, &c);
        // ⟨∇_Z B + ∇_B Z, Y⟩
        let nzb = covariant_value(&gamma, &zj, &b.c, &b.jac);
        let nbz = covariant_value(&gamma, &b, &zj.c, &zj.jac);
        let sum: [f64; D] = std::array::from_fn(|k| nzb[k] + nbz[k]);
        cross += dv * pair_g(&mj, &sum, &yj.c);
        if !(first.is_finite() && second.is_finite() && cross.is_finite()) {
            return Err(Error::NonFinite {
                what: "mc integrand".into(),
                point: x.to_vec(),
            });
        }
        Ok(())
    })?;
    Ok(McDirect {
        value: first + second,
        first_term: first,
        second_term: second,
        cross,
        div_y_residual: div_res,
    })
}

/// mc(fX, Y) by the four-term zonal expansion. Pointwise identical to the
/// defining integrand, so it agrees with `mc_direct` to rounding on any rule.
pub fn mc_zonal<const D: usize>(
    flow: &ZonalFlow<D>,
    y: &VectorField<D>,
    rule: &QuadratureRule<D>,
) -> Result<f64> {
    require_order2(&flow.x)?;
    require_order2(y)?;
    let chart = rule.chart().clone();
    let mut acc = 0.0;
    rule.for_each_node(|p, w| {
        let xj = flow.x.jet(p, 2)?;
        let yj = y.jet(p, 2)?;
        let fj = flow.f.jet(p, 2)?;
        let mj = chart.metric_jet(p)?;
        let f2 = fj * fj; // jet of f²
        let b = bracket_order1(&xj, &yj); // [X,Y]
        let c = bracket_value(&b, &yj); // [[X,Y],Y]
        let norm_x2 = pair_g(&mj, &xj.c, &xj.c);
        // Y(f²) and Y²(f²) = Y^i ∂_i Y^j ∂_j f² + Y^i Y^j ∂_i∂_j f²
        let mut y_f2 = 0.0;
        let mut yy_f2 = 0.0;
        for i in 0..D {
            y_f2 += yj.c[i] * f2.d[i];
            for j in 0..D {
                yy_f2 += yj.c[i] * yj.jac[j][i] * f2.d[j] + yj.c[i] * yj.c[j] * f2.h[i][j];
            }
        }
        let t1 = -f2.v * pair_g(&mj, &b.c, &b.c);
        let t2 = -f2.v * pair_g(&mj, &xj.c, &c);
        let t3 = 2.0 * y_f2 * pair_g(&mj, &xj.c, &b.c);
        let t4 = -0.5 * yy_f2 * norm_x2;
        acc += w * mj.sqrt_det.v * (t1 + t2 + t3 + t4);
        if !acc.is_finite() {
            return Err(Error::NonFinite {
                what: "mc_zonal integrand".into(),
                point: p.to_vec(),
            });
        }
        Ok(())
    })?;
    Ok(acc)
}

/// Commutation and divergence residuals of a candidate perturbation Y
/// against the Killing factor X (g-norms, max over a node subsample).
pub fn commuting_preconditions<const D: usize>(
    flow: &ZonalFlow<D>,
    y: &VectorField<D>,
    rule: &QuadratureRule<D>,
) -> Result<(f64, f64)> {
    let div_y = ops::divergence(y)?;
    let chart = rule.chart().clone();
    let mut commute_res = 0.0_f64;
    let mut div_res = 0.0_f64;
    for p in rule.sample_nodes(300) {
        let xj = flow.x.jet(p, 1)?;
        let yj = y.jet(p, 1)?;
        let mj = chart.metric_jet(p)?;
        let b = bracket_value(&xj, &yj);
        commute_res = commute_res.max(pair_g(&mj, &b, &b).max(0.0).sqrt());
        div_res = div_res.max(div_y.value(p)?.abs());
    }
    Ok((commute_res, div_res))
}

/// mc(fX, Y) for X-commuting divergence-free Y:
/// ½ ∫_{U₀} F · Y(‖X‖²)² μ, the integrand set to 0 where grad‖X‖² = 0.
pub fn mc_commuting<const D: usize>(
    flow: &ZonalFlow<D>,
    y: &VectorField<D>,
    rule: &QuadratureRule<D>,
) -> Result<f64> {
    let (commute_res, div_res) = commuting_preconditions(flow, y, rule)?;
    let tol = flow.tol.identity_abs;
    if commute_res > tol {
        return Err(Error::Precondition(format!(
            "[X,Y] residual {commute_res:.3e} exceeds {tol:.1e}"
        )));
    }
    if div_res > tol {
        return Err(Error::Precondition(format!(
            "div Y residual {div_res:.3e} exceeds {tol:.1e}"
        )));
    }
    let chart = rule.chart().clone();
    let mut acc = 0.0;
    rule.for_each_node(|p, w| {
        let mj = chart.metric_jet(p)?;
        let h = flow.norm_sq_x.jet(p, 1)?;
        let f2 = flow.f_sq.jet(p, 1)?;
        let yj = y.jet(p, 0)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..D {
            for j in 0..D {
                num += mj.ginv[i][j].v * f2.d[i] * h.d[j];
                den += mj.ginv[i][j].v * h.d[i] * h.d[j];
            }
        }
        if den < flow.tol.grad_cut * flow.tol.grad_cut {
            return Ok(()); // outside U₀
        }
        let f_factor = num / den;
        let mut y_h = 0.0;
        for i in 0..D {
            y_h += yj.c[i] * h.d[i];
        }
        acc += w * mj.sqrt_det.v * 0.5 * f_factor * y_h * y_h;
        Ok(())
    })?;
    Ok(acc)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McReport {
    pub schema_version: u32,
    pub mc_direct: f64,
    pub mc_first_term: f64,
    pub mc_second_term: f64,
    pub mc_cross_form: f64,
    pub mc_zonal: Option<f64>,
    pub mc_commuting: Option<f64>,
    /// Why mc_commuting is absent, when it is.
    pub commuting_note: Option<String>,
    /// |direct − other| / max(|direct|, |other|).
    pub cross_discrepancy: f64,
    pub zonal_discrepancy: Option<f64>,
    pub commuting_discrepancy: Option<f64>,
    /// |mc_direct(2h) − mc_direct(h)| under resolution doubling.
    pub richardson_error: f64,
    pub div_y_residual: f64,
    pub resolutions: Vec<usize>,
    pub collar: f64,
    pub verdict: Verdict,
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Evaluate every applicable formula, estimate quadrature error by
/// resolution doubling, and produce a sign verdict. The verdict is
/// `positive` only when mc_direct clears its own error bar and all computed
/// routes agree within max(quad_rel·|mc|, richardson).
pub fn mc_report<const D: usize>(
    flow: &ZonalFlow<D>,
    y: &VectorField<D>,
    rule: &QuadratureRule<D>,
) -> Result<McReport> {
    let direct = mc_direct(&flow.z, y, rule)?;
    let direct2 = mc_direct(&flow.z, y, &rule.doubled()?)?;
    let richardson = (direct2.value - direct.value).abs();
    let zonal = mc_zonal(flow, y, rule)?;

    let geodesicish = flow.sampled_norm_variance(64)? < 1e-12;
    let (commuting, note) = if geodesicish {
        (
            None,
            Some("U₀ empty: ‖X‖² constant (geodesic flow)".to_string()),
        )
    } else {
        match mc_commuting(flow, y, rule) {
            Ok(v) => (Some(v), None),
            Err(Error::Precondition(msg)) => (None, Some(msg)),
            Err(e) => return Err(e),
        }
    };

    let agree_abs = |a: f64, b: f64| (a - b).abs();
    let threshold = (flow.tol.quad_rel * direct.value.abs()).max(richardson);
    let mut agree = agree_abs(direct.value, direct.cross) <= threshold.max(1e-14);
    agree &= agree_abs(direct.value, zonal) <= threshold.max(1e-14);
    if let Some(c) = commuting {
        agree &= agree_abs(direct.value, c) <= threshold.max(1e-14);
    }

    let verdict = if !agree {
        Verdict::Indeterminate
    } else if direct.value - richardson > 0.0 {
        Verdict::Positive
    } else if direct.value + richardson < 0.0 {
        Verdict::Nonpositive
    } else {
        Verdict::Indeterminate
    };

    Ok(McReport {
        schema_version: 1,
        mc_direct: direct.value,
        mc_first_term: direct.first_term,
        mc_second_term: direct.second_term,
        mc_cross_form: direct.cross,
        mc_zonal: Some(zonal),
        mc_commuting: commuting,
        commuting_note: note,
        cross_discrepancy: rel_diff(direct.value, direct.cross),
        zonal_discrepancy: Some(rel_diff(direct.value, zonal)),
        commuting_discrepancy: commuting.map(|c| rel_diff(direct.value, c)),
        richardson_error: richardson,
        div_y_residual: direct.div_y_residual,
        resolutions: rule.resolutions().to_vec(),
        collar: rule.collar(),
        verdict,
    })
}
