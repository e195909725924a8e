//! Tensor-calculus operations over chart fields.
//!
//! Bracket convention: `[V,W](h) = V(W(h)) − W(V(h))`, i.e. in coefficients
//! `[V,W]^k = V^i ∂_i W^k − W^i ∂_i V^k`.

use crate::error::{Error, Result};
use crate::field::{check_chart, ScalarField, VecJet, VectorField};
use crate::jet::Jet;
use std::sync::Arc;

/// grad h = g^{ij} ∂_j h ∂_i. Result order is one less than `h`.
pub fn grad<const D: usize>(h: &ScalarField<D>) -> Result<VectorField<D>> {
    if h.order() < 1 {
        return Err(Error::Capability {
            field: h.name().into(),
            needed: 1,
            available: h.order(),
        });
    }
    let chart = h.chart().clone();
    let hf = h.clone();
    let order = h.order() - 1;
    Ok(VectorField::from_raw(
        &chart.clone(),
        &format!("grad({})", h.name()),
        order,
        Arc::new(move |x| {
            let hj = hf.jet(x, hf.order())?;
            let mj = chart.metric_jet(x)?;
            let mut out = VecJet::zero();
            for k in 0..D {
                for j in 0..D {
                    out.c[k] += mj.ginv[k][j].v * hj.d[j];
                    for i in 0..D {
                        out.jac[k][i] +=
                            mj.ginv[k][j].d[i] * hj.d[j] + mj.ginv[k][j].v * hj.h[j][i];
                    }
                }
            }
            Ok(out)
        }),
    ))
}

/// div V = (1/√g) ∂_i (√g V^i). Result order is one less than `V`.
pub fn divergence<const D: usize>(v: &VectorField<D>) -> Result<ScalarField<D>> {
    if v.order() < 1 {
        return Err(Error::Capability {
            field: v.name().into(),
            needed: 1,
            available: v.order(),
        });
    }
    let chart = v.chart().clone();
    let vf = v.clone();
    let order = v.order() - 1;
    Ok(ScalarField::from_raw(
        &chart.clone(),
        &format!("div({})", v.name()),
        order,
        Arc::new(move |x| {
            let vj = vf.jet(x, vf.order())?;
            let mj = chart.metric_jet(x)?;
            // d log √g as a jet (value + gradient used here)
            let ls = mj.sqrt_det;
            let mut out = Jet::constant(0.0);
            // value: Σ_i ∂_i v^i + v^i ∂_i(log √g)
            for i in 0..D {
                out.v += vj.jac[i][i] + vj.c[i] * ls.d[i] / ls.v;
            }
            // gradient: ∂_m div = Σ_i ∂_m∂_i v^i + ∂_m v^i ∂_i log√g + v^i ∂_m∂_i log√g
            for m in 0..D {
                let mut s = 0.0;
                for i in 0..D {
                    let dlog_i = ls.d[i] / ls.v;
                    let ddlog_im = ls.h[i][m] / ls.v - ls.d[i] * ls.d[m] / (ls.v * ls.v);
                    s += vj.hess[i][i][m] + vj.jac[i][m] * dlog_i + vj.c[i] * ddlog_im;
                }
                out.d[m] = s;
            }
            Ok(out)
        }),
    ))
}

/// `[V,W]^k = V^i ∂_i W^k − W^i ∂_i V^k`. Result order is min(orders) − 1.
pub fn lie_bracket<const D: usize>(
    v: &VectorField<D>,
    w: &VectorField<D>,
) -> Result<VectorField<D>> {
    check_chart(v.chart(), w.chart())?;
    let min_order = v.order().min(w.order());
    if min_order < 1 {
        return Err(Error::Capability {
            field: format!("[{},{}]", v.name(), w.name()),
            needed: 1,
            available: min_order,
        });
    }
    let (vf, wf) = (v.clone(), w.clone());
    let order = min_order - 1;
    Ok(VectorField::from_raw(
        v.chart(),
        &format!("[{},{}]", v.name(), w.name()),
        order,
        Arc::new(move |x| {
            let a = vf.jet(x, vf.order())?;
            let b = wf.jet(x, wf.order())?;
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
            Ok(out)
        }),
    ))
}

/// (∇_V W)^k = V^i ∂_i W^k + Γ^k_ij V^i W^j.
pub fn covariant_derivative<const D: usize>(
    v: &VectorField<D>,
    w: &VectorField<D>,
) -> Result<VectorField<D>> {
    check_chart(v.chart(), w.chart())?;
    if w.order() < 1 {
        return Err(Error::Capability {
            field: w.name().into(),
            needed: 1,
            available: w.order(),
        });
    }
    let chart = v.chart().clone();
    let (vf, wf) = (v.clone(), w.clone());
    let order = v.order().min(w.order() - 1).min(1);
    Ok(VectorField::from_raw(
        &chart.clone(),
        &format!("nabla_{{{}}}({})", v.name(), w.name()),
        order,
        Arc::new(move |x| {
            let a = vf.jet(x, vf.order())?;
            let b = wf.jet(x, wf.order())?;
            let (gamma, dgamma) = chart.christoffel_jet(x)?;
            let mut out = VecJet::zero();
            for k in 0..D {
                for i in 0..D {
                    out.c[k] += a.c[i] * b.jac[k][i];
                    for j in 0..D {
                        out.c[k] += gamma[k][i][j] * a.c[i] * b.c[j];
                    }
                    for m in 0..D {
                        out.jac[k][m] += a.jac[i][m] * b.jac[k][i] + a.c[i] * b.hess[k][i][m];
                        for j in 0..D {
                            out.jac[k][m] += dgamma[m][k][i][j] * a.c[i] * b.c[j]
                                + gamma[k][i][j] * (a.jac[i][m] * b.c[j] + a.c[i] * b.jac[j][m]);
                        }
                    }
                }
            }
            Ok(out)
        }),
    ))
}

/// g(V, W) as a scalar field; order limited by both fields and the metric.
pub fn inner<const D: usize>(v: &VectorField<D>, w: &VectorField<D>) -> Result<ScalarField<D>> {
    check_chart(v.chart(), w.chart())?;
    let chart = v.chart().clone();
    let (vf, wf) = (v.clone(), w.clone());
    let order = v.order().min(w.order());
    Ok(ScalarField::from_raw(
        &chart.clone(),
        &format!("g({},{})", v.name(), w.name()),
        order,
        Arc::new(move |x| {
            let a = vf.jet(x, vf.order())?;
            let b = wf.jet(x, wf.order())?;
            let mj = chart.metric_jet(x)?;
            let mut out = Jet::constant(0.0);
            for i in 0..D {
                for j in 0..D {
                    let gij = mj.g[i][j];
                    out.v += gij.v * a.c[i] * b.c[j];
                    for m in 0..D {
                        out.d[m] += gij.d[m] * a.c[i] * b.c[j]
                            + gij.v * (a.jac[i][m] * b.c[j] + a.c[i] * b.jac[j][m]);
                        for n in 0..D {
                            out.h[m][n] += gij.h[m][n] * a.c[i] * b.c[j]
                                + gij.d[m] * (a.jac[i][n] * b.c[j] + a.c[i] * b.jac[j][n])
                                + gij.d[n] * (a.jac[i][m] * b.c[j] + a.c[i] * b.jac[j][m])
                                + gij.v
                                    * (a.hess[i][m][n] * b.c[j]
                                        + a.jac[i][m] * b.jac[j][n]
                                        + a.jac[i][n] * b.jac[j][m]
                                        + a.c[i] * b.hess[j][m][n]);
                        }
                    }
                }
            }
            Ok(out)
        }),
    ))
}

/// ‖V‖² = g(V,V).
pub fn norm_sq<const D: usize>(v: &VectorField<D>) -> Result<ScalarField<D>> {
    inner(v, v)
}

/// Directional derivative V(h) as a scalar field (order capped at 1: the
/// gradient of V(h) consumes h's second derivatives).
pub fn directional<const D: usize>(
    v: &VectorField<D>,
    h: &ScalarField<D>,
) -> Result<ScalarField<D>> {
    check_chart(v.chart(), h.chart())?;
    if h.order() < 1 {
        return Err(Error::Capability {
            field: h.name().into(),
            needed: 1,
            available: h.order(),
        });
    }
    let (vf, hf) = (v.clone(), h.clone());
    let order = v.order().min(h.order() - 1).min(1);
    Ok(ScalarField::from_raw(
        v.chart(),
        &format!("{}({})", v.name(), h.name()),
        order,
        Arc::new(move |x| {
            let a = vf.jet(x, vf.order())?;
            let hj = hf.jet(x, hf.order())?;
            let mut out = Jet::constant(0.0);
            for i in 0..D {
                out.v += a.c[i] * hj.d[i];
                for m in 0..D {
                    out.d[m] += a.jac[i][m] * hj.d[i] + a.c[i] * hj.h[i][m];
                }
            }
            Ok(out)
        }),
    ))
}

/// Pointwise Killing defect at `x`: max over coordinate-basis pairs of
/// |g(∇_i X, ∂_j) + g(∇_j X, ∂_i)|.
pub fn killing_defect_at<const D: usize>(x_field: &VectorField<D>, x: [f64; D]) -> Result<f64> {
    let chart = x_field.chart();
    let xj = x_field.jet(x, 1)?;
    let mj = chart.metric_jet(x)?;
    let gamma = chart.christoffel(x)?;
    // (∇_i X)^k = ∂_i X^k + Γ^k_ij X^j
    let mut nabla = [[0.0; D]; D]; // nabla[i][k]
    for i in 0..D {
        for k in 0..D {
            let mut s = xj.jac[k][i];
            for j in 0..D {
                s += gamma[k][i][j] * xj.c[j];
            }
            nabla[i][k] = s;
        }
    }
    let mut worst = 0.0_f64;
    for i in 0..D {
        for j in i..D {
            let mut r = 0.0;
            for k in 0..D {
                r += mj.g[k][j].v * nabla[i][k] + mj.g[k][i].v * nabla[j][k];
            }
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

/// Max Killing defect over a sample set. Errors on an empty sample set.
pub fn killing_residual<const D: usize>(
    x_field: &VectorField<D>,
    samples: &[[f64; D]],
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("killing_residual: empty sample set".into()));
    }
    let mut worst = 0.0_f64;
    for &p in samples {
        worst = worst.max(killing_defect_at(x_field, p)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Chart, CoordSpec};
    use std::f64::consts::PI;

    fn torus2() -> Chart<2> {
        Chart::new(
            "flat-torus-2",
            [
                CoordSpec::periodic("x", -PI, PI),
                CoordSpec::periodic("y", -PI, PI),
            ],
            Arc::new(|_p| {
                [
                    [Jet::constant(1.0), Jet::constant(0.0)],
                    [Jet::constant(0.0), Jet::constant(1.0)],
                ]
            }),
        )
    }

    #[test]
    fn coordinate_fields_commute() {
        let ch = torus2();
        let b0 = VectorField::basis(&ch, 0);
        let b1 = VectorField::basis(&ch, 1);
        let br = lie_bracket(&b0, &b1).unwrap();
        let j = br.jet([0.4, 1.0], 1).unwrap();
        assert_eq!(j.c, [0.0, 0.0]);
    }

    #[test]
    fn bracket_leibniz_rule_fx_y() {
        // [fX, Y] = f[X,Y] − Y(f) X  (proof of the zonal mc formula)
        let ch = torus2();
        let x = VectorField::from_jet_fn(&ch, "X", |p| [p[1].sin(), p[0].cos() * p[1]]);
        let y = VectorField::from_jet_fn(&ch, "Y", |p| [(p[0] + p[1]).cos(), p[0].sin()]);
        let f = ScalarField::from_jet_fn(&ch, "f", |p| p[0].cos() + p[1].sin() * 2.0);
        let fx = x.mul_scalar(&f).unwrap();
        let lhs = lie_bracket(&fx, &y).unwrap();
        let fxy = lie_bracket(&x, &y).unwrap().mul_scalar(&f).unwrap();
        let yf = directional(&y, &f).unwrap();
        let rhs = fxy.add(&x.mul_scalar(&yf.scale(-1.0)).unwrap()).unwrap();
        let p = [0.7, -0.4];
        let a = lhs.jet(p, 0).unwrap();
        let b = rhs.jet(p, 0).unwrap();
        for k in 0..2 {
            assert!((a.c[k] - b.c[k]).abs() < 1e-12, "{} vs {}", a.c[k], b.c[k]);
        }
    }

    #[test]
    fn bracket_antisymmetric_and_self_zero() {
        let ch = torus2();
        let v = VectorField::from_jet_fn(&ch, "V", |p| [p[1].sin() * p[0].cos(), p[0].sin()]);
        let w = VectorField::from_jet_fn(&ch, "W", |p| [(p[0] * 2.0).cos(), (p[0] + p[1]).sin()]);
        let vw = lie_bracket(&v, &w).unwrap();
        let wv = lie_bracket(&w, &v).unwrap();
        let vv = lie_bracket(&v, &v).unwrap();
        let p = [0.2, 0.9];
        let a = vw.jet(p, 0).unwrap();
        let b = wv.jet(p, 0).unwrap();
        let c = vv.jet(p, 0).unwrap();
        for k in 0..2 {
            assert!((a.c[k] + b.c[k]).abs() < 1e-13);
            assert!(c.c[k].abs() < 1e-13);
        }
    }

    #[test]
    fn bracket_of_derived_fields_hits_capability_limit() {
        let ch = torus2();
        let v = VectorField::from_jet_fn(&ch, "V", |p| [p[1].sin(), p[0].cos()]);
        let w = VectorField::from_jet_fn(&ch, "W", |p| [p[0].sin(), p[1].cos()]);
        let b1 = lie_bracket(&v, &w).unwrap(); // order 1
        let b2 = lie_bracket(&b1, &w).unwrap(); // order 0
        assert!(b2.jet([0.1, 0.2], 0).is_ok());
        assert!(matches!(
            b2.jet([0.1, 0.2], 1),
            Err(Error::Capability { .. })
        ));
        assert!(lie_bracket(&b2, &w).is_err());
    }

    #[test]
    fn grad_pairing_identity_flat() {
        // g(grad h, V) = V(h)
        let ch = torus2();
        let h = ScalarField::from_jet_fn(&ch, "h", |p| (p[0] * 2.0).sin() * p[1].cos());
        let v = VectorField::from_jet_fn(&ch, "V", |p| [p[1].sin(), (p[0] - p[1]).cos()]);
        let gh = grad(&h).unwrap();
        let lhs = inner(&gh, &v).unwrap();
        let rhs = directional(&v, &h).unwrap();
        let p = [1.3, -0.8];
        assert!((lhs.value(p).unwrap() - rhs.value(p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn empty_sample_set_is_an_argument_error() {
        let ch = torus2();
        let x = VectorField::basis(&ch, 0);
        assert!(matches!(killing_residual(&x, &[]), Err(Error::Argument(_))));
    }

    #[test]
    fn divergence_of_rotational_bump_vanishes() {
        // ρ(R₁)(y ∂_x − (x−1) ∂_y) with R₁² = (x−1)² + y², flat density.
        let ch = torus2();
        let v = VectorField::from_jet_fn(&ch, "rot-bump", |p| {
            let dx = p[0] - 1.0;
            let y = p[1];
            let r2 = dx * dx + y * y;
            // smooth radial cutoff exp(−r²/(1−r²/4)) style profile of r²
            let rho = (-(r2 * 0.7)).exp() * ((r2 * 0.3).cos() + 1.5);
            [rho * y, -(rho * dx)]
        });
        let div = divergence(&v).unwrap();
        for &p in &[[1.2, 0.3], [0.7, -0.5], [1.0, 0.0]] {
            assert!(div.value(p).unwrap().abs() < 1e-12);
        }
    }
}
