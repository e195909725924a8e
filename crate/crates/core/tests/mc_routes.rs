//! Route-agreement tests for the mc engine.
#![allow(clippy::needless_range_loop)]
//!
//! The zonal expansion and the commuting-route integral are validated
//! against the defining formula, which is itself pinned here by a
//! brute-force oracle that re-implements brackets with central finite
//! differences (no jets, no shared code path).

use zonalmc_core::field::{ScalarField, VectorField};
use zonalmc_core::jet::Jet;
use zonalmc_core::manifolds::{make_ellipsoid_3d, make_flat_torus_2};
use zonalmc_core::mc;
use zonalmc_core::perturb::{build_ring_bump, BumpProfile};
use zonalmc_core::profiles::ProfileSpec;
use zonalmc_core::quad::QuadratureRule;
use zonalmc_core::zonal::{zonal_flow_3d, Tolerances, ZonalFlow};

/// Finite-difference brackets on the flat 2-torus, evaluated from plain
/// closures. Independent oracle for mc_direct.
fn fd_mc_flat_torus(
    z: impl Fn([f64; 2]) -> [f64; 2] + Copy,
    y: impl Fn([f64; 2]) -> [f64; 2] + Copy,
    n: usize,
) -> f64 {
    let h = 1e-4;
    let bracket = move |a: &dyn Fn([f64; 2]) -> [f64; 2],
                        b: &dyn Fn([f64; 2]) -> [f64; 2],
                        p: [f64; 2]|
          -> [f64; 2] {
        let mut out = [0.0; 2];
        for k in 0..2 {
            let mut s = 0.0;
            for i in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[i] += h;
                pm[i] -= h;
                let db = (b(pp)[k] - b(pm)[k]) / (2.0 * h);
                let da = (a(pp)[k] - a(pm)[k]) / (2.0 * h);
                s += a(p)[i] * db - b(p)[i] * da;
            }
            out[k] = s;
        }
        out
    };
    // trapezoid over the torus; flat metric, density 1
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = [
                -std::f64::consts::PI + (i as f64 + 0.5) * step,
                -std::f64::consts::PI + (j as f64 + 0.5) * step,
            ];
            let zb = |q: [f64; 2]| z(q);
            let yb = |q: [f64; 2]| y(q);
            let b = bracket(&zb, &yb, p);
            let bf = move |q: [f64; 2]| bracket(&|r| z(r), &|r| y(r), q);
            let c = bracket(&bf, &yb, p);
            let zv = z(p);
            acc += step * step * (-(b[0] * b[0] + b[1] * b[1]) - (zv[0] * c[0] + zv[1] * c[1]));
        }
    }
    acc
}

#[test]
fn direct_formula_matches_fd_oracle_on_flat_torus() {
    let t = make_flat_torus_2();
    let ch = t.chart();
    // zonal flow Z = sin(x2) ∂_1 and a generic divergence-free Y from a
    // stream function ψ = sin(x1)cos(x2): Y = (−ψ_y, ψ_x)
    let z = VectorField::from_jet_fn(ch, "Z", |p| [p[1].sin(), Jet::constant(0.0)]);
    let y = VectorField::from_jet_fn(ch, "Y", |p| {
        [p[0].sin() * p[1].sin(), p[0].cos() * p[1].cos()]
    });
    let rule = QuadratureRule::for_chart(ch, [48, 48], 0.0).unwrap();
    let direct = mc::mc_direct(&z, &y, &rule).unwrap();
    let oracle = fd_mc_flat_torus(
        |p| [p[1].sin(), 0.0],
        |p| [p[0].sin() * p[1].sin(), p[0].cos() * p[1].cos()],
        48,
    );
    assert!(
        (direct.value - oracle).abs() < 1e-6 * oracle.abs().max(1.0),
        "direct {} vs fd oracle {}",
        direct.value,
        oracle
    );
    // cross-form agreement (both exact rewritings for div-free fields)
    assert!(
        (direct.value - direct.cross).abs() <= 1e-9 * direct.value.abs().max(1.0),
        "direct {} vs cross {}",
        direct.value,
        direct.cross
    );
    assert!(direct.div_y_residual < 1e-12);
    assert!(direct.first_term <= 0.0);
}

#[test]
fn zonal_expansion_matches_direct_on_flat_torus() {
    let t = make_flat_torus_2();
    let ch = t.chart();
    let f = ScalarField::from_jet_fn(ch, "f", |p| p[1].sin() + 2.0);
    let x = VectorField::basis(ch, 0);
    let flow = ZonalFlow::new(
        f,
        x,
        1,
        zonalmc_core::zonal::KillingDescriptor::IntegerPq { p: 1, q: 0 },
        None,
        Tolerances::default(),
    )
    .unwrap();
    let y = VectorField::from_jet_fn(ch, "Y", |p| {
        [(p[0] + p[1]).sin(), -((p[0] + p[1]).sin()) + p[0].cos()]
    });
    // div Y = cos(x+y) − cos(x+y) = 0
    let rule = QuadratureRule::for_chart(ch, [40, 40], 0.0).unwrap();
    let direct = mc::mc_direct(&flow.z, &y, &rule).unwrap();
    let zonal = mc::mc_zonal(&flow, &y, &rule).unwrap();
    // pointwise-identical expansions agree to rounding at any resolution
    assert!(
        (direct.value - zonal).abs() <= 1e-11 * direct.value.abs().max(1.0),
        "direct {} vs zonal {}",
        direct.value,
        zonal
    );
}

#[test]
fn commuting_route_matches_direct_on_ellipsoid3d() {
    // Z = f(χ) ∂_ξ on M³₂ with the constructed ring bump (p = 1, q = 0 ⇒ t = μ).
    let e3 = make_ellipsoid_3d(2.0).unwrap();
    let profile = ProfileSpec::Bump {
        center: 0.65,
        radius: 0.30,
        amplitude: 1.0,
    };
    let flow = zonal_flow_3d(&e3, 1, 0, &profile, Tolerances::default()).unwrap();
    let bump = BumpProfile {
        t0: 0.0,
        chi0: 0.50,
        radius: 0.13,
        amplitude: 1.0,
    };
    let y = build_ring_bump(&e3, &flow, &bump, 6).unwrap();

    let rule = QuadratureRule::for_chart(e3.chart(), [24, 24, 96], 1e-3).unwrap();
    let direct = mc::mc_direct(&flow.z, &y.field, &rule).unwrap();
    let commuting = mc::mc_commuting(&flow, &y.field, &rule).unwrap();
    let zonal = mc::mc_zonal(&flow, &y.field, &rule).unwrap();
    assert!(
        commuting > 0.0,
        "bump supported in the rising region must give positive mc, got {commuting}"
    );
    let rel = |u: f64, v: f64| (u - v).abs() / u.abs().max(v.abs());
    assert!(
        rel(direct.value, commuting) < 1e-6,
        "direct {} vs commuting {}",
        direct.value,
        commuting
    );
    assert!(rel(direct.value, zonal) < 1e-10);
    assert!(rel(direct.value, direct.cross) < 1e-6);
    // the disk wraps the transverse angle; Y must have no ∂_ξ component for q = 0
    let j = y.field.jet([0.3, 1.1, 0.5], 0).unwrap();
    assert_eq!(j.c[0], 0.0);
}

#[test]
fn trivial_identities() {
    let t = make_flat_torus_2();
    let ch = t.chart();
    let z = VectorField::from_jet_fn(ch, "Z", |p| [p[1].sin(), Jet::constant(0.0)]);
    let zero = VectorField::zero(ch);
    let rule = QuadratureRule::for_chart(ch, [16, 16], 0.0).unwrap();
    let self_mc = mc::mc_direct(&z, &z, &rule).unwrap();
    let zero_mc = mc::mc_direct(&z, &zero, &rule).unwrap();
    assert!(self_mc.value.abs() < 1e-14);
    assert!(zero_mc.value.abs() < 1e-14);
}

#[test]
fn divergent_y_is_reported_not_rejected() {
    let t = make_flat_torus_2();
    let ch = t.chart();
    let z = VectorField::from_jet_fn(ch, "Z", |p| [p[1].sin(), Jet::constant(0.0)]);
    // div Y = cos(x1) ≠ 0: mc is still computed, the defect is surfaced
    let y = VectorField::from_jet_fn(ch, "Y-bad", |p| [p[0].sin(), Jet::constant(0.0)]);
    let rule = QuadratureRule::for_chart(ch, [16, 16], 0.0).unwrap();
    let direct = mc::mc_direct(&z, &y, &rule).unwrap();
    assert!(direct.div_y_residual > 0.5, "{}", direct.div_y_residual);
}

#[test]
fn commuting_route_vanishes_for_level_set_tangent_y() {
    // Y = ∂_ξ commutes with X and is divergence-free, but Y(‖X‖²) ≡ 0
    let e3 = make_ellipsoid_3d(2.0).unwrap();
    let profile = ProfileSpec::Bump {
        center: 0.65,
        radius: 0.30,
        amplitude: 1.0,
    };
    let flow = zonal_flow_3d(&e3, 1, 0, &profile, Tolerances::default()).unwrap();
    let y = VectorField::basis(e3.chart(), 0);
    let rule = QuadratureRule::for_chart(e3.chart(), [8, 8, 32], 1e-3).unwrap();
    assert_eq!(mc::mc_commuting(&flow, &y, &rule).unwrap(), 0.0);
}

#[test]
fn mc_is_quadratic_in_y() {
    let t = make_flat_torus_2();
    let ch = t.chart();
    let z = VectorField::from_jet_fn(ch, "Z", |p| [p[1].sin() + 1.5, Jet::constant(0.0)]);
    let y = VectorField::from_jet_fn(ch, "Y", |p| [(p[0] + p[1]).sin(), -((p[0] + p[1]).sin())]);
    let rule = QuadratureRule::for_chart(ch, [24, 24], 0.0).unwrap();
    let base = mc::mc_direct(&z, &y, &rule).unwrap().value;
    let scaled = mc::mc_direct(&z, &y.scale(3.0), &rule).unwrap().value;
    assert!(
        (scaled - 9.0 * base).abs() <= 1e-10 * base.abs().max(1.0),
        "mc(Z,3Y) = {} vs 9·mc(Z,Y) = {}",
        scaled,
        9.0 * base
    );
}
