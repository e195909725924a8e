//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured residuals. Run with
//! `cargo test -p zonalmc-cli --test acceptance -- --nocapture`.

#![allow(clippy::type_complexity)]

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::Command;
use zonalmc_core::field::VectorField;
use zonalmc_core::jet::Jet;
use zonalmc_core::manifolds::{make_ellipsoid_2d, make_ellipsoid_3d};
use zonalmc_core::mc;
use zonalmc_core::ops;
use zonalmc_core::perturb::{build_ring_bump, BumpProfile};
use zonalmc_core::profiles::ProfileSpec;
use zonalmc_core::quad::QuadratureRule;
use zonalmc_core::rng::Rng;
use zonalmc_core::zonal::{
    intrinsic_sign_residual, mirrored_flow, sample_points, zonal_flow_3d, Tolerances,
};

/// Regression baseline for the certified scenario, computed by the
/// commuting-route quadrature oracle at χ-resolution 1024 (converged to
/// 12 digits; see the mc_routes tests for the route cross-validation).
const CERTIFIED_MC_BASELINE: f64 = 8.180855685601;

fn certified_scenario() -> (
    zonalmc_core::manifolds::Ellipsoid3D,
    zonalmc_core::zonal::ZonalFlow<3>,
    zonalmc_core::perturb::PerturbationField,
    QuadratureRule<3>,
) {
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
    let rule = QuadratureRule::for_chart(e3.chart(), [32, 32, 96], 1e-3).unwrap();
    (e3, flow, y, rule)
}

#[test]
fn criterion_01_christoffel_closed_vs_generic() {
    let mut worst = 0.0_f64;
    for a in [1.0, 2.0] {
        let e2 = make_ellipsoid_2d(a, 128).unwrap();
        let ch = e2.chart();
        for i in 0..20 {
            for j in 0..20 {
                let r = -e2.d + 1e-3 + (2.0 * e2.d - 2e-3) * (i as f64 + 0.5) / 20.0;
                let th = -PI + 2.0 * PI * (j as f64 + 0.5) / 20.0;
                let g = ch.christoffel([r, th]).unwrap();
                let c = ch.closed_christoffel([r, th]).unwrap();
                for k in 0..2 {
                    for ii in 0..2 {
                        for jj in 0..2 {
                            worst = worst.max((g[k][ii][jj] - c[k][ii][jj]).abs());
                        }
                    }
                }
            }
        }
    }
    for a in [0.5, 2.0] {
        let e3 = make_ellipsoid_3d(a).unwrap();
        let ch = e3.chart();
        for i in 0..20 {
            for j in 0..20 {
                for k in 0..20 {
                    let xi = -PI + 2.0 * PI * (i as f64 + 0.5) / 20.0;
                    let mu = -PI + 2.0 * PI * (j as f64 + 0.5) / 20.0;
                    let chi = 1e-3 + (FRAC_PI_2 - 2e-3) * (k as f64 + 0.5) / 20.0;
                    let g = ch.christoffel([xi, mu, chi]).unwrap();
                    let c = ch.closed_christoffel([xi, mu, chi]).unwrap();
                    for kk in 0..3 {
                        for ii in 0..3 {
                            for jj in 0..3 {
                                worst = worst.max((g[kk][ii][jj] - c[kk][ii][jj]).abs());
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(worst <= 1e-8, "criterion 1 FAIL: max diff {worst:.3e}");
    println!("criterion 01 PASS: closed-form vs generic Christoffel, max abs diff {worst:.3e}");
}

#[test]
fn criterion_02_killing_suite() {
    let mut killing_worst = 0.0_f64;
    let mut grad_identity_worst = 0.0_f64;
    let mut self_derivative_worst = 0.0_f64;
    let mut rng = Rng::new(2024);
    let mut total_points = 0usize;

    // 2D: ∂_θ on both aspect ratios
    for a in [1.0, 2.0] {
        let e2 = make_ellipsoid_2d(a, 128).unwrap();
        let pts = sample_points(e2.chart(), &mut rng, 125, 1e-3);
        total_points += pts.len();
        let x = &e2.killing_basis()[0];
        killing_worst = killing_worst.max(ops::killing_residual(x, &pts).unwrap());
        let (gi, sd) = killing_derivative_identities(x, &pts);
        grad_identity_worst = grad_identity_worst.max(gi);
        self_derivative_worst = self_derivative_worst.max(sd);
    }
    // 3D: several integer combinations on both aspect ratios
    for a in [0.5, 2.0] {
        let e3 = make_ellipsoid_3d(a).unwrap();
        let pts = sample_points(e3.chart(), &mut rng, 125, 1e-3);
        total_points += pts.len();
        for (p, q) in [(1.0, 0.0), (0.0, 1.0), (2.0, 3.0)] {
            let x = e3.killing_pq(p, q);
            killing_worst = killing_worst.max(ops::killing_residual(&x, &pts).unwrap());
            let (gi, sd) = killing_derivative_identities(&x, &pts);
            grad_identity_worst = grad_identity_worst.max(gi);
            self_derivative_worst = self_derivative_worst.max(sd);
        }
    }
    assert!(total_points >= 500);
    assert!(
        killing_worst <= 1e-8,
        "criterion 2 FAIL: killing residual {killing_worst:.3e}"
    );
    assert!(
        grad_identity_worst <= 1e-8,
        "criterion 2 FAIL: 2∇_XX+grad‖X‖² {grad_identity_worst:.3e}"
    );
    assert!(
        self_derivative_worst <= 1e-8,
        "criterion 2 FAIL: X(‖X‖²) {self_derivative_worst:.3e}"
    );
    println!(
        "criterion 02 PASS: killing {killing_worst:.3e}, 2∇_XX+grad‖X‖² {grad_identity_worst:.3e}, X(‖X‖²) {self_derivative_worst:.3e} over {total_points} points"
    );
}

fn killing_derivative_identities<const D: usize>(
    x: &VectorField<D>,
    pts: &[[f64; D]],
) -> (f64, f64) {
    let chart = x.chart().clone();
    let norm_sq = ops::norm_sq(x).unwrap();
    let grad_n = ops::grad(&norm_sq).unwrap();
    let nxx = ops::covariant_derivative(x, x).unwrap();
    let xn = ops::directional(x, &norm_sq).unwrap();
    let mut grad_identity = 0.0_f64;
    let mut self_derivative = 0.0_f64;
    for &p in pts {
        let a = nxx.jet(p, 0).unwrap().c;
        let b = grad_n.jet(p, 0).unwrap().c;
        let mj = chart.metric_jet(p).unwrap();
        let mut s = 0.0;
        for i in 0..D {
            for j in 0..D {
                s += mj.g[i][j].v * (2.0 * a[i] + b[i]) * (2.0 * a[j] + b[j]);
            }
        }
        grad_identity = grad_identity.max(s.max(0.0).sqrt());
        self_derivative = self_derivative.max(xn.value(p).unwrap().abs());
    }
    (grad_identity, self_derivative)
}

#[test]
fn criterion_03_norm_law() {
    let mut rng = Rng::new(3);
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let a = rng.range(0.3, 3.0);
        let p = rng.range(-2.0, 2.0);
        let q = rng.range(-2.0, 2.0);
        let e3 = make_ellipsoid_3d(a).unwrap();
        let x = e3.killing_pq(p, q);
        let n = ops::norm_sq(&x).unwrap();
        let pts = sample_points(e3.chart(), &mut rng, 40, 1e-3);
        for &pt in &pts {
            let v = n.value(pt).unwrap();
            let exact = e3.norm_sq_pq(p, q, pt[2]);
            worst = worst.max((v - exact).abs());
        }
    }
    assert!(worst <= 1e-10, "criterion 3 FAIL: {worst:.3e}");
    println!("criterion 03 PASS: ‖p∂_ξ+q∂_μ‖² law, max abs diff {worst:.3e}");
}

#[test]
fn criterion_04_three_formula_agreement() {
    let (_e3, flow, y, rule) = certified_scenario();
    let direct = mc::mc_direct(&flow.z, &y.field, &rule).unwrap();
    let zonal = mc::mc_zonal(&flow, &y.field, &rule).unwrap();
    let commuting = mc::mc_commuting(&flow, &y.field, &rule).unwrap();
    let direct2 = mc::mc_direct(&flow.z, &y.field, &rule.doubled().unwrap()).unwrap();
    let richardson_rel = (direct2.value - direct.value).abs() / direct.value.abs();
    let rel = |u: f64, v: f64| (u - v).abs() / u.abs().max(v.abs());
    let dz = rel(direct.value, zonal);
    let dc = rel(direct.value, commuting);
    let zc = rel(zonal, commuting);
    assert!(direct.value > 0.0);
    assert!(dz <= 1e-5, "criterion 4 FAIL: |direct−zonal| rel {dz:.3e}");
    assert!(
        dc <= 1e-5,
        "criterion 4 FAIL: |direct−commuting| rel {dc:.3e}"
    );
    assert!(
        zc <= 1e-5,
        "criterion 4 FAIL: |zonal−commuting| rel {zc:.3e}"
    );
    assert!(
        richardson_rel <= 1e-5,
        "criterion 4 FAIL: Richardson {richardson_rel:.3e}"
    );
    let regression = rel(direct.value, CERTIFIED_MC_BASELINE);
    assert!(
        regression <= 1e-5,
        "criterion 4 FAIL: regression vs oracle baseline {regression:.3e}"
    );
    println!(
        "criterion 04 PASS: mc = {:.9e}; pairwise rel diffs d/z {dz:.2e}, d/c {dc:.2e}, z/c {zc:.2e}; Richardson {richardson_rel:.2e}; baseline drift {regression:.2e}",
        direct.value
    );
}

#[test]
fn criterion_05_certify_positive_and_refuse_geodesic() {
    let dir = std::env::temp_dir().join(format!("zonalmc-acc5-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("certified.cfg");
    std::fs::write(
        &cfg,
        "manifold.kind = ellipsoid3d\nmanifold.a = 2.0\nflow.p = 1\nflow.q = 0\n\
         flow.profile.family = bump\nflow.profile.center = 0.65\nflow.profile.radius = 0.30\n\
         perturbation.mode = search\nperturbation.budget = 120\n\
         quadrature.periodic = 32\nquadrature.bounded = 96\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_zonalmc"))
        .args([
            "certify",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "criterion 5 FAIL: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("certificate.json")).unwrap())
            .unwrap();
    assert_eq!(cert["verdict"], "positive");
    let div = cert["conditions"]["div_residual"].as_f64().unwrap();
    let com = cert["conditions"]["commute_residual"].as_f64().unwrap();
    let margin = cert["conditions"]["support_margin"].as_f64().unwrap();
    let yh = cert["conditions"]["max_y_of_norm_sq"].as_f64().unwrap();
    assert!(div <= 1e-8, "criterion 5 FAIL: div residual {div:.3e}");
    assert!(com <= 1e-8, "criterion 5 FAIL: commute residual {com:.3e}");
    assert!(margin > 0.0, "criterion 5 FAIL: margin {margin:.3e}");
    assert!(yh > 0.0);

    // the geodesic counterexample must be refused with a precondition error
    let geo = dir.join("geodesic.cfg");
    std::fs::write(
        &geo,
        "manifold.kind = ellipsoid3d\nmanifold.a = 2.0\nflow.p = 1\nflow.q = 2\n\
         flow.profile.family = bump\nflow.profile.center = 0.65\nflow.profile.radius = 0.30\n\
         perturbation.mode = search\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_zonalmc"))
        .args([
            "certify",
            "--config",
            geo.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "criterion 5 FAIL: geodesic flow not refused"
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("geodesic"));
    println!(
        "criterion 05 PASS: positive certificate (div {div:.2e}, [X,Y] {com:.2e}, margin {margin:.3e}); geodesic refused with precondition error"
    );
}

#[test]
fn criterion_06_sign_flip_under_mirrored_profile() {
    let (_e3, flow, y, rule) = certified_scenario();
    let mirror = mirrored_flow(&flow).unwrap();
    let pos = mc::mc_commuting(&flow, &y.field, &rule).unwrap();
    let neg = mc::mc_commuting(&mirror, &y.field, &rule).unwrap();
    assert!(pos > 0.0 && neg < 0.0, "criterion 6 FAIL: {pos} / {neg}");
    let rel = (pos + neg).abs() / pos.abs();
    assert!(rel <= 1e-6, "criterion 6 FAIL: |pos+neg|/|pos| = {rel:.3e}");
    println!("criterion 06 PASS: mirrored profile flips mc_commuting exactly (rel {rel:.3e})");
}

#[test]
fn criterion_07_trivial_identities_and_first_term_sign() {
    let (_e3, flow, _y, _rule) = certified_scenario();
    let small = QuadratureRule::for_chart(&flow.chart, [12, 12, 32], 1e-3).unwrap();
    let self_mc = mc::mc_direct(&flow.z, &flow.z, &small).unwrap();
    let zero_mc = mc::mc_direct(&flow.z, &VectorField::zero(&flow.chart), &small).unwrap();
    assert!(
        self_mc.value.abs() <= 1e-12,
        "criterion 7 FAIL: mc(Z,Z) = {:.3e}",
        self_mc.value
    );
    assert!(
        zero_mc.value.abs() <= 1e-12,
        "criterion 7 FAIL: mc(Z,0) = {:.3e}",
        zero_mc.value
    );

    // first term of the defining formula is −|[Z,Y]|² ≤ 0 for random pairs
    let mut rng = Rng::new(7);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..50 {
        let (a, b, c) = (
            rng.range(0.3, 2.0),
            rng.range(0.3, 2.0),
            rng.range(-1.0, 1.0),
        );
        let z = VectorField::from_jet_fn(&flow.chart, "Zr", move |p| {
            [
                (p[2] * a).sin() * b,
                (p[2] * b).cos() * a,
                Jet::constant(0.0) * c,
            ]
        });
        let (d, e) = (rng.range(0.5, 2.5), rng.range(-1.5, 1.5));
        let y = VectorField::from_jet_fn(&flow.chart, "Yr", move |p| {
            [
                (p[0] + p[2] * d).sin(),
                (p[1] * d).cos() * e,
                (p[2] * 2.0 - 1.0).sin() * 0.3,
            ]
        });
        let v = mc::mc_direct(&z, &y, &small).unwrap();
        worst = worst.max(v.first_term);
        let _ = k;
    }
    assert!(
        worst <= 0.0,
        "criterion 7 FAIL: first term reached {worst:.3e}"
    );
    println!(
        "criterion 07 PASS: mc(Z,Z) = {:.1e}, mc(Z,0) = {:.1e}, max first term over 50 pairs = {worst:.3e}",
        self_mc.value, zero_mc.value
    );
}

#[test]
fn criterion_08_intrinsic_sign_identity() {
    let mut rng = Rng::new(8);
    let mut worst = 0.0_f64;
    let e3 = make_ellipsoid_3d(2.0).unwrap();
    let flows = [
        (1, 0, 0.55, 0.2),
        (0, 1, 0.6, 0.25),
        (2, 1, 0.5, 0.18),
        (1, 3, 0.65, 0.22),
        (3, 2, 0.58, 0.2),
    ];
    for (p, q, center, radius) in flows {
        let profile = ProfileSpec::Bump {
            center,
            radius,
            amplitude: 1.0,
        };
        let flow = zonal_flow_3d(&e3, p, q, &profile, Tolerances::default()).unwrap();
        // sample inside the profile support where the identity has scale
        for _ in 0..40 {
            let chi = rng.range(center - 0.8 * radius, center + 0.8 * radius);
            let pt = [rng.range(-3.0, 3.0), rng.range(-3.0, 3.0), chi];
            if let Some(r) = intrinsic_sign_residual(&flow, pt).unwrap() {
                worst = worst.max(r);
            }
        }
    }
    assert!(
        worst <= 1e-7,
        "criterion 8 FAIL: intrinsic-sign residual {worst:.3e}"
    );
    println!("criterion 08 PASS: intrinsic sign identity, max rel residual {worst:.3e}");
}

#[test]
fn criterion_09_scaling_invariance() {
    let (_e3, flow, y, _rule) = certified_scenario();
    let rule = QuadratureRule::for_chart(&flow.chart, [16, 16, 64], 1e-3).unwrap();
    let base = mc::mc_direct(&flow.z, &y.field, &rule).unwrap().value;
    let base_zonal = mc::mc_zonal(&flow, &y.field, &rule).unwrap();
    let base_comm = mc::mc_commuting(&flow, &y.field, &rule).unwrap();
    let mut worst = 0.0_f64;
    for c in [0.5, 3.0] {
        let scaled = flow.rescaled(c).unwrap();
        let v = mc::mc_direct(&scaled.z, &y.field, &rule).unwrap().value;
        let vz = mc::mc_zonal(&scaled, &y.field, &rule).unwrap();
        let vc = mc::mc_commuting(&scaled, &y.field, &rule).unwrap();
        worst = worst.max((v - base).abs() / base.abs());
        worst = worst.max((vz - base_zonal).abs() / base_zonal.abs());
        worst = worst.max((vc - base_comm).abs() / base_comm.abs());
        for chi in [0.45, 0.5, 0.6] {
            let pt = [0.3, -0.2, chi];
            assert_eq!(
                flow.sgn_at(pt).unwrap(),
                scaled.sgn_at(pt).unwrap(),
                "criterion 9 FAIL: sgn changed under rescaling"
            );
        }
    }
    assert!(worst <= 1e-10, "criterion 9 FAIL: mc drift {worst:.3e}");
    println!(
        "criterion 09 PASS: (f/c, cX) leaves mc and sgn unchanged (max rel drift {worst:.3e})"
    );
}

#[test]
fn criterion_10_volume_sanity() {
    // M³ (a = 1): trimmed volume 2π²·cos(2ε) → defect ≈ 4π²ε²
    // M² (a = 1): trimmed area 4π·cos(ε)   → defect ≈ 2πε²
    let e3 = make_ellipsoid_3d(1.0).unwrap();
    let e2 = make_ellipsoid_2d(1.0, 128).unwrap();
    let mut lines = Vec::new();
    let mut ratios = Vec::new();
    let cases: [(&str, f64, fn(f64) -> f64); 2] = [
        ("M3 a=1 vs 2π²", 2.0 * PI * PI, |eps| {
            2.0 * PI * PI * (1.0 - (2.0 * eps).cos())
        }),
        ("M2 a=1 vs 4π", 4.0 * PI, |eps| {
            4.0 * PI * (1.0 - eps.cos())
        }),
    ];
    for (label, exact, err_of_eps) in cases {
        let mut errs = Vec::new();
        for eps in [1e-2, 1e-3] {
            let vol = if label.starts_with("M3") {
                QuadratureRule::for_chart(e3.chart(), [16, 16, 96], eps)
                    .unwrap()
                    .volume()
                    .unwrap()
            } else {
                QuadratureRule::for_chart(e2.chart(), [96, 32], eps)
                    .unwrap()
                    .volume()
                    .unwrap()
            };
            let err = (vol - exact).abs();
            let predicted = err_of_eps(eps);
            assert!(
                err <= 2.0 * predicted + 1e-12 && err >= 0.4 * predicted,
                "criterion 10 FAIL: {label} ε={eps}: err {err:.3e} vs O(ε²) prediction {predicted:.3e}"
            );
            errs.push(err);
        }
        // O(ε²): shrinking ε by 10 shrinks the defect by ~100
        let ratio = errs[0] / errs[1];
        assert!(
            (60.0..=140.0).contains(&ratio),
            "criterion 10 FAIL: {label} defect ratio {ratio:.1} not O(ε²)"
        );
        ratios.push(ratio);
        lines.push(format!("{label}: defects {:.3e}/{:.3e}", errs[0], errs[1]));
    }
    println!(
        "criterion 10 PASS: {} (ε²-ratios {:.0}, {:.0})",
        lines.join("; "),
        ratios[0],
        ratios[1]
    );
}
