//! Perturbation construction and the positivity search.

use zonalmc_core::error::Error;
use zonalmc_core::field::VectorField;
use zonalmc_core::manifolds::make_ellipsoid_3d;
use zonalmc_core::mc::{self, Verdict};
use zonalmc_core::perturb::{
    build_commuting_bump, build_ring_bump, certify_positive, condition_report, replay_certificate,
    BumpProfile, BumpShape, CertifyOptions, PerturbationField,
};
use zonalmc_core::profiles::ProfileSpec;
use zonalmc_core::quad::QuadratureRule;
use zonalmc_core::zonal::{zonal_flow_3d, Tolerances};

fn certified_flow() -> (
    zonalmc_core::manifolds::Ellipsoid3D,
    zonalmc_core::zonal::ZonalFlow<3>,
) {
    let e3 = make_ellipsoid_3d(2.0).unwrap();
    let profile = ProfileSpec::Bump {
        center: 0.65,
        radius: 0.30,
        amplitude: 1.0,
    };
    let flow = zonal_flow_3d(&e3, 1, 0, &profile, Tolerances::default()).unwrap();
    (e3, flow)
}

#[test]
fn disk_bump_satisfies_all_four_conditions() {
    let (e3, flow) = certified_flow();
    let bump = BumpProfile {
        t0: 0.4,
        chi0: 0.50,
        radius: 0.12,
        amplitude: 0.8,
    };
    let pf = build_commuting_bump(&e3, &flow, &bump).unwrap();
    let rule = QuadratureRule::for_chart(e3.chart(), [16, 16, 64], 1e-3).unwrap();
    let report = condition_report(&pf, &flow, &rule).unwrap();
    assert!(report.div_residual < 1e-10, "div = {}", report.div_residual);
    assert!(report.commute_residual < 1e-12);
    assert!(report.support_inside_u_plus);
    assert!(report.support_margin > 0.0);
    assert!(report.outside_leak < 1e-14);
    assert!(report.max_y_of_norm_sq > 0.0);
    assert!(report.satisfied(1e-8));
    // q = 0: the transverse angle is μ, so Y has no ∂_ξ component
    let c = pf.field.coefficients([1.0, 2.0, 0.5]).unwrap();
    assert_eq!(c[0], 0.0);
}

#[test]
fn ring_bump_mc_is_positive_and_quadratic_in_amplitude() {
    let (e3, flow) = certified_flow();
    let rule = QuadratureRule::for_chart(e3.chart(), [16, 16, 64], 1e-3).unwrap();
    let bump = BumpProfile {
        t0: 0.0,
        chi0: 0.50,
        radius: 0.12,
        amplitude: 0.7,
    };
    let pf = build_ring_bump(&e3, &flow, &bump, 6).unwrap();
    let v = mc::mc_commuting(&flow, &pf.field, &rule).unwrap();
    assert!(v > 0.0);

    let doubled = BumpProfile {
        amplitude: 1.4,
        ..bump
    };
    let pf2 = build_ring_bump(&e3, &flow, &doubled, 6).unwrap();
    let v2 = mc::mc_commuting(&flow, &pf2.field, &rule).unwrap();
    assert!(
        (v2 - 4.0 * v).abs() <= 1e-9 * v2.abs(),
        "mc must scale with amplitude²: {v2} vs {}",
        4.0 * v
    );

    // zero amplitude → zero field → zero mc
    let zero = BumpProfile {
        amplitude: 0.0,
        ..bump
    };
    let pf0 = build_ring_bump(&e3, &flow, &zero, 6).unwrap();
    assert_eq!(mc::mc_commuting(&flow, &pf0.field, &rule).unwrap(), 0.0);
}

#[test]
fn bump_that_leaves_u_plus_is_rejected() {
    let (e3, flow) = certified_flow();
    // U⁺ ≈ (0.35, 0.65); this support [0.35, 0.85] exits it
    let bad = BumpProfile {
        t0: 0.0,
        chi0: 0.60,
        radius: 0.25,
        amplitude: 1.0,
    };
    match build_commuting_bump(&e3, &flow, &bad) {
        Err(Error::Construction(msg)) => {
            assert!(msg.contains("U⁺"), "{msg}");
        }
        other => panic!("expected construction error, got {other:?}"),
    }
    // and one that leaves the collar-trimmed χ-interval entirely
    let outside = BumpProfile {
        t0: 0.0,
        chi0: 0.01,
        radius: 0.05,
        amplitude: 1.0,
    };
    assert!(matches!(
        build_commuting_bump(&e3, &flow, &outside),
        Err(Error::Construction(_))
    ));
}

#[test]
fn killing_field_fails_the_support_condition() {
    let (e3, flow) = certified_flow();
    // Y = ∂_ξ declared with the honest support claim: it leaks everywhere
    let fake = PerturbationField {
        field: VectorField::basis(e3.chart(), 0),
        shape: BumpShape::Disk,
        bump: BumpProfile {
            t0: 0.0,
            chi0: 0.5,
            radius: 0.1,
            amplitude: 1.0,
        },
        p: 1,
        q: 0,
        alpha: 1,
        beta: 0,
        chi_support: (0.40, 0.60),
    };
    let rule = QuadratureRule::for_chart(e3.chart(), [8, 8, 32], 1e-3).unwrap();
    let report = condition_report(&fake, &flow, &rule).unwrap();
    assert!(report.outside_leak > 0.1, "∂_ξ is supported everywhere");
    assert!(!report.satisfied(1e-8));
    // and a Y with no ∂_χ component has Y(‖X‖²) ≡ 0
    assert!(report.max_y_of_norm_sq < 1e-12);
}

#[test]
fn certify_finds_a_positive_certificate() {
    let (e3, flow) = certified_flow();
    let rule = QuadratureRule::for_chart(e3.chart(), [32, 32, 96], 1e-3).unwrap();
    let opts = CertifyOptions {
        budget: 120,
        ..CertifyOptions::default()
    };
    let cert = certify_positive(&e3, &flow, &rule, &opts).unwrap();
    assert_eq!(cert.verdict, Verdict::Positive, "{cert:?}");
    assert!(cert.mc.mc_direct > 0.0);
    assert!(cert.conditions.div_residual < 1e-8);
    assert!(cert.conditions.commute_residual < 1e-8);
    assert!(cert.conditions.support_margin > 0.0);
    let stats = cert.search.as_ref().unwrap();
    assert!(stats.evaluations <= 120);

    // determinism: same options, same certificate
    let cert2 = certify_positive(&e3, &flow, &rule, &opts).unwrap();
    assert_eq!(
        serde_json::to_string(&cert).unwrap(),
        serde_json::to_string(&cert2).unwrap()
    );

    // replay reproduces mc within the stored error budget
    let (replayed, drift) = replay_certificate(&e3, &flow, &cert, &rule).unwrap();
    assert_eq!(replayed.verdict, Verdict::Positive);
    assert!(drift <= (cert.mc.richardson_error + replayed.mc.richardson_error).max(1e-12));
}

#[test]
fn certify_refuses_geodesic_and_non_positive_flows() {
    let e3 = make_ellipsoid_3d(2.0).unwrap();
    let rule = QuadratureRule::for_chart(e3.chart(), [8, 8, 32], 1e-3).unwrap();
    let opts = CertifyOptions {
        budget: 10,
        ..CertifyOptions::default()
    };

    // geodesic: a²p² = q²
    let profile = ProfileSpec::Bump {
        center: 0.65,
        radius: 0.30,
        amplitude: 1.0,
    };
    let geo = zonal_flow_3d(&e3, 1, 2, &profile, Tolerances::default()).unwrap();
    match certify_positive(&e3, &geo, &rule, &opts) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("geodesic"), "{msg}"),
        other => panic!("expected precondition error, got {other:?}"),
    }

    // constant f: F ≡ 0, U⁺ empty
    let const_profile = ProfileSpec::PolyCos2 {
        coeffs: vec![1.0],
        amplitude: 1.0,
    };
    let flat = zonal_flow_3d(&e3, 1, 0, &const_profile, Tolerances::default()).unwrap();
    match certify_positive(&e3, &flat, &rule, &opts) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("not positive"), "{msg}"),
        other => panic!("expected precondition error, got {other:?}"),
    }

    // profile support reaching the degenerate circles
    let wide = ProfileSpec::Bump {
        center: 0.4,
        radius: 0.45,
        amplitude: 1.0,
    };
    let touching = zonal_flow_3d(&e3, 1, 0, &wide, Tolerances::default()).unwrap();
    match certify_positive(&e3, &touching, &rule, &opts) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("degenerate"), "{msg}"),
        other => panic!("expected precondition error, got {other:?}"),
    }
}

#[test]
fn certify_stays_inside_a_wide_collar() {
    // U⁺ hugs the degenerate circle at χ = 0; with a wide collar the search
    // must confine its candidates to the trimmed interval rather than
    // erroring on an out-of-collar bump.
    let e3 = make_ellipsoid_3d(2.0).unwrap();
    let profile = ProfileSpec::Bump {
        center: 0.12,
        radius: 0.09,
        amplitude: 1.0,
    };
    let flow = zonal_flow_3d(&e3, 1, 0, &profile, Tolerances::default()).unwrap();
    let rule = QuadratureRule::for_chart(e3.chart(), [8, 8, 48], 0.02).unwrap();
    let opts = CertifyOptions {
        budget: 30,
        ..CertifyOptions::default()
    };
    let cert = certify_positive(&e3, &flow, &rule, &opts).unwrap();
    // the coarse rule cannot resolve so narrow a bump, and the error budget
    // says so: richardson swamps the direct value, hence indeterminate
    assert_eq!(cert.verdict, Verdict::Indeterminate);
    assert!(cert.bump.chi0 - cert.bump.radius > 0.02);
    // the commuting-route oracle at a resolved rule confirms positivity
    let fine = QuadratureRule::for_chart(e3.chart(), [8, 8, 256], 0.02).unwrap();
    let pf = zonalmc_core::perturb::build_bump_with_shape(&e3, &flow, &cert.bump, cert.shape, 0.02)
        .unwrap();
    assert!(mc::mc_commuting(&flow, &pf.field, &fine).unwrap() > 0.0);
}

#[test]
fn density_weighted_divergence_is_flat_divergence() {
    // div under the weighted density equals the flat divergence of the
    // weighted field: with Y = W/H and W flat-div-free, div_g Y = 0.
    let (e3, flow) = certified_flow();
    let bump = BumpProfile {
        t0: 1.0,
        chi0: 0.55,
        radius: 0.08,
        amplitude: 1.0,
    };
    for shape in [BumpShape::Disk, BumpShape::Ring { order: 6 }] {
        let pf =
            zonalmc_core::perturb::build_bump_with_shape(&e3, &flow, &bump, shape, 1e-3).unwrap();
        let div = zonalmc_core::ops::divergence(&pf.field).unwrap();
        for chi in [0.5, 0.55, 0.6] {
            for t in [0.8, 1.0, 1.2] {
                let r = div.value([0.3, t, chi]).unwrap();
                assert!(r.abs() < 1e-9, "{shape:?}: div residual {r} at chi={chi}");
            }
        }
    }
}
