//! Command implementations: verify / classify / mc / certify, each
//! producing a versioned `report.json` plus optional CSV dumps.

use crate::config::{ManifoldKind, PerturbationMode, Scenario, ShapeKind};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;
use zonalmc_core::error::Error as CoreError;
use zonalmc_core::manifolds::{make_ellipsoid_2d, make_ellipsoid_3d, Ellipsoid2D, Ellipsoid3D};
use zonalmc_core::mc::{self, McReport, Verdict};
use zonalmc_core::perturb::{
    build_bump_with_shape, certify_positive, condition_report, replay_certificate, BumpProfile,
    BumpShape, Certificate, CertifyOptions,
};
use zonalmc_core::quad::QuadratureRule;
use zonalmc_core::verify::{corrupted_chart_negate_g22, verify_metric_only, VerifyReport};
use zonalmc_core::zonal::{
    check_zonal, classify_3d, sample_points, zonal_flow_2d, zonal_flow_3d,
    zonal_flow_3d_irrational, ClassificationReport, Tolerances, ZonalFlow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Ok = 0,
    Unexpected = 1,
    ParseError = 2,
    Precondition = 3,
    InvariantFailure = 4,
    Indeterminate = 5,
}

#[derive(Debug)]
pub struct CommandError {
    pub class: ExitClass,
    pub message: String,
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<CoreError> for CommandError {
    fn from(e: CoreError) -> Self {
        let class = match &e {
            CoreError::Precondition(_)
            | CoreError::Capability { .. }
            | CoreError::Construction(_)
            | CoreError::Domain(_)
            | CoreError::Argument(_) => ExitClass::Precondition,
            _ => ExitClass::Unexpected,
        };
        CommandError {
            class,
            message: e.to_string(),
        }
    }
}

impl From<crate::config::ConfigError> for CommandError {
    fn from(e: crate::config::ConfigError) -> Self {
        CommandError {
            class: ExitClass::ParseError,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        CommandError {
            class: ExitClass::Unexpected,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub resolution_scale: f64,
    pub seed_override: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub input_digest: Option<String>,
    /// Canonical re-serialization of the resolved scenario; parsing it
    /// reproduces the same scenario (round-trip contract).
    pub scenario_canonical: Option<String>,
    pub scenario: Option<Scenario>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyReport>,
    pub timings_ms: Vec<(String, f64)>,
    pub exit_class: String,
}

pub struct Outcome {
    #[allow(dead_code)] // consumed by library-style callers and tests
    pub report: RunReport,
    pub class: ExitClass,
}

fn class_name(c: ExitClass) -> String {
    match c {
        ExitClass::Ok => "ok",
        ExitClass::Unexpected => "unexpected-error",
        ExitClass::ParseError => "parse-error",
        ExitClass::Precondition => "precondition-failure",
        ExitClass::InvariantFailure => "invariant-failure",
        ExitClass::Indeterminate => "indeterminate",
    }
    .to_string()
}

fn digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn new_report(command: &str, scenario: Option<&Scenario>, config_text: Option<&str>) -> RunReport {
    RunReport {
        schema_version: 1,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        input_digest: config_text.map(digest),
        scenario_canonical: scenario.map(crate::config::canonical),
        scenario: scenario.cloned(),
        classification: None,
        mc: None,
        certificate: None,
        replay_drift: None,
        verify: None,
        timings_ms: Vec::new(),
        exit_class: class_name(ExitClass::Ok),
    }
}

fn write_report(report: &RunReport, out_dir: &Path) -> Result<(), CommandError> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(report).map_err(|e| CommandError {
        class: ExitClass::Unexpected,
        message: e.to_string(),
    })?;
    std::fs::write(path, json)?;
    Ok(())
}

enum Built {
    Two { e2: Ellipsoid2D, flow: ZonalFlow<2> },
    Three { e3: Ellipsoid3D, flow: ZonalFlow<3> },
}

fn scaled(n: usize, s: f64) -> usize {
    ((n as f64 * s).round() as usize).max(2)
}

fn build(scenario: &Scenario) -> Result<Built, CommandError> {
    let tol = Tolerances::default();
    match scenario.manifold_kind {
        ManifoldKind::Ellipsoid3d => {
            let e3 = make_ellipsoid_3d(scenario.a)?;
            let flow = if scenario.irrational {
                zonal_flow_3d_irrational(
                    &e3,
                    scenario.p_real,
                    scenario.q_real,
                    &scenario.profile,
                    tol,
                )?
            } else {
                zonal_flow_3d(&e3, scenario.p, scenario.q, &scenario.profile, tol)?
            };
            Ok(Built::Three { e3, flow })
        }
        ManifoldKind::Ellipsoid2d | ManifoldKind::Sphere2 => {
            let e2 = make_ellipsoid_2d(scenario.a, scenario.profile_resolution)?;
            let flow = zonal_flow_2d(&e2, &scenario.profile, tol)?;
            Ok(Built::Two { e2, flow })
        }
    }
}

fn effective_seed(scenario: &Scenario, opts: &RunOptions) -> u64 {
    opts.seed_override.unwrap_or(scenario.seed)
}

/// `verify`: run the full geometry-identity suite on the configured manifold.
pub fn cmd_verify(
    scenario: &Scenario,
    config_text: &str,
    opts: &RunOptions,
) -> Result<Outcome, CommandError> {
    let mut report = new_report("verify", Some(scenario), Some(config_text));
    let started = Instant::now();
    let seed = effective_seed(scenario, opts);
    let resolution = scaled(scenario.bounded_resolution, opts.resolution_scale);
    let verify = if scenario.debug_negate_g22 {
        match scenario.manifold_kind {
            ManifoldKind::Ellipsoid3d => {
                let e3 = make_ellipsoid_3d(scenario.a)?;
                verify_metric_only(&corrupted_chart_negate_g22(e3.chart()), seed)?
            }
            _ => {
                let e2 = make_ellipsoid_2d(scenario.a, scenario.profile_resolution)?;
                verify_metric_only(&corrupted_chart_negate_g22(e2.chart()), seed)?
            }
        }
    } else {
        match scenario.manifold_kind {
            ManifoldKind::Ellipsoid3d => {
                let e3 = make_ellipsoid_3d(scenario.a)?;
                zonalmc_core::verify::verify_ellipsoid_3d(&e3, seed, resolution)?
            }
            _ => {
                let e2 = make_ellipsoid_2d(scenario.a, scenario.profile_resolution)?;
                zonalmc_core::verify::verify_ellipsoid_2d(&e2, seed, resolution)?
            }
        }
    };
    report
        .timings_ms
        .push(("verify".into(), started.elapsed().as_secs_f64() * 1e3));
    let class = if verify.passed {
        ExitClass::Ok
    } else {
        ExitClass::InvariantFailure
    };
    for check in &verify.checks {
        println!(
            "{} {} (residual {:.3e}, threshold {:.1e})",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.residual,
            check.threshold
        );
    }
    report.verify = Some(verify);
    report.exit_class = class_name(class);
    write_report(&report, &opts.out_dir)?;
    Ok(Outcome { report, class })
}

/// `classify`: zonality, geodesic/S¹/positivity verdicts.
pub fn cmd_classify(
    scenario: &Scenario,
    config_text: &str,
    opts: &RunOptions,
) -> Result<Outcome, CommandError> {
    let mut report = new_report("classify", Some(scenario), Some(config_text));
    let started = Instant::now();
    let seed = effective_seed(scenario, opts);
    let classification = match build(scenario)? {
        Built::Three { e3, flow } => {
            let pts = sample_points(
                e3.chart(),
                &mut zonalmc_core::rng::Rng::new(seed),
                200,
                scenario.collar,
            );
            let classification = classify_3d(&e3, &flow, &pts)?;
            if scenario.output_csv {
                write_profile_csv_3d(&flow, &opts.out_dir, scenario.collar)?;
            }
            classification
        }
        Built::Two { e2, flow } => {
            let pts = sample_points(
                e2.chart(),
                &mut zonalmc_core::rng::Rng::new(seed),
                200,
                scenario.collar,
            );
            let classification = check_zonal(&flow, &pts)?;
            if scenario.output_csv {
                write_profile_csv_2d(&flow, &e2, &opts.out_dir, scenario.collar)?;
            }
            classification
        }
    };
    report
        .timings_ms
        .push(("classify".into(), started.elapsed().as_secs_f64() * 1e3));
    let class = match classification.zonal_verdict.as_str() {
        "indeterminate" => ExitClass::Indeterminate,
        _ => ExitClass::Ok,
    };
    println!(
        "zonal: {} | geodesic: {} | S1: {} | positive: {}",
        classification.zonal_verdict,
        classification.is_geodesic,
        classification.is_s1,
        classification.is_positive
    );
    report.classification = Some(classification);
    report.exit_class = class_name(class);
    write_report(&report, &opts.out_dir)?;
    Ok(Outcome { report, class })
}

fn rule_3d(
    e3: &Ellipsoid3D,
    scenario: &Scenario,
    opts: &RunOptions,
) -> Result<QuadratureRule<3>, CommandError> {
    let p = scaled(scenario.periodic_resolution, opts.resolution_scale);
    let b = scaled(scenario.bounded_resolution, opts.resolution_scale);
    Ok(QuadratureRule::for_chart(
        e3.chart(),
        [p, p, b],
        scenario.collar,
    )?)
}

fn rule_2d(
    e2: &Ellipsoid2D,
    scenario: &Scenario,
    opts: &RunOptions,
) -> Result<QuadratureRule<2>, CommandError> {
    let p = scaled(scenario.periodic_resolution, opts.resolution_scale);
    let b = scaled(scenario.bounded_resolution, opts.resolution_scale);
    Ok(QuadratureRule::for_chart(
        e2.chart(),
        [b, p],
        scenario.collar,
    )?)
}

/// `mc`: evaluate all applicable mc formulas for the configured (Z, Y).
pub fn cmd_mc(
    scenario: &Scenario,
    config_text: &str,
    opts: &RunOptions,
) -> Result<Outcome, CommandError> {
    let mut report = new_report("mc", Some(scenario), Some(config_text));
    let started = Instant::now();
    let mc_report = match build(scenario)? {
        Built::Three { e3, flow } => {
            let rule = rule_3d(&e3, scenario, opts)?;
            let y = match &scenario.perturbation {
                PerturbationMode::None => {
                    return Err(CommandError {
                        class: ExitClass::Precondition,
                        message: "mc needs a perturbation (perturbation.mode = self|explicit)"
                            .into(),
                    })
                }
                PerturbationMode::SelfField => flow.z.clone(),
                PerturbationMode::Explicit {
                    shape,
                    ring_order,
                    t0,
                    chi0,
                    radius,
                    amplitude,
                } => {
                    let bump = BumpProfile {
                        t0: *t0,
                        chi0: *chi0,
                        radius: *radius,
                        amplitude: *amplitude,
                    };
                    let shape = to_shape(*shape, *ring_order);
                    build_bump_with_shape(&e3, &flow, &bump, shape, scenario.collar)?.field
                }
                PerturbationMode::Search { .. } => {
                    return Err(CommandError {
                        class: ExitClass::Precondition,
                        message: "perturbation.mode = search belongs to `certify`".into(),
                    })
                }
                PerturbationMode::Stream2d { .. } => unreachable!("rejected at parse time"),
            };
            let mc_report = mc::mc_report(&flow, &y, &rule)?;
            if scenario.output_csv {
                write_profile_csv_3d(&flow, &opts.out_dir, scenario.collar)?;
                write_integrand_csv(&flow.z, &y, &rule, &opts.out_dir)?;
            }
            mc_report
        }
        Built::Two { e2, flow } => {
            let rule = rule_2d(&e2, scenario, opts)?;
            let y = match &scenario.perturbation {
                PerturbationMode::SelfField => flow.z.clone(),
                PerturbationMode::Stream2d {
                    r0,
                    radius,
                    harmonic,
                    theta0,
                    amplitude,
                } => zonalmc_core::perturb::stream_bump_2d(
                    &e2, *r0, *radius, *harmonic, *theta0, *amplitude, 6,
                )?,
                _ => {
                    return Err(CommandError {
                        class: ExitClass::Precondition,
                        message: "2D mc needs perturbation.mode = self|stream2d".into(),
                    })
                }
            };
            let mc_report = mc::mc_report(&flow, &y, &rule)?;
            if scenario.output_csv {
                write_profile_csv_2d(&flow, &e2, &opts.out_dir, scenario.collar)?;
                write_integrand_csv(&flow.z, &y, &rule, &opts.out_dir)?;
            }
            mc_report
        }
    };
    report
        .timings_ms
        .push(("mc".into(), started.elapsed().as_secs_f64() * 1e3));
    if mc_report.div_y_residual > Tolerances::default().identity_abs {
        eprintln!(
            "warning: div Y residual {:.3e} exceeds {:.1e}; mc is defined for divergence-free Y",
            mc_report.div_y_residual,
            Tolerances::default().identity_abs
        );
    }
    let class = match mc_report.verdict {
        Verdict::Indeterminate => ExitClass::Indeterminate,
        _ => ExitClass::Ok,
    };
    println!(
        "mc_direct = {:.9e} | zonal = {} | commuting = {} | richardson = {:.2e} | verdict: {:?}",
        mc_report.mc_direct,
        mc_report
            .mc_zonal
            .map(|v| format!("{v:.9e}"))
            .unwrap_or_else(|| "n/a".into()),
        mc_report
            .mc_commuting
            .map(|v| format!("{v:.9e}"))
            .unwrap_or_else(|| "n/a".into()),
        mc_report.richardson_error,
        mc_report.verdict
    );
    report.mc = Some(mc_report);
    report.exit_class = class_name(class);
    write_report(&report, &opts.out_dir)?;
    Ok(Outcome { report, class })
}

fn to_shape(kind: ShapeKind, ring_order: u32) -> BumpShape {
    match kind {
        ShapeKind::Ring => BumpShape::Ring { order: ring_order },
        ShapeKind::Disk => BumpShape::Disk,
    }
}

/// `certify`: search for a positive certificate, or replay a stored one.
pub fn cmd_certify(
    scenario: &Scenario,
    config_text: &str,
    opts: &RunOptions,
) -> Result<Outcome, CommandError> {
    let report = new_report("certify", Some(scenario), Some(config_text));
    let started = Instant::now();
    let (e3, flow) = match build(scenario)? {
        Built::Three { e3, flow } => (e3, flow),
        Built::Two { .. } => {
            return Err(CommandError {
                class: ExitClass::Precondition,
                message:
                    "certify needs ellipsoid3d: the commuting-perturbation construction requires a transverse direction (dim ≥ 3)"
                        .into(),
            })
        }
    };
    let rule = rule_3d(&e3, scenario, opts)?;
    let cert_opts = match &scenario.perturbation {
        PerturbationMode::Search {
            shape,
            ring_order,
            budget,
            amplitude_max,
        } => CertifyOptions {
            budget: *budget,
            shape: to_shape(*shape, *ring_order),
            amp_max: *amplitude_max,
            ..CertifyOptions::default()
        },
        PerturbationMode::Explicit {
            shape,
            ring_order,
            t0,
            chi0,
            radius,
            amplitude,
        } => {
            // direct certification of an explicit bump: no search
            let bump = BumpProfile {
                t0: *t0,
                chi0: *chi0,
                radius: *radius,
                amplitude: *amplitude,
            };
            let shape = to_shape(*shape, *ring_order);
            let pf = build_bump_with_shape(&e3, &flow, &bump, shape, scenario.collar)?;
            let conditions = condition_report(&pf, &flow, &rule)?;
            let mc_report = mc::mc_report(&flow, &pf.field, &rule)?;
            let verdict = if mc_report.verdict == Verdict::Positive
                && conditions.satisfied(flow.tol.identity_abs)
            {
                Verdict::Positive
            } else {
                Verdict::Indeterminate
            };
            let cert = Certificate {
                schema_version: 1,
                tool_version: env!("CARGO_PKG_VERSION").into(),
                manifold_kind: "ellipsoid3d".into(),
                a: e3.a,
                p: flow_pq(&flow).0,
                q: flow_pq(&flow).1,
                profile: scenario.profile.clone(),
                shape,
                bump,
                conditions,
                mc: mc_report,
                verdict,
                search: None,
            };
            return finish_certify(report, cert, started, scenario, &e3, &flow, &rule, opts);
        }
        _ => CertifyOptions::default(),
    };
    let cert = certify_positive(&e3, &flow, &rule, &cert_opts)?;
    finish_certify(report, cert, started, scenario, &e3, &flow, &rule, opts)
}

fn flow_pq(flow: &ZonalFlow<3>) -> (i64, i64) {
    match flow.descriptor {
        zonalmc_core::zonal::KillingDescriptor::IntegerPq { p, q } => (p, q),
        _ => (0, 0),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_certify(
    mut report: RunReport,
    cert: Certificate,
    started: Instant,
    scenario: &Scenario,
    e3: &Ellipsoid3D,
    flow: &ZonalFlow<3>,
    rule: &QuadratureRule<3>,
    opts: &RunOptions,
) -> Result<Outcome, CommandError> {
    report
        .timings_ms
        .push(("certify".into(), started.elapsed().as_secs_f64() * 1e3));
    if scenario.output_csv {
        write_profile_csv_3d(flow, &opts.out_dir, scenario.collar)?;
        let pf = build_bump_with_shape(e3, flow, &cert.bump, cert.shape, rule.collar())?;
        write_integrand_csv(&flow.z, &pf.field, rule, &opts.out_dir)?;
    }
    std::fs::create_dir_all(&opts.out_dir)?;
    let cert_json = serde_json::to_string_pretty(&cert).map_err(|e| CommandError {
        class: ExitClass::Unexpected,
        message: e.to_string(),
    })?;
    std::fs::write(opts.out_dir.join("certificate.json"), cert_json)?;
    let class = match cert.verdict {
        Verdict::Positive => ExitClass::Ok,
        _ => ExitClass::Indeterminate,
    };
    println!(
        "certificate: verdict {:?} | mc_direct = {:.9e} | richardson = {:.2e} | conditions: div {:.2e}, [X,Y] {:.2e}, margin {:.3e}, max|Y(h)| {:.3e}",
        cert.verdict,
        cert.mc.mc_direct,
        cert.mc.richardson_error,
        cert.conditions.div_residual,
        cert.conditions.commute_residual,
        cert.conditions.support_margin,
        cert.conditions.max_y_of_norm_sq
    );
    report.certificate = Some(cert);
    report.exit_class = class_name(class);
    write_report(&report, &opts.out_dir)?;
    Ok(Outcome { report, class })
}

/// `certify --from-certificate`: rebuild everything from the stored
/// certificate and re-validate; mc must reproduce within the error budget.
pub fn cmd_certify_replay(cert_path: &Path, opts: &RunOptions) -> Result<Outcome, CommandError> {
    let text = std::fs::read_to_string(cert_path)?;
    let cert: Certificate = serde_json::from_str(&text).map_err(|e| CommandError {
        class: ExitClass::ParseError,
        message: format!("certificate `{}`: {e}", cert_path.display()),
    })?;
    let mut report = new_report("certify --from-certificate", None, Some(&text));
    let started = Instant::now();
    let e3 = make_ellipsoid_3d(cert.a)?;
    let flow = zonal_flow_3d(&e3, cert.p, cert.q, &cert.profile, Tolerances::default())?;
    let res = &cert.mc.resolutions;
    let scale = opts.resolution_scale;
    let rule = QuadratureRule::for_chart(
        e3.chart(),
        [
            scaled(res[0], scale),
            scaled(res[1], scale),
            scaled(res[2], scale),
        ],
        cert.mc.collar,
    )?;
    let (replayed, drift) = replay_certificate(&e3, &flow, &cert, &rule)?;
    report
        .timings_ms
        .push(("replay".into(), started.elapsed().as_secs_f64() * 1e3));
    let class = match replayed.verdict {
        Verdict::Positive => ExitClass::Ok,
        _ => ExitClass::Indeterminate,
    };
    println!(
        "replay: verdict {:?} | mc_direct = {:.9e} (stored {:.9e}, drift {:.2e})",
        replayed.verdict, replayed.mc.mc_direct, cert.mc.mc_direct, drift
    );
    report.replay_drift = Some(drift);
    report.certificate = Some(replayed);
    report.exit_class = class_name(class);
    write_report(&report, &opts.out_dir)?;
    Ok(Outcome { report, class })
}

fn write_integrand_csv<const D: usize>(
    z: &zonalmc_core::field::VectorField<D>,
    y: &zonalmc_core::field::VectorField<D>,
    rule: &QuadratureRule<D>,
    out_dir: &Path,
) -> Result<(), CommandError> {
    std::fs::create_dir_all(out_dir)?;
    let mut rows = String::new();
    let names: Vec<String> = rule
        .chart()
        .coords()
        .iter()
        .map(|c| c.name.clone())
        .collect();
    rows.push_str(&names.join(","));
    rows.push_str(",integrand,weight\n");
    rule.for_each_node(|x, w| {
        let v = mc::mc_direct_integrand_at(z, y, x)?;
        for (i, xi) in x.iter().enumerate() {
            if i > 0 {
                rows.push(',');
            }
            rows.push_str(&format!("{xi:.12e}"));
        }
        rows.push_str(&format!(",{v:.12e},{w:.12e}\n"));
        Ok(())
    })?;
    std::fs::write(out_dir.join("integrand.csv"), rows)?;
    Ok(())
}

fn write_profile_csv_3d(
    flow: &ZonalFlow<3>,
    out_dir: &Path,
    collar: f64,
) -> Result<(), CommandError> {
    std::fs::create_dir_all(out_dir)?;
    let mut rows = String::from("chi,f,f_sq,norm_sq_x,f_factor,sgn\n");
    let lo = collar;
    let hi = std::f64::consts::FRAC_PI_2 - collar;
    for k in 0..512 {
        let chi = lo + (hi - lo) * (k as f64 + 0.5) / 512.0;
        let p = [0.0, 0.0, chi];
        let f = flow.f.value(p)?;
        let f2 = flow.f_sq.value(p)?;
        let h = flow.norm_sq_x.value(p)?;
        let ff = flow.f_factor_at(p)?;
        let sgn = flow.sgn_at(p)?;
        rows.push_str(&format!(
            "{chi:.9e},{f:.9e},{f2:.9e},{h:.9e},{ff:.9e},{sgn}\n"
        ));
    }
    std::fs::write(out_dir.join("profile.csv"), rows)?;
    Ok(())
}

fn write_profile_csv_2d(
    flow: &ZonalFlow<2>,
    e2: &Ellipsoid2D,
    out_dir: &Path,
    collar: f64,
) -> Result<(), CommandError> {
    std::fs::create_dir_all(out_dir)?;
    let mut rows = String::from("r,f,f_sq,norm_sq_x,f_factor,sgn\n");
    let lo = -e2.d + collar;
    let hi = e2.d - collar;
    for k in 0..512 {
        let r = lo + (hi - lo) * (k as f64 + 0.5) / 512.0;
        let p = [r, 0.0];
        let f = flow.f.value(p)?;
        let f2 = flow.f_sq.value(p)?;
        let h = flow.norm_sq_x.value(p)?;
        let ff = flow.f_factor_at(p)?;
        let sgn = flow.sgn_at(p)?;
        rows.push_str(&format!(
            "{r:.9e},{f:.9e},{f2:.9e},{h:.9e},{ff:.9e},{sgn}\n"
        ));
    }
    std::fs::write(out_dir.join("profile.csv"), rows)?;
    Ok(())
}
