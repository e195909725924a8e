//! Line-oriented scenario configuration.
//!
//! Format: one `key = value` pair per line, `#` comments, dotted key paths.
//! Unknown and duplicate keys are rejected with line-precise diagnostics.
//! The full scenario lives in one reviewable file; `canonical()` re-emits
//! the resolved scenario in a fixed key order, and parsing that echo yields
//! the same scenario (round-trip idempotence).

use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use zonalmc_core::profiles::ProfileSpec;

#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "config line {l}, key `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "config line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "config key `{k}`: {}", self.message),
            (None, None) => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, key: Option<&str>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        key: key.map(|s| s.to_string()),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldKind {
    Ellipsoid2d,
    Ellipsoid3d,
    Sphere2,
}

impl ManifoldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ManifoldKind::Ellipsoid2d => "ellipsoid2d",
            ManifoldKind::Ellipsoid3d => "ellipsoid3d",
            ManifoldKind::Sphere2 => "sphere2",
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationMode {
    /// No perturbation (classify/verify scenarios).
    None,
    /// Y = Z itself (trivial mc check).
    SelfField,
    /// Explicit bump parameters on the 3D ellipsoid.
    Explicit {
        shape: ShapeKind,
        ring_order: u32,
        t0: f64,
        chi0: f64,
        radius: f64,
        amplitude: f64,
    },
    /// Derivative-free search over bump parameters (3D).
    Search {
        shape: ShapeKind,
        ring_order: u32,
        budget: usize,
        amplitude_max: f64,
    },
    /// User-supplied stream-function bump on a 2D ellipsoid.
    Stream2d {
        r0: f64,
        radius: f64,
        harmonic: u32,
        theta0: f64,
        amplitude: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Ring,
    Disk,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Scenario {
    pub manifold_kind: ManifoldKind,
    pub a: f64,
    pub profile_resolution: usize,
    /// Integer pair for the Killing factor (3D); `irrational` switches the
    /// S¹ flag off and reads the pair as floats.
    pub p: i64,
    pub q: i64,
    pub irrational: bool,
    pub p_real: f64,
    pub q_real: f64,
    pub profile: ProfileSpec,
    pub perturbation: PerturbationMode,
    pub periodic_resolution: usize,
    pub bounded_resolution: usize,
    pub collar: f64,
    pub seed: u64,
    pub output_csv: bool,
    pub debug_negate_g22: bool,
}

struct Raw {
    entries: BTreeMap<String, (usize, String)>,
    consumed: std::cell::RefCell<Vec<String>>,
}

impl Raw {
    fn parse(text: &str) -> Result<Raw, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let stripped = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped
                .split_once('=')
                .ok_or_else(|| err(Some(line_no), None, "expected `key = value`"))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(err(Some(line_no), None, "empty key"));
            }
            if let Some((prev, _)) = entries.get(&key) {
                return Err(err(
                    Some(line_no),
                    Some(&key),
                    format!("duplicate key (first set on line {prev})"),
                ));
            }
            entries.insert(key, (line_no, value));
        }
        Ok(Raw {
            entries,
            consumed: std::cell::RefCell::new(Vec::new()),
        })
    }

    fn take(&self, key: &str) -> Option<(usize, String)> {
        self.consumed.borrow_mut().push(key.to_string());
        self.entries.get(key).cloned()
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<f64>().map(Some).map_err(|_| {
                err(
                    Some(line),
                    Some(key),
                    format!("expected a number, got `{v}`"),
                )
            }),
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<usize>().map(Some).map_err(|_| {
                err(
                    Some(line),
                    Some(key),
                    format!("expected a non-negative integer, got `{v}`"),
                )
            }),
        }
    }

    fn i64(&self, key: &str) -> Result<Option<i64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<i64>().map(Some).map_err(|_| {
                err(
                    Some(line),
                    Some(key),
                    format!("expected an integer, got `{v}`"),
                )
            }),
        }
    }

    fn bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => match v.as_str() {
                "true" => Ok(Some(true)),
                "false" => Ok(Some(false)),
                _ => Err(err(
                    Some(line),
                    Some(key),
                    format!("expected true|false, got `{v}`"),
                )),
            },
        }
    }

    fn string(&self, key: &str) -> Option<(usize, String)> {
        self.take(key)
    }

    fn reject_unknown(&self) -> Result<(), ConfigError> {
        let consumed = self.consumed.borrow();
        for (key, (line, _)) in &self.entries {
            if !consumed.iter().any(|c| c == key) {
                return Err(err(Some(*line), Some(key), "unknown key"));
            }
        }
        Ok(())
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let raw = Raw::parse(text)?;

    let (kind_line, kind_str) = raw
        .string("manifold.kind")
        .ok_or_else(|| err(None, Some("manifold.kind"), "required key is missing"))?;
    let manifold_kind = match kind_str.as_str() {
        "ellipsoid2d" => ManifoldKind::Ellipsoid2d,
        "ellipsoid3d" => ManifoldKind::Ellipsoid3d,
        "sphere2" => ManifoldKind::Sphere2,
        other => {
            return Err(err(
                Some(kind_line),
                Some("manifold.kind"),
                format!("unknown manifold `{other}` (ellipsoid2d|ellipsoid3d|sphere2)"),
            ))
        }
    };
    let a = match manifold_kind {
        ManifoldKind::Sphere2 => {
            if let Some(a) = raw.f64("manifold.a")? {
                if (a - 1.0).abs() > 1e-15 {
                    return Err(err(None, Some("manifold.a"), "sphere2 fixes a = 1"));
                }
            }
            1.0
        }
        _ => raw
            .f64("manifold.a")?
            .ok_or_else(|| err(None, Some("manifold.a"), "required key is missing"))?,
    };
    if !(a > 0.0) {
        return Err(err(
            None,
            Some("manifold.a"),
            "aspect ratio must be positive",
        ));
    }
    let profile_resolution = raw.usize("manifold.profile-resolution")?.unwrap_or(256);

    let is_3d = manifold_kind == ManifoldKind::Ellipsoid3d;
    let irrational = raw.bool("flow.irrational")?.unwrap_or(false);
    let (mut p, mut q) = (1i64, 0i64);
    let (mut p_real, mut q_real) = (1.0f64, 0.0f64);
    if is_3d {
        if irrational {
            p_real = raw
                .f64("flow.p")?
                .ok_or_else(|| err(None, Some("flow.p"), "required for ellipsoid3d"))?;
            q_real = raw
                .f64("flow.q")?
                .ok_or_else(|| err(None, Some("flow.q"), "required for ellipsoid3d"))?;
        } else {
            p = raw
                .i64("flow.p")?
                .ok_or_else(|| err(None, Some("flow.p"), "required for ellipsoid3d (integer; set flow.irrational = true for a real pair)"))?;
            q = raw
                .i64("flow.q")?
                .ok_or_else(|| err(None, Some("flow.q"), "required for ellipsoid3d"))?;
            p_real = p as f64;
            q_real = q as f64;
        }
    } else {
        // consume potential leftovers politely: 2D flows have no (p, q)
        if raw.take("flow.p").is_some() || raw.take("flow.q").is_some() {
            return Err(err(
                None,
                Some("flow.p"),
                "2D flows take no (p, q); remove these keys",
            ));
        }
    }

    let profile = parse_profile(&raw)?;
    let perturbation = parse_perturbation(&raw, is_3d)?;

    let periodic_resolution = raw.usize("quadrature.periodic")?.unwrap_or(32);
    let bounded_resolution = raw.usize("quadrature.bounded")?.unwrap_or(96);
    let collar = raw.f64("quadrature.collar")?.unwrap_or(1e-3);
    if !(collar > 0.0) {
        return Err(err(
            None,
            Some("quadrature.collar"),
            "collar must be positive",
        ));
    }
    let seed = raw.i64("seed")?.unwrap_or(42).unsigned_abs();
    let output_csv = raw.bool("output.csv")?.unwrap_or(true);
    let debug_negate_g22 = raw.bool("debug.negate-g22")?.unwrap_or(false);

    raw.reject_unknown()?;

    Ok(Scenario {
        manifold_kind,
        a,
        profile_resolution,
        p,
        q,
        irrational,
        p_real,
        q_real,
        profile,
        perturbation,
        periodic_resolution,
        bounded_resolution,
        collar,
        seed,
        output_csv,
        debug_negate_g22,
    })
}

fn parse_profile(raw: &Raw) -> Result<ProfileSpec, ConfigError> {
    let (line, family) = raw
        .string("flow.profile.family")
        .ok_or_else(|| err(None, Some("flow.profile.family"), "required key is missing"))?;
    let amplitude = raw.f64("flow.profile.amplitude")?.unwrap_or(1.0);
    match family.as_str() {
        "bump" | "raised-cosine" => {
            let center = raw.f64("flow.profile.center")?.ok_or_else(|| {
                err(
                    None,
                    Some("flow.profile.center"),
                    "required for this family",
                )
            })?;
            let radius = raw.f64("flow.profile.radius")?.ok_or_else(|| {
                err(
                    None,
                    Some("flow.profile.radius"),
                    "required for this family",
                )
            })?;
            if family == "bump" {
                Ok(ProfileSpec::Bump {
                    center,
                    radius,
                    amplitude,
                })
            } else {
                Ok(ProfileSpec::RaisedCosine {
                    center,
                    radius,
                    amplitude,
                })
            }
        }
        "poly-cos2" => {
            let (cl, text) = raw
                .string("flow.profile.coeffs")
                .ok_or_else(|| err(None, Some("flow.profile.coeffs"), "required for poly-cos2"))?;
            let coeffs = text
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| {
                    err(
                        Some(cl),
                        Some("flow.profile.coeffs"),
                        "expected a comma-separated list of numbers",
                    )
                })?;
            Ok(ProfileSpec::PolyCos2 { coeffs, amplitude })
        }
        "table" => {
            let (pl, text) = raw
                .string("flow.profile.points")
                .ok_or_else(|| err(None, Some("flow.profile.points"), "required for table"))?;
            let mut points = Vec::new();
            for item in text.split(';') {
                let item = item.trim();
                if item.is_empty() {
                    continue;
                }
                let (s, f) = item.split_once(':').ok_or_else(|| {
                    err(
                        Some(pl),
                        Some("flow.profile.points"),
                        format!("expected `s:f`, got `{item}`"),
                    )
                })?;
                let sv = s.trim().parse::<f64>().map_err(|_| {
                    err(
                        Some(pl),
                        Some("flow.profile.points"),
                        format!("bad abscissa `{s}`"),
                    )
                })?;
                let fv = f.trim().parse::<f64>().map_err(|_| {
                    err(
                        Some(pl),
                        Some("flow.profile.points"),
                        format!("bad value `{f}`"),
                    )
                })?;
                points.push((sv, fv));
            }
            let degree = raw.usize("flow.profile.degree")?.unwrap_or(3) as u32;
            Ok(ProfileSpec::Table { points, degree })
        }
        other => Err(err(
            Some(line),
            Some("flow.profile.family"),
            format!("unknown family `{other}` (bump|raised-cosine|poly-cos2|table)"),
        )),
    }
}

fn parse_perturbation(raw: &Raw, is_3d: bool) -> Result<PerturbationMode, ConfigError> {
    let mode = raw.string("perturbation.mode");
    let mode_name = mode
        .as_ref()
        .map(|(_, m)| m.clone())
        .unwrap_or_else(|| "none".into());
    let parsed = parse_perturbation_inner(raw, is_3d, mode)?;
    // keys that exist but were not consumed by the selected mode get a
    // mode-specific diagnostic instead of a generic "unknown key"
    for key in [
        "perturbation.t0",
        "perturbation.chi0",
        "perturbation.radius",
        "perturbation.amplitude",
        "perturbation.budget",
        "perturbation.amplitude-max",
        "perturbation.r0",
        "perturbation.harmonic",
        "perturbation.theta0",
        "perturbation.shape",
        "perturbation.ring-order",
    ] {
        if raw.entries.contains_key(key) && !raw.consumed.borrow().iter().any(|c| c == key) {
            let (line, _) = raw.entries[key].clone();
            return Err(err(
                Some(line),
                Some(key),
                format!("not applicable to perturbation.mode = {mode_name}"),
            ));
        }
    }
    Ok(parsed)
}

fn parse_shape(raw: &Raw) -> Result<(ShapeKind, u32), ConfigError> {
    let shape = match raw.string("perturbation.shape") {
        None => ShapeKind::Ring,
        Some((line, s)) => match s.as_str() {
            "ring" => ShapeKind::Ring,
            "disk" => ShapeKind::Disk,
            other => {
                return Err(err(
                    Some(line),
                    Some("perturbation.shape"),
                    format!("unknown shape `{other}` (ring|disk)"),
                ))
            }
        },
    };
    let ring_order = raw.usize("perturbation.ring-order")?.unwrap_or(6) as u32;
    Ok((shape, ring_order))
}

fn parse_perturbation_inner(
    raw: &Raw,
    is_3d: bool,
    mode: Option<(usize, String)>,
) -> Result<PerturbationMode, ConfigError> {
    match mode {
        None => Ok(PerturbationMode::None),
        Some((line, m)) => match m.as_str() {
            "none" => Ok(PerturbationMode::None),
            "self" => Ok(PerturbationMode::SelfField),
            "explicit" => {
                if !is_3d {
                    return Err(err(
                        Some(line),
                        Some("perturbation.mode"),
                        "explicit bump construction needs ellipsoid3d (use stream2d on surfaces)",
                    ));
                }
                let (shape, ring_order) = parse_shape(raw)?;
                let amplitude = raw.f64("perturbation.amplitude")?.unwrap_or(1.0);
                let t0 = raw.f64("perturbation.t0")?.unwrap_or(0.0);
                let chi0 = raw
                    .f64("perturbation.chi0")?
                    .ok_or_else(|| err(None, Some("perturbation.chi0"), "required for explicit"))?;
                let radius = raw.f64("perturbation.radius")?.ok_or_else(|| {
                    err(None, Some("perturbation.radius"), "required for explicit")
                })?;
                Ok(PerturbationMode::Explicit {
                    shape,
                    ring_order,
                    t0,
                    chi0,
                    radius,
                    amplitude,
                })
            }
            "search" => {
                if !is_3d {
                    return Err(err(
                        Some(line),
                        Some("perturbation.mode"),
                        "the positivity search needs ellipsoid3d",
                    ));
                }
                let (shape, ring_order) = parse_shape(raw)?;
                let budget = raw.usize("perturbation.budget")?.unwrap_or(200);
                let amplitude_max = raw.f64("perturbation.amplitude-max")?.unwrap_or(1.0);
                Ok(PerturbationMode::Search {
                    shape,
                    ring_order,
                    budget,
                    amplitude_max,
                })
            }
            "stream2d" => {
                if is_3d {
                    return Err(err(
                        Some(line),
                        Some("perturbation.mode"),
                        "stream2d is the 2D user-supplied field; use explicit|search on ellipsoid3d",
                    ));
                }
                let amplitude = raw.f64("perturbation.amplitude")?.unwrap_or(1.0);
                let r0 = raw
                    .f64("perturbation.r0")?
                    .ok_or_else(|| err(None, Some("perturbation.r0"), "required for stream2d"))?;
                let radius = raw.f64("perturbation.radius")?.ok_or_else(|| {
                    err(None, Some("perturbation.radius"), "required for stream2d")
                })?;
                let harmonic = raw.usize("perturbation.harmonic")?.unwrap_or(1) as u32;
                let theta0 = raw.f64("perturbation.theta0")?.unwrap_or(0.0);
                Ok(PerturbationMode::Stream2d {
                    r0,
                    radius,
                    harmonic,
                    theta0,
                    amplitude,
                })
            }
            other => Err(err(
                Some(line),
                Some("perturbation.mode"),
                format!("unknown mode `{other}` (none|self|explicit|search|stream2d)"),
            )),
        },
    }
}

/// Canonical re-serialization: fixed key order, full resolved scenario.
pub fn canonical(s: &Scenario) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("manifold.kind", s.manifold_kind.as_str().into());
    push("manifold.a", fmt_f64(s.a));
    push(
        "manifold.profile-resolution",
        s.profile_resolution.to_string(),
    );
    if s.manifold_kind == ManifoldKind::Ellipsoid3d {
        push("flow.irrational", s.irrational.to_string());
        if s.irrational {
            push("flow.p", fmt_f64(s.p_real));
            push("flow.q", fmt_f64(s.q_real));
        } else {
            push("flow.p", s.p.to_string());
            push("flow.q", s.q.to_string());
        }
    }
    match &s.profile {
        ProfileSpec::Bump {
            center,
            radius,
            amplitude,
        } => {
            push("flow.profile.family", "bump".into());
            push("flow.profile.center", fmt_f64(*center));
            push("flow.profile.radius", fmt_f64(*radius));
            push("flow.profile.amplitude", fmt_f64(*amplitude));
        }
        ProfileSpec::RaisedCosine {
            center,
            radius,
            amplitude,
        } => {
            push("flow.profile.family", "raised-cosine".into());
            push("flow.profile.center", fmt_f64(*center));
            push("flow.profile.radius", fmt_f64(*radius));
            push("flow.profile.amplitude", fmt_f64(*amplitude));
        }
        ProfileSpec::PolyCos2 { coeffs, amplitude } => {
            push("flow.profile.family", "poly-cos2".into());
            push(
                "flow.profile.coeffs",
                coeffs
                    .iter()
                    .map(|c| fmt_f64(*c))
                    .collect::<Vec<_>>()
                    .join(", "),
            );
            push("flow.profile.amplitude", fmt_f64(*amplitude));
        }
        ProfileSpec::Table { points, degree } => {
            push("flow.profile.family", "table".into());
            push(
                "flow.profile.points",
                points
                    .iter()
                    .map(|(s, f)| format!("{}:{}", fmt_f64(*s), fmt_f64(*f)))
                    .collect::<Vec<_>>()
                    .join("; "),
            );
            push("flow.profile.degree", degree.to_string());
        }
    }
    match &s.perturbation {
        PerturbationMode::None => push("perturbation.mode", "none".into()),
        PerturbationMode::SelfField => push("perturbation.mode", "self".into()),
        PerturbationMode::Explicit {
            shape,
            ring_order,
            t0,
            chi0,
            radius,
            amplitude,
        } => {
            push("perturbation.mode", "explicit".into());
            push("perturbation.shape", shape_str(shape).into());
            push("perturbation.ring-order", ring_order.to_string());
            push("perturbation.t0", fmt_f64(*t0));
            push("perturbation.chi0", fmt_f64(*chi0));
            push("perturbation.radius", fmt_f64(*radius));
            push("perturbation.amplitude", fmt_f64(*amplitude));
        }
        PerturbationMode::Search {
            shape,
            ring_order,
            budget,
            amplitude_max,
        } => {
            push("perturbation.mode", "search".into());
            push("perturbation.shape", shape_str(shape).into());
            push("perturbation.ring-order", ring_order.to_string());
            push("perturbation.budget", budget.to_string());
            push("perturbation.amplitude-max", fmt_f64(*amplitude_max));
        }
        PerturbationMode::Stream2d {
            r0,
            radius,
            harmonic,
            theta0,
            amplitude,
        } => {
            push("perturbation.mode", "stream2d".into());
            push("perturbation.r0", fmt_f64(*r0));
            push("perturbation.radius", fmt_f64(*radius));
            push("perturbation.harmonic", harmonic.to_string());
            push("perturbation.theta0", fmt_f64(*theta0));
            push("perturbation.amplitude", fmt_f64(*amplitude));
        }
    }
    push("quadrature.periodic", s.periodic_resolution.to_string());
    push("quadrature.bounded", s.bounded_resolution.to_string());
    push("quadrature.collar", fmt_f64(s.collar));
    push("seed", s.seed.to_string());
    push("output.csv", s.output_csv.to_string());
    if s.debug_negate_g22 {
        push("debug.negate-g22", "true".into());
    }
    out
}

fn shape_str(s: &ShapeKind) -> &'static str {
    match s {
        ShapeKind::Ring => "ring",
        ShapeKind::Disk => "disk",
    }
}

fn fmt_f64(v: f64) -> String {
    // shortest representation that round-trips
    let s = format!("{v}");
    debug_assert_eq!(s.parse::<f64>().unwrap(), v);
    s
}
