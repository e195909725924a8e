//! One-variable profiles: mollifiers and the named flow-profile families.
//!
//! Everything here is a [`Profile`]: value plus three derivatives, so the
//! same definitions serve flow profiles f(χ), stream-function factors and
//! their coefficient-level derivatives.

use crate::error::{Error, Result};
use crate::series::{Profile, Series};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// e(t) = exp(−1/t) for t > 0, identically 0 for t ≤ 0.
///
/// Below t ≈ 1/708 the value underflows to exactly 0.0; returning the zero
/// series there avoids Inf·0 in the chain rule.
pub fn flat_exp(t: Series) -> Series {
    if t.d[0] <= 1.0 / 708.0 {
        return Series::ZERO;
    }
    (-t.recip()).exp()
}

/// Smooth step: 0 for t ≤ 0, 1 for t ≥ 1, e(t)/(e(t)+e(1−t)) between.
pub fn smooth_step(t: Series) -> Series {
    if t.d[0] <= 0.0 {
        return Series::ZERO;
    }
    if t.d[0] >= 1.0 {
        return Series::constant(1.0);
    }
    let a = flat_exp(t);
    let b = flat_exp(-t + 1.0);
    a / (a + b)
}

/// Plateau cutoff built from exp(−1/(1−x²)): identically 1 on |x| ≤ ½,
/// identically 0 on |x| ≥ 1. Expressed through u = x², so fields stay
/// smooth at the bump center.
pub fn plateau_of_u(u: Series) -> Series {
    smooth_step((-u + 1.0) * (4.0 / 3.0))
}

pub fn plateau_bump(x: Series) -> Series {
    plateau_of_u(x * x)
}

/// Simple bump exp(1 − 1/(1−x²)) on |x| < 1, 0 outside; equals 1 at x = 0.
pub fn simple_bump(x: Series) -> Series {
    let u = x * x;
    // the value underflows to exactly 0.0 once 1/(1−x²) exceeds ~700
    if u.d[0] >= 1.0 - 1.0 / 700.0 {
        return Series::ZERO;
    }
    let w = -u + 1.0; // 1 − x²
    (-w.recip() + 1.0).exp()
}

/// Named one-variable profile families for zonal-flow construction.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ProfileSpec {
    /// amplitude · exp(1 − 1/(1 − x²)), x = (s − center)/radius.
    Bump {
        center: f64,
        radius: f64,
        amplitude: f64,
    },
    /// amplitude · cos²(π x / 2) on |x| ≤ 1, x = (s − center)/radius. C¹ at
    /// the support edge with bounded curvature.
    RaisedCosine {
        center: f64,
        radius: f64,
        amplitude: f64,
    },
    /// `amplitude · Σ coeffs[k] (cos² s)^k` — smooth, not compactly supported.
    PolyCos2 { coeffs: Vec<f64>, amplitude: f64 },
    /// Natural cubic spline through (s, value) pairs; endpoints must vanish
    /// so the profile extends by zero.
    Table {
        points: Vec<(f64, f64)>,
        degree: u32,
    },
}

impl ProfileSpec {
    /// Support interval when the family is compactly supported.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            ProfileSpec::Bump { center, radius, .. }
            | ProfileSpec::RaisedCosine { center, radius, .. } => {
                Some((center - radius, center + radius))
            }
            ProfileSpec::PolyCos2 { .. } => None,
            ProfileSpec::Table { points, .. } => {
                let lo = points.first().map(|p| p.0)?;
                let hi = points.last().map(|p| p.0)?;
                Some((lo, hi))
            }
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Profile>> {
        match self {
            ProfileSpec::Bump {
                center,
                radius,
                amplitude,
            } => {
                if !(*radius > 0.0) {
                    return Err(Error::Argument("bump radius must be positive".into()));
                }
                let (c, r, a) = (*center, *radius, *amplitude);
                Ok(Arc::new(move |s: f64| {
                    let x = (Series::var(s) + (-c)) * (1.0 / r);
                    simple_bump(x) * a
                }))
            }
            ProfileSpec::RaisedCosine {
                center,
                radius,
                amplitude,
            } => {
                if !(*radius > 0.0) {
                    return Err(Error::Argument(
                        "raised-cosine radius must be positive".into(),
                    ));
                }
                let (c, r, a) = (*center, *radius, *amplitude);
                Ok(Arc::new(move |s: f64| {
                    let x = (Series::var(s) + (-c)) * (1.0 / r);
                    if x.d[0].abs() >= 1.0 {
                        return Series::ZERO;
                    }
                    let half = x * (std::f64::consts::PI / 2.0);
                    half.cos().powi(2) * a
                }))
            }
            ProfileSpec::PolyCos2 { coeffs, amplitude } => {
                if coeffs.is_empty() {
                    return Err(Error::Argument(
                        "poly-cos2 needs at least one coefficient".into(),
                    ));
                }
                let cs = coeffs.clone();
                let a = *amplitude;
                Ok(Arc::new(move |s: f64| {
                    let u = Series::var(s).cos().powi(2);
                    // Horner over u
                    let mut acc = Series::constant(0.0);
                    for &c in cs.iter().rev() {
                        acc = acc * u + c;
                    }
                    acc * a
                }))
            }
            ProfileSpec::Table { points, degree } => {
                if *degree != 3 {
                    return Err(Error::Argument(format!(
                        "only cubic (degree 3) table profiles are supported, got {degree}"
                    )));
                }
                let spline = CubicSpline::natural(points)?;
                Ok(Arc::new(move |s: f64| spline.eval(s)))
            }
        }
    }
}

/// Natural cubic spline with zero-extension outside the knot range.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Argument(
                "table profile needs at least 3 points".into(),
            ));
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in pts.windows(2) {
            if w[1].0 - w[0].0 <= 0.0 {
                return Err(Error::Argument(
                    "table abscissae must be strictly increasing".into(),
                ));
            }
        }
        if pts.first().unwrap().1 != 0.0 || pts.last().unwrap().1 != 0.0 {
            return Err(Error::Argument(
                "table profile endpoints must be zero so the profile extends by zero".into(),
            ));
        }
        let n = pts.len();
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        // tridiagonal solve for natural spline second derivatives
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        b[0] = 1.0;
        b[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            a[i] = h0;
            b[i] = 2.0 * (h0 + h1);
            c[i] = h1;
            d[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        }
        // Thomas algorithm
        for i in 1..n {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = d[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
        }
        Ok(CubicSpline { xs, ys, m })
    }

    pub fn eval(&self, s: f64) -> Series {
        let n = self.xs.len();
        if s <= self.xs[0] || s >= self.xs[n - 1] {
            return Series::ZERO;
        }
        let i = match self.xs.partition_point(|x| *x <= s) {
            0 => 0,
            k => k - 1,
        }
        .min(n - 2);
        let h = self.xs[i + 1] - self.xs[i];
        let t = s - self.xs[i];
        let u = self.xs[i + 1] - s;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let v = m0 * u * u * u / (6.0 * h)
            + m1 * t * t * t / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * u
            + (y1 / h - m1 * h / 6.0) * t;
        let d1 = -m0 * u * u / (2.0 * h) + m1 * t * t / (2.0 * h) - (y0 / h - m0 * h / 6.0)
            + (y1 / h - m1 * h / 6.0);
        let d2 = m0 * u / h + m1 * t / h;
        let d3 = (m1 - m0) / h;
        Series { d: [v, d1, d2, d3] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_is_one_inside_zero_outside() {
        for &x in &[0.0, 0.2, 0.5] {
            assert!((plateau_bump(Series::var(x)).d[0] - 1.0).abs() < 1e-15);
        }
        for &x in &[1.0, 1.3, -2.0] {
            assert_eq!(plateau_bump(Series::var(x)).d[0], 0.0);
        }
        let mid = plateau_bump(Series::var(0.8)).d[0];
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn simple_bump_derivatives_match_fd() {
        let f = |x: f64| {
            if x.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - x * x)).exp()
            }
        };
        let h = 1e-5;
        for &x in &[0.0, 0.4, -0.7] {
            let s = simple_bump(Series::var(x));
            let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
            let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            assert!((s.d[0] - f(x)).abs() < 1e-14);
            assert!((s.d[1] - d1).abs() < 1e-8, "x={x}: {} vs {}", s.d[1], d1);
            assert!((s.d[2] - d2).abs() < 1e-4);
        }
    }

    #[test]
    fn smooth_step_flat_at_both_ends() {
        let lo = smooth_step(Series::var(1e-9));
        let hi = smooth_step(Series::var(1.0 - 1e-9));
        assert!(lo.d[0].abs() < 1e-12 && lo.d[1].abs() < 1e-6);
        assert!((hi.d[0] - 1.0).abs() < 1e-12 && hi.d[1].abs() < 1e-6);
    }

    #[test]
    fn spline_interpolates_and_is_c2() {
        let pts = vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.5), (1.5, 0.0)];
        let sp = CubicSpline::natural(&pts).unwrap();
        for &(x, y) in &pts[1..3] {
            assert!((sp.eval(x + 1e-12).d[0] - y).abs() < 1e-9);
        }
        // continuity of value, first and second derivative across a knot
        let eps = 1e-7;
        for k in [0.5, 1.0] {
            let l = sp.eval(k - eps);
            let r = sp.eval(k + eps);
            assert!((l.d[0] - r.d[0]).abs() < 1e-6);
            assert!((l.d[1] - r.d[1]).abs() < 1e-5);
            assert!((l.d[2] - r.d[2]).abs() < 1e-4);
        }
    }

    #[test]
    fn table_requires_zero_endpoints() {
        let bad = ProfileSpec::Table {
            points: vec![(0.0, 0.1), (0.5, 1.0), (1.0, 0.0)],
            degree: 3,
        };
        assert!(bad.build().is_err());
        let wrong_degree = ProfileSpec::Table {
            points: vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)],
            degree: 2,
        };
        assert!(wrong_degree.build().is_err());
    }
}
