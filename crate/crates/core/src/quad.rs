//! Tensor-product quadrature over collar-trimmed charts.
//!
//! Periodic axes use the uniform (trapezoid) rule, which is spectrally
//! accurate for smooth periodic integrands; bounded axes use Gauss-Legendre
//! on the collar-trimmed interval. Node order is fixed, so reductions are
//! bit-stable run to run.

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for k in 0..m {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    (nodes, weights)
}

/// (P_n(x), P_n'(x)).
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrate a smooth function over [a, b] with an n-point Gauss-Legendre rule.
pub fn gl_integrate(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (xs, ws) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut s = 0.0;
    for (x, w) in xs.iter().zip(ws.iter()) {
        s += w * f(mid + half * x);
    }
    s * half
}

#[derive(Debug, Clone)]
pub struct AxisRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Clone)]
pub struct QuadratureRule<const D: usize> {
    chart: Chart<D>,
    axes: Vec<AxisRule>,
    resolutions: [usize; D],
    collar: f64,
}

impl<const D: usize> std::fmt::Debug for QuadratureRule<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "QuadratureRule(chart={}, res={:?}, collar={:.1e})",
            self.chart.name(),
            self.resolutions,
            self.collar
        )
    }
}

impl<const D: usize> QuadratureRule<D> {
    pub fn for_chart(chart: &Chart<D>, resolutions: [usize; D], collar: f64) -> Result<Self> {
        if collar < 0.0 {
            return Err(Error::Argument("collar must be non-negative".into()));
        }
        let mut axes = Vec::with_capacity(D);
        for (i, spec) in chart.coords().iter().enumerate() {
            let n = resolutions[i];
            if n == 0 {
                return Err(Error::Argument(format!(
                    "resolution for axis {} must be positive",
                    spec.name
                )));
            }
            if spec.periodic {
                let h = spec.span() / n as f64;
                let nodes = (0..n).map(|k| spec.lo + (k as f64 + 0.5) * h).collect();
                axes.push(AxisRule {
                    nodes,
                    weights: vec![h; n],
                });
            } else {
                let (lo, hi) = (spec.lo + collar, spec.hi - collar);
                if !(hi > lo) {
                    return Err(Error::Argument(format!(
                        "collar {collar} leaves empty interval on axis {}",
                        spec.name
                    )));
                }
                let (xs, ws) = gauss_legendre(n);
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                axes.push(AxisRule {
                    nodes: xs.iter().map(|x| mid + half * x).collect(),
                    weights: ws.iter().map(|w| w * half).collect(),
                });
            }
        }
        Ok(QuadratureRule {
            chart: chart.clone(),
            axes,
            resolutions,
            collar,
        })
    }

    pub fn chart(&self) -> &Chart<D> {
        &self.chart
    }

    pub fn collar(&self) -> f64 {
        self.collar
    }

    pub fn resolutions(&self) -> [usize; D] {
        self.resolutions
    }

    pub fn node_count(&self) -> usize {
        self.resolutions.iter().product()
    }

    /// Same chart and collar at doubled per-axis resolution.
    pub fn doubled(&self) -> Result<Self> {
        let res = std::array::from_fn(|i| self.resolutions[i] * 2);
        Self::for_chart(&self.chart, res, self.collar)
    }

    /// Same chart and collar with every axis resolution scaled.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::Argument("resolution scale must be positive".into()));
        }
        let res = std::array::from_fn(|i| {
            ((self.resolutions[i] as f64 * factor).round() as usize).max(2)
        });
        Self::for_chart(&self.chart, res, self.collar)
    }

    /// Visit every tensor-product node in fixed order.
    pub fn for_each_node(&self, mut f: impl FnMut([f64; D], f64) -> Result<()>) -> Result<()> {
        let mut idx = [0usize; D];
        loop {
            let mut x = [0.0; D];
            let mut w = 1.0;
            for i in 0..D {
                x[i] = self.axes[i].nodes[idx[i]];
                w *= self.axes[i].weights[idx[i]];
            }
            f(x, w)?;
            // odometer increment
            let mut axis = D;
            loop {
                if axis == 0 {
                    return Ok(());
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < self.axes[axis].nodes.len() {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }

    /// Plain weighted sum of `f` over nodes (no density factor).
    pub fn integrate_fn(&self, f: impl Fn([f64; D]) -> Result<f64>) -> Result<f64> {
        let mut acc = 0.0;
        self.for_each_node(|x, w| {
            let v = f(x)?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "integrand".into(),
                    point: x.to_vec(),
                });
            }
            acc += w * v;
            Ok(())
        })?;
        Ok(acc)
    }

    /// ∫ h √det g over the trimmed chart.
    pub fn integrate_scalar(&self, h: &ScalarField<D>) -> Result<f64> {
        let chart = self.chart.clone();
        self.integrate_fn(|x| Ok(h.value(x)? * chart.sqrt_det_g(x)?))
    }

    /// Trimmed-chart volume ∫ √det g.
    pub fn volume(&self) -> Result<f64> {
        let chart = self.chart.clone();
        self.integrate_fn(|x| chart.sqrt_det_g(x))
    }

    /// Self-reported volume error: |volume(rule) − volume(doubled rule)|.
    pub fn volume_error_estimate(&self) -> Result<f64> {
        Ok((self.volume()? - self.doubled()?.volume()?).abs())
    }

    /// A coarse deterministic subsample of nodes (about `target` points),
    /// used for residual spot-checks.
    pub fn sample_nodes(&self, target: usize) -> Vec<[f64; D]> {
        let total = self.node_count();
        let stride = (total / target.max(1)).max(1);
        let mut out = Vec::new();
        let mut k = 0usize;
        let _ = self.for_each_node(|x, _w| {
            if k.is_multiple_of(stride) {
                out.push(x);
            }
            k += 1;
            Ok(())
        });
        out
    }
}
