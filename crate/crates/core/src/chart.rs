//! Coordinate charts with analytic metric jets.
//!
//! A chart owns its coordinate box and a metric closure written over
//! [`Jet`]s, so every metric component carries exact first and second
//! partials. Christoffel symbols come from the generic formula
//! Γ^k_ij = ½ g^{ka} (∂_i g_ja + ∂_j g_ia − ∂_a g_ij); built-in manifolds may
//! additionally register closed forms for cross-validation.

use crate::error::{Error, Result};
use crate::jet::Jet;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct CoordSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl CoordSpec {
    pub fn periodic(name: &str, lo: f64, hi: f64) -> Self {
        CoordSpec {
            name: name.into(),
            lo,
            hi,
            periodic: true,
        }
    }

    pub fn bounded(name: &str, lo: f64, hi: f64) -> Self {
        CoordSpec {
            name: name.into(),
            lo,
            hi,
            periodic: false,
        }
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }
}

pub type MetricFn<const D: usize> = Arc<dyn Fn(&[Jet<D>; D]) -> [[Jet<D>; D]; D] + Send + Sync>;
pub type ClosedChristoffelFn<const D: usize> =
    Arc<dyn Fn([f64; D]) -> [[[f64; D]; D]; D] + Send + Sync>;

/// Christoffel symbols `Γ[k][i][j]`.
pub type Gamma<const D: usize> = [[[f64; D]; D]; D];
/// First partials of the Christoffel symbols, `dΓ[m][k][i][j]` = ∂_m Γ^k_ij.
pub type GammaJet<const D: usize> = [[[[f64; D]; D]; D]; D];

struct ChartInner<const D: usize> {
    name: String,
    coords: [CoordSpec; D],
    metric: MetricFn<D>,
    closed_christoffel: Option<ClosedChristoffelFn<D>>,
}

/// Immutable chart handle; clones share the underlying definition.
#[derive(Clone)]
pub struct Chart<const D: usize> {
    inner: Arc<ChartInner<D>>,
}

impl<const D: usize> std::fmt::Debug for Chart<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Chart")
            .field("name", &self.inner.name)
            .field("dim", &D)
            .finish()
    }
}

/// Metric data at a point: each component is a full order-2 jet.
#[derive(Debug, Clone, Copy)]
pub struct MetricJet<const D: usize> {
    /// `g[i][j]`: value `.v`, partials `.d[k] = ∂_k g_ij`, second partials `.h`.
    pub g: [[Jet<D>; D]; D],
    /// Inverse metric with the same jet structure.
    pub ginv: [[Jet<D>; D]; D],
    /// det g as a jet.
    pub det: Jet<D>,
    /// √det g as a jet (volume density).
    pub sqrt_det: Jet<D>,
}

impl<const D: usize> Chart<D> {
    pub fn new(name: &str, coords: [CoordSpec; D], metric: MetricFn<D>) -> Self {
        Chart {
            inner: Arc::new(ChartInner {
                name: name.into(),
                coords,
                metric,
                closed_christoffel: None,
            }),
        }
    }

    pub fn with_closed_christoffel(self, f: ClosedChristoffelFn<D>) -> Self {
        let inner = ChartInner {
            name: self.inner.name.clone(),
            coords: self.inner.coords.clone(),
            metric: self.inner.metric.clone(),
            closed_christoffel: Some(f),
        };
        Chart {
            inner: Arc::new(inner),
        }
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn coords(&self) -> &[CoordSpec; D] {
        &self.inner.coords
    }

    pub fn dim(&self) -> usize {
        D
    }

    pub fn same(&self, other: &Chart<D>) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    pub fn closed_christoffel(&self, x: [f64; D]) -> Option<[[[f64; D]; D]; D]> {
        self.inner.closed_christoffel.as_ref().map(|f| f(x))
    }

    /// Strict-interior test; periodic axes accept any value.
    pub fn is_interior(&self, x: [f64; D]) -> bool {
        self.interior_violation(x).is_none()
    }

    fn interior_violation(&self, x: [f64; D]) -> Option<usize> {
        for (axis, c) in self.inner.coords.iter().enumerate() {
            if !c.periodic && !(x[axis] > c.lo && x[axis] < c.hi) {
                return Some(axis);
            }
        }
        None
    }

    pub fn check_interior(&self, x: [f64; D]) -> Result<()> {
        match self.interior_violation(x) {
            None => Ok(()),
            Some(axis) => Err(Error::OutOfDomain {
                chart: self.inner.name.clone(),
                point: x.to_vec(),
                axis,
            }),
        }
    }

    /// The raw metric closure (shared handle).
    pub fn metric_fn(&self) -> MetricFn<D> {
        self.inner.metric.clone()
    }

    /// Metric component jets only — no inversion, so charts with corrupted
    /// or degenerate metrics can still be inspected.
    pub fn metric_components(&self, x: [f64; D]) -> Result<[[Jet<D>; D]; D]> {
        self.check_interior(x)?;
        Ok((self.inner.metric)(&Jet::seed(x)))
    }

    /// Full metric jet (components, inverse, determinant, density) at `x`.
    pub fn metric_jet(&self, x: [f64; D]) -> Result<MetricJet<D>> {
        self.check_interior(x)?;
        let seeded = Jet::seed(x);
        let g = (self.inner.metric)(&seeded);
        let (ginv, det) = invert_jet_matrix(&g).ok_or_else(|| Error::SingularMetric {
            chart: self.inner.name.clone(),
            point: x.to_vec(),
            cond: f64::INFINITY,
        })?;
        if det.v <= 0.0 {
            return Err(Error::SingularMetric {
                chart: self.inner.name.clone(),
                point: x.to_vec(),
                cond: cond_estimate(&g, &ginv),
            });
        }
        let cond = cond_estimate(&g, &ginv);
        if cond > 1e14 {
            return Err(Error::SingularMetric {
                chart: self.inner.name.clone(),
                point: x.to_vec(),
                cond,
            });
        }
        Ok(MetricJet {
            g,
            ginv,
            det,
            sqrt_det: det.sqrt(),
        })
    }

    /// Metric component values only.
    pub fn metric_at(&self, x: [f64; D]) -> Result<[[f64; D]; D]> {
        let mj = self.metric_jet(x)?;
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| mj.g[i][j].v)
        }))
    }

    /// Volume density √det g at `x`.
    pub fn sqrt_det_g(&self, x: [f64; D]) -> Result<f64> {
        Ok(self.metric_jet(x)?.sqrt_det.v)
    }

    /// Christoffel symbols `Γ[k][i][j]` from the generic formula.
    pub fn christoffel(&self, x: [f64; D]) -> Result<Gamma<D>> {
        let mj = self.metric_jet(x)?;
        Ok(christoffel_from_metric(&mj))
    }

    /// Christoffel symbols and their first partials `dΓ[m][k][i][j]` = ∂_m Γ^k_ij.
    pub fn christoffel_jet(&self, x: [f64; D]) -> Result<(Gamma<D>, GammaJet<D>)> {
        let mj = self.metric_jet(x)?;
        let gamma = christoffel_from_metric(&mj);
        let mut dgamma = [[[[0.0; D]; D]; D]; D];
        for m in 0..D {
            for k in 0..D {
                for i in 0..D {
                    for j in 0..D {
                        let mut s = 0.0;
                        for a in 0..D {
                            let bracket = mj.g[j][a].d[i] + mj.g[i][a].d[j] - mj.g[i][j].d[a];
                            let dbracket =
                                mj.g[j][a].h[i][m] + mj.g[i][a].h[j][m] - mj.g[i][j].h[a][m];
                            s += mj.ginv[k][a].d[m] * bracket + mj.ginv[k][a].v * dbracket;
                        }
                        dgamma[m][k][i][j] = 0.5 * s;
                    }
                }
            }
        }
        Ok((gamma, dgamma))
    }
}

fn christoffel_from_metric<const D: usize>(mj: &MetricJet<D>) -> Gamma<D> {
    let mut gamma = [[[0.0; D]; D]; D];
    for k in 0..D {
        for i in 0..D {
            for j in 0..D {
                let mut s = 0.0;
                for a in 0..D {
                    s += mj.ginv[k][a].v * (mj.g[j][a].d[i] + mj.g[i][a].d[j] - mj.g[i][j].d[a]);
                }
                gamma[k][i][j] = 0.5 * s;
            }
        }
    }
    gamma
}

fn cond_estimate<const D: usize>(g: &[[Jet<D>; D]; D], ginv: &[[Jet<D>; D]; D]) -> f64 {
    let norm = |m: &[[Jet<D>; D]; D]| {
        (0..D)
            .map(|i| (0..D).map(|j| m[i][j].v.abs()).sum::<f64>())
            .fold(0.0_f64, f64::max)
    };
    norm(g) * norm(ginv)
}

/// Invert a jet-valued matrix by Gaussian elimination with partial pivoting
/// on values; also returns the determinant jet. Returns `None` when a pivot
/// value vanishes.
fn invert_jet_matrix<const D: usize>(m: &[[Jet<D>; D]; D]) -> Option<([[Jet<D>; D]; D], Jet<D>)> {
    let mut a = *m;
    let mut inv: [[Jet<D>; D]; D] = std::array::from_fn(|i| {
        std::array::from_fn(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }))
    });
    let mut det = Jet::constant(1.0);
    for col in 0..D {
        let mut pivot = col;
        for r in (col + 1)..D {
            if a[r][col].v.abs() > a[pivot][col].v.abs() {
                pivot = r;
            }
        }
        if a[pivot][col].v == 0.0 {
            return None;
        }
        if pivot != col {
            a.swap(pivot, col);
            inv.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col];
        det = det * p;
        let pinv = p.recip();
        for j in 0..D {
            a[col][j] = a[col][j] * pinv;
            inv[col][j] = inv[col][j] * pinv;
        }
        for r in 0..D {
            if r != col {
                let factor = a[r][col];
                if factor.v != 0.0 || factor.d.iter().any(|x| *x != 0.0) {
                    for j in 0..D {
                        a[r][j] = a[r][j] - factor * a[col][j];
                        inv[r][j] = inv[r][j] - factor * inv[col][j];
                    }
                }
            }
        }
    }
    Some((inv, det))
}
