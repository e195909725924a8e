//! Scalar and vector fields in chart coefficients.
//!
//! Fields are immutable closures from points to jets, tagged with the
//! highest derivative order they can produce exactly. Analytic fields built
//! from jet expressions carry order 2; derived fields (brackets, gradients)
//! drop one order per differentiation they consume.

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::series::Profile;
use std::sync::Arc;

/// Coefficient jet of a vector field at a point.
#[derive(Debug, Clone, Copy)]
pub struct VecJet<const D: usize> {
    /// Coefficients `c[k]`.
    pub c: [f64; D],
    /// `jac[k][i] = ∂_i c^k`.
    pub jac: [[f64; D]; D],
    /// `hess[k][i][j] = ∂_i ∂_j c^k`.
    pub hess: [[[f64; D]; D]; D],
}

impl<const D: usize> VecJet<D> {
    pub fn zero() -> Self {
        VecJet {
            c: [0.0; D],
            jac: [[0.0; D]; D],
            hess: [[[0.0; D]; D]; D],
        }
    }

    pub fn from_jets(jets: [Jet<D>; D]) -> Self {
        VecJet {
            c: std::array::from_fn(|k| jets[k].v),
            jac: std::array::from_fn(|k| jets[k].d),
            hess: std::array::from_fn(|k| jets[k].h),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
            && self.jac.iter().flatten().all(|x| x.is_finite())
            && self.hess.iter().flatten().flatten().all(|x| x.is_finite())
    }
}

type ScalarEval<const D: usize> = Arc<dyn Fn([f64; D]) -> Result<Jet<D>> + Send + Sync>;
type VectorEval<const D: usize> = Arc<dyn Fn([f64; D]) -> Result<VecJet<D>> + Send + Sync>;

#[derive(Clone)]
pub struct ScalarField<const D: usize> {
    chart: Chart<D>,
    name: String,
    order: u8,
    eval: ScalarEval<D>,
}

impl<const D: usize> std::fmt::Debug for ScalarField<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (order {}, chart {})",
            self.name,
            self.order,
            self.chart.name()
        )
    }
}

#[derive(Clone)]
pub struct VectorField<const D: usize> {
    chart: Chart<D>,
    name: String,
    order: u8,
    eval: VectorEval<D>,
}

impl<const D: usize> std::fmt::Debug for VectorField<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (order {}, chart {})",
            self.name,
            self.order,
            self.chart.name()
        )
    }
}

impl<const D: usize> ScalarField<D> {
    /// Analytic scalar from a jet expression; exact order-2 jets.
    pub fn from_jet_fn(
        chart: &Chart<D>,
        name: &str,
        f: impl Fn(&[Jet<D>; D]) -> Jet<D> + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            chart: chart.clone(),
            name: name.into(),
            order: 2,
            eval: Arc::new(move |x| Ok(f(&Jet::seed(x)))),
        }
    }

    pub fn from_raw(chart: &Chart<D>, name: &str, order: u8, eval: ScalarEval<D>) -> Self {
        ScalarField {
            chart: chart.clone(),
            name: name.into(),
            order,
            eval,
        }
    }

    pub fn constant(chart: &Chart<D>, v: f64) -> Self {
        ScalarField {
            chart: chart.clone(),
            name: format!("const({v})"),
            order: 2,
            eval: Arc::new(move |_| Ok(Jet::constant(v))),
        }
    }

    pub fn coordinate(chart: &Chart<D>, axis: usize) -> Self {
        let name = chart.coords()[axis].name.clone();
        ScalarField {
            chart: chart.clone(),
            name,
            order: 2,
            eval: Arc::new(move |x| Ok(Jet::var(x[axis], axis))),
        }
    }

    /// Profile of a single coordinate, e.g. f(χ) or f(r).
    pub fn univariate(chart: &Chart<D>, name: &str, axis: usize, p: Arc<dyn Profile>) -> Self {
        ScalarField {
            chart: chart.clone(),
            name: name.into(),
            order: 2,
            eval: Arc::new(move |x| {
                let s = p.eval(x[axis]);
                Ok(Jet::var(x[axis], axis).compose([s.d[0], s.d[1], s.d[2]]))
            }),
        }
    }

    pub fn chart(&self) -> &Chart<D> {
        &self.chart
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    /// Evaluate jets up to `order`; errors if the field cannot supply them.
    pub fn jet(&self, x: [f64; D], order: u8) -> Result<Jet<D>> {
        if order > self.order {
            return Err(Error::Capability {
                field: self.name.clone(),
                needed: order,
                available: self.order,
            });
        }
        let j = (self.eval)(x)?;
        if !j.is_finite() {
            return Err(Error::NonFinite {
                what: self.name.clone(),
                point: x.to_vec(),
            });
        }
        Ok(j)
    }

    pub fn value(&self, x: [f64; D]) -> Result<f64> {
        Ok(self.jet(x, 0)?.v)
    }

    /// Pointwise square f².
    pub fn square(&self) -> Self {
        let eval = self.eval.clone();
        ScalarField {
            chart: self.chart.clone(),
            name: format!("({})^2", self.name),
            order: self.order,
            eval: Arc::new(move |x| {
                let j = eval(x)?;
                Ok(j * j)
            }),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        let eval = self.eval.clone();
        ScalarField {
            chart: self.chart.clone(),
            name: format!("{k}*{}", self.name),
            order: self.order,
            eval: Arc::new(move |x| Ok(eval(x)? * k)),
        }
    }

    pub fn add(&self, other: &ScalarField<D>) -> Result<Self> {
        check_chart(&self.chart, &other.chart)?;
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Ok(ScalarField {
            chart: self.chart.clone(),
            name: format!("{}+{}", self.name, other.name),
            order: self.order.min(other.order),
            eval: Arc::new(move |x| Ok(a(x)? + b(x)?)),
        })
    }

    pub fn mul(&self, other: &ScalarField<D>) -> Result<Self> {
        check_chart(&self.chart, &other.chart)?;
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Ok(ScalarField {
            chart: self.chart.clone(),
            name: format!("{}*{}", self.name, other.name),
            order: self.order.min(other.order),
            eval: Arc::new(move |x| Ok(a(x)? * b(x)?)),
        })
    }
}

impl<const D: usize> VectorField<D> {
    /// Analytic vector field from a jet expression; exact order-2 jets.
    pub fn from_jet_fn(
        chart: &Chart<D>,
        name: &str,
        f: impl Fn(&[Jet<D>; D]) -> [Jet<D>; D] + Send + Sync + 'static,
    ) -> Self {
        VectorField {
            chart: chart.clone(),
            name: name.into(),
            order: 2,
            eval: Arc::new(move |x| Ok(VecJet::from_jets(f(&Jet::seed(x))))),
        }
    }

    pub fn from_raw(chart: &Chart<D>, name: &str, order: u8, eval: VectorEval<D>) -> Self {
        VectorField {
            chart: chart.clone(),
            name: name.into(),
            order,
            eval,
        }
    }

    /// Coordinate basis field ∂_axis.
    pub fn basis(chart: &Chart<D>, axis: usize) -> Self {
        let name = format!("d_{}", chart.coords()[axis].name);
        VectorField {
            chart: chart.clone(),
            name,
            order: 2,
            eval: Arc::new(move |_| {
                let mut v = VecJet::zero();
                v.c[axis] = 1.0;
                Ok(v)
            }),
        }
    }

    pub fn zero(chart: &Chart<D>) -> Self {
        VectorField {
            chart: chart.clone(),
            name: "0".into(),
            order: 2,
            eval: Arc::new(|_| Ok(VecJet::zero())),
        }
    }

    /// Constant-coefficient combination `Σ coeff[i] ∂_i`.
    pub fn constant_combination(chart: &Chart<D>, name: &str, coeff: [f64; D]) -> Self {
        VectorField {
            chart: chart.clone(),
            name: name.into(),
            order: 2,
            eval: Arc::new(move |_| {
                let mut v = VecJet::zero();
                v.c = coeff;
                Ok(v)
            }),
        }
    }

    pub fn chart(&self) -> &Chart<D> {
        &self.chart
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn jet(&self, x: [f64; D], order: u8) -> Result<VecJet<D>> {
        if order > self.order {
            return Err(Error::Capability {
                field: self.name.clone(),
                needed: order,
                available: self.order,
            });
        }
        let j = (self.eval)(x)?;
        if !j.is_finite() {
            return Err(Error::NonFinite {
                what: self.name.clone(),
                point: x.to_vec(),
            });
        }
        Ok(j)
    }

    pub fn coefficients(&self, x: [f64; D]) -> Result<[f64; D]> {
        Ok(self.jet(x, 0)?.c)
    }

    pub fn scale(&self, k: f64) -> Self {
        let eval = self.eval.clone();
        VectorField {
            chart: self.chart.clone(),
            name: format!("{k}*{}", self.name),
            order: self.order,
            eval: Arc::new(move |x| {
                let j = eval(x)?;
                let mut out = VecJet::zero();
                for a in 0..D {
                    out.c[a] = k * j.c[a];
                    for i in 0..D {
                        out.jac[a][i] = k * j.jac[a][i];
                        for l in 0..D {
                            out.hess[a][i][l] = k * j.hess[a][i][l];
                        }
                    }
                }
                Ok(out)
            }),
        }
    }

    pub fn add(&self, other: &VectorField<D>) -> Result<Self> {
        check_chart(&self.chart, &other.chart)?;
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Ok(VectorField {
            chart: self.chart.clone(),
            name: format!("{}+{}", self.name, other.name),
            order: self.order.min(other.order),
            eval: Arc::new(move |x| {
                let (u, v) = (a(x)?, b(x)?);
                let mut out = VecJet::zero();
                for k in 0..D {
                    out.c[k] = u.c[k] + v.c[k];
                    for i in 0..D {
                        out.jac[k][i] = u.jac[k][i] + v.jac[k][i];
                        for j in 0..D {
                            out.hess[k][i][j] = u.hess[k][i][j] + v.hess[k][i][j];
                        }
                    }
                }
                Ok(out)
            }),
        })
    }

    /// Pointwise product `fX` of a scalar and this field.
    pub fn mul_scalar(&self, f: &ScalarField<D>) -> Result<Self> {
        check_chart(&self.chart, f.chart())?;
        let xe = self.eval.clone();
        let fe = f.clone();
        Ok(VectorField {
            chart: self.chart.clone(),
            name: format!("{}*{}", f.name(), self.name),
            order: self.order.min(f.order()),
            eval: Arc::new(move |x| {
                let xv = xe(x)?;
                let fj = fe.jet(x, fe.order())?;
                let mut out = VecJet::zero();
                for k in 0..D {
                    out.c[k] = fj.v * xv.c[k];
                    for i in 0..D {
                        out.jac[k][i] = fj.d[i] * xv.c[k] + fj.v * xv.jac[k][i];
                        for j in 0..D {
                            out.hess[k][i][j] = fj.h[i][j] * xv.c[k]
                                + fj.d[i] * xv.jac[k][j]
                                + fj.d[j] * xv.jac[k][i]
                                + fj.v * xv.hess[k][i][j];
                        }
                    }
                }
                Ok(out)
            }),
        })
    }
}

pub(crate) fn check_chart<const D: usize>(a: &Chart<D>, b: &Chart<D>) -> Result<()> {
    if a.same(b) {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "fields live on different charts: `{}` vs `{}`",
            a.name(),
            b.name()
        )))
    }
}
