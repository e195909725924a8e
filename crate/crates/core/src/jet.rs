//! Forward-mode order-2 jets over chart coordinates.
//!
//! A [`Jet`] carries a value, its gradient and its Hessian with respect to
//! the `D` chart coordinates. Metric components, field coefficients and
//! profile compositions are written as ordinary arithmetic over jets, which
//! yields exact first and second partials without symbolic machinery.

use crate::series::Series;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const D: usize> {
    pub v: f64,
    /// Gradient: `d[i] = ∂_i`.
    pub d: [f64; D],
    /// Hessian: `h[i][j] = ∂_i ∂_j` (kept symmetric).
    pub h: [[f64; D]; D],
}

impl<const D: usize> Jet<D> {
    pub fn constant(v: f64) -> Self {
        Jet {
            v,
            d: [0.0; D],
            h: [[0.0; D]; D],
        }
    }

    /// Coordinate `axis` seeded at value `x`.
    pub fn var(x: f64, axis: usize) -> Self {
        let mut d = [0.0; D];
        d[axis] = 1.0;
        Jet {
            v: x,
            d,
            h: [[0.0; D]; D],
        }
    }

    /// Seed all coordinates of a point at once.
    pub fn seed(point: [f64; D]) -> [Jet<D>; D] {
        std::array::from_fn(|i| Jet::var(point[i], i))
    }

    /// Chain rule through a univariate outer function with derivatives
    /// `g = [g(u), g'(u), g''(u)]` at `u = self.v`.
    pub fn compose(self, g: [f64; 3]) -> Self {
        let mut h = [[0.0; D]; D];
        for i in 0..D {
            for j in 0..D {
                h[i][j] = g[2] * self.d[i] * self.d[j] + g[1] * self.h[i][j];
            }
        }
        Jet {
            v: g[0],
            d: std::array::from_fn(|i| g[1] * self.d[i]),
            h,
        }
    }

    /// Chain through a univariate [`Series`] evaluated at `self.v`.
    /// The series' third derivative is not needed at this order.
    pub fn compose_series(self, s: Series) -> Self {
        self.compose([s.d[0], s.d[1], s.d[2]])
    }

    pub fn recip(self) -> Self {
        let iv = 1.0 / self.v;
        self.compose([iv, -iv * iv, 2.0 * iv * iv * iv])
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.compose([s, 0.5 / s, -0.25 / (s * self.v)])
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.compose([e, e, e])
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose([s, c, -s])
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose([c, -s, -c])
    }

    pub fn tan(self) -> Self {
        self.sin() / self.cos()
    }

    pub fn powi(self, n: i32) -> Self {
        let nf = n as f64;
        self.compose([
            self.v.powi(n),
            nf * self.v.powi(n - 1),
            nf * (nf - 1.0) * self.v.powi(n - 2),
        ])
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.d.iter().all(|x| x.is_finite())
            && self.h.iter().all(|r| r.iter().all(|x| x.is_finite()))
    }
}

impl<const D: usize> Add for Jet<D> {
    type Output = Jet<D>;
    fn add(self, o: Jet<D>) -> Jet<D> {
        let mut h = [[0.0; D]; D];
        for i in 0..D {
            for j in 0..D {
                h[i][j] = self.h[i][j] + o.h[i][j];
            }
        }
        Jet {
            v: self.v + o.v,
            d: std::array::from_fn(|i| self.d[i] + o.d[i]),
            h,
        }
    }
}

impl<const D: usize> Sub for Jet<D> {
    type Output = Jet<D>;
    fn sub(self, o: Jet<D>) -> Jet<D> {
        let mut h = [[0.0; D]; D];
        for i in 0..D {
            for j in 0..D {
                h[i][j] = self.h[i][j] - o.h[i][j];
            }
        }
        Jet {
            v: self.v - o.v,
            d: std::array::from_fn(|i| self.d[i] - o.d[i]),
            h,
        }
    }
}

impl<const D: usize> Mul for Jet<D> {
    type Output = Jet<D>;
    fn mul(self, o: Jet<D>) -> Jet<D> {
        let mut h = [[0.0; D]; D];
        for i in 0..D {
            for j in 0..D {
                h[i][j] = self.h[i][j] * o.v
                    + self.d[i] * o.d[j]
                    + self.d[j] * o.d[i]
                    + self.v * o.h[i][j];
            }
        }
        Jet {
            v: self.v * o.v,
            d: std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]),
            h,
        }
    }
}

impl<const D: usize> Div for Jet<D> {
    type Output = Jet<D>;
    #[allow(clippy::suspicious_arithmetic_impl)] // division via reciprocal jet
    fn div(self, o: Jet<D>) -> Jet<D> {
        self * o.recip()
    }
}

impl<const D: usize> Neg for Jet<D> {
    type Output = Jet<D>;
    fn neg(self) -> Jet<D> {
        let mut h = [[0.0; D]; D];
        for i in 0..D {
            for j in 0..D {
                h[i][j] = -self.h[i][j];
            }
        }
        Jet {
            v: -self.v,
            d: std::array::from_fn(|i| -self.d[i]),
            h,
        }
    }
}

impl<const D: usize> Mul<f64> for Jet<D> {
    type Output = Jet<D>;
    fn mul(self, k: f64) -> Jet<D> {
        let mut h = [[0.0; D]; D];
        for i in 0..D {
            for j in 0..D {
                h[i][j] = self.h[i][j] * k;
            }
        }
        Jet {
            v: self.v * k,
            d: std::array::from_fn(|i| self.d[i] * k),
            h,
        }
    }
}

impl<const D: usize> Add<f64> for Jet<D> {
    type Output = Jet<D>;
    fn add(self, k: f64) -> Jet<D> {
        Jet {
            v: self.v + k,
            ..self
        }
    }
}

impl<const D: usize> Sub<f64> for Jet<D> {
    type Output = Jet<D>;
    fn sub(self, k: f64) -> Jet<D> {
        Jet {
            v: self.v - k,
            ..self
        }
    }
}
