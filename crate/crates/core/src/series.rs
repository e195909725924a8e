//! Univariate truncated derivative arithmetic up to third order.
//!
//! Profile functions (flow profiles, mollifiers, stream-function factors,
//! splines) are defined once over [`Series`] and queried for as many
//! derivatives as a consumer needs. Third derivatives are required because a
//! stream-function bump exposes first derivatives of a profile as vector
//! coefficients, and those coefficients must still carry order-2 jets.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value and first three derivatives of a univariate function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Series {
    /// `d[k]` is the k-th derivative (raw, not Taylor-normalized).
    pub d: [f64; 4],
}

impl Series {
    pub const ZERO: Series = Series { d: [0.0; 4] };

    pub fn constant(v: f64) -> Self {
        Series {
            d: [v, 0.0, 0.0, 0.0],
        }
    }

    /// The independent variable seeded at `x`.
    pub fn var(x: f64) -> Self {
        Series {
            d: [x, 1.0, 0.0, 0.0],
        }
    }

    pub fn value(&self) -> f64 {
        self.d[0]
    }

    /// Composition with an outer univariate function given by its
    /// derivatives `g = [g(u), g'(u), g''(u), g'''(u)]` at `u = self.value()`.
    ///
    /// Faa di Bruno to third order:
    /// (g∘f)'   = g' f'
    /// (g∘f)''  = g'' f'^2 + g' f''
    /// (g∘f)''' = g''' f'^3 + 3 g'' f' f'' + g' f'''
    pub fn compose(self, g: [f64; 4]) -> Self {
        let f1 = self.d[1];
        let f2 = self.d[2];
        let f3 = self.d[3];
        Series {
            d: [
                g[0],
                g[1] * f1,
                g[2] * f1 * f1 + g[1] * f2,
                g[3] * f1 * f1 * f1 + 3.0 * g[2] * f1 * f2 + g[1] * f3,
            ],
        }
    }

    pub fn recip(self) -> Self {
        let v = self.d[0];
        let iv = 1.0 / v;
        let iv2 = iv * iv;
        self.compose([iv, -iv2, 2.0 * iv2 * iv, -6.0 * iv2 * iv2])
    }

    pub fn sqrt(self) -> Self {
        let s = self.d[0].sqrt();
        let is = 1.0 / s;
        self.compose([
            s,
            0.5 * is,
            -0.25 * is / self.d[0],
            0.375 * is / (self.d[0] * self.d[0]),
        ])
    }

    pub fn exp(self) -> Self {
        let e = self.d[0].exp();
        self.compose([e, e, e, e])
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.d[0].sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.d[0].sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn powi(self, n: i32) -> Self {
        let v = self.d[0];
        let nf = n as f64;
        self.compose([
            v.powi(n),
            nf * v.powi(n - 1),
            nf * (nf - 1.0) * v.powi(n - 2),
            nf * (nf - 1.0) * (nf - 2.0) * v.powi(n - 3),
        ])
    }

    /// Shift the derivative stack down: returns the series of f' (third
    /// derivative of the result is unavailable and set to zero).
    pub fn derivative_shift(self) -> Self {
        Series {
            d: [self.d[1], self.d[2], self.d[3], 0.0],
        }
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, o: Series) -> Series {
        Series {
            d: [
                self.d[0] + o.d[0],
                self.d[1] + o.d[1],
                self.d[2] + o.d[2],
                self.d[3] + o.d[3],
            ],
        }
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, o: Series) -> Series {
        Series {
            d: [
                self.d[0] - o.d[0],
                self.d[1] - o.d[1],
                self.d[2] - o.d[2],
                self.d[3] - o.d[3],
            ],
        }
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, o: Series) -> Series {
        let a = self.d;
        let b = o.d;
        Series {
            d: [
                a[0] * b[0],
                a[1] * b[0] + a[0] * b[1],
                a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2],
                a[3] * b[0] + 3.0 * a[2] * b[1] + 3.0 * a[1] * b[2] + a[0] * b[3],
            ],
        }
    }
}

impl Div for Series {
    type Output = Series;
    #[allow(clippy::suspicious_arithmetic_impl)] // division via reciprocal series
    fn div(self, o: Series) -> Series {
        self * o.recip()
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        Series {
            d: [-self.d[0], -self.d[1], -self.d[2], -self.d[3]],
        }
    }
}

impl Mul<f64> for Series {
    type Output = Series;
    fn mul(self, k: f64) -> Series {
        Series {
            d: [self.d[0] * k, self.d[1] * k, self.d[2] * k, self.d[3] * k],
        }
    }
}

impl Add<f64> for Series {
    type Output = Series;
    fn add(self, k: f64) -> Series {
        Series {
            d: [self.d[0] + k, self.d[1], self.d[2], self.d[3]],
        }
    }
}

/// A univariate profile: maps a coordinate to value + three derivatives.
pub trait Profile: Send + Sync {
    fn eval(&self, x: f64) -> Series;

    /// Closed support interval, if the profile vanishes identically outside.
    fn support(&self) -> Option<(f64, f64)> {
        None
    }
}

impl<F> Profile for F
where
    F: Fn(f64) -> Series + Send + Sync,
{
    fn eval(&self, x: f64) -> Series {
        self(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd3(f: impl Fn(f64) -> f64, x: f64) -> [f64; 4] {
        let h = 1e-4;
        let v = |k: i32| f(x + k as f64 * h);
        [
            f(x),
            (v(1) - v(-1)) / (2.0 * h),
            (v(1) - 2.0 * v(0) + v(-1)) / (h * h),
            (v(2) - 2.0 * v(1) + 2.0 * v(-1) - v(-2)) / (2.0 * h * h * h),
        ]
    }

    #[test]
    fn composite_matches_finite_differences() {
        let g =
            |x: f64| ((Series::var(x) * 0.7 + 0.2).sin() * (Series::var(x).powi(2) + 1.0)).sqrt();
        let gv = |x: f64| ((0.7 * x + 0.2).sin() * (x * x + 1.0)).sqrt();
        for &x in &[0.3, 0.9, 1.7] {
            let s = g(x);
            let fd = fd3(gv, x);
            assert!((s.d[0] - fd[0]).abs() < 1e-12);
            assert!((s.d[1] - fd[1]).abs() < 1e-7);
            assert!((s.d[2] - fd[2]).abs() < 1e-5);
            assert!((s.d[3] - fd[3]).abs() < 1e-3);
        }
    }

    #[test]
    fn quotient_and_exp() {
        let x = 0.8;
        let s = (Series::var(x).exp() / (Series::var(x) + 2.0)).cos();
        let f = |x: f64| (x.exp() / (x + 2.0)).cos();
        let fd = fd3(f, x);
        assert!((s.d[1] - fd[1]).abs() < 1e-7);
        assert!((s.d[2] - fd[2]).abs() < 1e-4);
    }
}
