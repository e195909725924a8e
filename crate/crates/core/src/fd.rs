//! Central finite differences.
//!
//! Independent differentiation oracle used to cross-check the forward-mode
//! jets, both in tests and in the `verify` suite. Kept deliberately free of
//! any jet machinery.

/// Central-difference gradient and Hessian of `f` at `x` with step `h`.
pub fn grad_hess_fd<const D: usize>(
    f: &impl Fn([f64; D]) -> f64,
    x: [f64; D],
    h: f64,
) -> ([f64; D], [[f64; D]; D]) {
    let mut grad = [0.0; D];
    let mut hess = [[0.0; D]; D];
    let at = |dx: [f64; D]| {
        let mut p = x;
        for i in 0..D {
            p[i] += dx[i];
        }
        f(p)
    };
    let f0 = f(x);
    for i in 0..D {
        let mut e = [0.0; D];
        e[i] = h;
        let mut me = [0.0; D];
        me[i] = -h;
        let fp = at(e);
        let fm = at(me);
        grad[i] = (fp - fm) / (2.0 * h);
        hess[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
    }
    for i in 0..D {
        for j in (i + 1)..D {
            let mut pp = [0.0; D];
            pp[i] = h;
            pp[j] = h;
            let mut pm = [0.0; D];
            pm[i] = h;
            pm[j] = -h;
            let mut mp = [0.0; D];
            mp[i] = -h;
            mp[j] = h;
            let mut mm = [0.0; D];
            mm[i] = -h;
            mm[j] = -h;
            let v = (at(pp) - at(pm) - at(mp) + at(mm)) / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    (grad, hess)
}

/// Central-difference gradient only.
pub fn grad_fd<const D: usize>(f: &impl Fn([f64; D]) -> f64, x: [f64; D], h: f64) -> [f64; D] {
    std::array::from_fn(|i| {
        let mut p = x;
        let mut m = x;
        p[i] += h;
        m[i] -= h;
        (f(p) - f(m)) / (2.0 * h)
    })
}
