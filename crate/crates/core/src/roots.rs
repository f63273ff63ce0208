//! Bracketed scalar root finding.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    pub x_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            x_tol: 1e-12,
            rel_tol: 1e-14,
            max_iter: 400,
        }
    }
}

/// Root of `f` on `[lo, hi]`, which must bracket a sign change.
///
/// Secant steps are taken from the bracket ends; a step that lands outside
/// the bracket, or two steps that fail to halve it, fall back to bisection.
pub fn bisect_secant<F>(mut f: F, lo: f64, hi: f64, opts: RootOptions) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Numerical(format!(
            "no sign change on [{a:e}, {b:e}]: f = ({fa:e}, {fb:e})"
        )));
    }
    let mut width = b - a;
    let mut stalls = 0;
    for _ in 0..opts.max_iter {
        let mid = 0.5 * (a + b);
        if b - a <= opts.x_tol + opts.rel_tol * mid.abs() {
            return Ok(mid);
        }
        let secant = b - fb * (b - a) / (fb - fa);
        let x = if stalls >= 2 || !(secant > a && secant < b) {
            stalls = 0;
            mid
        } else {
            secant
        };
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if b - a > 0.5 * width {
            stalls += 1;
        } else {
            stalls = 0;
        }
        width = b - a;
    }
    Err(Error::Numerical(format!(
        "root search did not converge on [{a:e}, {b:e}]"
    )))
}
