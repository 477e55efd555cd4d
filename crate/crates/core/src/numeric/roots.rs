//! Bracketing root finders and a golden-section maximizer.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]`. The bracket must contain a sign change; an exact
/// zero at either end is returned immediately.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::BracketFailure { lo, hi, f_lo, f_hi });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton's method kept inside a shrinking bracket, falling back to bisection
/// whenever the Newton step leaves the bracket or fails to halve the residual.
///
/// `fd` returns the value and derivative. The function must be increasing
/// through the root (f(lo) < 0 < f(hi)).
pub fn safeguarded_newton<F>(
    mut fd: F,
    mut lo: f64,
    mut hi: f64,
    f_tol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut x = 0.5 * (lo + hi);
    let (mut fx, mut dfx) = fd(x);
    let mut last_step = hi - lo;
    for _ in 0..max_iter {
        if fx.abs() <= f_tol {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let use_newton = dfx > 0.0
            && newton.is_finite()
            && newton > lo
            && newton < hi
            && (newton - x).abs() < 0.5 * last_step;
        let next = if use_newton { newton } else { 0.5 * (lo + hi) };
        last_step = (next - x).abs();
        if next == x || hi - lo <= f64::EPSILON * x.abs().max(1e-300) {
            // No representable progress left.
            return if fx.abs() <= 1e3 * f_tol.max(f64::EPSILON) {
                Ok(x)
            } else {
                Err(Error::NoConvergence {
                    what: "safeguarded Newton",
                    iterations: max_iter,
                    residual: fx.abs(),
                })
            };
        }
        x = next;
        let r = fd(x);
        fx = r.0;
        dfx = r.1;
    }
    if fx.abs() <= f_tol {
        Ok(x)
    } else {
        Err(Error::NoConvergence {
            what: "safeguarded Newton",
            iterations: max_iter,
            residual: fx.abs(),
        })
    }
}

/// Golden-section search for a maximum of a unimodal function on `[a, b]`.
pub fn golden_section_max<F>(mut f: F, mut a: f64, mut b: f64, x_tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > x_tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_unbracketed() {
        let e = bisect(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 100).unwrap_err();
        assert!(matches!(e, Error::BracketFailure { .. }));
    }

    #[test]
    fn newton_on_steep_logistic() {
        // mean of a two-point family on {-1, 1}: tanh
        let target = 0.999_999;
        let r = safeguarded_newton(
            |t| (t.tanh() - target, 1.0 - t.tanh().powi(2)),
            -50.0,
            50.0,
            1e-15,
            200,
        )
        .unwrap();
        assert!((r.tanh() - target).abs() < 1e-14);
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section_max(|x| Ok(-(x - 0.3) * (x - 0.3)), -1.0, 2.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx.abs() < 1e-15);
    }
}
