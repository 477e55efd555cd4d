//! Double-exponential quadrature.
//!
//! Finite intervals use the tanh-sinh substitution, half-lines use exp-sinh and
//! the whole line uses sinh-sinh. Each rule is refined by halving the step in
//! the transformed variable until two successive estimates agree. Callers pass
//! *landmarks* (peaks, kinks, crossing points) so that every piece is smooth and
//! its mass sits near an endpoint or the transform centre.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_level: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_level: 12,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy)]
enum Transform {
    Finite { a: f64, b: f64 },
    Upper { a: f64, scale: f64 },
    Lower { b: f64, scale: f64 },
    Whole { center: f64, scale: f64 },
}

const T_MAX: f64 = 4.5;
const MIN_LEVEL: usize = 4;

impl Transform {
    /// Abscissa and weight (including dx/dt) at transformed coordinate `t`.
    fn node(&self, t: f64) -> Option<(f64, f64)> {
        let u = FRAC_PI_2 * t.sinh();
        let du = FRAC_PI_2 * t.cosh();
        let (x, w) = match *self {
            Transform::Finite { a, b } => {
                let len = b - a;
                let x = if u >= 0.0 {
                    b - len / (1.0 + (2.0 * u).exp())
                } else {
                    a + len / (1.0 + (-2.0 * u).exp())
                };
                let e = (-2.0 * u.abs()).exp();
                let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
                (x, 0.5 * len * du * sech2)
            }
            Transform::Upper { a, scale } => {
                let e = u.exp();
                (a + scale * e, scale * e * du)
            }
            Transform::Lower { b, scale } => {
                let e = u.exp();
                (b - scale * e, scale * e * du)
            }
            Transform::Whole { center, scale } => {
                (center + scale * u.sinh(), scale * u.cosh() * du)
            }
        };
        if w > 0.0 && w.is_finite() && x.is_finite() {
            Some((x, w))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

fn run<F: FnMut(f64) -> f64>(tr: Transform, mut f: F, opts: &QuadOptions) -> Result<QuadResult> {
    let mut evaluations = 0usize;
    let mut eval = |t: f64, evaluations: &mut usize| -> Result<f64> {
        match tr.node(t) {
            None => Ok(0.0),
            Some((x, w)) => {
                *evaluations += 1;
                let fx = f(x);
                if fx.is_nan() {
                    return Err(Error::QuadratureFailure(format!("integrand is NaN at {x}")));
                }
                let term = w * fx;
                if term.is_nan() {
                    // weight underflow against an infinite integrand value
                    return Ok(0.0);
                }
                Ok(term)
            }
        }
    };

    let k_max = T_MAX.ceil() as i64;
    let mut sum = 0.0;
    for k in -k_max..=k_max {
        sum += eval(k as f64, &mut evaluations)?;
    }
    let mut h = 1.0;
    let mut prev = h * sum;
    let mut last_diff = f64::INFINITY;
    for level in 1..=opts.max_level {
        h *= 0.5;
        let count = (T_MAX / h).ceil() as i64;
        let mut j = 1;
        while j <= count {
            let t = j as f64 * h;
            sum += eval(t, &mut evaluations)?;
            sum += eval(-t, &mut evaluations)?;
            j += 2;
        }
        let est = h * sum;
        let diff = (est - prev).abs();
        let tol = opts.abs_tol.max(opts.rel_tol * est.abs());
        if level >= MIN_LEVEL && diff <= tol && last_diff <= tol.max(1e3 * diff) {
            return Ok(QuadResult {
                value: est,
                error_estimate: diff,
                evaluations,
            });
        }
        if !est.is_finite() {
            return Err(Error::QuadratureFailure(format!("estimate diverged ({est})")));
        }
        last_diff = diff;
        prev = est;
    }
    Err(Error::QuadratureFailure(format!(
        "no convergence by level {} (last change {:e}, estimate {})",
        opts.max_level, last_diff, prev
    )))
}

/// Integral over a finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    if b < a {
        let r = run(Transform::Finite { a: b, b: a }, f, opts)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    run(Transform::Finite { a, b }, f, opts)
}

/// Integral over `[a, inf)`; `scale` is the width of the integrand near `a`.
pub fn integrate_upper<F: FnMut(f64) -> f64>(f: F, a: f64, scale: f64, opts: &QuadOptions) -> Result<QuadResult> {
    run(Transform::Upper { a, scale }, f, opts)
}

/// Integral over `(-inf, b]`.
pub fn integrate_lower<F: FnMut(f64) -> f64>(f: F, b: f64, scale: f64, opts: &QuadOptions) -> Result<QuadResult> {
    run(Transform::Lower { b, scale }, f, opts)
}

fn sorted_unique(points: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = points.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    v
}

/// Integral over the whole real line, split at the given breakpoints.
pub fn integrate_line<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    scale: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let pts = sorted_unique(breaks);
    if pts.is_empty() {
        return run(Transform::Whole { center: 0.0, scale }, f, opts);
    }
    let mut total = integrate_lower(&mut f, pts[0], scale, opts)?;
    for w in pts.windows(2) {
        let r = integrate(&mut f, w[0], w[1], opts)?;
        total = add(total, r);
    }
    let r = integrate_upper(&mut f, *pts.last().unwrap(), scale, opts)?;
    Ok(add(total, r))
}

/// Integral over `[lo, inf)` split at the breakpoints lying above `lo`.
pub fn integrate_from<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    breaks: &[f64],
    scale: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied().filter(|&b| b > lo));
    let pts = sorted_unique(&pts);
    let mut total = QuadResult {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 0,
    };
    for w in pts.windows(2) {
        total = add(total, integrate(&mut f, w[0], w[1], opts)?);
    }
    Ok(add(total, integrate_upper(&mut f, *pts.last().unwrap(), scale, opts)?))
}

/// Integral over `(-inf, hi]` split at the breakpoints lying below `hi`.
pub fn integrate_to<F: FnMut(f64) -> f64>(
    mut f: F,
    hi: f64,
    breaks: &[f64],
    scale: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let r = integrate_from(|x| f(-x), -hi, &breaks.iter().map(|b| -b).collect::<Vec<_>>(), scale, opts)?;
    Ok(r)
}

fn add(a: QuadResult, b: QuadResult) -> QuadResult {
    QuadResult {
        value: a.value + b.value,
        error_estimate: a.error_estimate + b.error_estimate,
        evaluations: a.evaluations + b.evaluations,
    }
}

/// Integral of a smooth `2*pi`-periodic function over one period by the
/// trapezoidal rule with point doubling.
pub fn integrate_periodic<F: FnMut(f64) -> Result<f64>>(mut f: F, opts: &QuadOptions) -> Result<QuadResult> {
    let mut n = 16usize;
    let mut sum = 0.0;
    for i in 0..n {
        sum += f(2.0 * PI * i as f64 / n as f64)?;
    }
    let mut prev = 2.0 * PI * sum / n as f64;
    let mut evaluations = n;
    while n < (1 << 16) {
        for i in 0..n {
            sum += f(2.0 * PI * (2 * i + 1) as f64 / (2 * n) as f64)?;
        }
        evaluations += n;
        n *= 2;
        let est = 2.0 * PI * sum / n as f64;
        let diff = (est - prev).abs();
        if n >= 64 && diff <= opts.abs_tol.max(opts.rel_tol * est.abs()) {
            return Ok(QuadResult {
                value: est,
                error_estimate: diff,
                evaluations,
            });
        }
        prev = est;
    }
    Err(Error::QuadratureFailure(format!(
        "periodic trapezoid did not converge (estimate {prev})"
    )))
}

/// Points that shape a two-dimensional integrand: peaks (`points`), circles
/// centred at the origin (`radii`) and rays where the integrand may jump
/// (`angles`, radians).
#[derive(Debug, Clone, Default)]
pub struct Landmarks {
    pub points: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
}

/// Integral of `g` over the plane in polar coordinates: outer integral over
/// the angle, inner over the radius. Without angular breakpoints the outer
/// integral is treated as periodic.
pub fn integrate_plane<G>(g: G, marks: &Landmarks, scale: f64, inner: &QuadOptions, outer: &QuadOptions) -> Result<QuadResult>
where
    G: Fn(&[f64]) -> f64,
{
    integrate_polar(g, |_| Vec::new(), marks, scale, inner, outer)
}

/// Same as [`integrate_plane`] with extra radial breakpoints supplied per
/// direction by `breaks_at(phi)`.
pub fn integrate_polar<G, B>(
    g: G,
    breaks_at: B,
    marks: &Landmarks,
    scale: f64,
    inner: &QuadOptions,
    outer: &QuadOptions,
) -> Result<QuadResult>
where
    G: Fn(&[f64]) -> f64,
    B: Fn(f64) -> Vec<f64>,
{
    let radial = |phi: f64| -> Result<f64> {
        let (s, c) = phi.sin_cos();
        let mut breaks: Vec<f64> = marks.radii.iter().copied().filter(|r| *r > 0.0).collect();
        breaks.extend(breaks_at(phi).into_iter().filter(|r| *r > 0.0));
        for p in &marks.points {
            let proj = p[0] * c + p[1] * s;
            if proj > 0.0 {
                breaks.push(proj);
            }
        }
        let r = integrate_from(|rho| {
            if rho == 0.0 {
                return 0.0;
            }
            rho * g(&[rho * c, rho * s])
        }, 0.0, &breaks, scale, inner)?;
        Ok(r.value)
    };
    let angles = {
        let mut a: Vec<f64> = marks.angles.iter().map(|a| a.rem_euclid(2.0 * PI)).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        a.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        a
    };
    if angles.is_empty() {
        return integrate_periodic(radial, outer);
    }
    let mut total = QuadResult {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 0,
    };
    for i in 0..angles.len() {
        let lo = angles[i];
        let hi = if i + 1 < angles.len() { angles[i + 1] } else { angles[0] + 2.0 * PI };
        let mut failure = None;
        let r = integrate(
            |phi| match radial(phi) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            outer,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        total = add(total, r);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
    }

    #[test]
    fn finite_polynomial() {
        let r = integrate(|x| x * x, 0.0, 3.0, &QuadOptions::default()).unwrap();
        assert!((r.value - 9.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &QuadOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn whole_line_gaussian() {
        let r = integrate_line(gauss, &[], 1.0, &QuadOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let narrow = integrate_line(|x| 64.0 * gauss(64.0 * (x - 1.0)), &[1.0], 1.0 / 64.0, &QuadOptions::default())
            .unwrap();
        assert!((narrow.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn half_lines_split_mass() {
        let up = integrate_upper(gauss, 0.0, 1.0, &QuadOptions::default()).unwrap();
        let lo = integrate_lower(gauss, 0.0, 1.0, &QuadOptions::default()).unwrap();
        assert!((up.value - 0.5).abs() < 1e-12);
        assert!((lo.value - 0.5).abs() < 1e-12);
        let to = integrate_to(gauss, 0.0, &[-1.0], 1.0, &QuadOptions::default()).unwrap();
        assert!((to.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn periodic_trapezoid() {
        let r = integrate_periodic(|t| Ok((t.cos()).exp()), &QuadOptions::default()).unwrap();
        // 2*pi*I0(1)
        assert!((r.value - 2.0 * PI * 1.266_065_877_752_008_4).abs() < 1e-12);
    }

    #[test]
    fn plane_standard_gaussian() {
        let g = |y: &[f64]| (-0.5 * (y[0] * y[0] + y[1] * y[1])).exp() / (2.0 * PI);
        let opts = QuadOptions::default();
        let r = integrate_plane(g, &Landmarks::default(), 1.0, &opts, &opts).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let marks = Landmarks {
            angles: vec![0.0, 2.0, 4.0],
            ..Default::default()
        };
        let r = integrate_plane(g, &marks, 1.0, &opts, &opts).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }
}
