//! Natural exponential families generated by a zero-mean null distribution.
//!
//! A family is indexed either by its natural parameter `theta` or by its mean
//! `mu = grad log Z(theta)`. Everything here is stated for a single
//! observation; results for the sample mean of `n` i.i.d. observations are
//! obtained by scaling with `n` (divergences and log likelihood ratios are
//! linear in `n`), never by building a new family.

mod enumerate;
mod sample;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::quad::{integrate_line, integrate_plane, Landmarks, QuadOptions};
use crate::numeric::roots::{bisect, safeguarded_newton};
use crate::numeric::{dot, log_sum_exp};

pub use enumerate::Enumeration;
pub use sample::{count_replications, mean_of_replications, replication_moments, sample_mean, SampleConfig};

/// Largest number of outcomes an exact enumeration may produce by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 5_000_000;

/// Null tail mass below which Poisson support is cut off.
pub const POISSON_TAIL_MASS: f64 = 1e-14;

const MEAN_MAP_TOL: f64 = 1e-10;
const MAX_NEWTON_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `N(mu, I_d)`; the null is the standard normal.
    GaussianLocation { d: usize },
    /// `X = 1/p` with probability `p`, `-1/(1-p)` otherwise.
    ScaledBernoulli { p: f64 },
    /// `X = K - rate` with `K ~ Poisson(rate)`.
    Poisson { rate: f64 },
    /// One-dimensional finite support with the given null weights.
    Finite { atoms: Vec<f64>, weights: Vec<f64> },
}

/// Open set of attainable means.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanSpace {
    Whole { d: usize },
    Interval { lo: f64, hi: f64 },
}

impl MeanSpace {
    pub fn contains_interior(&self, mu: &[f64]) -> bool {
        match *self {
            MeanSpace::Whole { d } => mu.len() == d && mu.iter().all(|x| x.is_finite()),
            MeanSpace::Interval { lo, hi } => mu.len() == 1 && mu[0] > lo && mu[0] < hi,
        }
    }

    /// `sup { v . mu : mu in M }`.
    pub fn support_function(&self, v: &[f64]) -> f64 {
        match *self {
            MeanSpace::Whole { .. } => {
                if v.iter().all(|x| *x == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            MeanSpace::Interval { lo, hi } => {
                if v[0] > 0.0 {
                    v[0] * hi
                } else if v[0] < 0.0 {
                    v[0] * lo
                } else {
                    0.0
                }
            }
        }
    }
}

/// Natural parameter space. All shipped families are regular with `Theta = R^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NaturalDomain {
    Whole { d: usize },
}

/// Null support of a single observation, relative to the family's reference
/// measure (counting measure for discrete, Lebesgue for continuous).
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    Discrete {
        atoms: Vec<(Vec<f64>, f64)>,
        truncated_at: Option<u64>,
    },
    Continuous,
}

/// A natural exponential family generated by a null distribution `P0` with
/// zero mean, together with its parameter maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    name: String,
    kind: FamilyKind,
    enumeration_cap: usize,
}

impl FamilySpec {
    pub fn gaussian(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidFamily("dimension must be positive".into()));
        }
        Self::build(format!("gaussian(d={d})"), FamilyKind::GaussianLocation { d })
    }

    pub fn scaled_bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidFamily(format!("bernoulli p must lie in (0,1), got {p}")));
        }
        Self::build(format!("scaled_bernoulli(p={p})"), FamilyKind::ScaledBernoulli { p })
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidFamily(format!("poisson rate must be positive, got {rate}")));
        }
        Self::build(format!("poisson(rate={rate})"), FamilyKind::Poisson { rate })
    }

    /// A custom one-dimensional family with finite support. The weights must
    /// sum to one and the atoms must have zero mean under them.
    pub fn finite(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() < 2 || atoms.len() != weights.len() {
            return Err(Error::InvalidFamily(
                "finite family needs at least two atoms and one weight per atom".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidFamily("weights must be positive".into()));
        }
        let mut sorted = atoms.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidFamily("atoms must be distinct".into()));
        }
        Self::build(format!("discrete(k={})", atoms.len()), FamilyKind::Finite { atoms, weights })
    }

    fn build(name: String, kind: FamilyKind) -> Result<Self> {
        let fam = Self {
            name,
            kind,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        };
        let violations = fam.check_invariants();
        if violations.is_empty() {
            Ok(fam)
        } else {
            Err(Error::InvalidFamily(violations.join("; ")))
        }
    }

    pub fn with_enumeration_cap(mut self, cap: usize) -> Self {
        self.enumeration_cap = cap;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn enumeration_cap(&self) -> usize {
        self.enumeration_cap
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            FamilyKind::GaussianLocation { d } => d,
            _ => 1,
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self.kind, FamilyKind::GaussianLocation { .. })
    }

    pub fn natural_domain(&self) -> NaturalDomain {
        NaturalDomain::Whole { d: self.dim() }
    }

    pub fn mean_space(&self) -> MeanSpace {
        match &self.kind {
            FamilyKind::GaussianLocation { d } => MeanSpace::Whole { d: *d },
            FamilyKind::ScaledBernoulli { p } => MeanSpace::Interval {
                lo: -1.0 / (1.0 - p),
                hi: 1.0 / p,
            },
            FamilyKind::Poisson { rate } => MeanSpace::Interval {
                lo: -rate,
                hi: f64::INFINITY,
            },
            FamilyKind::Finite { atoms, .. } => MeanSpace::Interval {
                lo: atoms.iter().copied().fold(f64::INFINITY, f64::min),
                hi: atoms.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            },
        }
    }

    /// Atoms and null weights for the families with finite support.
    fn finite_atoms(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            FamilyKind::ScaledBernoulli { p } => Some((vec![1.0 / p, -1.0 / (1.0 - p)], vec![*p, 1.0 - p])),
            FamilyKind::Finite { atoms, weights } => Some((atoms.clone(), weights.clone())),
            _ => None,
        }
    }

    /// Standard deviation of a single observation under the null.
    pub fn null_scale(&self) -> f64 {
        match &self.kind {
            FamilyKind::GaussianLocation { .. } => 1.0,
            FamilyKind::ScaledBernoulli { p } => (1.0 / p + 1.0 / (1.0 - p)).sqrt(),
            FamilyKind::Poisson { rate } => rate.sqrt(),
            FamilyKind::Finite { atoms, weights } => {
                atoms.iter().zip(weights).map(|(a, w)| w * a * a).sum::<f64>().sqrt()
            }
        }
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `log Z(theta)`, in nats.
    pub fn log_partition(&self, theta: &[f64]) -> f64 {
        match &self.kind {
            FamilyKind::GaussianLocation { .. } => 0.5 * dot(theta, theta),
            FamilyKind::Poisson { rate } => {
                let t = theta[0];
                rate * (t.exp_m1() - t)
            }
            _ => {
                let (atoms, weights) = self.finite_atoms().unwrap();
                let terms: Vec<f64> = atoms
                    .iter()
                    .zip(&weights)
                    .map(|(a, w)| w.ln() + theta[0] * a)
                    .collect();
                log_sum_exp(&terms)
            }
        }
    }

    /// Tilted probabilities of the finite atoms at natural parameter `t`.
    fn tilted_weights(atoms: &[f64], weights: &[f64], t: f64) -> Vec<f64> {
        let logs: Vec<f64> = atoms.iter().zip(weights).map(|(a, w)| w.ln() + t * a).collect();
        let lz = log_sum_exp(&logs);
        logs.iter().map(|l| (l - lz).exp()).collect()
    }

    /// `mu(theta) = grad log Z(theta)`.
    pub fn mean_map(&self, theta: &[f64]) -> Vec<f64> {
        match &self.kind {
            FamilyKind::GaussianLocation { .. } => theta.to_vec(),
            FamilyKind::Poisson { rate } => vec![rate * theta[0].exp_m1()],
            _ => {
                let (atoms, weights) = self.finite_atoms().unwrap();
                let s = Self::tilted_weights(&atoms, &weights, theta[0]);
                vec![s.iter().zip(&atoms).map(|(s, a)| s * a).sum()]
            }
        }
    }

    /// Hessian of `log Z` (the covariance of `Y` under `P_theta`), row-major.
    pub fn hessian(&self, theta: &[f64]) -> Vec<f64> {
        match &self.kind {
            FamilyKind::GaussianLocation { d } => {
                let mut h = vec![0.0; d * d];
                for i in 0..*d {
                    h[i * d + i] = 1.0;
                }
                h
            }
            FamilyKind::Poisson { rate } => vec![rate * theta[0].exp()],
            _ => {
                let (atoms, weights) = self.finite_atoms().unwrap();
                let s = Self::tilted_weights(&atoms, &weights, theta[0]);
                let m: f64 = s.iter().zip(&atoms).map(|(s, a)| s * a).sum();
                vec![s.iter().zip(&atoms).map(|(s, a)| s * (a - m) * (a - m)).sum()]
            }
        }
    }

    /// Inverse of the mean map. Safeguarded Newton on a bracket for `d = 1`,
    /// damped Newton on the convex dual objective otherwise.
    pub fn natural_of_mean(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(mu)?;
        if !self.mean_space().contains_interior(mu) {
            return Err(Error::MeanOutOfRange {
                family: self.name.clone(),
                mean: mu.to_vec(),
            });
        }
        if mu.iter().all(|x| *x == 0.0) {
            return Ok(vec![0.0; mu.len()]);
        }
        if self.dim() == 1 {
            self.invert_1d(mu[0]).map(|t| vec![t])
        } else {
            self.invert_damped(mu)
        }
    }

    fn invert_1d(&self, target: f64) -> Result<f64> {
        let mean = |t: f64| self.mean_map(&[t])[0];
        let mut lo = -1.0;
        let mut hi = 1.0;
        let mut guard = 0;
        while mean(hi) <= target {
            hi *= 2.0;
            guard += 1;
            if guard > 1100 {
                return Err(Error::NoConvergence {
                    what: "mean-map bracket",
                    iterations: guard,
                    residual: target - mean(hi),
                });
            }
        }
        while mean(lo) >= target {
            lo *= 2.0;
            guard += 1;
            if guard > 1100 {
                return Err(Error::NoConvergence {
                    what: "mean-map bracket",
                    iterations: guard,
                    residual: mean(lo) - target,
                });
            }
        }
        let f_tol = 1e-15 * target.abs().max(1.0);
        let t = safeguarded_newton(
            |t| (mean(t) - target, self.hessian(&[t])[0]),
            lo,
            hi,
            f_tol,
            MAX_NEWTON_ITER,
        )?;
        let residual = (mean(t) - target).abs();
        if residual > MEAN_MAP_TOL * target.abs().max(1.0) {
            return Err(Error::NoConvergence {
                what: "mean-map inversion",
                iterations: MAX_NEWTON_ITER,
                residual,
            });
        }
        Ok(t)
    }

    fn invert_damped(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let d = mu.len();
        let objective = |t: &[f64]| self.log_partition(t) - dot(t, mu);
        let mut theta = vec![0.0; d];
        let scale = mu.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_NEWTON_ITER {
            let grad: Vec<f64> = self.mean_map(&theta).iter().zip(mu).map(|(m, u)| m - u).collect();
            residual = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if residual <= 1e-14 * scale {
                return Ok(theta);
            }
            let h = DMatrix::from_row_slice(d, d, &self.hessian(&theta));
            let g = DVector::from_column_slice(&grad);
            let step = match h.cholesky() {
                Some(c) => c.solve(&g),
                None => g.clone(),
            };
            let slope = g.dot(&step);
            let f0 = objective(&theta);
            let mut t = 1.0;
            let mut next = theta.clone();
            loop {
                for i in 0..d {
                    next[i] = theta[i] - t * step[i];
                }
                if objective(&next) <= f0 - 1e-4 * t * slope || t < 1e-12 {
                    break;
                }
                t *= 0.5;
            }
            if next == theta {
                break;
            }
            theta = next;
        }
        if residual <= MEAN_MAP_TOL * scale {
            Ok(theta)
        } else {
            Err(Error::NoConvergence {
                what: "damped Newton mean-map inversion",
                iterations: MAX_NEWTON_ITER,
                residual,
            })
        }
    }

    /// `D(P_mu || P_0)` for the mean of `n` observations: `n (theta . mu - log Z(theta))`.
    pub fn kl(&self, mu: &[f64], n: u64) -> Result<f64> {
        let theta = self.natural_of_mean(mu)?;
        let per_obs = dot(&theta, mu) - self.log_partition(&theta);
        Ok(n as f64 * per_obs.max(0.0))
    }

    /// `D(P_a || P_b)` between two family members at sample size `n`.
    pub fn divergence(&self, mu_a: &[f64], mu_b: &[f64], n: u64) -> Result<f64> {
        let ta = self.natural_of_mean(mu_a)?;
        let tb = self.natural_of_mean(mu_b)?;
        let diff: Vec<f64> = ta.iter().zip(&tb).map(|(a, b)| a - b).collect();
        let per_obs = dot(&diff, mu_a) - self.log_partition(&ta) + self.log_partition(&tb);
        Ok(n as f64 * per_obs.max(0.0))
    }

    /// `log p_mu(y) / p_0(y)` for the sample mean `y` of `n` observations.
    pub fn log_density_ratio(&self, mu: &[f64], y: &[f64], n: u64) -> Result<f64> {
        self.check_dim(y)?;
        let theta = self.natural_of_mean(mu)?;
        Ok(self.log_ratio_natural(&theta, y, n))
    }

    /// Same as [`log_density_ratio`](Self::log_density_ratio) for a known natural parameter.
    pub fn log_ratio_natural(&self, theta: &[f64], y: &[f64], n: u64) -> f64 {
        n as f64 * (dot(theta, y) - self.log_partition(theta))
    }

    /// `sup_{mu in M} log p_mu(y)/p_0(y)`, extended to the edge of the mean
    /// space for one-dimensional discrete families.
    pub fn sup_log_ratio(&self, y: &[f64], n: u64) -> Result<f64> {
        if self.mean_space().contains_interior(y) {
            return self.kl(y, n);
        }
        if let MeanSpace::Interval { lo, hi } = self.mean_space() {
            let edge_weight = match &self.kind {
                FamilyKind::Poisson { rate } if y[0] == lo => Some((-rate).exp()),
                _ => self.finite_atoms().and_then(|(atoms, weights)| {
                    atoms
                        .iter()
                        .zip(&weights)
                        .find(|(a, _)| **a == y[0] && (y[0] == lo || y[0] == hi))
                        .map(|(_, w)| *w)
                }),
            };
            if let Some(w) = edge_weight {
                return Ok(-(n as f64) * w.ln());
            }
        }
        Err(Error::MeanOutOfRange {
            family: self.name.clone(),
            mean: y.to_vec(),
        })
    }

    /// Log density of the null for the sample mean of `n` observations
    /// (continuous families only).
    pub fn log_null_density(&self, y: &[f64], n: u64) -> Option<f64> {
        match self.kind {
            FamilyKind::GaussianLocation { d } => {
                let nf = n as f64;
                Some(0.5 * d as f64 * (nf / (2.0 * PI)).ln() - 0.5 * nf * dot(y, y))
            }
            _ => None,
        }
    }

    /// Null support of a single observation.
    pub fn support(&self) -> Support {
        match &self.kind {
            FamilyKind::GaussianLocation { .. } => Support::Continuous,
            _ => {
                let e = self.enumerate_outcomes(1).expect("single-observation support is small");
                Support::Discrete {
                    atoms: e.iter().map(|(y, lp)| (y.to_vec(), lp)).collect(),
                    truncated_at: e.truncated_at,
                }
            }
        }
    }

    /// `E_{P_mu}[f(Y)]` for the sample mean of `n` observations: exact sum for
    /// discrete families, adaptive quadrature for continuous ones. `marks`
    /// lists points where the integrand has peaks or kinks.
    pub fn expect<F>(&self, mu: &[f64], n: u64, f: F, marks: &Landmarks) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        let theta = self.natural_of_mean(mu)?;
        self.expect_natural(&theta, mu, n, f, marks)
    }

    fn expect_natural<F>(&self, theta: &[f64], mu: &[f64], n: u64, f: F, marks: &Landmarks) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        self.expect_tilted(theta, mu, n, |y| (0.0, f(y)), marks)
    }

    /// `E_{P_theta}[exp(a(Y)) b(Y)]` for `g(y) = (a(y), b(y))`, with `exp(a)`
    /// folded into the log density so large tilts neither overflow nor
    /// underflow.
    fn expect_tilted<G>(&self, theta: &[f64], mu: &[f64], n: u64, g: G, marks: &Landmarks) -> Result<f64>
    where
        G: Fn(&[f64]) -> (f64, f64),
    {
        if self.is_discrete() {
            let mut means = marks.points.clone();
            means.push(mu.to_vec());
            let e = self.enumerate_covering(n, &means)?;
            let mut total = 0.0;
            for (y, lp) in e.iter() {
                let (a, b) = g(y);
                let p = (lp + self.log_ratio_natural(theta, y, n) + a).exp();
                if p > 0.0 {
                    total += p * b;
                }
            }
            return Ok(total);
        }
        let scale = self.null_scale() / (n as f64).sqrt();
        let weight = |y: &[f64]| {
            let (a, b) = g(y);
            let lp = self.log_null_density(y, n).unwrap() + self.log_ratio_natural(theta, y, n) + a;
            let p = lp.exp();
            if p > 0.0 {
                p * b
            } else {
                0.0
            }
        };
        let opts = QuadOptions::default();
        match self.dim() {
            1 => {
                let mut breaks: Vec<f64> = marks.points.iter().map(|p| p[0]).collect();
                breaks.push(mu[0]);
                let r = integrate_line(|x| weight(&[x]), &breaks, scale, &opts)?;
                Ok(r.value)
            }
            2 => {
                let mut m = marks.clone();
                m.points.push(mu.to_vec());
                let outer = QuadOptions {
                    abs_tol: 1e-9,
                    rel_tol: 1e-11,
                    ..opts
                };
                let inner = QuadOptions {
                    abs_tol: 1e-12,
                    rel_tol: 1e-12,
                    ..opts
                };
                Ok(integrate_plane(weight, &m, scale, &inner, &outer)?.value)
            }
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    /// `E_{P_0}[f(Y)]`.
    pub fn null_expectation<F>(&self, n: u64, f: F, marks: &Landmarks) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        let zero = vec![0.0; self.dim()];
        self.expect_natural(&zero, &zero, n, f, marks)
    }

    /// `E_{P_0}[exp(a(Y)) b(Y)]` for `g(y) = (a(y), b(y))`; use this when
    /// `exp(a)` is a likelihood ratio that can be astronomically large where
    /// the null density is tiny.
    pub fn null_expectation_scaled<G>(&self, n: u64, g: G, marks: &Landmarks) -> Result<f64>
    where
        G: Fn(&[f64]) -> (f64, f64),
    {
        let zero = vec![0.0; self.dim()];
        self.expect_tilted(&zero, &zero, n, g, marks)
    }

    /// Mean on side `sign` of zero whose per-observation divergence equals
    /// `divergence` (bisection in the mean, tolerance `1e-12`).
    pub fn mean_at_divergence(&self, divergence: f64, sign: i8) -> Result<f64> {
        if self.dim() != 1 {
            return Err(Error::UnsupportedDimension(self.dim()));
        }
        if !(divergence > 0.0) {
            return Err(Error::InvalidArgument(format!("divergence must be positive, got {divergence}")));
        }
        let s = if sign >= 0 { 1.0 } else { -1.0 };
        let MeanSpace::Interval { lo, hi } = self.mean_space() else {
            // Gaussian d=1: closed interval is the whole line.
            return self.radius_unbounded(divergence, s);
        };
        let edge = if s > 0.0 { hi } else { lo };
        if edge.is_infinite() {
            return self.radius_unbounded(divergence, s);
        }
        let supremum = self.sup_log_ratio(&[edge], 1)?;
        if divergence >= supremum {
            return Err(Error::NoSuchRadius {
                divergence,
                sign: s as i8,
                supremum,
            });
        }
        let g = |m: f64| -> Result<f64> {
            if m == edge {
                return Ok(supremum - divergence);
            }
            Ok(self.kl(&[m], 1)? - divergence)
        };
        let (a, b) = if s > 0.0 { (0.0, edge) } else { (edge, 0.0) };
        let root = bisect(|m| g(m).map(|v| s * v), a, b, 1e-12, 400)?;
        Ok(root)
    }

    fn radius_unbounded(&self, divergence: f64, s: f64) -> Result<f64> {
        let mut far = s;
        while self.kl(&[far], 1)? < divergence {
            far *= 2.0;
            if far.abs() > 1e300 {
                return Err(Error::NoSuchRadius {
                    divergence,
                    sign: s as i8,
                    supremum: f64::INFINITY,
                });
            }
        }
        let (a, b) = if s > 0.0 { (0.0, far) } else { (far, 0.0) };
        bisect(|m| Ok(s * (self.kl(&[m], 1)? - divergence)), a, b, 1e-12, 400)
    }

    /// Construction invariants; empty when the family is well formed.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = self.dim();
        let zero = vec![0.0; d];
        let lz0 = self.log_partition(&zero);
        if !(lz0.abs() <= 1e-12) {
            out.push(format!("log Z(0) = {lz0:e}, expected 0 (null weights must sum to one)"));
        }
        let m0 = self.mean_map(&zero);
        let tol = 1e-12 * self.null_scale().max(1.0);
        if m0.iter().any(|m| !(m.abs() <= tol)) {
            out.push(format!("mean map at 0 is {m0:?}, expected the zero vector"));
        }
        if let Some((_, weights)) = self.finite_atoms() {
            let s: f64 = weights.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                out.push(format!("null weights sum to {s}, expected 1"));
            }
        }
        if d == 1 {
            for i in -40..=40 {
                let t = i as f64 * 0.1;
                let h = self.hessian(&[t])[0];
                if !(h > 0.0 && h.is_finite()) {
                    out.push(format!("log Z is not strictly convex at theta = {t} (variance {h:e})"));
                    break;
                }
            }
        }
        out
    }
}

/// Converts a success fraction `q` of the underlying Bernoulli into the mean
/// of the scaled statistic. The same expression is used for enumerated
/// outcomes, so thresholds and outcomes agree bit for bit.
pub fn bernoulli_mean(p: f64, q: f64) -> f64 {
    q / p - (1.0 - q) / (1.0 - p)
}

/// Inverse of [`bernoulli_mean`].
pub fn bernoulli_success_fraction(p: f64, mu: f64) -> f64 {
    (mu + 1.0 / (1.0 - p)) * p * (1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_closed_forms() {
        let g = FamilySpec::gaussian(2).unwrap();
        assert_eq!(g.natural_of_mean(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let t = g.natural_of_mean(&[2.0, 0.0]).unwrap();
        assert!((t[0] - 2.0).abs() < 1e-12 && t[1].abs() < 1e-12);
        assert!((g.kl(&[2.0, 0.0], 1).unwrap() - 2.0).abs() < 1e-12);
        let g1 = FamilySpec::gaussian(1).unwrap();
        assert!((g1.log_density_ratio(&[1.0], &[1.0], 1).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn bernoulli_kl_matches_two_atom_sum() {
        let p = 0.3;
        let b = FamilySpec::scaled_bernoulli(p).unwrap();
        let mu = bernoulli_mean(p, 0.5);
        let direct = 0.5 * (0.5f64 / 0.3).ln() + 0.5 * (0.5f64 / 0.7).ln();
        assert!((b.kl(&[mu], 30).unwrap() - 30.0 * direct).abs() < 1e-12);
        // closed-form logit inversion
        let theta = b.natural_of_mean(&[mu]).unwrap()[0];
        let logit = |x: f64| (x / (1.0 - x)).ln();
        let closed = (logit(0.5) - logit(p)) * p * (1.0 - p);
        assert!((theta - closed).abs() < 1e-12);
    }

    #[test]
    fn mean_out_of_range() {
        let b = FamilySpec::scaled_bernoulli(0.3).unwrap();
        let e = b.natural_of_mean(&[1.0 / 0.3]).unwrap_err();
        assert!(matches!(e, Error::MeanOutOfRange { .. }));
        let p = FamilySpec::poisson(2.0).unwrap();
        assert!(p.kl(&[-2.5], 1).is_err());
        assert!(p.kl(&[40.0], 1).is_ok());
    }

    #[test]
    fn poisson_kl_closed_form() {
        let rate = 2.0;
        let p = FamilySpec::poisson(rate).unwrap();
        // tilted rate r = rate + mu; KL(Poi(r)||Poi(rate)) = r ln(r/rate) - r + rate
        let mu = 1.5;
        let r: f64 = rate + mu;
        let expected = r * (r / rate).ln() - r + rate;
        assert!((p.kl(&[mu], 1).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn corrupted_finite_family_rejected() {
        let e = FamilySpec::finite(vec![-1.0, 1.0], vec![0.5, 0.6]).unwrap_err();
        match e {
            Error::InvalidFamily(msg) => assert!(msg.contains("log Z(0)")),
            other => panic!("unexpected {other:?}"),
        }
        let e = FamilySpec::finite(vec![-1.0, 2.0], vec![0.5, 0.5]).unwrap_err();
        assert!(matches!(e, Error::InvalidFamily(_)));
        assert!(FamilySpec::finite(vec![-2.0, 1.0], vec![1.0 / 3.0, 2.0 / 3.0]).is_ok());
    }

    #[test]
    fn sup_log_ratio_at_edge() {
        let p = 0.3;
        let b = FamilySpec::scaled_bernoulli(p).unwrap();
        let v = b.sup_log_ratio(&[1.0 / p], 5).unwrap();
        assert!((v + 5.0 * p.ln()).abs() < 1e-12);
        let po = FamilySpec::poisson(2.0).unwrap();
        assert!((po.sup_log_ratio(&[-2.0], 3).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn radius_on_each_side() {
        let g = FamilySpec::gaussian(1).unwrap();
        assert!((g.mean_at_divergence(0.5, 1).unwrap() - 1.0).abs() < 1e-11);
        assert!((g.mean_at_divergence(0.5, -1).unwrap() + 1.0).abs() < 1e-11);
        let b = FamilySpec::scaled_bernoulli(0.3).unwrap();
        let e = b.mean_at_divergence(5.0, 1).unwrap_err();
        assert!(matches!(e, Error::NoSuchRadius { .. }));
    }

    #[test]
    fn divergence_between_gaussians() {
        let g = FamilySpec::gaussian(1).unwrap();
        assert!((g.divergence(&[-1.0], &[1.0], 1).unwrap() - 2.0).abs() < 1e-12);
        assert!((g.divergence(&[-1.0], &[1.0], 3).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_of_log_ratio_is_kl() {
        let g = FamilySpec::gaussian(1).unwrap();
        let mu = [0.7];
        let v = g
            .expect(&mu, 4, |y| g.log_density_ratio(&mu, y, 4).unwrap(), &Landmarks::default())
            .unwrap();
        assert!((v - g.kl(&mu, 4).unwrap()).abs() < 1e-10);
        let b = FamilySpec::scaled_bernoulli(0.3).unwrap();
        let mu = [0.4];
        let v = b
            .expect(&mu, 7, |y| b.log_density_ratio(&mu, y, 7).unwrap(), &Landmarks::default())
            .unwrap();
        assert!((v - b.kl(&mu, 7).unwrap()).abs() < 1e-12);
    }
}
