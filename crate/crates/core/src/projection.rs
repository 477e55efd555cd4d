//! Mean sets, information projection of the null onto convex mean sets, and
//! the e-variables built from them.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::{replication_moments, FamilySpec, SampleConfig};
use crate::numeric::quad::Landmarks;
use crate::numeric::roots::safeguarded_newton;
use crate::numeric::{dot, log_sum_exp, norm2};
use crate::report::OracleKind;

/// A set of alternative means. Convex variants describe the set itself;
/// surrounding variants describe it through its bounded complement around 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum MeanSet {
    /// `{mu : v . mu >= a}`.
    HalfSpace { v: Vec<f64>, a: f64 },
    /// `[lo, hi]` in one dimension; a missing end is unbounded.
    Interval {
        #[serde(default)]
        lo: Option<f64>,
        #[serde(default)]
        hi: Option<f64>,
    },
    /// `{mu : normals[i] . mu >= offsets[i] for all i}`.
    Polytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
    /// `M \ (mu_minus, mu_plus)` in one dimension.
    IntervalComplement { mu_minus: f64, mu_plus: f64 },
    /// Everything outside the open ball `{mu : kl(mu, 1) < D1}`.
    KlBallComplement {
        #[serde(rename = "D1", alias = "d1")]
        d1: f64,
    },
    /// Everything outside a star-shaped region given by its boundary radius.
    Radial { boundary: RadialBoundary },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum RadialBoundary {
    Sphere { radius: f64 },
    /// Axis-aligned ellipse in two dimensions.
    Ellipse { semi_axes: [f64; 2] },
}

impl RadialBoundary {
    /// Distance from 0 to the boundary along the unit vector `u`.
    pub fn radius(&self, u: &[f64]) -> f64 {
        match self {
            RadialBoundary::Sphere { radius } => *radius,
            RadialBoundary::Ellipse { semi_axes: [a, b] } => {
                1.0 / ((u[0] / a).powi(2) + (u[1] / b).powi(2)).sqrt()
            }
        }
    }
}

impl fmt::Display for MeanSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanSet::HalfSpace { v, a } => write!(f, "half-space(v={v:?},a={a})"),
            MeanSet::Interval { lo, hi } => {
                let lo = lo.map_or("-inf".to_string(), |x| x.to_string());
                let hi = hi.map_or("inf".to_string(), |x| x.to_string());
                write!(f, "interval[{lo},{hi}]")
            }
            MeanSet::Polytope { offsets, .. } => write!(f, "polytope(m={})", offsets.len()),
            MeanSet::IntervalComplement { mu_minus, mu_plus } => {
                write!(f, "interval-complement({mu_minus},{mu_plus})")
            }
            MeanSet::KlBallComplement { d1 } => write!(f, "kl-ball-complement(D1={d1})"),
            MeanSet::Radial { boundary } => match boundary {
                RadialBoundary::Sphere { radius } => write!(f, "radial-sphere(r={radius})"),
                RadialBoundary::Ellipse { semi_axes } => {
                    write!(f, "radial-ellipse({},{})", semi_axes[0], semi_axes[1])
                }
            },
        }
    }
}

impl MeanSet {
    pub fn is_convex(&self) -> bool {
        matches!(
            self,
            MeanSet::HalfSpace { .. } | MeanSet::Interval { .. } | MeanSet::Polytope { .. }
        )
    }

    /// Shape checks that do not need a family: separation from 0 and
    /// well-formed parameters.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidMeanSet(m));
        match self {
            MeanSet::HalfSpace { v, a } => {
                let nv = norm2(v);
                if !(nv > 0.0) || !a.is_finite() {
                    return bad("half-space needs a nonzero normal and finite offset".into());
                }
                if *a <= 0.0 {
                    return Err(Error::Degenerate(format!("half-space offset {a} does not exclude 0")));
                }
            }
            MeanSet::Interval { lo, hi } => {
                let (l, h) = (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY));
                if l.is_nan() || h.is_nan() || l > h {
                    return bad(format!("interval [{l}, {h}] is empty"));
                }
                if l <= 0.0 && h >= 0.0 {
                    return Err(Error::Degenerate(format!("interval [{l}, {h}] contains 0")));
                }
            }
            MeanSet::Polytope { normals, offsets } => {
                if normals.is_empty() || normals.len() != offsets.len() {
                    return bad("polytope needs one offset per normal".into());
                }
                let d = normals[0].len();
                if d == 0 || normals.iter().any(|n| n.len() != d || !(norm2(n) > 0.0)) {
                    return bad("polytope normals must be nonzero and of equal dimension".into());
                }
                if offsets.iter().all(|b| *b <= 0.0) {
                    return Err(Error::Degenerate("polytope contains 0".into()));
                }
                euclidean_projection(normals, offsets, &vec![0.0; d])?;
            }
            MeanSet::IntervalComplement { mu_minus, mu_plus } => {
                if !(*mu_minus < 0.0 && *mu_plus > 0.0) {
                    return bad(format!("need mu_minus < 0 < mu_plus, got {mu_minus}, {mu_plus}"));
                }
            }
            MeanSet::KlBallComplement { d1 } => {
                if !(*d1 > 0.0 && d1.is_finite()) {
                    return bad(format!("D1 must be positive, got {d1}"));
                }
            }
            MeanSet::Radial { boundary } => match boundary {
                RadialBoundary::Sphere { radius } => {
                    if !(*radius > 0.0 && radius.is_finite()) {
                        return bad(format!("radius must be positive, got {radius}"));
                    }
                }
                RadialBoundary::Ellipse { semi_axes } => {
                    if semi_axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                        return bad("ellipse semi-axes must be positive".into());
                    }
                }
            },
        }
        Ok(())
    }

    /// Dimension implied by the set, when it carries one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            MeanSet::HalfSpace { v, .. } => Some(v.len()),
            MeanSet::Interval { .. } | MeanSet::IntervalComplement { .. } => Some(1),
            MeanSet::Polytope { normals, .. } => normals.first().map(|n| n.len()),
            MeanSet::Radial {
                boundary: RadialBoundary::Ellipse { .. },
            } => Some(2),
            _ => None,
        }
    }

    fn check_family(&self, fam: &FamilySpec) -> Result<()> {
        self.validate()?;
        if let Some(d) = self.dim() {
            if d != fam.dim() {
                return Err(Error::DimensionMismatch {
                    expected: fam.dim(),
                    got: d,
                });
            }
        }
        Ok(())
    }

    /// Resolves the set against a family into a membership test. Boundary
    /// points belong to the set; points outside the interior of the mean
    /// space belong to a surrounding set.
    pub fn membership(&self, fam: &FamilySpec) -> Result<Membership> {
        self.check_family(fam)?;
        Ok(match self {
            MeanSet::HalfSpace { v, a } => Membership::HalfSpaces(vec![(v.clone(), *a)]),
            MeanSet::Interval { lo, hi } => {
                let mut hs = Vec::new();
                if let Some(l) = lo {
                    hs.push((vec![1.0], *l));
                }
                if let Some(h) = hi {
                    hs.push((vec![-1.0], -h));
                }
                Membership::HalfSpaces(hs)
            }
            MeanSet::Polytope { normals, offsets } => {
                Membership::HalfSpaces(normals.iter().cloned().zip(offsets.iter().copied()).collect())
            }
            MeanSet::IntervalComplement { mu_minus, mu_plus } => Membership::Outside1d {
                lo: *mu_minus,
                hi: *mu_plus,
            },
            MeanSet::KlBallComplement { d1 } => {
                if fam.dim() == 1 {
                    let (lo, hi) = kl_ball_endpoints(fam, *d1)?;
                    Membership::Outside1d { lo, hi }
                } else {
                    Membership::OutsideKl {
                        fam: fam.clone(),
                        d1: *d1,
                    }
                }
            }
            MeanSet::Radial { boundary } => Membership::OutsideRadial(boundary.clone()),
        })
    }
}

/// Endpoints `(mu_minus, mu_plus)` of a one-dimensional KL ball.
pub fn kl_ball_endpoints(fam: &FamilySpec, d1: f64) -> Result<(f64, f64)> {
    let side = |s: i8| {
        fam.mean_at_divergence(d1, s).map_err(|e| match e {
            Error::NoSuchRadius { .. } => Error::NotNice(format!(
                "KL ball of radius {d1} reaches the edge of the mean space on side {s}"
            )),
            other => other,
        })
    };
    Ok((side(-1)?, side(1)?))
}

/// A mean set resolved against a family.
#[derive(Debug, Clone)]
pub enum Membership {
    HalfSpaces(Vec<(Vec<f64>, f64)>),
    Outside1d { lo: f64, hi: f64 },
    OutsideKl { fam: FamilySpec, d1: f64 },
    OutsideRadial(RadialBoundary),
}

impl Membership {
    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            Membership::HalfSpaces(hs) => hs.iter().all(|(v, a)| dot(v, y) >= *a),
            Membership::Outside1d { lo, hi } => y[0] <= *lo || y[0] >= *hi,
            Membership::OutsideKl { fam, d1 } => match fam.kl(y, 1) {
                Ok(k) => k >= *d1,
                Err(_) => true,
            },
            Membership::OutsideRadial(b) => {
                let r = norm2(y);
                if r == 0.0 {
                    return false;
                }
                let u: Vec<f64> = y.iter().map(|x| x / r).collect();
                r >= b.radius(&u)
            }
        }
    }
}

/// Closest point of `{mu : N mu >= b}` to `x` in Euclidean distance, by
/// enumerating candidate active sets of at most `d` constraints.
pub fn euclidean_projection(normals: &[Vec<f64>], offsets: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let d = x.len();
    let m = normals.len();
    let feasible = |p: &[f64]| {
        normals
            .iter()
            .zip(offsets)
            .all(|(nv, b)| dot(nv, p) >= b - 1e-12 * (1.0 + b.abs()))
    };
    if feasible(x) {
        return Ok(x.to_vec());
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut subset = Vec::new();
    fn walk(
        start: usize,
        m: usize,
        d: usize,
        subset: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if !subset.is_empty() {
            visit(subset);
        }
        if subset.len() == d {
            return;
        }
        for i in start..m {
            subset.push(i);
            walk(i + 1, m, d, subset, visit);
            subset.pop();
        }
    }
    walk(0, m, d, &mut subset, &mut |s: &[usize]| {
        let k = s.len();
        let nmat = DMatrix::from_fn(k, d, |i, j| normals[s[i]][j]);
        let xv = DVector::from_column_slice(x);
        let rhs = DVector::from_iterator(k, s.iter().map(|&i| offsets[i])) - &nmat * &xv;
        let gram = &nmat * nmat.transpose();
        let Some(lu) = gram.clone().lu().solve(&rhs) else {
            return;
        };
        if (&gram * &lu - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
            return;
        }
        let p = &xv + nmat.transpose() * lu;
        let p: Vec<f64> = p.iter().copied().collect();
        if feasible(&p) {
            let dist: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
                best = Some((dist, p));
            }
        }
    });
    best.map(|(_, p)| p)
        .ok_or_else(|| Error::InfeasibleSet("polytope has no feasible point".into()))
}

/// Result of projecting the null onto a convex mean set.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub mu_star: Vec<f64>,
    pub theta_star: Vec<f64>,
    /// `kl(mu_star, 1)`.
    pub divergence: f64,
    /// Norm of the projected-gradient step at `mu_star` (0 when the
    /// minimizer is available in closed form).
    pub stationarity: f64,
}

/// The point of a convex mean set whose family member is closest to the
/// null in KL divergence.
pub fn info_project_convex(fam: &FamilySpec, set: &MeanSet) -> Result<Projection> {
    if !set.is_convex() {
        return Err(Error::InvalidMeanSet(format!("{set} is not a convex variant")));
    }
    set.check_family(fam)?;
    let space = fam.mean_space();
    let finish = |mu: Vec<f64>, stationarity: f64| -> Result<Projection> {
        let theta = fam.natural_of_mean(&mu)?;
        let divergence = fam.kl(&mu, 1)?;
        Ok(Projection {
            mu_star: mu,
            theta_star: theta,
            divergence,
            stationarity,
        })
    };
    match set {
        MeanSet::Interval { lo, hi } => {
            let target = match (lo, hi) {
                (Some(l), _) if *l > 0.0 => *l,
                (_, Some(h)) => *h,
                _ => unreachable!("validated interval excludes 0"),
            };
            if !space.contains_interior(&[target]) {
                return Err(Error::InfeasibleSet(format!(
                    "{set} does not meet the interior of the mean space of {}",
                    fam.name()
                )));
            }
            finish(vec![target], 0.0)
        }
        MeanSet::HalfSpace { v, a } => {
            let nv = norm2(v);
            let u: Vec<f64> = v.iter().map(|x| x / nv).collect();
            let a = a / nv;
            if space.support_function(&u) <= a {
                return Err(Error::InfeasibleSet(format!(
                    "{set} does not meet the interior of the mean space of {}",
                    fam.name()
                )));
            }
            if fam.dim() == 1 {
                return finish(vec![a / u[0]], 0.0);
            }
            // The minimizer is the mean of the member with theta along u on
            // the bounding hyperplane.
            let along = |l: f64| {
                let t: Vec<f64> = u.iter().map(|x| l * x).collect();
                let g = dot(&u, &fam.mean_map(&t)) - a;
                let h = fam.hessian(&t);
                let d = u.len();
                let mut q = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        q += u[i] * h[i * d + j] * u[j];
                    }
                }
                (g, q)
            };
            let mut hi = 1.0;
            while along(hi).0 <= 0.0 {
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(Error::InfeasibleSet(format!("{set}: no member reaches the half-space")));
                }
            }
            let l = safeguarded_newton(along, 0.0, hi, 1e-15 * a.max(1.0), 200)?;
            let t: Vec<f64> = u.iter().map(|x| l * x).collect();
            let mu = fam.mean_map(&t);
            finish(mu, 0.0)
        }
        MeanSet::Polytope { normals, offsets } => {
            let start = euclidean_projection(normals, offsets, &vec![0.0; fam.dim()])?;
            if !space.contains_interior(&start) {
                return Err(Error::InfeasibleSet(format!(
                    "{set}: nearest point {start:?} lies outside the interior of the mean space"
                )));
            }
            let (mu, res) = projected_gradient(fam, normals, offsets, start)?;
            finish(mu, res)
        }
        _ => unreachable!(),
    }
}

const PG_TOL: f64 = 1e-8;

fn projected_gradient(
    fam: &FamilySpec,
    normals: &[Vec<f64>],
    offsets: &[f64],
    start: Vec<f64>,
) -> Result<(Vec<f64>, f64)> {
    let step_from = |mu: &[f64], t: f64| -> Result<Vec<f64>> {
        let g = fam.natural_of_mean(mu)?;
        let x: Vec<f64> = mu.iter().zip(&g).map(|(m, g)| m - t * g).collect();
        euclidean_projection(normals, offsets, &x)
    };
    let gap = |a: &[f64], b: &[f64]| norm2(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
    let mut mu = start;
    let mut f = fam.kl(&mu, 1)?;
    let mut t: f64 = 1.0;
    for _ in 0..10_000 {
        let unit = step_from(&mu, 1.0)?;
        let res = gap(&mu, &unit);
        if res < PG_TOL {
            return Ok((mu, res));
        }
        let g = fam.natural_of_mean(&mu)?;
        let mut accepted = None;
        t = (t * 2.0).min(1e6);
        while t > 1e-16 {
            if let Ok(cand) = step_from(&mu, t) {
                if let Ok(fc) = fam.kl(&cand, 1) {
                    let dir: Vec<f64> = cand.iter().zip(&mu).map(|(c, m)| c - m).collect();
                    let sq = dot(&dir, &dir);
                    if fc <= f + dot(&g, &dir) + sq / (2.0 * t) {
                        accepted = Some((cand, fc));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((c, fc)) => {
                mu = c;
                f = fc;
            }
            None => break,
        }
    }
    let unit = step_from(&mu, 1.0)?;
    let res = gap(&mu, &unit);
    if res < PG_TOL {
        Ok((mu, res))
    } else {
        Err(Error::NoConvergence {
            what: "projected gradient",
            iterations: 10_000,
            residual: res,
        })
    }
}

/// How an e-variable was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ConvexGrow,
    SurroundMixture,
    ShtarkovNml,
}

/// A nonnegative statistic of the sample mean, held through its logarithm.
#[derive(Clone)]
pub struct EVariable {
    log_value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    /// Worst-case expected log value over the alternative, nats.
    pub grow_value: Option<f64>,
    /// The same quantity computed along an independent route, when available.
    pub grow_value_alt: Option<f64>,
    pub provenance: Provenance,
    pub family: FamilySpec,
    pub n: u64,
    /// Peaks and kinks of the statistic, used by quadrature.
    pub landmarks: Landmarks,
}

impl fmt::Debug for EVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EVariable")
            .field("grow_value", &self.grow_value)
            .field("grow_value_alt", &self.grow_value_alt)
            .field("provenance", &self.provenance)
            .field("family", &self.family.name())
            .field("n", &self.n)
            .finish()
    }
}

/// `E_{P0}[S]` together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullMass {
    pub value: f64,
    pub se: f64,
    pub kind: OracleKind,
}

impl EVariable {
    pub fn new<F>(log_value: F, provenance: Provenance, family: FamilySpec, n: u64, landmarks: Landmarks) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            log_value: Arc::new(log_value),
            grow_value: None,
            grow_value_alt: None,
            provenance,
            family,
            n,
            landmarks,
        }
    }

    pub fn log_value(&self, y: &[f64]) -> f64 {
        (self.log_value)(y)
    }

    /// `E_{P_mu}[log S]`.
    pub fn expected_log_value(&self, mu: &[f64]) -> Result<f64> {
        self.family
            .expect(mu, self.n, |y| self.log_value(y), &self.landmarks)
    }

    /// `E_{P0}[S]`: exact sum for discrete families, quadrature for
    /// continuous ones in up to two dimensions, Monte Carlo beyond.
    pub fn null_mass(&self, mc: &SampleConfig) -> Result<NullMass> {
        let fam = &self.family;
        if fam.is_discrete() {
            let e = fam.enumerate_covering(self.n, &self.landmarks.points)?;
            let terms: Vec<f64> = e.iter().map(|(y, lp)| lp + self.log_value(y)).collect();
            return Ok(NullMass {
                value: log_sum_exp(&terms).exp(),
                se: 0.0,
                kind: OracleKind::Exact,
            });
        }
        if fam.dim() <= 2 {
            let v = fam.null_expectation_scaled(self.n, |y| (self.log_value(y), 1.0), &self.landmarks)?;
            return Ok(NullMass {
                value: v,
                se: 0.0,
                kind: OracleKind::Quadrature,
            });
        }
        let cfg = SampleConfig::new(self.n, mc.seed, mc.mc_samples);
        let zero = vec![0.0; fam.dim()];
        let (value, se) = replication_moments(fam, &zero, &cfg, |y| self.log_value(y).exp())?;
        Ok(NullMass {
            value,
            se,
            kind: OracleKind::MonteCarlo,
        })
    }
}

/// The GROW e-variable `p_mu* / p_0` against a convex mean set.
pub fn grow_convex(fam: &FamilySpec, set: &MeanSet, n: u64) -> Result<EVariable> {
    let proj = info_project_convex(fam, set)?;
    let theta = proj.theta_star.clone();
    let a = fam.log_partition(&theta);
    let nf = n as f64;
    let mut e = EVariable::new(
        move |y| nf * (dot(&theta, y) - a),
        Provenance::ConvexGrow,
        fam.clone(),
        n,
        Landmarks {
            points: vec![proj.mu_star.clone()],
            ..Landmarks::default()
        },
    );
    e.grow_value = Some(fam.kl(&proj.mu_star, n)?);
    Ok(e)
}

/// `D(P_mu||P0) - D(P_mu||P_mu*) - D(P_mu*||P0)` for each probe (single observation).
pub fn pythagorean_residuals(fam: &FamilySpec, set: &MeanSet, probes: &[Vec<f64>]) -> Result<Vec<f64>> {
    let proj = info_project_convex(fam, set)?;
    probes
        .iter()
        .map(|mu| {
            Ok(fam.kl(mu, 1)? - fam.divergence(mu, &proj.mu_star, 1)? - proj.divergence)
        })
        .collect()
}

/// Seeded probes drawn uniformly from `set` intersected with a box of half
/// width `window` around the projection point, by rejection.
pub fn convex_probes(fam: &FamilySpec, set: &MeanSet, count: usize, window: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    use rand::{Rng, SeedableRng};
    let proj = info_project_convex(fam, set)?;
    let member = set.membership(fam)?;
    let space = fam.mean_space();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * count.max(1) {
            return Err(Error::InfeasibleSet(format!("could not draw probes from {set}")));
        }
        let p: Vec<f64> = proj
            .mu_star
            .iter()
            .map(|m| m + window * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        if member.contains(&p) && space.contains_interior(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::bernoulli_mean;

    #[test]
    fn gaussian_half_space() {
        let g = FamilySpec::gaussian(2).unwrap();
        let set = MeanSet::HalfSpace { v: vec![1.0, 0.0], a: 2.0 };
        let p = info_project_convex(&g, &set).unwrap();
        assert!((p.mu_star[0] - 2.0).abs() < 1e-12 && p.mu_star[1].abs() < 1e-12);
        let e = grow_convex(&g, &set, 1).unwrap();
        assert!((e.grow_value.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn oblique_half_space_matches_euclidean_projection() {
        let g = FamilySpec::gaussian(2).unwrap();
        let set = MeanSet::HalfSpace { v: vec![3.0, 4.0], a: 5.0 };
        let p = info_project_convex(&g, &set).unwrap();
        assert!((p.mu_star[0] - 0.6).abs() < 1e-12 && (p.mu_star[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn interval_projection_and_errors() {
        let g = FamilySpec::gaussian(1).unwrap();
        let p = info_project_convex(&g, &MeanSet::Interval { lo: Some(1.0), hi: None }).unwrap();
        assert_eq!(p.mu_star, vec![1.0]);
        let e = info_project_convex(&g, &MeanSet::Interval { lo: Some(-1.0), hi: None }).unwrap_err();
        assert!(matches!(e, Error::Degenerate(_)));
        let b = FamilySpec::scaled_bernoulli(0.3).unwrap();
        let e = info_project_convex(&b, &MeanSet::Interval { lo: Some(4.0), hi: None }).unwrap_err();
        assert!(matches!(e, Error::InfeasibleSet(_)));
        let c = bernoulli_mean(0.3, 0.5);
        let p = info_project_convex(&b, &MeanSet::Interval { lo: Some(c), hi: None }).unwrap();
        assert_eq!(p.mu_star, vec![c]);
    }

    #[test]
    fn polytope_corner() {
        let g = FamilySpec::gaussian(2).unwrap();
        let set = MeanSet::Polytope {
            normals: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            offsets: vec![1.0, 2.0],
        };
        let p = info_project_convex(&g, &set).unwrap();
        assert!((p.mu_star[0] - 1.0).abs() < 1e-10 && (p.mu_star[1] - 2.0).abs() < 1e-10);
        assert!(p.stationarity < 1e-8);
    }

    #[test]
    fn pythagoras_is_tight_for_gaussian_half_space() {
        let g = FamilySpec::gaussian(2).unwrap();
        let set = MeanSet::HalfSpace { v: vec![1.0, 0.0], a: 2.0 };
        let r = pythagorean_residuals(&g, &set, &[vec![2.0, 3.0], vec![2.0, 0.0]]).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn membership_boundaries_count_inside() {
        let g = FamilySpec::gaussian(1).unwrap();
        let m = MeanSet::KlBallComplement { d1: 0.5 }.membership(&g).unwrap();
        assert!(m.contains(&[1.0]) && m.contains(&[-1.0]) && !m.contains(&[0.99]));
        let r = MeanSet::Radial {
            boundary: RadialBoundary::Ellipse { semi_axes: [2.0, 1.0] },
        };
        let g2 = FamilySpec::gaussian(2).unwrap();
        let m = r.membership(&g2).unwrap();
        assert!(m.contains(&[2.0, 0.0]) && !m.contains(&[1.9, 0.0]) && m.contains(&[0.0, 1.0]));
        assert!(!m.contains(&[0.0, 0.0]));
    }

    #[test]
    fn convex_grow_is_normalized() {
        let g = FamilySpec::gaussian(1).unwrap();
        let e = grow_convex(&g, &MeanSet::Interval { lo: Some(1.0), hi: None }, 3).unwrap();
        let m = e.null_mass(&SampleConfig::new(3, 0, 1)).unwrap();
        assert!((m.value - 1.0).abs() < 1e-9);
        let b = FamilySpec::scaled_bernoulli(0.3).unwrap();
        let e = grow_convex(&b, &MeanSet::Interval { lo: Some(0.5), hi: None }, 12).unwrap();
        let m = e.null_mass(&SampleConfig::new(12, 0, 1)).unwrap();
        assert!((m.value - 1.0).abs() < 1e-12);
    }
}
