//! Normalized-maximum-likelihood e-variables for surrounding alternatives.
//!
//! The alternative is split into cells, each tied to a boundary point of the
//! complement. An estimator picks the cell for an outcome; the Shtarkov
//! normalizer of the plug-in likelihood is the minimax regret `mmreg`, and the
//! probability of landing in `M1` is at most `exp(mmreg - D_lower)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csc::oracle_prob;
use crate::error::{Error, Result};
use crate::expfam::{FamilyKind, FamilySpec, SampleConfig};
use crate::numeric::quad::{integrate_from, integrate_polar, integrate_to, Landmarks, QuadOptions};
use crate::numeric::roots::{bisect, golden_section_max};
use crate::numeric::{dot, least_squares_slope, lex_cmp, log_sum_exp, norm2};
use crate::projection::{info_project_convex, EVariable, MeanSet, Provenance, RadialBoundary};
use crate::report::BoundReport;
use crate::surround::surround_endpoints;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorKind {
    /// The boundary point on the ray from 0 through the outcome.
    #[serde(rename = "radial")]
    SelfConsistentRadial,
    /// The boundary point of highest likelihood, ties to the lexicographically largest.
    #[serde(rename = "mle")]
    BoundaryMle,
}

impl EstimatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::SelfConsistentRadial => "radial",
            EstimatorKind::BoundaryMle => "mle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionKind {
    /// `k` corners on the boundary at angles `2 pi i / k`; each cell is the
    /// part of the cone between consecutive corners beyond the facet joining them.
    FiniteCones { corners: usize },
    /// One cell per boundary point: the part of its ray inside `M1`.
    ContinuousRadial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub kind: PartitionKind,
    pub estimator: EstimatorKind,
}

impl PartitionSpec {
    pub fn cones(corners: usize, estimator: EstimatorKind) -> Self {
        Self {
            kind: PartitionKind::FiniteCones { corners },
            estimator,
        }
    }

    pub fn radial(estimator: EstimatorKind) -> Self {
        Self {
            kind: PartitionKind::ContinuousRadial,
            estimator,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            PartitionKind::FiniteCones { corners } => format!("cones(k={corners})"),
            PartitionKind::ContinuousRadial => "radial".to_string(),
        }
    }
}

/// A boundary point with its natural parameter and log partition.
#[derive(Debug, Clone, PartialEq)]
struct Anchor {
    mu: Vec<f64>,
    theta: Vec<f64>,
    log_z: f64,
}

impl Anchor {
    fn new(fam: &FamilySpec, mu: Vec<f64>) -> Result<Self> {
        let theta = fam.natural_of_mean(&mu)?;
        let log_z = fam.log_partition(&theta);
        Ok(Self { mu, theta, log_z })
    }

    fn log_ratio(&self, y: &[f64], n: u64) -> f64 {
        n as f64 * (dot(&self.theta, y) - self.log_z)
    }
}

/// Boundary of the complement in the plane, as a radius per direction.
#[derive(Debug, Clone, PartialEq)]
enum Curve {
    Circle(f64),
    Shape(RadialBoundary),
    /// Boundary of `{kl(mu, 1) < d1}` found by root-finding along each ray.
    KlLevel(f64),
}

#[derive(Debug, Clone)]
enum Geometry {
    /// Finitely many boundary points. `cell_angles` gives the corner angles
    /// of a cone partition in the plane; in one dimension the cells are the
    /// two half-lines.
    Points { anchors: Vec<Anchor>, cell_angles: Option<Vec<f64>> },
    Curve(Curve),
}

/// An NML construction resolved for one family, mean set, partition and sample size.
#[derive(Debug, Clone)]
pub struct Nml {
    fam: FamilySpec,
    set: MeanSet,
    partition: PartitionSpec,
    n: u64,
    geometry: Geometry,
    d_lower: f64,
    mmreg: f64,
}

impl Nml {
    /// In one dimension the partition kind is irrelevant: both cells are the
    /// half-lines beyond the two boundary points.
    pub fn new(fam: &FamilySpec, set: &MeanSet, partition: PartitionSpec, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be positive".into()));
        }
        if set.is_convex() {
            return Err(Error::InvalidMeanSet(format!("{set} is not a surrounding set")));
        }
        set.validate()?;
        let (geometry, d_lower) = match fam.dim() {
            1 => {
                let (lo, hi) = surround_endpoints(fam, set)?;
                let anchors = vec![Anchor::new(fam, vec![lo])?, Anchor::new(fam, vec![hi])?];
                let d = match set {
                    MeanSet::KlBallComplement { d1 } => *d1,
                    _ => fam.kl(&[lo], 1)?.min(fam.kl(&[hi], 1)?),
                };
                (
                    Geometry::Points {
                        anchors,
                        cell_angles: None,
                    },
                    n as f64 * d,
                )
            }
            2 => Self::planar(fam, set, partition, n)?,
            d => return Err(Error::UnsupportedDimension(d)),
        };
        let mut nml = Self {
            fam: fam.clone(),
            set: set.clone(),
            partition,
            n,
            geometry,
            d_lower,
            mmreg: f64::NAN,
        };
        nml.mmreg = nml.compute_log_normalizer()?;
        Ok(nml)
    }

    fn planar(fam: &FamilySpec, set: &MeanSet, partition: PartitionSpec, n: u64) -> Result<(Geometry, f64)> {
        let isotropic = matches!(fam.kind(), FamilyKind::GaussianLocation { .. });
        let curve = match set {
            MeanSet::KlBallComplement { d1 } if isotropic => Curve::Circle((2.0 * d1).sqrt()),
            MeanSet::KlBallComplement { d1 } => Curve::KlLevel(*d1),
            MeanSet::Radial {
                boundary: RadialBoundary::Sphere { radius },
            } => Curve::Circle(*radius),
            MeanSet::Radial { boundary } => Curve::Shape(boundary.clone()),
            _ => return Err(Error::InvalidMeanSet(format!("{set} is not a planar surrounding set"))),
        };
        let probe = Curve::point(&curve, fam, 0.0)?;
        if !fam.mean_space().contains_interior(&probe) {
            return Err(Error::NotNice(format!("boundary point {probe:?} is outside the mean space")));
        }
        match partition.kind {
            PartitionKind::FiniteCones { corners: k } => {
                if k < 3 {
                    return Err(Error::InvalidArgument(format!("cone partition needs at least 3 corners, got {k}")));
                }
                let angles: Vec<f64> = (0..k).map(|i| 2.0 * PI * i as f64 / k as f64).collect();
                let corners = angles
                    .iter()
                    .map(|a| curve.point(fam, *a))
                    .collect::<Result<Vec<_>>>()?;
                let mut anchors = Vec::with_capacity(k);
                let mut best = f64::INFINITY;
                for i in 0..k {
                    let cell = cone_cell(&corners[i], &corners[(i + 1) % k]);
                    let proj = info_project_convex(fam, &cell)?;
                    best = best.min(proj.divergence);
                    anchors.push(Anchor::new(fam, proj.mu_star)?);
                }
                Ok((
                    Geometry::Points {
                        anchors,
                        cell_angles: Some(angles),
                    },
                    n as f64 * best,
                ))
            }
            PartitionKind::ContinuousRadial => {
                let per_obs = match (&curve, set) {
                    (_, MeanSet::KlBallComplement { d1 }) => *d1,
                    (Curve::Circle(r), _) if isotropic => 0.5 * r * r,
                    _ => curve_min_kl(&curve, fam)?,
                };
                Ok((Geometry::Curve(curve), n as f64 * per_obs))
            }
        }
    }

    pub fn family(&self) -> &FamilySpec {
        &self.fam
    }

    pub fn mean_set(&self) -> &MeanSet {
        &self.set
    }

    pub fn partition(&self) -> PartitionSpec {
        self.partition
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `log` of the Shtarkov normalizer, nats.
    pub fn mmreg(&self) -> f64 {
        self.mmreg
    }

    /// `n` times the smallest per-observation divergence over the cell representatives.
    pub fn d_lower(&self) -> f64 {
        self.d_lower
    }

    /// Boundary points used by finite partitions (empty for continuous ones).
    pub fn anchors(&self) -> Vec<Vec<f64>> {
        match &self.geometry {
            Geometry::Points { anchors, .. } => anchors.iter().map(|a| a.mu.clone()).collect(),
            Geometry::Curve(_) => Vec::new(),
        }
    }

    /// The boundary point chosen for outcome `y` by the configured estimator.
    pub fn estimate_r(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.estimate_with(self.partition.estimator, y)
    }

    pub fn estimate_with(&self, est: EstimatorKind, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.fam.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.fam.dim(),
                got: y.len(),
            });
        }
        if est == EstimatorKind::SelfConsistentRadial && y.iter().all(|v| *v == 0.0) {
            return Err(Error::OriginRay);
        }
        match &self.geometry {
            Geometry::Points { anchors, cell_angles } => {
                Ok(anchors[self.pick_anchor(anchors, cell_angles.as_deref(), est, y)].mu.clone())
            }
            Geometry::Curve(c) => self.curve_estimate(c, est, y),
        }
    }

    fn pick_anchor(&self, anchors: &[Anchor], cell_angles: Option<&[f64]>, est: EstimatorKind, y: &[f64]) -> usize {
        let at_origin = y.iter().all(|v| *v == 0.0);
        if est == EstimatorKind::SelfConsistentRadial && !at_origin {
            return match cell_angles {
                None => usize::from(y[0] > 0.0),
                Some(angles) => {
                    let phi = y[1].atan2(y[0]).rem_euclid(2.0 * PI);
                    let k = angles.len();
                    angles.iter().rposition(|a| phi >= *a).unwrap_or(0).min(k - 1)
                }
            };
        }
        // Highest likelihood; near-ties go to the lexicographically largest point.
        let mut best = 0;
        let mut best_v = anchors[0].log_ratio(y, self.n);
        for (i, a) in anchors.iter().enumerate().skip(1) {
            let v = a.log_ratio(y, self.n);
            if (v - best_v).abs() <= 1e-12 * v.abs().max(1.0) {
                if lex_cmp(&a.mu, &anchors[best].mu).is_gt() {
                    best = i;
                    best_v = best_v.max(v);
                }
            } else if v > best_v {
                best = i;
                best_v = v;
            }
        }
        best
    }

    fn curve_estimate(&self, c: &Curve, est: EstimatorKind, y: &[f64]) -> Result<Vec<f64>> {
        let r = norm2(y);
        match (c, est) {
            // For an isotropic family on a circle the likelihood maximizer is
            // the radial point.
            (Curve::Circle(a), _) if self.isotropic() => {
                if r == 0.0 {
                    Ok(vec![*a, 0.0])
                } else {
                    Ok(vec![a * y[0] / r, a * y[1] / r])
                }
            }
            (_, EstimatorKind::SelfConsistentRadial) if r > 0.0 => c.point(&self.fam, y[1].atan2(y[0])),
            _ => self.curve_mle(c, y),
        }
    }

    fn isotropic(&self) -> bool {
        matches!(self.fam.kind(), FamilyKind::GaussianLocation { .. })
    }

    /// Likelihood maximizer over a boundary curve: grid over the angle, then
    /// golden-section refinement around the best grid point.
    fn curve_mle(&self, c: &Curve, y: &[f64]) -> Result<Vec<f64>> {
        const GRID: usize = 128;
        let score = |phi: f64| -> Result<f64> {
            let p = c.point(&self.fam, phi)?;
            self.fam.log_density_ratio(&p, y, self.n)
        };
        let step = 2.0 * PI / GRID as f64;
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..GRID {
            let phi = i as f64 * step;
            let v = score(phi)?;
            if v > best.1 {
                best = (phi, v);
            }
        }
        let (phi, v) = golden_section_max(score, best.0 - step, best.0 + step, 1e-10)?;
        let phi = if v >= best.1 { phi } else { best.0 };
        // Collect every grid direction tied with the maximum for the tie-break.
        let winner = c.point(&self.fam, phi)?;
        let top = v.max(best.1);
        let mut chosen = winner;
        for i in 0..GRID {
            let p = c.point(&self.fam, i as f64 * step)?;
            let s = self.fam.log_density_ratio(&p, y, self.n)?;
            if (s - top).abs() <= 1e-12 * top.abs().max(1.0) && lex_cmp(&p, &chosen).is_gt() {
                chosen = p;
            }
        }
        Ok(chosen)
    }

    /// `log p_r(y) / p0(y)` at the estimator's boundary point; at the origin
    /// the radial estimator is replaced by the likelihood maximizer.
    fn plug_in_log_ratio(&self, est: EstimatorKind, y: &[f64]) -> Result<f64> {
        let est = if y.iter().all(|v| *v == 0.0) {
            EstimatorKind::BoundaryMle
        } else {
            est
        };
        match &self.geometry {
            Geometry::Points { anchors, cell_angles } => {
                Ok(anchors[self.pick_anchor(anchors, cell_angles.as_deref(), est, y)].log_ratio(y, self.n))
            }
            Geometry::Curve(c) => {
                let r = self.curve_estimate(c, est, y)?;
                self.fam.log_density_ratio(&r, y, self.n)
            }
        }
    }

    fn compute_log_normalizer(&self) -> Result<f64> {
        let est = self.partition.estimator;
        if self.fam.is_discrete() {
            let e = self.fam.enumerate_covering(self.n, &self.anchors())?;
            let mut terms = Vec::with_capacity(e.len());
            for (y, lp) in e.iter() {
                terms.push(lp + self.plug_in_log_ratio(est, y)?);
            }
            return Ok(log_sum_exp(&terms));
        }
        let sd = self.fam.null_scale() / (self.n as f64).sqrt();
        let opts = QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            ..QuadOptions::default()
        };
        match (&self.geometry, self.fam.dim()) {
            (Geometry::Points { anchors, .. }, 1) => {
                // Each piece is a tail probability of one member.
                let (lo, hi) = (&anchors[0], &anchors[1]);
                let split = match est {
                    EstimatorKind::SelfConsistentRadial => 0.0,
                    EstimatorKind::BoundaryMle => (hi.log_z - lo.log_z) / (hi.theta[0] - lo.theta[0]),
                };
                let dens = |a: &Anchor, y: f64| {
                    (self.fam.log_null_density(&[y], self.n).unwrap() + a.log_ratio(&[y], self.n)).exp()
                };
                let left = integrate_to(|y| dens(lo, y), split, &[lo.mu[0]], sd, &opts)?;
                let right = integrate_from(|y| dens(hi, y), split, &[hi.mu[0]], sd, &opts)?;
                Ok((left.value + right.value).ln())
            }
            (geometry, 2) => {
                let mut marks = Landmarks::default();
                if let Geometry::Points { anchors, cell_angles } = geometry {
                    marks.points = anchors.iter().map(|a| a.mu.clone()).collect();
                    marks.angles = cell_angles.clone().unwrap_or_default();
                    marks.angles.extend(anchors.iter().map(|a| a.mu[1].atan2(a.mu[0])));
                }
                let curve = match geometry {
                    Geometry::Curve(c) => Some(c),
                    _ => None,
                };
                let mut failure = None;
                let g = |y: &[f64]| match self.plug_in_log_ratio(est, y) {
                    Ok(l) => (self.fam.log_null_density(y, self.n).unwrap() + l).exp(),
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                };
                let failure_cell = std::cell::RefCell::new(None);
                let breaks = |phi: f64| match curve {
                    Some(c) => match c.radius(&self.fam, phi) {
                        Ok(r) => vec![r],
                        Err(e) => {
                            failure_cell.borrow_mut().get_or_insert(e);
                            Vec::new()
                        }
                    },
                    None => Vec::new(),
                };
                let outer = QuadOptions {
                    abs_tol: 1e-10,
                    rel_tol: 1e-10,
                    ..QuadOptions::default()
                };
                let g = std::cell::RefCell::new(g);
                let r = integrate_polar(|y| (g.borrow_mut())(y), breaks, &marks, sd, &opts, &outer)?;
                drop(g);
                if let Some(e) = failure.or(failure_cell.into_inner()) {
                    return Err(e);
                }
                Ok(r.value.ln())
            }
            (_, d) => Err(Error::UnsupportedDimension(d)),
        }
    }

    /// The NML e-variable `q_shtarkov(Y) / p0(Y)`.
    pub fn evariable(&self) -> EVariable {
        let me = self.clone();
        let marks = self.landmarks();
        EVariable::new(
            move |y| me.plug_in_log_ratio(me.partition.estimator, y).unwrap_or(f64::NAN) - me.mmreg,
            Provenance::ShtarkovNml,
            self.fam.clone(),
            self.n,
            marks,
        )
    }

    fn landmarks(&self) -> Landmarks {
        match &self.geometry {
            Geometry::Points { anchors, cell_angles } => Landmarks {
                points: anchors.iter().map(|a| a.mu.clone()).collect(),
                angles: cell_angles.clone().unwrap_or_default(),
                radii: Vec::new(),
            },
            Geometry::Curve(Curve::Circle(a)) => Landmarks {
                radii: vec![*a],
                ..Landmarks::default()
            },
            Geometry::Curve(Curve::Shape(RadialBoundary::Ellipse { semi_axes })) => Landmarks {
                radii: semi_axes.to_vec(),
                ..Landmarks::default()
            },
            Geometry::Curve(_) => Landmarks::default(),
        }
    }

    /// `log p_r(y)(y) - log q(y)` where `log_q_ratio` is `log q/p0` and `r`
    /// comes from estimator `est`.
    pub fn regret(&self, est: EstimatorKind, log_q_ratio: impl Fn(&[f64]) -> f64, y: &[f64]) -> Result<f64> {
        Ok(self.plug_in_log_ratio(est, y)? - log_q_ratio(y))
    }

    /// Concentration bound `P0(Y in M1) <= exp(mmreg - D_lower)`.
    pub fn bound_report(&self) -> BoundReport {
        let mut r = BoundReport::new(
            self.fam.name(),
            self.fam.dim(),
            self.set.to_string(),
            self.n,
            self.d_lower,
            self.mmreg,
        );
        r.partition = Some(self.partition.label());
        r.estimator = Some(self.partition.estimator.label().to_string());
        if let Geometry::Points { anchors, .. } = &self.geometry {
            if let Some(a) = anchors.iter().min_by(|a, b| {
                let ka = dot(&a.theta, &a.mu) - a.log_z;
                let kb = dot(&b.theta, &b.mu) - b.log_z;
                ka.partial_cmp(&kb).unwrap()
            }) {
                r.mu_star = Some(a.mu.clone());
            }
        }
        r
    }
}

impl Curve {
    fn radius(&self, fam: &FamilySpec, phi: f64) -> Result<f64> {
        let u = [phi.cos(), phi.sin()];
        match self {
            Curve::Circle(a) => Ok(*a),
            Curve::Shape(b) => Ok(b.radius(&u)),
            Curve::KlLevel(d1) => {
                let f = |t: f64| fam.kl(&[t * u[0], t * u[1]], 1).map(|k| k - d1);
                let mut hi = 1.0;
                while f(hi)? < 0.0 {
                    hi *= 2.0;
                    if hi > 1e12 {
                        return Err(Error::NotNice(format!("KL ball of radius {d1} is unbounded")));
                    }
                }
                bisect(f, 0.0, hi, 1e-13, 200)
            }
        }
    }

    fn point(&self, fam: &FamilySpec, phi: f64) -> Result<Vec<f64>> {
        let r = self.radius(fam, phi)?;
        Ok(vec![r * phi.cos(), r * phi.sin()])
    }
}

fn curve_min_kl(c: &Curve, fam: &FamilySpec) -> Result<f64> {
    const GRID: usize = 720;
    let kl_at = |phi: f64| -> Result<f64> { fam.kl(&c.point(fam, phi)?, 1) };
    let step = 2.0 * PI / GRID as f64;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..GRID {
        let phi = i as f64 * step;
        let v = kl_at(phi)?;
        if v < best.1 {
            best = (phi, v);
        }
    }
    let (_, v) = golden_section_max(|p| kl_at(p).map(|k| -k), best.0 - step, best.0 + step, 1e-10)?;
    Ok((-v).min(best.1))
}

/// Cell between corners `c0` and `c1` (counterclockwise): the cone they span
/// intersected with the half-plane beyond the facet joining them.
fn cone_cell(c0: &[f64], c1: &[f64]) -> MeanSet {
    let edge = [c1[0] - c0[0], c1[1] - c0[1]];
    let mut normal = vec![edge[1], -edge[0]];
    if dot(&normal, c0) < 0.0 {
        normal = vec![-normal[0], -normal[1]];
    }
    let offset = dot(&normal, c0);
    MeanSet::Polytope {
        normals: vec![normal, vec![-c0[1], c0[0]], vec![c1[1], -c1[0]]],
        offsets: vec![offset, 0.0, 0.0],
    }
}

/// `mmreg` for the bare normalizer of an NML construction.
pub fn log_shtarkov_normalizer(fam: &FamilySpec, partition: PartitionSpec, set: &MeanSet, n: u64) -> Result<f64> {
    Ok(Nml::new(fam, set, partition, n)?.mmreg())
}

/// Log Shtarkov normalizer for likelihood maximization over an arbitrary
/// finite set of means in one dimension (exact for discrete families).
pub fn log_normalizer_of_points(fam: &FamilySpec, points: &[f64], n: u64) -> Result<f64> {
    if fam.dim() != 1 || points.is_empty() {
        return Err(Error::InvalidArgument("need a one-dimensional family and at least one point".into()));
    }
    let anchors = points
        .iter()
        .map(|p| Anchor::new(fam, vec![*p]))
        .collect::<Result<Vec<_>>>()?;
    let best = |y: f64| {
        anchors
            .iter()
            .map(|a| a.log_ratio(&[y], n))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    if fam.is_discrete() {
        let means: Vec<Vec<f64>> = points.iter().map(|p| vec![*p]).collect();
        let e = fam.enumerate_covering(n, &means)?;
        let terms: Vec<f64> = e.iter().map(|(y, lp)| lp + best(y[0])).collect();
        return Ok(log_sum_exp(&terms));
    }
    // The envelope of the log ratios is piecewise linear; split at every crossing.
    let mut breaks: Vec<f64> = points.to_vec();
    for i in 0..anchors.len() {
        for j in i + 1..anchors.len() {
            let dt = anchors[j].theta[0] - anchors[i].theta[0];
            if dt != 0.0 {
                breaks.push((anchors[j].log_z - anchors[i].log_z) / dt);
            }
        }
    }
    let sd = fam.null_scale() / (n as f64).sqrt();
    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        ..QuadOptions::default()
    };
    let r = crate::numeric::quad::integrate_line(
        |y| (fam.log_null_density(&[y], n).unwrap() + best(y)).exp(),
        &breaks,
        sd,
        &opts,
    )?;
    Ok(r.value.ln())
}

/// NML e-variable for a surrounding set.
pub fn nml_evariable(fam: &FamilySpec, partition: PartitionSpec, set: &MeanSet, n: u64) -> Result<EVariable> {
    let nml = Nml::new(fam, set, partition, n)?;
    let mut e = nml.evariable();
    e.grow_value = Some(nml.d_lower() - nml.mmreg());
    Ok(e)
}

/// Surrounding bound without an oracle.
pub fn csc_surround_bound(fam: &FamilySpec, set: &MeanSet, partition: PartitionSpec, n: u64) -> Result<BoundReport> {
    Ok(Nml::new(fam, set, partition, n)?.bound_report())
}

/// Surrounding bound with its oracle probability attached.
pub fn csc_surround_checked(fam: &FamilySpec, set: &MeanSet, partition: PartitionSpec, cfg: &SampleConfig) -> Result<BoundReport> {
    let mut r = csc_surround_bound(fam, set, partition, cfg.n)?;
    r.oracle = Some(oracle_prob(fam, set, cfg.n, cfg)?);
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub n: u64,
    pub mmreg: f64,
    pub d_lower: f64,
    pub log_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretScan {
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `mmreg` against `log n`.
    pub slope: f64,
    pub intercept: f64,
}

/// `mmreg` for each sample size, evaluated in parallel, with the fitted
/// growth rate in `log n`.
pub fn regret_scan(fam: &FamilySpec, set: &MeanSet, partition: PartitionSpec, n_list: &[u64]) -> Result<RegretScan> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::InvalidArgument(
            "n_list needs at least two strictly increasing positive sizes".into(),
        ));
    }
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let nml = Nml::new(fam, set, partition, n)?;
            Ok(ScanRow {
                n,
                mmreg: nml.mmreg(),
                d_lower: nml.d_lower(),
                log_bound: nml.mmreg() - nml.d_lower(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mmreg).collect();
    let (slope, intercept) = least_squares_slope(&xs, &ys);
    Ok(RegretScan { rows, slope, intercept })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    pub n: u64,
    /// `n D1 - mmreg_n` with the likelihood-maximizing estimator.
    pub lower: f64,
    /// `n D1`.
    pub upper: f64,
    pub gap: f64,
}

/// Bracket on the best worst-case growth at sample size `n` against the
/// complement of a KL ball.
pub fn grow_sandwich(fam: &FamilySpec, set: &MeanSet, partition: PartitionSpec, n: u64) -> Result<Sandwich> {
    let MeanSet::KlBallComplement { d1 } = set else {
        return Err(Error::InvalidMeanSet(format!("{set} is not a KL-ball complement")));
    };
    let spec = PartitionSpec {
        estimator: EstimatorKind::BoundaryMle,
        ..partition
    };
    let nml = Nml::new(fam, set, spec, n)?;
    let upper = n as f64 * d1;
    Ok(Sandwich {
        n,
        lower: upper - nml.mmreg(),
        upper,
        gap: nml.mmreg(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionRow {
    /// `None` for the continuous radial partition.
    pub corners: Option<usize>,
    pub d_lower: f64,
    pub mmreg: f64,
    pub log_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionComparison {
    pub n: u64,
    pub rows: Vec<PartitionRow>,
    /// Whether the continuous partition gives the smallest bound.
    pub continuous_best: bool,
}

/// Cone partitions with each `k` in `k_list` against the continuous radial
/// partition, for the complement of a planar KL ball.
pub fn compare_partitions(
    fam: &FamilySpec,
    set: &MeanSet,
    k_list: &[usize],
    estimator: EstimatorKind,
    n: u64,
) -> Result<PartitionComparison> {
    if !matches!(set, MeanSet::KlBallComplement { .. }) {
        return Err(Error::InvalidMeanSet(format!("{set} is not a KL-ball complement")));
    }
    if fam.dim() != 2 {
        return Err(Error::UnsupportedDimension(fam.dim()));
    }
    let mut specs: Vec<(Option<usize>, PartitionSpec)> = k_list
        .iter()
        .map(|&k| (Some(k), PartitionSpec::cones(k, estimator)))
        .collect();
    specs.push((None, PartitionSpec::radial(estimator)));
    let rows = specs
        .par_iter()
        .map(|(k, spec)| {
            let nml = Nml::new(fam, set, *spec, n)?;
            Ok(PartitionRow {
                corners: *k,
                d_lower: nml.d_lower(),
                mmreg: nml.mmreg(),
                log_bound: nml.mmreg() - nml.d_lower(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cont = rows.last().unwrap().log_bound;
    let continuous_best = rows[..rows.len() - 1].iter().all(|r| cont < r.log_bound);
    Ok(PartitionComparison {
        n,
        rows,
        continuous_best,
    })
}
