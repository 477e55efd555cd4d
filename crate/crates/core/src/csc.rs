//! Concentration bounds for the sample mean landing in a convex mean set,
//! and the oracles that check them.

use crate::error::{Error, Result};
use crate::expfam::{count_replications, FamilySpec, SampleConfig};
use crate::numeric::log_sum_exp;
use crate::numeric::quad::{integrate, QuadOptions};
use crate::projection::{info_project_convex, MeanSet};
use crate::report::{BoundReport, Oracle, OracleKind};

/// `P0(Y in M1) <= exp(-n kl(mu*, 1))` for convex `M1`.
pub fn csc_convex_bound(fam: &FamilySpec, set: &MeanSet, n: u64) -> Result<BoundReport> {
    let proj = info_project_convex(fam, set)?;
    let d_lower = n as f64 * proj.divergence;
    let mut r = BoundReport::new(fam.name(), fam.dim(), set.to_string(), n, d_lower, 0.0);
    r.mu_star = Some(proj.mu_star);
    r.extras.insert("stationarity".into(), proj.stationarity);
    Ok(r)
}

/// `P0(Y in M1)` for the sample mean of `n` observations: exact for discrete
/// families, Monte Carlo with `cfg.mc_samples` draws otherwise.
pub fn oracle_prob(fam: &FamilySpec, set: &MeanSet, n: u64, cfg: &SampleConfig) -> Result<Oracle> {
    let member = set.membership(fam)?;
    event_prob(fam, n, cfg, |y| member.contains(y))
}

/// Null probability of an arbitrary event of the sample mean.
pub fn event_prob<E>(fam: &FamilySpec, n: u64, cfg: &SampleConfig, event: E) -> Result<Oracle>
where
    E: Fn(&[f64]) -> bool + Sync,
{
    if fam.is_discrete() {
        let e = fam.enumerate_outcomes(n)?;
        let hits: Vec<f64> = e.iter().filter(|(y, _)| event(y)).map(|(_, lp)| lp).collect();
        return Ok(Oracle {
            prob: log_sum_exp(&hits).exp(),
            se: 0.0,
            kind: OracleKind::Exact,
        });
    }
    if cfg.mc_samples == 0 {
        return Err(Error::InvalidArgument("Monte Carlo oracle needs mc_samples >= 1".into()));
    }
    let run = SampleConfig::new(n, cfg.seed, cfg.mc_samples);
    let zero = vec![0.0; fam.dim()];
    let hits = count_replications(fam, &zero, &run, event)?;
    let m = cfg.mc_samples as f64;
    let p = hits as f64 / m;
    Ok(Oracle {
        prob: p,
        se: (p * (1.0 - p) / m).sqrt(),
        kind: OracleKind::MonteCarlo,
    })
}

/// Convex bound with its oracle attached.
pub fn csc_convex_checked(fam: &FamilySpec, set: &MeanSet, cfg: &SampleConfig) -> Result<BoundReport> {
    let mut r = csc_convex_bound(fam, set, cfg.n)?;
    r.oracle = Some(oracle_prob(fam, set, cfg.n, cfg)?);
    Ok(r)
}

/// Outcome of checking the one-dimensional maximum-likelihood-ratio bound.
#[derive(Debug, Clone, PartialEq)]
pub struct MleBoundCheck {
    pub divergence: f64,
    pub sign: i8,
    pub n: u64,
    pub mu_star: f64,
    /// `P0(sup_mu p_mu(Y)/p0(Y) >= e^D, sgn(Y) = sign)`.
    pub sup_event: Oracle,
    /// `P0(p_mu*(Y)/p0(Y) >= e^D)`.
    pub fixed_event: Oracle,
    /// `e^{-D}`.
    pub bound: f64,
    /// Outcomes (or replications) on which the two events disagree.
    pub disagreements: u64,
}

impl MleBoundCheck {
    pub fn is_valid(&self) -> bool {
        let slack = |o: &Oracle| match o.kind {
            OracleKind::MonteCarlo => crate::report::MC_SLACK_SE * o.se,
            _ => 1e-12,
        };
        self.disagreements == 0
            && self.sup_event.prob <= self.bound + slack(&self.sup_event)
            && self.fixed_event.prob <= self.bound + slack(&self.fixed_event)
    }
}

/// Compares the event that the maximized likelihood ratio on one side of 0
/// exceeds `e^D` with the event that the ratio at the single mean `mu*`
/// (with `kl(mu*, n) = D`) does, and bounds both by `e^{-D}`.
pub fn mle_bound_check_1d(fam: &FamilySpec, divergence: f64, sign: i8, n: u64, cfg: &SampleConfig) -> Result<MleBoundCheck> {
    if fam.dim() != 1 {
        return Err(Error::UnsupportedDimension(fam.dim()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let s = if sign >= 0 { 1.0 } else { -1.0 };
    let mut mu_star = fam.mean_at_divergence(divergence / n as f64, sign)?;
    if fam.is_discrete() {
        // Bisection lands within 1e-12 of the root; when an outcome is the
        // root itself, use it so both events see identical arithmetic.
        let e = fam.enumerate_outcomes(n)?;
        for (y, _) in e.iter() {
            if (y[0] - mu_star).abs() <= 1e-9 * (1.0 + mu_star.abs())
                && fam.mean_space().contains_interior(y)
                && fam.kl(y, n)? == divergence
            {
                mu_star = y[0];
            }
        }
    }
    let theta = fam.natural_of_mean(&[mu_star])?;
    let sup_event = |y: &[f64]| s * y[0] > 0.0 && fam.sup_log_ratio(y, n).is_ok_and(|v| v >= divergence);
    let fixed_event = |y: &[f64]| fam.log_ratio_natural(&theta, y, n) >= divergence;
    let sup_p = event_prob(fam, n, cfg, sup_event)?;
    let fixed_p = event_prob(fam, n, cfg, fixed_event)?;
    let disagreements = if fam.is_discrete() {
        fam.enumerate_outcomes(n)?
            .iter()
            .filter(|(y, _)| sup_event(y) != fixed_event(y))
            .count() as u64
    } else {
        let run = SampleConfig::new(n, cfg.seed, cfg.mc_samples);
        count_replications(fam, &[0.0], &run, |y| sup_event(y) != fixed_event(y))?
    };
    Ok(MleBoundCheck {
        divergence,
        sign: s as i8,
        n,
        mu_star,
        sup_event: sup_p,
        fixed_event: fixed_p,
        bound: (-divergence).exp(),
        disagreements,
    })
}

/// `E_{P0}[S']` for `S' = sup_{mu in M1} p_mu(Y)/p0(Y)` with a convex
/// one-dimensional `M1`. Exact for discrete families; for continuous ones the
/// integral is taken over a window twelve null standard errors beyond the
/// projection point, which gives a lower bound (it may be infinite).
pub fn naive_sup_ratio_mass(fam: &FamilySpec, set: &MeanSet, n: u64) -> Result<f64> {
    if fam.dim() != 1 {
        return Err(Error::UnsupportedDimension(fam.dim()));
    }
    let proj = info_project_convex(fam, set)?;
    let (lo, hi) = match set {
        MeanSet::Interval { lo, hi } => (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY)),
        MeanSet::HalfSpace { v, a } => {
            if v[0] > 0.0 {
                (a / v[0], f64::INFINITY)
            } else {
                (f64::NEG_INFINITY, a / v[0])
            }
        }
        _ => return Err(Error::InvalidMeanSet(format!("{set} is not a one-dimensional convex set"))),
    };
    let space = fam.mean_space();
    // The ratio is concave in the natural parameter, so the constrained
    // maximizer is the outcome clipped to the set.
    let log_sup = |y: f64| -> Result<f64> {
        let c = y.clamp(lo, hi);
        if c == y {
            fam.sup_log_ratio(&[y], n)
        } else if space.contains_interior(&[c]) {
            fam.log_density_ratio(&[c], &[y], n)
        } else {
            Err(Error::MeanOutOfRange {
                family: fam.name().to_string(),
                mean: vec![c],
            })
        }
    };
    if fam.is_discrete() {
        let e = fam.enumerate_outcomes(n)?;
        let mut terms = Vec::with_capacity(e.len());
        for (y, lp) in e.iter() {
            terms.push(lp + log_sup(y[0])?);
        }
        return Ok(log_sum_exp(&terms).exp());
    }
    let sd = fam.null_scale() / (n as f64).sqrt();
    let w = proj.mu_star[0].abs() + 12.0 * sd;
    let mut failure = None;
    let mut cuts = vec![-w];
    cuts.extend([lo, hi].into_iter().filter(|c| c.abs() < w));
    cuts.push(w);
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let r = integrate(
            |y| match log_sup(y) {
                Ok(l) => (fam.log_null_density(&[y], n).unwrap() + l).exp(),
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            },
            seg[0],
            seg[1],
            &QuadOptions::default(),
        )?;
        total += r.value;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::bernoulli_mean;

    #[test]
    fn gaussian_interval_bound() {
        let g = FamilySpec::gaussian(1).unwrap();
        let r = csc_convex_bound(&g, &MeanSet::Interval { lo: Some(1.0), hi: None }, 1).unwrap();
        assert!((r.bound - (-0.5f64).exp()).abs() < 1e-14);
        assert_eq!(r.regret, 0.0);
    }

    #[test]
    fn bernoulli_tail_below_bound() {
        let p = 0.3;
        let b = FamilySpec::scaled_bernoulli(p).unwrap();
        let set = MeanSet::Interval {
            lo: Some(bernoulli_mean(p, 0.5)),
            hi: None,
        };
        let r = csc_convex_checked(&b, &set, &SampleConfig::new(30, 0, 1)).unwrap();
        let o = r.oracle.unwrap();
        assert_eq!(o.kind, OracleKind::Exact);
        assert!(o.prob < r.bound && r.is_valid());
        assert!((r.bound - 0.0732).abs() < 1e-3);
    }

    #[test]
    fn mle_events_coincide_for_bernoulli() {
        let p = 0.3;
        let b = FamilySpec::scaled_bernoulli(p).unwrap();
        let d = b.kl(&[bernoulli_mean(p, 0.5)], 30).unwrap();
        let c = mle_bound_check_1d(&b, d, 1, 30, &SampleConfig::new(30, 0, 1)).unwrap();
        assert_eq!(c.disagreements, 0);
        assert_eq!(c.sup_event.prob, c.fixed_event.prob);
        assert!(c.is_valid());
        assert_eq!(c.mu_star, bernoulli_mean(p, 0.5));
    }

    #[test]
    fn naive_sup_ratio_is_not_an_e_variable() {
        let b = FamilySpec::scaled_bernoulli(0.3).unwrap();
        let set = MeanSet::Interval { lo: Some(0.5), hi: None };
        assert!(naive_sup_ratio_mass(&b, &set, 10).unwrap() >= 1.0);
        let g = FamilySpec::gaussian(1).unwrap();
        let set = MeanSet::Interval { lo: Some(1.0), hi: None };
        assert!(naive_sup_ratio_mass(&g, &set, 4).unwrap() >= 1.0);
    }
}
