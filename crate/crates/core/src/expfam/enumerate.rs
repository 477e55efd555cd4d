//! Exact enumeration of the null distribution of the sample mean.

use super::{bernoulli_mean, FamilyKind, FamilySpec, POISSON_TAIL_MASS};
use crate::error::{Error, Result};
use crate::numeric::{ln_factorials, log_sum_exp};

/// Outcomes of the sample mean of `n` observations with their null log
/// probabilities. Points are stored flattened, `dim` coordinates each.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub dim: usize,
    pub points: Vec<f64>,
    pub log_probs: Vec<f64>,
    /// Largest total count kept when an infinite support was cut off.
    pub truncated_at: Option<u64>,
    /// Null mass discarded by the cutoff (renormalized away).
    pub discarded_mass: f64,
}

impl Enumeration {
    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks(self.dim).zip(self.log_probs.iter().copied())
    }
}

fn binomial_count(n: u64, k: u64) -> u128 {
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.saturating_mul(n - i) / (i + 1);
    }
    c
}

impl FamilySpec {
    /// All outcomes of the sample mean of `n` observations. Fails for
    /// continuous families and when the outcome count exceeds the cap.
    pub fn enumerate_outcomes(&self, n: u64) -> Result<Enumeration> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be positive".into()));
        }
        match &self.kind {
            FamilyKind::GaussianLocation { .. } => Err(Error::NotDiscrete(self.name.clone())),
            FamilyKind::ScaledBernoulli { p } => self.enumerate_bernoulli(*p, n),
            FamilyKind::Poisson { rate } => self.enumerate_poisson(*rate, n, 0.0),
            FamilyKind::Finite { atoms, weights } => self.enumerate_finite(atoms, weights, n),
        }
    }

    /// Like [`enumerate_outcomes`](Self::enumerate_outcomes), but an infinite
    /// support is cut off only once the tail is negligible under the null and
    /// under every `P_mu` with `mu` in `means` too, so sums of tilted
    /// integrands stay accurate.
    pub fn enumerate_covering(&self, n: u64, means: &[Vec<f64>]) -> Result<Enumeration> {
        let FamilyKind::Poisson { rate } = &self.kind else {
            return self.enumerate_outcomes(n);
        };
        let mut tilt: f64 = 0.0;
        for mu in means {
            if self.mean_space().contains_interior(mu) {
                tilt = tilt.max(self.natural_of_mean(mu)?[0]);
            }
        }
        self.enumerate_poisson(*rate, n, tilt)
    }

    fn check_cap(&self, needed: u128) -> Result<()> {
        if needed > self.enumeration_cap as u128 {
            return Err(Error::TooLarge {
                needed,
                cap: self.enumeration_cap,
            });
        }
        Ok(())
    }

    fn enumerate_bernoulli(&self, p: f64, n: u64) -> Result<Enumeration> {
        self.check_cap(n as u128 + 1)?;
        let lf = ln_factorials(n as usize);
        let nf = n as f64;
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        let mut points = Vec::with_capacity(n as usize + 1);
        let mut log_probs = Vec::with_capacity(n as usize + 1);
        for k in 0..=n as usize {
            points.push(bernoulli_mean(p, k as f64 / nf));
            let kf = k as f64;
            log_probs.push(lf[n as usize] - lf[k] - lf[n as usize - k] + kf * lp + (nf - kf) * lq);
        }
        Ok(Enumeration {
            dim: 1,
            points,
            log_probs,
            truncated_at: None,
            discarded_mass: 0.0,
        })
    }

    /// `tilt` is the largest natural parameter whose tilted distribution must
    /// also have a negligible tail.
    fn enumerate_poisson(&self, rate: f64, n: u64, tilt: f64) -> Result<Enumeration> {
        // Total count S ~ Poisson(n rate); the sample mean is S/n - rate.
        let lambda = n as f64 * rate;
        let lambda_t = lambda * tilt.exp();
        // Geometric bound on the Poisson(l) tail beyond s, given log pmf(s + 1).
        let tail_small = |next: f64, l: f64, s: u64| {
            let ratio = l / (s + 2) as f64;
            (s + 1) as f64 > l && ratio < 1.0 && next.exp() / (1.0 - ratio) < POISSON_TAIL_MASS
        };
        let mut log_probs = Vec::new();
        let mut lp = -lambda;
        let mut lp_t = -lambda_t;
        let mut s: u64 = 0;
        loop {
            log_probs.push(lp);
            self.check_cap(log_probs.len() as u128)?;
            let next = lp + lambda.ln() - ((s + 1) as f64).ln();
            let next_t = lp_t + lambda_t.ln() - ((s + 1) as f64).ln();
            if tail_small(next, lambda, s) && tail_small(next_t, lambda_t, s) {
                break;
            }
            lp = next;
            lp_t = next_t;
            s += 1;
        }
        let total = log_sum_exp(&log_probs);
        let discarded = -total.exp_m1();
        for v in &mut log_probs {
            *v -= total;
        }
        let nf = n as f64;
        let points = (0..log_probs.len()).map(|k| k as f64 / nf - rate).collect();
        Ok(Enumeration {
            dim: 1,
            points,
            log_probs,
            truncated_at: Some(s),
            discarded_mass: discarded.max(0.0),
        })
    }

    fn enumerate_finite(&self, atoms: &[f64], weights: &[f64], n: u64) -> Result<Enumeration> {
        let k = atoms.len() as u64;
        self.check_cap(binomial_count(n + k - 1, k - 1))?;
        let lf = ln_factorials(n as usize);
        let lw: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        let nf = n as f64;
        let mut points = Vec::new();
        let mut log_probs = Vec::new();
        let mut counts = vec![0usize; atoms.len()];
        fn rec(
            i: usize,
            left: usize,
            counts: &mut Vec<usize>,
            emit: &mut dyn FnMut(&[usize]),
        ) {
            if i + 1 == counts.len() {
                counts[i] = left;
                emit(counts);
                return;
            }
            for c in 0..=left {
                counts[i] = c;
                rec(i + 1, left - c, counts, emit);
            }
        }
        rec(0, n as usize, &mut counts, &mut |c: &[usize]| {
            let mut lp = lf[n as usize];
            let mut y = 0.0;
            for (j, &cj) in c.iter().enumerate() {
                lp += cj as f64 * lw[j] - lf[cj];
                y += cj as f64 * atoms[j];
            }
            points.push(y / nf);
            log_probs.push(lp);
        });
        Ok(Enumeration {
            dim: 1,
            points,
            log_probs,
            truncated_at: None,
            discarded_mass: 0.0,
        })
    }
}
