//! Seeded sampling of sample means. Replications are drawn in fixed-size
//! chunks, each from its own ChaCha stream, so results do not depend on the
//! number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bernoulli_mean, bernoulli_success_fraction, FamilyKind, FamilySpec};
use crate::error::{Error, Result};

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub n: u64,
    pub seed: u64,
    pub mc_samples: u64,
}

impl SampleConfig {
    pub fn new(n: u64, seed: u64, mc_samples: u64) -> Self {
        Self { n, seed, mc_samples }
    }
}

enum Sampler {
    Gaussian { mu: Vec<f64>, sd: f64 },
    Bernoulli { p: f64, q: f64, n: u64 },
    Poisson { rate: f64, dist: Option<Poisson<f64>>, n: f64 },
    Finite { atoms: Vec<f64>, probs: Vec<f64>, n: u64 },
}

impl Sampler {
    fn new(fam: &FamilySpec, mu: &[f64], n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be positive".into()));
        }
        let theta = fam.natural_of_mean(mu)?;
        Ok(match &fam.kind {
            FamilyKind::GaussianLocation { .. } => Sampler::Gaussian {
                mu: mu.to_vec(),
                sd: 1.0 / (n as f64).sqrt(),
            },
            FamilyKind::ScaledBernoulli { p } => Sampler::Bernoulli {
                p: *p,
                q: bernoulli_success_fraction(*p, mu[0]).clamp(0.0, 1.0),
                n,
            },
            FamilyKind::Poisson { rate } => {
                let lambda = n as f64 * (rate + mu[0]);
                let dist = if lambda > 0.0 {
                    Some(Poisson::new(lambda).map_err(|e| Error::InvalidArgument(e.to_string()))?)
                } else {
                    None
                };
                Sampler::Poisson {
                    rate: *rate,
                    dist,
                    n: n as f64,
                }
            }
            FamilyKind::Finite { atoms, weights } => Sampler::Finite {
                atoms: atoms.clone(),
                probs: FamilySpec::tilted_weights(atoms, weights, theta[0]),
                n,
            },
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Sampler::Gaussian { mu, sd } => {
                for (o, m) in out.iter_mut().zip(mu) {
                    let z: f64 = StandardNormal.sample(rng);
                    *o = m + sd * z;
                }
            }
            Sampler::Bernoulli { p, q, n } => {
                let k = Binomial::new(*n, *q).expect("valid binomial").sample(rng);
                out[0] = bernoulli_mean(*p, k as f64 / *n as f64);
            }
            Sampler::Poisson { rate, dist, n } => {
                let s = dist.as_ref().map_or(0.0, |d| d.sample(rng));
                out[0] = s / n - rate;
            }
            Sampler::Finite { atoms, probs, n } => {
                // Multinomial via sequential conditional binomials.
                let mut left = *n;
                let mut rest = 1.0;
                let mut y = 0.0;
                for (i, (a, p)) in atoms.iter().zip(probs).enumerate() {
                    if left == 0 {
                        break;
                    }
                    let c = if i + 1 == atoms.len() {
                        left
                    } else {
                        let pr = (p / rest).clamp(0.0, 1.0);
                        Binomial::new(left, pr).expect("valid binomial").sample(rng)
                    };
                    y += c as f64 * a;
                    left -= c;
                    rest -= p;
                }
                out[0] = y / *n as f64;
            }
        }
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// One draw of the sample mean of `cfg.n` observations from `P_mu`.
pub fn sample_mean(fam: &FamilySpec, mu: &[f64], cfg: &SampleConfig) -> Result<Vec<f64>> {
    let sampler = Sampler::new(fam, mu, cfg.n)?;
    let mut out = vec![0.0; fam.dim()];
    sampler.draw(&mut chunk_rng(cfg.seed, 0), &mut out);
    Ok(out)
}

fn fold_chunks<T, F, R>(fam: &FamilySpec, mu: &[f64], cfg: &SampleConfig, per_chunk: F, reduce: R) -> Result<T>
where
    T: Send,
    F: Fn(&Sampler, &mut ChaCha8Rng, u64) -> T + Sync,
    R: Fn(Vec<T>) -> T,
{
    let sampler = Sampler::new(fam, mu, cfg.n)?;
    let chunks = cfg.mc_samples.div_ceil(CHUNK);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(cfg.mc_samples - c * CHUNK);
            per_chunk(&sampler, &mut chunk_rng(cfg.seed, c), len)
        })
        .collect();
    Ok(reduce(parts))
}

/// Number of `cfg.mc_samples` replications of the sample mean under `P_mu`
/// for which `event` holds.
pub fn count_replications<P>(fam: &FamilySpec, mu: &[f64], cfg: &SampleConfig, event: P) -> Result<u64>
where
    P: Fn(&[f64]) -> bool + Sync,
{
    let d = fam.dim();
    fold_chunks(
        fam,
        mu,
        cfg,
        |s, rng, len| {
            let mut y = vec![0.0; d];
            let mut hits = 0u64;
            for _ in 0..len {
                s.draw(rng, &mut y);
                hits += event(&y) as u64;
            }
            hits
        },
        |parts| parts.into_iter().sum(),
    )
}

/// Average of `cfg.mc_samples` replications of the sample mean under `P_mu`.
pub fn mean_of_replications(fam: &FamilySpec, mu: &[f64], cfg: &SampleConfig) -> Result<Vec<f64>> {
    let d = fam.dim();
    if cfg.mc_samples == 0 {
        return Err(Error::InvalidArgument("need at least one replication".into()));
    }
    let sum = fold_chunks(
        fam,
        mu,
        cfg,
        |s, rng, len| {
            let mut y = vec![0.0; d];
            let mut acc = vec![0.0; d];
            for _ in 0..len {
                s.draw(rng, &mut y);
                for (a, v) in acc.iter_mut().zip(&y) {
                    *a += v;
                }
            }
            acc
        },
        |parts| {
            parts.into_iter().fold(vec![0.0; d], |mut a, p| {
                for (x, y) in a.iter_mut().zip(p) {
                    *x += y;
                }
                a
            })
        },
    )?;
    Ok(sum.into_iter().map(|s| s / cfg.mc_samples as f64).collect())
}

/// Mean of `f` over `cfg.mc_samples` replications of the sample mean under
/// `P_mu`, with its standard error.
pub fn replication_moments<F>(fam: &FamilySpec, mu: &[f64], cfg: &SampleConfig, f: F) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = fam.dim();
    if cfg.mc_samples < 2 {
        return Err(Error::InvalidArgument("need at least two replications".into()));
    }
    let (sum, sq) = fold_chunks(
        fam,
        mu,
        cfg,
        |s, rng, len| {
            let mut y = vec![0.0; d];
            let (mut a, mut b) = (0.0, 0.0);
            for _ in 0..len {
                s.draw(rng, &mut y);
                let v = f(&y);
                a += v;
                b += v * v;
            }
            (a, b)
        },
        |parts| parts.into_iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y)),
    )?;
    let m = cfg.mc_samples as f64;
    let mean = sum / m;
    let var = (sq / m - mean * mean).max(0.0) * m / (m - 1.0);
    Ok((mean, (var / m).sqrt()))
}
