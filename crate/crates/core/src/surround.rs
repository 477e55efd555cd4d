//! GROW e-variable against a one-dimensional surrounding alternative
//! `M1 = M \ (mu_minus, mu_plus)`: a two-point mixture on the boundary whose
//! weight balances the expected log growth at both endpoints.

use crate::error::{Error, Result};
use crate::expfam::FamilySpec;
use crate::numeric::dot;
use crate::numeric::quad::Landmarks;
use crate::numeric::roots::bisect;
use crate::numeric::{log_add_exp, log_sum_exp};
use crate::projection::{kl_ball_endpoints, EVariable, MeanSet, Provenance};

/// A finitely supported prior on boundary means.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPrior {
    pub atoms: Vec<(Vec<f64>, f64)>,
    /// `(theta_i, log Z(theta_i))` for each atom.
    params: Vec<(Vec<f64>, f64)>,
}

impl BoundaryPrior {
    pub fn new(fam: &FamilySpec, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if atoms.is_empty() || atoms.iter().any(|(_, w)| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("prior needs nonnegative weights".into()));
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("prior weights sum to {total}")));
        }
        let params = atoms
            .iter()
            .map(|(mu, _)| {
                let t = fam.natural_of_mean(mu)?;
                let a = fam.log_partition(&t);
                Ok((t, a))
            })
            .collect::<Result<_>>()?;
        Ok(Self { atoms, params })
    }

    /// `log sum_i w_i p_mu_i(y) / p0(y)` at sample size `n`.
    pub fn log_mixture_ratio(&self, y: &[f64], n: u64) -> f64 {
        let nf = n as f64;
        let terms: Vec<f64> = self
            .atoms
            .iter()
            .zip(&self.params)
            .map(|((_, w), (t, a))| w.ln() + nf * (dot(t, y) - a))
            .collect();
        log_sum_exp(&terms)
    }
}

fn check_endpoints(fam: &FamilySpec, mu_minus: f64, mu_plus: f64) -> Result<()> {
    if fam.dim() != 1 {
        return Err(Error::UnsupportedDimension(fam.dim()));
    }
    if !(mu_minus < 0.0 && mu_plus > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need mu_minus < 0 < mu_plus, got {mu_minus}, {mu_plus}"
        )));
    }
    let space = fam.mean_space();
    for m in [mu_minus, mu_plus] {
        if !space.contains_interior(&[m]) {
            return Err(Error::MeanOutOfRange {
                family: fam.name().to_string(),
                mean: vec![m],
            });
        }
    }
    Ok(())
}

/// Boundary points `(mu_minus, mu_plus)` of a one-dimensional surrounding set.
pub fn surround_endpoints(fam: &FamilySpec, set: &MeanSet) -> Result<(f64, f64)> {
    set.validate()?;
    let (lo, hi) = match set {
        MeanSet::IntervalComplement { mu_minus, mu_plus } => (*mu_minus, *mu_plus),
        MeanSet::KlBallComplement { d1 } => kl_ball_endpoints(fam, *d1)?,
        _ => {
            return Err(Error::InvalidMeanSet(format!(
                "{set} is not a one-dimensional surrounding set"
            )))
        }
    };
    let space = fam.mean_space();
    if !space.contains_interior(&[lo]) || !space.contains_interior(&[hi]) {
        return Err(Error::NotNice(format!(
            "boundary ({lo}, {hi}) is not inside the interior of the mean space of {}",
            fam.name()
        )));
    }
    Ok((lo, hi))
}

struct Balance<'a> {
    fam: &'a FamilySpec,
    n: u64,
    minus: (f64, f64),
    plus: (f64, f64),
    marks: Landmarks,
}

impl<'a> Balance<'a> {
    fn new(fam: &'a FamilySpec, mu_minus: f64, mu_plus: f64, n: u64) -> Result<Self> {
        check_endpoints(fam, mu_minus, mu_plus)?;
        let tm = fam.natural_of_mean(&[mu_minus])?[0];
        let tp = fam.natural_of_mean(&[mu_plus])?[0];
        Ok(Self {
            fam,
            n,
            minus: (tm, fam.log_partition(&[tm])),
            plus: (tp, fam.log_partition(&[tp])),
            marks: Landmarks {
                points: vec![vec![mu_minus], vec![mu_plus]],
                ..Landmarks::default()
            },
        })
    }

    /// `log S(y)` with log weights `(log(1-w), log w)`.
    fn log_s(&self, y: f64, lw: (f64, f64)) -> f64 {
        let nf = self.n as f64;
        let lm = nf * (self.minus.0 * y - self.minus.1);
        let lp = nf * (self.plus.0 * y - self.plus.1);
        log_add_exp(lw.0 + lm, lw.1 + lp)
    }

    fn f(&self, mu: f64, w: f64) -> Result<f64> {
        self.f_weights(mu, ((1.0 - w).ln(), w.ln()))
    }

    /// `f` at the weight with log-odds `u`.
    fn f_logit(&self, mu: f64, u: f64) -> Result<f64> {
        self.f_weights(mu, (-u.exp().ln_1p(), -(-u).exp().ln_1p()))
    }

    fn f_weights(&self, mu: f64, lw: (f64, f64)) -> Result<f64> {
        self.fam.expect(&[mu], self.n, |y| self.log_s(y[0], lw), &self.marks)
    }
}

/// `f(mu, w) = E_{P_mu}[log((1-w) p_minus(Y) + w p_plus(Y)) / p0(Y)]`.
pub fn balance_objective(fam: &FamilySpec, mu_minus: f64, mu_plus: f64, mu: f64, w: f64, n: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidArgument(format!("weight {w} is outside [0, 1]")));
    }
    Balance::new(fam, mu_minus, mu_plus, n)?.f(mu, w)
}

/// Solution of the balance equation.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceSolution {
    /// Weight on `mu_plus`.
    pub w: f64,
    pub prior: BoundaryPrior,
    /// `|f(mu_minus, w) - f(mu_plus, w)|`.
    pub residual: f64,
    /// `f(mu_minus, w)`.
    pub value: f64,
}

/// Weight `w` in `(0,1)` with `f(mu_minus, w) = f(mu_plus, w)`, by bisection
/// to `1e-12` in the log-odds of `w`. The balance can sit at tiny weights,
/// where `f` moves like `log w`.
pub fn solve_balance(fam: &FamilySpec, mu_minus: f64, mu_plus: f64, n: u64) -> Result<BalanceSolution> {
    let b = Balance::new(fam, mu_minus, mu_plus, n)?;
    let h = |u: f64| -> Result<f64> { Ok(b.f_logit(mu_minus, u)? - b.f_logit(mu_plus, u)?) };
    let u = bisect(h, -700.0, 700.0, 1e-12, 200)?;
    let w = 1.0 / (1.0 + (-u).exp());
    let fm = b.f_logit(mu_minus, u)?;
    let fp = b.f_logit(mu_plus, u)?;
    let prior = BoundaryPrior::new(fam, vec![(vec![mu_minus], 1.0 - w), (vec![mu_plus], w)])?;
    Ok(BalanceSolution {
        w,
        prior,
        residual: (fm - fp).abs(),
        value: fm,
    })
}

/// The GROW e-variable for `M \ (mu_minus, mu_plus)`. `grow_value` is
/// `E_{P0}[S log S]`; `grow_value_alt` is `f(mu_minus, w)`.
pub fn grow_surround_1d(fam: &FamilySpec, mu_minus: f64, mu_plus: f64, n: u64) -> Result<(EVariable, BalanceSolution)> {
    let sol = solve_balance(fam, mu_minus, mu_plus, n)?;
    let prior = sol.prior.clone();
    let marks = Landmarks {
        points: vec![vec![mu_minus], vec![mu_plus]],
        ..Landmarks::default()
    };
    let mut e = EVariable::new(
        move |y| prior.log_mixture_ratio(y, n),
        Provenance::SurroundMixture,
        fam.clone(),
        n,
        marks.clone(),
    );
    let direct = fam.null_expectation_scaled(
        n,
        |y| {
            let l = e.log_value(y);
            (l, l)
        },
        &marks,
    )?;
    e.grow_value = Some(direct);
    e.grow_value_alt = Some(sol.value);
    Ok((e, sol))
}

/// Adjacent grid pairs where `f(., w)` fails to increase away from the
/// complement by more than `1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    pub inner: f64,
    pub outer: f64,
    pub f_inner: f64,
    pub f_outer: f64,
}

/// Checks that `f(mu, w)` increases in `mu` on `[mu_plus, ...)` and
/// decreases on `(..., mu_minus]`. Grid points inside the complement are
/// ignored.
pub fn monotonicity_scan(
    fam: &FamilySpec,
    mu_minus: f64,
    mu_plus: f64,
    w: f64,
    grid: &[f64],
    n: u64,
) -> Result<Vec<MonotonicityViolation>> {
    let b = Balance::new(fam, mu_minus, mu_plus, n)?;
    let mut right: Vec<f64> = grid.iter().copied().filter(|m| *m >= mu_plus).collect();
    let mut left: Vec<f64> = grid.iter().copied().filter(|m| *m <= mu_minus).collect();
    right.sort_by(|a, b| a.partial_cmp(b).unwrap());
    left.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut out = Vec::new();
    for side in [right, left] {
        let values = side.iter().map(|m| b.f(*m, w)).collect::<Result<Vec<f64>>>()?;
        for i in 1..side.len() {
            if values[i] < values[i - 1] - 1e-10 {
                out.push(MonotonicityViolation {
                    inner: side[i - 1],
                    outer: side[i],
                    f_inner: values[i - 1],
                    f_outer: values[i],
                });
            }
        }
    }
    Ok(out)
}

/// `points` evenly spaced means on each side of the complement, reaching
/// three boundary widths out (or 98% of the way to the edge of the mean space).
pub fn scan_grid(fam: &FamilySpec, mu_minus: f64, mu_plus: f64, points: usize) -> Vec<f64> {
    let width = mu_plus - mu_minus;
    let (lo, hi) = match fam.mean_space() {
        crate::expfam::MeanSpace::Interval { lo, hi } => (lo, hi),
        crate::expfam::MeanSpace::Whole { .. } => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let far_right = (mu_plus + 3.0 * width).min(mu_plus + 0.98 * (hi - mu_plus));
    let far_left = (mu_minus - 3.0 * width).max(mu_minus + 0.98 * (lo - mu_minus));
    let step = |a: f64, b: f64, i: usize| {
        if points == 1 {
            a
        } else {
            a + (b - a) * i as f64 / (points - 1) as f64
        }
    };
    let mut g: Vec<f64> = (0..points).map(|i| step(far_left, mu_minus, i)).collect();
    g.extend((0..points).map(|i| step(mu_plus, far_right, i)));
    g
}
