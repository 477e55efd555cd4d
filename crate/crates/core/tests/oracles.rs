//! Worked examples checked against independently computed values.

use std::f64::consts::PI;

use evgrow_core::csc::{csc_convex_bound, csc_convex_checked, mle_bound_check_1d};
use evgrow_core::expfam::bernoulli_mean;
use evgrow_core::nml::{csc_surround_bound, csc_surround_checked, grow_sandwich, regret_scan, EstimatorKind, Nml, PartitionSpec};
use evgrow_core::projection::{grow_convex, info_project_convex, pythagorean_residuals};
use evgrow_core::surround::{balance_objective, grow_surround_1d, solve_balance};
use evgrow_core::{FamilySpec, MeanSet, OracleKind, SampleConfig};
use rand::{Rng, SeedableRng};
use statrs::distribution::{Binomial, ContinuousCDF, Discrete, Normal, Poisson};

fn phi(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

fn bern_kl(q: f64, p: f64) -> f64 {
    q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln()
}

/// Log partition of the scaled Bernoulli family written out over its two atoms.
fn bern_log_z(p: f64, theta: f64) -> f64 {
    (p * (theta / p).exp() + (1.0 - p) * (-theta / (1.0 - p)).exp()).ln()
}

/// Natural parameter of the scaled Bernoulli family at success fraction `q`.
fn bern_theta(p: f64, q: f64) -> f64 {
    let logit = |x: f64| (x / (1.0 - x)).ln();
    p * (1.0 - p) * (logit(q) - logit(p))
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, m: usize) -> f64 {
    let h = (hi - lo) / m as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

fn std_normal_pdf(x: f64) -> f64 {
    (-x * x / 2.0).exp() / (2.0 * PI).sqrt()
}

#[test]
fn natural_parameters_match_closed_forms() {
    let g = FamilySpec::gaussian(2).unwrap();
    assert_eq!(g.natural_of_mean(&[2.0, 0.0]).unwrap(), vec![2.0, 0.0]);
    let p = 0.3;
    let b = FamilySpec::scaled_bernoulli(p).unwrap();
    for q in [0.05, 0.3, 0.5, 0.9] {
        let t = b.natural_of_mean(&[bernoulli_mean(p, q)]).unwrap()[0];
        assert!((t - bern_theta(p, q)).abs() < 1e-10, "q={q}: {t}");
    }
}

#[test]
fn divergences_match_direct_sums() {
    let g = FamilySpec::gaussian(2).unwrap();
    assert!((g.kl(&[2.0, 0.0], 1).unwrap() - 2.0).abs() < 1e-15);
    let p = 0.3;
    let b = FamilySpec::scaled_bernoulli(p).unwrap();
    let k = b.kl(&[bernoulli_mean(p, 0.5)], 30).unwrap();
    assert!((k - 30.0 * bern_kl(0.5, p)).abs() < 1e-11);
    assert!((k - 2.615).abs() < 1e-3);
}

#[test]
fn log_ratio_at_the_mean_is_the_divergence() {
    let g = FamilySpec::gaussian(1).unwrap();
    assert!((g.log_density_ratio(&[1.0], &[1.0], 1).unwrap() - 0.5).abs() < 1e-15);
    let p = 0.3;
    let b = FamilySpec::scaled_bernoulli(p).unwrap();
    let mu = bernoulli_mean(p, 0.5);
    let t = bern_theta(p, 0.5);
    let want = t / p - bern_log_z(p, t);
    assert!((b.log_density_ratio(&[mu], &[1.0 / p], 1).unwrap() - want).abs() < 1e-12);
}

#[test]
fn bernoulli_outcomes_have_binomial_masses() {
    let b = FamilySpec::scaled_bernoulli(0.3).unwrap();
    let e = b.enumerate_outcomes(2).unwrap();
    let mut masses: Vec<f64> = e.iter().map(|(_, lp)| lp.exp()).collect();
    masses.sort_by(|a, b| b.total_cmp(a));
    for (m, want) in masses.iter().zip([0.49, 0.42, 0.09]) {
        assert!((m - want).abs() < 1e-14);
    }
    let e = b.enumerate_outcomes(20).unwrap();
    let bin = Binomial::new(0.3, 20).unwrap();
    for (y, lp) in e.iter() {
        let k = (0.3 * 0.7 * y[0] + 0.3) * 20.0;
        let k = k.round() as u64;
        assert!((lp.exp() - bin.pmf(k)).abs() < 1e-13);
    }
}

#[test]
fn poisson_truncation_keeps_the_mass() {
    let rate = 2.5;
    let f = FamilySpec::poisson(rate).unwrap();
    let e = f.enumerate_outcomes(1).unwrap();
    let total: f64 = e.iter().map(|(_, lp)| lp.exp()).sum();
    assert!(total >= 1.0 - 1e-12);
    assert!(e.discarded_mass < 1e-12);
    let pois = Poisson::new(rate).unwrap();
    for (y, lp) in e.iter() {
        let k = (y[0] + rate).round() as u64;
        assert!((lp.exp() - pois.pmf(k)).abs() < 1e-13);
    }
}

#[test]
fn bernoulli_projection_matches_grid_scan() {
    let p = 0.3;
    let b = FamilySpec::scaled_bernoulli(p).unwrap();
    let c = bernoulli_mean(p, 0.5);
    let proj = info_project_convex(&b, &MeanSet::Interval { lo: Some(c), hi: None }).unwrap();
    let hi = bernoulli_mean(p, 0.99);
    let best = (0..=10_000)
        .map(|i| c + (hi - c) * i as f64 / 10_000.0)
        .min_by(|a, z| bern_kl(bernoulli_success_fraction(p, *a), p).total_cmp(&bern_kl(bernoulli_success_fraction(p, *z), p)))
        .unwrap();
    assert_eq!(best, c);
    assert!((proj.mu_star[0] - c).abs() < 1e-12);
}

fn bernoulli_success_fraction(p: f64, mu: f64) -> f64 {
    (mu + 1.0 / (1.0 - p)) / (1.0 / p + 1.0 / (1.0 - p))
}

#[test]
fn convex_grow_at_the_projection() {
    let g = FamilySpec::gaussian(1).unwrap();
    let e = grow_convex(&g, &MeanSet::Interval { lo: Some(1.0), hi: None }, 1).unwrap();
    assert!((e.log_value(&[1.0]) - 0.5).abs() < 1e-15);
    assert_eq!(e.grow_value, Some(0.5));
}

#[test]
fn gaussian_half_space_is_orthogonal() {
    let g = FamilySpec::gaussian(2).unwrap();
    let set = MeanSet::HalfSpace { v: vec![1.0, 0.0], a: 2.0 };
    let r = pythagorean_residuals(&g, &set, &[vec![2.0, 3.0], vec![5.0, -1.0]]).unwrap();
    // zero on the boundary plane, (mu - mu*) . theta* = 2 (mu_1 - 2) inside
    assert!(r[0].abs() < 1e-12 && (r[1] - 6.0).abs() < 1e-12, "{r:?}");
}

#[test]
fn convex_bounds_and_gaussian_tail() {
    let g1 = FamilySpec::gaussian(1).unwrap();
    let set = MeanSet::Interval { lo: Some(1.0), hi: None };
    let r = csc_convex_bound(&g1, &set, 1).unwrap();
    assert!((r.bound - 0.60653).abs() < 1e-5);
    let g2 = FamilySpec::gaussian(2).unwrap();
    let r2 = csc_convex_bound(&g2, &MeanSet::HalfSpace { v: vec![1.0, 0.0], a: 2.0 }, 1).unwrap();
    assert!((r2.bound - 0.13534).abs() < 1e-5);

    let r = csc_convex_checked(&g1, &set, &SampleConfig::new(1, 7, 1_000_000)).unwrap();
    let o = r.oracle.unwrap();
    assert_eq!(o.kind, OracleKind::MonteCarlo);
    let truth = 1.0 - phi(1.0);
    assert!((o.prob - truth).abs() < 3.0 * o.se, "{} vs {truth}", o.prob);
    assert!(r.is_valid());
}

#[test]
fn gaussian_sup_event_is_the_tail() {
    let g = FamilySpec::gaussian(1).unwrap();
    let c = mle_bound_check_1d(&g, 0.5, 1, 1, &SampleConfig::new(1, 11, 1_000_000)).unwrap();
    assert!((c.mu_star - 1.0).abs() < 1e-10);
    assert_eq!(c.disagreements, 0);
    let truth = 1.0 - phi(1.0);
    assert!((c.sup_event.prob - truth).abs() < 3.0 * c.sup_event.se);
    assert!(c.is_valid());
}

#[test]
fn balance_objective_at_the_extreme_weights() {
    let g = FamilySpec::gaussian(1).unwrap();
    let f0 = balance_objective(&g, -1.0, 1.0, -1.0, 0.0, 1).unwrap();
    let f1 = balance_objective(&g, -1.0, 1.0, -1.0, 1.0, 1).unwrap();
    assert!((f0 - 0.5).abs() < 1e-9, "{f0}");
    assert!((f1 + 1.5).abs() < 1e-9, "{f1}");
}

#[test]
fn bernoulli_balance_against_two_atom_sums() {
    let p = 0.3;
    let b = FamilySpec::scaled_bernoulli(p).unwrap();
    let (qm, qp) = (0.1, 0.6);
    let (lo, hi) = (bernoulli_mean(p, qm), bernoulli_mean(p, qp));
    let sol = solve_balance(&b, lo, hi, 1).unwrap();
    assert!(sol.residual < 1e-9);
    // f(mu, w) = sum over the two atoms of P_mu(atom) log((1-w) r_- + w r_+)
    let f = |q: f64, w: f64| {
        let (tm, tp) = (bern_theta(p, qm), bern_theta(p, qp));
        let ratio = |t: f64, y: f64| (t * y - bern_log_z(p, t)).exp();
        [(q, 1.0 / p), (1.0 - q, -1.0 / (1.0 - p))]
            .iter()
            .map(|(pr, y)| pr * ((1.0 - w) * ratio(tm, *y) + w * ratio(tp, *y)).ln())
            .sum::<f64>()
    };
    assert!((f(qm, sol.w) - f(qp, sol.w)).abs() < 1e-9);
    assert!((f(qm, sol.w) - sol.value).abs() < 1e-9);
}

#[test]
fn symmetric_gaussian_mixture_growth() {
    let g = FamilySpec::gaussian(1).unwrap();
    let (e, sol) = grow_surround_1d(&g, -1.0, 1.0, 1).unwrap();
    // log of the mixture ratio is -1/2 + log cosh y
    let mix = |y: f64| 0.5 * (std_normal_pdf(y + 1.0) + std_normal_pdf(y - 1.0));
    let want = simpson(|y| mix(y) * (y.cosh().ln() - 0.5), -14.0, 14.0, 20_000);
    assert!((sol.w - 0.5).abs() < 1e-10);
    assert!((e.grow_value.unwrap() - want).abs() < 1e-8, "{:?} vs {want}", e.grow_value);
    assert!((e.grow_value_alt.unwrap() - want).abs() < 1e-8);
    assert!((e.expected_log_value(&[1.0]).unwrap() - want).abs() < 1e-8);
}

#[test]
fn mle_on_a_circle_is_radial() {
    let g = FamilySpec::gaussian(2).unwrap();
    let d1 = 2.0;
    let a = (2.0f64 * d1).sqrt();
    let nml = Nml::new(&g, &MeanSet::KlBallComplement { d1 }, PartitionSpec::radial(EstimatorKind::BoundaryMle), 1).unwrap();
    let y = [3.0, 4.0];
    let r = nml.estimate_with(EstimatorKind::BoundaryMle, &y).unwrap();
    let grid = (0..100_000)
        .map(|i| 2.0 * PI * i as f64 / 100_000.0)
        .max_by(|s, t| {
            let l = |u: f64| a * (u.cos() * y[0] + u.sin() * y[1]);
            l(*s).total_cmp(&l(*t))
        })
        .unwrap();
    assert!((r[0] - a * 0.6).abs() < 1e-9 && (r[1] - a * 0.8).abs() < 1e-9);
    assert!((r[0] - a * grid.cos()).abs() < 1e-4 && (r[1] - a * grid.sin()).abs() < 1e-4);
}

#[test]
fn two_point_gaussian_normalizer() {
    let g = FamilySpec::gaussian(1).unwrap();
    let set = MeanSet::IntervalComplement {
        mu_minus: -1.0,
        mu_plus: 1.0,
    };
    let nml = Nml::new(&g, &set, PartitionSpec::radial(EstimatorKind::BoundaryMle), 1).unwrap();
    let want = (2.0 * phi(1.0)).ln();
    assert!((nml.mmreg() - want).abs() < 1e-9);
    assert!((nml.mmreg() - 0.52043).abs() < 1e-4);
    // the max of the two densities, integrated by Simpson
    let direct = simpson(|y| std_normal_pdf(y - 1.0).max(std_normal_pdf(y + 1.0)), -14.0, 0.0, 20_000) * 2.0;
    assert!((nml.mmreg() - direct.ln()).abs() < 1e-9);
    let e = nml.evariable();
    assert!((e.log_value(&[1.0]) - (0.5 - want)).abs() < 1e-9);
}

#[test]
fn two_point_bernoulli_normalizer() {
    let p = 0.3;
    let n = 20;
    let b = FamilySpec::scaled_bernoulli(p).unwrap();
    let (qm, qp) = (0.1, 0.6);
    let set = MeanSet::IntervalComplement {
        mu_minus: bernoulli_mean(p, qm),
        mu_plus: bernoulli_mean(p, qp),
    };
    let nml = Nml::new(&b, &set, PartitionSpec::radial(EstimatorKind::BoundaryMle), n).unwrap();
    let (bm, bp) = (Binomial::new(qm, n).unwrap(), Binomial::new(qp, n).unwrap());
    let want: f64 = (0..=n).map(|k| bm.pmf(k).max(bp.pmf(k))).sum::<f64>().ln();
    assert!((nml.mmreg() - want).abs() < 1e-12, "{} vs {want}", nml.mmreg());
}

#[test]
fn nml_regret_is_constant() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for (d, set) in [
        (1, MeanSet::IntervalComplement { mu_minus: -1.0, mu_plus: 1.5 }),
        (2, MeanSet::KlBallComplement { d1: 0.5 }),
    ] {
        let g = FamilySpec::gaussian(d).unwrap();
        let nml = Nml::new(&g, &set, PartitionSpec::radial(EstimatorKind::BoundaryMle), 4).unwrap();
        let e = nml.evariable();
        let regs: Vec<f64> = (0..100)
            .map(|_| {
                let y: Vec<f64> = (0..d).map(|_| 6.0 * rng.random::<f64>() - 3.0).collect();
                nml.regret(EstimatorKind::BoundaryMle, |y| e.log_value(y), &y).unwrap()
            })
            .collect();
        let spread = regs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - regs.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-9, "d={d}: {spread}");
        assert!((regs[0] - nml.mmreg()).abs() < 1e-9);
    }
}

#[test]
fn surrounding_bound_examples() {
    let g = FamilySpec::gaussian(1).unwrap();
    let set = MeanSet::KlBallComplement { d1: 0.5 };
    let part = PartitionSpec::radial(EstimatorKind::BoundaryMle);
    let r = csc_surround_bound(&g, &set, part, 1).unwrap();
    assert!((r.bound - (2.0 * phi(1.0)).ln().exp() * (-0.5f64).exp()).abs() < 1e-9);
    assert!((r.bound - 1.0206).abs() < 1e-4);
    let r = csc_surround_checked(&g, &set, part, &SampleConfig::new(16, 5, 1_000_000)).unwrap();
    let o = r.oracle.unwrap();
    let truth = 2.0 * (1.0 - phi(4.0));
    assert!((o.prob - truth).abs() < 3.0 * o.se + 1e-6);
    assert!(r.is_valid());
    let g2 = FamilySpec::gaussian(2).unwrap();
    let r = csc_surround_checked(&g2, &set, part, &SampleConfig::new(64, 5, 1_000_000)).unwrap();
    assert!(r.is_valid());
}

#[test]
fn bernoulli_regret_stays_bounded() {
    let p = 0.3;
    let b = FamilySpec::scaled_bernoulli(p).unwrap();
    let set = MeanSet::IntervalComplement {
        mu_minus: bernoulli_mean(p, 0.15),
        mu_plus: bernoulli_mean(p, 0.45),
    };
    let ns: Vec<u64> = (4..=10).map(|k| 1u64 << k).collect();
    let scan = regret_scan(&b, &set, PartitionSpec::radial(EstimatorKind::BoundaryMle), &ns).unwrap();
    assert!(scan.slope.abs() < 0.1, "slope {}", scan.slope);
}

#[test]
fn one_dimensional_sandwich() {
    let g = FamilySpec::gaussian(1).unwrap();
    let set = MeanSet::KlBallComplement { d1: 0.5 };
    let s = grow_sandwich(&g, &set, PartitionSpec::radial(EstimatorKind::BoundaryMle), 100).unwrap();
    let mmreg = (2.0 * phi(10.0)).ln();
    assert!((s.upper - 50.0).abs() < 1e-12);
    assert!((s.lower - (50.0 - mmreg)).abs() < 1e-9);
}

#[test]
fn square_cones_lose_half_the_divergence() {
    let g = FamilySpec::gaussian(2).unwrap();
    let set = MeanSet::KlBallComplement { d1: 0.5 };
    let cones = Nml::new(&g, &set, PartitionSpec::cones(4, EstimatorKind::BoundaryMle), 1024).unwrap();
    let circle = Nml::new(&g, &set, PartitionSpec::radial(EstimatorKind::BoundaryMle), 1024).unwrap();
    // the closest point of each facet of the inscribed square sits at distance cos(pi/4)
    let facet = (PI / 4.0).cos();
    assert!((cones.d_lower() - 1024.0 * facet * facet / 2.0).abs() < 1e-6);
    assert!((circle.d_lower() - 512.0).abs() < 1e-9);
}
