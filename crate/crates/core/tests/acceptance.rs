//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;

use evgrow_core::csc::{csc_convex_checked, mle_bound_check_1d};
use evgrow_core::expfam::bernoulli_mean;
use evgrow_core::nml::{
    compare_partitions, csc_surround_checked, grow_sandwich, regret_scan, EstimatorKind, Nml, PartitionSpec,
};
use evgrow_core::projection::{convex_probes, grow_convex, info_project_convex, pythagorean_residuals};
use evgrow_core::report::MC_SLACK_SE;
use evgrow_core::surround::{grow_surround_1d, monotonicity_scan, scan_grid, solve_balance};
use evgrow_core::{EVariable, FamilySpec, MeanSet, OracleKind, SampleConfig};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

const SEED: u64 = 20_240_601;
const MC: u64 = 1_000_000;

fn phi(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

fn bern_kl(q: f64, p: f64) -> f64 {
    q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln()
}

/// Independent Simpson-rule value of the balance objective for two Gaussian
/// boundary points at n = 1.
fn gaussian_balance_simpson(mu_minus: f64, mu_plus: f64, mu: f64, w: f64) -> f64 {
    let (lo, hi, m) = (mu - 12.0, mu + 12.0, 4000usize);
    let h = (hi - lo) / m as f64;
    let f = |y: f64| {
        let dens = (-(y - mu).powi(2) / 2.0).exp() / (2.0 * PI).sqrt();
        let a = (1.0 - w).ln() + mu_minus * y - mu_minus * mu_minus / 2.0;
        let b = w.ln() + mu_plus * y - mu_plus * mu_plus / 2.0;
        let mx = a.max(b);
        let l = mx + ((a - mx).exp() + (b - mx).exp()).ln();
        dens * l
    };
    let mut s = f(lo) + f(hi);
    for i in 1..m {
        let y = lo + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(y);
    }
    s * h / 3.0
}

fn ac1(_: &mut Vec<EVariable>) -> Outcome {
    let g = FamilySpec::gaussian(2)?;
    let set = MeanSet::HalfSpace { v: vec![1.0, 0.0], a: 2.0 };
    let p = info_project_convex(&g, &set)?;
    let e = grow_convex(&g, &set, 1)?;
    let err_mu = ((p.mu_star[0] - 2.0).powi(2) + p.mu_star[1].powi(2)).sqrt();
    let err_grow = (e.grow_value.unwrap() - 2.0).abs();
    Ok((
        err_mu < 1e-8 && err_grow < 1e-10,
        format!("mu*={:?} (err {err_mu:.1e}), grow={} (err {err_grow:.1e})", p.mu_star, e.grow_value.unwrap()),
    ))
}

fn ac2(evs: &mut Vec<EVariable>) -> Outcome {
    let p = 0.3;
    let b = FamilySpec::scaled_bernoulli(p)?;
    let set = MeanSet::Interval {
        lo: Some(bernoulli_mean(p, 0.5)),
        hi: None,
    };
    let r = csc_convex_checked(&b, &set, &SampleConfig::new(30, SEED, 1))?;
    let o = r.oracle.unwrap();
    let tail = 1.0 - Binomial::new(p, 30)?.cdf(14);
    let bound = (-30.0 * bern_kl(0.5, p)).exp();
    evs.push(grow_convex(&b, &set, 30)?);
    let ok = o.kind == OracleKind::Exact
        && o.prob < r.bound
        && (o.prob - tail).abs() < 1e-12
        && (r.bound - bound).abs() < 1e-12;
    Ok((
        ok,
        format!(
            "tail={:.15} (oracle {tail:.15}), bound={:.15} (oracle {bound:.15}), slack={:.3e}",
            o.prob,
            r.bound,
            r.bound - o.prob
        ),
    ))
}

fn ac3(_: &mut Vec<EVariable>) -> Outcome {
    let p = 0.3;
    let n = 20;
    let b = FamilySpec::scaled_bernoulli(p)?;
    let cfg = SampleConfig::new(n, SEED, 1);
    let at_outcome_hi = n as f64 * bern_kl(0.5, p);
    let at_outcome_lo = b.kl(&[bernoulli_mean(p, 0.1)], n)?;
    let cases = [(at_outcome_hi, 1), (2.0, 1), (5.0, 1), (at_outcome_lo, -1), (1.0, -1)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, s) in cases {
        let c = mle_bound_check_1d(&b, d, s, n, &cfg)?;
        ok &= c.is_valid() && c.sup_event.prob == c.fixed_event.prob;
        parts.push(format!(
            "D={d:.4},s={s:+}: P={:.3e}<=e^-D={:.3e}, mismatches={}",
            c.sup_event.prob, c.bound, c.disagreements
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn ac4(evs: &mut Vec<EVariable>) -> Outcome {
    let g = FamilySpec::gaussian(1)?;
    let sym = solve_balance(&g, -1.0, 1.0, 1)?;
    let asym = solve_balance(&g, -1.0, 2.0, 1)?;
    // grid-scan oracle: sign change of the balance difference on 1e5 weights
    let m = 100_000usize;
    let h = |w: f64| gaussian_balance_simpson(-1.0, 2.0, -1.0, w) - gaussian_balance_simpson(-1.0, 2.0, 2.0, w);
    let mut prev_w = 1.0 / (m as f64 + 1.0);
    let mut prev_h = h(prev_w);
    let mut oracle = f64::NAN;
    for i in 2..=m {
        let w = i as f64 / (m as f64 + 1.0);
        let hw = h(w);
        if prev_h.signum() != hw.signum() {
            oracle = prev_w + (w - prev_w) * prev_h / (prev_h - hw);
            break;
        }
        prev_w = w;
        prev_h = hw;
    }
    evs.push(grow_surround_1d(&g, -1.0, 2.0, 1)?.0);
    let ok = (sym.w - 0.5).abs() < 1e-10 && asym.residual < 1e-9 && (asym.w - oracle).abs() < 1e-6;
    Ok((
        ok,
        format!(
            "symmetric w={:.12}; asymmetric w={:.10} residual={:.1e} grid oracle={oracle:.10}",
            sym.w, asym.w, asym.residual
        ),
    ))
}

fn ac5(evs: &mut Vec<EVariable>) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (fam, lo, hi, n) in [
        (FamilySpec::gaussian(1)?, -1.0, 1.0, 1u64),
        (FamilySpec::scaled_bernoulli(0.3)?, -0.6, 1.0, 10),
    ] {
        let (e, sol) = grow_surround_1d(&fam, lo, hi, n)?;
        let grid = scan_grid(&fam, lo, hi, 200);
        let v = monotonicity_scan(&fam, lo, hi, sol.w, &grid, n)?;
        ok &= v.is_empty();
        parts.push(format!("{} ({lo},{hi}) n={n}: {} violations", fam.name(), v.len()));
        evs.push(e);
    }
    Ok((ok, parts.join("; ")))
}

fn ac6(evs: &mut Vec<EVariable>) -> Outcome {
    let s = 0.5f64.sqrt();
    let configs = [
        (FamilySpec::gaussian(2)?, MeanSet::HalfSpace { v: vec![s, s], a: 1.5 }, 3.0),
        (
            FamilySpec::scaled_bernoulli(0.3)?,
            MeanSet::Interval {
                lo: Some(bernoulli_mean(0.3, 0.5)),
                hi: None,
            },
            2.0,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (fam, set, window) in configs {
        let probes = convex_probes(&fam, &set, 100, window, SEED)?;
        let r = pythagorean_residuals(&fam, &set, &probes)?;
        let worst = r.iter().copied().fold(f64::INFINITY, f64::min);
        ok &= worst >= -1e-9 && r.len() == 100;
        parts.push(format!("{} {set}: min residual {worst:.3e}", fam.name()));
        evs.push(grow_convex(&fam, &set, 5)?);
    }
    Ok((ok, parts.join("; ")))
}

fn ac7(evs: &mut Vec<EVariable>) -> Outcome {
    let g = FamilySpec::gaussian(1)?;
    let set = MeanSet::IntervalComplement {
        mu_minus: -1.0,
        mu_plus: 1.0,
    };
    let nml = Nml::new(&g, &set, PartitionSpec::radial(EstimatorKind::BoundaryMle), 1)?;
    let norm = nml.mmreg().exp();
    let target = 2.0 * phi(1.0);
    let e = nml.evariable();
    let mass = e.null_mass(&SampleConfig::new(1, SEED, 1))?.value;
    evs.push(e);
    Ok((
        (norm - target).abs() < 1e-8 && (mass - 1.0).abs() < 1e-8,
        format!("normalizer={norm:.12} vs 2Phi(1)={target:.12}; E0[S]={mass:.12}"),
    ))
}

fn ac8(_: &mut Vec<EVariable>) -> Outcome {
    let ns: Vec<u64> = (4..=12).map(|k| 1u64 << k).collect();
    let g2 = FamilySpec::gaussian(2)?;
    let set = MeanSet::KlBallComplement { d1: 0.5 };
    let scan = regret_scan(&g2, &set, PartitionSpec::radial(EstimatorKind::BoundaryMle), &ns)?;
    let g1 = FamilySpec::gaussian(1)?;
    let m1 = Nml::new(&g1, &set, PartitionSpec::radial(EstimatorKind::BoundaryMle), 4096)?.mmreg();
    let ok = (0.45..=0.55).contains(&scan.slope) && (m1 - 2f64.ln()).abs() < 0.01;
    Ok((
        ok,
        format!("d=2 slope={:.4}; d=1 mmreg_4096={m1:.6} (log 2={:.6})", scan.slope, 2f64.ln()),
    ))
}

fn ac9(_: &mut Vec<EVariable>) -> Outcome {
    let set = MeanSet::KlBallComplement { d1: 0.5 };
    let part = PartitionSpec::radial(EstimatorKind::BoundaryMle);
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, n) in [(1usize, 4u64), (1, 16), (1, 64), (2, 16), (2, 64)] {
        let fam = FamilySpec::gaussian(d)?;
        let r = csc_surround_checked(&fam, &set, part, &SampleConfig::new(n, SEED, MC))?;
        let o = r.oracle.unwrap();
        ok &= r.is_valid() && o.kind == OracleKind::MonteCarlo;
        parts.push(format!("d={d} n={n}: {:.3e}<={:.3e}+{}se", o.prob, r.bound, MC_SLACK_SE));
    }
    Ok((ok, parts.join("; ")))
}

fn ac10(evs: &mut Vec<EVariable>) -> Outcome {
    let set = MeanSet::KlBallComplement { d1: 0.5 };
    let part = PartitionSpec::radial(EstimatorKind::BoundaryMle);
    let g1 = FamilySpec::gaussian(1)?;
    let s1 = grow_sandwich(&g1, &set, part, 1)?;
    let (e, _) = grow_surround_1d(&g1, -1.0, 1.0, 1)?;
    let grow = e.grow_value.unwrap();
    evs.push(e);
    let inside = s1.lower <= grow && grow <= s1.upper;
    let g2 = FamilySpec::gaussian(2)?;
    let s2 = grow_sandwich(&g2, &set, part, 4096)?;
    let ratio = s2.gap / 4096f64.ln();
    Ok((
        inside && (ratio - 0.5).abs() <= 0.1,
        format!(
            "d=1 n=1: {:.6}<=GROW={grow:.6}<={:.6}; d=2 n=4096: gap={:.6}, gap/log n={ratio:.4} (target 0.5+-0.1)",
            s1.lower, s1.upper, s2.gap
        ),
    ))
}

fn ac11(evs: &mut Vec<EVariable>) -> Outcome {
    let g2 = FamilySpec::gaussian(2)?;
    let set = MeanSet::KlBallComplement { d1: 0.5 };
    let cmp = compare_partitions(&g2, &set, &[3, 4, 8], EstimatorKind::BoundaryMle, 1024)?;
    let text = cmp
        .rows
        .iter()
        .map(|r| {
            let k = r.corners.map_or("inf".to_string(), |k| k.to_string());
            format!("k={k}: {:.3}", r.log_bound)
        })
        .collect::<Vec<_>>()
        .join(", ");
    for k in [3, 8] {
        evs.push(Nml::new(&g2, &set, PartitionSpec::cones(k, EstimatorKind::BoundaryMle), 64)?.evariable());
    }
    evs.push(Nml::new(&g2, &set, PartitionSpec::radial(EstimatorKind::BoundaryMle), 64)?.evariable());
    Ok((cmp.continuous_best, format!("log bounds at n=1024: {text}")))
}

fn ac12(evs: &[EVariable]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = !evs.is_empty();
    for e in evs {
        let m = e.null_mass(&SampleConfig::new(e.n, SEED, MC))?;
        let slack = match m.kind {
            OracleKind::MonteCarlo => MC_SLACK_SE * m.se,
            _ => 1e-6,
        };
        ok &= m.value <= 1.0 + slack;
        worst = worst.max(m.value - 1.0);
    }
    Ok((ok, format!("{} e-variables, max E0[S]-1 = {worst:.3e}", evs.len())))
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, &str, fn(&mut Vec<EVariable>) -> Outcome)> = vec![
        ("AC-1", "convex GROW for a Gaussian half-space", ac1),
        ("AC-2", "convex bound against the exact binomial tail", ac2),
        ("AC-3", "maximized-ratio and fixed-ratio events coincide", ac3),
        ("AC-4", "balance equation", ac4),
        ("AC-5", "monotonicity of the balance objective", ac5),
        ("AC-6", "Pythagorean residuals", ac6),
        ("AC-7", "Shtarkov normalizer closed form", ac7),
        ("AC-8", "regret growth with n", ac8),
        ("AC-9", "surrounding bound against Monte Carlo", ac9),
        ("AC-10", "GROW sandwich", ac10),
        ("AC-11", "continuous partition beats cones", ac11),
    ];
    let mut evs = Vec::new();
    let mut failed = 0;
    let mut report = |id: &str, what: &str, r: Outcome| {
        match r {
            Ok((true, detail)) => println!("[PASS] {id} {what}: {detail}"),
            Ok((false, detail)) => {
                failed += 1;
                println!("[FAIL] {id} {what}: {detail}");
            }
            Err(e) => {
                failed += 1;
                println!("[FAIL] {id} {what}: error: {e}");
            }
        }
    };
    for (id, what, f) in criteria {
        let r = f(&mut evs);
        report(id, what, r);
    }
    report("AC-12", "every e-variable has null mass at most one", ac12(&evs));
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
