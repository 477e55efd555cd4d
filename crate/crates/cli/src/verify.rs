//! Property suite: e-variable normalization, Pythagorean residuals,
//! monotonicity of the balance objective and bound validity, reported one
//! machine-readable line per property.

use anyhow::Result;
use evgrow_core::csc::csc_convex_checked;
use evgrow_core::nml::{compare_partitions, csc_surround_checked, regret_scan};
use evgrow_core::projection::{convex_probes, info_project_convex, pythagorean_residuals};
use evgrow_core::surround::{monotonicity_scan, scan_grid, solve_balance, surround_endpoints};
use evgrow_core::MeanSet;

use crate::config::{parse_plan, ConfigError, Experiment, Mode};
use crate::run::{evariable_for, null_mass_ok, sample_config};

/// Shipped configurations making up the default suite.
pub const DEFAULT_SUITE: &[(&str, &str)] = &[
    ("grow_convex_halfspace", include_str!("../../../configs/grow_convex_halfspace.toml")),
    ("csc_convex_gaussian", include_str!("../../../configs/csc_convex_gaussian.toml")),
    ("csc_convex_bernoulli", include_str!("../../../configs/csc_convex_bernoulli.toml")),
    ("grow_surround", include_str!("../../../configs/grow_surround.toml")),
    ("nml_bound", include_str!("../../../configs/nml_bound.toml")),
    ("regret_scan_d2", include_str!("../../../configs/regret_scan_d2.toml")),
    ("grow_sandwich", include_str!("../../../configs/grow_sandwich.toml")),
    ("compare_partitions", include_str!("../../../configs/compare_partitions.toml")),
    ("verify_poisson", include_str!("../../../configs/verify_poisson.toml")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub config: String,
    pub property: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "property={} config={} status={} detail=\"{}\"",
            self.property,
            self.config,
            if self.pass { "pass" } else { "fail" },
            self.detail.replace('"', "'")
        )
    }
}

fn check(config: &str, property: &'static str, r: Result<(bool, String)>) -> Check {
    let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error: {e:#}")));
    Check {
        config: config.to_string(),
        property,
        pass,
        detail,
    }
}

fn is_one_dim_surround(exp: &Experiment) -> bool {
    exp.family.dim() == 1 && matches!(exp.meanset, MeanSet::IntervalComplement { .. } | MeanSet::KlBallComplement { .. })
}

/// Sample sizes worth checking: the smallest and the largest.
fn check_sizes(exp: &Experiment) -> Vec<u64> {
    let mut v = vec![exp.ns[0]];
    if exp.ns.len() > 1 {
        v.push(*exp.ns.last().unwrap());
    }
    v
}

fn normalization(exp: &Experiment) -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    let probe = if exp.mode == Mode::Verify || exp.mode == Mode::ComparePartitions {
        Experiment {
            mode: if exp.meanset.is_convex() { Mode::GrowConvex } else { Mode::NmlBound },
            ..exp.clone()
        }
    } else {
        exp.clone()
    };
    for n in check_sizes(exp) {
        if let Some(e) = evariable_for(&probe, n)? {
            let m = e.null_mass(&sample_config(exp, n))?;
            ok &= null_mass_ok(&m);
            parts.push(format!("n={n}: E0[S]={:.12} ({})", m.value, m.kind.as_str()));
        }
    }
    Ok((ok, parts.join(", ")))
}

fn pythagorean(exp: &Experiment) -> Result<(bool, String)> {
    let proj = info_project_convex(&exp.family, &exp.meanset)?;
    let window = 2.0 * proj.mu_star.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let probes = convex_probes(&exp.family, &exp.meanset, 100, window, exp.seed)?;
    let r = pythagorean_residuals(&exp.family, &exp.meanset, &probes)?;
    let worst = r.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((worst >= -1e-9, format!("min residual over {} probes = {worst:.3e}", r.len())))
}

fn monotonicity(exp: &Experiment) -> Result<(bool, String)> {
    let (lo, hi) = surround_endpoints(&exp.family, &exp.meanset)?;
    let n = exp.ns[0];
    let sol = solve_balance(&exp.family, lo, hi, n)?;
    let grid = scan_grid(&exp.family, lo, hi, 200);
    let v = monotonicity_scan(&exp.family, lo, hi, sol.w, &grid, n)?;
    Ok((
        v.is_empty() && sol.residual < 1e-9,
        format!("n={n}: {} violations on {} grid points, balance residual {:.1e}", v.len(), grid.len(), sol.residual),
    ))
}

fn bound_validity(exp: &Experiment) -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for &n in &exp.ns {
        let cfg = sample_config(exp, n);
        let r = if exp.meanset.is_convex() {
            csc_convex_checked(&exp.family, &exp.meanset, &cfg)?
        } else {
            csc_surround_checked(&exp.family, &exp.meanset, exp.partition, &cfg)?
        };
        ok &= r.is_valid();
        let o = r.oracle.unwrap();
        parts.push(format!("n={n}: {:.3e}<={:.3e} ({})", o.prob, r.bound, o.kind.as_str()));
    }
    Ok((ok, parts.join(", ")))
}

fn monotone_bound(exp: &Experiment) -> Result<(bool, String)> {
    let scan = regret_scan(&exp.family, &exp.meanset, exp.partition, &exp.ns)?;
    let ok = scan
        .rows
        .windows(2)
        .filter(|w| w[0].log_bound < 0.0)
        .all(|w| w[1].log_bound < w[0].log_bound);
    Ok((ok, format!("log bounds {:?}", scan.rows.iter().map(|r| r.log_bound).collect::<Vec<_>>())))
}

fn partition_order(exp: &Experiment) -> Result<(bool, String)> {
    let n = *exp.ns.last().unwrap();
    let c = compare_partitions(&exp.family, &exp.meanset, &exp.k_list, exp.partition.estimator, n)?;
    Ok((
        c.continuous_best,
        format!("n={n}: log bounds {:?}", c.rows.iter().map(|r| r.log_bound).collect::<Vec<_>>()),
    ))
}

/// Every applicable property for one experiment.
pub fn checks_for(exp: &Experiment) -> Vec<Check> {
    let name = exp.name.as_str();
    let mut out = vec![Check {
        config: name.to_string(),
        property: "construction",
        pass: true,
        detail: format!("{} passes its construction checks", exp.family.name()),
    }];
    out.push(check(name, "normalization", normalization(exp)));
    if exp.meanset.is_convex() {
        out.push(check(name, "pythagorean", pythagorean(exp)));
    }
    if is_one_dim_surround(exp) {
        out.push(check(name, "monotonicity", monotonicity(exp)));
    }
    let has_oracle = matches!(exp.mode, Mode::CscConvex | Mode::NmlBound | Mode::Verify);
    if has_oracle && (exp.meanset.is_convex() || exp.family.dim() <= 2) {
        out.push(check(name, "bound-validity", bound_validity(exp)));
    }
    if matches!(exp.meanset, MeanSet::KlBallComplement { .. }) && exp.ns.len() > 1 {
        out.push(check(name, "monotone-bound", monotone_bound(exp)));
    }
    if exp.mode == Mode::ComparePartitions {
        out.push(check(name, "partition-order", partition_order(exp)));
    }
    out
}

/// Checks for one configuration document. A family that fails its own
/// construction checks is reported as a failed property; other configuration
/// problems are returned as errors.
pub fn verify_config(text: &str, label: &str, seed: Option<u64>) -> Result<Vec<Check>, ConfigError> {
    match parse_plan(text, label, seed) {
        Ok(plan) => {
            use rayon::prelude::*;
            let per: Vec<Vec<Check>> = plan.experiments.par_iter().map(checks_for).collect();
            Ok(per.into_iter().flatten().collect())
        }
        Err(e) if e.family_invariant => Ok(vec![Check {
            config: label.to_string(),
            property: "construction",
            pass: false,
            detail: e.message,
        }]),
        Err(e) => Err(e),
    }
}
