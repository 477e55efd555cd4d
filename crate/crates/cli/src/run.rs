//! Executes experiments and turns library results into output rows.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use evgrow_core::csc::csc_convex_checked;
use evgrow_core::nml::{compare_partitions, csc_surround_checked, grow_sandwich, nml_evariable, regret_scan};
use evgrow_core::projection::{grow_convex, NullMass};
use evgrow_core::report::MC_SLACK_SE;
use evgrow_core::surround::{grow_surround_1d, surround_endpoints};
use evgrow_core::{BoundReport, EVariable, Oracle, OracleKind, SampleConfig};
use serde_json::{json, Value};

use crate::config::{Experiment, Mode};

/// Tolerance on `E_P0[S] <= 1` for exact and quadrature evaluations.
pub const NULL_MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub family: String,
    pub d: usize,
    pub mode: Mode,
    pub meanset: String,
    pub partition: Option<String>,
    pub estimator: Option<String>,
    /// Empty on summary rows.
    pub n: Option<u64>,
    pub d_lower: Option<f64>,
    pub mmreg: Option<f64>,
    pub log_bound: Option<f64>,
    pub bound: Option<f64>,
    pub oracle: Option<Oracle>,
    pub extras: BTreeMap<String, Value>,
}

impl Row {
    fn blank(exp: &Experiment, n: Option<u64>) -> Self {
        Self {
            family: exp.family.name().to_string(),
            d: exp.family.dim(),
            mode: exp.mode,
            meanset: exp.meanset.to_string(),
            partition: None,
            estimator: None,
            n,
            d_lower: None,
            mmreg: None,
            log_bound: None,
            bound: None,
            oracle: None,
            extras: BTreeMap::new(),
        }
    }

    fn from_report(exp: &Experiment, r: &BoundReport, with_regret: bool) -> Self {
        let mut row = Row::blank(exp, Some(r.n));
        row.partition = r.partition.clone();
        row.estimator = r.estimator.clone();
        row.d_lower = Some(r.d_lower);
        row.mmreg = with_regret.then_some(r.regret);
        row.log_bound = Some(r.log_bound);
        row.bound = Some(r.bound);
        row.oracle = r.oracle;
        for (k, v) in &r.extras {
            row.extras.insert(k.clone(), json!(v));
        }
        if let Some(m) = &r.mu_star {
            row.extras.insert("mu_star".into(), json!(m));
        }
        row
    }

    fn put_null_mass(&mut self, m: &NullMass) {
        self.extras.insert("null_mass".into(), json!(m.value));
        self.extras.insert("null_mass_se".into(), json!(m.se));
        self.extras.insert("null_mass_kind".into(), json!(m.kind.as_str()));
    }
}

/// Rows of one experiment, plus any invariant the results violated.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub violations: Vec<String>,
    /// Fitted `(slope, intercept)` of a regret scan.
    pub fit: Option<(f64, f64)>,
}

pub fn null_mass_ok(m: &NullMass) -> bool {
    match m.kind {
        OracleKind::MonteCarlo => m.value <= 1.0 + MC_SLACK_SE * m.se,
        _ => m.value <= 1.0 + NULL_MASS_TOL,
    }
}

fn check_null_mass(out: &mut Outcome, exp: &Experiment, n: u64, m: &NullMass) {
    if !null_mass_ok(m) {
        out.violations.push(format!(
            "{} n={n}: E_P0[S] = {} ({}) exceeds 1",
            exp.name,
            m.value,
            m.kind.as_str()
        ));
    }
}

fn check_bound(out: &mut Outcome, exp: &Experiment, r: &BoundReport) {
    if !r.is_valid() {
        let o = r.oracle.unwrap();
        out.violations.push(format!(
            "{} n={}: oracle probability {} (se {}) exceeds bound {}",
            exp.name, r.n, o.prob, o.se, r.bound
        ));
    }
}

pub fn sample_config(exp: &Experiment, n: u64) -> SampleConfig {
    SampleConfig::new(n, exp.seed, exp.mc_samples)
}

/// The e-variable a mode constructs at sample size `n`, if any.
pub fn evariable_for(exp: &Experiment, n: u64) -> Result<Option<EVariable>> {
    let (fam, set) = (&exp.family, &exp.meanset);
    Ok(match exp.mode {
        Mode::GrowConvex | Mode::CscConvex => Some(grow_convex(fam, set, n)?),
        Mode::GrowSurround1d => {
            let (lo, hi) = surround_endpoints(fam, set)?;
            Some(grow_surround_1d(fam, lo, hi, n)?.0)
        }
        Mode::NmlBound | Mode::RegretScan | Mode::GrowSandwich => Some(nml_evariable(fam, exp.partition, set, n)?),
        Mode::ComparePartitions | Mode::Verify => None,
    })
}

pub fn execute(exp: &Experiment) -> Result<Outcome> {
    let ctx = || format!("experiment {} (mode {})", exp.name, exp.mode.as_str());
    execute_inner(exp).with_context(ctx)
}

fn execute_inner(exp: &Experiment) -> Result<Outcome> {
    let (fam, set) = (&exp.family, &exp.meanset);
    let mut out = Outcome::default();
    match exp.mode {
        Mode::GrowConvex => {
            for &n in &exp.ns {
                let e = grow_convex(fam, set, n).with_context(|| format!("grow_convex at n={n}"))?;
                let m = e.null_mass(&sample_config(exp, n))?;
                let g = e.grow_value.unwrap_or(f64::NAN);
                let mut row = Row::blank(exp, Some(n));
                row.d_lower = Some(g);
                row.log_bound = Some(-g);
                row.bound = Some((-g).exp());
                row.extras.insert("grow_value".into(), json!(g));
                row.put_null_mass(&m);
                check_null_mass(&mut out, exp, n, &m);
                out.rows.push(row);
            }
        }
        Mode::CscConvex => {
            for &n in &exp.ns {
                let r = csc_convex_checked(fam, set, &sample_config(exp, n))
                    .with_context(|| format!("csc_convex at n={n}"))?;
                check_bound(&mut out, exp, &r);
                out.rows.push(Row::from_report(exp, &r, false));
            }
        }
        Mode::GrowSurround1d => {
            let (lo, hi) = surround_endpoints(fam, set)?;
            for &n in &exp.ns {
                let (e, sol) = grow_surround_1d(fam, lo, hi, n).with_context(|| format!("grow_surround_1d at n={n}"))?;
                let m = e.null_mass(&sample_config(exp, n))?;
                let g = e.grow_value.unwrap_or(f64::NAN);
                let mut row = Row::blank(exp, Some(n));
                row.d_lower = Some(g);
                row.extras.insert("grow_value".into(), json!(g));
                row.extras.insert("grow_value_alt".into(), json!(e.grow_value_alt));
                row.extras.insert("w".into(), json!(sol.w));
                row.extras.insert("balance_residual".into(), json!(sol.residual));
                row.extras.insert("mu_minus".into(), json!(lo));
                row.extras.insert("mu_plus".into(), json!(hi));
                row.put_null_mass(&m);
                check_null_mass(&mut out, exp, n, &m);
                out.rows.push(row);
            }
        }
        Mode::NmlBound => {
            for &n in &exp.ns {
                let r = csc_surround_checked(fam, set, exp.partition, &sample_config(exp, n))
                    .with_context(|| format!("nml bound at n={n}"))?;
                check_bound(&mut out, exp, &r);
                out.rows.push(Row::from_report(exp, &r, true));
            }
        }
        Mode::RegretScan => {
            let scan = regret_scan(fam, set, exp.partition, &exp.ns)?;
            for s in &scan.rows {
                let mut row = Row::blank(exp, Some(s.n));
                row.partition = Some(exp.partition.label());
                row.estimator = Some(exp.partition.estimator.label().into());
                row.d_lower = Some(s.d_lower);
                row.mmreg = Some(s.mmreg);
                row.log_bound = Some(s.log_bound);
                row.bound = Some(s.log_bound.exp());
                out.rows.push(row);
            }
            let mut summary = Row::blank(exp, None);
            summary.partition = Some(exp.partition.label());
            summary.estimator = Some(exp.partition.estimator.label().into());
            summary.mmreg = Some(scan.slope);
            summary.extras.insert("summary".into(), json!("least-squares fit of mmreg against log n"));
            summary.extras.insert("slope".into(), json!(scan.slope));
            summary.extras.insert("intercept".into(), json!(scan.intercept));
            out.rows.push(summary);
            out.fit = Some((scan.slope, scan.intercept));
        }
        Mode::GrowSandwich => {
            for &n in &exp.ns {
                let s = grow_sandwich(fam, set, exp.partition, n).with_context(|| format!("grow_sandwich at n={n}"))?;
                let mut row = Row::blank(exp, Some(n));
                row.partition = Some(exp.partition.label());
                row.estimator = Some("mle".into());
                row.d_lower = Some(s.upper);
                row.mmreg = Some(s.gap);
                row.log_bound = Some(-s.lower);
                row.bound = Some((-s.lower).exp());
                row.extras.insert("grow_lower".into(), json!(s.lower));
                row.extras.insert("grow_upper".into(), json!(s.upper));
                row.extras.insert("gap_over_log_n".into(), json!(s.gap / (n as f64).ln()));
                out.rows.push(row);
            }
        }
        Mode::ComparePartitions => {
            for &n in &exp.ns {
                let c = compare_partitions(fam, set, &exp.k_list, exp.partition.estimator, n)?;
                for r in &c.rows {
                    let mut row = Row::blank(exp, Some(n));
                    row.partition = Some(r.corners.map_or("radial".into(), |k| format!("cones(k={k})")));
                    row.estimator = Some(exp.partition.estimator.label().into());
                    row.d_lower = Some(r.d_lower);
                    row.mmreg = Some(r.mmreg);
                    row.log_bound = Some(r.log_bound);
                    row.bound = Some(r.log_bound.exp());
                    row.extras.insert("continuous_best".into(), json!(c.continuous_best));
                    out.rows.push(row);
                }
            }
        }
        Mode::Verify => {}
    }
    Ok(out)
}
