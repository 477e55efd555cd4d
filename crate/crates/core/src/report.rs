use std::collections::BTreeMap;

use serde::Serialize;

/// How an oracle probability (or expectation) was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Exact,
    Quadrature,
    MonteCarlo,
    None,
}

impl OracleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OracleKind::Exact => "exact",
            OracleKind::Quadrature => "quadrature",
            OracleKind::MonteCarlo => "montecarlo",
            OracleKind::None => "none",
        }
    }
}

/// A probability with its standard error (zero unless Monte Carlo).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Oracle {
    pub prob: f64,
    pub se: f64,
    pub kind: OracleKind,
}

/// Slack allowed between a Monte Carlo oracle and a bound, in standard errors.
pub const MC_SLACK_SE: f64 = 3.0;

/// One evaluation of a concentration bound `P0(Y in M1) <= exp(regret - D_lower)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub family: String,
    pub d: usize,
    pub meanset: String,
    pub partition: Option<String>,
    pub estimator: Option<String>,
    pub n: u64,
    #[serde(rename = "D_lower")]
    pub d_lower: f64,
    pub regret: f64,
    pub log_bound: f64,
    pub bound: f64,
    pub oracle: Option<Oracle>,
    pub mu_star: Option<Vec<f64>>,
    /// Named scalars specific to the construction (balance weights, KKT residuals, ...).
    pub extras: BTreeMap<String, f64>,
}

impl BoundReport {
    pub fn new(family: &str, d: usize, meanset: String, n: u64, d_lower: f64, regret: f64) -> Self {
        let log_bound = regret - d_lower;
        Self {
            family: family.to_string(),
            d,
            meanset,
            partition: None,
            estimator: None,
            n,
            d_lower,
            regret,
            log_bound,
            bound: log_bound.exp(),
            oracle: None,
            mu_star: None,
            extras: BTreeMap::new(),
        }
    }

    pub fn oracle_kind(&self) -> OracleKind {
        self.oracle.map_or(OracleKind::None, |o| o.kind)
    }

    /// Whether the oracle respects the bound: exactly (up to `1e-12`) for
    /// exact oracles, within three standard errors for Monte Carlo.
    pub fn is_valid(&self) -> bool {
        match self.oracle {
            None => true,
            Some(o) => match o.kind {
                OracleKind::MonteCarlo => o.prob <= self.bound + MC_SLACK_SE * o.se,
                OracleKind::None => true,
                _ => o.prob <= self.bound + 1e-12,
            },
        }
    }
}
