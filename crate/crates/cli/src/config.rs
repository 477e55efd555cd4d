//! Experiment configuration files: TOML tables for the family, mean set,
//! partition, sample sizes and outputs, with an optional `[[sweep]]` array
//! whose entries are merged over the base to give one experiment each.

use std::fmt;
use std::path::{Path, PathBuf};

use evgrow_core::expfam::bernoulli_mean;
use evgrow_core::nml::{EstimatorKind, PartitionKind, PartitionSpec};
use evgrow_core::{FamilySpec, MeanSet};
use serde::Deserialize;
use toml::{Table, Value};

pub const DEFAULT_MC_SAMPLES: u64 = 100_000;

#[derive(Debug, Clone)]
pub struct ConfigError {
    pub message: String,
    /// The family was rejected by its own construction checks rather than
    /// for a malformed key.
    pub family_invariant: bool,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            family_invariant: false,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    GrowConvex,
    CscConvex,
    GrowSurround1d,
    NmlBound,
    RegretScan,
    GrowSandwich,
    ComparePartitions,
    Verify,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::GrowConvex,
        Mode::CscConvex,
        Mode::GrowSurround1d,
        Mode::NmlBound,
        Mode::RegretScan,
        Mode::GrowSandwich,
        Mode::ComparePartitions,
        Mode::Verify,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::GrowConvex => "grow-convex",
            Mode::CscConvex => "csc-convex",
            Mode::GrowSurround1d => "grow-surround-1d",
            Mode::NmlBound => "nml-bound",
            Mode::RegretScan => "regret-scan",
            Mode::GrowSandwich => "grow-sandwich",
            Mode::ComparePartitions => "compare-partitions",
            Mode::Verify => "verify",
        }
    }

    fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.as_str() == s)
    }

    fn plottable(&self) -> bool {
        matches!(
            self,
            Mode::CscConvex | Mode::NmlBound | Mode::RegretScan | Mode::GrowSandwich
        )
    }
}

/// One fully validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub mode: Mode,
    pub family: FamilySpec,
    pub meanset: MeanSet,
    pub partition: PartitionSpec,
    pub k_list: Vec<usize>,
    pub ns: Vec<u64>,
    pub seed: u64,
    pub mc_samples: u64,
    /// The merged configuration as written, with the effective seed.
    pub echo: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub experiments: Vec<Experiment>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    name: String,
    d: Option<usize>,
    p: Option<f64>,
    rate: Option<f64>,
    atoms: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
    enumeration_cap: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPartition {
    #[serde(alias = "partition")]
    kind: Option<String>,
    estimator: Option<String>,
    corners: Option<usize>,
    k_list: Option<Vec<usize>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSample {
    n: Option<u64>,
    n_list: Option<Vec<u64>>,
    seed: Option<u64>,
    mc_samples: Option<u64>,
}

#[derive(Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    csv: Option<PathBuf>,
    svg: Option<PathBuf>,
}

/// Built-in family names, their aliases and parameters.
pub const FAMILIES: &[(&str, &[&str], &str)] = &[
    ("gaussian", &["gaussian-location", "normal"], "d = dimension (default 1); unit-variance location family, null N(0, I)"),
    ("scaled-bernoulli", &["bernoulli"], "p = success probability; X = 1/p or -1/(1-p), so the null mean is 0"),
    ("poisson", &["centered-poisson"], "rate = null rate; X = K - rate with K ~ Poisson(rate)"),
    ("discrete", &["finite"], "atoms, weights = finite support and null weights (weights sum to 1, null mean 0)"),
];

fn canonical_family(name: &str) -> Option<&'static str> {
    FAMILIES
        .iter()
        .find(|(n, aliases, _)| *n == name || aliases.contains(&name))
        .map(|(n, _, _)| *n)
}

fn take<T: for<'de> Deserialize<'de> + Default>(table: &Table, key: &str) -> Result<T, ConfigError> {
    match table.get(key) {
        None => Ok(T::default()),
        Some(v) => v
            .clone()
            .try_into()
            .map_err(|e| ConfigError::new(format!("in [{key}]: {e}"))),
    }
}

fn build_family(table: &Table) -> Result<FamilySpec, ConfigError> {
    let raw: RawFamily = table
        .get("family")
        .ok_or_else(|| ConfigError::new("missing [family] table"))?
        .clone()
        .try_into()
        .map_err(|e| ConfigError::new(format!("in [family]: {e}")))?;
    let need = |v: Option<f64>, key: &str| v.ok_or_else(|| ConfigError::new(format!("in [family]: missing key `{key}` for {}", raw.name)));
    let built = match canonical_family(&raw.name) {
        Some("gaussian") => FamilySpec::gaussian(raw.d.unwrap_or(1)),
        Some("scaled-bernoulli") => FamilySpec::scaled_bernoulli(need(raw.p, "p")?),
        Some("poisson") => FamilySpec::poisson(need(raw.rate, "rate")?),
        Some("discrete") => {
            let atoms = raw.atoms.clone().ok_or_else(|| ConfigError::new("in [family]: missing key `atoms`"))?;
            let weights = raw.weights.clone().ok_or_else(|| ConfigError::new("in [family]: missing key `weights`"))?;
            FamilySpec::finite(atoms, weights)
        }
        _ => {
            return Err(ConfigError::new(format!(
                "in [family]: unknown family `{}` (see `evgrow families`)",
                raw.name
            )))
        }
    };
    let fam = built.map_err(|e| ConfigError {
        message: format!("in [family]: {e}"),
        family_invariant: matches!(e, evgrow_core::Error::InvalidFamily(_)),
    })?;
    Ok(match raw.enumeration_cap {
        Some(cap) => fam.with_enumeration_cap(cap),
        None => fam,
    })
}

/// Mean set from its table. With `scale = "fraction"`, one-dimensional
/// endpoints of a scaled Bernoulli family are given as success fractions.
fn build_meanset(table: &Table, fam: &FamilySpec) -> Result<MeanSet, ConfigError> {
    let mut t = table
        .get("meanset")
        .ok_or_else(|| ConfigError::new("missing [meanset] table"))?
        .as_table()
        .ok_or_else(|| ConfigError::new("[meanset] must be a table"))?
        .clone();
    if let Some(scale) = t.remove("scale") {
        let p = match (scale.as_str(), fam.kind()) {
            (Some("fraction"), evgrow_core::expfam::FamilyKind::ScaledBernoulli { p }) => *p,
            (Some("fraction"), _) => {
                return Err(ConfigError::new("in [meanset]: scale = \"fraction\" needs a scaled-bernoulli family"))
            }
            (Some("mean"), _) => 1.0,
            _ => return Err(ConfigError::new("in [meanset]: `scale` must be \"mean\" or \"fraction\"")),
        };
        if p < 1.0 {
            for key in ["lo", "hi", "mu_minus", "mu_plus"] {
                if let Some(v) = t.get_mut(key) {
                    let q = v
                        .as_float()
                        .or_else(|| v.as_integer().map(|i| i as f64))
                        .ok_or_else(|| ConfigError::new(format!("in [meanset]: `{key}` must be a number")))?;
                    *v = Value::Float(bernoulli_mean(p, q));
                }
            }
        }
    }
    let variant = t.get("variant").and_then(|v| v.as_str()).unwrap_or_default().to_string();
    let allowed: &[&str] = match variant.as_str() {
        "half-space" => &["v", "a"],
        "interval" => &["lo", "hi"],
        "polytope" => &["normals", "offsets"],
        "interval-complement" => &["mu_minus", "mu_plus"],
        "kl-ball-complement" => &["D1", "d1"],
        "radial" => &["boundary"],
        _ => &[],
    };
    if let Some(k) = t.keys().find(|k| *k != "variant" && !allowed.is_empty() && !allowed.contains(&k.as_str())) {
        return Err(ConfigError::new(format!("in [meanset]: unknown key `{k}` for variant {variant}")));
    }
    let set: MeanSet = Value::Table(t)
        .try_into()
        .map_err(|e| ConfigError::new(format!("in [meanset]: {e}")))?;
    set.validate().map_err(|e| ConfigError::new(format!("in [meanset]: {e}")))?;
    if let Some(d) = set.dim() {
        if d != fam.dim() {
            return Err(ConfigError::new(format!(
                "in [meanset]: set has dimension {d} but {} has dimension {}",
                fam.name(),
                fam.dim()
            )));
        }
    }
    Ok(set)
}

fn build_partition(raw: &RawPartition) -> Result<PartitionSpec, ConfigError> {
    let estimator = match raw.estimator.as_deref() {
        None | Some("mle") => EstimatorKind::BoundaryMle,
        Some("radial") => EstimatorKind::SelfConsistentRadial,
        Some(e) => return Err(ConfigError::new(format!("in [partition]: unknown estimator `{e}` (mle or radial)"))),
    };
    match raw.kind.as_deref() {
        None | Some("radial") => {
            if raw.corners.is_some() {
                return Err(ConfigError::new("in [partition]: `corners` needs kind = \"cones\""));
            }
            Ok(PartitionSpec::radial(estimator))
        }
        Some("cones") => {
            let k = raw
                .corners
                .ok_or_else(|| ConfigError::new("in [partition]: missing key `corners` for cones"))?;
            if k < 3 {
                return Err(ConfigError::new("in [partition]: `corners` must be at least 3"));
            }
            Ok(PartitionSpec::cones(k, estimator))
        }
        Some(k) => Err(ConfigError::new(format!("in [partition]: unknown kind `{k}` (radial or cones)"))),
    }
}

/// Whether `over` names a different variant or family than `base`, in which
/// case it replaces `base` instead of being merged into it.
fn switches_kind(base: &Table, over: &Table) -> bool {
    ["variant", "name"]
        .iter()
        .any(|k| over.get(*k).is_some_and(|v| base.get(*k) != Some(v)))
}

fn merge(base: &mut Table, over: &Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) if !switches_kind(b, o) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn build_experiment(table: &Table, name: String, seed_override: Option<u64>) -> Result<Experiment, ConfigError> {
    const KEYS: [&str; 7] = ["name", "mode", "family", "meanset", "partition", "sample", "output"];
    if let Some(k) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::new(format!("unknown top-level key `{k}`")));
    }
    let mode_str = table
        .get("mode")
        .ok_or_else(|| ConfigError::new("missing key `mode`"))?
        .as_str()
        .ok_or_else(|| ConfigError::new("`mode` must be a string"))?;
    let mode = Mode::parse(mode_str).ok_or_else(|| {
        let all: Vec<&str> = Mode::ALL.iter().map(|m| m.as_str()).collect();
        ConfigError::new(format!("unknown mode `{mode_str}` (one of {})", all.join(", ")))
    })?;
    let family = build_family(table)?;
    let meanset = build_meanset(table, &family)?;
    let raw_part: RawPartition = take(table, "partition")?;
    let partition = build_partition(&raw_part)?;
    let sample: RawSample = take(table, "sample")?;

    let ns = match (sample.n, sample.n_list.clone()) {
        (Some(_), Some(_)) => return Err(ConfigError::new("in [sample]: give either `n` or `n_list`, not both")),
        (Some(n), None) => vec![n],
        (None, Some(l)) => l,
        (None, None) => return Err(ConfigError::new("in [sample]: missing key `n` (or `n_list`)")),
    };
    if ns.is_empty() || ns.contains(&0) {
        return Err(ConfigError::new("in [sample]: sample sizes must be at least 1"));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::new("in [sample]: `n_list` must be strictly increasing"));
    }
    let mc_samples = sample.mc_samples.unwrap_or(DEFAULT_MC_SAMPLES);
    if mc_samples == 0 {
        return Err(ConfigError::new("in [sample]: `mc_samples` must be at least 1"));
    }
    let seed = seed_override.or(sample.seed).unwrap_or(0);

    let d = family.dim();
    let err = |msg: String| Err(ConfigError::new(format!("mode {}: {msg}", mode.as_str())));
    match mode {
        Mode::GrowConvex | Mode::CscConvex if !meanset.is_convex() => {
            return err(format!("needs a convex mean set, got {meanset}"));
        }
        Mode::GrowSurround1d if d != 1 || !matches!(meanset, MeanSet::IntervalComplement { .. } | MeanSet::KlBallComplement { .. }) => {
            return err("needs a one-dimensional family with an interval-complement or kl-ball-complement set".into());
        }
        Mode::NmlBound | Mode::RegretScan if meanset.is_convex() => {
            return err(format!("needs a surrounding mean set, got {meanset}"));
        }
        Mode::RegretScan if ns.len() < 2 => return err("needs `n_list` with at least two sizes".into()),
        Mode::GrowSandwich if !matches!(meanset, MeanSet::KlBallComplement { .. }) => {
            return err("needs a kl-ball-complement set".into());
        }
        Mode::ComparePartitions => {
            if d != 2 || !matches!(meanset, MeanSet::KlBallComplement { .. }) {
                return err("needs a two-dimensional family with a kl-ball-complement set".into());
            }
            match &raw_part.k_list {
                None => return err("needs `k_list` in [partition]".into()),
                Some(l) if l.is_empty() || l.iter().any(|k| *k < 3) => {
                    return err("`k_list` entries must be at least 3".into())
                }
                _ => {}
            }
        }
        _ => {}
    }
    if matches!(partition.kind, PartitionKind::FiniteCones { .. }) && d != 2 {
        return err("cone partitions need a two-dimensional family".into());
    }

    let mut echo_table = table.clone();
    echo_table.remove("output");
    let mut echo = serde_json::to_value(&echo_table).map_err(|e| ConfigError::new(e.to_string()))?;
    echo["sample"]["seed"] = serde_json::json!(seed);
    Ok(Experiment {
        name,
        mode,
        family,
        meanset,
        partition,
        k_list: raw_part.k_list.unwrap_or_default(),
        ns,
        seed,
        mc_samples,
        echo,
    })
}

/// Parses and validates a whole configuration document. `label` names the
/// experiments when the file gives no `name`.
pub fn parse_plan(text: &str, label: &str, seed_override: Option<u64>) -> Result<Plan, ConfigError> {
    let mut base: Table = toml::from_str(text).map_err(|e| ConfigError::new(format!("{label}: {e}")))?;
    let sweeps = match base.remove("sweep") {
        None => Vec::new(),
        Some(Value::Array(a)) => a
            .into_iter()
            .enumerate()
            .map(|(i, v)| match v {
                Value::Table(t) => Ok(t),
                _ => Err(ConfigError::new(format!("{label}: sweep entry {} is not a table", i + 1))),
            })
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err(ConfigError::new(format!("{label}: `sweep` must be an array of tables ([[sweep]])"))),
    };
    let output: RawOutput = take(&base, "output").map_err(|e| ConfigError::new(format!("{label}: {e}")))?;
    let base_name = base
        .get("name")
        .and_then(|v| v.as_str())
        .unwrap_or(label)
        .to_string();
    let tables: Vec<(String, Table)> = if sweeps.is_empty() {
        vec![(base_name, base.clone())]
    } else {
        sweeps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if s.contains_key("output") {
                    return Err(ConfigError::new(format!("{label}: sweep entry {} may not set [output]", i + 1)));
                }
                let mut t = base.clone();
                merge(&mut t, s);
                let name = s
                    .get("name")
                    .and_then(|v| v.as_str())
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("{base_name}#{}", i + 1));
                Ok((name, t))
            })
            .collect::<Result<_, _>>()?
    };
    let experiments = tables
        .into_iter()
        .map(|(name, t)| {
            build_experiment(&t, name.clone(), seed_override).map_err(|e| ConfigError {
                message: format!("{name}: {}", e.message),
                ..e
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if output.svg.is_some() {
        let m = experiments[0].mode;
        if !m.plottable() || experiments.iter().any(|e| e.mode != m) {
            return Err(ConfigError::new(format!(
                "{label}: svg output needs every experiment in one of the modes csc-convex, nml-bound, regret-scan or grow-sandwich"
            )));
        }
    }
    Ok(Plan {
        experiments,
        csv: output.csv,
        svg: output.svg,
    })
}

pub fn load_plan(path: &Path, seed_override: Option<u64>) -> Result<Plan, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
    let label = path.file_stem().map_or("config".into(), |s| s.to_string_lossy().into_owned());
    parse_plan(&text, &label, seed_override)
}

/// `EVGROW_SEED`, when set.
pub fn seed_from_env() -> Result<Option<u64>, ConfigError> {
    match std::env::var("EVGROW_SEED") {
        Err(_) => Ok(None),
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| ConfigError::new(format!("EVGROW_SEED must be a nonnegative integer, got `{s}`"))),
    }
}
