//! JSON scenario configs with dotted-path overrides.

use serde::Deserialize;
use serde_json::Value;
use std::path::Path;

use uncert_core::groundstate::{default_t_grid, log_grid, Scenario};
use uncert_core::metrics::{Exponent, Metric, MetricSpec};
use uncert_core::Group;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    pub group: Option<String>,
    pub metric_q: Option<MetricConfig>,
    pub metric_p: Option<MetricConfig>,
    pub t_grid: Option<TGridConfig>,
    pub seed: Option<u64>,
    pub out_dir: Option<String>,
    pub solver: Option<SolverConfig>,
    pub constant: Option<ConstantConfig>,
    pub mur_check: Option<MurConfig>,
    pub clone: Option<CloneConfig>,
    pub meanfield: Option<MeanfieldConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub name: String,
    pub exponent: ExponentSpec,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ExponentSpec {
    Number(f64),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum TGridConfig {
    Log { lo: f64, hi: f64, points: usize },
    List { values: Vec<f64> },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub line_points: Option<usize>,
    pub line_half_width: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantConfig {
    pub alpha: ExponentSpec,
    pub beta: ExponentSpec,
    pub n: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MurConfig {
    pub samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloneConfig {
    pub n: usize,
    pub steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldConfig {
    pub alpha: f64,
    pub beta: f64,
    pub n_list: Vec<usize>,
}

/// Load the config file, apply `--set path=value` overrides onto the JSON
/// tree, then deserialize.
pub fn load(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut tree: Value =
        serde_json::from_str(&text).map_err(|e| format!("config is not valid JSON: {e}"))?;
    for item in overrides {
        apply_override(&mut tree, item)?;
    }
    let cfg: ScenarioConfig =
        serde_json::from_value(tree).map_err(|e| format!("bad config: {e}"))?;
    if cfg.schema != SCHEMA_VERSION {
        return Err(format!(
            "unsupported schema {} (expected {SCHEMA_VERSION})",
            cfg.schema
        ));
    }
    Ok(cfg)
}

fn apply_override(tree: &mut Value, item: &str) -> Result<(), String> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| format!("override '{item}' is not PATH=VALUE"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = tree;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| format!("override path '{path}' crosses a non-object"))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("paths have at least one key");
}

pub fn parse_group(spec: &str) -> Result<Group, String> {
    let parts: Vec<&str> = spec.split('*').collect();
    let mut groups = Vec::with_capacity(parts.len());
    for part in parts {
        groups.push(parse_single_group(part.trim())?);
    }
    if groups.len() == 1 {
        Ok(groups.pop().expect("nonempty"))
    } else {
        Group::product(groups).map_err(|e| e.to_string())
    }
}

fn parse_single_group(spec: &str) -> Result<Group, String> {
    let toks: Vec<&str> = spec.split(':').collect();
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("bad integer '{s}' in group spec '{spec}'"))
    };
    let built = match toks.as_slice() {
        ["cyclic", d] => Group::cyclic(parse_usize(d)?),
        ["bits", n] => Group::bits(parse_usize(n)?),
        ["circle", m] => Group::discretized_circle(parse_usize(m)?),
        ["line", n, l] => {
            let half: f64 = l
                .parse()
                .map_err(|_| format!("bad half-width '{l}' in group spec '{spec}'"))?;
            Group::discretized_line(parse_usize(n)?, half)
        }
        ["zint", n] => Group::truncated_integers(parse_usize(n)? as i64),
        ["zint", n, m] => {
            Group::truncated_integers_with_dual(parse_usize(n)? as i64, parse_usize(m)?)
        }
        _ => {
            return Err(format!(
                "unknown group spec '{spec}' (expected cyclic:d, bits:n, circle:m, \
                 line:n:L, zint:n[:m], or products joined by '*')"
            ))
        }
    };
    built.map_err(|e| e.to_string())
}

pub fn parse_exponent(spec: &ExponentSpec) -> Result<Exponent, String> {
    match spec {
        ExponentSpec::Number(a) => Exponent::finite(*a).map_err(|e| e.to_string()),
        ExponentSpec::Word(w) => match w.to_ascii_lowercase().as_str() {
            "inf" | "infinity" => Ok(Exponent::Infinity),
            _ => Err(format!("unknown exponent '{w}' (number or \"inf\")")),
        },
    }
}

pub fn parse_metric(cfg: &MetricConfig) -> Result<MetricSpec, String> {
    let metric = match cfg.name.to_ascii_lowercase().as_str() {
        "discrete" => Metric::Discrete,
        "absolute" => Metric::Absolute,
        "cyclic_absolute" | "cyclic-absolute" => Metric::CyclicAbsolute,
        "arc" => Metric::Arc,
        "chordal" => Metric::Chordal,
        "hamming" | "hamming_per_site" => Metric::HammingPerSite,
        "euclidean" => Metric::Euclidean,
        other => return Err(format!("unknown metric '{other}'")),
    };
    Ok(MetricSpec::new(metric, parse_exponent(&cfg.exponent)?))
}

pub fn scenario(cfg: &ScenarioConfig) -> Result<Scenario, String> {
    let group_spec = cfg
        .group
        .as_deref()
        .ok_or_else(|| "config needs a 'group' field".to_string())?;
    let group = parse_group(group_spec)?;
    let mq = cfg
        .metric_q
        .as_ref()
        .ok_or_else(|| "config needs 'metric_q'".to_string())?;
    let mp = cfg
        .metric_p
        .as_ref()
        .ok_or_else(|| "config needs 'metric_p'".to_string())?;
    Scenario::new(group, parse_metric(mq)?, parse_metric(mp)?).map_err(|e| e.to_string())
}

pub fn t_grid(cfg: &ScenarioConfig) -> Result<Vec<f64>, String> {
    match &cfg.t_grid {
        None => Ok(default_t_grid()),
        Some(TGridConfig::Log { lo, hi, points }) => {
            if !(*lo > 0.0 && hi > lo && *points >= 2) {
                return Err(format!("bad t grid: lo={lo} hi={hi} points={points}"));
            }
            Ok(log_grid(*lo, *hi, *points))
        }
        Some(TGridConfig::List { values }) => {
            if values.is_empty() {
                return Err("empty t grid".to_string());
            }
            if values.iter().any(|t| !t.is_finite() || *t <= 0.0) {
                return Err("t grid values must be positive and finite".to_string());
            }
            Ok(values.clone())
        }
    }
}
