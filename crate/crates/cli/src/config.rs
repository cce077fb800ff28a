use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use qlm_core::dsl::{parse_index_pair, parse_metric, Expr, MetricSource};
use qlm_core::grid::{MAX_ORDER, MIN_ORDER};
use qlm_core::quasilocal::{Observer, RadiusLadder, Tolerance};
use serde::Deserialize;

/// Invalid or unreadable configuration; always names the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Minkowski,
    Schwarzschild,
    BoostedSchwarzschild,
    CustomDsl,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Minkowski => "minkowski",
            Scenario::Schwarzschild => "schwarzschild",
            Scenario::BoostedSchwarzschild => "boosted-schwarzschild",
            Scenario::CustomDsl => "custom-dsl",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Scenario::Minkowski,
            Scenario::Schwarzschild,
            Scenario::BoostedSchwarzschild,
            Scenario::CustomDsl,
        ]
        .into_iter()
        .find(|v| v.name() == s)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLadder {
    start: f64,
    ratio: f64,
    count: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    rel: Option<f64>,
    abs: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    mass: Option<f64>,
    beta: Option<f64>,
    radii: Option<Vec<f64>>,
    ladder: Option<RawLadder>,
    order: Option<i64>,
    phi_order: Option<i64>,
    observers: Option<Vec<Vec<f64>>>,
    out: Option<PathBuf>,
    tolerances: Option<RawTolerances>,
    metric: Option<toml::Table>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub beta: Option<f64>,
    pub mass: Option<f64>,
    pub order: Option<i64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub mass: f64,
    pub beta: f64,
    pub gamma: f64,
    pub ladder: RadiusLadder,
    pub order: usize,
    pub phi_order: usize,
    pub observers: Vec<Observer>,
    pub out: Option<PathBuf>,
    pub tolerance: Tolerance,
    pub metric: Option<MetricSource>,
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
    parse(&text, overrides)
}

pub fn parse(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let field = e
            .message()
            .split('`')
            .nth(1)
            .filter(|_| e.message().starts_with("unknown field"))
            .unwrap_or("config")
            .to_string();
        ConfigError::new(field, e.message().trim().to_string())
    })?;
    validate(raw, overrides)
}

fn finite(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(field, format!("must be finite, got {v}")))
    }
}

fn validate(raw: RawConfig, ov: &Overrides) -> Result<RunConfig, ConfigError> {
    let scenario_name = raw
        .scenario
        .ok_or_else(|| ConfigError::new("scenario", "missing"))?;
    let scenario = Scenario::parse(&scenario_name).ok_or_else(|| {
        ConfigError::new(
            "scenario",
            format!("unknown scenario `{scenario_name}` (minkowski | schwarzschild | boosted-schwarzschild | custom-dsl)"),
        )
    })?;

    let mass = finite("mass", ov.mass.or(raw.mass).unwrap_or(match scenario {
        Scenario::Minkowski | Scenario::CustomDsl => 0.0,
        _ => 1.0,
    }))?;
    if mass < 0.0 {
        return Err(ConfigError::new("mass", format!("must be non-negative, got {mass}")));
    }
    if scenario == Scenario::Minkowski && mass != 0.0 {
        return Err(ConfigError::new("mass", "minkowski scenario has no mass"));
    }

    let beta = finite("beta", ov.beta.or(raw.beta).unwrap_or(0.0))?;
    if beta.abs() >= 1.0 {
        return Err(ConfigError::new("beta", format!("|beta| must be < 1, got {beta}")));
    }
    if scenario == Scenario::Schwarzschild && beta != 0.0 {
        return Err(ConfigError::new("beta", "schwarzschild scenario is unboosted; use boosted-schwarzschild"));
    }
    let gamma = 1.0 / (1.0 - beta * beta).sqrt();

    let ladder = match (raw.radii, raw.ladder) {
        (Some(_), Some(_)) => return Err(ConfigError::new("radii", "give either `radii` or `[ladder]`, not both")),
        (Some(radii), None) => {
            if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
                return Err(ConfigError::new("radii", format!("radii must be positive, got {r}")));
            }
            if radii.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ConfigError::new("radii", "radii must be strictly increasing"));
            }
            RadiusLadder::new(radii).map_err(|e| ConfigError::new("radii", e.to_string()))?
        }
        (None, Some(l)) => {
            if !(l.start.is_finite() && l.start > 0.0) {
                return Err(ConfigError::new("ladder.start", format!("must be positive, got {}", l.start)));
            }
            if !(l.ratio.is_finite() && l.ratio > 1.0) {
                return Err(ConfigError::new("ladder.ratio", format!("must exceed 1, got {}", l.ratio)));
            }
            if l.count < 3 {
                return Err(ConfigError::new("ladder.count", format!("need at least 3 radii, got {}", l.count)));
            }
            RadiusLadder::geometric(l.start, l.ratio, l.count)
                .map_err(|e| ConfigError::new("ladder", e.to_string()))?
        }
        (None, None) => RadiusLadder::for_mass(mass),
    };
    if scenario != Scenario::Minkowski && scenario != Scenario::CustomDsl && ladder.radii()[0] <= mass / 2.0 {
        return Err(ConfigError::new("radii", format!("radii must exceed M/2 = {}", mass / 2.0)));
    }

    let order = ov.order.or(raw.order).unwrap_or(64);
    if !(MIN_ORDER as i64..=MAX_ORDER as i64).contains(&order) {
        return Err(ConfigError::new("order", format!("must lie in [{MIN_ORDER}, {MAX_ORDER}], got {order}")));
    }
    let phi_order = raw.phi_order.unwrap_or(32);
    if !(1..=4 * MAX_ORDER as i64).contains(&phi_order) {
        return Err(ConfigError::new("phi_order", format!("must lie in [1, {}], got {phi_order}", 4 * MAX_ORDER)));
    }

    let observers = raw
        .observers
        .unwrap_or_else(|| vec![vec![0.0; 3]])
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let field = format!("observers[{i}]");
            let a: [f64; 3] = a
                .try_into()
                .map_err(|v: Vec<f64>| ConfigError::new(&field, format!("need 3 components, got {}", v.len())))?;
            Observer::new(a).map_err(|e| ConfigError::new(&field, e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if observers.is_empty() {
        return Err(ConfigError::new("observers", "at least one observer is required"));
    }

    let mut tolerance = Tolerance::default();
    if let Some(t) = raw.tolerances {
        for (field, v, slot) in [
            ("tolerances.rel", t.rel, &mut tolerance.rel),
            ("tolerances.abs", t.abs, &mut tolerance.abs),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(ConfigError::new(field, format!("must be non-negative, got {v}")));
                }
                *slot = v;
            }
        }
    }

    let metric = match (scenario, raw.metric) {
        (Scenario::CustomDsl, Some(table)) => Some(metric_source(table)?),
        (Scenario::CustomDsl, None) => {
            return Err(ConfigError::new("metric", "custom-dsl scenario needs a [metric] section"))
        }
        (_, Some(_)) => return Err(ConfigError::new("metric", "only the custom-dsl scenario takes a [metric] section")),
        (_, None) => None,
    };

    Ok(RunConfig {
        scenario,
        mass,
        beta,
        gamma,
        ladder,
        order: order as usize,
        phi_order: phi_order as usize,
        observers,
        out: ov.out.clone().or(raw.out),
        tolerance,
        metric,
    })
}

fn metric_source(table: toml::Table) -> Result<MetricSource, ConfigError> {
    let mut src = MetricSource::new();
    let mut params = BTreeMap::new();
    for (key, value) in table {
        if key == "params" {
            let t = value
                .as_table()
                .ok_or_else(|| ConfigError::new("metric.params", "must be a table"))?;
            for (name, v) in t {
                let field = format!("metric.params.{name}");
                let v = v
                    .as_float()
                    .or_else(|| v.as_integer().map(|i| i as f64))
                    .ok_or_else(|| ConfigError::new(&field, "must be a number"))?;
                params.insert(name.clone(), finite(&field, v)?);
            }
            continue;
        }
        let field = format!("metric.{key}");
        let (a, b) = parse_index_pair(&key)
            .ok_or_else(|| ConfigError::new(&field, "expected a component key like \"(0,0)\""))?;
        let text = value
            .as_str()
            .ok_or_else(|| ConfigError::new(&field, "must be an expression string"))?;
        Expr::parse(text).map_err(|e| ConfigError::new(&field, e.to_string()))?;
        if src.components.insert((a, b), text.to_string()).is_some() {
            return Err(ConfigError::new(&field, "component given twice"));
        }
    }
    src.params = params;
    parse_metric(&src).map_err(|e| ConfigError::new("metric", e.to_string()))?;
    Ok(src)
}
