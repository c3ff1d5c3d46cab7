//! Scenario files: TOML text with `key = value` pairs and sections.
//!
//! Three layouts are accepted by [`load_scenarios`]:
//! - a single scenario at the top level;
//! - a base scenario plus `[[variants]]` tables, each merged over the base;
//! - a list of complete `[[run]]` tables (what the sidecar files contain).

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::channel::{ChannelOptions, FiberSpec};
use crate::error::{Error, Result};
use crate::estimator::ReconstructionOptions;
use crate::metrics::MetricKind;
use crate::povm::{product_povm, sic_povm, PovmSet};
use crate::states::SampleKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Qubit,
    Qutrit,
    TwoQubit,
    TwoQutrit,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Qubit => "qubit",
            System::Qutrit => "qutrit",
            System::TwoQubit => "two_qubit",
            System::TwoQutrit => "two_qutrit",
        }
    }

    pub fn local_dim(self) -> usize {
        match self {
            System::Qubit | System::TwoQubit => 2,
            System::Qutrit | System::TwoQutrit => 3,
        }
    }

    pub fn parties(self) -> usize {
        match self {
            System::Qubit | System::Qutrit => 1,
            System::TwoQubit | System::TwoQutrit => 2,
        }
    }

    pub fn dim(self) -> usize {
        self.local_dim().pow(self.parties() as u32)
    }

    pub fn povm(self) -> PovmSet {
        let local = sic_povm(self.local_dim()).expect("d is 2 or 3");
        if self.parties() == 2 {
            product_povm(&local, &local)
        } else {
            local
        }
    }
}

/// Fiber lengths in km: strictly increasing, finite, non-negative.
///
/// In files either an explicit list or `{ start, stop, step }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "Vec<f64>")]
pub struct LengthGrid(Vec<f64>);

#[derive(Deserialize)]
#[serde(untagged)]
enum GridSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl TryFrom<GridSpec> for LengthGrid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        match spec {
            GridSpec::List(v) => LengthGrid::new(v),
            GridSpec::Range { start, stop, step } => LengthGrid::range(start, stop, step),
        }
    }
}

impl From<LengthGrid> for Vec<f64> {
    fn from(g: LengthGrid) -> Self {
        g.0
    }
}

impl LengthGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("length grid is empty".into()));
        }
        if values.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Config(
                "lengths must be finite and non-negative".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("lengths must be strictly increasing".into()));
        }
        Ok(LengthGrid(values))
    }

    /// `start, start + step, ...` up to and including `stop` (to within 1e-9 steps).
    pub fn range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop >= start) {
            return Err(Error::Config(format!(
                "bad length range start={start} stop={stop} step={step}"
            )));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Self::new((0..n).map(|i| start + i as f64 * step).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberAxis {
    /// dB/km
    pub alpha: f64,
    pub lengths_km: LengthGrid,
}

impl FiberAxis {
    pub fn spec_at(&self, length: f64) -> Result<FiberSpec> {
        FiberSpec::new(self.alpha, length)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub system: System,
    /// Photons (or pairs) produced per measurement setting.
    #[serde(rename = "N")]
    pub produced: u64,
    pub sample: SampleKind,
    /// Use `n` evenly spaced states of the sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_limit: Option<usize>,
    pub metrics: Vec<MetricKind>,
    #[serde(with = "seed_repr")]
    pub seed: u64,
    pub fibers: Vec<FiberAxis>,
    #[serde(default)]
    pub channel: ChannelOptions,
    #[serde(default)]
    pub estimator: ReconstructionOptions,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| {
            Err(Error::Config(format!(
                "scenario {:?}: {msg}",
                self.scenario
            )))
        };
        if self.fibers.len() != self.system.parties() {
            return bad(format!(
                "system {} needs {} fiber(s), got {}",
                self.system.name(),
                self.system.parties(),
                self.fibers.len()
            ));
        }
        for f in &self.fibers {
            if !(f.alpha.is_finite() && f.alpha >= 0.0) {
                return bad(format!("alpha {} must be finite and non-negative", f.alpha));
            }
        }
        if self.sample.dim() != self.system.dim() {
            return bad(format!(
                "sample {} has dimension {}, system {} needs {}",
                self.sample.name(),
                self.sample.dim(),
                self.system.name(),
                self.system.dim()
            ));
        }
        if self.sample_limit == Some(0) {
            return bad("sample_limit must be positive".into());
        }
        if self.metrics.is_empty() {
            return bad("no metrics requested".into());
        }
        for m in &self.metrics {
            let ok = match m {
                MetricKind::Fidelity => true,
                MetricKind::Concurrence => self.system == System::TwoQubit,
                MetricKind::Negativity => self.system.parties() == 2,
            };
            if !ok {
                return bad(format!(
                    "metric {m} is not defined for {}",
                    self.system.name()
                ));
            }
        }
        self.estimator
            .validate()
            .map_err(|e| Error::Config(format!("scenario {:?}: {e}", self.scenario)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }
}

/// TOML integers are signed 64-bit, so seeds above `i64::MAX` are stored as
/// decimal strings. Both forms are accepted on input.
mod seed_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(i64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => {
                u64::try_from(v).map_err(|_| de::Error::custom("seed must be non-negative"))
            }
            Repr::Text(t) => t.trim().parse().map_err(|_| {
                de::Error::custom(format!("seed {t:?} is not a 64-bit unsigned integer"))
            }),
        }
    }
}

fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| Error::Config(e.to_string()))
}

/// Parses `KEY=VALUE`. The value is read as a TOML value when possible
/// (numbers, booleans, arrays, inline tables) and as a bare string otherwise.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {s:?} is not KEY=VALUE")))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override {s:?} has an empty key")));
    }
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Sets a dotted path such as `N`, `estimator.restarts` or `fibers.1.alpha`.
/// `alpha` and `lengths_km` without a prefix apply to every fiber.
pub fn apply_override(table: &mut Table, key: &str, value: Value) -> Result<()> {
    if key == "alpha" || key == "lengths_km" {
        let Some(Value::Array(fibers)) = table.get_mut("fibers") else {
            return Err(Error::Config(format!(
                "override {key}: no fibers to apply to"
            )));
        };
        for f in fibers {
            if let Value::Table(t) = f {
                t.insert(key.to_string(), value.clone());
            }
        }
        return Ok(());
    }
    let parts: Vec<&str> = key.split('.').collect();
    set_path(table, &parts, value).map_err(|msg| Error::Config(format!("override {key}: {msg}")))
}

fn set_path(table: &mut Table, parts: &[&str], value: Value) -> std::result::Result<(), String> {
    let (head, rest) = parts.split_first().ok_or("empty key")?;
    if rest.is_empty() {
        table.insert(head.to_string(), value);
        return Ok(());
    }
    let entry = table
        .entry(head.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    set_in_value(entry, rest, value)
}

fn set_in_value(
    target: &mut Value,
    parts: &[&str],
    value: Value,
) -> std::result::Result<(), String> {
    match target {
        Value::Table(t) => set_path(t, parts, value),
        Value::Array(items) => {
            let (head, rest) = parts.split_first().ok_or("empty key")?;
            let idx: usize = head
                .parse()
                .map_err(|_| format!("{head:?} is not an array index"))?;
            let len = items.len();
            let item = items
                .get_mut(idx)
                .ok_or_else(|| format!("index {idx} out of range (len {len})"))?;
            if rest.is_empty() {
                *item = value;
                Ok(())
            } else {
                set_in_value(item, rest, value)
            }
        }
        _ => Err(format!("cannot descend into {:?}", parts[0])),
    }
}

fn merge(base: &mut Table, overlay: &Table) {
    for (k, v) in overlay {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn finish(mut table: Table, overrides: &[(String, Value)]) -> Result<ScenarioConfig> {
    for (k, v) in overrides {
        apply_override(&mut table, k, v.clone())?;
    }
    let cfg: ScenarioConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a scenario file in any of the accepted layouts and applies the
/// overrides to every scenario it yields.
pub fn load_scenarios(text: &str, overrides: &[(String, Value)]) -> Result<Vec<ScenarioConfig>> {
    let mut table = parse_table(text)?;
    if let Some(list) = table.remove("run") {
        if !table.is_empty() {
            let extra: Vec<&String> = table.keys().collect();
            // provenance keys written next to the scenario list
            if extra.iter().any(|k| k.as_str() != "code_version") {
                return Err(Error::Config(format!(
                    "unexpected top-level keys next to [[run]]: {extra:?}"
                )));
            }
        }
        let Value::Array(items) = list else {
            return Err(Error::Config("`run` must be an array of tables".into()));
        };
        return items
            .into_iter()
            .map(|v| match v {
                Value::Table(t) => finish(t, overrides),
                _ => Err(Error::Config("`run` entries must be tables".into())),
            })
            .collect();
    }
    if let Some(variants) = table.remove("variants") {
        let Value::Array(items) = variants else {
            return Err(Error::Config(
                "`variants` must be an array of tables".into(),
            ));
        };
        return items
            .into_iter()
            .map(|v| {
                let Value::Table(overlay) = v else {
                    return Err(Error::Config("`variants` entries must be tables".into()));
                };
                let mut t = table.clone();
                merge(&mut t, &overlay);
                finish(t, overrides)
            })
            .collect();
    }
    Ok(vec![finish(table, overrides)?])
}

/// Single-scenario convenience wrapper.
pub fn load_scenario(text: &str, overrides: &[(String, Value)]) -> Result<ScenarioConfig> {
    let mut all = load_scenarios(text, overrides)?;
    if all.len() != 1 {
        return Err(Error::Config(format!(
            "expected one scenario, found {}",
            all.len()
        )));
    }
    Ok(all.remove(0))
}
