//! Run configuration.
//!
//! Configs are TOML (`key = value` with sections) or JSON. Every key can be
//! overridden with a dotted `section.key=value` pair; the value is parsed as
//! a TOML value and falls back to a plain string.
//!
//! ```toml
//! seed = 7
//! strategy = "epos"
//!
//! [topology]
//! kind = "ER"
//! nodes = 200
//!
//! [epos]
//! lambda = 0.5
//! hop_limit = "inf"
//!
//! [grid]
//! strategies = ["epos", "first-fit"]
//! hop_limits = [1, 3, "inf"]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::costmodel::{CostParams, VarianceMetric};
use crate::epos::EposParams;
use crate::error::{Error, Result};
use crate::plangen::PlanGenParams;
use crate::topology::{CapacityConfig, HopLimit, TopologyConfig, TopologyKind};
use crate::workload::{
    DeadlineTable, IngressDistribution, ProfileSource, SyntheticProfiles,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Cloud,
    FirstFit,
    Epos,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Cloud => "cloud",
            Strategy::FirstFit => "first-fit",
            Strategy::Epos => "epos",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cloud" => Ok(Strategy::Cloud),
            "first-fit" | "firstfit" | "first_fit" => Ok(Strategy::FirstFit),
            "epos" | "epos-fog" => Ok(Strategy::Epos),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkloadSourceKind {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadConfig {
    pub source: WorkloadSourceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<PathBuf>,
    pub synthetic: SyntheticProfiles,
    /// Profile indices to simulate, one round each, in order.
    pub profiles: Vec<usize>,
    pub duration_ms: f64,
    pub distribution: IngressDistribution,
    pub deadlines: DeadlineTable,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            source: WorkloadSourceKind::Synthetic,
            csv_path: None,
            synthetic: SyntheticProfiles::default(),
            profiles: vec![0, 1, 2, 3, 4],
            duration_ms: 300_000.0,
            distribution: IngressDistribution::Rand,
            deadlines: DeadlineTable::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EposConfig {
    pub lambda: f64,
    pub plan_count: usize,
    pub iterations: usize,
    pub fanout: usize,
    pub hop_limit: HopLimit,
    pub metric: VarianceMetric,
    pub retry_next_host: bool,
}

impl Default for EposConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            plan_count: 20,
            iterations: 40,
            fanout: 2,
            hop_limit: HopLimit::Hops(3),
            metric: VarianceMetric::Overall,
            retry_next_host: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    /// Let First Fit place a request on its own ingress node.
    pub first_fit_self_host: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            first_fit_self_host: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    /// Rounds an unhosted request is retried before it is dropped.
    pub max_carry_rounds: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { max_carry_rounds: 3 }
    }
}

/// Cross product run by the `grid` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub strategies: Vec<Strategy>,
    pub topologies: Vec<TopologyKind>,
    pub nodes: Vec<usize>,
    pub hop_limits: Vec<HopLimit>,
    pub lambdas: Vec<f64>,
    pub distributions: Vec<IngressDistribution>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            strategies: vec![Strategy::Cloud, Strategy::FirstFit, Strategy::Epos],
            topologies: vec![TopologyKind::BA, TopologyKind::WS, TopologyKind::ER],
            nodes: vec![200, 400],
            hop_limits: vec![HopLimit::Hops(1), HopLimit::Hops(3), HopLimit::Unlimited],
            lambdas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            distributions: vec![IngressDistribution::Rand, IngressDistribution::Beta],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub strategy: Strategy,
    pub topology: TopologyConfig,
    pub capacity: CapacityConfig,
    pub workload: WorkloadConfig,
    pub epos: EposConfig,
    pub baselines: BaselineConfig,
    pub cost: CostParams,
    pub engine: EngineConfig,
    pub grid: GridConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            strategy: Strategy::Epos,
            topology: TopologyConfig::default(),
            capacity: CapacityConfig::default(),
            workload: WorkloadConfig::default(),
            epos: EposConfig::default(),
            baselines: BaselineConfig::default(),
            cost: CostParams::default(),
            engine: EngineConfig::default(),
            grid: GridConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

fn parse_value(text: &str, format: ConfigFormat) -> Result<Value> {
    match format {
        ConfigFormat::Json => Ok(serde_json::from_str(text)?),
        ConfigFormat::Toml => toml::from_str(text).map_err(|e| Error::Config(e.to_string())),
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string (so `kind=ER` works without quotes).
fn parse_override_value(raw: &str) -> Value {
    #[derive(Deserialize)]
    struct Wrap {
        v: Value,
    }
    match toml::from_str::<Wrap>(&format!("v = {raw}")) {
        // bare `inf`/`nan` are TOML floats but JSON cannot hold them
        Ok(w) if !w.v.is_null() => w.v,
        _ => Value::String(raw.to_string()),
    }
}

fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("invalid override key `{key}`")));
    }
    let mut cur = root;
    for part in &parts[..parts.len() - 1] {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("`{key}` does not name a config section")))?;
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = cur
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("`{key}` does not name a config section")))?;
    obj.insert(
        parts[parts.len() - 1].to_string(),
        parse_override_value(raw.trim()),
    );
    Ok(())
}

impl RunConfig {
    pub fn from_str_with(text: &str, format: ConfigFormat, overrides: &[String]) -> Result<Self> {
        let mut value = parse_value(text, format)?;
        if value.is_null() {
            value = Value::Object(Default::default());
        }
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: RunConfig =
            serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_str_with(text, ConfigFormat::Toml, &[])
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str_with(&text, ConfigFormat::from_path(path), overrides)
    }

    /// Defaults with overrides applied.
    pub fn with_overrides(overrides: &[String]) -> Result<Self> {
        Self::from_str_with("", ConfigFormat::Toml, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn profile_source(&self) -> Result<ProfileSource> {
        match self.workload.source {
            WorkloadSourceKind::Synthetic => Ok(ProfileSource::Synthetic {
                params: self.workload.synthetic.clone(),
                seed: self.seed,
            }),
            WorkloadSourceKind::Csv => self
                .workload
                .csv_path
                .clone()
                .map(ProfileSource::Csv)
                .ok_or_else(|| Error::Config("workload.csv_path is required for csv".into())),
        }
    }

    pub fn epos_params(&self) -> EposParams {
        EposParams {
            lambda: self.epos.lambda,
            iterations: self.epos.iterations,
            metric: self.epos.metric,
        }
    }

    pub fn plan_params(&self) -> PlanGenParams {
        PlanGenParams {
            cost: self.cost,
            retry_next_host: self.epos.retry_next_host,
        }
    }

    /// Checks every parameter that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        self.topology.validate().map_err(to_config)?;
        self.capacity.validate()?;
        self.cost.validate()?;
        self.workload.deadlines.validate()?;
        if self.workload.profiles.is_empty() {
            return Err(Error::Config("workload.profiles is empty".into()));
        }
        if !(self.workload.duration_ms > 0.0 && self.workload.duration_ms.is_finite()) {
            return Err(Error::Config("workload.duration_ms must be positive".into()));
        }
        let source = self.profile_source()?;
        if let ProfileSource::Synthetic { params, .. } = &source {
            if let Some(&p) = self.workload.profiles.iter().find(|&&p| p >= params.count) {
                return Err(Error::Config(format!(
                    "profile {p} out of range for {} synthetic profiles",
                    params.count
                )));
            }
        }
        let e = &self.epos;
        if !(0.0..=1.0).contains(&e.lambda) {
            return Err(Error::Config(format!("epos.lambda must lie in [0,1], got {}", e.lambda)));
        }
        if e.plan_count == 0 {
            return Err(Error::Config("epos.plan_count must be positive".into()));
        }
        if e.fanout == 0 || e.fanout > 16 {
            return Err(Error::Config("epos.fanout must lie in [1,16]".into()));
        }
        Ok(())
    }

    /// Checks the grid section on top of [`Self::validate`].
    pub fn validate_grid(&self) -> Result<()> {
        self.validate()?;
        let g = &self.grid;
        if g.strategies.is_empty() {
            return Err(Error::Config("grid.strategies is empty".into()));
        }
        if g.topologies.is_empty()
            || g.nodes.is_empty()
            || g.hop_limits.is_empty()
            || g.lambdas.is_empty()
            || g.distributions.is_empty()
        {
            return Err(Error::Config("every grid axis needs at least one value".into()));
        }
        for cell in self.expand_grid() {
            cell.validate()?;
        }
        Ok(())
    }

    /// One config per (topology, N, hop limit, lambda, distribution) cell;
    /// strategies are paired within a cell.
    pub fn expand_grid(&self) -> Vec<RunConfig> {
        let g = &self.grid;
        let mut out = Vec::new();
        for &kind in &g.topologies {
            for &n in &g.nodes {
                for &dist in &g.distributions {
                    for &h in &g.hop_limits {
                        for &lambda in &g.lambdas {
                            let mut c = self.clone();
                            c.topology.kind = kind;
                            c.topology.nodes = n;
                            c.workload.distribution = dist;
                            c.epos.hop_limit = h;
                            c.epos.lambda = lambda;
                            out.push(c);
                        }
                    }
                }
            }
        }
        out
    }

    /// Short identifier of the grid coordinates of this config.
    pub fn cell_key(&self) -> String {
        format!(
            "{}_n{}_{}_h{}_l{}",
            self.topology.kind,
            self.topology.nodes,
            self.workload.distribution,
            self.epos.hop_limit,
            self.epos.lambda
        )
    }
}

fn to_config(e: Error) -> Error {
    match e {
        Error::Parameter(m) => Error::Config(m),
        other => other,
    }
}
