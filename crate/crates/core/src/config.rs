//! TOML configuration for networks and experiments.
//!
//! Two document shapes are understood: a *network* file describing one
//! [`NetworkSpec`], and an *experiment* file that embeds a network under
//! `[network]` and adds the reference truncation, run lengths, thresholds,
//! and the workload arms to push through it.
//!
//! Workloads are specified by family and natural parameters and are then
//! rescaled to unit mean (shape quantities such as the coefficient of
//! variation are preserved); the completion rates of the network carry all
//! the scale. Parsed networks are validated structurally before being
//! returned, so a config that reaches the caller describes a well-formed
//! model.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::dist::{DistError, Family, Workload};
use crate::harness::{ExperimentArm, ExperimentPlan};
use crate::model::{
    AdmissibleSet, BalanceFunction, CapacityConstraint, Discipline, LossRates, ModelError,
    NetworkSpec, RateModel, RoutingMatrix, SingleClassRates, State, TabulatedRates, WhittleRates,
};

/// Box side used when probing a parsed network for convention violations.
const VALIDATION_PROBE_CAP: u32 = 4;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("could not read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Syntax or schema problem; the message carries line/column spans.
    #[error(transparent)]
    Parse(#[from] Box<toml::de::Error>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("balance must be \"one\" or a table with `factors`, got {0:?}")]
    UnknownBalance(String),
    #[error("network violates model conventions:\n{rendered}")]
    InvalidNetwork { rendered: String },
    #[error("experiment needs at least one arm")]
    NoArms,
    #[error("truncation lists {got} classes, the network has {expected}")]
    TruncationMismatch { got: usize, expected: usize },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RateTable {
    /// Explicit per-level values.
    List(Vec<f64>),
    /// The same value at every level up to the capacity.
    Constant { constant: f64, capacity: usize },
    /// `slope * level`, the infinite-server pattern, up to the capacity.
    Linear { slope: f64, capacity: usize },
}

impl RateTable {
    fn arrivals(self) -> Vec<f64> {
        match self {
            RateTable::List(v) => v,
            RateTable::Constant { constant, capacity } => vec![constant; capacity],
            // Arrival levels start at an empty system: slope * (n + 1)
            // would be arbitrary, so count from 1 occupant post-arrival.
            RateTable::Linear { slope, capacity } => {
                (0..capacity).map(|n| slope * (n + 1) as f64).collect()
            }
        }
    }

    fn services(self) -> Vec<f64> {
        match self {
            RateTable::List(v) => v,
            RateTable::Constant { constant, capacity } => vec![constant; capacity],
            RateTable::Linear { slope, capacity } => {
                (1..=capacity).map(|n| slope * n as f64).collect()
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BalanceConfig {
    Keyword(String),
    Geometric { factors: Vec<f64> },
}

impl BalanceConfig {
    fn build(self) -> Result<BalanceFunction, ConfigError> {
        match self {
            BalanceConfig::Keyword(k) if k == "one" => Ok(BalanceFunction::One),
            BalanceConfig::Keyword(k) => Err(ConfigError::UnknownBalance(k)),
            BalanceConfig::Geometric { factors } => Ok(BalanceFunction::Geometric { factors }),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ConstraintConfig {
    coefficients: Vec<f64>,
    limit: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AdmissibleConfig {
    Explicit { states: Vec<Vec<u32>> },
    Linear { constraints: Vec<ConstraintConfig> },
}

impl AdmissibleConfig {
    fn build(self) -> AdmissibleSet {
        match self {
            AdmissibleConfig::Explicit { states } => {
                AdmissibleSet::Explicit(states.into_iter().map(State::new).collect())
            }
            AdmissibleConfig::Linear { constraints } => AdmissibleSet::Linear(
                constraints
                    .into_iter()
                    .map(|c| CapacityConstraint { coefficients: c.coefficients, limit: c.limit })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct TableEntry {
    state: Vec<u32>,
    /// Row-major `(classes + 1) x (classes + 1)` rates, exterior first.
    rates: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum RatesConfig {
    #[serde(rename_all = "kebab-case")]
    SingleClass {
        arrivals: RateTable,
        services: RateTable,
    },
    #[serde(rename_all = "kebab-case")]
    Whittle {
        exterior_rate: f64,
        routing: Vec<Vec<f64>>,
        balance: BalanceConfig,
    },
    #[serde(rename_all = "kebab-case")]
    Loss {
        arrival_rates: Vec<f64>,
        service_rates: Vec<f64>,
        admissible: AdmissibleConfig,
    },
    #[serde(rename_all = "kebab-case")]
    Tabulated {
        entries: Vec<TableEntry>,
    },
}

impl RatesConfig {
    fn build(self, classes: usize) -> Result<RateModel, ConfigError> {
        Ok(match self {
            RatesConfig::SingleClass { arrivals, services } => {
                RateModel::SingleClass(SingleClassRates {
                    arrivals: arrivals.arrivals(),
                    services: services.services(),
                })
            }
            RatesConfig::Whittle { exterior_rate, routing, balance } => {
                RateModel::Whittle(WhittleRates {
                    balance: balance.build()?,
                    routing: RoutingMatrix::new(routing),
                    exterior_rate,
                })
            }
            RatesConfig::Loss { arrival_rates, service_rates, admissible } => {
                RateModel::Loss(LossRates {
                    admissible: admissible.build(),
                    arrival_rates,
                    service_rates,
                })
            }
            RatesConfig::Tabulated { entries } => {
                let mut table = BTreeMap::new();
                for entry in entries {
                    table.insert(State::new(entry.state), entry.rates);
                }
                RateModel::Tabulated(TabulatedRates { classes, table })
            }
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct NetworkConfig {
    classes: usize,
    discipline: Discipline,
    rates: RatesConfig,
    workloads: Vec<Family>,
}

impl NetworkConfig {
    fn build(self) -> Result<NetworkSpec, ConfigError> {
        let workloads = self
            .workloads
            .into_iter()
            .map(Workload::unit)
            .collect::<Result<Vec<_>, DistError>>()?;
        let rates = self.rates.build(self.classes)?;
        let spec = NetworkSpec::new(self.classes, rates, self.discipline, workloads)?;
        let violations = spec.validate(&spec.default_probes(VALIDATION_PROBE_CAP));
        if !violations.is_empty() {
            let rendered = violations
                .iter()
                .map(|v| format!("  - {v}"))
                .collect::<Vec<_>>()
                .join("\n");
            return Err(ConfigError::InvalidNetwork { rendered });
        }
        Ok(spec)
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ArmConfig {
    name: String,
    workloads: Vec<Family>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ExperimentConfig {
    name: String,
    truncation: Vec<u32>,
    seed: Option<u64>,
    events: Option<u64>,
    min_events: Option<u64>,
    tv_max: Option<f64>,
    snapshot_interval: Option<u64>,
    profile_interval: Option<u64>,
    network: NetworkConfig,
    #[serde(default)]
    arms: Vec<ArmConfig>,
}

/// Parse a network document.
pub fn parse_network(text: &str) -> Result<NetworkSpec, ConfigError> {
    let config: NetworkConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(Box::new(e)))?;
    config.build()
}

/// Parse a network from either document shape. A bare network document is
/// taken as is; an experiment document (recognized by its `network` table)
/// contributes its embedded baseline network, arms ignored. This lets the
/// solver-style commands run straight off an experiment file instead of
/// forcing the network block to be duplicated into a second document.
pub fn parse_baseline_network(text: &str) -> Result<NetworkSpec, ConfigError> {
    let probe: toml::Value = toml::from_str(text).map_err(|e| ConfigError::Parse(Box::new(e)))?;
    if probe.get("network").is_none() {
        return parse_network(text);
    }
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(Box::new(e)))?;
    config.network.build()
}

/// Parse an experiment document.
pub fn parse_experiment(text: &str) -> Result<ExperimentPlan, ConfigError> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(Box::new(e)))?;
    if config.arms.is_empty() {
        return Err(ConfigError::NoArms);
    }
    let baseline = config.network.build()?;
    if config.truncation.len() != baseline.classes() {
        return Err(ConfigError::TruncationMismatch {
            got: config.truncation.len(),
            expected: baseline.classes(),
        });
    }
    let arms = config
        .arms
        .into_iter()
        .map(|arm| {
            let workloads = arm
                .workloads
                .into_iter()
                .map(Workload::unit)
                .collect::<Result<Vec<_>, DistError>>()?;
            // Arms must still describe the same network; reject mismatched
            // workload lists here rather than at run time.
            baseline.with_workloads(workloads.clone())?;
            Ok(ExperimentArm { name: arm.name, workloads })
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;

    let mut plan = ExperimentPlan::new(config.name, baseline, config.truncation, arms);
    if let Some(seed) = config.seed {
        plan.base_seed = seed;
    }
    if let Some(events) = config.events {
        plan.events = events;
        plan.min_events = events / 2;
    }
    if let Some(min_events) = config.min_events {
        plan.min_events = min_events;
    }
    if let Some(tv_max) = config.tv_max {
        plan.tv_max = tv_max;
    }
    if let Some(interval) = config.snapshot_interval {
        plan.snapshot_interval = interval;
    }
    if let Some(interval) = config.profile_interval {
        plan.profile_interval = interval;
    }
    Ok(plan)
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })
}

/// Read and parse a network file.
pub fn load_network(path: &Path) -> Result<NetworkSpec, ConfigError> {
    parse_network(&read(path)?)
}

/// Read and parse an experiment file.
pub fn load_experiment(path: &Path) -> Result<ExperimentPlan, ConfigError> {
    parse_experiment(&read(path)?)
}

/// Read a file holding either a network or an experiment document and
/// return the network it describes; see [`parse_baseline_network`].
pub fn load_baseline_network(path: &Path) -> Result<NetworkSpec, ConfigError> {
    parse_baseline_network(&read(path)?)
}
