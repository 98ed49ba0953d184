//! Scenario files: JSON with a network section, seeds, optional SINR
//! targets, the experiment name and solver tolerances. Every scalar power
//! quantity may be given in dB through a `_db` suffixed key.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::network::NetworkConfig;

/// Seeds used when a scenario lists none.
pub const DEFAULT_SEED_COUNT: u64 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Powermin,
    Rateopt,
    Mld,
    UgdAlloc,
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Powermin,
        Experiment::Rateopt,
        Experiment::Mld,
        Experiment::UgdAlloc,
        Experiment::Fig1,
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Fig5,
        Experiment::Fig6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Powermin => "powermin",
            Experiment::Rateopt => "rateopt",
            Experiment::Mld => "mld",
            Experiment::UgdAlloc => "ugd_alloc",
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Fig6 => "fig6",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == key)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub bisection_delta: f64,
    pub conv_eps: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Allocation round cap; `None` lets the experiment pick its default.
    pub max_rounds: Option<usize>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            bisection_delta: 1e-3,
            conv_eps: 1e-9,
            max_outer: 2000,
            max_inner: 500,
            max_rounds: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub network: NetworkConfig,
    pub seeds: Vec<u64>,
    pub gamma_override: Option<Vec<f64>>,
    pub experiment: Option<Experiment>,
    pub tolerances: Tolerances,
}

/// A number or a list; a number is repeated to the required length.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Values {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    ms: usize,
    mp: usize,
    ns: usize,
    np: Option<usize>,
    sigma_s: Option<Values>,
    sigma_s_db: Option<Values>,
    alpha: Option<Values>,
    rho: Option<Values>,
    beta: Option<Values>,
    beta_db: Option<Values>,
    p0: Option<f64>,
    p0_db: Option<f64>,
    primary_power: Option<f64>,
    primary_power_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    bisection_delta: Option<f64>,
    conv_eps: Option<f64>,
    max_outer: Option<usize>,
    max_inner: Option<usize>,
    max_rounds: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    network: RawNetwork,
    seeds: Option<Vec<u64>>,
    num_seeds: Option<u64>,
    gamma_override: Option<Values>,
    gamma_override_db: Option<Values>,
    experiment: Option<Experiment>,
    #[serde(default)]
    tolerances: RawTolerances,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn either<T>(field: &str, linear: Option<T>, db: Option<T>) -> Result<Option<(T, bool)>, ScenarioError> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(ScenarioError::Field {
            field: field.to_string(),
            message: format!("give either `{field}` or `{field}_db`, not both"),
        }),
        (Some(v), None) => Ok(Some((v, false))),
        (None, Some(v)) => Ok(Some((v, true))),
        (None, None) => Ok(None),
    }
}

fn expand(field: &str, values: Values, len: usize, db: bool) -> Result<Vec<f64>, ScenarioError> {
    let v = match values {
        Values::Scalar(x) => vec![x; len],
        Values::List(v) if v.len() == len => v,
        Values::List(v) => {
            return Err(ScenarioError::Field {
                field: field.to_string(),
                message: format!("expected {len} entries, found {}", v.len()),
            })
        }
    };
    Ok(if db { v.into_iter().map(db_to_linear).collect() } else { v })
}

fn vector(field: &str, linear: Option<Values>, db: Option<Values>, len: usize, default: f64) -> Result<Vec<f64>, ScenarioError> {
    match either(field, linear, db)? {
        Some((v, is_db)) => expand(field, v, len, is_db),
        None => Ok(vec![default; len]),
    }
}

fn scalar(field: &str, linear: Option<f64>, db: Option<f64>, default: f64) -> Result<f64, ScenarioError> {
    Ok(match either(field, linear, db)? {
        Some((v, true)) => db_to_linear(v),
        Some((v, false)) => v,
        None => default,
    })
}

/// Parses and validates scenario text.
pub fn parse_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let n = raw.network;
    let network = NetworkConfig {
        ms: n.ms,
        mp: n.mp,
        ns: n.ns,
        np: n.np.unwrap_or(n.ns),
        sigma_s: vector("sigma_s", n.sigma_s, n.sigma_s_db, n.ms, 1.0)?,
        alpha: vector("alpha", n.alpha, None, n.ms, 1.0)?,
        rho: vector("rho", n.rho, None, n.ms, 1.0)?,
        beta: vector("beta", n.beta, n.beta_db, n.mp, 5.0)?,
        p0: scalar("p0", n.p0, n.p0_db, 100.0)?,
        primary_power: scalar("primary_power", n.primary_power, n.primary_power_db, 1.0)?,
    };
    let seeds = match (raw.seeds, raw.num_seeds) {
        (Some(_), Some(_)) => {
            return Err(ScenarioError::Field {
                field: "seeds".into(),
                message: "give either `seeds` or `num_seeds`, not both".into(),
            })
        }
        (Some(s), None) => s,
        (None, Some(k)) => (0..k).collect(),
        (None, None) => (0..DEFAULT_SEED_COUNT).collect(),
    };
    let gamma_override = match either("gamma_override", raw.gamma_override, raw.gamma_override_db)? {
        Some((v, is_db)) => Some(expand("gamma_override", v, n.ms, is_db)?),
        None => None,
    };
    let d = Tolerances::default();
    let t = raw.tolerances;
    let scenario = Scenario {
        network,
        seeds,
        gamma_override,
        experiment: raw.experiment,
        tolerances: Tolerances {
            bisection_delta: t.bisection_delta.unwrap_or(d.bisection_delta),
            conv_eps: t.conv_eps.unwrap_or(d.conv_eps),
            max_outer: t.max_outer.unwrap_or(d.max_outer),
            max_inner: t.max_inner.unwrap_or(d.max_inner),
            max_rounds: t.max_rounds,
        },
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}

impl Scenario {
    /// Reports every violation at once.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut problems = Vec::new();
        if let Err(crate::error::NetworkError::InvalidConfig(p)) = self.network.validate() {
            problems.extend(p);
        }
        if self.seeds.is_empty() {
            problems.push("at least one seed is required".into());
        }
        if let Some(g) = &self.gamma_override {
            for (k, &x) in g.iter().enumerate() {
                if !(x > 0.0) || !x.is_finite() {
                    problems.push(format!("gamma_override[{k}] = {x} must be positive and finite"));
                }
            }
        }
        let t = &self.tolerances;
        for (name, v) in [("bisection_delta", t.bisection_delta), ("conv_eps", t.conv_eps)] {
            if !(v > 0.0) || !v.is_finite() {
                problems.push(format!("{name} = {v} must be positive and finite"));
            }
        }
        for (name, v) in [("max_outer", t.max_outer), ("max_inner", t.max_inner), ("max_rounds", t.max_rounds.unwrap_or(1))] {
            if v == 0 {
                problems.push(format!("{name} must be at least 1"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Validation(problems))
        }
    }
}
