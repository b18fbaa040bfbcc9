//! Scenario files, result reports, and plan files: the artifact's entire
//! external surface. Scenarios are JSON, results are CSV with a fixed
//! column order and 6-decimal reals so runs diff cleanly.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::LMSolution;
use crate::design::{ObjectivePoint, SearchConfig, ServicePlan};
use crate::network::{Network, ValidationIssue};
use crate::pathgen::DemandContext;
use crate::scalar::Scalar;

/// Per-car tariff rates concretizing the fixed path costs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TariffTable<F: Scalar = f64> {
    /// CNY per car-km on rail.
    pub rail_per_km: F,
    /// Loading/unloading charge per car on rail.
    pub rail_handling: F,
    /// Charge per car handling event (transfer or block swap).
    pub rail_swap_charge: F,
    /// CNY per car-km on highway.
    pub highway_per_km: F,
}

impl<F: Scalar> TariffTable<F> {
    /// All-zero tariffs, handy in tests that only look at times.
    pub fn default_zero() -> Self {
        Self {
            rail_per_km: F::zero(),
            rail_handling: F::zero(),
            rail_swap_charge: F::zero(),
            highway_per_km: F::zero(),
        }
    }

    pub fn violations(&self) -> Vec<ValidationIssue> {
        let mut out = Vec::new();
        let fields = [
            ("rail_per_km", self.rail_per_km),
            ("rail_handling", self.rail_handling),
            ("rail_swap_charge", self.rail_swap_charge),
            ("highway_per_km", self.highway_per_km),
        ];
        for (name, value) in fields {
            if value < F::zero() {
                out.push(ValidationIssue {
                    path: format!("/tariffs/{name}"),
                    rule: "nonnegative-tariff".into(),
                    message: format!("tariff {name} must be >= 0"),
                });
            }
        }
        out
    }
}

pub const SCHEMA_VERSION: u32 = 1;

/// A complete problem instance as read from a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Scenario<F: Scalar = f64> {
    pub schema: u32,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    #[serde(flatten)]
    pub network: Network<F>,
    pub tariffs: TariffTable<F>,
    #[serde(default)]
    pub search: SearchConfig<F>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("{} validation violation(s); first: {}", .0.len(), .0[0])]
    Validation(Vec<ValidationIssue>),
}

impl ScenarioError {
    /// Exit-code class of the error: bad input data (2) vs. runtime failure (1).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, ScenarioError::Io { .. })
    }
}

impl<F: Scalar> Scenario<F> {
    /// Parses a scenario file and checks the structural schema rules, but
    /// does not run data validation (see [`Scenario::violations`]).
    pub fn from_path(path: &FsPath) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario<F> =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        if scenario.schema != SCHEMA_VERSION {
            return Err(ScenarioError::Schema {
                location: "/schema".into(),
                message: format!(
                    "unsupported schema version {}; expected {SCHEMA_VERSION}",
                    scenario.schema
                ),
            });
        }
        if scenario.network.stations.is_empty() {
            return Err(ScenarioError::Schema {
                location: "/stations".into(),
                message: "a scenario needs at least one station".into(),
            });
        }
        Ok(scenario)
    }

    /// Data validation issues of the network, tariffs and search config.
    pub fn violations(&self) -> Vec<ValidationIssue> {
        let mut issues = crate::network::validate_network(&self.network);
        issues.extend(self.tariffs.violations());
        if let crate::design::Scalarization::Weights(w1, w2) = self.search.scalarization {
            if w1 < F::zero() || w2 < F::zero() || w1 + w2 <= F::zero() {
                issues.push(ValidationIssue {
                    path: "/search/scalarization".into(),
                    rule: "valid-weights".into(),
                    message: "weights must be nonnegative with a positive sum".into(),
                });
            }
        }
        issues
    }

    /// Canonical JSON form with all defaults filled in; loading it again
    /// reproduces this scenario exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Loads a scenario and rejects it unless it is fully valid.
pub fn load_scenario<F: Scalar>(path: &FsPath) -> Result<Scenario<F>, ScenarioError> {
    let scenario = Scenario::from_path(path)?;
    let issues = scenario.violations();
    if issues.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Validation(issues))
    }
}

/// On-disk form of a fixed service plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub schema: u32,
    pub active: Vec<crate::network::ServiceId>,
}

pub fn load_plan(path: &FsPath) -> Result<ServicePlan, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    let file: PlanFile = serde_json::from_str(&text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.schema != SCHEMA_VERSION {
        return Err(ScenarioError::Schema {
            location: "/schema".into(),
            message: format!("unsupported plan schema version {}", file.schema),
        });
    }
    Ok(ServicePlan {
        active: file.active.into_iter().collect(),
    })
}

pub fn write_plan(path: &FsPath, plan: &ServicePlan) -> std::io::Result<()> {
    let file = PlanFile {
        schema: SCHEMA_VERSION,
        active: plan.active.iter().cloned().collect(),
    };
    fs::write(path, serde_json::to_string_pretty(&file).expect("plan serializes") + "\n")
}

fn fmt<F: Scalar>(x: F) -> String {
    format!("{x:.6}")
}

/// Writes `frontier.csv`: one row per point, sorted as given (the canonical
/// frontier order), with the derived profit column.
pub fn write_frontier_csv<F: Scalar>(
    path: &FsPath,
    points: &[ObjectivePoint<F>],
) -> std::io::Result<()> {
    let mut out = String::from("plan_id,z1,z2,z2_minus_z1\n");
    for (i, p) in points.iter().enumerate() {
        out.push_str(&format!(
            "plan-{i:03},{},{},{}\n",
            fmt(p.z1),
            fmt(p.z2),
            fmt(p.net_value())
        ));
    }
    fs::write(path, out)
}

/// Writes `assignment.csv` for one solved plan: one row per demand with the
/// chosen option's stations, time and costs.
pub fn write_assignment_csv<F: Scalar>(
    path: &FsPath,
    contexts: &[DemandContext<F>],
    lm: &LMSolution<F>,
) -> std::io::Result<()> {
    let mut out = String::from("s,t,F,mode,path_stations,t_l,c_l,C_rail,f_rail,P_rail\n");
    for (ctx, decision) in contexts.iter().zip(&lm.decisions) {
        let mode = match decision.mode {
            crate::assignment::ModeChoice::Rail => "rail",
            crate::assignment::ModeChoice::Highway => "highway",
            crate::assignment::ModeChoice::Split => "split",
        };
        let chosen = match decision.rail_path {
            Some(i) => &ctx.rail_paths[i],
            None => &ctx.highway,
        };
        let stations = chosen
            .stations
            .iter()
            .map(|s| s.0.as_str())
            .collect::<Vec<_>>()
            .join("-");
        out.push_str(&format!(
            "{},{},{},{mode},{stations},{},{},{},{},{}\n",
            ctx.demand.origin,
            ctx.demand.destination,
            fmt(ctx.demand.volume),
            fmt(chosen.travel_time),
            fmt(chosen.unit_cost),
            decision.rail_unit_cost.map(fmt).unwrap_or_default(),
            fmt(decision.rail_volume),
            decision.rail_probability.map(fmt).unwrap_or_default(),
        ));
    }
    fs::write(path, out)
}

/// Paths of the files a report run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub frontier: PathBuf,
    pub assignment: PathBuf,
    pub plan: PathBuf,
}

/// Writes the full report for a frontier: `frontier.csv`, plus
/// `assignment.csv` and `plan.json` for the selected point.
pub fn write_report<F: Scalar>(
    out_dir: &FsPath,
    points: &[ObjectivePoint<F>],
    selected: Option<(&ObjectivePoint<F>, &[DemandContext<F>])>,
) -> std::io::Result<ReportPaths> {
    fs::create_dir_all(out_dir)?;
    let paths = ReportPaths {
        frontier: out_dir.join("frontier.csv"),
        assignment: out_dir.join("assignment.csv"),
        plan: out_dir.join("plan.json"),
    };
    write_frontier_csv(&paths.frontier, points)?;
    match selected {
        Some((point, contexts)) => {
            write_assignment_csv(&paths.assignment, contexts, &point.lm)?;
            write_plan(&paths.plan, &point.plan)?;
        }
        None => {
            // headers-only outputs keep the file set stable
            let mut f = fs::File::create(&paths.assignment)?;
            writeln!(f, "s,t,F,mode,path_stations,t_l,c_l,C_rail,f_rail,P_rail")?;
            write_plan(&paths.plan, &ServicePlan::empty())?;
        }
    }
    Ok(paths)
}

/// Selects the reporting point of a frontier: the plan with the best net
/// value Z2 - Z1, ties to the canonical frontier order.
pub fn select_report_point<F: Scalar>(points: &[ObjectivePoint<F>]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        let better = match best {
            None => true,
            Some(j) => p.net_value() > points[j].net_value(),
        };
        if better {
            best = Some(i);
        }
    }
    best
}
