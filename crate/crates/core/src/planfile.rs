//! Plan file format.

/// Serializes [`crate::model::Time`] as `"n"` or `"n/d"`.
pub mod rational {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use crate::model::Time;

    pub fn serialize<S: Serializer>(t: &Time, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Time, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).ok_or_else(|| D::Error::custom(format!("bad rational `{text}`")))
    }

    pub fn parse(text: &str) -> Option<Time> {
        let text = text.trim();
        match text.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().ok()?;
                let d: i64 = d.trim().parse().ok()?;
                (d != 0).then(|| Time::new(n, d))
            }
            None => text.parse().ok().map(Time::from_integer),
        }
    }
}

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::io::{parse_mission, parse_robot, InputError};
use crate::ltl::{ltl_to_buchi, Alphabet, Formula};
use crate::model::{CostReport, PrefixSuffixRun, PropSet, RobotModel, Time};
use crate::optimal::{insert_traveling_states, optimal_run, PlanError, TeamPlan};
use crate::sync::{field_bound, sync_sequences, ExecutionModel, ExplainRecord, RobotExec, SyncError, SyncSchedule};
use crate::team::{construct_team_ts, state_bounds, TeamError};

pub const TOOL_VERSION: &str = concat!("teamsync ", env!("CARGO_PKG_VERSION"));

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inputs {
    pub robots: Vec<FileDigest>,
    pub mission: FileDigest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissionInfo {
    pub formula: String,
    pub optimizing: String,
    pub props: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamInfo {
    pub states: usize,
    pub edges: usize,
    /// Upper bound on the state count, decimal.
    pub state_bound: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedPosition {
    pub state: String,
    /// Nominal time the robot satisfies this position.
    #[serde(with = "rational")]
    pub time: Time,
    pub labels: Vec<String>,
    /// 1-based robot numbers.
    pub wait: Vec<usize>,
    pub notify: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedRobot {
    pub index: usize,
    pub name: String,
    #[serde(with = "rational")]
    pub rho_lower: Time,
    #[serde(with = "rational")]
    pub rho_upper: Time,
    /// Prefix positions followed by one suffix cycle.
    pub positions: Vec<PlannedPosition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncStats {
    pub emptiness_checks: usize,
    pub wait_edges: usize,
}

/// Everything `simulate` needs, as written by `plan`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanFile {
    pub tool_version: String,
    pub inputs: Inputs,
    pub mission: MissionInfo,
    pub team: TeamInfo,
    pub team_run: PrefixSuffixRun<String>,
    pub prefix_len: usize,
    pub cycle_len: usize,
    /// Nominal duration from each position to the next; the last entry
    /// wraps from the cycle end to the suffix start.
    pub hops: Vec<u64>,
    pub robots: Vec<PlannedRobot>,
    pub cost_report: CostReport,
    pub sync: SyncStats,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanFileError {
    #[error("malformed plan file: {0}")]
    Malformed(String),
    #[error("robot file `{name}` does not match the plan (digest {actual}, plan has {expected})")]
    DigestMismatch {
        name: String,
        expected: String,
        actual: String,
    },
    #[error("plan was made for {expected} robot files, got {actual}")]
    RobotCount { expected: usize, actual: usize },
}

impl PlanFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan file serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PlanFileError> {
        let p: PlanFile = serde_json::from_str(text).map_err(|e| PlanFileError::Malformed(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), PlanFileError> {
        let bad = |m: &str| Err(PlanFileError::Malformed(m.to_string()));
        let len = self.prefix_len + self.cycle_len;
        if self.prefix_len == 0 || self.cycle_len == 0 || self.robots.is_empty() {
            return bad("empty run");
        }
        if self.hops.len() != len || self.hops.contains(&0) {
            return bad("hops do not match the run length");
        }
        let m = self.robots.len();
        for r in &self.robots {
            if r.positions.len() != len {
                return bad("robot positions do not match the run length");
            }
            if !(r.rho_lower > Time::from_integer(0) && r.rho_lower <= r.rho_upper) {
                return bad("invalid deviation bounds");
            }
            if r.positions.iter().any(|p| p.wait.iter().chain(&p.notify).any(|&j| j == 0 || j > m || j == r.index)) {
                return bad("wait/notify sets name unknown robots");
            }
        }
        if self.robots.iter().enumerate().any(|(i, r)| r.index != i + 1) {
            return bad("robots out of order");
        }
        Ok(())
    }

    pub fn execution_model(&self) -> ExecutionModel {
        ExecutionModel {
            robots: self
                .robots
                .iter()
                .map(|r| RobotExec {
                    name: r.name.clone(),
                    states: r.positions.iter().map(|p| p.state.clone()).collect(),
                    labels: r.positions.iter().map(|p| p.labels.iter().cloned().collect()).collect(),
                    rho_lower: r.rho_lower,
                    rho_upper: r.rho_upper,
                })
                .collect(),
            hops: self.hops.clone(),
            prefix_len: self.prefix_len,
            cycle_len: self.cycle_len,
            optimizing_prop: self.mission.optimizing.clone(),
        }
    }

    /// The schedule with 0-based robots.
    pub fn schedule(&self) -> SyncSchedule {
        let sets = |f: fn(&PlannedPosition) -> &Vec<usize>| {
            self.robots
                .iter()
                .map(|r| r.positions.iter().map(|p| f(p).iter().map(|j| j - 1).collect()).collect())
                .collect()
        };
        SyncSchedule {
            wait: sets(|p| &p.wait),
            notify: sets(|p| &p.notify),
        }
    }

    /// Writes `schedule` back into the positions.
    pub fn set_schedule(&mut self, schedule: &SyncSchedule) {
        for (i, r) in self.robots.iter_mut().enumerate() {
            for (k, p) in r.positions.iter_mut().enumerate() {
                p.wait = schedule.wait[i][k].iter().map(|j| j + 1).collect();
                p.notify = schedule.notify[i][k].iter().map(|j| j + 1).collect();
            }
        }
        self.sync.wait_edges = schedule.wait_edges();
    }

    /// Refuses robot files whose contents differ from those planned with.
    pub fn check_robot_files(&self, files: &[(String, String)]) -> Result<(), PlanFileError> {
        if files.len() != self.inputs.robots.len() {
            return Err(PlanFileError::RobotCount {
                expected: self.inputs.robots.len(),
                actual: files.len(),
            });
        }
        for ((name, text), d) in files.iter().zip(&self.inputs.robots) {
            let actual = sha256_hex(text);
            if actual != d.sha256 {
                return Err(PlanFileError::DigestMismatch {
                    name: name.clone(),
                    expected: d.sha256.clone(),
                    actual,
                });
            }
        }
        Ok(())
    }

    /// Mission as recorded in the plan.
    pub fn mission(&self) -> Result<crate::model::Mission, PlanFileError> {
        let props: PropSet = self.mission.props.iter().cloned().collect();
        let f = crate::ltl::parse_ltl(&self.mission.formula, &props).map_err(|e| PlanFileError::Malformed(e.to_string()))?;
        crate::model::Mission::new(f, &self.mission.optimizing, props).map_err(|e| PlanFileError::Malformed(e.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Sync(#[from] SyncError),
}

impl From<TeamError> for PipelineError {
    fn from(e: TeamError) -> Self {
        PipelineError::Plan(PlanError::Team(e))
    }
}

/// What `plan` produces besides the file.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub file: PlanFile,
    pub plan: TeamPlan,
    pub robots: Vec<RobotModel>,
    pub mission: crate::model::Mission,
    pub explain: Vec<ExplainRecord>,
}

fn file_name(path: &str) -> String {
    std::path::Path::new(path)
        .file_name()
        .map_or_else(|| path.to_string(), |n| n.to_string_lossy().into_owned())
}

/// Team system, optimal run, traveling states, projection, synchronization
/// and the field bound, from file contents `(name, text)`.
pub fn run_pipeline(robot_files: &[(String, String)], mission_file: &(String, String)) -> Result<PlanOutcome, PipelineError> {
    let robots = robot_files
        .iter()
        .enumerate()
        .map(|(i, (name, text))| parse_robot(text, name, i + 1))
        .collect::<Result<Vec<_>, _>>()?;
    let robot_props: PropSet = robots.iter().flat_map(|r| r.ts.props().iter().cloned()).collect();
    let mission = parse_mission(&mission_file.1, &mission_file.0, &robot_props)?;

    let tts = construct_team_ts(&robots)?;
    let plan = optimal_run(&tts, &mission)?;
    let augmented = insert_traveling_states(&robots, &plan);
    let model = ExecutionModel::from_plan(&plan, &augmented, &mission.optimizing_prop);
    let alphabet = Alphabet::new(&mission.global_props);
    let b_neg = ltl_to_buchi(&Formula::not(mission.formula.clone()), &alphabet);
    let sync = sync_sequences(&model, &b_neg)?;
    let (lo, hi) = crate::model::team_deviation(&robots);
    let cost_report = field_bound(&plan.cost_report, lo, hi);

    let times = model.nominal_times();
    let planned_robots = model
        .robots
        .iter()
        .enumerate()
        .map(|(i, r)| PlannedRobot {
            index: i + 1,
            name: r.name.clone(),
            rho_lower: r.rho_lower,
            rho_upper: r.rho_upper,
            positions: (0..model.len())
                .map(|k| PlannedPosition {
                    state: r.states[k].clone(),
                    time: times[k],
                    labels: r.labels[k].iter().cloned().collect(),
                    wait: sync.schedule.wait[i][k].iter().map(|j| j + 1).collect(),
                    notify: sync.schedule.notify[i][k].iter().map(|j| j + 1).collect(),
                })
                .collect(),
        })
        .collect();
    let file = PlanFile {
        tool_version: TOOL_VERSION.to_string(),
        inputs: Inputs {
            robots: robot_files
                .iter()
                .map(|(n, t)| FileDigest {
                    name: file_name(n),
                    sha256: sha256_hex(t),
                })
                .collect(),
            mission: FileDigest {
                name: file_name(&mission_file.0),
                sha256: sha256_hex(&mission_file.1),
            },
        },
        mission: MissionInfo {
            formula: mission.formula.to_string(),
            optimizing: mission.optimizing_prop.clone(),
            props: mission.global_props.iter().cloned().collect(),
        },
        team: TeamInfo {
            states: tts.num_states(),
            edges: tts.ts.num_edges(),
            state_bound: state_bounds(&robots).team.to_string(),
        },
        team_run: plan.team_run.clone(),
        prefix_len: model.prefix_len,
        cycle_len: model.cycle_len,
        hops: model.hops.clone(),
        robots: planned_robots,
        cost_report,
        sync: SyncStats {
            emptiness_checks: sync.checks,
            wait_edges: sync.schedule.wait_edges(),
        },
    };
    Ok(PlanOutcome {
        file,
        plan,
        robots: augmented,
        mission,
        explain: sync.log,
    })
}
