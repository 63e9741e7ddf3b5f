//! Team transition system, region automaton, and the relation between them.
//!
//! A team state is a tuple with one element per robot: either a vertex of
//! that robot's system or a traveling state `src>dst@x`, meaning the robot
//! has spent `x` time units on the edge `src -> dst`. Team state names join
//! the elements with `,`.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::model::{PropSet, RobotModel, TransitionSystem};

/// Environment variable capping the number of explored states.
pub const MAX_STATES_ENV: &str = "TEAMSYNC_MAX_STATES";
const DEFAULT_MAX_STATES: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TeamError {
    #[error("at least one robot is required")]
    NoRobots,
    #[error("individual TS has terminal state: robot `{robot}` can reach `{state}`, which has no outgoing transition")]
    TerminalState { robot: String, state: String },
    #[error("state space exceeds the limit of {0} states (raise {MAX_STATES_ENV} to allow more)")]
    TooManyStates(usize),
}

pub fn max_states() -> usize {
    std::env::var(MAX_STATES_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_STATES)
}

/// Where one robot is inside a team state. Ids refer to the robot's own
/// transition system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TeamLoc {
    At(usize),
    Travel { src: usize, dst: usize, elapsed: u64 },
}

impl TeamLoc {
    pub fn is_vertex(&self) -> bool {
        matches!(self, TeamLoc::At(_))
    }
}

pub fn traveling_name(src: &str, dst: &str, elapsed: u64) -> String {
    format!("{src}>{dst}@{elapsed}")
}

/// Splits `src>dst@x` into its parts.
pub fn parse_traveling(name: &str) -> Option<(&str, &str, u64)> {
    let (src, rest) = name.split_once('>')?;
    let (dst, x) = rest.split_once('@')?;
    Some((src, dst, x.parse().ok()?))
}

pub fn loc_name(robot: &RobotModel, loc: TeamLoc) -> String {
    match loc {
        TeamLoc::At(q) => robot.ts.name(q).to_string(),
        TeamLoc::Travel { src, dst, elapsed } => {
            traveling_name(robot.ts.name(src), robot.ts.name(dst), elapsed)
        }
    }
}

fn tuple_label(robots: &[RobotModel], locs: &[TeamLoc]) -> PropSet {
    let mut label = PropSet::new();
    for (r, loc) in robots.iter().zip(locs) {
        if let TeamLoc::At(q) = *loc {
            label.extend(r.ts.label(q).iter().cloned());
        }
    }
    label
}

fn tuple_name(robots: &[RobotModel], locs: &[TeamLoc]) -> String {
    robots
        .iter()
        .zip(locs)
        .map(|(r, &l)| loc_name(r, l))
        .collect::<Vec<_>>()
        .join(",")
}

fn check_robots(robots: &[RobotModel]) -> Result<(), TeamError> {
    if robots.is_empty() {
        return Err(TeamError::NoRobots);
    }
    for r in robots {
        if let Some(s) = r.ts.reachable_sink() {
            return Err(TeamError::TerminalState {
                robot: r.name.clone(),
                state: r.ts.name(s).to_string(),
            });
        }
    }
    Ok(())
}

fn all_props(robots: &[RobotModel]) -> PropSet {
    robots.iter().flat_map(|r| r.ts.props().iter().cloned()).collect()
}

/// Compact joint transition system of a robot team.
#[derive(Debug, Clone)]
pub struct TeamTransitionSystem {
    pub ts: TransitionSystem,
    /// Tuple of each team state, indexed like `ts`.
    pub locs: Vec<Vec<TeamLoc>>,
    pub robots: Vec<RobotModel>,
}

impl TeamTransitionSystem {
    pub fn num_robots(&self) -> usize {
        self.robots.len()
    }

    pub fn num_states(&self) -> usize {
        self.ts.num_states()
    }

    /// Name of robot `i`'s element (0-based) of team state `s`.
    pub fn element_name(&self, s: usize, i: usize) -> String {
        loc_name(&self.robots[i], self.locs[s][i])
    }

    pub fn state_of(&self, locs: &[TeamLoc]) -> Option<usize> {
        self.ts.state_id(&tuple_name(&self.robots, locs))
    }
}

/// Moves of every robot out of `locs`: for each robot the forced in-flight
/// edge or every outgoing edge, as `(src, dst, elapsed, weight)`.
fn robot_moves(robots: &[RobotModel], locs: &[TeamLoc]) -> Vec<Vec<(usize, usize, u64, u64)>> {
    robots
        .iter()
        .zip(locs)
        .map(|(r, &loc)| match loc {
            TeamLoc::At(q) => r
                .ts
                .successors(q)
                .iter()
                .map(|&(t, w)| (q, t, 0, w))
                .collect(),
            TeamLoc::Travel { src, dst, elapsed } => {
                let w = r.ts.weight(src, dst).expect("traveling along an existing edge");
                vec![(src, dst, elapsed, w)]
            }
        })
        .collect()
}

/// Successor team states of `locs` with their weights, one per transition
/// tuple, tuples enumerated lexicographically (robot 1 varies slowest).
fn team_successors(robots: &[RobotModel], locs: &[TeamLoc]) -> Vec<(Vec<TeamLoc>, u64)> {
    let moves = robot_moves(robots, locs);
    let mut out = Vec::new();
    let mut choice = vec![0usize; robots.len()];
    loop {
        let tuple: Vec<_> = choice.iter().zip(&moves).map(|(&c, m)| m[c]).collect();
        let w = tuple.iter().map(|&(_, _, x, w)| w - x).min().expect("nonempty team");
        let next = tuple
            .iter()
            .map(|&(src, dst, x, weight)| {
                if weight - x == w {
                    TeamLoc::At(dst)
                } else {
                    TeamLoc::Travel {
                        src,
                        dst,
                        elapsed: x + w,
                    }
                }
            })
            .collect();
        out.push((next, w));
        // odometer increment, last robot fastest
        let mut i = robots.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < moves[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }
}

/// Builds the team transition system by depth-first search from the tuple
/// of initial states. States are numbered in discovery order.
pub fn construct_team_ts(robots: &[RobotModel]) -> Result<TeamTransitionSystem, TeamError> {
    check_robots(robots)?;
    let cap = max_states();
    let init: Vec<TeamLoc> = robots.iter().map(|r| TeamLoc::At(r.ts.initial())).collect();
    let mut ts = TransitionSystem::new(&tuple_name(robots, &init), tuple_label(robots, &init));
    ts.declare_props(all_props(robots));
    let mut locs = vec![init];

    // Frames emulate the recursive search: (state, successors, next index).
    let mut stack = vec![(0usize, team_successors(robots, &locs[0]), 0usize)];
    while let Some((q, succ, idx)) = stack.last_mut() {
        let q = *q;
        let Some((next, w)) = succ.get(*idx).cloned() else {
            stack.pop();
            continue;
        };
        *idx += 1;
        let name = tuple_name(robots, &next);
        match ts.state_id(&name) {
            Some(id) => {
                if ts.weight(q, id).is_none() {
                    ts.add_edge(q, id, w).expect("positive weight");
                }
            }
            None => {
                if ts.num_states() >= cap {
                    return Err(TeamError::TooManyStates(cap));
                }
                let id = ts.ensure_state(&name, tuple_label(robots, &next));
                ts.add_edge(q, id, w).expect("positive weight");
                let succ = team_successors(robots, &next);
                locs.push(next);
                stack.push((id, succ, 0));
            }
        }
    }
    Ok(TeamTransitionSystem {
        ts,
        locs,
        robots: robots.to_vec(),
    })
}

/// A region automaton state: per robot the edge being taken and the time
/// spent on it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionState {
    pub edges: Vec<(usize, usize)>,
    pub clocks: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct RegionAutomaton {
    /// The automaton as a transition system; its `initial()` is the first
    /// of `initial`.
    pub ts: TransitionSystem,
    pub states: Vec<RegionState>,
    pub initial: Vec<usize>,
    pub robots: Vec<RobotModel>,
}

fn region_name(robots: &[RobotModel], s: &RegionState) -> String {
    let edges: Vec<String> = robots
        .iter()
        .zip(&s.edges)
        .map(|(r, &(a, b))| format!("{}>{}", r.ts.name(a), r.ts.name(b)))
        .collect();
    let clocks: Vec<String> = s.clocks.iter().map(u64::to_string).collect();
    format!("{}#{}", edges.join(","), clocks.join(","))
}

fn region_label(robots: &[RobotModel], s: &RegionState) -> PropSet {
    let mut label = PropSet::new();
    for (r, (&(src, _), &x)) in robots.iter().zip(s.edges.iter().zip(&s.clocks)) {
        if x == 0 {
            label.extend(r.ts.label(src).iter().cloned());
        }
    }
    label
}

fn cartesian<T: Clone>(choices: &[Vec<T>]) -> Vec<Vec<T>> {
    choices.iter().fold(vec![Vec::new()], |acc, opts| {
        acc.iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o.clone());
                    v
                })
            })
            .collect()
    })
}

/// Reachable part of the region automaton, explored breadth-first from all
/// initial edge combinations with zero clocks.
pub fn construct_region_automaton(robots: &[RobotModel]) -> Result<RegionAutomaton, TeamError> {
    check_robots(robots)?;
    let cap = max_states();
    let weight = |i: usize, (a, b): (usize, usize)| robots[i].ts.weight(a, b).expect("edge exists");
    let first_edges: Vec<Vec<(usize, usize)>> = robots
        .iter()
        .map(|r| {
            let q = r.ts.initial();
            r.ts.successors(q).iter().map(|&(t, _)| (q, t)).collect()
        })
        .collect();
    let initial_states: Vec<RegionState> = cartesian(&first_edges)
        .into_iter()
        .map(|edges| RegionState {
            clocks: vec![0; edges.len()],
            edges,
        })
        .collect();

    let mut index: HashMap<RegionState, usize> = HashMap::new();
    let mut states: Vec<RegionState> = Vec::new();
    let mut ts: Option<TransitionSystem> = None;
    let mut queue = VecDeque::new();
    let mut intern = |s: RegionState,
                      ts: &mut Option<TransitionSystem>,
                      states: &mut Vec<RegionState>,
                      queue: &mut VecDeque<usize>|
     -> Result<usize, TeamError> {
        if let Some(&id) = index.get(&s) {
            return Ok(id);
        }
        if states.len() >= cap {
            return Err(TeamError::TooManyStates(cap));
        }
        let name = region_name(robots, &s);
        let label = region_label(robots, &s);
        let id = match ts {
            None => {
                let mut t = TransitionSystem::new(&name, label);
                t.declare_props(all_props(robots));
                *ts = Some(t);
                0
            }
            Some(t) => t.ensure_state(&name, label),
        };
        index.insert(s.clone(), id);
        states.push(s);
        queue.push_back(id);
        Ok(id)
    };

    let mut initial = Vec::new();
    for s in initial_states {
        initial.push(intern(s, &mut ts, &mut states, &mut queue)?);
    }
    while let Some(id) = queue.pop_front() {
        let s = states[id].clone();
        let remaining: Vec<u64> = (0..robots.len())
            .map(|i| weight(i, s.edges[i]) - s.clocks[i])
            .collect();
        let w = *remaining.iter().min().expect("nonempty team");
        // robots finishing now pick any next edge; the rest keep theirs
        let options: Vec<Vec<((usize, usize), u64)>> = (0..robots.len())
            .map(|i| {
                let (_, dst) = s.edges[i];
                if remaining[i] == w {
                    robots[i]
                        .ts
                        .successors(dst)
                        .iter()
                        .map(|&(t, _)| ((dst, t), 0))
                        .collect()
                } else {
                    vec![(s.edges[i], s.clocks[i] + w)]
                }
            })
            .collect();
        for combo in cartesian(&options) {
            let next = RegionState {
                edges: combo.iter().map(|&(e, _)| e).collect(),
                clocks: combo.iter().map(|&(_, x)| x).collect(),
            };
            let nid = intern(next, &mut ts, &mut states, &mut queue)?;
            let t = ts.as_mut().expect("initialized");
            if t.weight(id, nid).is_none() {
                t.add_edge(id, nid, w).expect("positive weight");
            }
        }
    }
    Ok(RegionAutomaton {
        ts: ts.expect("at least one initial state"),
        states,
        initial,
        robots: robots.to_vec(),
    })
}

/// Team tuple related to a region state: a robot with zero clock is at the
/// edge's source, otherwise it is traveling.
pub fn relation_r(s: &RegionState) -> Vec<TeamLoc> {
    s.edges
        .iter()
        .zip(&s.clocks)
        .map(|(&(src, dst), &x)| {
            if x == 0 {
                TeamLoc::At(src)
            } else {
                TeamLoc::Travel {
                    src,
                    dst,
                    elapsed: x,
                }
            }
        })
        .collect()
}

/// Why a relation fails to be a bisimulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BisimulationFailure {
    /// A region state maps to a tuple missing from the team system.
    Unmatched { region: String, team: String },
    LabelMismatch { region: String, team: String },
    /// A region transition has no counterpart from the related team state.
    Forth { region: String, team: String, region_succ: String },
    /// A team transition has no counterpart from the related region state.
    Back { region: String, team: String, team_succ: String },
    Initial { region: String, team: String },
}

/// Checks that `relation_r` is a bisimulation between `ra` and `tts`, with
/// matching transition weights: equal labels on related pairs, every region
/// transition matched from the related team state and vice versa, and
/// related initial states. Returns the first offending pair.
pub fn check_bisimulation(
    ra: &RegionAutomaton,
    tts: &TeamTransitionSystem,
) -> Result<(), BisimulationFailure> {
    let related = related_states(ra, tts)?;
    check_labels(ra, tts, &related)?;
    for (s, &t) in related.iter().enumerate() {
        let (region, team) = (ra.ts.name(s).to_string(), tts.ts.name(t).to_string());
        check_forth(ra, tts, &related, s, t)?;
        for &(t2, w) in tts.ts.successors(t) {
            let ok = ra
                .ts
                .successors(s)
                .iter()
                .any(|&(s2, w2)| related[s2] == t2 && w2 == w);
            if !ok {
                return Err(BisimulationFailure::Back {
                    region,
                    team,
                    team_succ: tts.ts.name(t2).to_string(),
                });
            }
        }
    }
    check_initial(ra, tts, &related)
}

/// Weaker than [`check_bisimulation`]: labels, initial states and forward
/// matching as there, but a team transition only has to be matched by some
/// region path that reaches the related state. Explores pairs of a team
/// state and the set of region states that can stand for it along some path.
pub fn check_path_correspondence(
    ra: &RegionAutomaton,
    tts: &TeamTransitionSystem,
) -> Result<(), BisimulationFailure> {
    let related = related_states(ra, tts)?;
    check_labels(ra, tts, &related)?;
    for (s, &t) in related.iter().enumerate() {
        check_forth(ra, tts, &related, s, t)?;
    }
    check_initial(ra, tts, &related)?;
    let start = (tts.ts.initial(), ra.initial.clone());
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![start.clone()];
    seen.insert(start);
    while let Some((t, set)) = stack.pop() {
        for &(t2, w) in tts.ts.successors(t) {
            let mut next: Vec<usize> = set
                .iter()
                .flat_map(|&s| ra.ts.successors(s).iter())
                .filter(|&&(s2, w2)| related[s2] == t2 && w2 == w)
                .map(|&(s2, _)| s2)
                .collect();
            next.sort_unstable();
            next.dedup();
            if next.is_empty() {
                return Err(BisimulationFailure::Back {
                    region: ra.ts.name(set[0]).to_string(),
                    team: tts.ts.name(t).to_string(),
                    team_succ: tts.ts.name(t2).to_string(),
                });
            }
            if seen.insert((t2, next.clone())) {
                stack.push((t2, next));
            }
        }
    }
    Ok(())
}

fn related_states(
    ra: &RegionAutomaton,
    tts: &TeamTransitionSystem,
) -> Result<Vec<usize>, BisimulationFailure> {
    ra.states
        .iter()
        .enumerate()
        .map(|(s, st)| {
            let locs = relation_r(st);
            tts.state_of(&locs).ok_or_else(|| BisimulationFailure::Unmatched {
                region: ra.ts.name(s).to_string(),
                team: tuple_name(&tts.robots, &locs),
            })
        })
        .collect()
}

fn check_labels(
    ra: &RegionAutomaton,
    tts: &TeamTransitionSystem,
    related: &[usize],
) -> Result<(), BisimulationFailure> {
    for (s, &t) in related.iter().enumerate() {
        if ra.ts.label(s) != tts.ts.label(t) {
            return Err(BisimulationFailure::LabelMismatch {
                region: ra.ts.name(s).to_string(),
                team: tts.ts.name(t).to_string(),
            });
        }
    }
    Ok(())
}

fn check_forth(
    ra: &RegionAutomaton,
    tts: &TeamTransitionSystem,
    related: &[usize],
    s: usize,
    t: usize,
) -> Result<(), BisimulationFailure> {
    for &(s2, w) in ra.ts.successors(s) {
        if tts.ts.weight(t, related[s2]) != Some(w) {
            return Err(BisimulationFailure::Forth {
                region: ra.ts.name(s).to_string(),
                team: tts.ts.name(t).to_string(),
                region_succ: ra.ts.name(s2).to_string(),
            });
        }
    }
    Ok(())
}

fn check_initial(
    ra: &RegionAutomaton,
    tts: &TeamTransitionSystem,
    related: &[usize],
) -> Result<(), BisimulationFailure> {
    let t0 = tts.ts.initial();
    let team = tts.ts.name(t0).to_string();
    match ra.initial.iter().find(|&&s| related[s] != t0) {
        Some(&s) => Err(BisimulationFailure::Initial {
            region: ra.ts.name(s).to_string(),
            team,
        }),
        None if ra.initial.is_empty() => Err(BisimulationFailure::Initial {
            region: String::new(),
            team,
        }),
        None => Ok(()),
    }
}

/// State-count bounds for the team system, the region automaton, and the
/// product of unit-edge discretizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateBounds {
    pub team: u128,
    pub region: u128,
    pub naive: u128,
}

pub fn state_bounds(robots: &[RobotModel]) -> StateBounds {
    let prod = |f: &dyn Fn(&RobotModel) -> u128| {
        robots
            .iter()
            .map(f)
            .fold(1u128, |a, b| a.saturating_mul(b))
    };
    let states = |r: &RobotModel| r.ts.num_states() as u128;
    let edges = |r: &RobotModel| r.ts.num_edges() as u128;
    let w_max = robots
        .iter()
        .map(|r| r.ts.max_weight() as u128)
        .max()
        .unwrap_or(1);
    let team = prod(&states).saturating_add(w_max.saturating_sub(1).saturating_mul(prod(&edges)));
    let region = prod(&edges).saturating_mul(
        prod(&|r| r.ts.max_weight() as u128)
            .saturating_sub(prod(&|r| (r.ts.max_weight() as u128).saturating_sub(1))),
    );
    let naive = prod(&|r| states(r) + r.ts.total_weight() as u128 - edges(r));
    StateBounds {
        team,
        region,
        naive,
    }
}
