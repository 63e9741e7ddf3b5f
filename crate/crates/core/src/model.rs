//! Shared domain types: weighted transition systems, robots, missions,
//! prefix-suffix runs, timed words and cost reports.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::Sub;

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::Formula;

/// Exact time in nominal time units.
pub type Time = Rational64;

/// A set of atomic propositions.
pub type PropSet = BTreeSet<String>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("duplicate transition {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("transition {0} -> {1} has weight 0; weights must be positive integers")]
    ZeroWeight(String, String),
    #[error("invalid state identifier `{0}`")]
    InvalidStateName(String),
    #[error("deviation bounds must satisfy 0 < lower <= 1 <= upper, got [{0}, {1}]")]
    InvalidDeviation(Time, Time),
    #[error("proposition `{0}` is not in the mission alphabet")]
    UnknownProposition(String),
    #[error("mission formula must have the form `phi && G F {0}`")]
    NotOptimizingForm(String),
    #[error("run is not a path of the transition system: {0}")]
    InvalidRun(String),
}

/// Characters reserved for composite identifiers (team tuples, traveling
/// states, region states).
pub const RESERVED_CHARS: &[char] = &[',', '>', '@', '|', '(', ')', '#'];

pub fn valid_state_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || RESERVED_CHARS.contains(&c))
}

/// A weighted transition system with string state identifiers.
///
/// States are indexed densely in insertion order. Successor lists are kept
/// sorted by target identifier so every traversal is reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    names: Vec<String>,
    index: HashMap<String, usize>,
    initial: usize,
    succ: Vec<Vec<(usize, u64)>>,
    labels: Vec<PropSet>,
    props: PropSet,
}

impl TransitionSystem {
    /// Creates a system holding only its initial state.
    pub fn new(initial: &str, initial_label: PropSet) -> Self {
        let mut ts = TransitionSystem {
            names: Vec::new(),
            index: HashMap::new(),
            initial: 0,
            succ: Vec::new(),
            labels: Vec::new(),
            props: PropSet::new(),
        };
        ts.push_state(initial.to_string(), initial_label);
        ts
    }

    fn push_state(&mut self, name: String, label: PropSet) -> usize {
        let id = self.names.len();
        self.props.extend(label.iter().cloned());
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.succ.push(Vec::new());
        self.labels.push(label);
        id
    }

    pub fn add_state(&mut self, name: &str, label: PropSet) -> Result<usize, ModelError> {
        if self.index.contains_key(name) {
            return Err(ModelError::DuplicateState(name.to_string()));
        }
        Ok(self.push_state(name.to_string(), label))
    }

    /// Adds `name` if missing and returns its id; an existing state keeps its label.
    pub fn ensure_state(&mut self, name: &str, label: PropSet) -> usize {
        match self.index.get(name) {
            Some(&id) => id,
            None => self.push_state(name.to_string(), label),
        }
    }

    pub fn add_edge(&mut self, src: usize, dst: usize, weight: u64) -> Result<(), ModelError> {
        if weight == 0 {
            return Err(ModelError::ZeroWeight(
                self.names[src].clone(),
                self.names[dst].clone(),
            ));
        }
        let dst_name = &self.names[dst];
        let names = &self.names;
        let list = &mut self.succ[src];
        match list.binary_search_by(|&(t, _)| names[t].as_str().cmp(dst_name.as_str())) {
            Ok(_) => Err(ModelError::DuplicateEdge(
                self.names[src].clone(),
                self.names[dst].clone(),
            )),
            Err(pos) => {
                list.insert(pos, (dst, weight));
                Ok(())
            }
        }
    }

    pub fn add_edge_by_name(&mut self, src: &str, dst: &str, weight: u64) -> Result<(), ModelError> {
        let s = self.require(src)?;
        let d = self.require(dst)?;
        self.add_edge(s, d, weight)
    }

    fn require(&self, name: &str) -> Result<usize, ModelError> {
        self.state_id(name)
            .ok_or_else(|| ModelError::UnknownState(name.to_string()))
    }

    /// Declares propositions that may not be attached to any state.
    pub fn declare_props<I: IntoIterator<Item = String>>(&mut self, props: I) {
        self.props.extend(props);
    }

    pub fn state_id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn label(&self, id: usize) -> &PropSet {
        &self.labels[id]
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn successors(&self, id: usize) -> &[(usize, u64)] {
        &self.succ[id]
    }

    pub fn weight(&self, src: usize, dst: usize) -> Option<u64> {
        self.succ[src]
            .iter()
            .find(|&&(t, _)| t == dst)
            .map(|&(_, w)| w)
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn max_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| w).max().unwrap_or(0)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(s, list)| list.iter().map(move |&(t, w)| (s, t, w)))
    }

    /// States reachable from the initial state, in BFS order.
    pub fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_states()];
        let mut order = vec![self.initial];
        seen[self.initial] = true;
        let mut head = 0;
        while head < order.len() {
            let s = order[head];
            head += 1;
            for &(t, _) in &self.succ[s] {
                if !seen[t] {
                    seen[t] = true;
                    order.push(t);
                }
            }
        }
        order
    }

    /// A reachable state without outgoing transitions, if any.
    pub fn reachable_sink(&self) -> Option<usize> {
        self.reachable()
            .into_iter()
            .find(|&s| self.succ[s].is_empty())
    }

    /// One state per line, then one edge per line.
    pub fn to_graph_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# {} states, {} edges\n",
            self.num_states(),
            self.num_edges()
        ));
        for (id, name) in self.names.iter().enumerate() {
            let marker = if id == self.initial { " initial" } else { "" };
            out.push_str(&format!("state {name}{marker} [{}]\n", join_props(&self.labels[id])));
        }
        for (s, t, w) in self.edges() {
            out.push_str(&format!("edge {} {} {}\n", self.names[s], self.names[t], w));
        }
        out
    }
}

pub(crate) fn join_props(props: &PropSet) -> String {
    props.iter().cloned().collect::<Vec<_>>().join(" ")
}

/// One robot: its transition system and multiplicative deviation bounds on
/// travel time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobotModel {
    /// 1-based robot index.
    pub index: usize,
    pub name: String,
    pub ts: TransitionSystem,
    pub rho_lower: Time,
    pub rho_upper: Time,
}

impl RobotModel {
    pub fn new(
        index: usize,
        name: impl Into<String>,
        ts: TransitionSystem,
        rho_lower: Time,
        rho_upper: Time,
    ) -> Result<Self, ModelError> {
        if !(rho_lower > Time::zero() && rho_lower <= Time::one() && Time::one() <= rho_upper) {
            return Err(ModelError::InvalidDeviation(rho_lower, rho_upper));
        }
        Ok(RobotModel {
            index,
            name: name.into(),
            ts,
            rho_lower,
            rho_upper,
        })
    }
}

/// Team-wide deviation bounds: the largest upper and smallest lower value.
pub fn team_deviation(robots: &[RobotModel]) -> (Time, Time) {
    let lower = robots
        .iter()
        .map(|r| r.rho_lower)
        .min()
        .unwrap_or_else(Time::one);
    let upper = robots
        .iter()
        .map(|r| r.rho_upper)
        .max()
        .unwrap_or_else(Time::one);
    (lower, upper)
}

/// A mission `phi && G F pi` over a global proposition set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mission {
    pub formula: Formula,
    pub optimizing_prop: String,
    pub global_props: PropSet,
}

impl Mission {
    pub fn new(formula: Formula, optimizing_prop: &str, global_props: PropSet) -> Result<Self, ModelError> {
        if !global_props.contains(optimizing_prop) {
            return Err(ModelError::UnknownProposition(optimizing_prop.to_string()));
        }
        for p in formula.props() {
            if !global_props.contains(&p) {
                return Err(ModelError::UnknownProposition(p));
            }
        }
        let target = Formula::globally(Formula::eventually(Formula::prop(optimizing_prop)));
        if !formula.conjuncts().iter().any(|c| **c == target) {
            return Err(ModelError::NotOptimizingForm(optimizing_prop.to_string()));
        }
        Ok(Mission {
            formula,
            optimizing_prop: optimizing_prop.to_string(),
            global_props,
        })
    }

    /// Checks that every proposition labeling the robot is in the mission alphabet.
    pub fn check_robot(&self, robot: &RobotModel) -> Result<(), ModelError> {
        match robot.ts.props().iter().find(|p| !self.global_props.contains(*p)) {
            Some(p) => Err(ModelError::UnknownProposition(p.clone())),
            None => Ok(()),
        }
    }
}

/// An infinite run `prefix . suffix_cycle^omega`.
///
/// Runs produced by the planner end the prefix at the state the cycle
/// returns to, so the last elements of `prefix` and `suffix_cycle` coincide.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrefixSuffixRun<S> {
    pub prefix: Vec<S>,
    pub suffix_cycle: Vec<S>,
}

impl<S: Clone + PartialEq> PrefixSuffixRun<S> {
    pub fn new(prefix: Vec<S>, suffix_cycle: Vec<S>) -> Self {
        assert!(!suffix_cycle.is_empty(), "suffix cycle must be nonempty");
        PrefixSuffixRun { prefix, suffix_cycle }
    }

    /// Position of the first suffix state.
    pub fn suffix_start(&self) -> usize {
        self.prefix.len()
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.suffix_cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// State at position `k` of the infinite run.
    pub fn at(&self, k: usize) -> &S {
        if k < self.prefix.len() {
            &self.prefix[k]
        } else {
            &self.suffix_cycle[(k - self.prefix.len()) % self.suffix_cycle.len()]
        }
    }

    /// The prefix followed by `cycles` copies of the suffix cycle.
    pub fn unroll(&self, cycles: usize) -> Vec<S> {
        let mut out = self.prefix.clone();
        for _ in 0..cycles {
            out.extend(self.suffix_cycle.iter().cloned());
        }
        out
    }

    pub fn map<T, F: FnMut(&S) -> T>(&self, mut f: F) -> PrefixSuffixRun<T> {
        PrefixSuffixRun {
            prefix: self.prefix.iter().map(&mut f).collect(),
            suffix_cycle: self.suffix_cycle.iter().map(&mut f).collect(),
        }
    }

    /// Recovers the shortest lasso from a finite sequence that repeats its
    /// tail at least `min_repeats` times. Returns `None` if no period fits.
    pub fn detect(seq: &[S], min_repeats: usize) -> Option<Self> {
        let n = seq.len();
        let min_repeats = min_repeats.max(1);
        for start in 0..n {
            let tail = n - start;
            for period in 1..=tail / min_repeats {
                if (start..n - period).all(|k| seq[k] == seq[k + period]) {
                    // The cycle must span whole periods for the tail to be a
                    // faithful unrolling.
                    if !tail.is_multiple_of(period) {
                        continue;
                    }
                    return Some(PrefixSuffixRun {
                        prefix: seq[..start].to_vec(),
                        suffix_cycle: seq[start..start + period].to_vec(),
                    });
                }
            }
        }
        None
    }
}

impl PrefixSuffixRun<String> {
    /// Checks that consecutive states are connected, including the wrap from
    /// the cycle end to its start and from the prefix end into the cycle.
    pub fn validate(&self, ts: &TransitionSystem) -> Result<(), ModelError> {
        let ids = self
            .prefix
            .iter()
            .chain(self.suffix_cycle.iter())
            .map(|s| {
                ts.state_id(s)
                    .ok_or_else(|| ModelError::UnknownState(s.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(&first) = ids.first() {
            if first != ts.initial() {
                return Err(ModelError::InvalidRun(format!(
                    "run starts at `{}`, not the initial state",
                    ts.name(first)
                )));
            }
        }
        let p = self.prefix.len();
        let mut pairs: Vec<(usize, usize)> = ids.windows(2).map(|w| (w[0], w[1])).collect();
        pairs.push((ids[ids.len() - 1], ids[p]));
        for (a, b) in pairs {
            if ts.weight(a, b).is_none() {
                return Err(ModelError::InvalidRun(format!(
                    "no transition {} -> {}",
                    ts.name(a),
                    ts.name(b)
                )));
            }
        }
        Ok(())
    }
}

/// One letter of a timed word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedLetter<T> {
    pub time: T,
    pub letter: PropSet,
}

/// A sequence of letters stamped with strictly increasing times.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimedWord<T> {
    pub entries: Vec<TimedLetter<T>>,
}

impl<T: Copy + PartialOrd> TimedWord<T> {
    pub fn new() -> Self {
        TimedWord { entries: Vec::new() }
    }

    /// Appends a letter, merging it into the last letter when the times are equal.
    pub fn push_merge(&mut self, time: T, letter: &PropSet) {
        if let Some(last) = self.entries.last_mut() {
            assert!(time >= last.time, "timed word times must not decrease");
            if last.time == time {
                last.letter.extend(letter.iter().cloned());
                return;
            }
        }
        self.entries.push(TimedLetter {
            time,
            letter: letter.clone(),
        });
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].time < w[1].time)
    }

    pub fn letters(&self) -> Vec<PropSet> {
        self.entries.iter().map(|e| e.letter.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Times of the entries whose letter contains `pi`, in order.
pub fn extract_pi_times<T: Copy>(word: &TimedWord<T>, pi: &str) -> Vec<T> {
    word.entries
        .iter()
        .filter(|e| e.letter.contains(pi))
        .map(|e| e.time)
        .collect()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CostError {
    #[error("cost undefined: fewer than two steady-state satisfactions of the optimizing proposition")]
    Undefined,
}

/// Maximum gap between consecutive satisfaction times from
/// `suffix_start_index` on. Applied to an unrolled periodic sequence covering
/// at least two cycles this is the limsup cost, wrap gap included.
pub fn suffix_cost<T>(pi_times: &[T], suffix_start_index: usize) -> Result<T, CostError>
where
    T: Copy + PartialOrd + Sub<Output = T>,
{
    let tail = pi_times.get(suffix_start_index..).unwrap_or(&[]);
    let mut gaps = tail.windows(2).map(|w| w[1] - w[0]);
    let first = gaps.next().ok_or(CostError::Undefined)?;
    Ok(gaps.fold(first, |m, g| if g > m { g } else { m }))
}

/// Planned cost, suffix duration and the field-cost bound
/// `planned * upper + suffix_duration * (upper - lower)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    #[serde(with = "crate::planfile::rational")]
    pub planned_cost: Time,
    #[serde(with = "crate::planfile::rational")]
    pub suffix_duration: Time,
    #[serde(with = "crate::planfile::rational")]
    pub field_bound: Time,
}

impl CostReport {
    pub fn new(planned_cost: Time, suffix_duration: Time, rho_lower: Time, rho_upper: Time) -> Self {
        CostReport {
            planned_cost,
            suffix_duration,
            field_bound: planned_cost * rho_upper + suffix_duration * (rho_upper - rho_lower),
        }
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "J = {} time units, d_s = {}, field bound = {} ({:.4})",
            self.planned_cost,
            self.suffix_duration,
            self.field_bound,
            to_f64(self.field_bound)
        )
    }
}

pub fn to_f64(t: Time) -> f64 {
    *t.numer() as f64 / *t.denom() as f64
}

pub fn props<I, S>(items: I) -> PropSet
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    items.into_iter().map(Into::into).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(n: i64) -> Time {
        Time::from_integer(n)
    }

    fn word(entries: &[(i64, &[&str])]) -> TimedWord<Time> {
        let mut w = TimedWord::new();
        for &(time, letter) in entries {
            w.push_merge(t(time), &props(letter.iter().copied()));
        }
        w
    }

    #[test]
    fn pi_times_filter() {
        let w = word(&[(1, &["a"]), (3, &["pi", "a"]), (7, &["pi"])]);
        assert_eq!(extract_pi_times(&w, "pi"), vec![t(3), t(7)]);
        let none = word(&[(0, &[]), (1, &["a"])]);
        assert!(extract_pi_times(&none, "pi").is_empty());
    }

    #[test]
    fn pi_times_of_example_run() {
        // Planned team word of the two-robot example, three suffix cycles.
        let mut entries: Vec<(i64, &[&str])> = vec![(0, &[]), (2, &["p1", "p2", "pi"])];
        for c in 0..3 {
            let base = 2 + 4 * c;
            entries.push((base + 1, &["p3"]));
            entries.push((base + 2, &["p2", "pi"]));
            entries.push((base + 3, &["p3"]));
            entries.push((base + 4, &["p1", "p2", "pi"]));
        }
        let w = word(&entries);
        let times = extract_pi_times(&w, "pi");
        assert_eq!(&times[..4], &[t(2), t(4), t(6), t(8)]);
    }

    #[test]
    fn suffix_cost_examples() {
        assert_eq!(suffix_cost(&[t(2), t(4), t(6), t(8)], 0), Ok(t(2)));
        assert_eq!(suffix_cost(&[t(0), t(5), t(10), t(15)], 0), Ok(t(5)));
        // gaps 1, 3, 2 repeated
        assert_eq!(suffix_cost(&[t(0), t(1), t(4), t(6), t(7), t(10), t(12)], 0), Ok(t(3)));
        assert_eq!(suffix_cost(&[t(0), t(100), t(101)], 1), Ok(t(1)));
        assert_eq!(suffix_cost::<Time>(&[t(3)], 0), Err(CostError::Undefined));
        assert_eq!(suffix_cost(&[t(3), t(4)], 1), Err(CostError::Undefined));
    }

    #[test]
    fn cost_report_bound() {
        let r = CostReport::new(t(2), t(4), Time::new(19, 20), Time::new(21, 20));
        assert_eq!(r.field_bound, Time::new(5, 2));
        let r = CostReport::new(t(28), t(28), Time::new(19, 20), Time::new(21, 20));
        assert_eq!(r.field_bound, Time::new(161, 5));
        let r = CostReport::new(t(7), t(30), t(1), t(1));
        assert_eq!(r.field_bound, t(7));
    }

    #[test]
    fn ts_rejects_bad_input() {
        let mut ts = TransitionSystem::new("a", PropSet::new());
        let b = ts.add_state("b", props(["p"])).unwrap();
        assert!(matches!(ts.add_state("b", PropSet::new()), Err(ModelError::DuplicateState(_))));
        assert!(matches!(ts.add_edge(0, b, 0), Err(ModelError::ZeroWeight(..))));
        ts.add_edge(0, b, 2).unwrap();
        assert!(matches!(ts.add_edge(0, b, 3), Err(ModelError::DuplicateEdge(..))));
        assert!(matches!(ts.add_edge_by_name("a", "z", 1), Err(ModelError::UnknownState(_))));
        assert_eq!(ts.reachable_sink(), Some(b));
    }

    #[test]
    fn robot_deviation_bounds() {
        let ts = TransitionSystem::new("a", PropSet::new());
        assert!(RobotModel::new(1, "r", ts.clone(), Time::new(19, 20), Time::new(21, 20)).is_ok());
        assert!(RobotModel::new(1, "r", ts.clone(), t(0), t(1)).is_err());
        assert!(RobotModel::new(1, "r", ts.clone(), Time::new(11, 10), t(2)).is_err());
        assert!(RobotModel::new(1, "r", ts, Time::new(1, 2), Time::new(9, 10)).is_err());
    }

    #[test]
    fn run_validation() {
        let mut ts = TransitionSystem::new("a", PropSet::new());
        ts.add_state("b", PropSet::new()).unwrap();
        ts.add_edge_by_name("a", "b", 1).unwrap();
        ts.add_edge_by_name("b", "a", 1).unwrap();
        let ok = PrefixSuffixRun::new(vec!["a".to_string()], vec!["b".to_string(), "a".to_string()]);
        assert!(ok.validate(&ts).is_ok());
        let bad = PrefixSuffixRun::new(vec!["a".to_string()], vec!["a".to_string()]);
        assert!(bad.validate(&ts).is_err());
    }

    fn arb_run() -> impl Strategy<Value = PrefixSuffixRun<u8>> {
        (
            proptest::collection::vec(0u8..4, 0..5),
            proptest::collection::vec(0u8..4, 1..5),
        )
            .prop_map(|(p, c)| PrefixSuffixRun::new(p, c))
    }

    proptest! {
        #[test]
        fn unroll_detect_denotes_same_run(run in arb_run(), k in 2usize..5) {
            let seq = run.unroll(k);
            let back = PrefixSuffixRun::detect(&seq, 2).expect("periodic tail");
            let horizon = run.len() * 6;
            for i in 0..horizon {
                prop_assert_eq!(run.at(i), back.at(i));
            }
        }

        #[test]
        fn suffix_cost_stable_under_unrolling(gaps in proptest::collection::vec(1i64..6, 1..5), k in 2usize..6) {
            let mut times = vec![0i64];
            for _ in 0..k {
                for g in &gaps {
                    let last = *times.last().unwrap();
                    times.push(last + g);
                }
            }
            let times: Vec<Time> = times.into_iter().map(Time::from_integer).collect();
            let expected = Time::from_integer(*gaps.iter().max().unwrap());
            prop_assert_eq!(suffix_cost(&times, 0), Ok(expected));
        }

        #[test]
        fn field_bound_monotone(j in 1i64..40, ds in 1i64..40, lo in 1i64..=20, hi in 20i64..40, d in 1i64..5) {
            let lower = Time::new(lo, 20);
            let upper = Time::new(hi, 20);
            let base = CostReport::new(Time::from_integer(j), Time::from_integer(ds), lower, upper).field_bound;
            let raised = CostReport::new(Time::from_integer(j), Time::from_integer(ds), lower, upper + Time::new(d, 20)).field_bound;
            prop_assert!(raised >= base);
            if lo > d {
                let lowered = CostReport::new(Time::from_integer(j), Time::from_integer(ds), lower - Time::new(d, 20), upper).field_bound;
                prop_assert!(lowered >= base);
            }
        }
    }
}
