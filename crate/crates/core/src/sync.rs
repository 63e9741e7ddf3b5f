//! Wait/notify synchronization sequences.
//!
//! A robot at position `k` notifies its notify-set on arrival, waits for the
//! arrival of every robot in its wait-set, satisfies its propositions and
//! departs. Every robot waits for all others at position 0 and at the first
//! suffix position, so each execution splits into segments that start from a
//! common instant: the prefix, then one segment per suffix cycle.
//!
//! Inside a segment the time of event `(i, k)` (robot `i` satisfying position
//! `k`) is bounded by an interval relative to the segment start. The field
//! word generator `W` emits, letter by letter, sets of events that may be
//! simultaneous, in any order compatible with those intervals and with the
//! wait relation:
//!
//! - `(j, k - 1)` strictly precedes `(i, k)` when `j` is `i` or in its wait-set;
//! - with `A(i, k)` = `{i}` plus the wait-set, `A(j, k) ⊆ A(i, k)` means
//!   `(j, k)` is not later than `(i, k)`;
//! - the events of one letter have pairwise intersecting intervals and no
//!   pending event outside the letter has an upper bound at or below the
//!   largest lower bound inside it.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::{Alphabet, BuchiAutomaton, LassoWord, Letter, LetterGraph, Product};
use crate::model::{CostReport, PropSet, RobotModel, Time};
use crate::optimal::{project_run, TeamPlan};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyncError {
    #[error("mission not robustly satisfiable at these deviation bounds: even full synchronization admits a violating field word\n  witness: {0}")]
    NotRobust(String),
    #[error("robots {0} and {1} do not all wait for each other at position {2}; the suffix start and position 0 need full synchronization")]
    MissingGlobalSync(usize, usize, usize),
    #[error("schedule is not reciprocal at position {position}: robot {waiter} waits for robot {notifier}, which does not notify it")]
    NotReciprocal {
        position: usize,
        waiter: usize,
        notifier: usize,
    },
}

/// One robot's part of an execution model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobotExec {
    pub name: String,
    /// State per position of the prefix and one suffix cycle.
    pub states: Vec<String>,
    pub labels: Vec<PropSet>,
    pub rho_lower: Time,
    pub rho_upper: Time,
}

/// What the synchronization layer and the simulator need from a plan:
/// aligned per-robot runs, their labels, and the nominal hop durations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionModel {
    pub robots: Vec<RobotExec>,
    /// `hops[k]` is the nominal duration from position `k` to `k + 1`; the
    /// last one leads from the cycle end back to the suffix start.
    pub hops: Vec<u64>,
    pub prefix_len: usize,
    pub cycle_len: usize,
    pub optimizing_prop: String,
}

impl ExecutionModel {
    /// Builds the model from a plan and the robots with traveling states
    /// inserted (traveling states carry no propositions).
    pub fn from_plan(plan: &TeamPlan, robots: &[RobotModel], optimizing_prop: &str) -> Self {
        let robots = robots
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let run = project_run(plan, i);
                let states = run.unroll(1);
                let labels = states
                    .iter()
                    .map(|s| r.ts.state_id(s).map(|id| r.ts.label(id).clone()).unwrap_or_default())
                    .collect();
                RobotExec {
                    name: r.name.clone(),
                    states,
                    labels,
                    rho_lower: r.rho_lower,
                    rho_upper: r.rho_upper,
                }
            })
            .collect();
        ExecutionModel {
            robots,
            hops: plan.hops.clone(),
            prefix_len: plan.prefix_len(),
            cycle_len: plan.cycle_len(),
            optimizing_prop: optimizing_prop.to_string(),
        }
    }

    pub fn num_robots(&self) -> usize {
        self.robots.len()
    }

    /// Positions of the prefix and one cycle.
    pub fn len(&self) -> usize {
        self.prefix_len + self.cycle_len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First suffix position.
    pub fn beg(&self) -> usize {
        self.prefix_len
    }

    /// Last suffix position.
    pub fn end(&self) -> usize {
        self.len() - 1
    }

    /// Maps a position of the infinite run onto the prefix and first cycle.
    pub fn fold(&self, k: usize) -> usize {
        if k < self.prefix_len {
            k
        } else {
            self.prefix_len + (k - self.prefix_len) % self.cycle_len
        }
    }

    /// Nominal planned times of the prefix and first cycle positions.
    pub fn nominal_times(&self) -> Vec<Time> {
        let mut t = vec![Time::from_integer(0)];
        for &h in &self.hops[..self.len() - 1] {
            t.push(t[t.len() - 1] + Time::from_integer(h as i64));
        }
        t
    }

    /// Nominal suffix duration.
    pub fn suffix_duration(&self) -> Time {
        Time::from_integer(self.hops[self.beg()..].iter().sum::<u64>() as i64)
    }

    /// The planned team word over the prefix and `cycles` suffix cycles,
    /// closed by the first position of the next cycle.
    pub fn planned_word(&self, cycles: usize) -> crate::model::TimedWord<Time> {
        let mut word = crate::model::TimedWord::new();
        let mut t = Time::from_integer(0);
        let last = self.beg() + cycles * self.cycle_len;
        for k in 0..=last {
            word.push_merge(t, &self.team_label(k));
            t += Time::from_integer(self.hops[self.fold(k)] as i64);
        }
        word
    }

    /// Union of the labels of every robot at position `k` (folded).
    pub fn team_label(&self, k: usize) -> PropSet {
        let k = self.fold(k);
        self.robots.iter().flat_map(|r| r.labels[k].iter().cloned()).collect()
    }
}

/// Wait- and notify-sets per robot and position of the prefix and one cycle;
/// robots are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncSchedule {
    pub wait: Vec<Vec<BTreeSet<usize>>>,
    pub notify: Vec<Vec<BTreeSet<usize>>>,
}

impl SyncSchedule {
    /// Everybody waits for and notifies everybody at every position.
    pub fn full(robots: usize, positions: usize) -> Self {
        let sets: Vec<Vec<BTreeSet<usize>>> = (0..robots)
            .map(|i| vec![(0..robots).filter(|&j| j != i).collect(); positions])
            .collect();
        SyncSchedule {
            wait: sets.clone(),
            notify: sets,
        }
    }

    pub fn num_robots(&self) -> usize {
        self.wait.len()
    }

    pub fn positions(&self) -> usize {
        self.wait.first().map_or(0, Vec::len)
    }

    /// Robot `i` stops waiting for `j` at `k`, and `j` stops notifying `i`.
    pub fn remove(&mut self, k: usize, i: usize, j: usize) {
        self.wait[i][k].remove(&j);
        self.notify[j][k].remove(&i);
    }

    pub fn add(&mut self, k: usize, i: usize, j: usize) {
        self.wait[i][k].insert(j);
        self.notify[j][k].insert(i);
    }

    pub fn is_full_at(&self, k: usize) -> bool {
        let m = self.num_robots();
        (0..m).all(|i| self.wait[i][k].len() == m - 1 && self.notify[i][k].len() == m - 1)
    }

    pub fn check_reciprocal(&self) -> Result<(), SyncError> {
        for (i, per_pos) in self.wait.iter().enumerate() {
            for (k, set) in per_pos.iter().enumerate() {
                for &j in set {
                    if !self.notify[j][k].contains(&i) {
                        return Err(SyncError::NotReciprocal {
                            position: k,
                            waiter: i + 1,
                            notifier: j + 1,
                        });
                    }
                }
            }
        }
        for (j, per_pos) in self.notify.iter().enumerate() {
            for (k, set) in per_pos.iter().enumerate() {
                for &i in set {
                    if !self.wait[i][k].contains(&j) {
                        return Err(SyncError::NotReciprocal {
                            position: k,
                            waiter: i + 1,
                            notifier: j + 1,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of wait edges.
    pub fn wait_edges(&self) -> usize {
        self.wait.iter().flatten().map(BTreeSet::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Prefix,
    Suffix,
}

/// Closed interval of times relative to a segment start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub lo: Time,
    pub hi: Time,
}

impl Interval {
    pub fn point(t: Time) -> Self {
        Interval { lo: t, hi: t }
    }

    /// Over-approximation of the maximum of two times.
    pub fn max(self, other: Interval) -> Self {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

/// Arrival and satisfaction intervals of one event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventInterval {
    pub arrival: Interval,
    pub depart: Interval,
}

/// Event intervals of a segment, `[robot][position - first]`, where the
/// segment covers positions `first..=last` and position `first` is the
/// common start.
pub fn event_intervals(
    model: &ExecutionModel,
    schedule: &SyncSchedule,
    segment: Segment,
) -> (usize, Vec<Vec<EventInterval>>) {
    let (first, last) = match segment {
        Segment::Prefix => (0, model.beg() - 1),
        Segment::Suffix => (model.beg(), model.end()),
    };
    let m = model.num_robots();
    let zero = EventInterval {
        arrival: Interval::point(Time::from_integer(0)),
        depart: Interval::point(Time::from_integer(0)),
    };
    let mut out = vec![vec![zero]; m];
    for k in first + 1..=last {
        let h = Time::from_integer(model.hops[k - 1] as i64);
        let arrivals: Vec<Interval> = (0..m)
            .map(|i| {
                let prev = out[i][k - 1 - first].depart;
                let r = &model.robots[i];
                Interval {
                    lo: prev.lo + r.rho_lower * h,
                    hi: prev.hi + r.rho_upper * h,
                }
            })
            .collect();
        for i in 0..m {
            let depart = schedule.wait[i][k]
                .iter()
                .fold(arrivals[i], |acc, &j| acc.max(arrivals[j]));
            out[i].push(EventInterval {
                arrival: arrivals[i],
                depart,
            });
        }
    }
    (first, out)
}

/// Generator of every field word the protocol can produce under a schedule.
#[derive(Debug, Clone)]
pub struct FieldWordAutomaton {
    pub graph: LetterGraph,
    /// Progress vector of each node; the start node has none.
    pub nodes: Vec<Option<(Segment, Vec<usize>)>>,
}

impl FieldWordAutomaton {
    pub fn num_states(&self) -> usize {
        self.graph.num_nodes()
    }

    /// Whether the finite word labels a path from the start node.
    pub fn accepts_prefix(&self, letters: &[Letter]) -> bool {
        let mut current: BTreeSet<usize> = BTreeSet::from([self.graph.start]);
        for &l in letters {
            current = current
                .iter()
                .flat_map(|&n| self.graph.edges[n].iter())
                .filter(|&&(a, _, _)| a == l)
                .map(|&(_, t, _)| t)
                .collect();
            if current.is_empty() {
                return false;
            }
        }
        true
    }
}

struct SegmentData {
    first: usize,
    last: usize,
    iv: Vec<Vec<EventInterval>>,
    letters: Vec<Vec<Letter>>,
    /// `members[i][k - first]`: robots in `A(i, k)`, as a bitmask.
    members: Vec<Vec<u64>>,
}

impl SegmentData {
    fn new(
        model: &ExecutionModel,
        schedule: &SyncSchedule,
        alphabet: &Alphabet,
        segment: Segment,
    ) -> Self {
        let (first, iv) = event_intervals(model, schedule, segment);
        let last = first + iv[0].len() - 1;
        let letters = model
            .robots
            .iter()
            .map(|r| (first..=last).map(|k| alphabet.encode(&r.labels[k])).collect())
            .collect();
        let members = (0..model.num_robots())
            .map(|i| {
                (first..=last)
                    .map(|k| {
                        schedule.wait[i][k]
                            .iter()
                            .fold(1u64 << i, |acc, &j| acc | (1 << j))
                    })
                    .collect()
            })
            .collect();
        SegmentData {
            first,
            last,
            iv,
            letters,
            members,
        }
    }

    fn depart(&self, i: usize, k: usize) -> Interval {
        self.iv[i][k - self.first].depart
    }

    /// Letters that may come next from progress vector `p` (next position
    /// per robot), with the resulting progress.
    fn moves(&self, p: &[usize]) -> Vec<(Letter, Vec<usize>)> {
        let m = p.len();
        let pending: Vec<usize> = (0..m).filter(|&i| p[i] <= self.last).collect();
        let mut out = Vec::new();
        for mask in 1u64..(1 << pending.len()) {
            let u: Vec<usize> = pending
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &i)| i)
                .collect();
            if self.letter_allowed(p, &u) {
                let mut next = p.to_vec();
                let mut letter = 0;
                for &i in &u {
                    letter |= self.letters[i][p[i] - self.first];
                    next[i] += 1;
                }
                out.push((letter, next));
            }
        }
        out
    }

    fn letter_allowed(&self, p: &[usize], u: &[usize]) -> bool {
        let in_u = |i: usize| u.contains(&i);
        // done before this letter: positions below p[j]; done by the end of
        // it: also p[j] for j in u
        for &i in u {
            let k = p[i];
            let a = self.members[i][k - self.first];
            for j in 0..p.len() {
                if a & (1 << j) != 0 && p[j] < k {
                    return false;
                }
                if j != i {
                    let aj = self.members[j][k - self.first];
                    let reached = p[j] > k || (p[j] == k && in_u(j));
                    if aj & !a == 0 && !reached {
                        return false;
                    }
                }
            }
        }
        let max_lo = u.iter().map(|&i| self.depart(i, p[i]).lo).max().expect("nonempty");
        let min_hi = u.iter().map(|&i| self.depart(i, p[i]).hi).min().expect("nonempty");
        if max_lo > min_hi {
            return false;
        }
        // depart intervals grow along a robot's positions, so its next
        // pending event is its earliest
        for j in 0..p.len() {
            if !in_u(j) && p[j] <= self.last && self.depart(j, p[j]).hi <= max_lo {
                return false;
            }
        }
        true
    }
}

/// Builds the generator of field words. Position 0 and the suffix start
/// must be fully synchronized.
pub fn build_field_word_automaton(
    model: &ExecutionModel,
    schedule: &SyncSchedule,
    alphabet: &Alphabet,
) -> Result<FieldWordAutomaton, SyncError> {
    schedule.check_reciprocal()?;
    for k in [0, model.beg()] {
        if !schedule.is_full_at(k) {
            let m = schedule.num_robots();
            let (i, j) = (0..m)
                .flat_map(|i| (0..m).map(move |j| (i, j)))
                .find(|&(i, j)| i != j && !schedule.wait[i][k].contains(&j))
                .expect("a missing wait edge");
            return Err(SyncError::MissingGlobalSync(i + 1, j + 1, k));
        }
    }
    let m = model.num_robots();
    let prefix = SegmentData::new(model, schedule, alphabet, Segment::Prefix);
    let suffix = SegmentData::new(model, schedule, alphabet, Segment::Suffix);
    let sync_letter = |k: usize| alphabet.encode(&model.team_label(k));

    let mut nodes: Vec<Option<(Segment, Vec<usize>)>> = vec![None];
    let mut edges: Vec<Vec<(Letter, usize, u64)>> = vec![Vec::new()];
    let mut index: HashMap<(bool, Vec<usize>), usize> = HashMap::new();
    let mut intern = |seg: Segment, p: Vec<usize>, nodes: &mut Vec<_>, edges: &mut Vec<Vec<_>>| {
        let key = (seg == Segment::Suffix, p.clone());
        *index.entry(key).or_insert_with(|| {
            nodes.push(Some((seg, p)));
            edges.push(Vec::new());
            nodes.len() - 1
        })
    };
    let p0 = intern(Segment::Prefix, vec![1; m], &mut nodes, &mut edges);
    edges[0].push((sync_letter(0), p0, 0));
    let mut head = 1;
    while head < nodes.len() {
        let (seg, p) = nodes[head].clone().expect("progress node");
        let data = match seg {
            Segment::Prefix => &prefix,
            Segment::Suffix => &suffix,
        };
        let out = if p.iter().all(|&k| k > data.last) {
            let start = intern(Segment::Suffix, vec![model.beg() + 1; m], &mut nodes, &mut edges);
            vec![(sync_letter(model.beg()), start, 0)]
        } else {
            data.moves(&p)
                .into_iter()
                .map(|(l, next)| (l, intern(seg, next, &mut nodes, &mut edges), 0))
                .collect()
        };
        edges[head] = out;
        head += 1;
    }
    Ok(FieldWordAutomaton {
        graph: LetterGraph { start: 0, edges },
        nodes,
    })
}

/// Result of a language emptiness check of `B_not_phi x W`.
fn violation(
    model: &ExecutionModel,
    schedule: &SyncSchedule,
    b_neg: &BuchiAutomaton,
) -> Result<Option<LassoWord>, SyncError> {
    let w = build_field_word_automaton(model, schedule, &b_neg.alphabet)?;
    let p = Product::build(&w.graph, b_neg);
    Ok(p.find_accepting_lasso().map(|l| p.lasso_word(&l, &b_neg.alphabet)))
}

/// One decision of the greedy schedule reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplainRecord {
    pub position: usize,
    /// 1-based robots: `waiter` waits for `waited`.
    pub waiter: usize,
    pub waited: usize,
    pub kept: bool,
    /// A violating field word when the edge had to be kept.
    pub witness: Option<LassoWord>,
}

#[derive(Debug, Clone)]
pub struct SyncOutcome {
    pub schedule: SyncSchedule,
    /// Emptiness checks performed, excluding the initial full-sync check.
    pub checks: usize,
    pub log: Vec<ExplainRecord>,
}

/// Starts from full synchronization and tries to drop each wait edge in
/// turn (ascending position, waiter, waited robot), keeping a removal only
/// when no violating field word remains possible. Position 0 and the suffix
/// start stay fully synchronized.
pub fn sync_sequences(model: &ExecutionModel, b_neg: &BuchiAutomaton) -> Result<SyncOutcome, SyncError> {
    let m = model.num_robots();
    let mut schedule = SyncSchedule::full(m, model.len());
    if let Some(w) = violation(model, &schedule, b_neg)? {
        return Err(SyncError::NotRobust(format!("{w:?}")));
    }
    let mut checks = 0;
    let mut log = Vec::new();
    for k in 0..=model.end() {
        if k == 0 || k == model.beg() {
            continue;
        }
        for i in 0..m {
            for j in (0..m).filter(|&j| j != i) {
                schedule.remove(k, i, j);
                checks += 1;
                let witness = violation(model, &schedule, b_neg)?;
                let kept = witness.is_some();
                if kept {
                    schedule.add(k, i, j);
                }
                log.push(ExplainRecord {
                    position: k,
                    waiter: i + 1,
                    waited: j + 1,
                    kept,
                    witness,
                });
            }
        }
    }
    Ok(SyncOutcome {
        schedule,
        checks,
        log,
    })
}

/// Whether some field word under `schedule` violates the mission; returns
/// the witness.
pub fn find_violation(
    model: &ExecutionModel,
    schedule: &SyncSchedule,
    b_neg: &BuchiAutomaton,
) -> Result<Option<LassoWord>, SyncError> {
    violation(model, schedule, b_neg)
}

/// Field-cost bound for deviation bounds `[lower, upper]`.
pub fn field_bound(report: &CostReport, lower: Time, upper: Time) -> CostReport {
    CostReport::new(report.planned_cost, report.suffix_duration, lower, upper)
}
