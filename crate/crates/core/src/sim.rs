//! Discrete-event execution of the wait/notify protocol.
//!
//! Each robot notifies its notify-set when it arrives at a position, blocks
//! until every robot in its wait-set has arrived there, satisfies its label
//! and departs. Edge durations are drawn from `[lower * w, upper * w]`.
//! Messages take no time.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::{eval_lasso, LassoWord};
use crate::model::{extract_pi_times, suffix_cost, to_f64, Mission, PropSet, Time, TimedWord};
use crate::sync::{ExecutionModel, FieldWordAutomaton, SyncSchedule};

/// Simultaneity tolerance in time units.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Uniform,
    /// Only the interval endpoints, each with probability one half.
    Adversarial,
    /// Every edge takes exactly its nominal weight.
    Nominal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub num_suffix_cycles: usize,
    pub sampling: Sampling,
    /// Per-robot deviation bounds replacing the model's.
    pub rho_override: Option<Vec<(Time, Time)>>,
}

impl SimConfig {
    pub fn new(seed: u64, num_suffix_cycles: usize, sampling: Sampling) -> Self {
        SimConfig {
            seed,
            num_suffix_cycles,
            sampling,
            rho_override: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("at least one suffix cycle must be simulated")]
    NoCycles,
    #[error("deadlock: {0}")]
    Deadlock(String),
    #[error("need at least two completed suffix cycles, got {0}")]
    InsufficientCycles(usize),
    #[error("cost undefined: fewer than two satisfactions of the optimizing proposition in the suffix")]
    CostUndefined,
    #[error("per-robot deviation override has {0} entries for {1} robots")]
    OverrideMismatch(usize, usize),
}

/// One satisfaction event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    /// Time the robot satisfied its label and departed.
    pub time: f64,
    pub arrival: f64,
    /// 0-based.
    pub robot: usize,
    /// Position along the unrolled run.
    pub position: usize,
    pub state: String,
    pub letter: PropSet,
    /// 0-based robots waited for, in the order their notifications came in.
    pub waits_resolved: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    /// Sorted by time, then robot.
    pub events: Vec<SimEvent>,
    pub observed_word: TimedWord<f64>,
    pub pi_times: Vec<f64>,
    /// Index into `observed_word` where each suffix cycle starts; one extra
    /// entry marks the start of the cycle after the last completed one.
    pub cycle_starts: Vec<usize>,
    /// Completed suffix cycles.
    pub num_cycles: usize,
    /// Time the first robot finished; later letters are incomplete.
    pub horizon: f64,
    pub optimizing_prop: String,
}

impl SimTrace {
    /// The per-cycle lasso: observed prefix and cycles before `c` as stem,
    /// cycle `c` (1-based) as loop.
    pub fn cycle_lasso(&self, c: usize) -> LassoWord {
        let letters = self.observed_word.letters();
        let (a, b) = (self.cycle_starts[c - 1], self.cycle_starts[c]);
        LassoWord::new(letters[..a].to_vec(), letters[a..b].to_vec())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace serializes");
        s.push('\n');
        s
    }

    /// One line per event.
    pub fn event_log(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let letter: Vec<&str> = e.letter.iter().map(String::as_str).collect();
            let waits: Vec<String> = e.waits_resolved.iter().map(|j| (j + 1).to_string()).collect();
            let _ = writeln!(
                out,
                "t={:.6} robot={} k={} state={} arrived={:.6} letter={{{}}} waited=[{}]",
                e.time,
                e.robot + 1,
                e.position,
                e.state,
                e.arrival,
                letter.join(","),
                waits.join(",")
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Arrival {
    time: f64,
    robot: usize,
    position: usize,
}

impl Eq for Arrival {}

impl Ord for Arrival {
    // reversed for a min-heap on (time, robot)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.robot.cmp(&self.robot))
            .then(other.position.cmp(&self.position))
    }
}

impl PartialOrd for Arrival {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Sampler {
    rngs: Vec<ChaCha8Rng>,
    bounds: Vec<(f64, f64)>,
    mode: Sampling,
}

impl Sampler {
    fn duration(&mut self, robot: usize, weight: u64) -> f64 {
        let w = weight as f64;
        let (lo, hi) = self.bounds[robot];
        let rng = &mut self.rngs[robot];
        match self.mode {
            Sampling::Nominal => w,
            Sampling::Uniform => lo * w + rng.gen::<f64>() * (hi - lo) * w,
            Sampling::Adversarial => {
                if rng.gen_bool(0.5) {
                    lo * w
                } else {
                    hi * w
                }
            }
        }
    }
}

/// Runs the prefix and `num_suffix_cycles` suffix cycles, ending with every
/// robot at the first position of the next cycle.
pub fn simulate(model: &ExecutionModel, schedule: &SyncSchedule, config: &SimConfig) -> Result<SimTrace, SimError> {
    if config.num_suffix_cycles == 0 {
        return Err(SimError::NoCycles);
    }
    let m = model.num_robots();
    let bounds: Vec<(Time, Time)> = match &config.rho_override {
        Some(v) if v.len() != m => return Err(SimError::OverrideMismatch(v.len(), m)),
        Some(v) => v.clone(),
        None => model.robots.iter().map(|r| (r.rho_lower, r.rho_upper)).collect(),
    };
    let mut sampler = Sampler {
        rngs: (0..m)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(i as u64);
                rng
            })
            .collect(),
        bounds: bounds.iter().map(|&(l, h)| (to_f64(l), to_f64(h))).collect(),
        mode: config.sampling,
    };
    let last = model.beg() + config.num_suffix_cycles * model.cycle_len;

    let mut arrivals: Vec<Vec<Option<f64>>> = vec![vec![None; last + 1]; m];
    let mut mailbox: HashSet<(usize, usize, usize)> = HashSet::new();
    let mut blocked: Vec<Option<usize>> = vec![None; m];
    let mut resolved: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut events: Vec<SimEvent> = Vec::new();
    let mut queue = BinaryHeap::new();
    for robot in 0..m {
        queue.push(Arrival {
            time: 0.0,
            robot,
            position: 0,
        });
    }

    let ready = |i: usize, k: usize, mailbox: &HashSet<(usize, usize, usize)>| {
        schedule.wait[i][model.fold(k)]
            .iter()
            .all(|&j| mailbox.contains(&(j, i, k)))
    };

    while let Some(Arrival { time, robot, position }) = queue.pop() {
        let k = position;
        let fk = model.fold(k);
        arrivals[robot][k] = Some(time);
        let mut emit = Vec::new();
        for &j in &schedule.notify[robot][fk] {
            mailbox.insert((robot, j, k));
            if blocked[j] == Some(k) && schedule.wait[j][fk].contains(&robot) {
                resolved[j].push(robot);
                if ready(j, k, &mailbox) {
                    blocked[j] = None;
                    emit.push(j);
                }
            }
        }
        resolved[robot] = schedule.wait[robot][fk]
            .iter()
            .copied()
            .filter(|&j| mailbox.contains(&(j, robot, k)))
            .collect();
        if ready(robot, k, &mailbox) {
            emit.push(robot);
        } else {
            blocked[robot] = Some(k);
        }
        emit.sort_unstable();
        for i in emit {
            let arrival = arrivals[i][k].expect("arrived");
            for &j in &schedule.wait[i][fk] {
                let other = arrivals[j][k].expect("notified robots have arrived");
                assert!(time >= other, "robot {} left position {k} before robot {} arrived", i + 1, j + 1);
            }
            events.push(SimEvent {
                time,
                arrival,
                robot: i,
                position: k,
                state: model.robots[i].states[fk].clone(),
                letter: model.robots[i].labels[fk].clone(),
                waits_resolved: std::mem::take(&mut resolved[i]),
            });
            if k < last {
                let d = sampler.duration(i, model.hops[fk]);
                queue.push(Arrival {
                    time: time + d,
                    robot: i,
                    position: k + 1,
                });
            }
        }
    }

    if blocked.iter().any(Option::is_some) {
        return Err(SimError::Deadlock(describe_deadlock(model, schedule, &blocked, &mailbox)));
    }

    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.robot.cmp(&b.robot)).then(a.position.cmp(&b.position)));
    for i in 0..m {
        let times: Vec<f64> = events.iter().filter(|e| e.robot == i).map(|e| e.time).collect();
        debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }

    // merge letters whose times agree within the tolerance
    let mut observed_word = TimedWord::new();
    let mut event_letter = Vec::with_capacity(events.len());
    let mut group_time = f64::NEG_INFINITY;
    for e in &events {
        if e.time - group_time > TIME_EPS {
            group_time = e.time;
            observed_word.entries.push(crate::model::TimedLetter {
                time: e.time,
                letter: PropSet::new(),
            });
        }
        let last = observed_word.entries.last_mut().expect("nonempty");
        last.letter.extend(e.letter.iter().cloned());
        event_letter.push(observed_word.entries.len() - 1);
    }

    // a cycle counts once every robot is still running at its end; without
    // global sync a fast robot may finish long before the others
    let horizon = (0..m)
        .map(|i| events.iter().rev().find(|e| e.robot == i).map_or(0.0, |e| e.time))
        .fold(f64::INFINITY, f64::min);
    let cycle_starts: Vec<usize> = (0..=config.num_suffix_cycles)
        .map(|c| {
            let k = model.beg() + c * model.cycle_len;
            events
                .iter()
                .zip(&event_letter)
                .filter(|(e, _)| e.position == k)
                .map(|(_, &l)| l)
                .min()
                .expect("every robot reaches every position")
        })
        .collect();
    let num_cycles = (1..=config.num_suffix_cycles)
        .take_while(|&c| observed_word.entries[cycle_starts[c]].time <= horizon + TIME_EPS)
        .count();

    Ok(SimTrace {
        pi_times: extract_pi_times(&observed_word, &model.optimizing_prop),
        events,
        observed_word,
        cycle_starts,
        num_cycles,
        horizon,
        optimizing_prop: model.optimizing_prop.clone(),
    })
}

fn describe_deadlock(
    model: &ExecutionModel,
    schedule: &SyncSchedule,
    blocked: &[Option<usize>],
    mailbox: &HashSet<(usize, usize, usize)>,
) -> String {
    let missing = |i: usize| -> Option<(usize, usize)> {
        let k = blocked[i]?;
        schedule.wait[i][model.fold(k)]
            .iter()
            .find(|&&j| !mailbox.contains(&(j, i, k)))
            .map(|&j| (j, k))
    };
    let start = blocked.iter().position(Option::is_some).expect("a blocked robot");
    let mut chain = vec![start];
    let mut seen = BTreeSet::from([start]);
    let mut text = Vec::new();
    let mut i = start;
    while let Some((j, k)) = missing(i) {
        text.push(format!("robot {} waits at position {k} for robot {}", i + 1, j + 1));
        if !seen.insert(j) {
            chain.push(j);
            return format!("wait cycle: {}", text.join(", "));
        }
        chain.push(j);
        i = j;
    }
    format!(
        "{}; robot {} will never notify",
        text.join(", "),
        chain.last().expect("nonempty") + 1
    )
}

/// Maximum gap between consecutive satisfactions of the optimizing
/// proposition from the first suffix cycle on.
pub fn observed_cost(trace: &SimTrace) -> Result<f64, SimError> {
    if trace.num_cycles < 2 {
        return Err(SimError::InsufficientCycles(trace.num_cycles));
    }
    let start = trace.observed_word.entries[trace.cycle_starts[0]].time;
    let times: Vec<f64> = trace
        .pi_times
        .iter()
        .copied()
        .filter(|&t| t >= start && t <= trace.horizon + TIME_EPS)
        .collect();
    suffix_cost(&times, 0).map_err(|_| SimError::CostUndefined)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub cycles_checked: usize,
    /// 1-based cycle numbers whose lasso violates the mission.
    pub failures: Vec<(usize, LassoWord)>,
    /// Whether the observed word labels a path of the field word generator.
    pub in_field_language: Option<bool>,
}

impl Verdict {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.in_field_language != Some(false)
    }
}

/// Checks every per-cycle lasso against the mission and, when supplied, the
/// observed word against the field word generator.
pub fn verify_trace(trace: &SimTrace, mission: &Mission, w: Option<&FieldWordAutomaton>) -> Verdict {
    let failures = (1..=trace.num_cycles)
        .map(|c| (c, trace.cycle_lasso(c)))
        .filter(|(_, l)| !eval_lasso(&mission.formula, l))
        .collect();
    let in_field_language = w.map(|w| {
        let alphabet = crate::ltl::Alphabet::new(&mission.global_props);
        let letters: Vec<_> = trace
            .observed_word
            .entries
            .iter()
            .take_while(|e| e.time <= trace.horizon + TIME_EPS)
            .map(|e| alphabet.encode(&e.letter))
            .collect();
        w.accepts_prefix(&letters)
    });
    Verdict {
        cycles_checked: trace.num_cycles,
        failures,
        in_field_language,
    }
}

/// Timeline figure: one lane per robot, a dot per satisfaction event and a
/// dashed line from each waited robot's arrival to the waiting robot's
/// departure.
pub fn plot_svg(trace: &SimTrace, robot_names: &[String]) -> String {
    let m = robot_names.len();
    let t_max = trace.events.iter().map(|e| e.time).fold(1.0, f64::max);
    let (left, right, lane, top) = (90.0, 30.0, 60.0, 30.0);
    let width = 1200.0;
    let height = top * 2.0 + lane * m as f64;
    let x = |t: f64| left + (width - left - right) * t / t_max;
    let y = |i: usize| top + lane * (i as f64 + 0.5);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, name) in robot_names.iter().enumerate() {
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.2}" x2="{x2:.2}" y2="{y:.2}" stroke="#999"/><text x="8" y="{ty:.2}">{name}</text>"##,
            y = y(i),
            x2 = width - right,
            ty = y(i) + 4.0,
            name = xml_escape(name)
        );
    }
    for (ci, &start) in trace.cycle_starts.iter().enumerate() {
        let t = trace.observed_word.entries.get(start).map_or(0.0, |e| e.time);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{b:.2}" stroke="#cde" stroke-width="3"><title>cycle {c}</title></line>"##,
            x = x(t),
            b = height - top,
            c = ci + 1
        );
    }
    for e in &trace.events {
        for &j in &e.waits_resolved {
            let _ = writeln!(
                s,
                r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#c44" stroke-dasharray="3,2"/>"##,
                x1 = x(e.time.min(e.arrival.max(0.0)).max(0.0)),
                y1 = y(j),
                x2 = x(e.time),
                y2 = y(e.robot)
            );
        }
    }
    for e in &trace.events {
        let fill = if e.letter.contains(&trace.optimizing_prop) { "#2a6" } else { "#246" };
        let letter: Vec<&str> = e.letter.iter().map(String::as_str).collect();
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{fill}"><title>t={t:.4} k={k} {state} {{{l}}}</title></circle>"#,
            cx = x(e.time),
            cy = y(e.robot),
            t = e.time,
            k = e.position,
            state = xml_escape(&e.state),
            l = xml_escape(&letter.join(","))
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{Alphabet, Formula};
    use crate::model::props;
    use crate::optimal::tests::example_mission;
    use crate::sync::tests::{example_model, rho};
    use crate::sync::{build_field_word_automaton, sync_sequences};

    fn example_schedule() -> (ExecutionModel, SyncSchedule) {
        let (model, b_neg) = example_model(rho().0, rho().1);
        let s = sync_sequences(&model, &b_neg).unwrap().schedule;
        (model, s)
    }

    #[test]
    fn nominal_run_reproduces_the_plan() {
        let (model, s) = example_schedule();
        let trace = simulate(&model, &s, &SimConfig::new(7, 3, Sampling::Nominal)).unwrap();
        let times: Vec<f64> = trace.observed_word.entries.iter().map(|e| e.time).collect();
        let expected: Vec<f64> = [0.0].into_iter().chain((2..=15).map(f64::from)).collect();
        assert_eq!(times, expected);
        let planned: Vec<PropSet> = (0..15).map(|k| model.team_label(k)).collect();
        assert_eq!(trace.observed_word.letters(), planned);
        assert_eq!(observed_cost(&trace).unwrap(), 2.0);
        let v = verify_trace(&trace, &example_mission(), None);
        assert!(v.ok());
    }

    #[test]
    fn perturbed_runs_stay_within_bound() {
        let (model, s) = example_schedule();
        let alphabet = Alphabet::new(&example_mission().global_props);
        let w = build_field_word_automaton(&model, &s, &alphabet).unwrap();
        for seed in 0..20 {
            for mode in [Sampling::Uniform, Sampling::Adversarial] {
                let trace = simulate(&model, &s, &SimConfig::new(seed, 50, mode)).unwrap();
                let c = observed_cost(&trace).unwrap();
                assert!((1.9 - TIME_EPS..=2.5 + TIME_EPS).contains(&c), "{c}");
                assert!(verify_trace(&trace, &example_mission(), Some(&w)).ok());
            }
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let (model, s) = example_schedule();
        let cfg = SimConfig::new(42, 10, Sampling::Uniform);
        assert_eq!(simulate(&model, &s, &cfg).unwrap(), simulate(&model, &s, &cfg).unwrap());
        let other = simulate(&model, &s, &SimConfig::new(43, 10, Sampling::Uniform)).unwrap();
        assert_ne!(simulate(&model, &s, &cfg).unwrap(), other);
    }

    #[test]
    fn forged_violation_is_reported() {
        let (model, s) = example_schedule();
        let mut trace = simulate(&model, &s, &SimConfig::new(1, 2, Sampling::Nominal)).unwrap();
        // replace the p3 of the second cycle
        for e in &mut trace.observed_word.entries {
            if e.letter.contains("p3") && e.time > 6.5 {
                e.letter = props(["p1", "pi"]);
            }
        }
        let v = verify_trace(&trace, &example_mission(), None);
        assert!(!v.ok());
        assert_eq!(v.failures[0].0, 2);
        assert!(!eval_lasso(&example_mission().formula, &v.failures[0].1));
        let _ = Formula::True;
    }

    #[test]
    fn unreciprocated_wait_deadlocks() {
        let (model, mut s) = example_schedule();
        s.wait[0][1].insert(1);
        let err = simulate(&model, &s, &SimConfig::new(1, 2, Sampling::Nominal)).unwrap_err();
        assert!(matches!(err, SimError::Deadlock(ref t) if t.contains("robot 1 waits at position 1 for robot 2")), "{err}");
    }

    #[test]
    fn cost_needs_two_cycles() {
        let (model, s) = example_schedule();
        let trace = simulate(&model, &s, &SimConfig::new(1, 1, Sampling::Nominal)).unwrap();
        assert_eq!(observed_cost(&trace), Err(SimError::InsufficientCycles(1)));
        assert_eq!(
            simulate(&model, &s, &SimConfig::new(1, 0, Sampling::Nominal)),
            Err(SimError::NoCycles)
        );
    }

    #[test]
    fn svg_has_a_lane_per_robot() {
        let (model, s) = example_schedule();
        let trace = simulate(&model, &s, &SimConfig::new(3, 2, Sampling::Uniform)).unwrap();
        let svg = plot_svg(&trace, &["r1".into(), "r2".into()]);
        assert!(svg.starts_with("<svg") && svg.contains(">r1<") && svg.contains(">r2<"));
        assert_eq!(svg.matches("<circle").count(), trace.events.len());
        assert!(!trace.event_log().is_empty());
    }
}
