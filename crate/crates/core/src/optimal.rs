//! Optimal satisfying runs of the team transition system.
//!
//! The product of the team system with the mission automaton is searched for
//! an accepting lasso whose suffix minimizes the largest time between
//! consecutive visits to states labeled with the optimizing proposition.
//!
//! Between two such visits `u` and `v` a run follows a path whose interior
//! avoids the proposition. `d(u, v)` is the shortest such path and
//! `dacc(u, v)` the shortest one that also enters an accepting state. For a
//! threshold `J`, the graph `H_J` over proposition states has an edge
//! `u -> v` when `d(u, v) <= J`, marked when `dacc(u, v) <= J`. A run of cost
//! at most `J` exists iff some marked edge lies inside a strongly connected
//! component of `H_J` reachable from the start; the optimal cost is the
//! smallest such threshold among the `d` and `dacc` values.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::ltl::{eval_lasso, ltl_to_buchi, Alphabet, LassoWord, LetterGraph, Product};
use crate::model::{
    extract_pi_times, suffix_cost, team_deviation, CostReport, Mission, PrefixSuffixRun, RobotModel,
    Time, TimedWord,
};
use crate::team::{max_states, parse_traveling, TeamError, TeamTransitionSystem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("no satisfying run: {0}")]
    NoSatisfyingRun(String),
    #[error(transparent)]
    Team(#[from] TeamError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// The planned team run with its per-robot projections, timing and cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamPlan {
    /// Team state names.
    pub team_run: PrefixSuffixRun<String>,
    /// Team state ids of `team_run`.
    pub team_run_ids: PrefixSuffixRun<usize>,
    pub per_robot_runs: Vec<PrefixSuffixRun<String>>,
    /// Team-state labels along the prefix and one cycle.
    pub labels: Vec<crate::model::PropSet>,
    /// `hops[k]` is the duration from position `k` to the next; the last
    /// entry wraps from the cycle end to its start.
    pub hops: Vec<u64>,
    /// Nominal time of each position of the prefix and first cycle.
    pub times: Vec<Time>,
    pub timed_word: TimedWord<Time>,
    pub cost_report: CostReport,
    pub suffix_start_time: Time,
}

impl TeamPlan {
    pub fn num_robots(&self) -> usize {
        self.per_robot_runs.len()
    }

    pub fn prefix_len(&self) -> usize {
        self.team_run.prefix.len()
    }

    pub fn cycle_len(&self) -> usize {
        self.team_run.suffix_cycle.len()
    }

    /// The planned word as a lasso of letters.
    pub fn lasso_word(&self) -> LassoWord {
        let p = self.prefix_len();
        LassoWord::new(self.labels[..p].to_vec(), self.labels[p..].to_vec())
    }
}

fn dijkstra_multi(
    n: usize,
    sources: &[usize],
    succ: impl Fn(usize) -> Vec<(usize, u64)>,
) -> (Vec<Option<u64>>, Vec<Option<usize>>) {
    let mut dist = vec![None; n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = Some(0);
        heap.push(Reverse((0u64, s)));
    }
    while let Some(Reverse((d, x))) = heap.pop() {
        if dist[x] != Some(d) {
            continue;
        }
        for (y, w) in succ(x) {
            let nd = d + w;
            if dist[y].is_none_or(|old| nd < old) {
                dist[y] = Some(nd);
                pred[y] = Some(x);
                heap.push(Reverse((nd, y)));
            }
        }
    }
    (dist, pred)
}

/// Shortest proposition-free segments out of one proposition state.
struct Segments {
    /// Per target: (d, dacc).
    to: HashMap<usize, (u64, Option<u64>)>,
}

/// Searches from `u` through states that are not proposition states; layer
/// 1 means an accepting state has been entered. Returns the distances and
/// predecessors over layered nodes `2 * state + layer`.
fn segment_search(
    prod: &Product,
    is_pi: &[bool],
    u: usize,
) -> (Vec<Option<u64>>, Vec<Option<usize>>) {
    let n = prod.num_states();
    let mut dist: Vec<Option<u64>> = vec![None; 2 * n];
    let mut pred: Vec<Option<usize>> = vec![None; 2 * n];
    let mut heap = BinaryHeap::new();
    dist[2 * u] = Some(0);
    heap.push(Reverse((0u64, 2 * u)));
    while let Some(Reverse((d, node))) = heap.pop() {
        if dist[node] != Some(d) {
            continue;
        }
        let (x, layer) = (node / 2, node % 2);
        if node != 2 * u && is_pi[x] {
            continue;
        }
        for &(y, w, _) in &prod.succ[x] {
            let ny = 2 * y + (layer | prod.accepting[y] as usize);
            let nd = d + w;
            if dist[ny].is_none_or(|old| nd < old) {
                dist[ny] = Some(nd);
                pred[ny] = Some(node);
                heap.push(Reverse((nd, ny)));
            }
        }
    }
    (dist, pred)
}

fn segments_from(prod: &Product, is_pi: &[bool], u: usize) -> Segments {
    let (dist, _) = segment_search(prod, is_pi, u);
    let mut to = HashMap::new();
    for v in (0..prod.num_states()).filter(|&v| is_pi[v]) {
        let plain = [dist[2 * v], dist[2 * v + 1]].into_iter().flatten().min();
        if let Some(d) = plain.filter(|&d| d > 0) {
            to.insert(v, (d, dist[2 * v + 1]));
        }
    }
    Segments { to }
}

/// States after `u` up to and including `v` along a shortest segment.
fn segment_path(prod: &Product, is_pi: &[bool], u: usize, v: usize, accepting: bool) -> Vec<usize> {
    let (dist, pred) = segment_search(prod, is_pi, u);
    let mut node = if accepting {
        2 * v + 1
    } else {
        match (dist[2 * v], dist[2 * v + 1]) {
            (Some(a), Some(b)) if b <= a => 2 * v + 1,
            (Some(_), _) => 2 * v,
            _ => 2 * v + 1,
        }
    };
    let mut path = vec![node / 2];
    while let Some(p) = pred[node] {
        if p == 2 * u {
            break;
        }
        node = p;
        path.push(node / 2);
    }
    path.reverse();
    path
}

/// Strongly connected component index per node (iterative Kosaraju).
fn scc(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some(&mut (x, ref mut i)) = stack.last_mut() {
            if let Some(&y) = adj[x].get(*i) {
                *i += 1;
                if !seen[y] {
                    seen[y] = true;
                    stack.push((y, 0));
                }
            } else {
                order.push(x);
                stack.pop();
            }
        }
    }
    let mut radj = vec![Vec::new(); n];
    for (x, ys) in adj.iter().enumerate() {
        for &y in ys {
            radj[y].push(x);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut c = 0;
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = c;
        while let Some(x) = stack.pop() {
            for &y in &radj[x] {
                if comp[y] == usize::MAX {
                    comp[y] = c;
                    stack.push(y);
                }
            }
        }
        c += 1;
    }
    comp
}

struct Search<'a> {
    prod: &'a Product,
    is_pi: Vec<bool>,
    /// Reachable proposition states, and their position in this list.
    pis: Vec<usize>,
    local: HashMap<usize, usize>,
    segs: Vec<Segments>,
}

impl Search<'_> {
    /// `H_J` adjacency over local indices.
    fn graph(&self, j: u64) -> Vec<Vec<(usize, u64)>> {
        self.segs
            .iter()
            .map(|s| {
                let mut out: Vec<(usize, u64)> = s
                    .to
                    .iter()
                    .filter(|(_, &(d, _))| d <= j)
                    .map(|(v, &(d, _))| (self.local[v], d))
                    .collect();
                out.sort_unstable();
                out
            })
            .collect()
    }

    fn marked_in_scc(&self, j: u64) -> Vec<(usize, usize, u64)> {
        let g = self.graph(j);
        let adj: Vec<Vec<usize>> = g.iter().map(|o| o.iter().map(|&(v, _)| v).collect()).collect();
        let comp = scc(g.len(), &adj);
        let mut out = Vec::new();
        for (u, s) in self.segs.iter().enumerate() {
            for (v, &(_, acc)) in &s.to {
                let v = self.local[v];
                if let Some(a) = acc.filter(|&a| a <= j) {
                    if comp[u] == comp[v] {
                        out.push((u, v, a));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Finds a satisfying run of the team minimizing the steady-state maximum
/// time between satisfactions of the optimizing proposition. Among equally
/// good runs the shorter suffix, then the shorter prefix, then the
/// lexicographically smaller state sequence wins.
pub fn optimal_run(tts: &TeamTransitionSystem, mission: &Mission) -> Result<TeamPlan, PlanError> {
    let alphabet = Alphabet::new(&mission.global_props);
    let ba = ltl_to_buchi(&mission.formula, &alphabet);
    let gen = LetterGraph::from_ts(&tts.ts, &alphabet);
    let cap = max_states();
    let prod = Product::build_capped(&gen, &ba, cap).ok_or(TeamError::TooManyStates(cap))?;
    let n = prod.num_states();
    let pi = mission.optimizing_prop.as_str();

    let (dist0, pred0) = dijkstra_multi(n, &prod.initial, |x| {
        prod.succ[x].iter().map(|&(y, w, _)| (y, w)).collect()
    });
    let is_pi: Vec<bool> = (0..n)
        .map(|p| {
            let g = prod.states[p].0;
            g != gen.start && tts.ts.label(g - 1).contains(pi)
        })
        .collect();
    let pis: Vec<usize> = (0..n).filter(|&p| is_pi[p] && dist0[p].is_some()).collect();
    let local: HashMap<usize, usize> = pis.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let segs = pis
        .iter()
        .map(|&u| {
            let mut s = segments_from(&prod, &is_pi, u);
            s.to.retain(|v, _| local.contains_key(v));
            s
        })
        .collect();
    let search = Search {
        prod: &prod,
        is_pi,
        pis,
        local,
        segs,
    };

    let mut candidates: Vec<u64> = search
        .segs
        .iter()
        .flat_map(|s| s.to.values().flat_map(|&(d, a)| std::iter::once(d).chain(a)))
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    let no_run = || {
        PlanError::NoSatisfyingRun(format!(
            "the product of the team system ({} states) with the automaton of the mission ({} states) has no accepting lasso",
            tts.num_states(),
            ba.num_states()
        ))
    };
    if candidates.is_empty() || search.marked_in_scc(*candidates.last().unwrap()).is_empty() {
        return Err(no_run());
    }
    // smallest feasible threshold
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if search.marked_in_scc(candidates[mid]).is_empty() {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let j = candidates[lo];

    let best = best_lasso(&search, j, &dist0);
    let (prefix_prod, cycle_prod) = best;
    let mut prefix = vec![*prefix_prod.last().expect("nonempty")];
    let mut x = prefix[0];
    while let Some(p) = pred0[x] {
        prefix.push(p);
        x = p;
    }
    prefix.reverse();
    let to_ts = |p: &usize| prod.states[*p].0;
    let prefix_ts: Vec<usize> = prefix
        .iter()
        .map(to_ts)
        .filter(|&g| g != gen.start)
        .map(|g| g - 1)
        .collect();
    let mut cycle_ts: Vec<usize> = cycle_prod.iter().map(|p| to_ts(p) - 1).collect();
    cycle_ts = primitive_period(cycle_ts);

    let run = PrefixSuffixRun::new(prefix_ts, cycle_ts);
    let plan = build_plan(tts, mission, run)?;
    if plan.cost_report.planned_cost != Time::from_integer(j as i64) {
        return Err(PlanError::Internal(format!(
            "reconstructed run costs {} but the threshold search found {j}",
            plan.cost_report.planned_cost
        )));
    }
    Ok(plan)
}

fn primitive_period(cycle: Vec<usize>) -> Vec<usize> {
    let n = cycle.len();
    for p in 1..n {
        if n.is_multiple_of(p) && (0..n).all(|k| cycle[k] == cycle[k % p]) {
            return cycle[..p].to_vec();
        }
    }
    cycle
}

/// Chooses the accepting cycle of cost at most `j` with the shortest
/// duration, then the shortest prefix, then the smallest state sequence.
/// Returns the product prefix end state (as a one-element vector) and the
/// cycle returning to it.
fn best_lasso(search: &Search, j: u64, dist0: &[Option<u64>]) -> (Vec<usize>, Vec<usize>) {
    let prod = search.prod;
    let g = search.graph(j);
    let m = g.len();
    let mut rev = vec![Vec::new(); m];
    for (u, out) in g.iter().enumerate() {
        for &(v, d) in out {
            rev[v].push((u, d));
        }
    }
    let marked = search.marked_in_scc(j);
    // shortest return v ~> u in H_J, per distinct u
    let mut back: HashMap<usize, (Vec<Option<u64>>, Vec<Option<usize>>)> = HashMap::new();
    let mut best_total = u64::MAX;
    for &(u, v, a) in &marked {
        let (dist, _) = back
            .entry(u)
            .or_insert_with(|| dijkstra_multi(m, &[u], |x| rev[x].clone()));
        if let Some(r) = dist[v] {
            best_total = best_total.min(a + r);
        }
    }
    let mut best: Option<((u64, Vec<usize>), (Vec<usize>, Vec<usize>))> = None;
    for &(u, v, a) in &marked {
        let (dist, pred) = &back[&u];
        if dist[v].map(|r| a + r) != Some(best_total) {
            continue;
        }
        // H path v -> ... -> u: pred on the reversed search points toward u
        let mut hops = vec![v];
        let mut x = v;
        while x != u {
            x = pred[x].expect("path to u");
            hops.push(x);
        }
        let pu = search.pis[u];
        let mut cycle = segment_path(prod, &search.is_pi, pu, search.pis[v], true);
        for w in hops.windows(2) {
            cycle.extend(segment_path(prod, &search.is_pi, search.pis[w[0]], search.pis[w[1]], false));
        }
        // cycle runs from after pu to pu; rotate to the state closest to the start
        let k = (0..cycle.len())
            .min_by_key(|&k| (dist0[cycle[k]].expect("reachable"), k))
            .expect("nonempty cycle");
        let rotated: Vec<usize> = cycle[k + 1..].iter().chain(&cycle[..=k]).copied().collect();
        let pre = dist0[cycle[k]].expect("reachable");
        let key_states: Vec<usize> = std::iter::once(cycle[k]).chain(rotated.iter().copied()).collect();
        let key = (pre, key_states);
        if best.as_ref().is_none_or(|(bk, _)| key < *bk) {
            best = Some((key, (vec![cycle[k]], rotated)));
        }
    }
    best.expect("a feasible threshold has a cycle").1
}

/// Derives times, labels, projections and cost for a run of the team system.
pub fn build_plan(
    tts: &TeamTransitionSystem,
    mission: &Mission,
    run: PrefixSuffixRun<usize>,
) -> Result<TeamPlan, PlanError> {
    let ts = &tts.ts;
    let seq: Vec<usize> = run.prefix.iter().chain(&run.suffix_cycle).copied().collect();
    let beg = run.prefix.len();
    let mut hops = Vec::with_capacity(seq.len());
    for k in 0..seq.len() {
        let next = if k + 1 < seq.len() { seq[k + 1] } else { seq[beg] };
        let w = ts.weight(seq[k], next).ok_or_else(|| {
            PlanError::Internal(format!("no transition {} -> {}", ts.name(seq[k]), ts.name(next)))
        })?;
        hops.push(w);
    }
    let mut times = vec![Time::from_integer(0)];
    for &w in &hops[..seq.len() - 1] {
        times.push(times[times.len() - 1] + Time::from_integer(w as i64));
    }
    let labels: Vec<_> = seq.iter().map(|&q| ts.label(q).clone()).collect();
    let mut timed_word = TimedWord::new();
    for (t, l) in times.iter().zip(&labels) {
        timed_word.push_merge(*t, l);
    }
    let suffix_duration = Time::from_integer(hops[beg..].iter().sum::<u64>() as i64);
    let suffix_start_time = times[beg];

    // cost over three unrolled cycles, measured from the first suffix position
    let mut unrolled = TimedWord::new();
    for (t, l) in times.iter().zip(&labels).take(beg) {
        unrolled.push_merge(*t, l);
    }
    for c in 0..3 {
        for k in beg..seq.len() {
            unrolled.push_merge(times[k] + suffix_duration * Time::from_integer(c), &labels[k]);
        }
    }
    let pi = &mission.optimizing_prop;
    let pi_times = extract_pi_times(&unrolled, pi);
    let first_suffix = pi_times.iter().take_while(|&&t| t < suffix_start_time).count();
    let cost = suffix_cost(&pi_times, first_suffix)
        .map_err(|e| PlanError::Internal(format!("{e} on the planned run")))?;

    let team_run = run.map(|&q| ts.name(q).to_string());
    let per_robot_runs = (0..tts.num_robots())
        .map(|i| run.map(|&q| tts.element_name(q, i)))
        .collect();
    let (lo, hi) = team_deviation(&tts.robots);
    let plan = TeamPlan {
        team_run,
        team_run_ids: run,
        per_robot_runs,
        labels,
        hops,
        times,
        timed_word,
        cost_report: CostReport::new(cost, suffix_duration, lo, hi),
        suffix_start_time,
    };
    if !eval_lasso(&mission.formula, &plan.lasso_word()) {
        return Err(PlanError::Internal("planned word violates the mission".into()));
    }
    Ok(plan)
}

/// Robot `i`'s (0-based) run: element `i` of every team state.
pub fn project_run(plan: &TeamPlan, i: usize) -> PrefixSuffixRun<String> {
    plan.team_run.map(|name| {
        name.split(',')
            .nth(i)
            .expect("team state has an element per robot")
            .to_string()
    })
}

/// Adds the traveling states used by `plan` to the robots' systems, with an
/// edge of the team transition's weight wherever a traveling state is
/// entered or left. Applying it again changes nothing.
pub fn insert_traveling_states(robots: &[RobotModel], plan: &TeamPlan) -> Vec<RobotModel> {
    let mut out = robots.to_vec();
    let beg = plan.prefix_len();
    let len = plan.team_run.len();
    for (i, robot) in out.iter_mut().enumerate() {
        let run = project_run(plan, i);
        for k in 0..len {
            let a = run.at(k).clone();
            let b = if k + 1 < len { run.at(k + 1).clone() } else { run.at(beg).clone() };
            if parse_traveling(&a).is_none() && parse_traveling(&b).is_none() {
                continue;
            }
            let sa = robot.ts.ensure_state(&a, Default::default());
            let sb = robot.ts.ensure_state(&b, Default::default());
            if robot.ts.weight(sa, sb).is_none() {
                robot.ts.add_edge(sa, sb, plan.hops[k]).expect("positive weight");
            }
        }
    }
    out
}

/// Full planning front end: team system, then optimal run.
pub fn plan_team(robots: &[RobotModel], mission: &Mission) -> Result<(TeamTransitionSystem, TeamPlan), PlanError> {
    let tts = crate::team::construct_team_ts(robots)?;
    let plan = optimal_run(&tts, mission)?;
    Ok((tts, plan))
}
