//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use teamsync::ltl::{ltl_to_buchi, parse_ltl, Alphabet, BuchiAutomaton, Formula};
use teamsync::model::{props, Mission, PropSet, RobotModel, Time, TransitionSystem};
use teamsync::optimal::{insert_traveling_states, plan_team, PlanError, TeamPlan};
use teamsync::sync::{sync_sequences, ExecutionModel, SyncError, SyncSchedule};
use teamsync::team::{TeamError, TeamTransitionSystem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// `(name, text)` of the files in `data/<dir>`.
pub fn data_files(dir: &str, names: &[&str]) -> Vec<(String, String)> {
    names
        .iter()
        .map(|n| {
            let p = data_dir().join(dir).join(n);
            (p.display().to_string(), std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}

/// A strongly connected system on `s0..s{n-1}`: a ring plus random chords.
pub fn random_ts(rng: &mut ChaCha8Rng, n: usize, max_w: u64, labels: &[&str], label_p: f64) -> TransitionSystem {
    let label = |rng: &mut ChaCha8Rng| -> PropSet {
        labels
            .iter()
            .filter(|_| rng.gen_bool(label_p))
            .map(|s| s.to_string())
            .collect()
    };
    let l0 = label(rng);
    let mut ts = TransitionSystem::new("s0", l0);
    for i in 1..n {
        let l = label(rng);
        ts.add_state(&format!("s{i}"), l).unwrap();
    }
    for i in 0..n {
        ts.add_edge(i, (i + 1) % n, rng.gen_range(1..=max_w)).unwrap();
    }
    for a in 0..n {
        for b in 0..n {
            if ts.weight(a, b).is_none() && rng.gen_bool(0.3) {
                ts.add_edge(a, b, rng.gen_range(1..=max_w)).unwrap();
            }
        }
    }
    ts
}

pub fn random_robots(rng: &mut ChaCha8Rng, m: usize, max_states: usize, max_w: u64, labels: &[&str]) -> Vec<RobotModel> {
    let los = [Time::new(9, 10), Time::new(19, 20), Time::from_integer(1)];
    let his = [Time::from_integer(1), Time::new(21, 20), Time::new(11, 10)];
    (0..m)
        .map(|i| {
            let n = rng.gen_range(1..=max_states);
            let ts = random_ts(rng, n, max_w, labels, 0.35);
            let lo = *los.choose(rng).unwrap();
            let hi = *his.choose(rng).unwrap();
            RobotModel::new(i + 1, format!("r{}", i + 1), ts, lo, hi).unwrap()
        })
        .collect()
}

pub const MISSIONS: &[&str] = &[
    "G F pi && G (p -> X (!p U q))",
    "G F pi && G !(p && q)",
    "G F pi && G F p",
    "G F pi && G (q -> X !q)",
    "G F pi && G (p -> F q)",
    "G F pi",
];

pub fn mission(text: &str) -> Mission {
    let pset = props(["p", "q", "pi"]);
    Mission::new(parse_ltl(text, &pset).unwrap(), "pi", pset).unwrap()
}

pub fn b_neg(m: &Mission) -> BuchiAutomaton {
    ltl_to_buchi(&Formula::not(m.formula.clone()), &Alphabet::new(&m.global_props))
}

/// Everything needed to simulate one planned instance.
pub struct Instance {
    pub name: String,
    pub mission: Mission,
    pub plan: TeamPlan,
    pub model: ExecutionModel,
    pub schedule: SyncSchedule,
    pub b_neg: BuchiAutomaton,
}

pub fn instance(name: &str, robots: &[RobotModel], mission: &Mission) -> Result<Instance, String> {
    let (_, plan) = plan_team(robots, mission).map_err(|e| e.to_string())?;
    let augmented = insert_traveling_states(robots, &plan);
    let model = ExecutionModel::from_plan(&plan, &augmented, &mission.optimizing_prop);
    let b_neg = b_neg(mission);
    let schedule = sync_sequences(&model, &b_neg).map_err(|e| e.to_string())?.schedule;
    Ok(Instance {
        name: name.to_string(),
        mission: mission.clone(),
        plan,
        model,
        schedule,
        b_neg,
    })
}

pub fn example1_robots() -> Vec<RobotModel> {
    data_files("example1", &["r1.ts", "r2.ts"])
        .iter()
        .enumerate()
        .map(|(i, (n, t))| teamsync::io::parse_robot(t, n, i + 1).unwrap())
        .collect()
}

pub fn example1_mission() -> Mission {
    let f = &data_files("example1", &["mission.ltl"])[0];
    teamsync::io::parse_mission(&f.1, &f.0, &props(["p1", "p2", "p3", "pi"])).unwrap()
}

pub fn example1_instance() -> Instance {
    instance("example 1", &example1_robots(), &example1_mission()).unwrap()
}

/// Twenty random two-robot instances that plan and synchronize.
pub fn random_robust_instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = rng(seed);
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        assert!(tries < 5000, "could not find enough robust instances");
        let robots = random_robots(&mut rng, 2, 4, 3, &["p", "q", "pi"]);
        let text = *MISSIONS.choose(&mut rng).unwrap();
        let m = mission(text);
        if let Ok(inst) = instance(&format!("random #{tries} ({text})"), &robots, &m) {
            out.push(inst);
        }
    }
    out
}

/// Whether an error only means the instance is unusable.
pub fn is_skippable(e: &PlanError) -> bool {
    matches!(e, PlanError::NoSatisfyingRun(_) | PlanError::Team(TeamError::TooManyStates(_)))
}

pub fn is_not_robust(e: &SyncError) -> bool {
    matches!(e, SyncError::NotRobust(_))
}

/// Product of a team system with a Büchi automaton reading the label of each
/// entered state, built directly from the definitions.
pub struct Oracle {
    /// (team state, automaton state)
    pub states: Vec<(usize, usize)>,
    pub initial: Vec<usize>,
    pub succ: Vec<Vec<(usize, u64)>>,
    pub accepting: Vec<bool>,
    pub pi: Vec<bool>,
}

impl Oracle {
    pub fn new(tts: &TeamTransitionSystem, mission: &Mission) -> Self {
        let alphabet = Alphabet::new(&mission.global_props);
        let ba = ltl_to_buchi(&mission.formula, &alphabet);
        let ts = &tts.ts;
        let letter = |q: usize| alphabet.encode(ts.label(q));
        let step = |b: usize, q: usize| -> Vec<usize> {
            ba.transitions[b]
                .iter()
                .filter(|(g, _)| g.matches(letter(q)))
                .map(|&(_, t)| t)
                .collect()
        };
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut states = Vec::new();
        let mut queue = VecDeque::new();
        let mut initial = Vec::new();
        for &b0 in &ba.initial {
            for b in step(b0, ts.initial()) {
                let key = (ts.initial(), b);
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(key) {
                    e.insert(states.len());
                    initial.push(states.len());
                    states.push(key);
                    queue.push_back(key);
                }
            }
        }
        let mut edges: HashMap<usize, Vec<(usize, u64)>> = HashMap::new();
        while let Some((q, b)) = queue.pop_front() {
            let src = index[&(q, b)];
            for &(q2, w) in ts.successors(q) {
                for b2 in step(b, q2) {
                    let key = (q2, b2);
                    let id = *index.entry(key).or_insert_with(|| {
                        states.push(key);
                        queue.push_back(key);
                        states.len() - 1
                    });
                    edges.entry(src).or_default().push((id, w));
                }
            }
        }
        let succ = (0..states.len()).map(|i| edges.remove(&i).unwrap_or_default()).collect();
        let accepting = states.iter().map(|&(_, b)| ba.accepting[b]).collect();
        let pi = states.iter().map(|&(q, _)| ts.label(q).contains(&mission.optimizing_prop)).collect();
        Oracle {
            states,
            initial,
            succ,
            accepting,
            pi,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Cost of a cycle given as product states `c[0] -> c[1] -> ... -> c[0]`.
    fn cycle_cost(&self, c: &[usize]) -> Option<u64> {
        let n = c.len();
        let w = |i: usize| {
            self.succ[c[i]]
                .iter()
                .filter(|&&(t, _)| t == c[(i + 1) % n])
                .map(|&(_, w)| w)
                .min()
                .unwrap()
        };
        let start = (0..n).find(|&i| self.pi[c[i]])?;
        let mut worst = 0;
        let mut gap = 0;
        for step in 1..=n {
            gap += w((start + step - 1) % n);
            if self.pi[c[(start + step) % n]] {
                worst = worst.max(gap);
                gap = 0;
            }
        }
        Some(worst)
    }

    /// Minimum cost over every reachable simple cycle through an accepting
    /// state, i.e. over all lassos with simple stem and simple loop.
    pub fn simple_lasso_optimum(&self) -> Option<u64> {
        let reach = self.reachable();
        let n = self.len();
        let mut best: Option<u64> = None;
        for s in 0..n {
            if !reach[s] {
                continue;
            }
            // simple cycles whose smallest state is s
            let mut path = vec![s];
            let mut on = vec![false; n];
            on[s] = true;
            let mut stack = vec![0usize];
            while let Some(top) = stack.last_mut() {
                let v = *path.last().unwrap();
                if *top >= self.succ[v].len() {
                    stack.pop();
                    on[v] = false;
                    path.pop();
                    continue;
                }
                let (u, _) = self.succ[v][*top];
                *top += 1;
                if u == s {
                    if path.iter().any(|&x| self.accepting[x]) {
                        if let Some(c) = self.cycle_cost(&path) {
                            best = Some(best.map_or(c, |b| b.min(c)));
                        }
                    }
                } else if u > s && !on[u] {
                    on[u] = true;
                    path.push(u);
                    stack.push(0);
                }
            }
        }
        best
    }

    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = self.initial.clone();
        for &i in &stack {
            seen[i] = true;
        }
        while let Some(v) = stack.pop() {
            for &(u, _) in &self.succ[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }

    /// Exact optimum over all lassos. A cost `j` is achievable iff the graph
    /// of `(state, time since the last pi)` pairs with times at most `j` has
    /// a reachable cycle through an accepting state; before the first pi of
    /// the cycle the time is not tracked.
    pub fn exact_optimum(&self) -> Option<u64> {
        let total: u64 = self.succ.iter().flatten().map(|&(_, w)| w).max().unwrap_or(1) * self.len() as u64;
        (1..=total).find(|&j| self.feasible(j))
    }

    fn feasible(&self, j: u64) -> bool {
        let n = self.len();
        let slots = j as usize + 1;
        // node ids: untimed states 0..n, timed (s, t) at n + s * slots + t
        let node_count = n + n * slots;
        let timed = |s: usize, t: u64| n + s * slots + t as usize;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); node_count];
        for s in 0..n {
            for &(u, w) in &self.succ[s] {
                adj[s].push(u);
                if self.pi[u] {
                    adj[s].push(timed(u, 0));
                }
                for t in 0..=j {
                    if t + w <= j {
                        let t2 = if self.pi[u] { 0 } else { t + w };
                        adj[timed(s, t)].push(timed(u, t2));
                    }
                }
            }
        }
        let mut seen = vec![false; node_count];
        let mut stack: Vec<usize> = self.initial.clone();
        for &i in &stack {
            seen[i] = true;
        }
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        // an accepting timed node on a cycle: reachable from itself
        for s in (0..n).filter(|&s| self.accepting[s]) {
            for t in 0..=j {
                let v = timed(s, t);
                if seen[v] && on_cycle(&adj, v) {
                    return true;
                }
            }
        }
        false
    }
}

fn on_cycle(adj: &[Vec<usize>], v: usize) -> bool {
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut stack = adj[v].clone();
    while let Some(x) = stack.pop() {
        if x == v {
            return true;
        }
        if seen.insert(x) {
            stack.extend(adj[x].iter().copied());
        }
    }
    false
}

/// Random formula of depth at most `depth` over `props`.
pub fn random_formula(rng: &mut ChaCha8Rng, props: &[&str], depth: usize) -> Formula {
    if depth <= 1 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::prop(props.choose(rng).unwrap()),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_formula(rng, props, depth - 1);
    match rng.gen_range(0..9) {
        0 => Formula::not(sub(rng)),
        1 => Formula::next(sub(rng)),
        2 => Formula::eventually(sub(rng)),
        3 => Formula::globally(sub(rng)),
        4 => Formula::and(sub(rng), sub(rng)),
        5 => Formula::or(sub(rng), sub(rng)),
        6 => Formula::until(sub(rng), sub(rng)),
        7 => Formula::release(sub(rng), sub(rng)),
        _ => Formula::implies(sub(rng), sub(rng)),
    }
}

/// Every lasso with stem length up to `stem` and loop length 1 to `cycle`
/// over all subsets of `props`.
pub fn all_lassos(props: &[&str], stem: usize, cycle: usize) -> Vec<teamsync::ltl::LassoWord> {
    let letters: Vec<PropSet> = (0..1u32 << props.len())
        .map(|bits| {
            props
                .iter()
                .enumerate()
                .filter(|(i, _)| bits & (1 << i) != 0)
                .map(|(_, p)| p.to_string())
                .collect()
        })
        .collect();
    let words_up_to = |len: usize| {
        let mut level: Vec<Vec<PropSet>> = vec![vec![]];
        let mut all = vec![vec![]];
        for _ in 0..len {
            level = level
                .iter()
                .flat_map(|w| letters.iter().map(move |l| [w.clone(), vec![l.clone()]].concat()))
                .collect();
            all.extend(level.iter().cloned());
        }
        all
    };
    let stems = words_up_to(stem);
    let loops: Vec<_> = words_up_to(cycle).into_iter().filter(|w| !w.is_empty()).collect();
    let mut out = Vec::new();
    for s in &stems {
        for l in &loops {
            out.push(teamsync::ltl::LassoWord::new(s.clone(), l.clone()));
        }
    }
    out
}
