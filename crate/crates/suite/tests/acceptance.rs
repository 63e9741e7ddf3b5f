//! Acceptance suite: one test per criterion, each printing a single
//! `PASS`/`FAIL` line with the measured quantities.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::{Duration, Instant};

use common::*;
use teamsync::ltl::{accepts_lasso, eval_lasso, ltl_to_buchi, Alphabet, Formula};
use teamsync::model::{to_f64, Time};
use teamsync::optimal::optimal_run;
use teamsync::planfile::run_pipeline;
use teamsync::sim::{observed_cost, simulate, verify_trace, SimConfig, Sampling, TIME_EPS};
use teamsync::sync::{build_field_word_automaton, field_bound, find_violation, FieldWordAutomaton};
use teamsync::team::{
    check_bisimulation, check_path_correspondence, construct_region_automaton, construct_team_ts, state_bounds,
};

fn report(n: u32, title: &str, failures: &[String], details: &[String]) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("criterion {n} ({title}): {verdict}");
    for d in details {
        println!("    {d}");
    }
    for f in failures {
        println!("    failed: {f}");
    }
    assert!(failures.is_empty(), "criterion {n} failed: {}", failures.join("; "));
}

fn check(failures: &mut Vec<String>, ok: bool, what: impl Into<String>) {
    if !ok {
        failures.push(what.into());
    }
}

fn within(failures: &mut Vec<String>, elapsed: Duration, limit: Duration) {
    check(failures, elapsed < limit, format!("runtime {elapsed:?} exceeds {limit:?}"));
}

#[test]
fn criterion_1_example_golden_pipeline() {
    let t0 = Instant::now();
    let robots = data_files("example1", &["r1.ts", "r2.ts"]);
    let mission = data_files("example1", &["mission.ltl"]).remove(0);
    let out = run_pipeline(&robots, &mission).unwrap();
    let region = construct_region_automaton(&example1_robots()).unwrap();
    let elapsed = t0.elapsed();

    let f = &out.file;
    let mut failures = Vec::new();
    check(&mut failures, f.team.states == 6, format!("team TS has {} states, expected 6", f.team.states));
    check(
        &mut failures,
        region.ts.num_states() == 9,
        format!("region automaton has {} states, expected 9", region.ts.num_states()),
    );
    check(
        &mut failures,
        f.cost_report.planned_cost == Time::from_integer(2),
        format!("J = {}, expected 2", f.cost_report.planned_cost),
    );
    let beg = f.prefix_len;
    for r in &f.robots {
        for (k, p) in r.positions.iter().enumerate() {
            let full = k == 0 || k == beg;
            let other = vec![3 - r.index];
            let ok = if full {
                p.wait == other && p.notify == other
            } else {
                p.wait.is_empty() && p.notify.is_empty()
            };
            check(&mut failures, ok, format!("robot {} position {k}: wait {:?} notify {:?}", r.index, p.wait, p.notify));
        }
    }
    check(
        &mut failures,
        f.cost_report.field_bound == Time::new(5, 2),
        format!("field bound {}, expected 5/2", f.cost_report.field_bound),
    );
    within(&mut failures, elapsed, Duration::from_secs(5));
    report(
        1,
        "Example 1 golden pipeline",
        &failures,
        &[format!(
            "team {} states, region {} states / {} edges, J = {}, d_s = {}, bound = {}, suffix start {beg}, {elapsed:?}",
            f.team.states,
            region.ts.num_states(),
            region.ts.num_edges(),
            f.cost_report.planned_cost,
            f.cost_report.suffix_duration,
            f.cost_report.field_bound
        )],
    );
}

fn random_two_robot_instances(count: usize, seed: u64) -> Vec<Vec<teamsync::model::RobotModel>> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| random_robots(&mut rng, 2, 4, 3, &["p", "q", "pi"]))
        .collect()
}

#[test]
fn criterion_2_bisimulation_suite() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut weak_ok = 0;
    let mut instances = vec![("example 1".to_string(), example1_robots())];
    for (i, r) in random_two_robot_instances(50, 2).into_iter().enumerate() {
        instances.push((format!("random #{i}"), r));
    }
    for (name, robots) in &instances {
        let ra = construct_region_automaton(robots).unwrap();
        let tts = construct_team_ts(robots).unwrap();
        if let Err(e) = check_bisimulation(&ra, &tts) {
            failures.push(format!("{name}: {e:?}"));
        }
        if check_path_correspondence(&ra, &tts).is_ok() {
            weak_ok += 1;
        }
    }
    within(&mut failures, t0.elapsed(), Duration::from_secs(60));
    let n = instances.len();
    let strict_fail = failures.len();
    report(
        2,
        "bisimulation of region automaton and team TS",
        &failures,
        &[
            format!("{} of {n} instances fail the strict check", strict_fail),
            format!("{weak_ok} of {n} pass the path-correspondence check"),
        ],
    );
}

#[test]
fn criterion_3_state_bounds() {
    let mut failures = Vec::new();
    let b = state_bounds(&example1_robots());
    check(
        &mut failures,
        (b.team, b.region, b.naive) == (14, 24, 20),
        format!("Example 1 bounds {}/{}/{}, expected 14/24/20", b.team, b.region, b.naive),
    );
    let mut largest = (0.0f64, 0.0f64);
    for (i, robots) in random_two_robot_instances(50, 2).iter().enumerate() {
        let b = state_bounds(robots);
        let t = construct_team_ts(robots).unwrap().num_states() as u128;
        let r = construct_region_automaton(robots).unwrap().ts.num_states() as u128;
        check(&mut failures, t <= b.team, format!("random #{i}: team {t} > bound {}", b.team));
        check(&mut failures, r <= b.region, format!("random #{i}: region {r} > bound {}", b.region));
        largest.0 = largest.0.max(t as f64 / b.team as f64);
        largest.1 = largest.1.max(r as f64 / b.region as f64);
    }
    report(
        3,
        "state-count bounds",
        &failures,
        &[format!(
            "Example 1: {}/{}/{}; largest size/bound ratio team {:.2}, region {:.2}",
            b.team, b.region, b.naive, largest.0, largest.1
        )],
    );
}

#[test]
fn criterion_4_optimality_oracle() {
    let t0 = Instant::now();
    let mut rng = rng(4);
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut exact_agree = 0;
    let mut tries = 0;
    while checked < 30 {
        tries += 1;
        assert!(tries < 20_000, "too few small instances");
        let m = rand::Rng::gen_range(&mut rng, 1..=2);
        let robots = random_robots(&mut rng, m, 3, 3, &["p", "q", "pi"]);
        let text = *rand::seq::SliceRandom::choose(MISSIONS, &mut rng).unwrap();
        let mission = mission(text);
        let tts = construct_team_ts(&robots).unwrap();
        let oracle = Oracle::new(&tts, &mission);
        if oracle.len() > 8 {
            continue;
        }
        let simple = oracle.simple_lasso_optimum();
        let exact = oracle.exact_optimum();
        let planned = optimal_run(&tts, &mission).ok().map(|p| p.cost_report.planned_cost);
        let Some(simple) = simple else {
            check(&mut failures, planned.is_none(), format!("instance {tries}: planner found a run the oracle did not"));
            continue;
        };
        checked += 1;
        let simple = Time::from_integer(simple as i64);
        let exact = exact.map(|e| Time::from_integer(e as i64));
        if planned == exact {
            exact_agree += 1;
        }
        check(
            &mut failures,
            planned == Some(simple),
            format!(
                "instance {tries} ({text}, {} product states): planner {planned:?}, simple-lasso minimum {simple}, exact minimum {exact:?}",
                oracle.len()
            ),
        );
    }
    within(&mut failures, t0.elapsed(), Duration::from_secs(120));
    report(
        4,
        "optimality against brute-force simple lassos",
        &failures,
        &[format!("{checked} instances; planner equals the exact all-lasso optimum on {exact_agree}")],
    );
}

#[test]
fn criterion_5_ltl_translation_oracle() {
    let t0 = Instant::now();
    let props3 = ["a", "b", "c"];
    let words = all_lassos(&props3, 2, 3);
    let mut rng = rng(5);
    let mut failures = Vec::new();
    let mut checks = 0usize;
    for i in 0..200 {
        let n = rand::Rng::gen_range(&mut rng, 1..=3);
        let props = &props3[..n];
        let f = random_formula(&mut rng, props, 4);
        let alphabet = Alphabet::new(&props3.iter().map(|s| s.to_string()).collect());
        let pos = ltl_to_buchi(&f, &alphabet);
        let neg = ltl_to_buchi(&Formula::not(f.clone()), &alphabet);
        for w in &words {
            let truth = eval_lasso(&f, w);
            let a = accepts_lasso(&pos, w);
            let b = accepts_lasso(&neg, w);
            checks += 1;
            if a != truth || (a && b) {
                failures.push(format!("formula #{i} `{f}` on {w:?}: B_f {a}, B_not_f {b}, semantics {truth}"));
                break;
            }
        }
    }
    within(&mut failures, t0.elapsed(), Duration::from_secs(120));
    report(
        5,
        "LTL translation against lasso semantics",
        &failures,
        &[format!("200 formulas x {} lassos = {checks} checks in {:?}", words.len(), t0.elapsed())],
    );
}

fn field_automaton(inst: &Instance) -> FieldWordAutomaton {
    build_field_word_automaton(&inst.model, &inst.schedule, &inst.b_neg.alphabet).unwrap()
}

#[test]
fn criterion_6_field_word_soundness() {
    let mut instances = vec![example1_instance()];
    instances.extend(random_robust_instances(20, 6));
    let mut failures = Vec::new();
    let mut cycles = 0;
    let mut seed = 0;
    while cycles < 10_000 {
        for inst in &instances {
            let w = field_automaton(inst);
            let sampling = if seed % 2 == 0 { Sampling::Uniform } else { Sampling::Adversarial };
            let trace = simulate(&inst.model, &inst.schedule, &SimConfig::new(seed, 25, sampling)).unwrap();
            let v = verify_trace(&trace, &inst.mission, Some(&w));
            cycles += trace.num_cycles;
            check(
                &mut failures,
                v.in_field_language == Some(true),
                format!("{} seed {seed}: observed word not in L(W)", inst.name),
            );
        }
        seed += 1;
    }
    let road = road_instance();
    let w = field_automaton(&road);
    for seed in 0..100 {
        let sampling = if seed % 2 == 0 { Sampling::Uniform } else { Sampling::Adversarial };
        let trace = simulate(&road.model, &road.schedule, &SimConfig::new(seed, 20, sampling)).unwrap();
        cycles += trace.num_cycles;
        let v = verify_trace(&trace, &road.mission, Some(&w));
        check(&mut failures, v.in_field_language == Some(true), format!("road seed {seed}: observed word not in L(W)"));
    }
    report(
        6,
        "field word automaton contains simulated words",
        &failures,
        &[format!("{cycles} suffix cycles over {} instances plus the road network", instances.len())],
    );
}

fn road_instance() -> Instance {
    let robots = data_files("road", &["r1.ts", "r2.ts"]);
    let mission = data_files("road", &["mission.ltl"]).remove(0);
    let out = run_pipeline(&robots, &mission).unwrap();
    let schedule = out.file.schedule();
    Instance {
        name: "road network".into(),
        b_neg: b_neg(&out.mission),
        model: out.file.execution_model(),
        schedule,
        mission: out.mission,
        plan: out.plan,
    }
}

#[test]
fn criterion_7_field_correctness_and_bound() {
    let mut instances = vec![example1_instance()];
    instances.extend(random_robust_instances(20, 7));
    let t0 = Instant::now();
    let road = road_instance();
    let road_plan_time = t0.elapsed();
    instances.push(road);
    let mut failures = Vec::new();
    let mut runs = 0;
    let mut worst_ratio = 0.0f64;
    for inst in &instances {
        let lo = inst.model.robots.iter().map(|r| r.rho_lower).min().unwrap();
        let hi = inst.model.robots.iter().map(|r| r.rho_upper).max().unwrap();
        let bound = to_f64(field_bound(&inst.plan.cost_report, lo, hi).field_bound);
        for seed in 0..100 {
            for sampling in [Sampling::Uniform, Sampling::Adversarial] {
                let trace = simulate(&inst.model, &inst.schedule, &SimConfig::new(seed, 12, sampling)).unwrap();
                let v = verify_trace(&trace, &inst.mission, None);
                let cost = observed_cost(&trace).unwrap();
                runs += 1;
                worst_ratio = worst_ratio.max(cost / bound);
                check(
                    &mut failures,
                    v.failures.is_empty(),
                    format!("{} seed {seed} {sampling:?}: violation in cycle {}", inst.name, v.failures.first().map_or(0, |f| f.0)),
                );
                check(
                    &mut failures,
                    cost <= bound + TIME_EPS,
                    format!("{} seed {seed} {sampling:?}: observed cost {cost} > bound {bound}", inst.name),
                );
            }
        }
    }
    within(&mut failures, road_plan_time, Duration::from_secs(30 * 60));
    report(
        7,
        "field correctness and cost bound",
        &failures,
        &[format!(
            "{runs} runs over {} instances; largest observed/bound {worst_ratio:.4}; road plan {road_plan_time:?}",
            instances.len()
        )],
    );
}

#[test]
fn criterion_8_fault_injection() {
    let inst = example1_instance();
    let mut failures = Vec::new();
    let mut details = Vec::new();
    let m = inst.model.num_robots();
    for k in 0..inst.model.len() {
        for i in 0..m {
            for &j in &inst.schedule.wait[i][k].clone() {
                let mut tampered = inst.schedule.clone();
                tampered.remove(k, i, j);
                let edge = format!("robot {} waits for {} at {k}", i + 1, j + 1);
                match find_violation(&inst.model, &tampered, &inst.b_neg) {
                    Ok(Some(_)) => {}
                    Ok(None) => failures.push(format!("{edge}: B_not_phi x W stays empty")),
                    Err(e) => failures.push(format!("{edge}: {e}")),
                }
                let detected = (0..20).find(|&seed| {
                    simulate(&inst.model, &tampered, &SimConfig::new(seed, 500, Sampling::Adversarial))
                        .map(|t| !verify_trace(&t, &inst.mission, None).failures.is_empty())
                        .unwrap_or(false)
                });
                match detected {
                    Some(seed) => details.push(format!("{edge}: violation detected with seed {seed}")),
                    None => failures.push(format!("{edge}: no violation in 20 adversarial runs of 500 cycles")),
                }
            }
        }
    }
    report(8, "fault injection on Example 1", &failures, &details);
}

#[test]
fn criterion_9_determinism() {
    let mut failures = Vec::new();
    for dir in ["example1", "road"] {
        let robots = data_files(dir, &["r1.ts", "r2.ts"]);
        let mission = data_files(dir, &["mission.ltl"]).remove(0);
        let a = run_pipeline(&robots, &mission).unwrap().file.to_json();
        let b = run_pipeline(&robots, &mission).unwrap().file.to_json();
        check(&mut failures, a == b, format!("{dir}: plan files differ"));
        let plan = teamsync::planfile::PlanFile::from_json(&a).unwrap();
        let (model, schedule) = (plan.execution_model(), plan.schedule());
        for sampling in [Sampling::Uniform, Sampling::Adversarial] {
            let cfg = SimConfig::new(42, 50, sampling);
            let x = simulate(&model, &schedule, &cfg).unwrap();
            let y = simulate(&model, &schedule, &cfg).unwrap();
            check(
                &mut failures,
                x.to_json() == y.to_json() && x.event_log() == y.event_log(),
                format!("{dir}: {sampling:?} traces differ"),
            );
        }
    }
    report(9, "determinism of plan and simulate", &failures, &[]);
}
