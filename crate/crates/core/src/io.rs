//! Robot and mission file formats.
//!
//! Robot file, one directive per line, `#` starts a comment:
//!
//! ```text
//! name r1
//! rho 0.95 1.05
//! init a
//! state a props p1 pi
//! state b
//! edge a b 2
//! ```
//!
//! Mission file:
//!
//! ```text
//! formula G F pi && G (p1 -> X (!p1 U p3))
//! optimizing pi
//! props p4        # optional extra propositions
//! ```

use std::path::Path;

use thiserror::Error;

use crate::ltl::{formula_props, parse_ltl};
use crate::model::{valid_state_name, Mission, PropSet, RobotModel, Time, TransitionSystem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{file}:{line}: {msg}")]
pub struct InputError {
    pub file: String,
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub msg: String,
}

fn err(file: &str, line: usize, msg: impl Into<String>) -> InputError {
    InputError {
        file: file.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Accepts `n`, `n/d` and decimals such as `0.95`.
pub fn parse_time(text: &str) -> Option<Time> {
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return None;
        }
        let negative = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().ok()? };
        let denom = 10i64.checked_pow(frac.len() as u32)?;
        let f: i64 = frac.parse().ok()?;
        let value = Time::from_integer(whole.abs()) + Time::new(f, denom);
        return Some(if negative { -value } else { value });
    }
    crate::planfile::rational::parse(text)
}

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(n, l)| {
        let l = l.split('#').next().unwrap_or("");
        let words: Vec<&str> = l.split_whitespace().collect();
        (!words.is_empty()).then_some((n + 1, words))
    })
}

/// Parses a robot file; `index` is the 1-based robot number.
pub fn parse_robot(text: &str, file: &str, index: usize) -> Result<RobotModel, InputError> {
    let mut name = None;
    let mut rho = None;
    let mut init: Option<(usize, String)> = None;
    let mut states: Vec<(usize, String, PropSet)> = Vec::new();
    let mut edges: Vec<(usize, String, String, u64)> = Vec::new();
    for (n, words) in lines(text) {
        match words[0] {
            "name" => {
                let [_, id] = words[..] else {
                    return Err(err(file, n, "expected `name <id>`"));
                };
                name = Some(id.to_string());
            }
            "rho" => {
                let [_, lo, hi] = words[..] else {
                    return Err(err(file, n, "expected `rho <lower> <upper>`"));
                };
                let parse = |t: &str| parse_time(t).ok_or_else(|| err(file, n, format!("invalid number `{t}`")));
                rho = Some((n, parse(lo)?, parse(hi)?));
            }
            "init" => {
                let [_, s] = words[..] else {
                    return Err(err(file, n, "expected `init <state>`"));
                };
                init = Some((n, s.to_string()));
            }
            "state" => {
                let (s, rest) = match words[..] {
                    [_, s] => (s, &[][..]),
                    [_, s, "props", ref rest @ ..] => (s, rest),
                    _ => return Err(err(file, n, "expected `state <state> [props p1 p2 ...]`")),
                };
                if !valid_state_name(s) {
                    return Err(err(file, n, format!("invalid state identifier `{s}`")));
                }
                if states.iter().any(|(_, t, _)| t == s) {
                    return Err(err(file, n, format!("duplicate state `{s}`")));
                }
                states.push((n, s.to_string(), rest.iter().map(|p| p.to_string()).collect()));
            }
            "edge" => {
                let [_, a, b, w] = words[..] else {
                    return Err(err(file, n, "expected `edge <src> <dst> <weight>`"));
                };
                let w: u64 = w
                    .parse()
                    .map_err(|_| err(file, n, format!("weight `{w}` is not a positive integer")))?;
                edges.push((n, a.to_string(), b.to_string(), w));
            }
            other => return Err(err(file, n, format!("unknown directive `{other}`"))),
        }
    }
    let (init_line, init) = init.ok_or_else(|| err(file, 0, "missing `init`"))?;
    let init_label = states
        .iter()
        .find(|(_, s, _)| *s == init)
        .map(|(_, _, l)| l.clone())
        .ok_or_else(|| err(file, init_line, format!("initial state `{init}` is not declared")))?;
    let mut ts = TransitionSystem::new(&init, init_label);
    for (n, s, label) in &states {
        if *s != init {
            ts.add_state(s, label.clone()).map_err(|e| err(file, *n, e.to_string()))?;
        }
    }
    for (n, a, b, w) in &edges {
        ts.add_edge_by_name(a, b, *w).map_err(|e| err(file, *n, e.to_string()))?;
    }
    let (rho_line, lo, hi) = rho.ok_or_else(|| err(file, 0, "missing `rho`"))?;
    let name = name.unwrap_or_else(|| format!("r{index}"));
    RobotModel::new(index, name, ts, lo, hi).map_err(|e| err(file, rho_line, e.to_string()))
}

/// Parses a mission file. The alphabet is the union of `robot_props`, the
/// propositions the formula mentions and any declared with `props`.
pub fn parse_mission(text: &str, file: &str, robot_props: &PropSet) -> Result<Mission, InputError> {
    let mut formula: Option<(usize, String)> = None;
    let mut pi: Option<(usize, String)> = None;
    let mut extra = PropSet::new();
    for (n, line) in text.lines().enumerate() {
        let n = n + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        let Some((head, rest)) = line.split_once(char::is_whitespace).or((!line.is_empty()).then_some((line, ""))) else {
            continue;
        };
        let rest = rest.trim();
        match head {
            "formula" if !rest.is_empty() => formula = Some((n, rest.to_string())),
            "optimizing" if rest.split_whitespace().count() == 1 => pi = Some((n, rest.to_string())),
            "props" => extra.extend(rest.split_whitespace().map(str::to_string)),
            "formula" | "optimizing" => return Err(err(file, n, format!("malformed `{head}` line"))),
            other => return Err(err(file, n, format!("unknown directive `{other}`"))),
        }
    }
    let (fline, ftext) = formula.ok_or_else(|| err(file, 0, "missing `formula`"))?;
    let (pline, pi) = pi.ok_or_else(|| err(file, 0, "missing `optimizing`"))?;
    let mut alphabet = robot_props.clone();
    alphabet.extend(extra);
    alphabet.extend(formula_props(&ftext).map_err(|e| err(file, fline, e.to_string()))?);
    alphabet.insert(pi.clone());
    let f = parse_ltl(&ftext, &alphabet).map_err(|e| err(file, fline, e.to_string()))?;
    Mission::new(f, &pi, alphabet).map_err(|e| err(file, pline, e.to_string()))
}

/// Reads a file, reporting I/O failures as input errors.
pub fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| err(&path.display().to_string(), 0, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::props;

    #[test]
    fn robot_file() {
        let text = "# robot\nname r1\nrho 0.95 21/20\ninit a\nstate a props p1 pi\nstate b\nedge a b 2 # comment\nedge b a 2\n";
        let r = parse_robot(text, "r1.ts", 1).unwrap();
        assert_eq!(r.rho_lower, Time::new(19, 20));
        assert_eq!(r.rho_upper, Time::new(21, 20));
        assert_eq!(r.ts.num_states(), 2);
        assert_eq!(r.ts.label(r.ts.initial()), &props(["p1", "pi"]));
        assert_eq!(r.ts.weight(0, 1), Some(2));
    }

    #[test]
    fn robot_errors_carry_lines() {
        let e = parse_robot("rho 1 1\ninit a\nstate a\nedge a b 1\n", "x", 1).unwrap_err();
        assert_eq!((e.line, e.file.as_str()), (4, "x"));
        let e = parse_robot("rho 1 1\ninit a\nstate a\nedge a a 0\n", "x", 1).unwrap_err();
        assert_eq!(e.line, 4);
        let e = parse_robot("rho 2 3\ninit a\nstate a\n", "x", 1).unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_robot("rho 1 1\ninit a\nstate a>b\n", "x", 1).unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_robot("rho 1 1\nfly a\n", "x", 1).unwrap_err();
        assert_eq!(e.to_string(), "x:2: unknown directive `fly`");
    }

    #[test]
    fn mission_file() {
        let m = parse_mission("formula G F pi && G (p1 -> X (!p1 U p3))\noptimizing pi\n", "m", &props(["p1"])).unwrap();
        assert_eq!(m.global_props, props(["p1", "p3", "pi"]));
        let e = parse_mission("formula G F p1\noptimizing pi\n", "m", &PropSet::new()).unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_mission("formula G F (pi\noptimizing pi\n", "m", &PropSet::new()).unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn decimals() {
        assert_eq!(parse_time("0.95"), Some(Time::new(19, 20)));
        assert_eq!(parse_time("1"), Some(Time::from_integer(1)));
        assert_eq!(parse_time("1.5"), Some(Time::new(3, 2)));
        assert_eq!(parse_time("x"), None);
    }
}
