//! Direct evaluation of LTL over ultimately periodic words.
//!
//! Positions are the stem followed by one copy of the loop; the successor of
//! the last loop position is the first loop position. Every subformula gets a
//! truth vector over those positions, computed bottom-up. Until/eventually
//! are least fixpoints and release/globally greatest fixpoints, solved by two
//! backward sweeps around the loop followed by one sweep over the stem.

use serde::{Deserialize, Serialize};

use super::Formula;
use crate::model::PropSet;

/// The infinite word `stem . loop^omega`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LassoWord {
    pub stem: Vec<PropSet>,
    #[serde(rename = "loop")]
    pub cycle: Vec<PropSet>,
}

impl LassoWord {
    pub fn new(stem: Vec<PropSet>, cycle: Vec<PropSet>) -> Self {
        assert!(!cycle.is_empty(), "lasso loop must be nonempty");
        LassoWord { stem, cycle }
    }

    pub fn positions(&self) -> usize {
        self.stem.len() + self.cycle.len()
    }

    fn letter(&self, k: usize) -> &PropSet {
        if k < self.stem.len() {
            &self.stem[k]
        } else {
            &self.cycle[k - self.stem.len()]
        }
    }

    fn succ(&self, k: usize) -> usize {
        if k + 1 == self.positions() {
            self.stem.len()
        } else {
            k + 1
        }
    }
}

/// Decides `stem . loop^omega |= f`.
pub fn eval_lasso(f: &Formula, w: &LassoWord) -> bool {
    eval_positions(f, w)[0]
}

fn eval_positions(f: &Formula, w: &LassoWord) -> Vec<bool> {
    let n = w.positions();
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Prop(p) => (0..n).map(|k| w.letter(k).contains(p)).collect(),
        Formula::Not(a) => eval_positions(a, w).into_iter().map(|v| !v).collect(),
        Formula::Next(a) => {
            let inner = eval_positions(a, w);
            (0..n).map(|k| inner[w.succ(k)]).collect()
        }
        Formula::And(a, b) => zip(eval_positions(a, w), eval_positions(b, w), |x, y| x && y),
        Formula::Or(a, b) => zip(eval_positions(a, w), eval_positions(b, w), |x, y| x || y),
        Formula::Implies(a, b) => zip(eval_positions(a, w), eval_positions(b, w), |x, y| !x || y),
        Formula::Eventually(a) => until(&vec![true; n], &eval_positions(a, w), w),
        Formula::Globally(a) => release(&vec![false; n], &eval_positions(a, w), w),
        Formula::Until(a, b) => until(&eval_positions(a, w), &eval_positions(b, w), w),
        Formula::Release(a, b) => release(&eval_positions(a, w), &eval_positions(b, w), w),
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// Solves `v[k] = step(k, v[succ k])` from an initial guess, least or greatest
/// depending on `init`.
fn fixpoint(w: &LassoWord, init: bool, step: impl Fn(usize, bool) -> bool) -> Vec<bool> {
    let n = w.positions();
    let s = w.stem.len();
    let mut v = vec![init; n];
    for _ in 0..2 {
        for k in (s..n).rev() {
            v[k] = step(k, v[w.succ(k)]);
        }
    }
    for k in (0..s).rev() {
        v[k] = step(k, v[k + 1]);
    }
    v
}

fn until(a: &[bool], b: &[bool], w: &LassoWord) -> Vec<bool> {
    fixpoint(w, false, |k, next| b[k] || (a[k] && next))
}

fn release(a: &[bool], b: &[bool], w: &LassoWord) -> Vec<bool> {
    fixpoint(w, true, |k, next| b[k] && (a[k] || next))
}
