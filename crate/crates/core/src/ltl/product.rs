//! Word generators, their products with Büchi automata, and emptiness
//! checking by nested depth-first search.

use std::collections::HashMap;

use super::buchi::{Alphabet, BuchiAutomaton, Letter};
use super::eval::LassoWord;
use crate::model::{PrefixSuffixRun, TransitionSystem};

/// A finite graph whose edges emit letters; its words are the letter
/// sequences of infinite paths from `start`.
#[derive(Debug, Clone)]
pub struct LetterGraph {
    pub start: usize,
    /// `(letter, target, weight)` per node.
    pub edges: Vec<Vec<(Letter, usize, u64)>>,
}

impl LetterGraph {
    pub fn num_nodes(&self) -> usize {
        self.edges.len()
    }

    /// Generator of the words of a transition system. Node 0 is a seed that
    /// emits the initial label; TS state `q` is node `q + 1` and entering it
    /// emits `L(q)`.
    pub fn from_ts(ts: &TransitionSystem, alphabet: &Alphabet) -> Self {
        let letters: Vec<Letter> = (0..ts.num_states())
            .map(|q| alphabet.encode(ts.label(q)))
            .collect();
        let mut edges = vec![vec![(letters[ts.initial()], ts.initial() + 1, 0)]];
        for q in 0..ts.num_states() {
            edges.push(
                ts.successors(q)
                    .iter()
                    .map(|&(t, w)| (letters[t], t + 1, w))
                    .collect(),
            );
        }
        LetterGraph { start: 0, edges }
    }

    /// Generator of exactly one word.
    pub fn from_lasso(word: &LassoWord, alphabet: &Alphabet) -> Self {
        let letters: Vec<Letter> = word
            .stem
            .iter()
            .chain(word.cycle.iter())
            .map(|l| alphabet.encode(l))
            .collect();
        let n = letters.len();
        let loop_start = word.stem.len();
        // node k + 1 has just emitted position k
        let mut edges = vec![vec![(letters[0], 1, 0)]];
        for k in 0..n {
            let next = if k + 1 == n { loop_start } else { k + 1 };
            edges.push(vec![(letters[next], next + 1, 0)]);
        }
        LetterGraph { start: 0, edges }
    }
}

/// Explicit synchronous product of a generator with a Büchi automaton.
///
/// A product edge pairs a generator edge emitting `a` with an automaton
/// transition whose guard accepts `a`. Weights come from the generator.
#[derive(Debug, Clone)]
pub struct Product {
    /// `(generator node, automaton state)` per product state.
    pub states: Vec<(usize, usize)>,
    pub initial: Vec<usize>,
    pub succ: Vec<Vec<(usize, u64, Letter)>>,
    pub accepting: Vec<bool>,
}

impl Product {
    pub fn build(gen: &LetterGraph, ba: &BuchiAutomaton) -> Self {
        Self::build_capped(gen, ba, usize::MAX).expect("no cap")
    }

    /// Like [`Product::build`], but gives up with `None` past `cap` states.
    pub fn build_capped(gen: &LetterGraph, ba: &BuchiAutomaton, cap: usize) -> Option<Self> {
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut p = Product {
            states: Vec::new(),
            initial: Vec::new(),
            succ: Vec::new(),
            accepting: Vec::new(),
        };
        let mut intern = |key: (usize, usize), p: &mut Product| -> usize {
            *index.entry(key).or_insert_with(|| {
                p.states.push(key);
                p.succ.push(Vec::new());
                p.accepting.push(ba.accepting[key.1]);
                p.states.len() - 1
            })
        };
        for &b in &ba.initial {
            let id = intern((gen.start, b), &mut p);
            if !p.initial.contains(&id) {
                p.initial.push(id);
            }
        }
        let mut head = 0;
        while head < p.states.len() {
            if p.states.len() > cap {
                return None;
            }
            let (g, b) = p.states[head];
            let mut out = Vec::new();
            for &(letter, g2, w) in &gen.edges[g] {
                for &(guard, b2) in &ba.transitions[b] {
                    if guard.matches(letter) {
                        let id = intern((g2, b2), &mut p);
                        out.push((id, w, letter));
                    }
                }
            }
            p.succ[head] = out;
            head += 1;
        }
        Some(p)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Nested DFS; `Some(lasso)` iff an accepting state is reachable from an
    /// initial state and lies on a cycle. The lasso's prefix ends at the
    /// state its cycle returns to.
    pub fn find_accepting_lasso(&self) -> Option<PrefixSuffixRun<usize>> {
        nested_dfs(self)
    }

    pub fn is_empty(&self) -> bool {
        self.find_accepting_lasso().is_none()
    }

    /// Letters along a lasso of this product: the stem covers the prefix
    /// edges, the loop covers the cycle edges.
    pub fn lasso_word(&self, lasso: &PrefixSuffixRun<usize>, alphabet: &Alphabet) -> LassoWord {
        let letter = |a: usize, b: usize| {
            self.succ[a]
                .iter()
                .find(|&&(t, _, _)| t == b)
                .map(|&(_, _, l)| l)
                .expect("lasso follows product edges")
        };
        let stem = lasso
            .prefix
            .windows(2)
            .map(|w| alphabet.decode(letter(w[0], w[1])))
            .collect();
        let mut prev = *lasso.prefix.last().expect("nonempty prefix");
        let mut cycle = Vec::new();
        for &s in &lasso.suffix_cycle {
            cycle.push(alphabet.decode(letter(prev, s)));
            prev = s;
        }
        LassoWord::new(stem, cycle)
    }
}

/// `true` iff the automaton accepts `stem . loop^omega`.
pub fn accepts_lasso(ba: &BuchiAutomaton, word: &LassoWord) -> bool {
    !Product::build(&LetterGraph::from_lasso(word, &ba.alphabet), ba).is_empty()
}

/// Language emptiness of a bare automaton (alphabet unconstrained), with a
/// witness word when nonempty.
pub fn buchi_emptiness(ba: &BuchiAutomaton) -> Option<LassoWord> {
    // Universal generator: one node emitting every letter over the guards'
    // support. Enumerating 2^|Pi| letters is avoided by reading guards
    // directly: a transition is taken with the smallest letter it accepts.
    let mut p = Product {
        states: (0..ba.num_states()).map(|s| (0, s)).collect(),
        initial: ba.initial.clone(),
        succ: Vec::with_capacity(ba.num_states()),
        accepting: ba.accepting.clone(),
    };
    for edges in &ba.transitions {
        let mut out: Vec<(usize, u64, Letter)> = Vec::new();
        for &(g, t) in edges {
            if g.positive & g.negative == 0 && !out.iter().any(|&(o, _, _)| o == t) {
                out.push((t, 0, g.positive));
            }
        }
        p.succ.push(out);
    }
    p.find_accepting_lasso().map(|l| p.lasso_word(&l, &ba.alphabet))
}

fn nested_dfs(p: &Product) -> Option<PrefixSuffixRun<usize>> {
    let n = p.num_states();
    let mut outer_seen = vec![false; n];
    let mut inner_seen = vec![false; n];
    let mut on_stack = vec![false; n];

    for &init in &p.initial {
        if outer_seen[init] {
            continue;
        }
        // Outer DFS with explicit frames (state, next successor index).
        let mut stack: Vec<(usize, usize)> = vec![(init, 0)];
        outer_seen[init] = true;
        on_stack[init] = true;
        while let Some(&mut (s, ref mut i)) = stack.last_mut() {
            if let Some(&(t, _, _)) = p.succ[s].get(*i) {
                *i += 1;
                if !outer_seen[t] {
                    outer_seen[t] = true;
                    on_stack[t] = true;
                    stack.push((t, 0));
                }
                continue;
            }
            // post-order: s is finished
            if p.accepting[s] {
                if let Some(path) = inner_dfs(p, s, &on_stack, &mut inner_seen) {
                    let outer: Vec<usize> = stack.iter().map(|&(x, _)| x).collect();
                    return Some(close_lasso(&outer, path));
                }
            }
            on_stack[s] = false;
            stack.pop();
        }
    }
    None
}

/// Searches from accepting `seed` for a state on the outer stack. Returns the
/// path `seed, ..., hit`.
fn inner_dfs(p: &Product, seed: usize, on_stack: &[bool], seen: &mut [bool]) -> Option<Vec<usize>> {
    let mut stack: Vec<(usize, usize)> = vec![(seed, 0)];
    while let Some(&mut (s, ref mut i)) = stack.last_mut() {
        if let Some(&(t, _, _)) = p.succ[s].get(*i) {
            *i += 1;
            if on_stack[t] || t == seed {
                let mut path: Vec<usize> = stack.iter().map(|&(x, _)| x).collect();
                path.push(t);
                return Some(path);
            }
            if !seen[t] {
                seen[t] = true;
                stack.push((t, 0));
            }
            continue;
        }
        stack.pop();
    }
    None
}

/// `outer` is the DFS stack ending at the accepting seed; `inner` runs from
/// the seed to a state `hit` on that stack.
fn close_lasso(outer: &[usize], inner: Vec<usize>) -> PrefixSuffixRun<usize> {
    let hit = *inner.last().expect("inner path ends at hit");
    let at = outer.iter().position(|&x| x == hit).expect("hit is on the stack");
    // Cycle: hit -> ... -> seed (outer stack) -> ... -> hit (inner path).
    let mut cycle: Vec<usize> = outer[at + 1..].to_vec();
    cycle.extend_from_slice(&inner[1..]);
    PrefixSuffixRun::new(outer[..=at].to_vec(), cycle)
}
