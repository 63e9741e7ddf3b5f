//! Tableau translation from LTL to Büchi automata.
//!
//! The formula is put in negation normal form and expanded on the fly into a
//! graph of nodes `(incoming, old, next)`; every node carries the literals it
//! must satisfy. Each until-subformula contributes one acceptance set and the
//! resulting generalized automaton is degeneralized with a round-robin
//! counter. The automaton reads the letter of the node being entered, starting
//! with one step out of a dedicated initial state.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::buchi::{Alphabet, BuchiAutomaton, Guard, Letter};
use super::Formula;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    True,
    False,
    Lit { bit: Letter, negated: bool },
    And(usize, usize),
    Or(usize, usize),
    Until(usize, usize),
    Release(usize, usize),
    Next(usize),
}

struct Closure<'a> {
    alphabet: &'a Alphabet,
    kinds: Vec<Kind>,
    index: HashMap<Formula, usize>,
}

impl Closure<'_> {
    fn intern(&mut self, f: &Formula) -> usize {
        if let Some(&id) = self.index.get(f) {
            return id;
        }
        let kind = match f {
            Formula::True => Kind::True,
            Formula::False => Kind::False,
            Formula::Prop(p) => Kind::Lit {
                bit: self.bit(p),
                negated: false,
            },
            Formula::Not(inner) => match &**inner {
                Formula::Prop(p) => Kind::Lit {
                    bit: self.bit(p),
                    negated: true,
                },
                _ => unreachable!("formula must be in negation normal form"),
            },
            Formula::And(a, b) => Kind::And(self.intern(a), self.intern(b)),
            Formula::Or(a, b) => Kind::Or(self.intern(a), self.intern(b)),
            Formula::Until(a, b) => Kind::Until(self.intern(a), self.intern(b)),
            Formula::Release(a, b) => Kind::Release(self.intern(a), self.intern(b)),
            Formula::Next(a) => Kind::Next(self.intern(a)),
            Formula::Eventually(_) | Formula::Globally(_) | Formula::Implies(..) => {
                unreachable!("formula must be in negation normal form")
            }
        };
        let id = self.kinds.len();
        self.kinds.push(kind);
        self.index.insert(f.clone(), id);
        id
    }

    fn bit(&self, p: &str) -> Letter {
        self.alphabet
            .bit(p)
            .unwrap_or_else(|| panic!("proposition `{p}` is not in the alphabet"))
    }

    fn complement(&self, id: usize) -> Option<usize> {
        match self.kinds[id] {
            Kind::Lit { bit, negated } => self.kinds.iter().position(|k| {
                *k == Kind::Lit {
                    bit,
                    negated: !negated,
                }
            }),
            _ => None,
        }
    }
}

#[derive(Clone)]
struct Pending {
    incoming: BTreeSet<usize>,
    new: BTreeSet<usize>,
    old: BTreeSet<usize>,
    next: BTreeSet<usize>,
}

struct TableauNode {
    incoming: BTreeSet<usize>,
    old: BTreeSet<usize>,
}

const INIT: usize = usize::MAX;

fn expand(closure: &Closure, root: usize) -> Vec<TableauNode> {
    let mut done: Vec<TableauNode> = Vec::new();
    let mut seen: HashMap<(BTreeSet<usize>, BTreeSet<usize>), usize> = HashMap::new();
    let mut stack = vec![Pending {
        incoming: BTreeSet::from([INIT]),
        new: BTreeSet::from([root]),
        old: BTreeSet::new(),
        next: BTreeSet::new(),
    }];
    'nodes: while let Some(mut node) = stack.pop() {
        loop {
            let Some(eta) = node.new.pop_first() else {
                let key = (node.old.clone(), node.next.clone());
                if let Some(&id) = seen.get(&key) {
                    done[id].incoming.extend(node.incoming);
                } else {
                    let id = done.len();
                    seen.insert(key, id);
                    stack.push(Pending {
                        incoming: BTreeSet::from([id]),
                        new: node.next.clone(),
                        old: BTreeSet::new(),
                        next: BTreeSet::new(),
                    });
                    done.push(TableauNode {
                        incoming: node.incoming,
                        old: node.old,
                    });
                }
                continue 'nodes;
            };
            if node.old.contains(&eta) {
                continue;
            }
            let add_new = |n: &mut Pending, f: usize| {
                if !n.old.contains(&f) {
                    n.new.insert(f);
                }
            };
            match closure.kinds[eta] {
                Kind::True => {
                    node.old.insert(eta);
                }
                Kind::False => continue 'nodes,
                Kind::Lit { .. } => {
                    if let Some(c) = closure.complement(eta) {
                        if node.old.contains(&c) {
                            continue 'nodes;
                        }
                    }
                    node.old.insert(eta);
                }
                Kind::And(a, b) => {
                    add_new(&mut node, a);
                    add_new(&mut node, b);
                    node.old.insert(eta);
                }
                Kind::Next(a) => {
                    node.next.insert(a);
                    node.old.insert(eta);
                }
                Kind::Or(a, b) | Kind::Until(a, b) | Kind::Release(a, b) => {
                    node.old.insert(eta);
                    let mut other = node.clone();
                    match closure.kinds[eta] {
                        Kind::Or(..) => {
                            add_new(&mut node, a);
                            add_new(&mut other, b);
                        }
                        Kind::Until(..) => {
                            add_new(&mut node, a);
                            node.next.insert(eta);
                            add_new(&mut other, b);
                        }
                        _ => {
                            add_new(&mut node, b);
                            node.next.insert(eta);
                            add_new(&mut other, a);
                            add_new(&mut other, b);
                        }
                    }
                    stack.push(other);
                }
            }
        }
    }
    done
}

/// Translates `f` into a Büchi automaton over `alphabet` accepting exactly
/// the words satisfying `f`. Every proposition of `f` must be in `alphabet`.
pub fn ltl_to_buchi(f: &Formula, alphabet: &Alphabet) -> BuchiAutomaton {
    let nnf = f.nnf();
    let mut closure = Closure {
        alphabet,
        kinds: Vec::new(),
        index: HashMap::new(),
    };
    let root = closure.intern(&nnf);
    let nodes = expand(&closure, root);

    let guards: Vec<Guard> = nodes
        .iter()
        .map(|n| {
            n.old.iter().fold(Guard::TRUE, |g, &f| match closure.kinds[f] {
                Kind::Lit { bit, negated: false } => Guard {
                    positive: g.positive | bit,
                    ..g
                },
                Kind::Lit { bit, negated: true } => Guard {
                    negative: g.negative | bit,
                    ..g
                },
                _ => g,
            })
        })
        .collect();

    // One acceptance set per until-subformula a U b: nodes that either do not
    // promise it or already fulfil b.
    let untils: Vec<(usize, usize)> = closure
        .kinds
        .iter()
        .enumerate()
        .filter_map(|(id, k)| match *k {
            Kind::Until(_, b) => Some((id, b)),
            _ => None,
        })
        .collect();
    let in_set = |node: usize, set: usize| {
        let (u, b) = untils[set];
        !nodes[node].old.contains(&u) || nodes[node].old.contains(&b)
    };

    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut initial_nodes = Vec::new();
    for (id, n) in nodes.iter().enumerate() {
        for &src in &n.incoming {
            if src == INIT {
                initial_nodes.push(id);
            } else {
                succ[src].push(id);
            }
        }
    }

    // Degeneralize: state (node, counter); the counter advances when the
    // current node lies in the set it is waiting for.
    let k = untils.len();
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut names = vec!["init".to_string()];
    let mut accepting = vec![false];
    let mut transitions: Vec<Vec<(Guard, usize)>> = vec![Vec::new()];
    let mut queue: VecDeque<(usize, usize, usize)> = VecDeque::new();
    let mut lookup = |key: (usize, usize), names: &mut Vec<String>, accepting: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize, usize)>| {
        *ids.entry(key).or_insert_with(|| {
            let id = names.len();
            names.push(format!("n{}c{}", key.0, key.1));
            accepting.push(k == 0 || (key.1 == 0 && in_set(key.0, 0)));
            queue.push_back((key.0, key.1, id));
            id
        })
    };
    for &n in &initial_nodes {
        let s = lookup((n, 0), &mut names, &mut accepting, &mut queue);
        transitions[0].push((guards[n], s));
    }
    while let Some((n, c, src)) = queue.pop_front() {
        let c2 = if k > 0 && in_set(n, c) { (c + 1) % k } else { c };
        let mut out = Vec::with_capacity(succ[n].len());
        for &m in &succ[n] {
            let dst = lookup((m, c2), &mut names, &mut accepting, &mut queue);
            out.push((guards[m], dst));
        }
        if transitions.len() <= src {
            transitions.resize(src + 1, Vec::new());
        }
        transitions[src] = out;
    }
    transitions.resize(names.len(), Vec::new());

    BuchiAutomaton {
        alphabet: alphabet.clone(),
        state_names: names,
        initial: vec![0],
        transitions,
        accepting,
    }
}
