use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::model::PropSet;

/// Fixed ordering of propositions; letters are bitmasks over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    props: Vec<String>,
}

/// A letter of `2^Pi` encoded against an [`Alphabet`].
pub type Letter = u64;

impl Alphabet {
    /// At most 64 propositions are supported.
    pub fn new(props: &BTreeSet<String>) -> Self {
        assert!(props.len() <= 64, "at most 64 propositions are supported");
        Alphabet {
            props: props.iter().cloned().collect(),
        }
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn bit(&self, prop: &str) -> Option<Letter> {
        self.props
            .binary_search_by(|p| p.as_str().cmp(prop))
            .ok()
            .map(|i| 1 << i)
    }

    /// Encodes a proposition set; propositions outside the alphabet are
    /// dropped since no guard can mention them.
    pub fn encode(&self, set: &PropSet) -> Letter {
        set.iter().filter_map(|p| self.bit(p)).fold(0, |acc, b| acc | b)
    }

    pub fn decode(&self, letter: Letter) -> PropSet {
        self.props
            .iter()
            .enumerate()
            .filter(|(i, _)| letter & (1 << i) != 0)
            .map(|(_, p)| p.clone())
            .collect()
    }
}

/// A conjunction of literals: `positive` propositions must hold, `negative`
/// must not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Guard {
    pub positive: Letter,
    pub negative: Letter,
}

impl Guard {
    pub const TRUE: Guard = Guard {
        positive: 0,
        negative: 0,
    };

    pub fn matches(&self, letter: Letter) -> bool {
        letter & self.positive == self.positive && letter & self.negative == 0
    }

    pub fn render(&self, alphabet: &Alphabet) -> String {
        let mut lits = Vec::new();
        for (i, p) in alphabet.props().iter().enumerate() {
            if self.positive & (1 << i) != 0 {
                lits.push(p.clone());
            }
            if self.negative & (1 << i) != 0 {
                lits.push(format!("!{p}"));
            }
        }
        if lits.is_empty() {
            "true".to_string()
        } else {
            lits.join(" & ")
        }
    }
}

/// Nondeterministic Büchi automaton with guarded transitions.
///
/// A letter takes transition `(s, g, t)` iff it satisfies `g`. Accepting runs
/// visit `accepting` states infinitely often.
#[derive(Debug, Clone)]
pub struct BuchiAutomaton {
    pub alphabet: Alphabet,
    pub state_names: Vec<String>,
    pub initial: Vec<usize>,
    pub transitions: Vec<Vec<(Guard, usize)>>,
    pub accepting: Vec<bool>,
}

impl BuchiAutomaton {
    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    /// Textual description:
    ///
    /// ```text
    /// buchi <states> <transitions>
    /// alphabet p1 p2 ...
    /// state <id> <name> [initial] [accepting]
    /// edge <src-id> <dst-id> <guard>
    /// ```
    ///
    /// Guards are `true` or literals joined by ` & `, negation written `!p`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "buchi {} {}", self.num_states(), self.num_transitions());
        let _ = writeln!(out, "alphabet {}", self.alphabet.props().join(" "));
        for (id, name) in self.state_names.iter().enumerate() {
            let mut line = format!("state {id} {name}");
            if self.initial.contains(&id) {
                line.push_str(" initial");
            }
            if self.accepting[id] {
                line.push_str(" accepting");
            }
            let _ = writeln!(out, "{line}");
        }
        for (src, edges) in self.transitions.iter().enumerate() {
            for (g, dst) in edges {
                let _ = writeln!(out, "edge {src} {dst} {}", g.render(&self.alphabet));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::props;

    #[test]
    fn encode_decode() {
        let a = Alphabet::new(&props(["b", "a", "c"]));
        assert_eq!(a.encode(&props(["a", "c", "zzz"])), 0b101);
        assert_eq!(a.decode(0b110), props(["b", "c"]));
    }

    #[test]
    fn guard_semantics() {
        let g = Guard {
            positive: 0b01,
            negative: 0b10,
        };
        assert!(g.matches(0b01));
        assert!(g.matches(0b101));
        assert!(!g.matches(0b11));
        assert!(!g.matches(0b00));
        assert!(Guard::TRUE.matches(0));
        let a = Alphabet::new(&props(["p", "q"]));
        assert_eq!(g.render(&a), "p & !q");
    }
}
