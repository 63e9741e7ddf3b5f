use std::collections::BTreeSet;
use std::fmt;

/// LTL syntax tree.
///
/// `Release` does not appear in parsed input unless written explicitly; it is
/// produced by negation normal form (`G p` becomes `false R p`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Prop(String),
    Not(Box<Formula>),
    Next(Box<Formula>),
    Eventually(Box<Formula>),
    Globally(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

use Formula::*;

impl Formula {
    pub fn prop(name: &str) -> Formula {
        Prop(name.to_string())
    }
    pub fn not(f: Formula) -> Formula {
        Not(Box::new(f))
    }
    pub fn next(f: Formula) -> Formula {
        Next(Box::new(f))
    }
    pub fn eventually(f: Formula) -> Formula {
        Eventually(Box::new(f))
    }
    pub fn globally(f: Formula) -> Formula {
        Globally(Box::new(f))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Or(Box::new(a), Box::new(b))
    }
    pub fn until(a: Formula, b: Formula) -> Formula {
        Until(Box::new(a), Box::new(b))
    }
    pub fn release(a: Formula, b: Formula) -> Formula {
        Release(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Implies(Box::new(a), Box::new(b))
    }

    /// Propositions occurring in the formula.
    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        match self {
            True | False => {}
            Prop(p) => {
                out.insert(p.clone());
            }
            Not(a) | Next(a) | Eventually(a) | Globally(a) => a.collect_props(out),
            And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) | Implies(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }

    /// Top-level conjuncts, flattening nested `&&`.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            other => vec![other],
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            True | False | Prop(_) => 0,
            Not(a) | Next(a) | Eventually(a) | Globally(a) => 1 + a.depth(),
            And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) | Implies(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// Negation normal form over `true, false, p, !p, X, &&, ||, U, R`.
    pub fn nnf(&self) -> Formula {
        self.to_nnf(false)
    }

    fn to_nnf(&self, neg: bool) -> Formula {
        match (self, neg) {
            (True, false) | (False, true) => True,
            (True, true) | (False, false) => False,
            (Prop(p), false) => Prop(p.clone()),
            (Prop(p), true) => Formula::not(Prop(p.clone())),
            (Not(a), _) => a.to_nnf(!neg),
            (Next(a), _) => Formula::next(a.to_nnf(neg)),
            (Eventually(a), false) => Formula::until(True, a.to_nnf(false)),
            (Eventually(a), true) => Formula::release(False, a.to_nnf(true)),
            (Globally(a), false) => Formula::release(False, a.to_nnf(false)),
            (Globally(a), true) => Formula::until(True, a.to_nnf(true)),
            (And(a, b), false) => Formula::and(a.to_nnf(false), b.to_nnf(false)),
            (And(a, b), true) => Formula::or(a.to_nnf(true), b.to_nnf(true)),
            (Or(a, b), false) => Formula::or(a.to_nnf(false), b.to_nnf(false)),
            (Or(a, b), true) => Formula::and(a.to_nnf(true), b.to_nnf(true)),
            (Until(a, b), false) => Formula::until(a.to_nnf(false), b.to_nnf(false)),
            (Until(a, b), true) => Formula::release(a.to_nnf(true), b.to_nnf(true)),
            (Release(a, b), false) => Formula::release(a.to_nnf(false), b.to_nnf(false)),
            (Release(a, b), true) => Formula::until(a.to_nnf(true), b.to_nnf(true)),
            (Implies(a, b), false) => Formula::or(a.to_nnf(true), b.to_nnf(false)),
            (Implies(a, b), true) => Formula::and(a.to_nnf(false), b.to_nnf(true)),
        }
    }

    pub fn is_nnf(&self) -> bool {
        match self {
            True | False | Prop(_) => true,
            Not(a) => matches!(**a, Prop(_)),
            Next(a) => a.is_nnf(),
            And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) => a.is_nnf() && b.is_nnf(),
            Eventually(_) | Globally(_) | Implies(..) => false,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Implies(..) => 1,
            Or(..) => 2,
            And(..) => 3,
            Until(..) | Release(..) => 4,
            Not(_) | Next(_) | Eventually(_) | Globally(_) => 5,
            True | False | Prop(_) => 6,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Parenthesize a child when it binds looser than its parent, or equally
        // on the side opposite to the operator's associativity.
        fn child(f: &mut fmt::Formatter<'_>, c: &Formula, min: u8) -> fmt::Result {
            if c.precedence() < min {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        }
        let p = self.precedence();
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Prop(name) => write!(f, "{name}"),
            Not(a) | Next(a) | Eventually(a) | Globally(a) => {
                let op = match self {
                    Not(_) => "!",
                    Next(_) => "X ",
                    Eventually(_) => "F ",
                    _ => "G ",
                };
                write!(f, "{op}")?;
                child(f, a, p)
            }
            And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) | Implies(a, b) => {
                let op = match self {
                    And(..) => "&&",
                    Or(..) => "||",
                    Until(..) => "U",
                    Release(..) => "R",
                    _ => "->",
                };
                // && and || are associative; U, R and -> associate to the right.
                let (lmin, rmin) = match self {
                    And(..) | Or(..) => (p, p),
                    _ => (p + 1, p),
                };
                child(f, a, lmin)?;
                write!(f, " {op} ")?;
                child(f, b, rmin)
            }
        }
    }
}
