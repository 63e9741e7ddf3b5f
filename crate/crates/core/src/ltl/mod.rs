//! LTL syntax, semantics on lasso words, and translation to Büchi automata.

mod buchi;
mod eval;
mod formula;
mod parser;
mod product;
mod tableau;

pub use buchi::{Alphabet, BuchiAutomaton, Guard, Letter};
pub use eval::{eval_lasso, LassoWord};
pub use formula::Formula;
pub use parser::{formula_props, parse_ltl, ParseError};
pub use product::{accepts_lasso, buchi_emptiness, LetterGraph, Product};
pub use tableau::ltl_to_buchi;
