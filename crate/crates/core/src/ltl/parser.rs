//! Recursive-descent parser for LTL.
//!
//! Precedence, loosest to tightest: `->`, `||`, `&&`, `U`/`R`, then the unary
//! operators `!`, `X`, `F`, `G`. Binary temporal operators and implication
//! associate to the right, so `p1 U p2 U p3` is `p1 U (p2 U p3)`.
//! `&` / `|` / `=>` are accepted as aliases.

use std::collections::BTreeSet;

use thiserror::Error;

use super::Formula;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown proposition `{name}` at byte {pos}")]
    UnknownProposition { name: String, pos: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    Next,
    Eventually,
    Globally,
    Until,
    Release,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let two = text.get(i..i + 2).unwrap_or("");
        let tok = if two == "&&" || two == "||" || two == "->" || two == "=>" {
            i += 2;
            match two {
                "&&" => Tok::And,
                "||" => Tok::Or,
                _ => Tok::Implies,
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            match &text[start..i] {
                "true" => Tok::True,
                "false" => Tok::False,
                "X" => Tok::Next,
                "F" => Tok::Eventually,
                "G" => Tok::Globally,
                "U" => Tok::Until,
                "R" => Tok::Release,
                word => Tok::Ident(word.to_string()),
            }
        } else {
            i += 1;
            match c {
                '!' | '~' => Tok::Not,
                '&' => Tok::And,
                '|' => Tok::Or,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(ParseError::Syntax {
                        pos: start,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            }
        };
        out.push((tok, start));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    props: &'a BTreeSet<String>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.binary_temporal()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.binary_temporal()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        match self.peek() {
            Tok::Until => {
                self.bump();
                Ok(Formula::until(lhs, self.binary_temporal()?))
            }
            Tok::Release => {
                self.bump();
                Ok(Formula::release(lhs, self.binary_temporal()?))
            }
            _ => Ok(lhs),
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Not => Ok(Formula::not(self.unary()?)),
            Tok::Next => Ok(Formula::next(self.unary()?)),
            Tok::Eventually => Ok(Formula::eventually(self.unary()?)),
            Tok::Globally => Ok(Formula::globally(self.unary()?)),
            Tok::True => Ok(Formula::True),
            Tok::False => Ok(Formula::False),
            Tok::Ident(name) => {
                if self.props.contains(&name) {
                    Ok(Formula::Prop(name))
                } else {
                    Err(ParseError::UnknownProposition { name, pos })
                }
            }
            Tok::LParen => {
                let inner = self.implication()?;
                if *self.peek() != Tok::RParen {
                    return self.err("expected `)`");
                }
                self.bump();
                Ok(inner)
            }
            Tok::End => {
                self.at = self.toks.len() - 1;
                self.err("unexpected end of input")
            }
            other => {
                self.at -= 1;
                self.err(format!("unexpected token {other:?}"))
            }
        }
    }
}

/// Proposition names mentioned in `text`.
pub fn formula_props(text: &str) -> Result<BTreeSet<String>, ParseError> {
    Ok(tokenize(text)?
        .into_iter()
        .filter_map(|t| match t {
            (Tok::Ident(name), _) => Some(name),
            _ => None,
        })
        .collect())
}

/// Parses `text` into a formula whose propositions must all be in `props`.
pub fn parse_ltl(text: &str, props: &BTreeSet<String>) -> Result<Formula, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, at: 0, props };
    if *p.peek() == Tok::End {
        return p.err("empty formula");
    }
    let f = p.implication()?;
    if *p.peek() != Tok::End {
        return p.err("trailing input");
    }
    Ok(f)
}
