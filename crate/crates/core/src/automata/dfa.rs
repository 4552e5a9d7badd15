//! Subset construction over a small explicit alphabet, used as a test oracle.
//!
//! Loop bookkeeping (`Mark`, `Progress`) only changes which captures a match
//! reports, never which strings match, so here a `Progress` state simply
//! allows both of its successors.

use std::collections::HashMap;

use super::nfa::{Nfa, State, StateId};
use crate::ast::Assertion;

pub const MAX_ALPHABET: usize = 8;
/// Bound on the NFA states that make up a DFA state (consuming states, the
/// accept state and pending end-of-input style assertions).
pub const MAX_SIGNIFICANT: usize = 64;
pub const DFA_STATE_CAP: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DfaError {
    #[error("alphabet has {0} symbols, at most {MAX_ALPHABET} allowed")]
    AlphabetTooLarge(usize),
    #[error("automaton has {0} significant states, at most {MAX_SIGNIFICANT} allowed")]
    TooManyStates(usize),
    #[error("{0} is not supported by the DFA oracle")]
    Unsupported(&'static str),
    #[error("subset construction exceeds {limit} states")]
    BudgetExceeded { limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    /// The whole input must match.
    Full,
    /// Some substring of the input must match.
    Search,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfaState {
    /// Member NFA states (significant ones only), ascending.
    pub nfa_states: Vec<StateId>,
    pub accept: bool,
}

/// A deterministic automaton, total over `alphabet`.
#[derive(Debug, Clone)]
pub struct Dfa {
    pub alphabet: Vec<char>,
    pub states: Vec<DfaState>,
    /// `table[state][symbol index]`
    pub table: Vec<Vec<usize>>,
    pub start: usize,
}

impl Dfa {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Membership; strings with symbols outside the alphabet are rejected.
    pub fn accepts(&self, input: &str) -> bool {
        let mut s = self.start;
        for c in input.chars() {
            let Some(i) = self.alphabet.iter().position(|&a| a == c) else {
                return false;
            };
            s = self.table[s][i];
        }
        self.states[s].accept
    }
}

pub fn subset_construct(nfa: &Nfa, alphabet: &[char]) -> Result<Dfa, DfaError> {
    subset_construct_mode(nfa, alphabet, MatchMode::Full)
}

pub fn subset_construct_mode(
    nfa: &Nfa,
    alphabet: &[char],
    mode: MatchMode,
) -> Result<Dfa, DfaError> {
    let mut alphabet = alphabet.to_vec();
    alphabet.sort_unstable();
    alphabet.dedup();
    if alphabet.len() > MAX_ALPHABET {
        return Err(DfaError::AlphabetTooLarge(alphabet.len()));
    }
    if nfa.has_backrefs {
        return Err(DfaError::Unsupported("backreference"));
    }
    if nfa.has_atomic {
        return Err(DfaError::Unsupported("atomic group"));
    }
    let mut significant = Vec::new();
    let mut uses_context = false;
    for (i, s) in nfa.states.iter().enumerate() {
        match s {
            State::Char { .. } | State::Set { .. } | State::Match => significant.push(i as StateId),
            State::Assert { assertion, .. } => {
                uses_context = true;
                if is_lookahead(*assertion) {
                    if alphabet.contains(&'\n')
                        && matches!(assertion, Assertion::EndTextOptNewline | Assertion::LineEnd)
                    {
                        return Err(DfaError::Unsupported(
                            "newline-sensitive end anchor over an alphabet with newline",
                        ));
                    }
                    significant.push(i as StateId);
                }
            }
            _ => {}
        }
    }
    if significant.len() > MAX_SIGNIFICANT {
        return Err(DfaError::TooManyStates(significant.len()));
    }
    let builder = Builder {
        nfa,
        bit: significant
            .iter()
            .enumerate()
            .map(|(b, &s)| (s, b))
            .collect(),
        significant,
        mode,
    };
    builder.run(alphabet, uses_context)
}

fn is_lookahead(a: Assertion) -> bool {
    !matches!(a, Assertion::StartText | Assertion::LineStart)
}

fn is_word(c: Option<char>) -> bool {
    c.is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `next` is `None` at the end of input. End-of-line forms assume the
/// alphabet has no newline.
fn holds(a: Assertion, prev: Option<char>, next: Option<char>) -> bool {
    match a {
        Assertion::StartText => prev.is_none(),
        Assertion::LineStart => prev.is_none() || prev == Some('\n'),
        Assertion::EndText | Assertion::EndTextOptNewline | Assertion::LineEnd => next.is_none(),
        Assertion::WordBoundary => is_word(prev) != is_word(next),
        Assertion::NotWordBoundary => is_word(prev) == is_word(next),
    }
}

#[derive(Clone, Copy)]
enum Ahead {
    Unknown,
    Known(Option<char>),
}

type Key = (u64, Option<char>, bool);

struct Builder<'a> {
    nfa: &'a Nfa,
    significant: Vec<StateId>,
    bit: HashMap<StateId, usize>,
    mode: MatchMode,
}

impl Builder<'_> {
    fn closure(&self, seeds: &[StateId], prev: Option<char>, ahead: Ahead) -> u64 {
        let mut bits = 0u64;
        let mut seen = vec![false; self.nfa.len()];
        let mut stack: Vec<StateId> = seeds.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id as usize], true) {
                continue;
            }
            match self.nfa.states[id as usize] {
                State::Char { .. } | State::Set { .. } | State::Match => bits |= 1 << self.bit[&id],
                State::Split { first, second }
                | State::Progress {
                    cont: first,
                    exit: second,
                    ..
                } => {
                    stack.push(second);
                    stack.push(first);
                }
                State::Tag { next, .. }
                | State::Mark { next, .. }
                | State::AtomicStart { next }
                | State::AtomicEnd { next } => stack.push(next),
                State::Assert { assertion, next } => match ahead {
                    Ahead::Unknown if is_lookahead(assertion) => bits |= 1 << self.bit[&id],
                    Ahead::Known(n) if !holds(assertion, prev, n) => {}
                    Ahead::Unknown if !holds(assertion, prev, None) => {}
                    _ => stack.push(next),
                },
                State::Backref { .. } | State::Fail => {}
            }
        }
        bits
    }

    fn members(&self, bits: u64) -> impl Iterator<Item = StateId> + '_ {
        (0..self.significant.len())
            .filter(move |b| bits & (1 << b) != 0)
            .map(|b| self.significant[b])
    }

    /// Resolve pending assertions now that the next symbol is known.
    fn resolve(&self, bits: u64, prev: Option<char>, next: Option<char>) -> u64 {
        let seeds: Vec<StateId> = self
            .members(bits)
            .filter_map(|id| match self.nfa.states[id as usize] {
                State::Assert {
                    assertion,
                    next: to,
                } if holds(assertion, prev, next) => Some(to),
                _ => None,
            })
            .collect();
        let resolved = self.closure(&seeds, prev, Ahead::Known(next));
        let pending: u64 = self
            .members(bits)
            .filter(|&id| matches!(self.nfa.states[id as usize], State::Assert { .. }))
            .map(|id| 1u64 << self.bit[&id])
            .sum();
        (bits & !pending) | resolved
    }

    fn has_match(&self, bits: u64) -> bool {
        self.members(bits)
            .any(|id| self.nfa.states[id as usize] == State::Match)
    }

    fn run(self, alphabet: Vec<char>, uses_context: bool) -> Result<Dfa, DfaError> {
        let search = self.mode == MatchMode::Search;
        let start_bits = self.closure(&[self.nfa.start], None, Ahead::Unknown);
        let start_key: Key = (start_bits, None, search && self.has_match(start_bits));
        let mut ids: HashMap<Key, usize> = HashMap::new();
        let mut keys: Vec<Key> = vec![start_key];
        ids.insert(start_key, 0);
        let mut table: Vec<Vec<usize>> = Vec::new();
        let mut i = 0;
        while i < keys.len() {
            let (bits, prev, matched) = keys[i];
            let mut row = Vec::with_capacity(alphabet.len());
            for &c in &alphabet {
                let here = self.resolve(bits, prev, Some(c));
                let mut matched = matched || (search && self.has_match(here));
                let mut seeds: Vec<StateId> = self
                    .members(here)
                    .filter_map(|id| self.nfa.consumes(id, c))
                    .collect();
                if search && !matched {
                    seeds.push(self.nfa.start);
                }
                let next_bits = self.closure(&seeds, Some(c), Ahead::Unknown);
                matched |= search && self.has_match(next_bits);
                let key: Key = if matched {
                    (0, None, true)
                } else {
                    (next_bits, if uses_context { Some(c) } else { None }, false)
                };
                let id = match ids.get(&key) {
                    Some(&id) => id,
                    None => {
                        if keys.len() >= DFA_STATE_CAP {
                            return Err(DfaError::BudgetExceeded {
                                limit: DFA_STATE_CAP,
                            });
                        }
                        ids.insert(key, keys.len());
                        keys.push(key);
                        keys.len() - 1
                    }
                };
                row.push(id);
            }
            table.push(row);
            i += 1;
        }
        let states = keys
            .iter()
            .map(|&(bits, prev, matched)| DfaState {
                nfa_states: self.members(bits).collect(),
                accept: matched || self.has_match(self.resolve(bits, prev, None)),
            })
            .collect();
        Ok(Dfa {
            alphabet,
            states,
            table,
            start: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse, Dialect};
    use crate::automata::compile;

    fn dfa(p: &str, alphabet: &str, mode: MatchMode) -> Dfa {
        let nfa = compile(&parse(p, Dialect::Java).unwrap()).unwrap();
        subset_construct_mode(&nfa, &alphabet.chars().collect::<Vec<_>>(), mode).unwrap()
    }

    fn strings(alphabet: &[char], max: usize) -> Vec<String> {
        let mut out = vec![String::new()];
        let mut layer = vec![String::new()];
        for _ in 0..max {
            layer = layer
                .iter()
                .flat_map(|s| alphabet.iter().map(move |c| format!("{s}{c}")))
                .collect();
            out.extend(layer.iter().cloned());
        }
        out
    }

    fn language(d: &Dfa, max: usize) -> Vec<String> {
        strings(&d.alphabet, max)
            .into_iter()
            .filter(|s| d.accepts(s))
            .collect()
    }

    #[test]
    fn star_is_one_state() {
        let d = dfa("a*", "a", MatchMode::Full);
        assert_eq!(d.len(), 1);
        assert!(d.states[0].accept);
        assert_eq!(d.table, vec![vec![0]]);
    }

    #[test]
    fn small_languages() {
        assert_eq!(
            language(&dfa("(a|b)c", "abc", MatchMode::Full), 3),
            ["ac", "bc"]
        );
        assert_eq!(language(&dfa("a{2}", "a", MatchMode::Full), 4), ["aa"]);
        let d = dfa("ab", "ab", MatchMode::Search);
        assert!(d.accepts("bab"));
        assert!(!d.accepts("ba"));
    }

    #[test]
    fn assertions() {
        let d = dfa(r"a\b", "a ", MatchMode::Search);
        assert!(d.accepts("a"));
        assert!(d.accepts("a a"));
        assert!(d.accepts("aa"));
        assert!(!d.accepts(" "));
        assert!(!dfa(r"a\B", "a ", MatchMode::Full).accepts("a"));
        let d = dfa("^a$", "ab", MatchMode::Search);
        assert!(d.accepts("a"));
        assert!(!d.accepts("ba"));
        assert!(!d.accepts("ab"));
    }

    #[test]
    fn guards() {
        let nfa = compile(&parse("a", Dialect::Java).unwrap()).unwrap();
        assert_eq!(
            subset_construct(&nfa, &"abcdefghi".chars().collect::<Vec<_>>()).unwrap_err(),
            DfaError::AlphabetTooLarge(9)
        );
        let nfa = compile(&parse("a$", Dialect::Java).unwrap()).unwrap();
        assert!(subset_construct(&nfa, &['a', '\n']).is_err());
        let nfa = compile(&parse("a{70}", Dialect::Java).unwrap()).unwrap();
        assert_eq!(
            subset_construct(&nfa, &['a']).unwrap_err(),
            DfaError::TooManyStates(71)
        );
    }
}
