use std::fmt::Write as _;

use super::classes::CharSet;
use crate::ast::{Assertion, Dialect};

pub type StateId = u32;

/// One instruction of a Thompson automaton.
///
/// Only `Char` and `Set` consume input; everything else is an epsilon move.
/// `Split` prefers `first`, which is how greedy and lazy repetition and
/// alternation order are encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum State {
    Char {
        lo: char,
        hi: char,
        next: StateId,
    },
    Set {
        set: u32,
        next: StateId,
    },
    Split {
        first: StateId,
        second: StateId,
    },
    /// Record the current position in a capture slot (`2g` opens group g,
    /// `2g + 1` closes it; slots 0 and 1 hold the overall match).
    Tag {
        slot: u32,
        next: StateId,
    },
    Assert {
        assertion: Assertion,
        next: StateId,
    },
    /// Remember the position where a loop iteration began.
    Mark {
        register: u32,
        next: StateId,
    },
    /// End of a loop iteration: go to `cont` if input was consumed since
    /// the matching `Mark`, otherwise leave the loop through `exit`.
    Progress {
        register: u32,
        cont: StateId,
        exit: StateId,
    },
    Backref {
        group: u32,
        next: StateId,
    },
    AtomicStart {
        next: StateId,
    },
    AtomicEnd {
        next: StateId,
    },
    Match,
    Fail,
}

/// What an edge consumes or records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Label {
    Epsilon,
    Chars(CharSet),
    Tag(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub label: Label,
    pub to: StateId,
    /// 0 is tried first.
    pub priority: u8,
}

#[derive(Debug, Clone)]
pub struct Nfa {
    pub states: Vec<State>,
    pub sets: Vec<CharSet>,
    pub start: StateId,
    /// Number of capture groups, not counting the overall match.
    pub capture_count: usize,
    pub registers: usize,
    pub dialect: Dialect,
    /// Every match must start at offset 0.
    pub anchored: bool,
    pub has_backrefs: bool,
    pub has_atomic: bool,
}

impl Nfa {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn slot_count(&self) -> usize {
        2 * (self.capture_count + 1)
    }

    /// Whether consuming state `id` accepts `c`; `None` for epsilon states.
    pub fn consumes(&self, id: StateId, c: char) -> Option<StateId> {
        match self.states[id as usize] {
            State::Char { lo, hi, next } => (lo <= c && c <= hi).then_some(next),
            State::Set { set, next } => self.sets[set as usize].contains(c).then_some(next),
            _ => None,
        }
    }

    pub fn is_consuming(&self, id: StateId) -> bool {
        matches!(
            self.states[id as usize],
            State::Char { .. } | State::Set { .. }
        )
    }

    /// The character set of a consuming state.
    pub fn char_set(&self, id: StateId) -> Option<CharSet> {
        match self.states[id as usize] {
            State::Char { lo, hi, .. } => Some(CharSet::from_ranges([(lo, hi)])),
            State::Set { set, .. } => Some(self.sets[set as usize].clone()),
            _ => None,
        }
    }

    /// States of the epsilon-free position automaton: the start plus one per
    /// consuming state.
    pub fn position_count(&self) -> usize {
        self.char_states().count() + 1
    }

    /// Ids of all consuming states.
    pub fn char_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len() as StateId).filter(|&i| self.is_consuming(i))
    }

    /// Out-edges of `id` in priority order.
    pub fn transitions(&self, id: StateId) -> Vec<Transition> {
        let edge = |label, to, priority| Transition {
            label,
            to,
            priority,
        };
        match self.states[id as usize] {
            State::Char { next, .. } | State::Set { next, .. } => {
                vec![edge(Label::Chars(self.char_set(id).unwrap()), next, 0)]
            }
            State::Split { first, second } => {
                vec![
                    edge(Label::Epsilon, first, 0),
                    edge(Label::Epsilon, second, 1),
                ]
            }
            State::Progress { cont, exit, .. } => {
                vec![edge(Label::Epsilon, cont, 0), edge(Label::Epsilon, exit, 1)]
            }
            State::Tag { slot, next } => vec![edge(Label::Tag(slot), next, 0)],
            State::Assert { next, .. }
            | State::Mark { next, .. }
            | State::Backref { next, .. }
            | State::AtomicStart { next }
            | State::AtomicEnd { next } => vec![edge(Label::Epsilon, next, 0)],
            State::Match | State::Fail => Vec::new(),
        }
    }

    /// Text dump, one state per line:
    ///
    /// ```text
    /// 0: tag 0 -> 1
    /// 1: char 'a'-'a' -> 2
    /// 2: split 1, 3
    /// ```
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "start {} captures {} registers {}",
            self.start, self.capture_count, self.registers
        );
        for (i, s) in self.states.iter().enumerate() {
            let _ = write!(out, "{i}: ");
            let _ = match *s {
                State::Char { lo, hi, next } => {
                    writeln!(out, "char {lo:?}-{hi:?} -> {next}")
                }
                State::Set { set, next } => {
                    let ranges: Vec<String> = self.sets[set as usize]
                        .ranges()
                        .iter()
                        .map(|(a, b)| format!("{a:?}-{b:?}"))
                        .collect();
                    writeln!(out, "set [{}] -> {next}", ranges.join(" "))
                }
                State::Split { first, second } => writeln!(out, "split {first}, {second}"),
                State::Tag { slot, next } => writeln!(out, "tag {slot} -> {next}"),
                State::Assert { assertion, next } => {
                    writeln!(out, "assert {assertion:?} -> {next}")
                }
                State::Mark { register, next } => writeln!(out, "mark r{register} -> {next}"),
                State::Progress {
                    register,
                    cont,
                    exit,
                } => writeln!(out, "progress r{register} -> {cont}, empty -> {exit}"),
                State::Backref { group, next } => writeln!(out, "backref {group} -> {next}"),
                State::AtomicStart { next } => writeln!(out, "atomic-start -> {next}"),
                State::AtomicEnd { next } => writeln!(out, "atomic-end -> {next}"),
                State::Match => writeln!(out, "match"),
                State::Fail => writeln!(out, "fail"),
            };
        }
        out
    }
}

/// Whether an assertion holds at `pos` in `input`.
pub fn assertion_holds(a: Assertion, input: &[char], pos: usize) -> bool {
    let prev = pos.checked_sub(1).map(|p| input[p]);
    let next = input.get(pos).copied();
    let word = |c: Option<char>| c.is_some_and(|c| c.is_ascii_alphanumeric() || c == '_');
    match a {
        Assertion::StartText => pos == 0,
        Assertion::EndText => pos == input.len(),
        Assertion::EndTextOptNewline => {
            pos == input.len() || (pos + 1 == input.len() && next == Some('\n'))
        }
        Assertion::LineStart => pos == 0 || prev == Some('\n'),
        Assertion::LineEnd => pos == input.len() || next == Some('\n'),
        Assertion::WordBoundary => word(prev) != word(next),
        Assertion::NotWordBoundary => word(prev) == word(next),
    }
}
