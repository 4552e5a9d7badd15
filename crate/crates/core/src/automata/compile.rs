use std::collections::HashMap;

use super::classes::{class_ranges, dot_set, escape_set, property_set, CharSet};
use super::nfa::{Nfa, State, StateId};
use crate::ast::{
    is_start_anchored, Ast, BackrefTarget, Dialect, GroupKind, Node, NodeKind, Repeat, RepeatMode,
};

/// State cap for automata used by static analysis.
pub const ANALYSIS_STATE_CAP: usize = 10_000;
/// State cap for automata executed by the engines.
pub const ENGINE_STATE_CAP: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("{0} is not supported")]
    Unsupported(&'static str),
    #[error("automaton exceeds {limit} states")]
    BudgetExceeded { limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub max_states: usize,
    /// Allow backreferences and atomic groups (backtracker only).
    pub backtracking: bool,
}

impl CompileOptions {
    pub fn analysis() -> CompileOptions {
        CompileOptions {
            max_states: ANALYSIS_STATE_CAP,
            backtracking: false,
        }
    }

    pub fn engine() -> CompileOptions {
        CompileOptions {
            max_states: ENGINE_STATE_CAP,
            backtracking: true,
        }
    }
}

/// Compile for analysis: backreferences, lookaround and atomic constructs
/// are rejected, and the automaton is capped at [`ANALYSIS_STATE_CAP`].
pub fn compile(ast: &Ast) -> Result<Nfa, CompileError> {
    compile_with(ast, CompileOptions::analysis())
}

/// Compile for execution by the backtracker or the Pike VM.
pub fn compile_program(ast: &Ast) -> Result<Nfa, CompileError> {
    compile_with(ast, CompileOptions::engine())
}

pub fn compile_with(ast: &Ast, opts: CompileOptions) -> Result<Nfa, CompileError> {
    let mut b = Builder {
        ast,
        opts,
        states: Vec::new(),
        sets: Vec::new(),
        set_ids: HashMap::new(),
        registers: 0,
        has_backrefs: false,
        has_atomic: false,
    };
    let accept = b.push(State::Match)?;
    let close = b.push(State::Tag {
        slot: 1,
        next: accept,
    })?;
    let body = b.node(&ast.root, close)?;
    let start = b.push(State::Tag {
        slot: 0,
        next: body,
    })?;
    Ok(Nfa {
        states: b.states,
        sets: b.sets,
        start,
        capture_count: ast.capture_count(),
        registers: b.registers as usize,
        dialect: ast.dialect,
        anchored: is_start_anchored(ast),
        has_backrefs: b.has_backrefs,
        has_atomic: b.has_atomic,
    })
}

struct Builder<'a> {
    ast: &'a Ast,
    opts: CompileOptions,
    states: Vec<State>,
    sets: Vec<CharSet>,
    set_ids: HashMap<CharSet, u32>,
    registers: u32,
    has_backrefs: bool,
    has_atomic: bool,
}

impl Builder<'_> {
    fn dialect(&self) -> Dialect {
        self.ast.dialect
    }

    fn push(&mut self, s: State) -> Result<StateId, CompileError> {
        if self.states.len() >= self.opts.max_states {
            return Err(CompileError::BudgetExceeded {
                limit: self.opts.max_states,
            });
        }
        self.states.push(s);
        Ok((self.states.len() - 1) as StateId)
    }

    fn set(&mut self, set: CharSet, next: StateId) -> Result<StateId, CompileError> {
        if let [(lo, hi)] = set.ranges() {
            return self.push(State::Char {
                lo: *lo,
                hi: *hi,
                next,
            });
        }
        let id = match self.set_ids.get(&set) {
            Some(&id) => id,
            None => {
                let id = self.sets.len() as u32;
                self.set_ids.insert(set.clone(), id);
                self.sets.push(set);
                id
            }
        };
        self.push(State::Set { set: id, next })
    }

    fn node(&mut self, node: &Node, next: StateId) -> Result<StateId, CompileError> {
        match &node.kind {
            NodeKind::Empty => Ok(next),
            NodeKind::Literal(l) => self.push(State::Char {
                lo: l.ch,
                hi: l.ch,
                next,
            }),
            NodeKind::Class(c) => self.set(class_ranges(c), next),
            NodeKind::Dot => self.set(dot_set(self.dialect()), next),
            NodeKind::EscapeClass(e) => self.set(escape_set(*e), next),
            NodeKind::UnicodeProperty(p) => self.set(property_set(p), next),
            NodeKind::Quote(text) => {
                let mut acc = next;
                for ch in text.chars().rev() {
                    acc = self.push(State::Char {
                        lo: ch,
                        hi: ch,
                        next: acc,
                    })?;
                }
                Ok(acc)
            }
            NodeKind::Concat(items) => {
                let mut acc = next;
                for item in items.iter().rev() {
                    acc = self.node(item, acc)?;
                }
                Ok(acc)
            }
            NodeKind::Alternation(items) => {
                let mut starts = Vec::with_capacity(items.len());
                for item in items {
                    starts.push(self.node(item, next)?);
                }
                let mut acc = starts.pop().unwrap();
                while let Some(first) = starts.pop() {
                    acc = self.push(State::Split { first, second: acc })?;
                }
                Ok(acc)
            }
            NodeKind::Group(g) => match &g.kind {
                GroupKind::Capture { index, .. } => {
                    let close = self.push(State::Tag {
                        slot: 2 * index + 1,
                        next,
                    })?;
                    let inner = self.node(&g.child, close)?;
                    self.push(State::Tag {
                        slot: 2 * index,
                        next: inner,
                    })
                }
                GroupKind::Atomic => self.atomic(|b, end| b.node(&g.child, end), next),
                _ => self.node(&g.child, next),
            },
            NodeKind::Backref(r) => {
                if !self.opts.backtracking {
                    return Err(CompileError::Unsupported("backreference"));
                }
                let group = match &r.target {
                    BackrefTarget::Index(i) => *i,
                    BackrefTarget::Name(n) => {
                        let pos = self
                            .ast
                            .capture_names
                            .iter()
                            .position(|c| c.as_deref() == Some(n))
                            .ok_or(CompileError::Unsupported("unknown group name"))?;
                        pos as u32 + 1
                    }
                };
                self.has_backrefs = true;
                self.push(State::Backref { group, next })
            }
            NodeKind::Anchor(a) => self.push(State::Assert {
                assertion: a.assertion(self.dialect()),
                next,
            }),
            NodeKind::MatchReset => self.push(State::Tag { slot: 0, next }),
            NodeKind::Lookaround(_) => Err(CompileError::Unsupported("lookaround")),
            NodeKind::Repeat(r) => {
                if r.mode == RepeatMode::Possessive {
                    return self.atomic(|b, end| b.repeat(r, true, end), next);
                }
                self.repeat(r, r.mode == RepeatMode::Greedy, next)
            }
        }
    }

    fn atomic(
        &mut self,
        inner: impl FnOnce(&mut Self, StateId) -> Result<StateId, CompileError>,
        next: StateId,
    ) -> Result<StateId, CompileError> {
        if !self.opts.backtracking {
            return Err(CompileError::Unsupported("atomic group"));
        }
        self.has_atomic = true;
        let end = self.push(State::AtomicEnd { next })?;
        let body = inner(self, end)?;
        self.push(State::AtomicStart { next: body })
    }

    fn split(
        &mut self,
        body: StateId,
        skip: StateId,
        greedy: bool,
    ) -> Result<StateId, CompileError> {
        let (first, second) = if greedy { (body, skip) } else { (skip, body) };
        self.push(State::Split { first, second })
    }

    fn repeat(&mut self, r: &Repeat, greedy: bool, next: StateId) -> Result<StateId, CompileError> {
        let child = &r.child;
        let mut acc = match r.max {
            None => self.star(child, greedy, next)?,
            Some(max) => {
                let mut acc = next;
                for _ in r.min..max {
                    let body = self.node(child, acc)?;
                    acc = self.split(body, next, greedy)?;
                }
                acc
            }
        };
        for _ in 0..r.min {
            acc = self.node(child, acc)?;
        }
        Ok(acc)
    }

    /// `L: split(body, next)` with the body looping back to `L`. A body that
    /// can match empty is bracketed by a progress check, and an iteration
    /// that consumed nothing leaves the loop.
    fn star(&mut self, child: &Node, greedy: bool, next: StateId) -> Result<StateId, CompileError> {
        let head = self.push(State::Fail)?;
        let entry = if child.is_nullable() {
            let register = self.registers;
            self.registers += 1;
            let check = self.push(State::Progress {
                register,
                cont: head,
                exit: next,
            })?;
            let body = self.node(child, check)?;
            self.push(State::Mark {
                register,
                next: body,
            })?
        } else {
            self.node(child, head)?
        };
        let (first, second) = if greedy { (entry, next) } else { (next, entry) };
        self.states[head as usize] = State::Split { first, second };
        Ok(head)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse;

    fn nfa(p: &str) -> Nfa {
        compile(&parse(p, Dialect::Java).unwrap()).unwrap()
    }

    #[test]
    fn single_char() {
        let n = nfa("a");
        assert_eq!(n.char_states().count(), 1);
        assert_eq!(n.position_count(), 2);
        // tag 0, char, tag 1, match
        assert_eq!(n.len(), 4);
        assert_eq!(n.states.iter().filter(|s| **s == State::Match).count(), 1);
    }

    #[test]
    fn rejections() {
        let p = |s: &str| parse(s, Dialect::Java).unwrap();
        assert_eq!(
            compile(&p(r"(a)\1")).unwrap_err(),
            CompileError::Unsupported("backreference")
        );
        assert_eq!(
            compile(&p("(?=a)")).unwrap_err(),
            CompileError::Unsupported("lookaround")
        );
        assert!(compile(&p("a++")).is_err());
        assert!(compile_program(&p("a++")).is_ok());
        assert!(matches!(
            compile(&p("(a{1,1000}){1,1000}$")).unwrap_err(),
            CompileError::BudgetExceeded { .. }
        ));
    }

    #[test]
    fn nullable_loops_get_progress_checks() {
        let n = nfa("(a*)*");
        assert_eq!(n.registers, 1);
        assert!(n.dump().contains("progress r0"));
        assert_eq!(nfa("(a+)+").registers, 0);
    }

    #[test]
    fn dump_format() {
        let text = nfa("ab").dump();
        assert_eq!(
            text,
            "start 4 captures 0 registers 0\n0: match\n1: tag 1 -> 0\n2: char 'b'-'b' -> 1\n3: char 'a'-'a' -> 2\n4: tag 0 -> 3\n"
        );
    }
}
