//! Two reference matchers: a backtracker with optional defenses against
//! super-linear behavior and a linear-time Pike VM. Both count steps so
//! growth can be measured independently of the machine.

mod backtrack;
mod pike;
mod prefilter;

use std::num::NonZeroU64;
use std::time::Duration;

use serde::Serialize;

use crate::ast::{Ast, Span};
use crate::automata::{compile_program, CompileError, Nfa};

pub use backtrack::backtrack;
pub use pike::{pike, pike_traced};
pub use prefilter::Prefilter;

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;
/// Wall-clock budget matching the super-linear threshold.
pub const DEFAULT_BUDGET: Duration = Duration::from_secs(10);
/// Budget used by desk-scale runs and tests.
pub const DESK_BUDGET: Duration = Duration::from_secs(1);
/// Budget checks happen once per this many steps.
pub(crate) const CHECK_INTERVAL: u64 = 4096;

/// Defenses of the "medium" engine family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DefenseConfig {
    /// Abort once the number of backtracking retries exceeds this.
    pub step_limit: Option<NonZeroU64>,
    /// Remember (state, offset) pairs that already failed.
    pub memoize: bool,
    /// Skip start offsets that cannot begin a match and inputs that lack a
    /// required literal.
    pub offset_pruning: bool,
}

impl DefenseConfig {
    pub fn none() -> DefenseConfig {
        DefenseConfig::default()
    }

    pub fn counter(limit: u64) -> DefenseConfig {
        DefenseConfig {
            step_limit: NonZeroU64::new(limit),
            ..DefenseConfig::default()
        }
    }

    pub fn all() -> DefenseConfig {
        DefenseConfig {
            step_limit: NonZeroU64::new(DEFAULT_STEP_LIMIT),
            memoize: true,
            offset_pruning: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    Match { start: usize, end: usize },
    NoMatch,
    Timeout,
    AbortedByCounter,
}

impl Outcome {
    pub fn span(&self) -> Option<Span> {
        match *self {
            Outcome::Match { start, end } => Some(Span::new(start, end)),
            _ => None,
        }
    }

    pub fn is_match(&self) -> bool {
        matches!(self, Outcome::Match { .. })
    }

    /// Whether the engine finished (matched or not) within its budgets.
    pub fn is_decided(&self) -> bool {
        matches!(self, Outcome::Match { .. } | Outcome::NoMatch)
    }
}

/// Offsets and lengths are in Unicode scalar values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchResult {
    pub outcome: Outcome,
    /// Groups 1..=n; empty unless the outcome is a match.
    pub captures: Vec<Option<Span>>,
    pub steps: u64,
    /// Backtracking retries (alternatives resumed after a failure).
    pub retries: u64,
    pub elapsed: Duration,
}

impl MatchResult {
    pub(crate) fn from_slots(
        slots: Option<&[Option<usize>]>,
        capture_count: usize,
        stop: Option<Outcome>,
        steps: u64,
        retries: u64,
        elapsed: Duration,
    ) -> MatchResult {
        let (outcome, captures) = match (stop, slots) {
            (Some(o), _) => (o, Vec::new()),
            (None, None) => (Outcome::NoMatch, Vec::new()),
            (None, Some(s)) => {
                let span = |g: usize| match (s[2 * g], s[2 * g + 1]) {
                    (Some(a), Some(b)) => Some(Span::new(a, b)),
                    _ => None,
                };
                let whole = span(0).unwrap_or(Span::new(0, 0));
                (
                    Outcome::Match {
                        start: whole.start,
                        end: whole.end,
                    },
                    (1..=capture_count).map(span).collect(),
                )
            }
        };
        MatchResult {
            outcome,
            captures,
            steps,
            retries,
            elapsed,
        }
    }

    /// Text of the overall match.
    pub fn matched_text(&self, input: &str) -> Option<String> {
        self.outcome.span().map(|s| slice(input, s))
    }

    /// Text of each capture group.
    pub fn capture_texts(&self, input: &str) -> Vec<Option<String>> {
        self.captures
            .iter()
            .map(|c| c.map(|s| slice(input, s)))
            .collect()
    }
}

fn slice(input: &str, span: Span) -> String {
    input
        .chars()
        .skip(span.start)
        .take(span.end.saturating_sub(span.start))
        .collect()
}

/// A compiled pattern ready for either engine.
#[derive(Debug, Clone)]
pub struct Program {
    pub nfa: Nfa,
    pub prefilter: Prefilter,
}

impl Program {
    pub fn new(ast: &Ast) -> Result<Program, CompileError> {
        let nfa = compile_program(ast)?;
        let prefilter = Prefilter::new(ast, &nfa);
        Ok(Program { nfa, prefilter })
    }

    pub fn backtrack(&self, input: &str, defenses: DefenseConfig, budget: Duration) -> MatchResult {
        let chars: Vec<char> = input.chars().collect();
        backtrack(&self.nfa, &self.prefilter, &chars, defenses, budget)
    }

    pub fn pike(&self, input: &str, budget: Duration) -> Result<MatchResult, EngineError> {
        let chars: Vec<char> = input.chars().collect();
        pike(&self.nfa, &chars, budget)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("{0} requires the backtracking engine")]
    Unsupported(&'static str),
}

/// Compile `ast` and run the backtracker with partial-match semantics.
pub fn match_backtrack(
    ast: &Ast,
    input: &str,
    defenses: DefenseConfig,
    budget: Duration,
) -> Result<MatchResult, EngineError> {
    Ok(Program::new(ast)?.backtrack(input, defenses, budget))
}

/// Run the Pike VM with partial-match semantics.
pub fn match_pike(nfa: &Nfa, input: &str, budget: Duration) -> Result<MatchResult, EngineError> {
    let chars: Vec<char> = input.chars().collect();
    pike(nfa, &chars, budget)
}
