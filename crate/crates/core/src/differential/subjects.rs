use std::time::Duration;

use crate::ast::{parse, Dialect};
use crate::engines::{DefenseConfig, MatchResult, Outcome, Program};

use super::{Observed, SubjectResult};

/// Something that can run a pattern against inputs with partial-match
/// semantics: an internal engine or an external tester.
pub trait Subject: Send + Sync {
    fn name(&self) -> &str;
    /// The dialect whose syntax and defaults the subject follows.
    fn dialect(&self) -> Dialect;
    /// One result per input, in order.
    fn evaluate(&self, pattern: &str, inputs: &[String], timeout: Duration) -> Vec<SubjectResult>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InternalEngine {
    Backtrack(DefenseConfig),
    Pike,
}

/// One of the crate's own engines, parsing under a fixed dialect.
#[derive(Debug, Clone)]
pub struct InternalSubject {
    name: String,
    dialect: Dialect,
    engine: InternalEngine,
}

impl InternalSubject {
    pub fn new(
        name: impl Into<String>,
        dialect: Dialect,
        engine: InternalEngine,
    ) -> InternalSubject {
        InternalSubject {
            name: name.into(),
            dialect,
            engine,
        }
    }

    /// The undefended backtracker, named `backtrack:<dialect>`.
    pub fn backtrack(dialect: Dialect) -> InternalSubject {
        InternalSubject::new(
            format!("backtrack:{dialect}"),
            dialect,
            InternalEngine::Backtrack(DefenseConfig::none()),
        )
    }

    /// The Pike VM, named `pike:<dialect>`.
    pub fn pike(dialect: Dialect) -> InternalSubject {
        InternalSubject::new(format!("pike:{dialect}"), dialect, InternalEngine::Pike)
    }
}

impl Subject for InternalSubject {
    fn name(&self) -> &str {
        &self.name
    }

    fn dialect(&self) -> Dialect {
        self.dialect
    }

    fn evaluate(&self, pattern: &str, inputs: &[String], timeout: Duration) -> Vec<SubjectResult> {
        let ast = match parse(pattern, self.dialect) {
            Ok(ast) => ast,
            Err(e) => return vec![SubjectResult::SyntaxError(e.to_string()); inputs.len()],
        };
        let program = match Program::new(&ast) {
            Ok(p) => p,
            Err(e) => return vec![SubjectResult::Failure(e.to_string()); inputs.len()],
        };
        inputs
            .iter()
            .map(|input| {
                let r = match self.engine {
                    InternalEngine::Backtrack(d) => program.backtrack(input, d, timeout),
                    InternalEngine::Pike => match program.pike(input, timeout) {
                        Ok(r) => r,
                        Err(e) => return SubjectResult::Failure(e.to_string()),
                    },
                };
                to_result(&r)
            })
            .collect()
    }
}

fn to_result(r: &MatchResult) -> SubjectResult {
    match r.outcome {
        Outcome::Timeout => SubjectResult::Failure("timeout".into()),
        Outcome::AbortedByCounter => SubjectResult::Failure("aborted by step counter".into()),
        Outcome::NoMatch | Outcome::Match { .. } => SubjectResult::Ok(Observed {
            matched: r.outcome.is_match(),
            span: r.outcome.span().map(|s| (s.start, s.end)),
            captures: r
                .captures
                .iter()
                .map(|c| c.map(|s| (s.start, s.end)))
                .collect(),
            elapsed: r.elapsed,
        }),
    }
}
