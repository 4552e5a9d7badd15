//! Out-of-process testers for foreign regex engines: the wire protocol,
//! process handles with timeouts and restarts, and a built-in tester that
//! serves the protocol with the internal backtracker.

pub mod protocol;
mod serve;
mod tester;

use std::sync::Mutex;
use std::time::Duration;

pub use serve::{answer, serve, Fault};
pub use tester::{
    HandleState, Tester, TesterCommand, TesterError, TesterHandle, HANDSHAKE_TIMEOUT,
};

use crate::ast::Dialect;
use crate::differential::{Subject, SubjectResult};

/// A differential subject backed by tester processes. Each concurrent
/// batch gets its own process, so a dialect scales with the worker count.
pub struct ExternalSubject {
    name: String,
    dialect: Dialect,
    command: TesterCommand,
    idle: Mutex<Vec<Tester>>,
}

impl ExternalSubject {
    pub fn new(
        name: impl Into<String>,
        dialect: Dialect,
        command: TesterCommand,
    ) -> ExternalSubject {
        ExternalSubject {
            name: name.into(),
            dialect,
            command,
            idle: Mutex::new(Vec::new()),
        }
    }

    /// Process restarts across all testers of this subject.
    pub fn restarts(&self) -> u64 {
        self.idle.lock().unwrap().iter().map(Tester::restarts).sum()
    }
}

impl Subject for ExternalSubject {
    fn name(&self) -> &str {
        &self.name
    }

    fn dialect(&self) -> Dialect {
        self.dialect
    }

    fn evaluate(&self, pattern: &str, inputs: &[String], timeout: Duration) -> Vec<SubjectResult> {
        let taken = self.idle.lock().unwrap().pop();
        let mut tester = taken.unwrap_or_else(|| Tester::new(self.command.clone(), self.dialect));
        let out = inputs
            .iter()
            .map(|input| {
                tester
                    .request_match(pattern, input, timeout)
                    .unwrap_or_else(|e| SubjectResult::Failure(e.to_string()))
            })
            .collect();
        self.idle.lock().unwrap().push(tester);
        out
    }
}
