use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use crate::ast::Dialect;
use crate::differential::{Observed, SubjectResult};

use super::protocol::{self, Hello, Request, Response, Status, PROTOCOL_VERSION};

pub const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(5);
/// Extra wait beyond the request's own timeout before the tester is
/// considered hung.
const GRACE: Duration = Duration::from_millis(500);

/// How to launch a tester: a program and its arguments, split on
/// whitespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TesterCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl TesterCommand {
    pub fn new(
        program: impl Into<String>,
        args: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        TesterCommand {
            program: program.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn parse(line: &str) -> Option<TesterCommand> {
        let mut words = line.split_whitespace();
        Some(TesterCommand::new(words.next()?, words))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TesterError {
    #[error("could not start tester: {0}")]
    Spawn(#[from] std::io::Error),
    #[error("tester did not complete the handshake in time")]
    HandshakeTimeout,
    #[error("tester speaks protocol version {0}, expected {PROTOCOL_VERSION}")]
    VersionMismatch(u32),
    #[error("tester died: {0}")]
    Dead(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandleState {
    Starting,
    Ready,
    Busy,
    Dead,
}

/// One running tester process. At most one request is in flight.
pub struct TesterHandle {
    dialect: Dialect,
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    state: HandleState,
    next_id: i64,
    requests: u64,
}

impl TesterHandle {
    /// Start the process and complete the handshake.
    pub fn spawn(command: &TesterCommand, dialect: Dialect) -> Result<TesterHandle, TesterError> {
        let mut child = Command::new(&command.program)
            .args(&command.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut handle = TesterHandle {
            dialect,
            child,
            stdin,
            lines,
            state: HandleState::Starting,
            next_id: 1,
            requests: 0,
        };
        handle.handshake(HANDSHAKE_TIMEOUT)?;
        Ok(handle)
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    pub fn state(&self) -> HandleState {
        self.state
    }

    pub fn requests(&self) -> u64 {
        self.requests
    }

    pub fn pid(&self) -> u32 {
        self.child.id()
    }

    fn handshake(&mut self, timeout: Duration) -> Result<u32, TesterError> {
        let sent = writeln!(
            self.stdin,
            "{}",
            protocol::encode(&Hello {
                hello: PROTOCOL_VERSION
            })
        )
        .and_then(|_| self.stdin.flush());
        if sent.is_err() {
            self.kill();
            return Err(TesterError::Dead(
                "closed its input during the handshake".into(),
            ));
        }
        let deadline = Instant::now() + timeout;
        loop {
            let wait = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(wait) {
                Ok(line) => match protocol::decode::<Hello>(&line) {
                    Ok(Hello {
                        hello: PROTOCOL_VERSION,
                    }) => {
                        self.state = HandleState::Ready;
                        return Ok(PROTOCOL_VERSION);
                    }
                    Ok(Hello { hello }) => {
                        self.kill();
                        return Err(TesterError::VersionMismatch(hello));
                    }
                    Err(_) => log::warn!("ignoring tester line before handshake: {line}"),
                },
                Err(RecvTimeoutError::Timeout) => {
                    self.kill();
                    return Err(TesterError::HandshakeTimeout);
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.kill();
                    return Err(TesterError::Dead("exited during the handshake".into()));
                }
            }
        }
    }

    /// Run one partial match. A tester that does not answer in time is
    /// killed and the result is a `timeout` failure.
    pub fn request_match(
        &mut self,
        pattern: &str,
        input: &str,
        timeout: Duration,
    ) -> Result<SubjectResult, TesterError> {
        if self.state == HandleState::Dead {
            return Err(TesterError::Dead("handle already dead".into()));
        }
        let id = self.next_id;
        self.next_id += 1;
        self.requests += 1;
        let request = Request::partial_match(id, pattern, input, timeout.as_millis() as u64);
        let sent =
            writeln!(self.stdin, "{}", protocol::encode(&request)).and_then(|_| self.stdin.flush());
        if let Err(e) = sent {
            self.kill();
            return Err(TesterError::Dead(e.to_string()));
        }
        self.state = HandleState::Busy;
        let deadline = Instant::now() + timeout + GRACE;
        loop {
            let wait = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(wait) {
                Ok(line) => match protocol::decode::<Response>(&line) {
                    Ok(r) if r.id == id => {
                        self.state = HandleState::Ready;
                        return Ok(to_result(r));
                    }
                    Ok(r) => log::warn!("discarding tester response with unexpected id {}", r.id),
                    Err(e) => log::warn!("discarding malformed tester line ({e}): {line}"),
                },
                Err(RecvTimeoutError::Timeout) => {
                    self.kill();
                    return Ok(SubjectResult::Failure("timeout".into()));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.kill();
                    return Err(TesterError::Dead("exited while matching".into()));
                }
            }
        }
    }

    pub fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
        self.state = HandleState::Dead;
    }
}

impl Drop for TesterHandle {
    fn drop(&mut self) {
        if self.state != HandleState::Dead {
            self.kill();
        }
    }
}

fn to_result(r: Response) -> SubjectResult {
    match r.status {
        Status::Ok => SubjectResult::Ok(Observed {
            matched: r.matched,
            span: r.span.map(|[s, e]| (s, e)),
            captures: r
                .captures
                .into_iter()
                .map(|c| c.map(|[s, e]| (s, e)))
                .collect(),
            elapsed: Duration::from_micros(r.elapsed_us),
        }),
        Status::SyntaxError => SubjectResult::SyntaxError("rejected by tester".into()),
        Status::Timeout => SubjectResult::Failure("timeout".into()),
        Status::Error => SubjectResult::Failure("tester error".into()),
    }
}

/// A handle slot that replaces dead processes. A dead handle is never
/// reused.
pub struct Tester {
    command: TesterCommand,
    dialect: Dialect,
    handle: Option<TesterHandle>,
    restarts: u64,
}

impl Tester {
    /// The process is started on first use.
    pub fn new(command: TesterCommand, dialect: Dialect) -> Tester {
        Tester {
            command,
            dialect,
            handle: None,
            restarts: 0,
        }
    }

    /// Processes started after the first one.
    pub fn restarts(&self) -> u64 {
        self.restarts
    }

    pub fn handle(&self) -> Option<&TesterHandle> {
        self.handle.as_ref()
    }

    fn live(&mut self) -> Result<&mut TesterHandle, TesterError> {
        if self
            .handle
            .as_ref()
            .is_none_or(|h| h.state() == HandleState::Dead)
        {
            if self.handle.take().is_some() {
                self.restarts += 1;
            }
            self.handle = Some(TesterHandle::spawn(&self.command, self.dialect)?);
        }
        Ok(self.handle.as_mut().unwrap())
    }

    /// A timeout respawns the process before returning. A crash is retried
    /// once on a fresh process.
    pub fn request_match(
        &mut self,
        pattern: &str,
        input: &str,
        timeout: Duration,
    ) -> Result<SubjectResult, TesterError> {
        for attempt in 0..2 {
            match self.live()?.request_match(pattern, input, timeout) {
                Ok(r) => {
                    if matches!(&r, SubjectResult::Failure(m) if m == "timeout")
                        && self
                            .handle
                            .as_ref()
                            .is_some_and(|h| h.state() == HandleState::Dead)
                    {
                        if let Err(e) = self.live() {
                            log::warn!("tester respawn failed: {e}");
                        }
                    }
                    return Ok(r);
                }
                Err(e) if attempt == 0 => log::warn!("tester died, restarting: {e}"),
                Err(e) => return Err(e),
            }
        }
        unreachable!()
    }
}
