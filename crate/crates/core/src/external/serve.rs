use std::io::{self, BufRead, Write};
use std::str::FromStr;
use std::time::Duration;

use crate::ast::{parse, Dialect};
use crate::engines::{DefenseConfig, Outcome, Program};

use super::protocol::{self, Hello, Request, Response, Status, PROTOCOL_VERSION};

/// Misbehavior injected into the built-in tester, for exercising the
/// orchestrator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fault {
    /// Never answer anything.
    Silent,
    /// Answer the handshake with version 2.
    BadVersion,
    /// Stop answering once this input arrives.
    HangOn(String),
    /// Exit once this input arrives.
    CrashOn(String),
    /// Precede every response with a malformed line and a stale id.
    Garbage,
}

impl FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Fault, String> {
        match s.split_once('=') {
            None if s == "silent" => Ok(Fault::Silent),
            None if s == "bad-version" => Ok(Fault::BadVersion),
            None if s == "garbage" => Ok(Fault::Garbage),
            Some(("hang-on", t)) => Ok(Fault::HangOn(t.to_string())),
            Some(("crash-on", t)) => Ok(Fault::CrashOn(t.to_string())),
            _ => Err(format!("unknown fault `{s}`")),
        }
    }
}

/// Serve the tester protocol with the internal backtracker until EOF.
pub fn serve(
    input: impl BufRead,
    mut output: impl Write,
    dialect: Dialect,
    fault: Option<&Fault>,
) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if fault == Some(&Fault::Silent) {
            continue;
        }
        if let Ok(Hello { .. }) = protocol::decode::<Hello>(&line) {
            let hello = if fault == Some(&Fault::BadVersion) {
                2
            } else {
                PROTOCOL_VERSION
            };
            writeln!(output, "{}", protocol::encode(&Hello { hello }))?;
            output.flush()?;
            continue;
        }
        let response = match protocol::decode::<Request>(&line) {
            Ok(request) => {
                if let Ok((_, text)) = request.decode() {
                    match fault {
                        Some(Fault::HangOn(t)) if *t == text => loop {
                            std::thread::sleep(Duration::from_secs(3600));
                        },
                        Some(Fault::CrashOn(t)) if *t == text => std::process::exit(3),
                        _ => {}
                    }
                }
                answer(&request, dialect)
            }
            Err(_) => Response::status_only(-1, Status::Error),
        };
        if fault == Some(&Fault::Garbage) {
            writeln!(output, "not json")?;
            writeln!(
                output,
                "{}",
                protocol::encode(&Response::status_only(response.id - 1000, Status::Ok))
            )?;
        }
        writeln!(output, "{}", protocol::encode(&response))?;
        output.flush()?;
    }
    Ok(())
}

/// Evaluate one request.
pub fn answer(request: &Request, dialect: Dialect) -> Response {
    let id = request.id;
    if request.op != "partial_match" {
        return Response::status_only(id, Status::Error);
    }
    let Ok((pattern, input)) = request.decode() else {
        return Response::status_only(id, Status::Error);
    };
    let Ok(ast) = parse(&pattern, dialect) else {
        return Response::status_only(id, Status::SyntaxError);
    };
    let Ok(program) = Program::new(&ast) else {
        return Response::status_only(id, Status::Error);
    };
    let r = program.backtrack(
        &input,
        DefenseConfig::none(),
        Duration::from_millis(request.timeout_ms),
    );
    let elapsed_us = r.elapsed.as_micros() as u64;
    match r.outcome {
        Outcome::Timeout | Outcome::AbortedByCounter => Response {
            elapsed_us,
            ..Response::status_only(id, Status::Timeout)
        },
        Outcome::NoMatch | Outcome::Match { .. } => Response {
            id,
            status: Status::Ok,
            matched: r.outcome.is_match(),
            span: r.outcome.span().map(|s| [s.start, s.end]),
            captures: r
                .captures
                .iter()
                .map(|c| c.map(|s| [s.start, s.end]))
                .collect(),
            elapsed_us,
        },
    }
}
