//! Length-prefixed record file for input sets.
//!
//! ```text
//! regexpassport-inputs 1
//! seed <u64>
//! coverage <f64>
//! + <byte length>
//! <bytes>
//! - <byte length>
//! <bytes>
//! ```
//!
//! `+` records are positives and `-` records negatives. Each payload is
//! followed by a newline that is not part of it, so inputs may contain
//! newlines or any other character.

use std::io::{self, BufRead, Read, Write};

use super::InputSet;

const MAGIC: &str = "regexpassport-inputs 1";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

pub fn write_inputs(set: &InputSet, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "seed {}", set.seed)?;
    writeln!(out, "coverage {}", set.coverage)?;
    for (sign, items) in [('+', &set.positives), ('-', &set.negatives)] {
        for s in items {
            writeln!(out, "{sign} {}", s.len())?;
            out.write_all(s.as_bytes())?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn read_inputs(input: impl Read) -> Result<InputSet, FormatError> {
    let mut r = io::BufReader::new(input);
    let mut line_no = 0;
    let header =
        |r: &mut io::BufReader<_>, line_no: &mut usize| -> Result<Option<String>, FormatError> {
            let mut line = String::new();
            *line_no += 1;
            if r.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            Ok(Some(line.trim_end_matches('\n').to_string()))
        };
    let bad = |line: usize, m: &str| FormatError::Malformed {
        line,
        message: m.to_string(),
    };
    if header(&mut r, &mut line_no)?.as_deref() != Some(MAGIC) {
        return Err(bad(line_no, "not an input set file"));
    }
    let seed = header(&mut r, &mut line_no)?
        .and_then(|l| l.strip_prefix("seed ")?.parse().ok())
        .ok_or_else(|| bad(line_no, "expected seed"))?;
    let coverage = header(&mut r, &mut line_no)?
        .and_then(|l| l.strip_prefix("coverage ")?.parse().ok())
        .ok_or_else(|| bad(line_no, "expected coverage"))?;
    let mut set = InputSet {
        positives: Vec::new(),
        negatives: Vec::new(),
        coverage,
        seed,
    };
    while let Some(l) = header(&mut r, &mut line_no)? {
        let (sign, len) = l
            .split_once(' ')
            .ok_or_else(|| bad(line_no, "expected record header"))?;
        let len: usize = len.parse().map_err(|_| bad(line_no, "bad record length"))?;
        let mut buf = vec![0; len + 1];
        r.read_exact(&mut buf)
            .map_err(|_| bad(line_no, "truncated record"))?;
        if buf.pop() != Some(b'\n') {
            return Err(bad(line_no, "record not followed by newline"));
        }
        line_no += buf.iter().filter(|&&b| b == b'\n').count() + 1;
        let s = String::from_utf8(buf).map_err(|_| bad(line_no, "record is not UTF-8"))?;
        match sign {
            "+" => set.positives.push(s),
            "-" => set.negatives.push(s),
            _ => return Err(bad(line_no, "record kind must be + or -")),
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let set = InputSet {
            positives: vec!["a\nb".into(), "é".into()],
            negatives: vec![String::new(), "x".into()],
            coverage: 0.75,
            seed: 9,
        };
        let mut buf = Vec::new();
        write_inputs(&set, &mut buf).unwrap();
        assert!(buf.starts_with(b"regexpassport-inputs 1\nseed 9\ncoverage 0.75\n+ 3\na\nb\n+ 2\n"));
        assert_eq!(read_inputs(&buf[..]).unwrap(), set);
        assert!(read_inputs(&buf[..buf.len() - 2]).is_err());
        assert!(read_inputs(&b"nope\n"[..]).is_err());
    }
}
