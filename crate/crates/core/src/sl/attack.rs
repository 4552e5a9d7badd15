use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::analysis::Witness;
use crate::automata::{CharSet, Nfa};
use crate::engines::pike;

pub const EXPONENTIAL_PUMPS: u64 = 100;
pub const POLYNOMIAL_PUMPS: u64 = 100_000;

/// `prefix + pump * n + suffix`, where the suffix forces a mismatch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackString {
    pub prefix: String,
    pub pump: String,
    pub suffix: String,
    pub recommended_pumps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AttackError {
    #[error("no suffix makes the pumped input fail to match")]
    SynthesisFailed,
    #[error("malformed attack block: {0}")]
    Format(String),
}

impl AttackString {
    pub fn build(&self, pumps: u64) -> String {
        let mut s = String::with_capacity(
            self.prefix.len() + self.pump.len() * pumps as usize + self.suffix.len(),
        );
        s.push_str(&self.prefix);
        for _ in 0..pumps {
            s.push_str(&self.pump);
        }
        s.push_str(&self.suffix);
        s
    }

    /// Serialize as the block
    ///
    /// ```text
    /// <prefix length in chars>
    /// <prefix>
    /// <pump>
    /// <suffix>
    /// <pumps>
    /// ```
    ///
    /// The prefix may contain newlines; the pump and suffix may not.
    pub fn to_block(&self) -> Result<String, AttackError> {
        if self.pump.contains('\n') || self.suffix.contains('\n') {
            return Err(AttackError::Format(
                "pump or suffix contains a newline".into(),
            ));
        }
        Ok(format!(
            "{}\n{}\n{}\n{}\n{}\n",
            self.prefix.chars().count(),
            self.prefix,
            self.pump,
            self.suffix,
            self.recommended_pumps
        ))
    }

    pub fn from_block(text: &str) -> Result<AttackString, AttackError> {
        let bad = |m: &str| AttackError::Format(m.to_string());
        let (len, rest) = text
            .split_once('\n')
            .ok_or_else(|| bad("missing prefix length"))?;
        let len: usize = len.trim().parse().map_err(|_| bad("bad prefix length"))?;
        let split = rest
            .char_indices()
            .nth(len)
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let (prefix, rest) = rest.split_at(split);
        if prefix.chars().count() != len {
            return Err(bad("prefix shorter than its length"));
        }
        let rest = rest
            .strip_prefix('\n')
            .ok_or_else(|| bad("missing newline after prefix"))?;
        let lines: Vec<&str> = rest
            .strip_suffix('\n')
            .unwrap_or(rest)
            .split('\n')
            .collect();
        let [pump, suffix, pumps] = lines[..] else {
            return Err(bad("expected pump, suffix and pumps lines"));
        };
        if pump.is_empty() {
            return Err(bad("empty pump"));
        }
        Ok(AttackString {
            prefix: prefix.to_string(),
            pump: pump.to_string(),
            suffix: suffix.to_string(),
            recommended_pumps: pumps.trim().parse().map_err(|_| bad("bad pump count"))?,
        })
    }
}

/// The shortest `u` with `word == u.repeat(k)`.
fn primitive_root(word: &str) -> &str {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    for len in 1..n {
        if n.is_multiple_of(len) && (len..n).all(|i| chars[i] == chars[i - len]) {
            let end = word.char_indices().nth(len).map(|(i, _)| i).unwrap();
            return &word[..end];
        }
    }
    word
}

/// Suffix candidates: the smallest characters outside `follow`, then a
/// sentinel.
fn suffix_candidates(follow: &CharSet) -> Vec<char> {
    ('a'..='z')
        .chain('0'..='9')
        .chain('A'..='Z')
        .chain(' '..='~')
        .chain(['\u{0}', '\u{2603}'])
        .filter(|&c| !follow.contains(c))
        .take(8)
        .collect()
}

/// Turn an ambiguity witness into an attack string. `check` is the
/// original pattern's automaton; the suffix must make it fail on short
/// pumped inputs.
pub fn synthesize_attack(
    witness: &Witness,
    follow: &CharSet,
    recommended_pumps: u64,
    check: &Nfa,
) -> Result<AttackString, AttackError> {
    let pump = primitive_root(&witness.pump).to_string();
    let mut prefix = witness.prefix.clone();
    while !pump.is_empty() && prefix.ends_with(&pump) {
        prefix.truncate(prefix.len() - pump.len());
    }
    for c in suffix_candidates(follow) {
        let attack = AttackString {
            prefix: prefix.clone(),
            pump: pump.clone(),
            suffix: c.to_string(),
            recommended_pumps,
        };
        let fails = (1..=3).all(|k| {
            let input: Vec<char> = attack.build(k).chars().collect();
            pike(check, &input, Duration::from_secs(5))
                .is_ok_and(|r| r.outcome == crate::engines::Outcome::NoMatch)
        });
        if fails {
            return Ok(attack);
        }
    }
    Err(AttackError::SynthesisFailed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_round_trip() {
        let a = AttackString {
            prefix: "x\ny".into(),
            pump: "ab".into(),
            suffix: "!".into(),
            recommended_pumps: 100,
        };
        let block = a.to_block().unwrap();
        assert_eq!(block, "3\nx\ny\nab\n!\n100\n");
        assert_eq!(AttackString::from_block(&block).unwrap(), a);
        assert!(AttackString::from_block("1\n\n\nb\n5\n").is_err());
        assert!(AttackString::from_block("9\nab\nc\nd\n1\n").is_err());
    }

    #[test]
    fn roots() {
        assert_eq!(primitive_root("aaaa"), "a");
        assert_eq!(primitive_root("abab"), "ab");
        assert_eq!(primitive_root("aba"), "aba");
        assert_eq!(primitive_root("é"), "é");
    }
}
