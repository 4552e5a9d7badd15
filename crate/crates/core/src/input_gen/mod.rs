//! Matching and mismatching inputs for differential testing: random walks
//! through the automaton for positives, single-character edits and
//! boundary strings for negatives.

mod format;

use std::collections::{HashSet, VecDeque};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use format::{read_inputs, write_inputs, FormatError};

use crate::ast::{Assertion, Ast, BackrefTarget, GroupKind, Node, NodeKind};
use crate::automata::{
    assertion_holds, class_ranges, compile, edge_coverage, escape_set, property_set, CharSet, Nfa,
    State, StateId,
};
use crate::engines::{pike, DefenseConfig, Program, DESK_BUDGET};

/// Full-scale request size and time limit.
pub const DEFAULT_TARGET: usize = 10_000;
pub const DEFAULT_BUDGET: Duration = Duration::from_secs(10);
/// Desk-scale profile.
pub const DESK_TARGET: usize = 500;
pub const DESK_GEN_BUDGET: Duration = Duration::from_secs(1);

/// Extra characters mixed into mutations besides the pattern's own.
const MUTATION_CHARS: [char; 6] = ['a', '0', ' ', '\n', '!', 'é'];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputSet {
    pub positives: Vec<String>,
    /// Candidates only; they may still match.
    pub negatives: Vec<String>,
    pub coverage: f64,
    pub seed: u64,
}

impl InputSet {
    pub fn all(&self) -> impl Iterator<Item = &String> {
        self.positives.iter().chain(&self.negatives)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerateError {
    #[error("input generation ran out of time")]
    BudgetExceeded { partial: InputSet },
}

struct Pool {
    items: Vec<String>,
    seen: HashSet<String>,
}

impl Pool {
    fn new() -> Pool {
        Pool {
            items: Vec::new(),
            seen: HashSet::new(),
        }
    }

    fn add(&mut self, s: String) -> bool {
        if self.seen.insert(s.clone()) {
            self.items.push(s);
            true
        } else {
            false
        }
    }
}

/// Generate up to `target_count` inputs, about half of them positives.
pub fn generate(
    ast: &Ast,
    target_count: usize,
    budget: Duration,
    seed: u64,
) -> Result<InputSet, GenerateError> {
    let deadline = Instant::now() + budget;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nfa = compile(ast).ok();
    let mut positives = Pool::new();
    let mut out_of_time = false;

    match &nfa {
        Some(nfa) => {
            let walker = Walker::new(nfa);
            let want = target_count.div_ceil(2);
            let mut attempts = 0;
            while positives.items.len() < want && attempts < want * 20 {
                if Instant::now() >= deadline {
                    out_of_time = true;
                    break;
                }
                attempts += 1;
                let Some(w) = walker.walk(&mut rng) else {
                    continue;
                };
                let chars: Vec<char> = w.chars().collect();
                if pike(nfa, &chars, DESK_BUDGET).is_ok_and(|r| r.outcome.is_match()) {
                    positives.add(w);
                }
            }
        }
        None => {
            let skeleton = skeleton(ast);
            if Program::new(ast).is_ok_and(|p| {
                p.backtrack(&skeleton, DefenseConfig::all(), DESK_BUDGET)
                    .outcome
                    .is_match()
            }) {
                positives.add(skeleton);
            }
        }
    }

    let mut alphabet = literal_chars(&ast.root);
    for c in MUTATION_CHARS {
        if !alphabet.contains(&c) {
            alphabet.push(c);
        }
    }
    let mut negatives = Pool::new();
    let add_negative = |s: String, negatives: &mut Pool| {
        if !positives.seen.contains(&s) {
            negatives.add(s);
        }
    };
    let room = |n: &Pool, p: &Pool| p.items.len() + n.items.len() < target_count;
    for s in boundary_inputs(&alphabet) {
        if room(&negatives, &positives) {
            add_negative(s, &mut negatives);
        }
    }
    let mut bases = positives.items.clone();
    if bases.is_empty() {
        bases.push(skeleton(ast));
    }
    let mut attempts = 0;
    while room(&negatives, &positives) && attempts < target_count * 20 {
        if Instant::now() >= deadline {
            out_of_time = true;
            break;
        }
        attempts += 1;
        let base = bases.choose(&mut rng).unwrap();
        add_negative(mutate(base, &alphabet, &mut rng), &mut negatives);
    }

    let positives = positives.items;
    let negatives = negatives.items;
    let coverage = match &nfa {
        Some(nfa) => edge_coverage(nfa, &positives.iter().chain(&negatives).collect::<Vec<_>>()),
        None => 0.0,
    };
    let set = InputSet {
        positives,
        negatives,
        coverage,
        seed,
    };
    if out_of_time {
        Err(GenerateError::BudgetExceeded { partial: set })
    } else {
        Ok(set)
    }
}

fn boundary_inputs(alphabet: &[char]) -> Vec<String> {
    let mut out = vec![String::new()];
    out.extend(alphabet.iter().map(|c| c.to_string()));
    for &c in alphabet.iter().take(4) {
        out.push(c.to_string().repeat(64));
        out.push(format!("{}!", c.to_string().repeat(64)));
    }
    out
}

fn mutate(base: &str, alphabet: &[char], rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = base.chars().collect();
    let pick = |rng: &mut ChaCha8Rng| *alphabet.choose(rng).unwrap();
    let n = chars.len();
    match rng.gen_range(0..4) {
        0 if n > 0 => {
            let i = rng.gen_range(0..n);
            chars[i] = pick(rng);
        }
        1 if n > 0 => {
            chars.remove(rng.gen_range(0..n));
        }
        2 if n > 1 => {
            let i = rng.gen_range(0..n - 1);
            chars.swap(i, i + 1);
        }
        _ => {
            let i = rng.gen_range(0..=n);
            chars.insert(i, pick(rng));
        }
    }
    chars.into_iter().collect()
}

/// Characters written literally in the pattern, in order.
fn literal_chars(node: &Node) -> Vec<char> {
    fn walk(n: &Node, out: &mut Vec<char>) {
        let mut push = |c: char| {
            if !out.contains(&c) {
                out.push(c);
            }
        };
        match &n.kind {
            NodeKind::Literal(l) => push(l.ch),
            NodeKind::Quote(q) => q.chars().for_each(push),
            NodeKind::Class(c) => {
                if let Some(first) = class_ranges(c).first() {
                    push(first)
                }
            }
            _ => {}
        }
        for c in n.children() {
            walk(c, out);
        }
    }
    let mut out = Vec::new();
    walk(node, &mut out);
    out
}

/// One plausible matching string built straight from the tree: first
/// alternatives, minimal repetition, backreferences copied from their
/// group.
pub fn skeleton(ast: &Ast) -> String {
    fn build(n: &Node, ast: &Ast, groups: &mut Vec<Option<String>>) -> String {
        match &n.kind {
            NodeKind::Literal(l) => l.ch.to_string(),
            NodeKind::Quote(q) => q.clone(),
            NodeKind::Class(c) => class_ranges(c)
                .first()
                .map(String::from)
                .unwrap_or_default(),
            NodeKind::Dot => "a".into(),
            NodeKind::EscapeClass(e) => {
                let set = escape_set(*e);
                nice(&set)
                    .or(set.first())
                    .map(String::from)
                    .unwrap_or_default()
            }
            NodeKind::UnicodeProperty(p) => {
                let set = property_set(p);
                nice(&set)
                    .or(set.first())
                    .map(String::from)
                    .unwrap_or_default()
            }
            NodeKind::Concat(items) => items.iter().map(|i| build(i, ast, groups)).collect(),
            NodeKind::Alternation(items) => build(&items[0], ast, groups),
            NodeKind::Repeat(r) => {
                let once = build(&r.child, ast, groups);
                once.repeat(r.min.max(1) as usize)
            }
            NodeKind::Group(g) => {
                let s = build(&g.child, ast, groups);
                if let GroupKind::Capture { index, .. } = g.kind {
                    let i = index as usize;
                    if groups.len() <= i {
                        groups.resize(i + 1, None);
                    }
                    groups[i] = Some(s.clone());
                }
                s
            }
            NodeKind::Backref(b) => {
                let index = match &b.target {
                    BackrefTarget::Index(i) => *i as usize,
                    BackrefTarget::Name(name) => ast
                        .capture_names
                        .iter()
                        .position(|c| c.as_deref() == Some(name))
                        .map_or(0, |p| p + 1),
                };
                groups.get(index).cloned().flatten().unwrap_or_default()
            }
            _ => String::new(),
        }
    }
    build(&ast.root, ast, &mut Vec::new())
}

/// A printable ASCII member, if any.
fn nice(set: &CharSet) -> Option<char> {
    (' '..='~')
        .find(|&c| set.contains(c) && c.is_ascii_alphanumeric())
        .or_else(|| (' '..='~').find(|&c| set.contains(c)))
}

fn random_member(set: &CharSet, rng: &mut ChaCha8Rng) -> Option<char> {
    if rng.gen_bool(0.8) {
        let printable: Vec<char> = set
            .ranges()
            .iter()
            .filter(|(lo, _)| *lo <= '~')
            .flat_map(|&(lo, hi)| lo.max(' ')..=hi.min('~'))
            .collect();
        if let Some(&c) = printable.choose(rng) {
            return Some(c);
        }
    }
    let total = set.len();
    if total == 0 {
        return None;
    }
    let mut k = rng.gen_range(0..total);
    for &(lo, hi) in set.ranges() {
        let span = CharSet::from_ranges([(lo, hi)]).len();
        if k < span {
            let mut v = lo as u64 + k;
            if lo <= '\u{d7ff}' && v > 0xd7ff {
                v += 0x800;
            }
            return char::from_u32(v as u32);
        }
        k -= span;
    }
    None
}

/// Random walks from the start state to the accept state.
struct Walker<'a> {
    nfa: &'a Nfa,
    /// Fewest characters needed to reach the accept state.
    distance: Vec<u32>,
    max_len: usize,
}

impl<'a> Walker<'a> {
    fn new(nfa: &'a Nfa) -> Walker<'a> {
        let n = nfa.len();
        let mut preds: Vec<Vec<(StateId, u32)>> = vec![Vec::new(); n];
        for id in 0..n as StateId {
            let cost = u32::from(nfa.is_consuming(id));
            for t in nfa.transitions(id) {
                preds[t.to as usize].push((id, cost));
            }
        }
        let mut distance = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        for (id, s) in nfa.states.iter().enumerate() {
            if *s == State::Match {
                distance[id] = 0;
                queue.push_back(id as StateId);
            }
        }
        while let Some(s) = queue.pop_front() {
            let d = distance[s as usize];
            for &(p, cost) in &preds[s as usize] {
                if d + cost < distance[p as usize] {
                    distance[p as usize] = d + cost;
                    if cost == 0 {
                        queue.push_front(p);
                    } else {
                        queue.push_back(p);
                    }
                }
            }
        }
        Walker {
            nfa,
            distance,
            max_len: 4 * n,
        }
    }

    fn walk(&self, rng: &mut ChaCha8Rng) -> Option<String> {
        let nfa = self.nfa;
        let mut out: Vec<char> = Vec::new();
        let mut marks = vec![None; nfa.registers];
        let mut id = nfa.start;
        let mut idle = 0;
        loop {
            let finishing = out.len() >= self.max_len;
            idle += 1;
            if idle > 4 * nfa.len() + 8 {
                return None;
            }
            match nfa.states[id as usize] {
                State::Match => return Some(out.into_iter().collect()),
                State::Fail | State::Backref { .. } => return None,
                State::Char { next, .. } | State::Set { next, .. } => {
                    let c = random_member(&nfa.char_set(id).unwrap(), rng)?;
                    out.push(c);
                    idle = 0;
                    id = next;
                }
                State::Split { first, second } => {
                    let d = |s: StateId| self.distance[s as usize];
                    id = if finishing {
                        if d(first) <= d(second) {
                            first
                        } else {
                            second
                        }
                    } else {
                        match (d(first), d(second)) {
                            (u32::MAX, _) => second,
                            (_, u32::MAX) => first,
                            _ if rng.gen_bool(0.5) => first,
                            _ => second,
                        }
                    };
                }
                State::Mark { register, next } => {
                    marks[register as usize] = Some(out.len());
                    id = next;
                }
                State::Progress {
                    register,
                    cont,
                    exit,
                } => {
                    let consumed = marks[register as usize].is_some_and(|m| m < out.len());
                    id = if consumed { cont } else { exit };
                }
                State::Assert { assertion, next } => {
                    // Look-behind style checks are decidable now; the rest
                    // are settled by the final engine check.
                    if matches!(assertion, Assertion::StartText | Assertion::LineStart)
                        && !assertion_holds(assertion, &out, out.len())
                    {
                        return None;
                    }
                    id = next;
                }
                State::Tag { next, .. }
                | State::AtomicStart { next }
                | State::AtomicEnd { next } => id = next,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse, Dialect};

    fn gen(p: &str, n: usize, seed: u64) -> InputSet {
        generate(
            &parse(p, Dialect::Java).unwrap(),
            n,
            Duration::from_secs(10),
            seed,
        )
        .unwrap()
    }

    #[test]
    fn forced_examples() {
        let s = gen("ab", 50, 1);
        assert_eq!(s.positives, ["ab"]);
        assert!(s
            .negatives
            .iter()
            .any(|n| n == "aa" || n == "ba" || n == "b"));
        assert!(s.negatives.contains(&String::new()));
    }

    #[test]
    fn coverage_and_determinism() {
        let a = gen("(a|b)+c", 100, 7);
        assert!(a.coverage >= 0.9, "{}", a.coverage);
        assert_eq!(a, gen("(a|b)+c", 100, 7));
        assert_ne!(a.positives, gen("(a|b)+c", 100, 8).positives);
    }

    #[test]
    fn backref_patterns_use_skeletons() {
        let s = gen(r"(ab)c\1", 20, 3);
        assert_eq!(s.positives, ["abcab"]);
        assert_eq!(s.coverage, 0.0);
        assert!(!s.negatives.is_empty());
    }
}
