use std::collections::HashSet;
use std::time::{Duration, Instant};

use super::{DefenseConfig, MatchResult, Outcome, Prefilter, CHECK_INTERVAL};
use crate::automata::{assertion_holds, Nfa, State, StateId};

/// Bitsets up to this many bits; larger memo tables fall back to a hash set.
const MEMO_BITSET_LIMIT: usize = 1 << 28;

enum Job {
    Explore(StateId, usize),
    Restore(u32, Option<usize>),
    /// Start of an atomic group still in progress.
    Barrier,
}

/// Failed (consuming state, offset) pairs.
///
/// After a consuming state every loop mark lies strictly behind the current
/// offset, so the rest of the search from such a pair does not depend on
/// the path taken to reach it. That makes the pair a sound cache key, kept
/// across start offsets. Backreferences and atomic groups break this and
/// turn the cache off.
enum Memo {
    Bits {
        bits: Vec<u64>,
        index: Vec<u32>,
        width: usize,
    },
    Set(HashSet<(StateId, usize)>),
}

impl Memo {
    fn new(nfa: &Nfa, input_len: usize) -> Memo {
        let mut index = vec![u32::MAX; nfa.len()];
        let mut count = 0usize;
        for id in nfa.char_states() {
            index[id as usize] = count as u32;
            count += 1;
        }
        let width = input_len + 1;
        match count.checked_mul(width) {
            Some(n) if n <= MEMO_BITSET_LIMIT => Memo::Bits {
                bits: vec![0; n.div_ceil(64)],
                index,
                width,
            },
            _ => Memo::Set(HashSet::new()),
        }
    }

    /// Record a visit; false if the pair was seen before.
    fn insert(&mut self, id: StateId, pos: usize) -> bool {
        match self {
            Memo::Bits { bits, index, width } => {
                let k = index[id as usize] as usize * *width + pos;
                let (w, b) = (k / 64, 1u64 << (k % 64));
                let fresh = bits[w] & b == 0;
                bits[w] |= b;
                fresh
            }
            Memo::Set(set) => set.insert((id, pos)),
        }
    }
}

enum Stop {
    Timeout,
    Counter,
}

struct Search<'a> {
    nfa: &'a Nfa,
    input: &'a [char],
    limit: Option<u64>,
    deadline: Instant,
    steps: u64,
    retries: u64,
    stack: Vec<Job>,
    /// Capture slots followed by loop registers.
    slots: Vec<Option<usize>>,
    memo: Option<Memo>,
}

/// Leftmost match in greedy depth-first order.
pub fn backtrack(
    nfa: &Nfa,
    prefilter: &Prefilter,
    input: &[char],
    defenses: DefenseConfig,
    budget: Duration,
) -> MatchResult {
    let started = Instant::now();
    let memoize = defenses.memoize && !nfa.has_backrefs && !nfa.has_atomic;
    let mut s = Search {
        nfa,
        input,
        limit: defenses.step_limit.map(|n| n.get()),
        deadline: started + budget,
        steps: 0,
        retries: 0,
        stack: Vec::new(),
        slots: vec![None; nfa.slot_count() + nfa.registers],
        memo: memoize.then(|| Memo::new(nfa, input.len())),
    };
    let finish = |s: &Search, found: bool, stop: Option<Outcome>| {
        MatchResult::from_slots(
            found.then_some(&s.slots[..nfa.slot_count()]),
            nfa.capture_count,
            stop,
            s.steps,
            s.retries,
            started.elapsed(),
        )
    };
    if defenses.offset_pruning && !prefilter.admits(input) {
        return finish(&s, false, None);
    }
    let last = if nfa.anchored { 0 } else { input.len() };
    for start in 0..=last {
        if defenses.offset_pruning && !prefilter.can_start(input, start) {
            continue;
        }
        match s.run(start) {
            Ok(true) => return finish(&s, true, None),
            Ok(false) => {}
            Err(Stop::Timeout) => return finish(&s, false, Some(Outcome::Timeout)),
            Err(Stop::Counter) => return finish(&s, false, Some(Outcome::AbortedByCounter)),
        }
    }
    finish(&s, false, None)
}

impl Search<'_> {
    fn run(&mut self, start: usize) -> Result<bool, Stop> {
        self.stack.clear();
        self.slots.iter_mut().for_each(|s| *s = None);
        self.stack.push(Job::Explore(self.nfa.start, start));
        let mut first = true;
        while let Some(job) = self.stack.pop() {
            match job {
                Job::Restore(i, v) => self.slots[i as usize] = v,
                Job::Barrier => {}
                Job::Explore(id, pos) => {
                    if !std::mem::replace(&mut first, false) {
                        self.retries += 1;
                        if self.limit.is_some_and(|l| self.retries > l) {
                            return Err(Stop::Counter);
                        }
                    }
                    if self.explore(id, pos)? {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }

    fn set(&mut self, i: usize, v: Option<usize>) {
        self.stack.push(Job::Restore(i as u32, self.slots[i]));
        self.slots[i] = v;
    }

    /// Follow the preferred path from `id`, leaving alternatives on the
    /// stack.
    fn explore(&mut self, mut id: StateId, mut pos: usize) -> Result<bool, Stop> {
        let nfa = self.nfa;
        let input = self.input;
        loop {
            self.steps += 1;
            if self.steps.is_multiple_of(CHECK_INTERVAL) && Instant::now() >= self.deadline {
                return Err(Stop::Timeout);
            }
            match nfa.states[id as usize] {
                State::Char { .. } | State::Set { .. } => {
                    if let Some(memo) = &mut self.memo {
                        if !memo.insert(id, pos) {
                            return Ok(false);
                        }
                    }
                    match input.get(pos).and_then(|&c| nfa.consumes(id, c)) {
                        Some(next) => {
                            id = next;
                            pos += 1;
                        }
                        None => return Ok(false),
                    }
                }
                State::Split { first, second } => {
                    self.stack.push(Job::Explore(second, pos));
                    id = first;
                }
                State::Tag { slot, next } => {
                    self.set(slot as usize, Some(pos));
                    id = next;
                }
                State::Mark { register, next } => {
                    self.set(nfa.slot_count() + register as usize, Some(pos));
                    id = next;
                }
                State::Progress {
                    register,
                    cont,
                    exit,
                } => {
                    let mark = self.slots[nfa.slot_count() + register as usize];
                    id = if mark.is_some_and(|m| m < pos) {
                        cont
                    } else {
                        exit
                    };
                }
                State::Assert { assertion, next } => {
                    if !assertion_holds(assertion, input, pos) {
                        return Ok(false);
                    }
                    id = next;
                }
                State::Backref { group, next } => {
                    let g = group as usize;
                    let (Some(a), Some(b)) = (self.slots[2 * g], self.slots[2 * g + 1]) else {
                        return Ok(false);
                    };
                    let len = b.saturating_sub(a);
                    if pos + len > input.len() || input[a..a + len] != input[pos..pos + len] {
                        return Ok(false);
                    }
                    pos += len;
                    id = next;
                }
                State::AtomicStart { next } => {
                    self.stack.push(Job::Barrier);
                    id = next;
                }
                State::AtomicEnd { next } => {
                    // Drop the group's pending alternatives but keep the undo
                    // records so later backtracking still restores captures.
                    let at = self
                        .stack
                        .iter()
                        .rposition(|j| matches!(j, Job::Barrier))
                        .expect("atomic end without start");
                    let kept: Vec<Job> = self
                        .stack
                        .drain(at..)
                        .filter(|j| matches!(j, Job::Restore(..)))
                        .collect();
                    self.stack.extend(kept);
                    id = next;
                }
                State::Match => return Ok(true),
                State::Fail => return Ok(false),
            }
        }
    }
}
