use std::collections::HashSet;
use std::time::{Duration, Instant};

use super::{EngineError, MatchResult, Outcome, CHECK_INTERVAL};
use crate::automata::{assertion_holds, Nfa, State, StateId};

/// Threads at one input position, in priority order, deduplicated by state.
struct Threads {
    dense: Vec<StateId>,
    sparse: Vec<u32>,
    /// Epsilon states visited while some loop register is marked at the
    /// current position, keyed by those registers. A progress check behaves
    /// differently on such a visit, so plain state dedup would lose paths.
    marked: HashSet<(StateId, Vec<u64>)>,
    /// `width` slots per state, meaningful for consuming and match states.
    slots: Vec<Option<usize>>,
    width: usize,
}

impl Threads {
    fn new(states: usize, width: usize) -> Threads {
        Threads {
            dense: Vec::with_capacity(states),
            sparse: vec![0; states],
            marked: HashSet::new(),
            slots: vec![None; states * width],
            width,
        }
    }

    fn contains(&self, id: StateId) -> bool {
        let i = self.sparse[id as usize] as usize;
        i < self.dense.len() && self.dense[i] == id
    }

    fn insert(&mut self, id: StateId) {
        self.sparse[id as usize] = self.dense.len() as u32;
        self.dense.push(id);
    }

    fn clear(&mut self) {
        self.dense.clear();
        self.marked.clear();
    }

    fn slots(&self, id: StateId) -> &[Option<usize>] {
        let at = id as usize * self.width;
        &self.slots[at..at + self.width]
    }
}

enum Frame {
    Explore(StateId),
    Restore(usize, Option<usize>),
}

struct Vm<'a> {
    nfa: &'a Nfa,
    input: &'a [char],
    deadline: Instant,
    steps: u64,
    stack: Vec<Frame>,
}

/// Leftmost-first match by lockstep simulation of prioritized threads.
pub fn pike(nfa: &Nfa, input: &[char], budget: Duration) -> Result<MatchResult, EngineError> {
    pike_traced(nfa, input, budget, &mut |_| {})
}

/// Like [`pike`], reporting every consuming state that consumed a character.
pub fn pike_traced(
    nfa: &Nfa,
    input: &[char],
    budget: Duration,
    trace: &mut dyn FnMut(StateId),
) -> Result<MatchResult, EngineError> {
    if nfa.has_backrefs {
        return Err(EngineError::Unsupported("backreference"));
    }
    if nfa.has_atomic {
        return Err(EngineError::Unsupported("atomic group"));
    }
    let started = Instant::now();
    let width = nfa.slot_count() + nfa.registers;
    let mut vm = Vm {
        nfa,
        input,
        deadline: started + budget,
        steps: 0,
        stack: Vec::new(),
    };
    let mut current = Threads::new(nfa.len(), width);
    let mut next = Threads::new(nfa.len(), width);
    let mut scratch = vec![None; width];
    let mut matched: Option<Vec<Option<usize>>> = None;
    let result = |vm: &Vm, matched: Option<&Vec<Option<usize>>>, stop| {
        MatchResult::from_slots(
            matched.map(|m| &m[..nfa.slot_count()]),
            nfa.capture_count,
            stop,
            vm.steps,
            0,
            started.elapsed(),
        )
    };
    for pos in 0..=input.len() {
        if matched.is_none() && (pos == 0 || !nfa.anchored) {
            scratch.iter_mut().for_each(|s| *s = None);
            if vm.add(&mut current, nfa.start, pos, &mut scratch).is_err() {
                return Ok(result(&vm, None, Some(Outcome::Timeout)));
            }
        }
        if current.dense.is_empty() {
            break;
        }
        for i in 0..current.dense.len() {
            let id = current.dense[i];
            if nfa.states[id as usize] == State::Match {
                matched = Some(current.slots(id).to_vec());
                break;
            }
            let Some(to) = input.get(pos).and_then(|&c| nfa.consumes(id, c)) else {
                continue;
            };
            trace(id);
            scratch.copy_from_slice(current.slots(id));
            if vm.add(&mut next, to, pos + 1, &mut scratch).is_err() {
                return Ok(result(&vm, None, Some(Outcome::Timeout)));
            }
        }
        std::mem::swap(&mut current, &mut next);
        next.clear();
    }
    Ok(result(&vm, matched.as_ref(), None))
}

/// Bitmask of the registers marked at `pos`, or `None` if there are none.
fn marked_registers(registers: &[Option<usize>], pos: usize) -> Option<Vec<u64>> {
    let mut mask: Option<Vec<u64>> = None;
    for (r, v) in registers.iter().enumerate() {
        if *v == Some(pos) {
            let m = mask.get_or_insert_with(|| vec![0; registers.len().div_ceil(64)]);
            m[r / 64] |= 1 << (r % 64);
        }
    }
    mask
}

impl Vm<'_> {
    /// Add `id` and its epsilon successors at `pos`, in priority order.
    /// `slots` is restored before returning.
    fn add(
        &mut self,
        list: &mut Threads,
        id: StateId,
        pos: usize,
        slots: &mut [Option<usize>],
    ) -> Result<(), ()> {
        let nfa = self.nfa;
        let slot_count = nfa.slot_count();
        self.stack.push(Frame::Explore(id));
        while let Some(frame) = self.stack.pop() {
            let id = match frame {
                Frame::Restore(i, v) => {
                    slots[i] = v;
                    continue;
                }
                Frame::Explore(id) => id,
            };
            let consuming = matches!(
                nfa.states[id as usize],
                State::Char { .. } | State::Set { .. } | State::Match
            );
            let mask = if consuming {
                None
            } else {
                marked_registers(&slots[slot_count..], pos)
            };
            match mask {
                Some(mask) => {
                    if !list.marked.insert((id, mask)) {
                        continue;
                    }
                }
                None => {
                    if list.contains(id) {
                        continue;
                    }
                    list.insert(id);
                }
            }
            self.steps += 1;
            if self.steps.is_multiple_of(CHECK_INTERVAL) && Instant::now() >= self.deadline {
                self.stack.clear();
                return Err(());
            }
            match nfa.states[id as usize] {
                State::Char { .. } | State::Set { .. } | State::Match => {
                    let at = id as usize * list.width;
                    list.slots[at..at + list.width].copy_from_slice(slots);
                }
                State::Split { first, second } => {
                    self.stack.push(Frame::Explore(second));
                    self.stack.push(Frame::Explore(first));
                }
                State::Tag { slot, next } => {
                    let i = slot as usize;
                    self.stack.push(Frame::Restore(i, slots[i]));
                    slots[i] = Some(pos);
                    self.stack.push(Frame::Explore(next));
                }
                State::Mark { register, next } => {
                    let i = slot_count + register as usize;
                    self.stack.push(Frame::Restore(i, slots[i]));
                    slots[i] = Some(pos);
                    self.stack.push(Frame::Explore(next));
                }
                State::Progress {
                    register,
                    cont,
                    exit,
                } => {
                    let mark = slots[slot_count + register as usize];
                    let to = if mark.is_some_and(|m| m < pos) {
                        cont
                    } else {
                        exit
                    };
                    self.stack.push(Frame::Explore(to));
                }
                State::Assert { assertion, next } => {
                    if assertion_holds(assertion, self.input, pos) {
                        self.stack.push(Frame::Explore(next));
                    }
                }
                State::AtomicStart { next } | State::AtomicEnd { next } => {
                    self.stack.push(Frame::Explore(next))
                }
                State::Backref { .. } | State::Fail => {}
            }
        }
        Ok(())
    }
}
