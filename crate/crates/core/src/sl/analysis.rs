//! Ambiguity analysis on the epsilon-free position automaton.
//!
//! A state with two different loops on the same word makes a backtracker
//! try exponentially many paths (EDA); two distinct looping states joined by
//! a path on that same word give polynomially many (IDA).

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::time::Instant;

use crate::automata::{CharSet, Nfa, State, StateId};

/// Why an analysis gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exhausted {
    Time,
    Memory,
}

/// Limits for one analysis run.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub deadline: Instant,
    pub max_nodes: usize,
}

/// Position automaton: state 0 is the initial state, every other state is
/// a consuming NFA state, entered by reading a character of its set.
#[derive(Debug, Clone)]
pub struct Positions {
    pub sets: Vec<CharSet>,
    /// `(target, multiplicity)`; multiplicity 2 means at least two distinct
    /// epsilon paths.
    pub edges: Vec<Vec<(usize, u8)>>,
    pub accepting: Vec<bool>,
    /// Characters named in the pattern, in order of first appearance.
    pub alphabet: Vec<char>,
}

impl Positions {
    pub fn new(nfa: &Nfa) -> Positions {
        let mut index: HashMap<StateId, usize> = HashMap::new();
        let mut origins = vec![nfa.start];
        let mut sets = vec![CharSet::empty()];
        let mut alphabet = Vec::new();
        for id in nfa.char_states() {
            index.insert(id, sets.len());
            let set = nfa.char_set(id).unwrap();
            if let [(lo, hi)] = set.ranges() {
                if lo == hi && !alphabet.contains(lo) {
                    alphabet.push(*lo);
                }
            }
            sets.push(set);
            origins.push(match nfa.states[id as usize] {
                State::Char { next, .. } | State::Set { next, .. } => next,
                _ => unreachable!(),
            });
        }
        let mut counter = PathCounter {
            nfa,
            memo: HashMap::new(),
        };
        let mut edges = Vec::with_capacity(origins.len());
        let mut accepting = Vec::with_capacity(origins.len());
        for &origin in &origins {
            let reach = counter.count(origin, &BTreeSet::new());
            let mut out: Vec<(usize, u8)> = Vec::new();
            let mut accept = false;
            for (&target, &n) in &reach {
                match nfa.states[target as usize] {
                    State::Match => accept = true,
                    _ => out.push((index[&target], n)),
                }
            }
            out.sort_unstable();
            edges.push(out);
            accepting.push(accept);
        }
        Positions {
            sets,
            edges,
            accepting,
            alphabet,
        }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Characters that can be read right after state `q`.
    pub fn follow(&self, q: usize) -> CharSet {
        self.edges[q]
            .iter()
            .fold(CharSet::empty(), |acc, &(t, _)| acc.union(&self.sets[t]))
    }

    /// Pick a representative character, preferring the pattern's own.
    pub fn pick(&self, set: &CharSet) -> Option<char> {
        self.alphabet
            .iter()
            .copied()
            .chain('a'..='z')
            .chain('0'..='9')
            .chain('A'..='Z')
            .chain(' '..='~')
            .find(|&c| set.contains(c))
            .or_else(|| set.first())
    }

    /// Shortest word leading from the initial state to `q`.
    pub fn word_to(&self, q: usize) -> Option<String> {
        let mut prev: Vec<Option<usize>> = vec![None; self.len()];
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(s) = queue.pop_front() {
            if s == q {
                let mut word = Vec::new();
                let mut at = q;
                while let Some(p) = prev[at] {
                    word.push(self.pick(&self.sets[at])?);
                    at = p;
                }
                word.reverse();
                return Some(word.into_iter().collect());
            }
            for &(t, _) in &self.edges[s] {
                if !std::mem::replace(&mut seen[t], true) {
                    prev[t] = Some(s);
                    queue.push_back(t);
                }
            }
        }
        None
    }

    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for &(t, _) in &self.edges[s] {
                if !std::mem::replace(&mut seen[t], true) {
                    stack.push(t);
                }
            }
        }
        seen
    }
}

/// Counts epsilon paths (capped at 2) from a state to each consuming or
/// accepting state. `marks` holds the loop registers set on the current
/// path, which decide the branch a progress check takes.
struct PathCounter<'a> {
    nfa: &'a Nfa,
    memo: HashMap<(StateId, BTreeSet<u32>), HashMap<StateId, u8>>,
}

impl PathCounter<'_> {
    fn count(&mut self, id: StateId, marks: &BTreeSet<u32>) -> HashMap<StateId, u8> {
        let key = (id, marks.clone());
        if let Some(m) = self.memo.get(&key) {
            return m.clone();
        }
        let mut out: HashMap<StateId, u8> = HashMap::new();
        let mut add = |m: HashMap<StateId, u8>| {
            for (k, v) in m {
                let e = out.entry(k).or_insert(0);
                *e = (*e + v).min(2);
            }
        };
        match self.nfa.states[id as usize] {
            State::Char { .. } | State::Set { .. } | State::Match => {
                add(HashMap::from([(id, 1)]));
            }
            State::Split { first, second } => {
                add(self.count(first, marks));
                add(self.count(second, marks));
            }
            State::Progress {
                register,
                cont,
                exit,
            } => {
                let to = if marks.contains(&register) {
                    exit
                } else {
                    cont
                };
                add(self.count(to, marks));
            }
            State::Mark { register, next } => {
                let mut m = marks.clone();
                m.insert(register);
                add(self.count(next, &m));
            }
            State::Tag { next, .. }
            | State::Assert { next, .. }
            | State::AtomicStart { next }
            | State::AtomicEnd { next } => add(self.count(next, marks)),
            State::Backref { .. } | State::Fail => {}
        }
        self.memo.insert(key, out.clone());
        out
    }
}

/// A loop that can be pumped: `prefix` reaches it, `pump` goes around it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub prefix: String,
    pub pump: String,
    /// The state whose successors decide which suffix causes a mismatch.
    pub state: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ambiguity {
    None,
    Polynomial(Witness),
    Exponential(Witness),
}

struct Clock {
    limits: Limits,
    ticks: usize,
}

impl Clock {
    fn tick(&mut self, nodes: usize) -> Result<(), Exhausted> {
        if nodes > self.limits.max_nodes {
            return Err(Exhausted::Memory);
        }
        self.ticks += 1;
        if self.ticks.is_multiple_of(1024) && Instant::now() >= self.limits.deadline {
            return Err(Exhausted::Time);
        }
        Ok(())
    }
}

pub fn analyze(pos: &Positions, limits: Limits) -> Result<Ambiguity, Exhausted> {
    let mut clock = Clock { limits, ticks: 0 };
    if let Some(w) = exponential(pos, &mut clock)? {
        return Ok(Ambiguity::Exponential(w));
    }
    if let Some(w) = polynomial(pos, &mut clock)? {
        return Ok(Ambiguity::Polynomial(w));
    }
    Ok(Ambiguity::None)
}

/// Pairs of states stepping on a common character.
fn pair_edges(pos: &Positions, (p, q): (usize, usize)) -> Vec<((usize, usize), bool)> {
    let mut out = Vec::new();
    for &(a, ma) in &pos.edges[p] {
        for &(b, mb) in &pos.edges[q] {
            if !pos.sets[a].intersects(&pos.sets[b]) {
                continue;
            }
            // Leaving the diagonal, or following one of two parallel
            // epsilon routes, makes the two runs differ.
            let branching = p == q && (a != b || ma.min(mb) > 1);
            out.push(((a, b), branching));
        }
    }
    out
}

fn exponential(pos: &Positions, clock: &mut Clock) -> Result<Option<Witness>, Exhausted> {
    // Explore the pair graph from (0, 0).
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    let mut adj: Vec<Vec<(usize, bool)>> = Vec::new();
    ids.insert((0, 0), 0);
    nodes.push((0, 0));
    let mut i = 0;
    while i < nodes.len() {
        clock.tick(nodes.len())?;
        let mut out = Vec::new();
        for (n, branching) in pair_edges(pos, nodes[i]) {
            let id = *ids.entry(n).or_insert_with(|| {
                nodes.push(n);
                nodes.len() - 1
            });
            out.push((id, branching));
        }
        adj.push(out);
        i += 1;
    }
    let comp = scc(&adj);
    for (v, &(p, q)) in nodes.iter().enumerate() {
        if p != q || p == 0 {
            continue;
        }
        let c = comp[v];
        let ambiguous = nodes
            .iter()
            .enumerate()
            .any(|(u, &(a, b))| comp[u] == c && a != b)
            || nodes
                .iter()
                .enumerate()
                .any(|(u, _)| comp[u] == c && adj[u].iter().any(|&(t, br)| br && comp[t] == c));
        if !ambiguous {
            continue;
        }
        let Some(pump) = branching_cycle(pos, &nodes, &adj, &comp, v, clock)? else {
            continue;
        };
        let Some(prefix) = pos.word_to(p) else {
            continue;
        };
        return Ok(Some(Witness {
            prefix,
            pump,
            state: p,
        }));
    }
    Ok(None)
}

/// Shortest cycle from diagonal node `v` back to itself that branches at
/// least once, spelled out as a word.
fn branching_cycle(
    pos: &Positions,
    nodes: &[(usize, usize)],
    adj: &[Vec<(usize, bool)>],
    comp: &[usize],
    v: usize,
    clock: &mut Clock,
) -> Result<Option<String>, Exhausted> {
    let c = comp[v];
    let mut prev: HashMap<(usize, bool), (usize, bool)> = HashMap::new();
    let mut queue = VecDeque::from([(v, false)]);
    while let Some((u, br)) = queue.pop_front() {
        clock.tick(prev.len())?;
        for &(t, b) in &adj[u] {
            if comp[t] != c {
                continue;
            }
            let (x, y) = nodes[t];
            let next = (t, br || b || x != y);
            if prev.contains_key(&next) || next == (v, false) {
                continue;
            }
            prev.insert(next, (u, br));
            if next == (v, true) {
                let mut word = Vec::new();
                let mut at = next;
                while at != (v, false) {
                    let (x, y) = nodes[at.0];
                    let set = pos.sets[x].intersect(&pos.sets[y]);
                    word.push(pos.pick(&set).unwrap());
                    at = prev[&at];
                }
                word.reverse();
                return Ok(Some(word.into_iter().collect()));
            }
            queue.push_back(next);
        }
    }
    Ok(None)
}

fn polynomial(pos: &Positions, clock: &mut Clock) -> Result<Option<Witness>, Exhausted> {
    let n = pos.len();
    let reachable = pos.reachable();
    let single: Vec<Vec<usize>> = pos
        .edges
        .iter()
        .map(|e| e.iter().map(|&(t, _)| t).collect())
        .collect();
    let comp = scc(&single
        .iter()
        .map(|e| e.iter().map(|&t| (t, false)).collect())
        .collect::<Vec<_>>());
    let looping: Vec<bool> = (0..n)
        .map(|q| {
            single
                .iter()
                .enumerate()
                .any(|(s, e)| comp[s] == comp[q] && e.iter().any(|&t| comp[t] == comp[q]))
        })
        .collect();
    let mut candidates = Vec::new();
    for p in (1..n).filter(|&p| reachable[p] && looping[p]) {
        // States reachable from p.
        let mut seen = vec![false; n];
        let mut stack = vec![p];
        while let Some(s) = stack.pop() {
            for &t in &single[s] {
                if !std::mem::replace(&mut seen[t], true) {
                    stack.push(t);
                }
            }
        }
        for q in (1..n).filter(|&q| q != p && seen[q] && looping[q] && comp[q] != comp[p]) {
            candidates.push((p, q));
        }
    }
    for (p, q) in candidates {
        if let Some(pump) = triple_path(pos, p, q, clock)? {
            if let Some(prefix) = pos.word_to(p) {
                return Ok(Some(Witness {
                    prefix,
                    pump,
                    state: q,
                }));
            }
        }
    }
    Ok(None)
}

/// A word `v` with `p -v-> p`, `p -v-> q` and `q -v-> q`.
fn triple_path(
    pos: &Positions,
    p: usize,
    q: usize,
    clock: &mut Clock,
) -> Result<Option<String>, Exhausted> {
    type Node = (usize, usize, usize);
    let start: Node = (p, p, q);
    let goal: Node = (p, q, q);
    let mut prev: HashMap<Node, (Node, char)> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    while let Some((x, y, z)) = queue.pop_front() {
        clock.tick(prev.len())?;
        for &(a, _) in &pos.edges[x] {
            for &(b, _) in &pos.edges[y] {
                let ab = pos.sets[a].intersect(&pos.sets[b]);
                if ab.is_empty() {
                    continue;
                }
                for &(c, _) in &pos.edges[z] {
                    let abc = ab.intersect(&pos.sets[c]);
                    if abc.is_empty() {
                        continue;
                    }
                    let next = (a, b, c);
                    if next == start || prev.contains_key(&next) {
                        continue;
                    }
                    prev.insert(next, ((x, y, z), pos.pick(&abc).unwrap()));
                    if next == goal {
                        let mut word = Vec::new();
                        let mut at = next;
                        while at != start {
                            let (from, ch) = prev[&at];
                            word.push(ch);
                            at = from;
                        }
                        word.reverse();
                        return Ok(Some(word.into_iter().collect()));
                    }
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(None)
}

/// Strongly connected components (iterative Tarjan); returns a component id
/// per node.
fn scc(adj: &[Vec<(usize, bool)>]) -> Vec<usize> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut i)) = work.last_mut() {
            if *i == 0 && index[v] == usize::MAX {
                index[v] = counter;
                low[v] = counter;
                counter += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&(w, _)) = adj[v].get(*i) {
                *i += 1;
                if index[w] == usize::MAX {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp[w] = ncomp;
                    if w == v {
                        break;
                    }
                }
                ncomp += 1;
            }
        }
    }
    comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{anchor_variant, parse, Dialect};
    use crate::automata::compile;
    use std::time::Duration;

    fn limits() -> Limits {
        Limits {
            deadline: Instant::now() + Duration::from_secs(10),
            max_nodes: 1_000_000,
        }
    }

    fn run(p: &str, anchored: bool) -> Ambiguity {
        let mut ast = parse(p, Dialect::Java).unwrap();
        if anchored {
            ast = anchor_variant(&ast);
        }
        analyze(&Positions::new(&compile(&ast).unwrap()), limits()).unwrap()
    }

    #[test]
    fn multiplicities() {
        let pos = Positions::new(&compile(&parse("(a*)*b", Dialect::Java).unwrap()).unwrap());
        let a = (1..pos.len()).find(|&q| pos.sets[q].contains('a')).unwrap();
        let b = (1..pos.len()).find(|&q| pos.sets[q].contains('b')).unwrap();
        // the inner 'a' reaches itself directly and through the outer loop
        assert!(pos.edges[a].contains(&(a, 2)));
        // skipping the outer loop, or one empty pass through it
        assert!(pos.edges[0].contains(&(b, 2)));
        assert!(pos.accepting[b] && !pos.accepting[a]);
    }

    #[test]
    fn classifications() {
        assert!(matches!(run("(a+)+$", false), Ambiguity::Exponential(_)));
        assert!(matches!(run("(a|a)*$", false), Ambiguity::Exponential(_)));
        assert!(matches!(run("(a*)*b", false), Ambiguity::Exponential(_)));
        assert_eq!(run("a+$", false), Ambiguity::None);
        assert!(matches!(run("a+$", true), Ambiguity::Polynomial(_)));
        assert!(matches!(run("a*a*$", false), Ambiguity::Polynomial(_)));
        assert_eq!(run("abc", false), Ambiguity::None);
        assert_eq!(run("(ab)*c", false), Ambiguity::None);
    }

    #[test]
    fn witnesses() {
        let Ambiguity::Exponential(w) = run("(a+)+$", false) else {
            panic!()
        };
        assert!(w.pump.chars().all(|c| c == 'a'));
        let Ambiguity::Polynomial(w) = run("a+$", true) else {
            panic!()
        };
        assert_eq!(w.pump, "aa");
    }
}
