use crate::ast::{Ast, Node, NodeKind};
use crate::automata::{CharSet, Nfa, State, StateId};

/// Cheap checks that rule out start offsets or whole inputs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Prefilter {
    /// Characters that can begin a match; `None` when a match can be empty
    /// or start with a backreference.
    pub first: Option<CharSet>,
    /// A substring every match contains.
    pub required: Option<String>,
}

impl Prefilter {
    pub fn new(ast: &Ast, nfa: &Nfa) -> Prefilter {
        Prefilter {
            first: first_chars(nfa),
            required: required_literal(&ast.root).filter(|s| !s.is_empty()),
        }
    }

    pub fn can_start(&self, input: &[char], pos: usize) -> bool {
        match &self.first {
            None => true,
            Some(set) => input.get(pos).is_some_and(|&c| set.contains(c)),
        }
    }

    pub fn admits(&self, input: &[char]) -> bool {
        let Some(lit) = &self.required else {
            return true;
        };
        let lit: Vec<char> = lit.chars().collect();
        input.windows(lit.len()).any(|w| w == lit.as_slice())
    }
}

fn first_chars(nfa: &Nfa) -> Option<CharSet> {
    let mut set = CharSet::empty();
    let mut seen = vec![false; nfa.len()];
    let mut stack: Vec<StateId> = vec![nfa.start];
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut seen[id as usize], true) {
            continue;
        }
        match nfa.states[id as usize] {
            State::Char { .. } | State::Set { .. } => set = set.union(&nfa.char_set(id).unwrap()),
            State::Match | State::Backref { .. } => return None,
            State::Split { first, second }
            | State::Progress {
                cont: first,
                exit: second,
                ..
            } => {
                stack.push(first);
                stack.push(second);
            }
            State::Tag { next, .. }
            | State::Assert { next, .. }
            | State::Mark { next, .. }
            | State::AtomicStart { next }
            | State::AtomicEnd { next } => stack.push(next),
            State::Fail => {}
        }
    }
    Some(set)
}

/// The one string `node` can match, if it is fixed.
fn exact(node: &Node) -> Option<String> {
    match &node.kind {
        NodeKind::Empty | NodeKind::Anchor(_) | NodeKind::MatchReset | NodeKind::Lookaround(_) => {
            Some(String::new())
        }
        NodeKind::Literal(l) => Some(l.ch.to_string()),
        NodeKind::Quote(q) => Some(q.clone()),
        NodeKind::Concat(items) => items.iter().map(exact).collect(),
        NodeKind::Group(g) => exact(&g.child),
        NodeKind::Repeat(r) if Some(r.min) == r.max && r.min <= 64 => {
            exact(&r.child).map(|s| s.repeat(r.min as usize))
        }
        _ => None,
    }
}

/// The longest literal found on every path through `node`.
fn required_literal(node: &Node) -> Option<String> {
    if let Some(s) = exact(node) {
        return Some(s);
    }
    let longest = |a: Option<String>, b: Option<String>| match (a, b) {
        (Some(a), Some(b)) => Some(if b.chars().count() > a.chars().count() {
            b
        } else {
            a
        }),
        (a, b) => a.or(b),
    };
    match &node.kind {
        NodeKind::Concat(items) => {
            let mut best = None;
            let mut run = String::new();
            for item in items {
                match exact(item) {
                    Some(s) => run.push_str(&s),
                    None => {
                        best = longest(best, Some(std::mem::take(&mut run)));
                        best = longest(best, required_literal(item));
                    }
                }
            }
            longest(best, Some(run))
        }
        NodeKind::Group(g) => required_literal(&g.child),
        NodeKind::Repeat(r) if r.min >= 1 => required_literal(&r.child),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse, Dialect};
    use crate::automata::compile_program;

    fn pf(p: &str) -> Prefilter {
        let ast = parse(p, Dialect::Java).unwrap();
        Prefilter::new(&ast, &compile_program(&ast).unwrap())
    }

    #[test]
    fn literals() {
        assert_eq!(pf("x*abc[de]+fg").required.as_deref(), Some("abc"));
        assert_eq!(pf("(ab){2}c|d").required, None);
        assert_eq!(pf("(ab){2}c").required.as_deref(), Some("ababc"));
        assert_eq!(pf("a^b").required.as_deref(), Some("ab"));
        assert_eq!(pf("a*").required, None);
    }

    #[test]
    fn first_sets() {
        let p = pf("a?[bc]");
        let first = p.first.unwrap();
        assert!(first.contains('a') && first.contains('c') && !first.contains('d'));
        assert_eq!(pf("a*").first, None);
        assert_eq!(pf(r"(a)?\1b").first, None);
    }
}
