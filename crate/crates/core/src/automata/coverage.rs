use std::collections::HashSet;

use super::nfa::Nfa;
use crate::engines::{pike_traced, DEFAULT_BUDGET};

/// Fraction of character edges traversed by the Pike VM over `inputs`.
///
/// Tag and other epsilon edges are not counted. An automaton without
/// character edges is fully covered by any non-empty input list.
pub fn edge_coverage<S: AsRef<str>>(nfa: &Nfa, inputs: &[S]) -> f64 {
    if inputs.is_empty() {
        return 0.0;
    }
    let total = nfa.char_states().count();
    if total == 0 {
        return 1.0;
    }
    let mut seen = HashSet::new();
    for input in inputs {
        let chars: Vec<char> = input.as_ref().chars().collect();
        let _ = pike_traced(nfa, &chars, DEFAULT_BUDGET, &mut |id| {
            seen.insert(id);
        });
    }
    seen.len() as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse, Dialect};
    use crate::automata::compile;

    fn cov(p: &str, inputs: &[&str]) -> f64 {
        edge_coverage(&compile(&parse(p, Dialect::Java).unwrap()).unwrap(), inputs)
    }

    #[test]
    fn examples() {
        assert_eq!(cov("ab", &["ab"]), 1.0);
        assert_eq!(cov("a|b", &["a"]), 0.5);
        assert_eq!(cov("a|b", &[]), 0.0);
        assert_eq!(cov("(a|b)+c", &["ac", "bbc"]), 0.8);
        assert_eq!(cov("(a|b)+c", &["ac", "babc"]), 1.0);
    }
}
