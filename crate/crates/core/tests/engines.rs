use proptest::prelude::*;
use regexpassport::ast::{parse, Dialect};
use regexpassport::automata::{compile, subset_construct_mode, DfaError, MatchMode, Nfa, State};
use regexpassport::engines::{pike, DefenseConfig, MatchResult, Outcome, Program, DESK_BUDGET};

/// Small backreference-free patterns over {a, b}.
fn pattern() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        4 => Just("a".to_string()),
        3 => Just("b".to_string()),
        1 => Just("[ab]".to_string()),
        1 => Just("[^a]".to_string()),
        1 => Just(".".to_string()),
        1 => Just("^".to_string()),
        1 => Just("$".to_string()),
        1 => Just(r"\b".to_string()),
    ];
    leaf.prop_recursive(4, 16, 3, |inner| {
        prop_oneof![
            3 => proptest::collection::vec(inner.clone(), 2..4).prop_map(|v| v.concat()),
            2 => (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("(?:{a}|{b})")),
            2 => (inner.clone(), 0..8usize).prop_map(|(a, q)| {
                let q = ["*", "+", "?", "*?", "+?", "??", "{1,2}", "{0,2}?"][q];
                format!("(?:{a}){q}")
            }),
            2 => inner.prop_map(|a| format!("({a})")),
        ]
    })
}

fn input() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just('a'), Just('b'), Just(' ')], 0..=12)
        .prop_map(|v| v.into_iter().collect())
}

fn program(p: &str) -> Program {
    Program::new(&parse(p, Dialect::Java).unwrap()).unwrap()
}

fn key(r: &MatchResult) -> (Outcome, Vec<Option<regexpassport::ast::Span>>) {
    (r.outcome, r.captures.clone())
}

fn strip_tags(nfa: &Nfa) -> Nfa {
    let mut out = nfa.clone();
    for s in &mut out.states {
        if let State::Tag { next, .. } = *s {
            *s = State::Split {
                first: next,
                second: next,
            };
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn backtracker_and_pike_agree(p in pattern(), s in input()) {
        let prog = program(&p);
        let bt = prog.backtrack(&s, DefenseConfig::none(), DESK_BUDGET);
        let pk = prog.pike(&s, DESK_BUDGET).unwrap();
        prop_assert_eq!(bt.outcome, pk.outcome, "pattern {:?} input {:?}", p, s);
    }

    #[test]
    fn defenses_are_sound(p in pattern(), s in input()) {
        let prog = program(&p);
        let plain = prog.backtrack(&s, DefenseConfig::none(), DESK_BUDGET);
        let memo = prog.backtrack(&s, DefenseConfig { memoize: true, ..DefenseConfig::none() }, DESK_BUDGET);
        prop_assert_eq!(key(&plain), key(&memo));
        prop_assert!(memo.steps <= plain.steps);
        let pruned = prog.backtrack(&s, DefenseConfig { offset_pruning: true, ..DefenseConfig::none() }, DESK_BUDGET);
        prop_assert_eq!(plain.outcome, pruned.outcome);
    }

    #[test]
    fn dfa_agrees_on_membership(p in pattern(), s in input()) {
        let nfa = compile(&parse(&p, Dialect::Java).unwrap()).unwrap();
        let dfa = match subset_construct_mode(&nfa, &['a', 'b', ' '], MatchMode::Search) {
            Ok(d) => d,
            Err(DfaError::TooManyStates(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let chars: Vec<char> = s.chars().collect();
        let pk = pike(&nfa, &chars, DESK_BUDGET).unwrap();
        prop_assert_eq!(dfa.accepts(&s), pk.outcome.is_match(), "pattern {:?} input {:?}", p, s);
    }

    #[test]
    fn tags_do_not_affect_membership(p in pattern(), s in input()) {
        let nfa = compile(&parse(&p, Dialect::Java).unwrap()).unwrap();
        let chars: Vec<char> = s.chars().collect();
        let with = pike(&nfa, &chars, DESK_BUDGET).unwrap().outcome.is_match();
        let without = pike(&strip_tags(&nfa), &chars, DESK_BUDGET).unwrap().outcome.is_match();
        prop_assert_eq!(with, without);
    }

    #[test]
    fn counter_is_deterministic(n in 5usize..14, limit in 1u64..5000) {
        let prog = program("(a+)+$");
        let s = format!("{}b", "a".repeat(n));
        let a = prog.backtrack(&s, DefenseConfig::counter(limit), DESK_BUDGET);
        let b = prog.backtrack(&s, DefenseConfig::counter(limit), DESK_BUDGET);
        prop_assert_eq!(a.outcome, b.outcome);
        let plain = prog.backtrack(&s, DefenseConfig::none(), DESK_BUDGET);
        prop_assert_eq!(a.outcome == Outcome::AbortedByCounter, plain.retries > limit);
    }
}

#[test]
fn exponential_growth_without_defenses() {
    let prog = program("(a+)+$");
    let steps = |n: usize| {
        prog.backtrack(
            &format!("{}b", "a".repeat(n)),
            DefenseConfig::none(),
            DESK_BUDGET,
        )
        .steps as f64
    };
    for n in 14..20 {
        let ratio = steps(n + 1) / steps(n);
        assert!((1.8..2.2).contains(&ratio), "n={n} ratio={ratio}");
    }
}

#[test]
fn memoized_and_pike_growth_is_bounded() {
    let prog = program("(a+)+$");
    let memo = DefenseConfig {
        memoize: true,
        ..DefenseConfig::none()
    };
    for n in [8, 16, 32] {
        let run = |n: usize| prog.backtrack(&format!("{}b", "a".repeat(n)), memo, DESK_BUDGET);
        let ratio = run(2 * n).steps as f64 / run(n).steps as f64;
        assert!(ratio <= 8.0, "memo ratio {ratio} at n={n}");
        assert_eq!(run(n).outcome, Outcome::NoMatch);
        let pk = |n: usize| {
            prog.pike(&format!("{}b", "a".repeat(n)), DESK_BUDGET)
                .unwrap()
        };
        let ratio = pk(2 * n).steps as f64 / pk(n).steps as f64;
        assert!(ratio <= 2.5, "pike ratio {ratio} at n={n}");
    }
    let r = prog
        .pike(&format!("{}b", "a".repeat(64)), DESK_BUDGET)
        .unwrap();
    assert_eq!(r.outcome, Outcome::NoMatch);
    assert!(r.steps <= (prog.nfa.len() * 65 * 2) as u64);
}
