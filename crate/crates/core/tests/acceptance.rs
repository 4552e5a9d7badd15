//! Acceptance checks. Prints one `criterion N: pass|fail` line per check
//! and exits non-zero if any check fails.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regexpassport::ast::{feature_occurrences, parse, Ast, Dialect};
use regexpassport::automata::{compile, subset_construct_mode, DfaError, MatchMode};
use regexpassport::catalog::{Catalog, EntryGroup, Severity};
use regexpassport::corpus::{read_corpus, reuse_report, ModuleFlags, DEFAULT_MIN_LENGTH};
use regexpassport::differential::{
    classify, run_batch, Case, DifferentialConfig, InternalSubject, Observation, Observed, Subject,
    SubjectResult, WitnessKind,
};
use regexpassport::engines::{DefenseConfig, Outcome, Program, DEFAULT_STEP_LIMIT, DESK_BUDGET};
use regexpassport::input_gen::{generate, write_inputs, DEFAULT_BUDGET};
use regexpassport::sl::{
    detect, slope, validate_attack, Complexity, DetectBudget, EngineKind, Family, ValidationConfig,
    Via,
};

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn java(p: &str) -> Ast {
    parse(p, Dialect::Java).unwrap_or_else(|e| panic!("{p}: {e}"))
}

fn program(p: &str) -> Program {
    Program::new(&java(p)).unwrap()
}

fn engine_families() -> Check {
    let start = Instant::now();
    let prog = program("(a+)+$");
    let attack = |n: usize| format!("{}b", "a".repeat(n));
    let slow = |n: usize| prog.backtrack(&attack(n), DefenseConfig::none(), DESK_BUDGET);
    let mut prev = slow(10);
    for n in 11..=21 {
        let next = slow(n);
        let ratio = next.steps as f64 / prev.steps as f64;
        ensure!(ratio >= 1.8, "slow ratio {ratio:.2} at n={}", n - 1);
        prev = next;
    }
    for n in [16, 32, 64, 128] {
        let a = prog.pike(&attack(n), DESK_BUDGET).unwrap().steps as f64;
        let b = prog.pike(&attack(2 * n), DESK_BUDGET).unwrap().steps as f64;
        ensure!(b / a <= 2.5, "fast ratio {:.2} doubling n={n}", b / a);
    }
    let medium = prog.backtrack(
        &attack(40),
        DefenseConfig::counter(DEFAULT_STEP_LIMIT),
        DESK_BUDGET,
    );
    ensure!(
        medium.outcome == Outcome::AbortedByCounter,
        "medium returned {:?}",
        medium.outcome
    );
    ensure!(
        start.elapsed() < Duration::from_secs(10),
        "took {:?}",
        start.elapsed()
    );
    Ok(())
}

fn variant_technique() -> Check {
    let ast = java("a+$");
    let p = detect(&ast, DetectBudget::desk());
    ensure!(p.direct == Complexity::Linear, "direct {:?}", p.direct);
    ensure!(
        p.verdict == Complexity::Polynomial && p.via_variant == Via::Anchored,
        "verdict {:?} via {:?}",
        p.verdict,
        p.via_variant
    );
    let attack = p.attack.ok_or("no attack string")?;
    let prog = Program::new(&ast).unwrap();
    let points: Vec<(f64, f64)> = [2_500u64, 5_000, 10_000]
        .iter()
        .map(|&n| {
            let r = prog.backtrack(&attack.build(n), DefenseConfig::none(), DEFAULT_BUDGET);
            assert_eq!(r.outcome, Outcome::NoMatch);
            ((n as f64).ln(), (r.steps as f64).ln())
        })
        .collect();
    let s = slope(&points).unwrap();
    ensure!((1.5..=2.5).contains(&s), "log-log slope {s:.2}");
    Ok(())
}

fn bounded_variant() -> Check {
    let ast = java("(a{1,1000}){1,1000}$");
    let p = detect(&ast, DetectBudget::desk());
    ensure!(
        matches!(p.direct, Complexity::Unknown(_)),
        "direct {:?}",
        p.direct
    );
    ensure!(
        p.verdict == Complexity::Exponential && p.via_variant == Via::Unbounded,
        "verdict {:?} via {:?}",
        p.verdict,
        p.via_variant
    );
    let attack = p.attack.ok_or("no attack string")?;
    let config = ValidationConfig {
        ladder: vec![0.1, 0.2, 0.3],
        max_rescales: 0,
        ..ValidationConfig::desk()
    };
    ensure!(
        attack.recommended_pumps as f64 * 0.3 <= 30.0,
        "ladder reaches {} pumps",
        attack.recommended_pumps as f64 * 0.3
    );
    let slow = validate_attack(
        &ast,
        &attack,
        EngineKind::Backtrack(DefenseConfig::none()),
        &config,
    )
    .unwrap();
    ensure!(slow.exceeded_threshold, "backtracker stayed under 1 s");
    let fast = validate_attack(&ast, &attack, EngineKind::Pike, &config).unwrap();
    let states = Program::new(&ast).unwrap().nfa.len() as u64;
    ensure!(
        !fast.exceeded_threshold && fast.family == Family::LinearObserved,
        "pike family {:?}",
        fast.family
    );
    for m in &fast.measurements {
        let len = attack.build(m.pumps).chars().count() as u64;
        ensure!(
            m.steps <= 4 * states * (len + 1),
            "pike took {} steps on {} chars",
            m.steps,
            len
        );
    }
    Ok(())
}

/// Random backreference-free patterns over {a, b}.
fn random_pattern(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        let leaves = ["a", "b", "a", "b", "[ab]", "[^a]", ".", "^", "$", r"\b"];
        return leaves[rng.gen_range(0..leaves.len())].to_string();
    }
    let inner = |rng: &mut ChaCha8Rng| random_pattern(rng, depth - 1);
    match rng.gen_range(0..4) {
        0 => (0..rng.gen_range(2..4)).map(|_| inner(rng)).collect(),
        1 => format!("(?:{}|{})", inner(rng), inner(rng)),
        2 => {
            let q = ["*", "+", "?", "*?", "+?", "??", "{1,2}", "{0,2}?"];
            format!("(?:{}){}", inner(rng), q[rng.gen_range(0..q.len())])
        }
        _ => format!("({})", inner(rng)),
    }
}

fn random_input(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(0..=12);
    (0..len)
        .map(|_| ['a', 'b', ' '][rng.gen_range(0..3)])
        .collect()
}

fn memoization() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let memo = DefenseConfig {
        memoize: true,
        ..DefenseConfig::none()
    };
    for _ in 0..200 {
        let p = random_pattern(&mut rng, 4);
        let prog = program(&p);
        for _ in 0..10 {
            let s = random_input(&mut rng);
            let plain = prog.backtrack(&s, DefenseConfig::none(), DESK_BUDGET);
            let cached = prog.backtrack(&s, memo, DESK_BUDGET);
            ensure!(
                plain.outcome == cached.outcome && plain.captures == cached.captures,
                "{p:?} on {s:?}: {:?} vs {:?}",
                plain.outcome,
                cached.outcome
            );
            ensure!(cached.steps <= plain.steps, "{p:?} on {s:?}: more steps");
        }
    }
    let prog = program("(a+)+$");
    let points: Vec<(f64, f64)> = [16usize, 32, 64, 128, 256]
        .iter()
        .map(|&n| {
            let r = prog.backtrack(&format!("{}b", "a".repeat(n)), memo, DESK_BUDGET);
            ((n as f64).ln(), (r.steps as f64).ln())
        })
        .collect();
    let s = slope(&points).unwrap();
    ensure!(s <= 3.0, "memoized slope {s:.2}");
    Ok(())
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut dfa_checked = 0;
    for _ in 0..1000 {
        let p = random_pattern(&mut rng, 4);
        let ast = java(&p);
        let prog = Program::new(&ast).unwrap();
        let nfa = compile(&ast).unwrap();
        let dfa = match subset_construct_mode(&nfa, &['a', 'b', ' '], MatchMode::Search) {
            Ok(d) => Some(d),
            Err(DfaError::TooManyStates(_)) => None,
            Err(e) => return Err(format!("{p:?}: {e}")),
        };
        dfa_checked += dfa.is_some() as usize;
        for _ in 0..10 {
            let s = random_input(&mut rng);
            let bt = prog.backtrack(&s, DefenseConfig::none(), DESK_BUDGET);
            let pk = prog.pike(&s, DESK_BUDGET).unwrap();
            ensure!(
                bt.outcome == pk.outcome,
                "{p:?} on {s:?}: backtracker {:?}, pike {:?}",
                bt.outcome,
                pk.outcome
            );
            if let Some(dfa) = &dfa {
                ensure!(
                    dfa.accepts(&s) == pk.outcome.is_match(),
                    "{p:?} on {s:?}: dfa disagrees"
                );
            }
        }
    }
    ensure!(dfa_checked >= 900, "only {dfa_checked} DFAs fit the guard");
    Ok(())
}

/// A subject that returns one fixed result.
struct Canned(Dialect, SubjectResult);

impl Subject for Canned {
    fn name(&self) -> &str {
        "canned"
    }
    fn dialect(&self) -> Dialect {
        self.0
    }
    fn evaluate(&self, _: &str, inputs: &[String], _: Duration) -> Vec<SubjectResult> {
        inputs.iter().map(|_| self.1.clone()).collect()
    }
}

fn observed(
    matched: bool,
    span: Option<(usize, usize)>,
    caps: Vec<Option<(usize, usize)>>,
) -> Observed {
    Observed {
        matched,
        span,
        captures: caps,
        elapsed: Duration::ZERO,
    }
}

fn witness_taxonomy() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let small_span = |rng: &mut ChaCha8Rng| {
        let s = rng.gen_range(0..2);
        (s, s + rng.gen_range(0..2))
    };
    for _ in 0..5000 {
        let n = rng.gen_range(2..5);
        let obs: Vec<Observation> = (0..n)
            .map(|i| {
                let matched = rng.gen_bool(0.7);
                let span = matched.then(|| small_span(&mut rng));
                let caps = if matched {
                    vec![rng.gen_bool(0.5).then(|| small_span(&mut rng))]
                } else {
                    vec![None]
                };
                Observation {
                    subject: format!("s{i}"),
                    dialect: Dialect::HOSTS[i],
                    result: SubjectResult::Ok(observed(matched, span, caps)),
                }
            })
            .collect();
        let all = |f: &dyn Fn(&Observed) -> bool| {
            obs.iter()
                .all(|o| matches!(&o.result, SubjectResult::Ok(x) if f(x)))
        };
        let first = match &obs[0].result {
            SubjectResult::Ok(x) => x.clone(),
            _ => unreachable!(),
        };
        let expected = if !all(&|x| x.matched == first.matched) {
            Some(WitnessKind::Match)
        } else if !all(&|x| x.span == first.span) {
            Some(WitnessKind::Substring)
        } else if !all(&|x| x.captures == first.captures) {
            Some(WitnessKind::Capture)
        } else {
            None
        };
        let got = classify(&obs).map_err(|e| e.to_string())?;
        ensure!(got == expected, "{got:?} != {expected:?} for {obs:?}");
    }

    let run = |regex: &str, input: &str, subjects: &[&dyn Subject]| {
        let cases = [Case {
            regex: regex.into(),
            inputs: vec![input.into()],
        }];
        run_batch(
            &cases,
            subjects,
            Catalog::builtin(),
            DifferentialConfig::default(),
        )
        .witnesses
        .pop()
        .map(|w| (w.kind, w.causes))
    };
    let java = InternalSubject::backtrack(Dialect::Java);
    let js = InternalSubject::backtrack(Dialect::JavaScript);
    let ruby = InternalSubject::backtrack(Dialect::Ruby);
    let anchors = run(r"\Ab\Z", "b", &[&java, &js]);
    ensure!(
        anchors == Some((WitnessKind::Match, vec!["text-anchors".into()])),
        "\\Ab\\Z gave {anchors:?}"
    );
    let caret = run("^a", "x\na", &[&java, &ruby]);
    ensure!(
        caret == Some((WitnessKind::Match, vec!["caret".into()])),
        "^a gave {caret:?}"
    );
    let js_captures = Canned(
        Dialect::JavaScript,
        SubjectResult::Ok(observed(
            true,
            Some((0, 2)),
            vec![Some((1, 2)), None, Some((1, 2))],
        )),
    );
    let reset = run("((a)|(b))+", "ab", &[&java, &js_captures]);
    ensure!(
        reset == Some((WitnessKind::Capture, vec!["repeat-capture-reset".into()])),
        "((a)|(b))+ gave {reset:?}"
    );
    Ok(())
}

/// Rows of the dialect difference table: the example regex, the host
/// dialect it is parsed in, the expected entry and its group.
const TABLE_ROWS: &[(&str, Dialect, &str, EntryGroup)] = {
    use Dialect::*;
    use EntryGroup::*;
    &[
        (r"\Qa\E", Java, "quote-block", FalseFriend1),
        (r"\G", Java, "search-anchor", FalseFriend1),
        (r"\Ab\Z", Java, "text-anchors", FalseFriend1),
        (r"a\z", Java, "end-of-text", FalseFriend1),
        (r"\K", Php, "match-reset", FalseFriend1),
        (r"\e", Java, "escape-char", FalseFriend1),
        (r"\cC", Java, "control-char", FalseFriend1),
        (r"\x{41}", Java, "hex-brace", FalseFriend1),
        (r"(a)\g1", Php, "backref-g", FalseFriend1),
        (r"(a)\g<1>", Php, "backref-g-angle", FalseFriend1),
        (r"\p{N}", Java, "unicode-prop-braced", FalseFriend1),
        (r"\pN", Java, "unicode-prop-short", FalseFriend1),
        ("[[:digit:]]", Php, "posix-class", FalseFriend1),
        ("^a", Java, "caret", FalseFriend2),
        ("a++", Java, "possessive", FalseFriend2),
        (r"(a)\1", Java, "backref-numeric", FalseFriend2),
        (r"\h", Java, "horizontal-space", FalseFriend2),
        ("(a)(?<b>b)", Java, "mixed-named-groups", Nuanced),
        ("[]]", Java, "class-leading-bracket", Nuanced),
        ("((a*)+)", Java, "nullable-repeat-capture", Nuanced),
        ("((a)|(b))+", Java, "repeat-capture-reset", Nuanced),
    ]
};

fn catalog_completeness() -> Check {
    let catalog = Catalog::builtin();
    for &(regex, dialect, id, group) in TABLE_ROWS {
        let entry = catalog.entry(id).ok_or(format!("no entry {id}"))?;
        ensure!(entry.group == group, "{id} is in {}", entry.group);
        ensure!(
            Dialect::HOSTS.iter().all(|d| entry.cells.contains_key(d)),
            "{id} lacks a host dialect"
        );
        let ast = parse(regex, dialect).map_err(|e| format!("{regex}: {e}"))?;
        let ids: Vec<&str> = feature_occurrences(&ast)
            .into_iter()
            .filter_map(|(f, _)| catalog.entry_for(f))
            .map(|e| e.id.as_str())
            .collect();
        ensure!(ids.contains(&id), "{regex} maps to {ids:?}, not {id}");
    }

    let findings = catalog.lint(&java(r"\Ab\Z"), Dialect::Java, Dialect::JavaScript);
    ensure!(
        findings.len() == 2 && findings.iter().all(|f| f.severity == Severity::Warning),
        "\\Ab\\Z java to javascript: {findings:?}"
    );
    let core = parse(
        r"(?:[a-z0-9]+\.)*x{2,3}(foo|bar)?\d\s",
        Dialect::PortableCore,
    )
    .map_err(|e| e.to_string())?;
    for target in Dialect::HOSTS {
        let f = catalog.lint(&core, Dialect::PortableCore, target);
        ensure!(f.is_empty(), "portable-core to {target}: {f:?}");
    }
    Ok(())
}

fn reuse_metrics() -> Check {
    let text = include_str!("fixtures/tiny.csv");
    let corpus = read_corpus(text.as_bytes()).map_err(|e| e.to_string())?;
    ensure!(corpus.len() == 6, "fixture has {} entries", corpus.len());
    let report = reuse_report(&corpus, DEFAULT_MIN_LENGTH, &[]);
    let flags = |r: &regexpassport::corpus::ReuseReport, reg: &str, m: &str| {
        r.flags(reg, m).unwrap_or_default()
    };
    let inter = ModuleFlags {
        inter_duplicate: true,
        ..ModuleFlags::default()
    };
    let intra = ModuleFlags {
        intra_duplicate: true,
        ..ModuleFlags::default()
    };
    for (reg, m, want) in [
        ("npm", "alpha", inter),
        ("pypi", "beta", inter),
        ("npm", "gamma", ModuleFlags::default()),
        ("pypi", "delta", ModuleFlags::default()),
        ("npm", "epsilon", intra),
        ("npm", "zeta", intra),
    ] {
        let got = flags(&report, reg, m);
        ensure!(got == want, "{reg}/{m}: {got:?}");
    }

    // the same corpus with the 15-character duplicate cut to 14
    let short: Vec<_> = corpus
        .iter()
        .cloned()
        .map(|mut e| {
            if e.pattern.chars().count() == 15 {
                e.pattern = e.pattern.chars().take(14).collect();
            }
            e
        })
        .collect();
    let report = reuse_report(&short, DEFAULT_MIN_LENGTH, &[]);
    for m in ["epsilon", "zeta"] {
        let got = flags(&report, "npm", m);
        ensure!(got == ModuleFlags::default(), "14 chars, npm/{m}: {got:?}");
    }
    Ok(())
}

fn input_generation() -> Check {
    let ast = java("(a|b)+c");
    let run = || generate(&ast, 500, DEFAULT_BUDGET, 42).map_err(|e| e.to_string());
    let set = run()?;
    ensure!(set.coverage >= 0.9, "coverage {:.3}", set.coverage);
    ensure!(!set.positives.is_empty(), "no positives");
    let prog = Program::new(&ast).unwrap();
    for s in &set.positives {
        let r = prog.pike(s, DESK_BUDGET).unwrap();
        ensure!(r.outcome.is_match(), "pike rejects positive {s:?}");
    }
    let bytes = |set| {
        let mut buf = Vec::new();
        write_inputs(&set, &mut buf).unwrap();
        buf
    };
    ensure!(bytes(set) == bytes(run()?), "two runs differ");
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Check); 9] = [
        (1, engine_families),
        (2, variant_technique),
        (3, bounded_variant),
        (4, memoization),
        (5, oracle_equivalence),
        (6, witness_taxonomy),
        (7, catalog_completeness),
        (8, reuse_metrics),
        (9, input_generation),
    ];
    let only: Option<u32> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = BTreeMap::new();
    for (n, check) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match result {
            Ok(()) => println!("criterion {n}: pass ({:.1?})", start.elapsed()),
            Err(why) => {
                println!("criterion {n}: fail: {why}");
                failed.insert(n, why);
            }
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
