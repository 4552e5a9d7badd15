use std::time::{Duration, Instant};

use regexpassport::ast::Dialect;
use regexpassport::catalog::Catalog;
use regexpassport::differential::{
    run_batch, Case, DifferentialConfig, InternalSubject, Observed, Subject, SubjectResult,
};
use regexpassport::external::{
    ExternalSubject, HandleState, Tester, TesterCommand, TesterError, TesterHandle,
};

fn shim(dialect: &str, fault: Option<&str>) -> TesterCommand {
    let mut args = vec![
        "serve-tester".to_string(),
        "--dialect".into(),
        dialect.into(),
    ];
    if let Some(f) = fault {
        args.push(format!("--fault={f}"));
    }
    TesterCommand::new(env!("CARGO_BIN_EXE_regexpassport"), args)
}

fn ok(
    matched: bool,
    span: Option<(usize, usize)>,
    captures: Vec<Option<(usize, usize)>>,
) -> SubjectResult {
    SubjectResult::Ok(Observed {
        matched,
        span,
        captures,
        elapsed: Duration::ZERO,
    })
}

const T: Duration = Duration::from_secs(2);

#[test]
fn healthy_tester_answers() {
    let mut h = TesterHandle::spawn(&shim("python", None), Dialect::Python).unwrap();
    assert_eq!(h.state(), HandleState::Ready);
    assert_eq!(
        h.request_match("a+", "baa", T).unwrap(),
        ok(true, Some((1, 3)), vec![])
    );
    assert_eq!(
        h.request_match("(a)(b)?", "a", T).unwrap(),
        ok(true, Some((0, 1)), vec![Some((0, 1)), None])
    );
    assert_eq!(
        h.request_match("é+", "xéé\n", T).unwrap(),
        ok(true, Some((1, 3)), vec![])
    );
    assert!(matches!(
        h.request_match("a{2,1}", "a", T).unwrap(),
        SubjectResult::SyntaxError(_)
    ));
    assert_eq!(h.requests(), 4);

    let mut js = TesterHandle::spawn(&shim("javascript", None), Dialect::JavaScript).unwrap();
    assert!(matches!(
        js.request_match("a++", "aaa", T).unwrap(),
        SubjectResult::SyntaxError(_)
    ));
}

#[test]
fn handshake_failures() {
    let err = TesterHandle::spawn(&shim("java", Some("bad-version")), Dialect::Java)
        .err()
        .unwrap();
    assert!(matches!(err, TesterError::VersionMismatch(2)), "{err}");
    let start = Instant::now();
    let err = TesterHandle::spawn(&shim("java", Some("silent")), Dialect::Java)
        .err()
        .unwrap();
    assert!(matches!(err, TesterError::HandshakeTimeout), "{err}");
    assert!(start.elapsed() < Duration::from_secs(8));
    let missing = TesterCommand::new("/nonexistent/tester", Vec::<String>::new());
    assert!(matches!(
        TesterHandle::spawn(&missing, Dialect::Java),
        Err(TesterError::Spawn(_))
    ));
}

#[test]
fn hung_tester_is_replaced() {
    let mut t = Tester::new(shim("java", Some("hang-on=slow")), Dialect::Java);
    assert_eq!(
        t.request_match("a", "a", T).unwrap(),
        ok(true, Some((0, 1)), vec![])
    );
    let first = t.handle().unwrap().pid();
    let start = Instant::now();
    let r = t
        .request_match("a", "slow", Duration::from_millis(200))
        .unwrap();
    assert_eq!(r, SubjectResult::Failure("timeout".into()));
    assert!(start.elapsed() < Duration::from_secs(3));
    assert_eq!(t.restarts(), 1);
    assert_ne!(t.handle().unwrap().pid(), first);
    assert_eq!(
        t.request_match("b", "ab", T).unwrap(),
        ok(true, Some((1, 2)), vec![])
    );
}

#[test]
fn crashing_tester_is_dead_after_retry() {
    let mut t = Tester::new(shim("java", Some("crash-on=boom")), Dialect::Java);
    assert!(matches!(
        t.request_match("a", "boom", T),
        Err(TesterError::Dead(_))
    ));
    assert_eq!(
        t.request_match("a", "a", T).unwrap(),
        ok(true, Some((0, 1)), vec![])
    );
}

#[test]
fn stray_lines_are_discarded() {
    let mut h = TesterHandle::spawn(&shim("java", Some("garbage")), Dialect::Java).unwrap();
    for _ in 0..3 {
        assert_eq!(
            h.request_match("b", "ab", T).unwrap(),
            ok(true, Some((1, 2)), vec![])
        );
    }
}

#[test]
fn failing_tester_does_not_disturb_batch() {
    let internal = InternalSubject::backtrack(Dialect::Java);
    let hanging = ExternalSubject::new(
        "tester:java",
        Dialect::Java,
        shim("java", Some("hang-on=zz")),
    );
    let cases = [Case {
        regex: "z".into(),
        inputs: vec!["az".into(), "zz".into(), "q".into()],
    }];
    let subjects: [&dyn Subject; 2] = [&internal, &hanging];
    let config = DifferentialConfig {
        timeout: Duration::from_millis(200),
        jobs: 1,
    };
    let r = run_batch(&cases, &subjects, Catalog::builtin(), config);
    assert_eq!(r.evaluated, 3);
    assert!(r.witnesses.is_empty());
    assert_eq!(r.failures.len(), 1);
    assert_eq!(
        (r.failures[0].input.as_str(), r.failures[0].subject.as_str()),
        ("zz", "tester:java")
    );
    assert_eq!(hanging.restarts(), 1);
}
