//! Differential testing across engines and dialects. Disagreements become
//! witnesses of one of three kinds, and the Cross Examiner links each
//! witness to the catalog rows that explain it.

mod subjects;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::Duration;

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

pub use subjects::{InternalEngine, InternalSubject, Subject};

use crate::ast::{feature_occurrences, parse, Ast, Dialect};
use crate::catalog::Catalog;

/// Per-evaluation time limit in differential mode.
pub const DIFFERENTIAL_TIMEOUT: Duration = Duration::from_secs(2);

/// A successful partial match attempt. Offsets count Unicode scalar values.
/// Equality ignores the elapsed time.
#[derive(Debug, Clone, Serialize)]
pub struct Observed {
    pub matched: bool,
    pub span: Option<(usize, usize)>,
    /// Groups 1..=n.
    pub captures: Vec<Option<(usize, usize)>>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl PartialEq for Observed {
    fn eq(&self, other: &Observed) -> bool {
        (self.matched, self.span, &self.captures) == (other.matched, other.span, &other.captures)
    }
}

impl Eq for Observed {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubjectResult {
    Ok(Observed),
    SyntaxError(String),
    /// Timeout, crash or an unsupported construct.
    Failure(String),
}

impl Serialize for SubjectResult {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SubjectResult::Ok(o) => o.serialize(s),
            SubjectResult::SyntaxError(m) | SubjectResult::Failure(m) => {
                let mut map = s.serialize_map(Some(2))?;
                let status = if matches!(self, SubjectResult::SyntaxError(_)) {
                    "syntax_error"
                } else {
                    "failure"
                };
                map.serialize_entry("status", status)?;
                map.serialize_entry("message", m)?;
                map.end()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub subject: String,
    pub dialect: Dialect,
    pub result: SubjectResult,
}

impl Observation {
    fn observed(&self) -> Option<&Observed> {
        match &self.result {
            SubjectResult::Ok(o) => Some(o),
            _ => None,
        }
    }
}

/// Ordered from coarsest to finest disagreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessKind {
    Match,
    Substring,
    Capture,
}

impl WitnessKind {
    pub const ALL: [WitnessKind; 3] = [
        WitnessKind::Match,
        WitnessKind::Substring,
        WitnessKind::Capture,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("need at least two subjects that ran the pattern, got {0}")]
pub struct InsufficientSubjects(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub regex: String,
    pub input: String,
    pub kind: WitnessKind,
    pub observations: Vec<Observation>,
    /// Catalog entry ids; empty when the witness is unexplained.
    pub causes: Vec<String>,
}

impl Witness {
    pub fn is_explained(&self) -> bool {
        !self.causes.is_empty()
    }

    /// One line of the witness log.
    pub fn to_json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            regex: &'a str,
            input: &'a str,
            kind: WitnessKind,
            subjects: BTreeMap<&'a str, &'a SubjectResult>,
            causes: &'a [String],
        }
        serde_json::to_string(&Line {
            regex: &self.regex,
            input: &self.input,
            kind: self.kind,
            subjects: self
                .observations
                .iter()
                .map(|o| (o.subject.as_str(), &o.result))
                .collect(),
            causes: &self.causes,
        })
        .expect("witness serializes")
    }
}

/// The kind of disagreement between two observations, if any.
pub fn compare(a: &Observed, b: &Observed) -> Option<WitnessKind> {
    if a.matched != b.matched {
        Some(WitnessKind::Match)
    } else if !a.matched {
        None
    } else if a.span != b.span {
        Some(WitnessKind::Substring)
    } else if a.captures != b.captures {
        Some(WitnessKind::Capture)
    } else {
        None
    }
}

/// Classify a set of observations of one (regex, input) pair. Subjects
/// that rejected the pattern or failed are left out.
pub fn classify(observations: &[Observation]) -> Result<Option<WitnessKind>, InsufficientSubjects> {
    let ok: Vec<&Observed> = observations
        .iter()
        .filter_map(Observation::observed)
        .collect();
    if ok.len() < 2 {
        return Err(InsufficientSubjects(ok.len()));
    }
    Ok(ok
        .iter()
        .enumerate()
        .flat_map(|(i, a)| ok[i + 1..].iter().filter_map(move |b| compare(a, b)))
        .min())
}

/// Run every subject on one (regex, input) pair.
pub fn evaluate_all(
    regex: &str,
    input: &str,
    subjects: &[&dyn Subject],
    timeout: Duration,
) -> Vec<Observation> {
    let inputs = [input.to_string()];
    subjects
        .iter()
        .map(|s| Observation {
            subject: s.name().to_string(),
            dialect: s.dialect(),
            result: s.evaluate(regex, &inputs, timeout).remove(0),
        })
        .collect()
}

/// Catalog rows that explain a witness: the construct occurs in the
/// pattern and two disagreeing subjects' dialects read it differently.
pub fn attribute_cause(
    witness: &Witness,
    asts: &BTreeMap<Dialect, Ast>,
    catalog: &Catalog,
) -> Vec<String> {
    let mut dialect_pairs = BTreeSet::new();
    let ok: Vec<(&Observation, &Observed)> = witness
        .observations
        .iter()
        .filter_map(|o| Some((o, o.observed()?)))
        .collect();
    for (i, (oa, a)) in ok.iter().enumerate() {
        for (ob, b) in &ok[i + 1..] {
            if oa.dialect != ob.dialect && compare(a, b).is_some() {
                dialect_pairs.insert((oa.dialect.min(ob.dialect), oa.dialect.max(ob.dialect)));
            }
        }
    }
    let mut causes: Vec<String> = Vec::new();
    for (da, db) in dialect_pairs {
        let occurrences = [da, db]
            .into_iter()
            .filter_map(|d| asts.get(&d))
            .flat_map(feature_occurrences);
        for (feature, _) in occurrences {
            let Some(entry) = catalog.entry_for(feature) else {
                continue;
            };
            if causes.contains(&entry.id) {
                continue;
            }
            if catalog.interpretation(feature, da) != catalog.interpretation(feature, db) {
                causes.push(entry.id.clone());
            }
        }
    }
    causes
}

/// Per subject pair, the number of distinct regexes with at least one
/// witness of each kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseReport {
    pub subjects: Vec<String>,
    cells: BTreeMap<(usize, usize), [usize; 3]>,
}

impl PairwiseReport {
    /// Counts in `WitnessKind::ALL` order. Symmetric in its arguments.
    pub fn get(&self, a: &str, b: &str) -> [usize; 3] {
        let index = |s: &str| self.subjects.iter().position(|x| x == s);
        match (index(a), index(b)) {
            (Some(i), Some(j)) => self
                .cells
                .get(&(i.min(j), i.max(j)))
                .copied()
                .unwrap_or_default(),
            _ => [0; 3],
        }
    }

    /// One row per unordered pair, in subject order.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["subject_a", "subject_b", "match", "substring", "capture"])
            .unwrap();
        for i in 0..self.subjects.len() {
            for j in i + 1..self.subjects.len() {
                let c = self.cells.get(&(i, j)).copied().unwrap_or_default();
                w.write_record([
                    self.subjects[i].clone(),
                    self.subjects[j].clone(),
                    c[0].to_string(),
                    c[1].to_string(),
                    c[2].to_string(),
                ])
                .unwrap();
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

pub fn summarize(witnesses: &[Witness], subjects: &[String]) -> PairwiseReport {
    let mut seen: BTreeMap<(usize, usize), [HashSet<&str>; 3]> = BTreeMap::new();
    for w in witnesses {
        let ok: Vec<(usize, &Observed)> = w
            .observations
            .iter()
            .filter_map(|o| {
                Some((
                    subjects.iter().position(|s| *s == o.subject)?,
                    o.observed()?,
                ))
            })
            .collect();
        for (x, (i, a)) in ok.iter().enumerate() {
            for (j, b) in &ok[x + 1..] {
                if let Some(kind) = compare(a, b) {
                    let cell = seen.entry((*i.min(j), *i.max(j))).or_default();
                    cell[kind as usize].insert(&w.regex);
                }
            }
        }
    }
    PairwiseReport {
        subjects: subjects.to_vec(),
        cells: seen
            .into_iter()
            .map(|(k, sets)| (k, sets.map(|s| s.len())))
            .collect(),
    }
}

#[derive(Debug, Clone)]
pub struct Case {
    pub regex: String,
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct DifferentialConfig {
    pub timeout: Duration,
    /// Worker threads; 0 uses one per core.
    pub jobs: usize,
}

impl Default for DifferentialConfig {
    fn default() -> DifferentialConfig {
        DifferentialConfig {
            timeout: DIFFERENTIAL_TIMEOUT,
            jobs: 0,
        }
    }
}

/// A (regex, input) pair a subject could not finish, for the
/// super-linear detector to look at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailureFlag {
    pub regex: String,
    pub input: String,
    pub subject: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct BatchReport {
    pub evaluated: usize,
    pub witnesses: Vec<Witness>,
    pub failures: Vec<FailureFlag>,
    /// (regex, subject) pairs where the subject rejected the pattern.
    pub syntax_errors: Vec<(String, String)>,
}

/// Evaluate every case on every subject and collect witnesses. The output
/// does not depend on the number of workers.
pub fn run_batch(
    cases: &[Case],
    subjects: &[&dyn Subject],
    catalog: &Catalog,
    config: DifferentialConfig,
) -> BatchReport {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .expect("thread pool");
    let parts: Vec<BatchReport> = pool.install(|| {
        cases
            .par_iter()
            .map(|case| run_case(case, subjects, catalog, config.timeout))
            .collect()
    });
    let mut out = BatchReport::default();
    for p in parts {
        out.evaluated += p.evaluated;
        out.witnesses.extend(p.witnesses);
        out.failures.extend(p.failures);
        out.syntax_errors.extend(p.syntax_errors);
    }
    out
}

fn run_case(
    case: &Case,
    subjects: &[&dyn Subject],
    catalog: &Catalog,
    timeout: Duration,
) -> BatchReport {
    let results: Vec<Vec<SubjectResult>> = subjects
        .iter()
        .map(|s| s.evaluate(&case.regex, &case.inputs, timeout))
        .collect();
    let asts: BTreeMap<Dialect, Ast> = subjects
        .iter()
        .map(|s| s.dialect())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter_map(|d| Some((d, parse(&case.regex, d).ok()?)))
        .collect();
    let mut report = BatchReport::default();
    for (s, r) in subjects.iter().zip(&results) {
        if let Some(SubjectResult::SyntaxError(_)) = r.first() {
            report
                .syntax_errors
                .push((case.regex.clone(), s.name().to_string()));
        }
    }
    for (k, input) in case.inputs.iter().enumerate() {
        report.evaluated += 1;
        let observations: Vec<Observation> = subjects
            .iter()
            .zip(&results)
            .map(|(s, r)| Observation {
                subject: s.name().to_string(),
                dialect: s.dialect(),
                result: r[k].clone(),
            })
            .collect();
        for o in &observations {
            if let SubjectResult::Failure(reason) = &o.result {
                report.failures.push(FailureFlag {
                    regex: case.regex.clone(),
                    input: input.clone(),
                    subject: o.subject.clone(),
                    reason: reason.clone(),
                });
            }
        }
        let Ok(Some(kind)) = classify(&observations) else {
            continue;
        };
        let mut witness = Witness {
            regex: case.regex.clone(),
            input: input.clone(),
            kind,
            observations,
            causes: Vec::new(),
        };
        witness.causes = attribute_cause(&witness, &asts, catalog);
        report.witnesses.push(witness);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(super) fn obs(
        subject: &str,
        dialect: Dialect,
        o: Option<(usize, usize)>,
        caps: &[Option<(usize, usize)>],
    ) -> Observation {
        Observation {
            subject: subject.into(),
            dialect,
            result: SubjectResult::Ok(Observed {
                matched: o.is_some(),
                span: o,
                captures: caps.to_vec(),
                elapsed: Duration::ZERO,
            }),
        }
    }

    #[test]
    fn kinds() {
        use Dialect::*;
        let k = |a: Observation, b: Observation| classify(&[a, b]).unwrap();
        assert_eq!(
            k(obs("x", Java, Some((0, 1)), &[]), obs("y", Java, None, &[])),
            Some(WitnessKind::Match)
        );
        assert_eq!(
            k(
                obs("x", Java, Some((0, 2)), &[]),
                obs("y", Java, Some((0, 3)), &[])
            ),
            Some(WitnessKind::Substring)
        );
        assert_eq!(
            k(
                obs("x", Java, Some((0, 2)), &[Some((0, 1))]),
                obs("y", Java, Some((0, 2)), &[None])
            ),
            Some(WitnessKind::Capture)
        );
        assert_eq!(
            k(obs("x", Java, None, &[]), obs("y", Java, None, &[])),
            None
        );
        let err = Observation {
            subject: "z".into(),
            dialect: JavaScript,
            result: SubjectResult::SyntaxError("bad".into()),
        };
        assert_eq!(
            classify(&[obs("x", Java, None, &[]), err]),
            Err(InsufficientSubjects(1))
        );
    }

    #[test]
    fn internal_engines_agree() {
        let b = InternalSubject::backtrack(Dialect::Java);
        let p = InternalSubject::pike(Dialect::Java);
        let obs = evaluate_all("abc", "abc", &[&b, &p], DIFFERENTIAL_TIMEOUT);
        assert_eq!(obs[0].result, obs[1].result);
        let SubjectResult::Ok(o) = &obs[0].result else {
            panic!()
        };
        assert_eq!(o.span, Some((0, 3)));
        let js = InternalSubject::backtrack(Dialect::JavaScript);
        let obs = evaluate_all("a++", "aaa", &[&js], DIFFERENTIAL_TIMEOUT);
        assert!(matches!(obs[0].result, SubjectResult::SyntaxError(_)));
    }

    #[test]
    fn caret_witness_is_attributed() {
        let java = InternalSubject::backtrack(Dialect::Java);
        let ruby = InternalSubject::backtrack(Dialect::Ruby);
        let cases = [Case {
            regex: "^a".into(),
            inputs: vec!["b\na".into(), "a".into()],
        }];
        let r = run_batch(
            &cases,
            &[&java, &ruby],
            Catalog::builtin(),
            DifferentialConfig::default(),
        );
        assert_eq!(r.evaluated, 2);
        assert_eq!(r.witnesses.len(), 1);
        assert_eq!(r.witnesses[0].kind, WitnessKind::Match);
        assert_eq!(r.witnesses[0].causes, ["caret"]);
        let line = r.witnesses[0].to_json_line();
        assert_eq!(
            line,
            r#"{"regex":"^a","input":"b\na","kind":"match","subjects":{"backtrack:java":{"matched":false,"span":null,"captures":[]},"backtrack:ruby":{"matched":true,"span":[2,3],"captures":[]}},"causes":["caret"]}"#
        );
    }

    #[test]
    fn unexplained_and_summary() {
        let w = Witness {
            regex: "xyz".into(),
            input: "xyz".into(),
            kind: WitnessKind::Match,
            observations: vec![
                obs("a", Dialect::Java, Some((0, 3)), &[]),
                obs("b", Dialect::Python, None, &[]),
            ],
            causes: Vec::new(),
        };
        let asts = BTreeMap::from([(Dialect::Java, parse("xyz", Dialect::Java).unwrap())]);
        assert!(attribute_cause(&w, &asts, Catalog::builtin()).is_empty());

        let subjects = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let empty = summarize(&[], &subjects);
        assert!(empty
            .to_csv()
            .lines()
            .skip(1)
            .all(|l| l.ends_with(",0,0,0")));
        let many: Vec<Witness> = (0..50).map(|_| w.clone()).collect();
        let s = summarize(&many, &subjects);
        assert_eq!(s.get("a", "b"), [1, 0, 0]);
        assert_eq!(s.get("b", "a"), [1, 0, 0]);
        assert_eq!(s.get("a", "c"), [0, 0, 0]);
        assert_eq!(
            s.to_csv(),
            "subject_a,subject_b,match,substring,capture\na,b,1,0,0\na,c,0,0,0\nb,c,0,0,0\n"
        );
    }

    struct Canned(Dialect, SubjectResult);

    impl Subject for Canned {
        fn name(&self) -> &str {
            "canned"
        }
        fn dialect(&self) -> Dialect {
            self.0
        }
        fn evaluate(&self, _: &str, inputs: &[String], _: Duration) -> Vec<SubjectResult> {
            vec![self.1.clone(); inputs.len()]
        }
    }

    #[test]
    fn table_fixtures() {
        let java = InternalSubject::backtrack(Dialect::Java);
        let js = InternalSubject::backtrack(Dialect::JavaScript);
        let run = |regex: &str, input: &str, subjects: &[&dyn Subject]| {
            let cases = [Case {
                regex: regex.into(),
                inputs: vec![input.into()],
            }];
            let mut r = run_batch(
                &cases,
                subjects,
                Catalog::builtin(),
                DifferentialConfig::default(),
            );
            r.witnesses.pop().map(|w| (w.kind, w.causes))
        };
        assert_eq!(
            run(r"\Ab\Z", "b", &[&java, &js]),
            Some((WitnessKind::Match, vec!["text-anchors".to_string()]))
        );
        // capture 2 keeps "a" in Java and is reset by the second iteration in JavaScript
        let js_captures = Canned(
            Dialect::JavaScript,
            SubjectResult::Ok(Observed {
                matched: true,
                span: Some((0, 2)),
                captures: vec![Some((1, 2)), None, Some((1, 2))],
                elapsed: Duration::ZERO,
            }),
        );
        assert_eq!(
            run("((a)|(b))+", "ab", &[&java, &js_captures]),
            Some((
                WitnessKind::Capture,
                vec!["repeat-capture-reset".to_string()]
            ))
        );
    }
}
