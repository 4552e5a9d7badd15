//! Differential testing of a few patterns across dialects with the
//! internal engines.
//!
//! ```text
//! cargo run --example difftest
//! ```

use std::time::Duration;

use regexpassport::ast::{parse, Dialect};
use regexpassport::catalog::Catalog;
use regexpassport::differential::{
    run_batch, summarize, Case, DifferentialConfig, InternalSubject, Subject,
};
use regexpassport::input_gen::generate;

fn main() -> anyhow::Result<()> {
    let patterns = [r"\Ab\Z", "^a", r"x\z", "[[:digit:]]+", "(a|b)+c"];
    let subjects = [
        InternalSubject::backtrack(Dialect::Java),
        InternalSubject::backtrack(Dialect::JavaScript),
        InternalSubject::backtrack(Dialect::Ruby),
        InternalSubject::pike(Dialect::Python),
    ];
    let subjects: Vec<&dyn Subject> = subjects.iter().map(|s| s as &dyn Subject).collect();

    let mut cases = Vec::new();
    for p in patterns {
        let ast = parse(p, Dialect::Java)?;
        let set = generate(&ast, 40, Duration::from_secs(1), 3)?;
        let mut inputs: Vec<String> = set.all().cloned().collect();
        inputs.push("x\na".into());
        cases.push(Case {
            regex: p.into(),
            inputs,
        });
    }
    let report = run_batch(
        &cases,
        &subjects,
        Catalog::builtin(),
        DifferentialConfig::default(),
    );
    println!(
        "{} evaluations, {} witnesses, {} failures",
        report.evaluated,
        report.witnesses.len(),
        report.failures.len()
    );
    for (regex, subject) in &report.syntax_errors {
        println!("  {subject} rejects /{regex}/");
    }
    let mut seen = std::collections::BTreeSet::new();
    for w in &report.witnesses {
        if seen.insert(&w.regex) {
            println!(
                "  /{}/ on {:?}: {:?} witness, causes {:?}",
                w.regex, w.input, w.kind, w.causes
            );
        }
    }
    let names: Vec<String> = subjects.iter().map(|s| s.name().to_string()).collect();
    print!("{}", summarize(&report.witnesses, &names).to_csv());
    Ok(())
}
