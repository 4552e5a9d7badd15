//! Extract regexes from source text and report re-use across modules.
//!
//! ```text
//! cargo run --example corpus
//! ```

use regexpassport::corpus::{extract_regexes, reuse_report, Language, DEFAULT_MIN_LENGTH};

const EMAIL: &str = r"^[\w.+-]+@[\w-]+\.[\w.]+$";

fn main() {
    let js = format!(
        "const email = /{EMAIL}/;\nconst ws = new RegExp(\"\\\\s+\", \"g\");\nlet x = a / b / c;\n"
    );
    let py = format!("import re\nEMAIL = re.compile(r\"{EMAIL}\")\nWS = re.compile(r\"\\s+\")\n");
    let rb = format!("EMAIL = %r{{{EMAIL}}}\n");

    let mut corpus = Vec::new();
    corpus.extend(extract_regexes(
        "index.js",
        &js,
        Language::JavaScript,
        "npm",
        "left-pad-email",
    ));
    corpus.extend(extract_regexes(
        "forms.js",
        &js,
        Language::JavaScript,
        "npm",
        "form-check",
    ));
    corpus.extend(extract_regexes(
        "util.py",
        &py,
        Language::Python,
        "pypi",
        "mailtools",
    ));
    corpus.extend(extract_regexes(
        "valid.rb",
        &rb,
        Language::Ruby,
        "gems",
        "validates",
    ));
    for e in &corpus {
        println!(
            "{}/{} {}:{}  /{}/",
            e.registry, e.module, e.file, e.line, e.pattern
        );
    }

    let report = reuse_report(&corpus, DEFAULT_MIN_LENGTH, &[EMAIL.to_string()]);
    print!("\n{}", report.to_csv());
    for (pattern, n) in &report.occurrences {
        println!("{n} modules declare /{pattern}/");
    }
}
