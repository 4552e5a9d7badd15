use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_regexpassport"));
    for (k, _) in std::env::vars() {
        if k.starts_with("REGEXPASSPORT_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(c: &mut Command) -> (i32, String) {
    let Output {
        status,
        stdout,
        stderr,
    } = c.output().unwrap();
    assert!(
        stderr.is_empty() || status.code() != Some(0),
        "{}",
        String::from_utf8_lossy(&stderr)
    );
    (status.code().unwrap(), String::from_utf8(stdout).unwrap())
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn lint_exit_codes() {
    let (code, out) = run(bin().args(["lint", r"\Ab\Z", "--from", "java", "--to", "javascript"]));
    assert_eq!(code, 0);
    assert_eq!(
        out.lines().filter(|l| l.contains(": warning: ")).count(),
        2,
        "{out}"
    );
    let (code, out) = run(bin().args(["lint", "a++", "--from", "java", "--to", "javascript"]));
    assert_eq!(code, 1);
    assert!(out.contains(": error: "), "{out}");
    let (code, out) = run(bin().args(["lint", "[a-z]+[0-9]", "--from", "portable-core"]));
    assert_eq!((code, out.as_str()), (0, ""));
}

#[test]
fn detect_confirms_exponential() {
    let (code, out) = run(bin().args(["detect", "(a+)+$", "--validate", "--engine", "slow"]));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["prediction"]["verdict"]["kind"], "exponential");
    assert_eq!(v["validation"]["family"]["family"], "exponential-confirmed");
    let (_, out) = run(bin().args(["detect", "(a+)+$", "--validate", "--engine", "medium"]));
    assert!(out.contains("\"defended\""), "{out}");
}

#[test]
fn reuse_report_fixture() {
    let (code, out) = run(bin().args(["reuse-report", &fixture("tiny.csv"), "--min-len", "15"]));
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "registry,module,intra_duplicate,inter_duplicate,internet_duplicate\n\
         npm,alpha,false,true,false\n\
         npm,epsilon,true,false,false\n\
         npm,gamma,false,false,false\n\
         npm,zeta,true,false,false\n\
         pypi,beta,false,true,false\n\
         pypi,delta,false,false,false\n"
    );
    let (_, out) = run(bin().args(["reuse-report", &fixture("tiny.csv"), "--min-len", "16"]));
    assert!(out.contains("npm,epsilon,false,false,false"), "{out}");
}

#[test]
fn gen_inputs_is_deterministic_and_config_layers() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(bin().args(["gen-inputs", "(a|b)+c", "--seed", "5"])).1;
    let b = run(bin().args(["gen-inputs", "(a|b)+c", "--seed", "5"])).1;
    assert_eq!(a, b);
    assert_ne!(
        a,
        run(bin().args(["gen-inputs", "(a|b)+c", "--seed", "6"])).1
    );

    let config = dir.path().join("rp.toml");
    std::fs::write(&config, "seed = 1\ncount = 10\n").unwrap();
    let seed_of = |out: String| out.lines().nth(1).unwrap().to_string();
    let mut c = bin();
    c.args(["gen-inputs", "ab"])
        .env("REGEXPASSPORT_CONFIG", &config);
    assert_eq!(seed_of(run(&mut c).1), "seed 1");
    c.env("REGEXPASSPORT_SEED", "2");
    assert_eq!(seed_of(run(&mut c).1), "seed 2");
    c.args(["--seed", "3"]);
    assert_eq!(seed_of(run(&mut c).1), "seed 3");

    let out_file = dir.path().join("inputs.txt");
    run(bin().args(["gen-inputs", "ab", "-o"]).arg(&out_file));
    let set =
        regexpassport::input_gen::read_inputs(std::fs::File::open(&out_file).unwrap()).unwrap();
    assert_eq!(set.positives, ["ab"]);
}

#[test]
fn extract_and_difftest() {
    let dir = tempfile::tempdir().unwrap();
    let pkg = dir.path().join("pkg");
    std::fs::create_dir(&pkg).unwrap();
    std::fs::write(
        pkg.join("a.js"),
        "const r = /\\Ab\\Z/;\nconst s = new RegExp(x + 'y');\n",
    )
    .unwrap();
    let corpus = dir.path().join("corpus.csv");
    let (code, _) = run(bin()
        .arg("extract")
        .arg(dir.path())
        .args(["--lang", "javascript", "--registry", "npm", "-o"])
        .arg(&corpus));
    assert_eq!(code, 0);
    let entries =
        regexpassport::corpus::read_corpus(std::fs::File::open(&corpus).unwrap()).unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(
        (
            entries[0].pattern.as_str(),
            entries[0].module.as_str(),
            entries[0].line
        ),
        (r"\Ab\Z", "pkg", 1)
    );

    let log = dir.path().join("w.jsonl");
    let (code, summary) = run(bin()
        .arg("difftest")
        .arg(&corpus)
        .args([
            "--subjects",
            "internal-bt:java,internal-pike:javascript",
            "--count",
            "40",
            "--witness-log",
        ])
        .arg(&log));
    assert_eq!(code, 0);
    let witnesses = std::fs::read_to_string(&log).unwrap();
    assert!(witnesses.lines().count() > 0);
    assert!(
        witnesses
            .lines()
            .all(|l| l.contains("\"causes\":[\"text-anchors\"]")),
        "{witnesses}"
    );
    assert_eq!(
        summary,
        "subject_a,subject_b,match,substring,capture\nbacktrack:java,pike:javascript,1,0,0\n"
    );
    let (_, report) = run(bin().arg("report").arg(&log));
    assert_eq!(report, summary);

    let (code, _) = run(bin().args(["difftest", "a", "--subjects", "internal-bt,bogus"]));
    assert_eq!(code, 2);
}
