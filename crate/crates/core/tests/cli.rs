use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use singulab::cli::{self, CliError, Command, GermDocument, RunOptions};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{name}.germ"))
}

fn singulab() -> Process {
    Process::new(env!("CARGO_BIN_EXE_singulab"))
}

const MINIMAL: &str = r#"
name = "tiny"
dimension = 2
variables = ["x", "y"]
f = "x"

[[strata]]
equalities = ["y"]
dimension = 1
"#;

#[test]
fn bundled_cusp_loads_with_one_stratum() {
    let doc = cli::load_germ(&corpus("cusp")).unwrap();
    assert_eq!(doc.name, "cusp");
    assert_eq!(doc.strata.len(), 1);
    assert_eq!(doc.f, "x");
    assert!(doc.origin_stratum);
}

#[test]
fn every_bundled_germ_round_trips() {
    for entry in fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")).unwrap() {
        let path = entry.unwrap().path();
        let doc = cli::load_germ(&path).unwrap();
        let again = GermDocument::from_toml(&doc.to_toml(), "again").unwrap();
        assert_eq!(doc, again, "{}", path.display());
    }
}

#[test]
fn missing_dimension_names_the_field() {
    let text = MINIMAL.replace("dimension = 2\n", "");
    match GermDocument::from_toml(&text, "tiny.germ") {
        Err(CliError::Schema { field, message, .. }) => {
            assert!(message.contains("dimension"), "{message}");
            assert!(field == "." || field.is_empty() || field.contains("dimension"), "{field}");
        }
        other => panic!("expected a schema error, got {other:?}"),
    }
    let text = MINIMAL.replace("dimension = 1", "");
    match GermDocument::from_toml(&text, "tiny.germ") {
        Err(CliError::Schema { field, .. }) => assert!(field.starts_with("strata[0]"), "{field}"),
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn doubled_caret_reports_its_offset() {
    let text = MINIMAL.replace("f = \"x\"", "f = \"x^^2\"");
    let err = GermDocument::from_toml(&text, "tiny.germ").unwrap_err();
    match &err {
        CliError::Poly { field, source, .. } => {
            assert_eq!(field, "f");
            assert!(source.to_string().contains("offset 2"), "{source}");
        }
        other => panic!("expected a polynomial error, got {other:?}"),
    }
}

#[test]
fn schema_rejects_bad_documents() {
    let bad = [
        MINIMAL.replace("variables = [\"x\", \"y\"]", "variables = [\"x\"]"),
        MINIMAL.replace("f = \"x\"", "f = \"x + 1\""),
        format!("{MINIMAL}\n[[assertions]]\ncommand = \"nope\"\nfield = \"lhs\"\nexpected = 1\n"),
        format!("{MINIMAL}\n[[assertions]]\ncommand = \"sigma\"\nfield = \"middle\"\nexpected = 1\n"),
        format!("{MINIMAL}\ncolour = \"red\"\n"),
    ];
    for text in &bad {
        assert!(GermDocument::from_toml(text, "bad.germ").is_err(), "{text}");
    }
}

#[test]
fn command_names_parse_back() {
    for c in Command::ALL {
        assert_eq!(Command::parse(c.name()), Some(vec![c]));
    }
    assert_eq!(Command::parse("all").unwrap().len(), 8);
    assert_eq!(Command::parse("everything"), None);
}

#[test]
fn unknown_command_is_a_usage_error() {
    let out = singulab().args(["run", "frobnicate"]).arg(corpus("cusp")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_path_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = singulab()
        .args(["run", "lemma-link", "no/such/file.germ", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn integer_identities_pass_on_the_cusp() {
    let dir = tempfile::tempdir().unwrap();
    let out = singulab()
        .args(["run", "lemma-link"])
        .arg(corpus("cusp"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = fs::read_to_string(dir.path().join("cusp.lemma-link.toml")).unwrap();
    assert!(report.contains("pass = true"));
    let table = fs::read_to_string(dir.path().join("cusp.lemma-link.csv")).unwrap();
    assert!(table.starts_with("germ,theorem,kind,name,value"));
    assert!(table.contains("assertion_lhs"));
}

#[test]
fn failed_assertion_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(corpus("cusp"))
        .unwrap()
        .replace("expected = 2\nnote = \"two points", "expected = 3\nnote = \"two points");
    let germ = dir.path().join("cusp.germ");
    fs::write(&germ, text).unwrap();
    let out = singulab()
        .args(["run", "lemma-link"])
        .arg(&germ)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let mut opts = RunOptions::new(vec![Command::GaussBonnet, Command::LeGreuel], vec![corpus("cusp")]);
            opts.samples = Some(40);
            opts.directions = Some(5);
            opts.seed = Some(11);
            opts.out = dir.path().to_path_buf();
            opts.timing = false;
            cli::run(&opts).unwrap();
            let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
            (
                read("cusp.gauss-bonnet.toml"),
                read("cusp.gauss-bonnet.csv"),
                read("cusp.le-greuel.toml"),
            )
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}
