use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn lexqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexqa")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = lexqa(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Built {
    dir: tempfile::TempDir,
}

impl Built {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let b = Built { dir };
        ok(&["build", "--statutes", p(&fixture("statutes.txt")), "--pairs", p(&fixture("pairs.jsonl")), "--model", p(&b.model())]);
        ok(&[
            "entail-train",
            "--statutes",
            p(&fixture("statutes.txt")),
            "--pairs",
            p(&fixture("pairs.jsonl")),
            "--model",
            p(&b.model()),
            "--vectors",
            p(&fixture("vectors50.txt")),
            "--out",
            p(&b.boost()),
        ]);
        b
    }

    fn model(&self) -> PathBuf {
        self.dir.path().join("model.json")
    }

    fn boost(&self) -> PathBuf {
        self.dir.path().join("boost.json")
    }
}

#[test]
fn missing_file_exits_2() {
    let out = lexqa(&["build", "--statutes", "/nonexistent/statutes.txt", "--model", "/tmp/never.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/statutes.txt"));
}

#[test]
fn usage_error_exits_2() {
    assert_eq!(lexqa(&["retrieve"]).status.code(), Some(2));
    assert_eq!(lexqa(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn domain_error_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.jsonl");
    std::fs::write(&one, r#"{"qid": "a", "question": "lease", "relevant": ["601"]}"#).unwrap();
    let out = lexqa(&["eval", "--statutes", p(&fixture("statutes.txt")), "--pairs", p(&one)]);
    assert_eq!(out.status.code(), Some(1));
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"qid\": \"a\"}\n").unwrap();
    let out = lexqa(&["eval", "--statutes", p(&fixture("statutes.txt")), "--pairs", p(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn rebuild_is_byte_identical_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for m in [&a, &b] {
        ok(&["build", "--statutes", p(&fixture("statutes.txt")), "--pairs", p(&fixture("pairs.jsonl")), "--model", p(m)]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let out = ok(&["retrieve", "--model", p(&a), "-q", "A manager may claim useful expenses from the principal."]);
    assert!(out.starts_with("q1\tanswer 702"), "{out}");
}

#[test]
fn retrieve_json_batch_and_empty_question() {
    let b = Built::new();
    let out = ok(&["retrieve", "--model", p(&b.model()), "--pairs", p(&fixture("pairs.jsonl")), "--format", "json", "--top-n", "10"]);
    let rows: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 16);
    for r in rows {
        assert_eq!(r["ranked"].as_array().unwrap().len(), 10);
        assert!(!r["answer"].as_array().unwrap().is_empty());
    }

    let out = ok(&["retrieve", "--model", p(&b.model()), "-q", "", "--format", "json", "--top-n", "10"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let ranked = v["ranked"].as_array().unwrap();
    assert_eq!(ranked.len(), 10);
    assert!(ranked.iter().all(|e| e["score"].as_f64() == Some(0.0)));
    assert_eq!(v["answer"].as_array().unwrap().len(), 1);
}

#[test]
fn dictionary_changes_question_set() {
    let b = Built::new();
    let q = "A seller and a buyer agree on the price.";
    let plain = ok(&["retrieve", "--model", p(&b.model()), "-q", q, "--format", "json"]);
    let with = ok(&["retrieve", "--model", p(&b.model()), "-q", q, "--format", "json", "--dict", p(&fixture("dict.json"))]);
    let empty = ok(&["retrieve", "--model", p(&b.model()), "-q", q, "--format", "json", "--dict", p(&fixture("dict_empty.json"))]);
    assert_eq!(plain, empty);
    assert_ne!(plain, with);
}

#[test]
fn features_prints_fifteen_named_values() {
    let b = Built::new();
    let out = ok(&[
        "features",
        "--statutes",
        p(&fixture("statutes.txt")),
        "--model",
        p(&b.model()),
        "-q",
        "A gift not in writing may be cancelled.",
        "--articles",
        "550",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let f = v["features"].as_object().unwrap();
    assert_eq!(f.len(), 15);
    // No vectors given.
    assert_eq!(f["avg_word2vec"].as_f64(), Some(0.0));
    assert!(f["word_overlap"].as_f64().unwrap() >= 4.0);

    let out = lexqa(&["features", "--statutes", p(&fixture("statutes.txt")), "--model", p(&b.model()), "-q", "x", "--articles", "12345"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn entail_predict_and_answer() {
    let b = Built::new();
    let out = ok(&[
        "entail-predict",
        "--statutes",
        p(&fixture("statutes.txt")),
        "--model",
        p(&b.model()),
        "--boost",
        p(&b.boost()),
        "--vectors",
        p(&fixture("vectors50.txt")),
        "--pairs",
        p(&fixture("pairs.jsonl")),
    ]);
    assert_eq!(out.lines().count(), 16);
    for line in out.lines() {
        let label = line.split('\t').nth(1).unwrap();
        assert!(label == "YES" || label == "NO", "{line}");
    }

    // Without vectors the distributional feature is 0 and answering still works.
    let (statutes, model, boost) = (fixture("statutes.txt"), b.model(), b.boost());
    let args = [
        "answer",
        "--statutes",
        p(&statutes),
        "--model",
        p(&model),
        "--boost",
        p(&boost),
        "-q",
        "A manager must notify the principal without delay.",
        "--format",
        "json",
    ];
    let first = ok(&args);
    assert_eq!(first, ok(&args));
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["answer"]["retrieved"][0], "699");
    assert!(["YES", "NO"].contains(&v["answer"]["label"].as_str().unwrap()));
}

#[test]
fn repl_answers_each_line() {
    let b = Built::new();
    let mut child = Command::new(env!("CARGO_BIN_EXE_lexqa"))
        .args(["repl", "--statutes", p(&fixture("statutes.txt")), "--model", p(&b.model()), "--boost", p(&b.boost())])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"A lessee may not sublease without approval of the lessor.\n\nA gift not in writing may be cancelled.\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert!(lines[0].starts_with("articles 612"), "{text}");
    assert!(lines[1].starts_with("articles 550"), "{text}");
}

#[test]
fn eval_reports_are_consistent_with_their_logs() {
    for task in ["retrieval", "entailment", "combined", "top-n"] {
        let out = ok(&[
            "eval",
            "--statutes",
            p(&fixture("statutes.txt")),
            "--pairs",
            p(&fixture("pairs.jsonl")),
            "--task",
            task,
            "--vectors",
            p(&fixture("vectors50.txt")),
        ]);
        let report: lexqa::eval::EvalReport = serde_json::from_str(&out).unwrap();
        assert_eq!(report.per_query.len(), 16);
        assert_eq!(report.recomputed(), report, "{task}");
    }
    let text = ok(&["eval", "--statutes", p(&fixture("statutes.txt")), "--pairs", p(&fixture("pairs.jsonl")), "--format", "text"]);
    assert!(text.contains("f-measure  "), "{text}");
}

#[test]
fn ablation_lists_every_feature() {
    let out = ok(&["eval", "--statutes", p(&fixture("statutes.txt")), "--pairs", p(&fixture("pairs.jsonl")), "--task", "ablation"]);
    let v: Vec<lexqa::eval::AblationEntry> = serde_json::from_str(&out).unwrap();
    let names: Vec<&str> = v.iter().map(|e| e.feature.as_str()).collect();
    assert_eq!(names, lexqa::FEATURE_NAMES);
}

#[test]
fn tune_writes_loadable_params_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (params, trace) = (dir.path().join("params.json"), dir.path().join("trace.json"));
    let out = ok(&[
        "tune",
        "--statutes",
        p(&fixture("statutes.txt")),
        "--pairs",
        p(&fixture("pairs.jsonl")),
        "--budget",
        "30",
        "--out",
        p(&params),
        "--trace",
        p(&trace),
    ]);
    assert!(out.contains("final k "), "{out}");
    let tuned = lexqa::RankerParams::load(&params).unwrap();
    let t: lexqa::tuner::TuneTrace = serde_json::from_slice(&std::fs::read(&trace).unwrap()).unwrap();
    assert_eq!(t.final_params, tuned);
    assert!(t.evaluations <= 30);
    assert!(t.final_f >= t.initial_f);
}
