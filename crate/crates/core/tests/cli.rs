use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ecdlp_lab::analysis::Manifest;
use ecdlp_lab::cli::ResultsDocument;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ecdlp-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn excerpt() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/published_results_excerpt.json")
}

#[test]
fn attack_published_instance() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["attack", "--q-index", "23", "--out", path_arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("SUCCESS \u{2014} k = 7 found in top 100 results"), "{stdout}");
    assert!(stdout.contains(" <<<"));

    let doc = ResultsDocument::load(&tmp.path().join("results.json")).unwrap();
    assert_eq!(doc.experiment, "ECDLP_32pts_Shors");
    assert_eq!(doc.shots, 16384);
    assert_eq!(doc.counts.values().sum::<u64>(), 16384);
    assert_eq!(doc.physical_qubits.len(), 15);
    assert!(doc.counts.keys().all(|k| k.len() == 10));
    let ext = doc.extensions.unwrap();
    assert_eq!(ext.run.q_index, 23);
    assert_eq!(ext.run.secret_k, Some(7));

    let candidates = fs::read_to_string(tmp.path().join("candidates.csv")).unwrap();
    assert!(candidates.starts_with("rank,a,b,k,count,is_target\n1,"));
    let curve = fs::read_to_string(tmp.path().join("curve.json")).unwrap();
    assert!(curve.contains("\"order\": 32"));
}

#[test]
fn attack_with_secret_at_other_width() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["attack", "--bits", "4", "--k", "5", "--shots", "2000", "--out", path_arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = ResultsDocument::load(&tmp.path().join("results.json")).unwrap();
    assert_eq!(doc.bits().unwrap(), 4);
    assert_eq!(doc.extensions.unwrap().run.secret_k, Some(5));
}

#[test]
fn analyze_published_excerpt() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["analyze", path_arg(&excerpt()), "--k", "7", "--out", path_arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains(" (a= 8, b=11) \u{2192} k =  8 (count = 63)"), "{stdout}");
    assert!(stdout.contains(" (a= 1, b= 9) \u{2192} k =  7 (count = 54) <<<"), "{stdout}");

    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("figures/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.source_run, "published_results_excerpt.json");
    assert_eq!(manifest.figures.len(), 12);
    for entry in &manifest.figures {
        let csv = fs::read_to_string(tmp.path().join("figures").join(&entry.file)).unwrap();
        assert_eq!(csv.lines().next().unwrap(), entry.axes.join(","), "{}", entry.name);
    }
}

#[test]
fn analyze_reports_a_miss() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["analyze", path_arg(&excerpt()), "--k", "7", "--top", "1", "--out", path_arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("WARNING"));
}

#[test]
fn analyze_rejects_bad_documents() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("missing_counts.json", r#"{"experiment": "x", "backend": "y", "physical_qubits": [], "shots": 1}"#),
        (
            "odd_width.json",
            r#"{"experiment": "x", "backend": "y", "physical_qubits": [], "shots": 1, "counts": {"101": 1}}"#,
        ),
        (
            "mixed_width.json",
            r#"{"experiment": "x", "backend": "y", "physical_qubits": [], "shots": 2, "counts": {"10": 1, "1010": 1}}"#,
        ),
        (
            "shot_mismatch.json",
            r#"{"experiment": "x", "backend": "y", "physical_qubits": [], "shots": 5, "counts": {"10": 1}}"#,
        ),
    ];
    for (name, body) in cases {
        let path = tmp.path().join(name);
        fs::write(&path, body).unwrap();
        let out = run(&["analyze", path_arg(&path), "--out", path_arg(&tmp.path().join("out"))]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(String::from_utf8(out.stderr).unwrap().contains("schema error"), "{name}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = path_arg(tmp.path());
    for args in [
        vec!["attack", "--k", "3", "--q-index", "4", "--out", dir],
        vec!["attack", "--out", dir],
        vec!["attack", "--k", "40", "--out", dir],
        vec!["attack", "--q-index", "4", "--out", dir],
        vec!["attack", "--k", "1", "--noise-eps", "2", "--out", dir],
        vec!["attack", "--k", "1", "--bits", "12", "--out", dir],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn exact_writes_both_distributions() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["exact", "--bits", "3", "--k", "3", "--out", path_arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("max |exact - analytic| = "));
    let exact = fs::read_to_string(tmp.path().join("exact.csv")).unwrap();
    let analytic = fs::read_to_string(tmp.path().join("analytic.csv")).unwrap();
    assert_eq!(exact.lines().next(), Some("a,b,probability"));
    assert_eq!(exact.lines().count(), analytic.lines().count());
}

#[test]
fn rank_qubits_from_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("cal.csv");
    fs::write(
        &path,
        "Qubit,T1 (us),T2 (us),\u{221a}x (sx) error\n0,100,80,0.003\n1,200,90,0.001\n2,150,70,0.002\n3,90,60,0.001\n",
    )
    .unwrap();
    let out = run(&["rank-qubits", path_arg(&path), "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "Best physical qubits: [1, 3, 2]\n");

    let too_many = run(&["rank-qubits", path_arg(&path), "--n", "5"]);
    assert_eq!(too_many.status.code(), Some(2));
}

#[test]
fn attack_uses_calibration_for_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let cal = tmp.path().join("cal.csv");
    let mut body = String::from("Qubit,T1 (us),T2 (us),\u{221a}x (sx) error\n");
    for q in 0..20u32 {
        body.push_str(&format!("{},{},{},{}\n", q, 100 + q, 80, 0.001 * f64::from(20 - q)));
    }
    fs::write(&cal, body).unwrap();
    let out_dir = tmp.path().join("run");
    let out = run(&[
        "attack",
        "--bits",
        "2",
        "--k",
        "1",
        "--shots",
        "100",
        "--calibration",
        path_arg(&cal),
        "--out",
        path_arg(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = ResultsDocument::load(&out_dir.join("results.json")).unwrap();
    assert_eq!(doc.physical_qubits, vec![19, 18, 17, 16, 15, 14]);
}
