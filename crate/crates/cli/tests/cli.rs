use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn orthoqc(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_orthoqc"));
    cmd.args(args).env_remove("ORTHOQC_OUT_DIR");
    if let Some(dir) = env_out {
        cmd.env("ORTHOQC_OUT_DIR", dir);
    }
    cmd.output().expect("spawn orthoqc")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_writes_results_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "protocol = \"pp\"\ntrials = 4\nseed = 9\n[params]\nn = 16\n");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = orthoqc(&["run", &cfg, "--out", out.to_str().unwrap()], None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["results.json", "results.csv", "transcripts/trial_00000.jsonl"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("results.json")).unwrap()).unwrap();
    assert_eq!(doc["aggregate"]["mean_fidelity"], 1.0);
    assert_eq!(doc["aggregate"]["abort_rate"], 0.0);
    assert_eq!(doc["trials"].as_array().unwrap().len(), 4);
}

#[test]
fn flags_override_config_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "protocol = \"pp\"\ntrials = 2\nseed = 1\n[params]\nn = 16\n");
    let out = tmp.path().join("o");
    let o = orthoqc(
        &["run", &cfg, "--seed", "5", "--trials", "3", "--protocol", "dll", "--eve", "intercept-resend", "--out", out.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(doc["seed"], 5);
    assert_eq!(doc["config"]["protocol"], "dll");
    assert_eq!(doc["config"]["eve"]["kind"], "intercept_resend");
    assert_eq!(doc["trials"].as_array().unwrap().len(), 3);
}

#[test]
fn env_var_sets_default_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "protocol = \"gv\"\n[params]\nn = 10\n");
    let out = tmp.path().join("from-env");
    let o = orthoqc(&["run", &cfg], Some(&out));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("results.csv").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    let cfg = write_config(tmp.path(), "protocol = \"pp\"\ntrials = 0\n");
    let o = orthoqc(&["run", &cfg, "--out", out], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));

    let cfg = write_config(tmp.path(), "protocol = \"bb85\"\n");
    let o = orthoqc(&["run", &cfg, "--out", out], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("koashi-imoto"));

    let o = orthoqc(&["run", "/nonexistent/exp.toml", "--out", out], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let cfg = write_config(tmp.path(), "protocol = \"gv\"\n[params]\nn = 4\n");
    let o = orthoqc(&["run", &cfg, "--out", blocker.join("sub").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn list_protocols_names_everything() {
    let o = orthoqc(&["list-protocols"], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["gv", "koashi-imoto", "ev", "guo-shi", "n09", "pp", "cl", "dll", "pp-gv", "dll-gv", "gv-check", "bb84-check"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(name)), "{name}");
    }
}

#[test]
fn lint_transcript_clean_and_tampered() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "protocol = \"pp-gv\"\n[params]\nn = 8\n");
    let out = tmp.path().join("o");
    assert!(orthoqc(&["run", &cfg, "--out", out.to_str().unwrap()], None).status.success());
    let log = out.join("transcripts/trial_00000.jsonl");
    let o = orthoqc(&["lint-transcript", log.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("clean"));

    // Move the last event to the front: sequence numbers and causality break.
    let text = fs::read_to_string(&log).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let last = lines.pop().unwrap();
    lines.insert(0, last);
    let bad = tmp.path().join("bad.jsonl");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let o = orthoqc(&["lint-transcript", bad.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));

    fs::write(&bad, "not json\n").unwrap();
    assert_eq!(orthoqc(&["lint-transcript", bad.to_str().unwrap()], None).status.code(), Some(1));
}

#[test]
fn shipped_configs_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = tmp.path().join(path.file_stem().unwrap());
            let o = orthoqc(&["run", path.to_str().unwrap(), "--trials", "2", "--out", out.to_str().unwrap()], None);
            assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
