use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn gpctl(args: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpctl")).args(args).output().expect("gpctl runs")
}

fn run_config(text: &str, dir: &Path, extra: &[&str]) -> (Output, PathBuf) {
    let config = dir.join("config.json");
    std::fs::write(&config, text).unwrap();
    let out = dir.join("out");
    let mut args = vec![config.as_os_str(), "--out".as_ref(), out.as_os_str()];
    args.extend(extra.iter().map(std::ffi::OsStr::new));
    (gpctl(&args), out)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn manifest_hashes_match_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = example("stability_unit.json");
    let o = gpctl(&[config.as_os_str(), "--out".as_ref(), out.as_os_str(), "--threads".as_ref(), "2".as_ref()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "stability");
    assert_eq!(manifest["threads"], 2);
    assert_eq!(manifest["config"]["stability"]["q_count"], 41);
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    let stdout = String::from_utf8(o.stdout).unwrap();
    for f in files {
        let name = f["name"].as_str().unwrap();
        let bytes = std::fs::read(out.join(name)).unwrap();
        let digest = hex::encode(Sha256::digest(&bytes));
        assert_eq!(f["sha256"].as_str().unwrap(), digest);
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert!(stdout.contains(&digest));
    }
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = example("certify_pair.json");
    let mut listings = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(threads);
        let o = gpctl(&[config.as_os_str(), "--out".as_ref(), out.as_os_str(), "--threads".as_ref(), threads.as_ref()]);
        assert!(o.status.success(), "{}", stderr(&o));
        // the hash lines on stdout cover exactly the data files
        let hashes: Vec<String> = String::from_utf8(o.stdout)
            .unwrap()
            .lines()
            .map(|l| l.split_whitespace().next().unwrap().to_string())
            .collect();
        listings.push(hashes);
    }
    assert_eq!(listings[0], listings[1]);
}

#[test]
fn syntax_error_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_config("{\n  \"command\": \"kernel\",\n  \"kernel\": {\n}", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn invalid_values_exit_3_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"command": "stability", "stability": {"alpha": -1}}"#, "stability.alpha"),
        (r#"{"command": "stability", "stability": {"beta": 1}}"#, "stability"),
        (r#"{"command": "fly"}"#, "command"),
        (r#"{"command": "kernel", "kernel": {"type": "expsum", "terms": [[1, 1], [2, 1]]}}"#, "kernel"),
    ];
    for (text, key) in cases {
        let (o, out) = run_config(text, dir.path(), &[]);
        assert_eq!(o.status.code(), Some(3), "{text}: {}", stderr(&o));
        assert!(stderr(&o).contains(key), "{text}: {}", stderr(&o));
        assert!(!out.exists());
    }
}

#[test]
fn numerical_failure_exits_4_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_config(r#"{"command": "roots", "kernel": {"type": "constant", "value": 1}}"#, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("numerical failure"));
    assert!(!out.exists());
}

#[test]
fn io_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(gpctl(&[missing.as_os_str()]).status.code(), Some(1));

    // output path blocked by a regular file
    let blocker = dir.path().join("out");
    std::fs::write(&blocker, b"not a directory").unwrap();
    let (o, _) = run_config(r#"{"command": "stability"}"#, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert_eq!(std::fs::read(&blocker).unwrap(), b"not a directory");
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_config(r#"{"command": "stability"}"#, dir.path(), &["--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}
