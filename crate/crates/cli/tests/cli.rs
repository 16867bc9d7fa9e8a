use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bohmscat"))
}

const MINIMAL: &str = r#"
[grid]
dim = 1
points = 2048
half_width = 128.0

[[branches]]
coefficient = [1.0, 0.0]
[[branches.factors]]
[[branches.factors.packets]]
center = [0.0]
momentum = [2.0]
sigma = 1.0
[[branches.factors.packets]]
center = [0.0]
momentum = [-2.0]
sigma = 1.0

[detector]
radii = [4.0, 8.0]

[sampler]
samples = 200
seed = 3

[process]
t_max = 24.0
"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn dry_run_writes_only_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["--preset", "theorem2-free-1d", "--dry-run", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files, vec!["plan.txt"]);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &MINIMAL.replace("radii = [4.0, 8.0]", "radii = [128.0]"));
    let out = bin().arg("--config").arg(&bad).arg("--dry-run").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("R = 128") && err.contains("L = 128"), "{err}");
    let unknown = write(dir.path(), "unknown.toml", &MINIMAL.replace("[process]", "[process]\nextra = 1"));
    assert_eq!(bin().arg("--config").arg(&unknown).status().unwrap().code(), Some(2));
}

#[test]
fn symmetric_packet_run_passes_and_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "free.toml", MINIMAL);
    let out1 = dir.path().join("a");
    let status = bin().arg("--config").arg(&cfg).arg("--out").arg(&out1).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let out2 = dir.path().join("b");
    let status = bin()
        .arg("--config")
        .arg(out1.join("summary.json"))
        .arg("--out")
        .arg(&out2)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for f in ["stats.csv", "convergence.csv"] {
        assert_eq!(std::fs::read(out1.join(f)).unwrap(), std::fs::read(out2.join(f)).unwrap());
    }
}

#[test]
fn stats_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(threads);
        let status = bin()
            .args(["--preset", "determinism-small", "--seed", "7", "--threads", threads, "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        outputs.push(std::fs::read(out.join("stats.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
