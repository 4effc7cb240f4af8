use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hetmac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetmac"))
        .args(args)
        .output()
        .expect("the binary runs")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn write_scenario(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("s.toml");
    fs::write(&path, body).unwrap();
    path
}

const TWO_USERS: &str = r#"
[[users]]
snr_db = 24.0
blocklength = 128
target_eps = 1e-6

[[users]]
snr_db = 12.0
blocklength = 200
target_eps = 1e-5

[estimator]
samples = 10000
seed = 3
"#;

#[test]
fn det_verify_passes_on_shipped_scenarios() {
    for name in ["two_user.toml", "deterministic.toml", "single_user.toml"] {
        let out = hetmac(&["det-verify", "--scenario", scenario(name).to_str().unwrap()]);
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(!text.contains("MISMATCH") && !text.contains("INFEASIBLE"));
    }
}

#[test]
fn infeasible_allocation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{TWO_USERS}\n[[allocations]]\nid = \"bad\"\nm = [[6], [4, 4]]\n");
    let path = write_scenario(dir.path(), &body);
    let out = hetmac(&["det-verify", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let out = hetmac(&[
        "region",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        dir.path().join("r.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_and_io_errors_have_their_own_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = hetmac(&["det-verify", "--scenario", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let path = write_scenario(
        dir.path(),
        "[[users]]\nsnr_db = 3.0\nblocklength = 10\ntarget_eps = 2.0\n",
    );
    let out = hetmac(&["det-verify", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let path = write_scenario(dir.path(), &format!("{TWO_USERS}\nbogus = 1\n"));
    let out = hetmac(&["det-verify", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = hetmac(&[
        "codeparams",
        "--scenario",
        scenario("two_user.toml").to_str().unwrap(),
        "--alloc",
        "Z",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("hetmac: "));
}

#[test]
fn region_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), TWO_USERS);
    let run = |name: &str, threads: &str| {
        let csv = dir.path().join(name);
        let out = hetmac(&[
            "--threads",
            threads,
            "region",
            "--scenario",
            path.to_str().unwrap(),
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        fs::read(csv).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "3");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# hetmac region v1\n"));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(&headers[0], "kind");
    assert!(headers.iter().any(|h| h == "R_1") && headers.iter().any(|h| h == "R_2"));
    let kinds: Vec<String> = reader
        .records()
        .map(|r| r.unwrap()[0].to_string())
        .collect();
    assert!(kinds.iter().any(|k| k == "point"));
    assert!(kinds.iter().any(|k| k == "benchmark_corner"));
}

#[test]
fn region_flags_override_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        &format!("{TWO_USERS}\n[[allocations]]\nid = \"C\"\nm = [[6], [2, 4]]\n"),
    );
    let csv = dir.path().join("r.csv");
    let out = hetmac(&[
        "region",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--scheme",
        "2",
        "--samples",
        "12000",
        "--seed",
        "9",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.contains("samples=12000 seed=9"));
    let points: Vec<&str> = text.lines().filter(|l| l.starts_with("point,")).collect();
    assert_eq!(points.len(), 1);
    assert!(points[0].starts_with("point,C,2,"));
}

#[test]
fn constellation_and_codeparams() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let out = hetmac(&[
        "constellation",
        "--scenario",
        scenario("two_user.toml").to_str().unwrap(),
        "--alloc",
        "E",
        "--component",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().next(), Some("re,im"));
    assert_eq!(text.lines().count(), 1 + 16);

    let out = hetmac(&[
        "codeparams",
        "--scenario",
        scenario("two_user.toml").to_str().unwrap(),
        "--alloc",
        "G",
        "--samples",
        "10000",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("user 1: I=0 L=0"), "{text}");
    assert!(text.contains("user 2:"));
}
