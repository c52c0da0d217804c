use std::path::Path;
use std::process::{Command, Output};

fn brlx(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brlx"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn brlx")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const SMALL_SWEEP: &[&str] = &[
    "relax-sweep",
    "--grid-n",
    "16",
    "--taus",
    "0.5,0.25",
    "--horizon",
    "0.2",
];

#[test]
fn verify_spectral_passes_and_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = brlx(
        tmp.path(),
        &[
            "verify-spectral",
            "--grid-n",
            "32",
            "--members",
            "4",
            "--run-id",
            "r",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("verify-spectral/r");
    for f in [
        "manifest.json",
        "summary.json",
        "report.csv",
        "assertions.csv",
    ] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 1729);
    assert_eq!(manifest["parameters"]["grid_n"], 32);

    let r = brlx(tmp.path(), &["report", dir.to_str().unwrap()]);
    assert_eq!(code(&r), 0);
    assert!(String::from_utf8_lossy(&r.stdout).contains("all"));
}

#[test]
fn partition_alias_runs_the_spectral_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let o = brlx(
        tmp.path(),
        &["verify-partition", "--members", "2", "--run-id", "p"],
    );
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.lines().any(|l| l.starts_with("PASS partition")),
        "{stdout}"
    );
    assert!(tmp.path().join("verify-spectral/p/summary.json").is_file());
}

#[test]
fn equilibrium_sweep_has_zero_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = SMALL_SWEEP.to_vec();
    args.extend(["--epsilon", "0", "--run-id", "eq"]);
    let o = brlx(tmp.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = std::fs::read_to_string(tmp.path().join("relax-sweep/eq/report.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,s,error"));
    let mut rows = 0;
    for l in lines {
        let err: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(err, 0.0, "{l}");
        rows += 1;
    }
    assert!(rows > 2);
}

#[test]
fn failing_invariant_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = SMALL_SWEEP.to_vec();
    args.extend(["--uniform-bound", "1e-6", "--run-id", "f"]);
    let o = brlx(tmp.path(), &args);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("failing invariants: uniform_bound"));
    let r = brlx(
        tmp.path(),
        &["report", tmp.path().join("relax-sweep/f").to_str().unwrap()],
    );
    assert_eq!(code(&r), 1);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[run-euler\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["run-euler", "--config", bad.to_str().unwrap()],
        vec!["run-euler", "--set", "nonsense=1"],
        vec!["verify-besov", "--tau", "0.3"],
        vec!["run-euler", "--tau", "2"],
        vec!["no-such-suite"],
    ];
    for args in cases {
        assert_eq!(code(&brlx(tmp.path(), &args)), 2, "{args:?}");
    }
    let missing = brlx(
        tmp.path(),
        &["report", tmp.path().join("nowhere").to_str().unwrap()],
    );
    assert_eq!(code(&missing), 2);
}

#[test]
fn config_section_is_honoured_and_flags_override_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[relax-sweep]\ngrid_n = 16\ntaus = [0.5, 0.25]\nhorizon = 0.2\n\n[relax-sweep.data]\nepsilon = 0.5\n",
    )
    .unwrap();
    let o = brlx(
        tmp.path(),
        &[
            "relax-sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--epsilon",
            "0",
            "--run-id",
            "c",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("relax-sweep/c/manifest.json")).unwrap(),
    )
    .unwrap();
    let p = &manifest["parameters"];
    assert_eq!(p["grid_n"], 16);
    assert_eq!(p["taus"], serde_json::json!([0.5, 0.25]));
    assert_eq!(p["data"]["epsilon"], 0.0);
}

#[test]
fn single_thread_runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |id: &str| {
        let mut args = SMALL_SWEEP.to_vec();
        args.extend(["--threads", "1", "--run-id", id]);
        assert_eq!(code(&brlx(tmp.path(), &args)), 0);
        std::fs::read(tmp.path().join(format!("relax-sweep/{id}/report.csv"))).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}
