use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nhsim::metrics::{read_records_csv, read_summary_csv, RECORD_HEADER, SUMMARY_HEADER};

const SCENARIO: &str = "\
[run]
name = cli
seed = 3
windows = 40

[pool]
total_mhz = 30

[mno.1]
users = 20

[mno.2]
users = 20

[mno.3]
users = 20
";

fn nhsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhsim"))
        .args(args)
        .env_remove("SPECSIM_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("s.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn out_dir(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn run_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SCENARIO);
    let (a, b) = (out_dir(tmp.path(), "a"), out_dir(tmp.path(), "b"));
    for out in [&a, &b] {
        let o = nhsim(&[
            "run",
            "--config",
            &cfg,
            "--seed",
            "7",
            "--windows",
            "100",
            "--out",
            out,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let records = |d: &str| fs::read(Path::new(d).join("records.csv")).unwrap();
    assert_eq!(records(&a), records(&b));

    let rows = read_records_csv(&Path::new(&a).join("records.csv")).unwrap();
    assert_eq!(rows.len(), 100 * 5);
    assert!(rows.iter().all(|r| r.seed == 7));
    let header = String::from_utf8(records(&a)).unwrap();
    assert!(header.starts_with(&RECORD_HEADER.join(",")));
    let summary = read_summary_csv(&Path::new(&a).join("summary.csv")).unwrap();
    assert!(summary.iter().any(|s| s.entity == "SI-avg"));
}

#[test]
fn single_window_gives_one_record_per_entity() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SCENARIO);
    let out = out_dir(tmp.path(), "one");
    let o = nhsim(&[
        "run",
        "--config",
        &cfg,
        "--windows",
        "1",
        "--policy",
        "cs",
        "--out",
        &out,
    ]);
    assert!(o.status.success());
    let rows = read_records_csv(&Path::new(&out).join("records.csv")).unwrap();
    assert_eq!(rows.len(), 2 + 3);
    assert!(rows
        .iter()
        .filter(|r| r.record.entity.to_string().starts_with("SI"))
        .all(|r| r.record.policy.as_str() == "CS"));
}

#[test]
fn invalid_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &SCENARIO.replace("total_mhz = 30", "total_mhz = 30\nreserved_mhz = 40"),
    );
    let out = out_dir(tmp.path(), "bad");
    let o = nhsim(&["run", "--config", &cfg, "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reserve"));
    assert!(!Path::new(&out).exists());

    let cfg = write_config(tmp.path(), &format!("{SCENARIO}\n[mno.1]\nbogus = 1\n"));
    assert_eq!(
        nhsim(&["run", "--config", &cfg, "--out", &out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(nhsim(&["run", "--out", &out]).status.code(), Some(2));
    assert!(!Path::new(&out).exists());
}

#[test]
fn preset_sweeps_write_expected_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "fig4");
    let o = nhsim(&[
        "sweep",
        "--preset",
        "fig4",
        "--windows",
        "200",
        "--out",
        &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_summary_csv(&Path::new(&out).join("summary.csv")).unwrap();
    let si1: Vec<_> = summary.iter().filter(|s| s.entity == "SI-I").collect();
    let policies: std::collections::BTreeSet<&str> =
        si1.iter().map(|s| s.policy.as_str()).collect();
    assert_eq!(policies, ["CS", "FR", "PR"].into_iter().collect());
    assert_eq!(si1.len(), 3 * 6);
    assert!(si1
        .iter()
        .all(|s| s.axis_name == "mno_user_count" && s.window_count == 200));
    let csv = fs::read_to_string(Path::new(&out).join("summary.csv")).unwrap();
    assert!(csv.starts_with(&SUMMARY_HEADER.join(",")));
    assert!(Path::new(&out)
        .join("records_mno_user_count_5_PR.csv")
        .exists());
    let svg = fs::read_to_string(Path::new(&out).join("chart.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);

    let out = out_dir(tmp.path(), "fig7");
    assert!(nhsim(&[
        "sweep",
        "--preset",
        "fig7",
        "--windows",
        "50",
        "--out",
        &out
    ])
    .status
    .success());
    let summary = read_summary_csv(&Path::new(&out).join("summary.csv")).unwrap();
    assert!(summary.iter().all(|s| s.policy == "PR"));
    assert!(
        summary.iter().any(|s| s.entity == "SI-I") && summary.iter().any(|s| s.entity == "SI-II")
    );
    assert!(summary.iter().all(|s| s.axis_name == "si1_principal_share"));
}

#[test]
fn custom_sweep_and_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SCENARIO);
    let out = out_dir(tmp.path(), "theta");
    let o = nhsim(&[
        "sweep",
        "--config",
        &cfg,
        "--axis",
        "policy_kind",
        "--values",
        "fr,pr,cs",
        "--out",
        &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(Path::new(&out).join("records_policy_kind_FR.csv").exists());

    let bad = out_dir(tmp.path(), "bad");
    for args in [
        vec![
            "sweep", "--config", &cfg, "--axis", "theta", "--values", "", "--out", &bad,
        ],
        vec![
            "sweep", "--config", &cfg, "--axis", "warp", "--values", "1", "--out", &bad,
        ],
        vec![
            "sweep", "--config", &cfg, "--axis", "theta", "--values", "40", "--out", &bad,
        ],
        vec!["sweep", "--preset", "fig9", "--out", &bad],
    ] {
        let o = nhsim(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert!(!Path::new(&bad).exists());
}

#[test]
fn out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SCENARIO);
    let out = out_dir(tmp.path(), "env");
    let o = Command::new(env!("CARGO_BIN_EXE_nhsim"))
        .args(["run", "--config", &cfg, "--windows", "3"])
        .env("SPECSIM_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(Path::new(&out).join("records.csv").exists());
}

#[test]
fn self_test_passes() {
    let o = nhsim(&["self-test"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() > 10 && !text.contains("FAIL"));
}

#[test]
fn full_rate_flag_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "strict");
    let o = nhsim(&[
        "sweep",
        "--preset",
        "fig8",
        "--strict-paper",
        "--windows",
        "5",
        "--out",
        &out,
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}
