use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use reqm::{epsilon, EfficiencyModel, Protocol, Scenario};

fn reqm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reqm"))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenario(name: &str) -> PathBuf {
    repo_root().join("scenarios").join(format!("{name}.toml"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn sweep_emits_six_traces_starting_at_zero() {
    let o = reqm()
        .args(["sweep", "--protocol", "both", "--alpha0L", "50,200,1000", "--gamma", "0:1:0.001"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("protocol,alpha0L,gamma,epsilon"));
    let mut traces: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    let mut optima = 0;
    for line in lines {
        if line.starts_with('#') {
            optima += 1;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        traces
            .entry((f[0].to_string(), f[1].to_string()))
            .or_default()
            .push((f[2].parse().unwrap(), f[3].parse().unwrap()));
    }
    assert_eq!(traces.len(), 6);
    assert_eq!(optima, 6);
    for pts in traces.values() {
        assert_eq!(pts.len(), 1001);
        assert_eq!(pts[0], (0.0, 0.0));
    }
}

#[test]
fn sweep_spot_check_matches_library() {
    let o = reqm()
        .args(["sweep", "--protocol", "recrib", "--alpha0L", "50", "--gamma", "0.05:0.05:0.01"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    let eps: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(eps, epsilon(&EfficiencyModel::new(Protocol::Recrib, 50.0, 0.05)));
}

#[test]
fn sweep_writes_file_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = reqm()
        .args(["sweep", "--gamma", "0:1:0.1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("protocol,alpha0L,gamma,epsilon\n"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn sweep_rejects_malformed_range() {
    let o = reqm().args(["sweep", "--gamma", "0:1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("start:stop:step"));
}

#[test]
fn dump_defaults_round_trips_and_matches_shipped_file() {
    let o = reqm().arg("dump-defaults").output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(Scenario::from_toml(&text).unwrap(), Scenario::recrib_ideal());
    assert_eq!(text, std::fs::read_to_string(scenario("recrib_ideal")).unwrap());
}

#[test]
fn simulate_recrib_ideal_is_efficient_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = reqm()
        .args(["simulate"])
        .arg(scenario("recrib_ideal"))
        .arg("--out")
        .arg(&a)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = std::fs::read_to_string(a.join("summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    let eps: f64 = row[5].parse().unwrap();
    assert!(eps >= 0.98, "efficiency {eps}");
    let o = reqm()
        .args(["simulate"])
        .arg(scenario("recrib_ideal"))
        .arg("--out")
        .arg(&b)
        .env("RAYON_NUM_THREADS", "4")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let (fa, fb) = (read_dir(&a), read_dir(&b));
    assert_eq!(
        fa.keys().collect::<Vec<_>>(),
        [
            "atoms_storage.csv",
            "audit.txt",
            "conditions.txt",
            "envelope.csv",
            "field_recall.csv",
            "field_storage.csv",
            "summary.csv"
        ]
    );
    assert!(fa == fb, "outputs differ between worker counts");
}

#[test]
fn strict_simulation_with_same_sign_detuning_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = reqm()
        .arg("simulate")
        .arg(fixture("broken_iv.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("iv"), "{}", stderr(&o));
}

#[test]
fn strict_flag_overrides_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let relaxed = std::fs::read_to_string(fixture("broken_iv.toml"))
        .unwrap()
        .replace("strict = true", "strict = false");
    let path = dir.path().join("relaxed.toml");
    std::fs::write(&path, relaxed).unwrap();
    let o = reqm()
        .arg("simulate")
        .arg(&path)
        .args(["--strict", "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn empty_scenario_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    std::fs::write(&path, "").unwrap();
    let o = reqm().arg("simulate").arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("parse error"), "{}", stderr(&o));
}

#[test]
fn check_solved_scenario_passes() {
    let o = reqm().arg("check").arg(scenario("recrib_strong_stark")).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("overall=pass"));
}

#[test]
fn check_reports_blocked_condition() {
    let o = reqm().arg("check").arg(fixture("broken_iv.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    let iii = text.lines().find(|l| l.starts_with("iii ")).unwrap();
    assert!(iii.ends_with("status=blocked"), "{iii}");
}

#[test]
fn check_reafc_timing_off_by_ten_percent() {
    let dir = tempfile::tempdir().unwrap();
    let t2 = 1.2 * std::f64::consts::PI;
    let text = std::fs::read_to_string(scenario("reafc_comb"))
        .unwrap()
        .replace("order = 1\n", &format!("order = 1\nt2 = {t2}\n"));
    let path = dir.path().join("late.toml");
    std::fs::write(&path, text).unwrap();
    let o = reqm().arg("check").arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("iii' ")).unwrap();
    let residual: f64 = line
        .split_whitespace()
        .find_map(|w| w.strip_prefix("residual="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((residual - 0.1).abs() < 1e-9, "{line}");
}

#[test]
fn echo_time_wraps_solver() {
    let o = reqm()
        .args(["echo-time", "--f1", "1", "--f2", "1", "--spacing", "0.5", "--t1"])
        .arg(std::f64::consts::PI.to_string())
        .output()
        .unwrap();
    assert!(o.status.success());
    let t2: f64 = stdout(&o).trim().parse().unwrap();
    assert!((t2 - 3.0 * std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn echo_time_rejects_non_causal_order() {
    let o = reqm()
        .args(["echo-time", "--f1", "1", "--f2", "1", "--t1", "10", "--spacing", "1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("non-causal"));
}
