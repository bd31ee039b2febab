use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[model]
side_length = 2.0
points_per_side = 32
dt = 1e-3
t_end = 0.05
a = 1.0
alpha = 0.02
alpha_prime = 0.1
beta = 1.5
sigma = 3.0
p = 6

[numerics]
record_stride = 10

[besov]
weight = { variant = "Exponential", mu = 1.0, delta = 0.4 }
trials = 4

[verify_solver]
seeds = 1
resubstitution_t_end = 0.02

[converge]
spacing = 0.125
m_list = [1.0, 2.0]
stack_dt = 0.05
t_window = [0.1, 0.4]
stack_alpha = 0.2
stack_alpha_prime = 0.3
seeds = 1
solutions = false
"#;

fn phi4lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phi4lab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn simulate_is_reproducible_and_writes_the_artifact_tree() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let mut metrics = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let o = phi4lab(&["simulate", "--config", &cfg, "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        for f in ["manifest.json", "metrics.csv", "report.json"] {
            assert!(out.join(f).is_file(), "{f}");
        }
        assert!(out.join("snapshots").is_dir());
        metrics.push(std::fs::read(out.join("metrics.csv")).unwrap());
    }
    assert_eq!(metrics[0], metrics[1]);
    let text = String::from_utf8(metrics[0].clone()).unwrap();
    assert_eq!(text.lines().next(), Some("realization,t,lp_norm,energy_residual,picard_iters"));
    assert!(text.lines().count() > 2);
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["manifest"]["root_seed"], 7);
}

#[test]
fn verify_besov_reports_every_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = phi4lab(&["verify-besov", "--config", &cfg, "--trials", "3", "--out", out.to_str().unwrap()]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let kinds: std::collections::BTreeSet<&str> =
        csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(kinds.len(), 12);
    for line in csv.lines().skip(1) {
        let ratio: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(ratio.is_finite() && ratio >= 0.0, "{line}");
    }
    assert!(report(&out)["results"].is_object());
}

#[test]
fn unknown_inequality_is_a_configuration_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = phi4lab(&["verify-besov", "--config", &cfg, "--kinds", "bernstein,nonsense", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_physics_is_a_configuration_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("sigma = 3.0\n", ""));
    let o = phi4lab(&["simulate", "--config", &cfg, "--out", tmp.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma"));
}

#[test]
fn converge_writes_one_row_per_order_and_side() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = phi4lab(&["converge", "--config", &cfg, "--m-list", "2,4,8", "--out", out.to_str().unwrap()]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,M,D,fit_exponent"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    for n in ["1", "2", "3"] {
        let ms: Vec<&str> = rows.iter().filter(|r| r[0] == n).map(|r| r[1]).collect();
        assert_eq!(ms, ["2", "4", "8"]);
    }
}

#[test]
fn solver_abort_has_its_own_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("dt = 1e-3", "dt = 0.5").replace("t_end = 0.05", "t_end = 5.0").replace("a = 1.0", "a = 50.0");
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let o = phi4lab(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(report(&out)["aborted_at"].is_number());
}

#[test]
fn failed_check_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("seeds = 1\nresub", "seeds = 1\nmin_residual_ratio = 100.0\nresub");
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let o = phi4lab(&["verify-solver", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&out)["passed"], false);
}

#[test]
fn bundled_configuration_is_used_without_a_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = phi4lab(&["verify-besov", "--kinds", "bernstein", "--trials", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&out)["config"]["model"]["points_per_side"], 128);
}
