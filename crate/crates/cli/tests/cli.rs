use std::path::Path;
use std::process::Command;

const FIG: &str = "seed = 11\n\n[model]\nbeta = 0.4\ngamma = 0.35\ndelta = 2.5\nGamma = 1.0\ndim = 2\n\n[generate]\nn = 60\n";

fn darcm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_darcm")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn run_ok(args: &[&str]) {
    let o = darcm(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig.toml", FIG);
    for out in ["a", "b"] {
        run_ok(&["generate", "--config", &cfg, "--out", dir.path().join(out).to_str().unwrap()]);
    }
    for f in ["vertices.csv", "edges.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
    let vertices = std::fs::read_to_string(dir.path().join("a/vertices.csv")).unwrap();
    assert!(vertices.starts_with("id,x0,x1,birth\n"));
    assert_eq!(vertices.lines().count(), 61);
    let edges = std::fs::read_to_string(dir.path().join("a/edges.csv")).unwrap();
    assert!(edges.starts_with("src,dst,kind\n"));
    assert!(edges.lines().skip(1).all(|l| l.ends_with(",forward") || l.ends_with(",reciprocal")));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig.toml", FIG);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&["generate", "--config", &cfg, "--out", a.to_str().unwrap()]);
    run_ok(&["generate", "--config", &cfg, "--seed", "12", "--out", b.to_str().unwrap()]);
    assert_ne!(std::fs::read(a.join("vertices.csv")).unwrap(), std::fs::read(b.join("vertices.csv")).unwrap());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(b.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 12);
}

#[test]
fn report_round_trips_and_lists_relative_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[model]\nbeta = 0.5\ngamma = 0.4\ndelta = 2.0\nGamma = 0.3\ndim = 1\n\n[degrees]\nsource = \"palm\"\nsamples = 20000\n";
    let cfg = write_config(dir.path(), "deg.toml", text);
    let out = dir.path().join("deg");
    run_ok(&["degrees", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "2"]);
    let raw = std::fs::read_to_string(out.join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&raw).unwrap();
    assert_eq!(v["schema_version"], 1);
    let again: serde_json::Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);
    for a in v["artifacts"].as_array().unwrap() {
        let p = a["path"].as_str().unwrap();
        assert!(Path::new(p).is_relative());
        assert!(out.join(p).is_file());
    }
    let hist = std::fs::read_to_string(out.join("indegree.csv")).unwrap();
    assert!(hist.starts_with("k,count,frequency\n"));
    run_ok(&["report", out.join("report.json").to_str().unwrap()]);
}

#[test]
fn percolate_writes_survival_curve() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[model]\nbeta = 1.0\ngamma = 0.6\ndelta = 2.0\nGamma = 0.0\ndim = 1\n\n[percolate]\nbetas = [0.1, 1.0]\nvolume = 2000.0\nreps = 20\nthreshold = 50\n";
    let cfg = write_config(dir.path(), "p.toml", text);
    let out = dir.path().join("p");
    run_ok(&["percolate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let csv = std::fs::read_to_string(out.join("survival.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("beta,survival,ci_low,ci_high,reps,volume,threshold"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn unknown_key_exits_one_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &format!("{FIG}colour = \"red\"\n"));
    let o = darcm(&["generate", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:12:"), "{err}");
    assert!(err.contains("colour"), "{err}");
}

#[test]
fn invalid_parameter_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &FIG.replace("gamma = 0.35", "gamma = 1.5"));
    let o = darcm(&["generate", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.toml:"));
}

#[test]
fn missing_section_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", "[model]\nbeta = 1.0\ngamma = 0.5\ndelta = 2.0\nGamma = 0.0\ndim = 1\n");
    let o = darcm(&["cluster", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_single_criterion_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.toml", "[validate]\ncriteria = [7, 11]\n");
    let out = dir.path().join("v");
    let o = darcm(&["validate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("criterion  7: PASS"), "{stdout}");
    assert!(stdout.contains("criterion 11: PASS"), "{stdout}");
}
