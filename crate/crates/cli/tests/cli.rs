//! End-to-end runs of the `qotto` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn qotto(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qotto"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_config(dir: &TempDir, body: &str) -> String {
    let path = dir.path().join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<String> {
    let k = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].clone()).collect()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn decoupled_cycle_reports_summary_and_ledger() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("otto_benchmark.toml");
    let out = qotto(
        dir.path(),
        &[
            "cycle",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "ledger.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let line = stdout(&out);
    assert!(line.contains("mode=engine"), "{line}");
    assert!(line.contains("eta=0.531662"), "{line}");
    let (header, rows) = table(&dir.path().join("ledger.csv"));
    assert_eq!(header[..3], ["n", "W1", "W2"]);
    assert_eq!(rows.len(), 1);
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[model]\nJ1 = 1.0\ngamma_x = 0.3\n");
    let out = qotto(dir.path(), &["cycle", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gamma_x") && err.contains("line 3"), "{err}");
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = TempDir::new().unwrap();
    for body in [
        "[model]\ntau = -1.0\n",
        "[cycle]\nn_cycles = 0\n",
        "[sweep]\nvariable = \"nope\"\nvalues = [1.0]\n",
        "[sweep]\nvariable = \"tau\"\nvalues = [1.0, -2.0]\n",
        "[cycle]\nbath = \"always_on\"\nthermalization = \"exact_gibbs\"\n",
    ] {
        let cfg = write_config(&dir, body);
        let cmd = if body.contains("[sweep]") {
            "sweep"
        } else {
            "cycle"
        };
        let out = qotto(dir.path(), &[cmd, "--config", &cfg]);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{body}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = qotto(dir.path(), &["cycle", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn impossible_outcome_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "[model]\nT = 0.001\ng = 0.0\n[cycle]\nengine = \"A\"\nbasis = \"proj11\"\n",
    );
    let out = qotto(dir.path(), &["cycle", "--config", &cfg]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn many_cycle_run_writes_thirty_rows_and_vertices() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("many_cycles.toml");
    let out = qotto(
        dir.path(),
        &[
            "cycle",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "many.csv",
            "--json",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = table(&dir.path().join("many.csv"));
    assert_eq!(rows.len(), 30);
    let d: Vec<f64> = column(&header, &rows, "D_n")
        .iter()
        .skip(1)
        .map(|s| s.parse().unwrap())
        .collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0]));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("many.json")).unwrap()).unwrap();
    assert_eq!(json["ledgers"].as_array().unwrap().len(), 30);
    let vertices: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("many_cycles_vertices.json")).unwrap(),
    )
    .unwrap();
    for label in ["A", "B", "C", "D", "PM"] {
        assert_eq!(vertices[label]["re"].as_array().unwrap().len(), 16);
    }
}

#[test]
fn tau_sweep_has_constant_efficiency() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("tau_sweep.toml");
    let out = qotto(
        dir.path(),
        &[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "sweep.csv",
            "--jobs",
            "2",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = table(&dir.path().join("sweep.csv"));
    assert_eq!(header[0], "tau");
    let taus: Vec<f64> = column(&header, &rows, "tau")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(taus, [1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0]);
    let eta: Vec<f64> = column(&header, &rows, "eta")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert!(eta.iter().all(|e| (e - eta[0]).abs() < 1e-6));
}

#[test]
fn single_value_sweep_matches_cycle() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "[model]\nJ1 = 1.5\n[cycle]\nengine = \"A\"\n[sweep]\nvariable = \"J1\"\nvalues = [1.5]\n",
    );
    assert!(
        qotto(dir.path(), &["sweep", "--config", &cfg, "--out", "s.csv"])
            .status
            .success()
    );
    assert!(
        qotto(dir.path(), &["cycle", "--config", &cfg, "--out", "c.csv"])
            .status
            .success()
    );
    let (sh, sr) = table(&dir.path().join("s.csv"));
    let (ch, cr) = table(&dir.path().join("c.csv"));
    assert_eq!(sr.len(), 1);
    for name in &ch {
        assert_eq!(column(&sh, &sr, name), column(&ch, &cr, name), "{name}");
    }
}

#[test]
fn output_is_byte_identical_across_runs_and_job_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "[model]\ng = 0.75\ndelta1 = 1.0\n[cycle]\nengine = \"B\"\n[sweep]\nvariable = \"J1\"\nvalues = [-1.0, 2.0, 8.0]\n",
    );
    let cfg = cfg.as_str();
    assert!(qotto(
        dir.path(),
        &["sweep", "--config", cfg, "--out", "a.csv", "--jobs", "1"]
    )
    .status
    .success());
    assert!(qotto(
        dir.path(),
        &["sweep", "--config", cfg, "--out", "b.csv", "--jobs", "3"]
    )
    .status
    .success());
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn spectrum_flags_the_level_crossing() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("spectrum_crossing.toml");
    let out = qotto(
        dir.path(),
        &[
            "spectrum",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "spec.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let line = stdout(&out);
    assert!(line.contains("E0@B="), "{line}");
    let (header, rows) = table(&dir.path().join("spec.csv"));
    assert_eq!(header[..5], ["B", "E0", "E1", "E2", "E3"]);
    assert_eq!(rows.len(), 21);

    let cfg = configs().join("spectrum_avoided.toml");
    let out = qotto(
        dir.path(),
        &[
            "spectrum",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "avoided.csv",
        ],
    );
    assert!(out.status.success());
    // Upper levels still cross; the ground level does not.
    assert!(!stdout(&out).contains("E0@"), "{}", stdout(&out));
}

#[test]
fn transitions_rows_are_stochastic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "[model]\nJ1 = 2.0\ng = 0.75\ndelta1 = 1.0\n[transitions]\ntaus = [0.5, 5.0]\nlevels = [0, 1]\n",
    );
    let out = qotto(dir.path(), &["transitions", "--config", &cfg, "--json"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for m in json.as_array().unwrap() {
        for row in m["p"].as_array().unwrap() {
            let s: f64 = row
                .as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_f64().unwrap())
                .sum();
            assert!((s - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn csv_goes_to_stdout_without_a_path() {
    let dir = TempDir::new().unwrap();
    let out = qotto(dir.path(), &["cycle"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("n,W1,W2,W_tot"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mode="));
}

#[test]
fn every_shipped_config_runs() {
    let dir = TempDir::new().unwrap();
    let mut names: Vec<PathBuf> = fs::read_dir(configs())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    names.sort();
    for path in names {
        let doc = fs::read_to_string(&path).unwrap();
        let cmd = if doc.contains("[sweep]") {
            "sweep"
        } else if doc.contains("[spectrum]") {
            "spectrum"
        } else if doc.contains("[transitions]") {
            "transitions"
        } else {
            "cycle"
        };
        let start = std::time::Instant::now();
        let out = qotto(
            dir.path(),
            &[cmd, "--config", path.to_str().unwrap(), "--out", "o.csv"],
        );
        assert!(
            out.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(
            start.elapsed().as_secs() < 60,
            "{} took {:?}",
            path.display(),
            start.elapsed()
        );
    }
}
