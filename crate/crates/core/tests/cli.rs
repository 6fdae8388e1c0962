use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn evolim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evolim"))
        .args(args)
        .env_remove("EVOLIM_OUT")
        .env_remove("EVOLIM_SEED")
        .output()
        .expect("binary runs")
}

fn scenario(grid_n: usize, resources: &str, initial: &str, solver: &str) -> String {
    format!(
        r#"name = "t"

[grid]
x_min = -10.0
x_max = 10.0
n = {grid_n}

[kernel]
family = "cos2"
radius = 1.0

{resources}

[initial]
{initial}

[solver]
{solver}

[output]
snapshot_every = 5
"#
    )
}

const GAUSSIAN: &str = r#"[[resources]]
family = "gaussian"
amplitude = 2.0
center = 0.0
width = 1.0"#;

const WELL: &str = r#"profile = "well"
center = 0.0"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn last_row(csv: &Path) -> Vec<f64> {
    let text = fs::read_to_string(csv).unwrap();
    text.lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect()
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

#[test]
fn malformed_scenarios_exit_2_without_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let text = scenario(
        401,
        GAUSSIAN,
        WELL,
        "kind = \"eps\"\neps = [0.1]\nt_end = 1.0\nbogus = 1",
    );
    let path = write(tmp.path(), "bad.scenario", &text);
    let o = evolim(&["--out", s(&out), "run", s(&path)]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(err["status"], "error");
    assert_eq!(err["exit_code"], 2);
    assert!(!out.exists());

    let missing = evolim(&["run", s(&tmp.path().join("nope.scenario"))]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn validate_reports_model_violations() {
    let tmp = TempDir::new().unwrap();
    let flat = r#"[[resources]]
family = "constant"
value = 2.0"#;
    let path = write(
        tmp.path(),
        "flat.scenario",
        &scenario(401, flat, WELL, "kind = \"limit\"\nt_end = 1.0"),
    );
    let o = evolim(&["validate", s(&path)]);
    assert_eq!(o.status.code(), Some(2));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["passed"], false);
    assert!(!r["errors"].as_array().unwrap().is_empty());

    // two identical resources are legal but not invertible
    let twice = format!("{GAUSSIAN}\n\n{GAUSSIAN}");
    let path = write(
        tmp.path(),
        "twice.scenario",
        &scenario(401, &twice, WELL, "kind = \"limit\"\nt_end = 1.0"),
    );
    let o = evolim(&["validate", s(&path)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["passed"], true);
    assert!(!r["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn bundled_single_resource_settles_near_one_half() {
    let tmp = TempDir::new().unwrap();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/single_resource.scenario");
    let out = tmp.path().join("single");
    let o = evolim(&["--out", s(&out), "run", s(&path)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let i = summary["final_resources"][0].as_f64().unwrap();
    assert!((0.45..=0.55).contains(&i), "{i}");
    let row = last_row(&out.join("series.csv"));
    assert_eq!(row[0], 5.0);
    assert_eq!(row[1], i);
    for f in ["manifest.toml", "measures.toml", "snapshot_00000.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest: toml::Table = fs::read_to_string(out.join("manifest.toml"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(manifest["result"]["status"].as_str(), Some("completed"));
    assert_eq!(
        manifest["scenario"]["name"].as_str(),
        Some("single_resource")
    );
}

#[test]
fn sweep_and_report() {
    let tmp = TempDir::new().unwrap();
    let path = write(
        tmp.path(),
        "sweep.scenario",
        &scenario(
            401,
            GAUSSIAN,
            WELL,
            "kind = \"sweep\"\neps = [0.05, 0.2, 0.1]\nt_end = 1.0\noutput_interval = 0.1",
        ),
    );
    let out = tmp.path().join("sweep");
    let o = evolim(&["--out", s(&out), "--threads", "2", "sweep", s(&path)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = fs::read_to_string(out.join("sweep_report.csv")).unwrap();
    let rows: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    // sorted by decreasing eps
    let eps: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(eps, vec![0.2, 0.1, 0.05]);
    for d in ["eps_0.2", "eps_0.1", "eps_0.05", "limit"] {
        assert!(out.join(d).join("series.csv").exists(), "{d}");
    }
    let o = evolim(&["report", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(
        text.contains("sup_norm_gap") && text.contains("concentration_width"),
        "{text}"
    );

    let o = evolim(&["report", s(tmp.path())]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn outputs_do_not_depend_on_threads_or_paths() {
    let tmp = TempDir::new().unwrap();
    let path = write(
        tmp.path(),
        "det.scenario",
        &scenario(
            401,
            GAUSSIAN,
            WELL,
            "kind = \"eps\"\neps = [0.2, 0.1]\nt_end = 0.5\noutput_interval = 0.1",
        ),
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("nested/b");
    assert_eq!(
        evolim(&["--out", s(&a), "--threads", "1", "run", s(&path)])
            .status
            .code(),
        Some(0)
    );
    let o = Command::new(env!("CARGO_BIN_EXE_evolim"))
        .args(["run", s(&path)])
        .env("EVOLIM_OUT", &b)
        .env("EVOLIM_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let (ta, tb) = (tree(&a), tree(&b));
    assert!(ta.len() > 4);
    assert_eq!(ta, tb);
}

#[test]
fn snapshots_round_trip_as_custom_profiles() {
    let tmp = TempDir::new().unwrap();
    let first = write(
        tmp.path(),
        "first.scenario",
        &scenario(
            401,
            GAUSSIAN,
            WELL,
            "kind = \"limit\"\nt_end = 0.5\noutput_interval = 0.1",
        ),
    );
    let out = tmp.path().join("first");
    assert_eq!(
        evolim(&["--out", s(&out), "run", s(&first)]).status.code(),
        Some(0)
    );
    let snap = out.join("snapshot_00005.csv");
    assert!(snap.exists());

    let custom = format!("profile = \"custom\"\npath = \"{}\"", snap.display());
    let second = write(
        tmp.path(),
        "second.scenario",
        &scenario(
            401,
            GAUSSIAN,
            &custom,
            "kind = \"limit\"\nt_end = 0.5\noutput_interval = 0.1",
        ),
    );
    let out2 = tmp.path().join("second");
    let o = evolim(&["--out", s(&out2), "run", s(&second)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let a = fs::read_to_string(&snap).unwrap();
    let b = fs::read_to_string(out2.join("snapshot_00000.csv")).unwrap();
    let phi = |t: &str| -> Vec<f64> {
        t.lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let (pa, pb) = (phi(&a), phi(&b));
    let shift = pa.iter().cloned().fold(f64::MIN, f64::max);
    for (x, y) in pa.iter().zip(&pb) {
        assert!((x - shift - y).abs() < 1e-12);
    }
}

#[test]
fn blow_up_exits_3_and_keeps_the_partial_series() {
    let tmp = TempDir::new().unwrap();
    let path = write(
        tmp.path(),
        "blow.scenario",
        &scenario(
            801,
            GAUSSIAN,
            WELL,
            "kind = \"eps\"\neps = [0.05]\nt_end = 10.0\noutput_interval = 10.0\ndt = 0.7",
        ),
    );
    let out = tmp.path().join("blow");
    let o = evolim(&["--out", s(&out), "run", s(&path)]);
    assert_eq!(o.status.code(), Some(3));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert!(err["t"].as_f64().unwrap() > 0.0);
    assert!(out.join("series.csv").exists());
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("blown_up"), "{manifest}");
}
