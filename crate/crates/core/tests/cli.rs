use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lmmg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmmg"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

const CONFIG: &str = r#"{"instance":{"kind":"dummy-mdp","S":3,"A":2,"H":2,"d":2,"seed":3},"K":3,"num_seeds":2}"#;

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), CONFIG).unwrap();
    let out = lmmg(&["run", "--config", "c.json", "--out", "res", "--monitor"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("res/run_001.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0],
        "episode,gap,cum_regret,v_up_s1,v_lo_s1,conf_member,e1_margin,e2_margin"
    );

    let mut running = 0.0;
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 8);
        running += cols[1].parse::<f64>().unwrap();
        assert!((cols[2].parse::<f64>().unwrap() - running).abs() < 1e-12);
        assert!(cols[5] == "0" || cols[5] == "1");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("res/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["monitor"], true);
    assert_eq!(summary["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), CONFIG).unwrap();
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        assert!(lmmg(&["run", "--config", "c.json", "--seeds", "3"], dir.path())
            .status
            .success());
        let read = |name: &str| fs::read(dir.path().join("out").join(name)).unwrap();
        snapshots.push((read("run_000.csv"), read("run_002.csv"), read("summary.json")));
    }
    assert_eq!(snapshots[0], snapshots[1]);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), CONFIG.replace("\"K\":3", "\"K\":0")).unwrap();
    let out = lmmg(&["run", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`K`"));

    fs::write(dir.path().join("c.json"), CONFIG).unwrap();
    let out = lmmg(&["run", "--config", "c.json", "--algo", "turn-based"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = lmmg(&["run"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = lmmg(
        &[
            "gen",
            "--kind",
            "turn-based-random",
            "--out",
            "g.json",
            "-S",
            "3",
            "-A",
            "2",
            "-H",
            "2",
            "-d",
            "2",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = lmmg(&["validate", "--instance", "g.json"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok turn-based"));

    let config = r#"{"instance":{"kind":"file","path":"g.json"},"K":2,"algorithm":"turn-based"}"#;
    fs::write(dir.path().join("c.json"), config).unwrap();
    assert!(lmmg(&["run", "--config", "c.json"], dir.path()).status.success());
}

#[test]
fn invalid_instance_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    assert!(lmmg(
        &[
            "gen",
            "--kind",
            "linear-random",
            "--out",
            "g.json",
            "-S",
            "2",
            "-A",
            "2",
            "-B",
            "2",
            "-H",
            "1",
            "-d",
            "2"
        ],
        dir.path()
    )
    .status
    .success());
    let mut doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    doc["theta_star"][0][0] = serde_json::json!(5.0);
    fs::write(dir.path().join("g.json"), doc.to_string()).unwrap();
    let out = lmmg(&["validate", "--instance", "g.json"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_rejects_missing_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let out = lmmg(
        &["gen", "--kind", "linear-random", "--out", "g.json", "-S", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("g.json").exists());
}
