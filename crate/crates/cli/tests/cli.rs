use std::fs;
use std::process::{Command, Output};

fn xxz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xxz")).args(args).output().expect("run xxz")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn sweep_writes_header_and_one_row_per_point() {
    let o = xxz(&["sweep", "--tier", "exact", "--n", "20", "--T", "0.1", "--grid", "b:0:1:5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tier,n,v,gamma,b,T,logZ,Sz,Sz2,S2,C,nC,EoF,status");
    assert_eq!(lines.len(), 6);
    assert!(lines[1..].iter().all(|l| l.starts_with("exact,20,") && l.ends_with(",ok")));
    assert!(!text.contains("NaN"));
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let args = ["sweep", "--tier", "cmfa", "--n", "50", "--grid", "b:0:1.5:7", "--grid", "T:0.02:0.5:6:log"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_xxz"))
            .args(args)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn bad_arguments_exit_with_two() {
    assert_eq!(xxz(&["sweep", "--T", "0.1", "--grid", "b:0:1:x"]).status.code(), Some(2));
    assert_eq!(xxz(&["sweep", "--T", "0.1", "--grid", "q:0:1:3"]).status.code(), Some(2));
    assert_eq!(xxz(&["concurrence", "--T", "0.1", "--gamma", "1.5"]).status.code(), Some(2));
    assert_eq!(xxz(&["concurrence", "--T", "0.1", "--tier", "exact", "--mode", "mfa"]).status.code(), Some(2));
    assert_eq!(xxz(&["concurrence"]).status.code(), Some(2));
    assert_eq!(xxz(&["figure", "--id", "9"]).status.code(), Some(2));
}

#[test]
fn breakdown_and_refusal_exit_codes() {
    let o = xxz(&["concurrence", "--tier", "cspa", "--T", "0.03"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).lines().nth(1).unwrap().ends_with(",,,breakdown"));
    let o = xxz(&["concurrence", "--tier", "bruteforce", "--n", "200", "--T", "0.1"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn mode_selects_the_variant() {
    let o = xxz(&["concurrence", "--tier", "cspa", "--mode", "spa", "--T", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("spa,"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# cmfa run\ntier = cmfa\nn = 100\nT = 0.1\nb = 0.2\nout-format = json\n").unwrap();
    let o = xxz(&["moments", "--config", cfg.to_str().unwrap(), "--b", "0.4"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = &doc["points"][0];
    assert_eq!(p["tier"], "cmfa");
    assert_eq!(p["n"], 100);
    assert_eq!(p["b"], 0.4);
    assert_eq!(p["status"], "ok");

    fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(xxz(&["moments", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn out_dir_receives_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = xxz(&["sweep", "--tier", "cmfa", "--T", "0.1", "--grid", "b:0:1:3", "--out-dir", d, "--out-format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(doc["points"].as_array().unwrap().len(), 3);
}

#[test]
fn limit_temperature_rows() {
    let o = xxz(&["limit-temp", "--tier", "cmfa", "--n", "100", "--grid", "b:0:1.2:3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tier,n,v,gamma,b,T_L,intervals,status");
    assert!(lines[1].ends_with(",ok"));
    assert!(lines[3].ends_with(",no-entanglement"));
}

#[test]
fn limit_field_single_point() {
    let o = xxz(&["limit-field", "--tier", "cmfa", "--n", "1000", "--T", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let b_l: f64 = row[5].parse().unwrap();
    assert!(b_l > 0.5 && b_l < 1.0, "{b_l}");
}

#[test]
fn compare_reports_differences() {
    let o = xxz(&["compare", "--tier", "exact", "--against", "cmfa", "--n", "100", "--T", "0.1", "--grid", "b:0:0.8:5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("max |dC|"));
}

#[test]
fn figure_one_writes_data_and_script() {
    let dir = tempfile::tempdir().unwrap();
    let o = xxz(&["figure", "--id", "1", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["fig1_T0.005.csv", "fig1_T0.025.csv", "fig1.gp"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let data = fs::read_to_string(dir.path().join("fig1_T0.005.csv")).unwrap();
    assert!(data.lines().count() > 441);
}
