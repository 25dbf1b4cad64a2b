use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn holoflow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holoflow"))
        .args(args)
        .current_dir(dir)
        .env("HOLOFLOW_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn center_report_is_deterministic_and_valid() {
    let d = tempfile::tempdir().unwrap();
    let args = |n: &str| {
        vec![
            "separatrices".to_string(),
            "i*x*(x-1)".to_string(),
            "--window".to_string(),
            "-2,-2,3,2".to_string(),
            "--res".to_string(),
            "24,20".to_string(),
            "--json".to_string(),
            format!("{n}.json"),
            "--svg".to_string(),
            format!("{n}.svg"),
            "--strict".to_string(),
        ]
    };
    for n in ["a", "b"] {
        let a = args(n);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        let o = holoflow(&a, d.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ja = fs::read(d.path().join("a.json")).unwrap();
    let jb = fs::read(d.path().join("b.json")).unwrap();
    assert_eq!(ja, jb);
    assert_eq!(
        fs::read(d.path().join("a.svg")).unwrap(),
        fs::read(d.path().join("b.svg")).unwrap()
    );
    let v: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    let reps = v.as_array().unwrap();
    assert_eq!(reps.len(), 2);
    for r in reps {
        holoflow_core::report::validate_configuration(r).unwrap();
        let budget = r["theorem_verdicts"]
            .as_array()
            .unwrap()
            .iter()
            .find(|t| t["name"] == "center.transit_budget")
            .unwrap();
        assert_eq!(budget["pass"], true);
        let tau = r["separatrices"][0]["transit_time"].as_f64().unwrap();
        assert!((tau - 2.0 * std::f64::consts::PI).abs() < 1e-3);
    }
    // no temporary files are left behind
    let leftovers = fs::read_dir(d.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains(".tmp-"))
        .count();
    assert_eq!(leftovers, 0);
}

#[test]
fn orbit_csv_ends_near_blow_up() {
    let d = tempfile::tempdir().unwrap();
    let o = holoflow(
        &["orbit", "x^2", "--from", "1", "--dir", "forward", "--csv", "orb.csv"],
        d.path(),
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("blow-up at t*"));
    let csv = fs::read_to_string(d.path().join("orb.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,re,im"));
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((last[0] - 1.0).abs() < 1e-6, "{last:?}");
    // z(t) = 1/(1-t), compared where 1-t is well above the step error
    for row in csv.lines().skip(1) {
        let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        if v[1] <= 1e4 {
            assert!((v[1] * (1.0 - v[0]) - 1.0).abs() < 1e-6, "{v:?}");
        }
    }
}

#[test]
fn sweep_reports_configuration_change() {
    let d = tempfile::tempdir().unwrap();
    let o = holoflow(
        &[
            "sweep",
            "exp(i*A)*(x-1)^2*(x+1)^2",
            "--window",
            "-3,-3,3,3",
            "--res",
            "40",
            "--param",
            "A=0,0.7853981633974483,1.5707963267948966,2.356194490192345",
            "--json",
            "sweep.json",
        ],
        d.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(d.path().join("sweep.json")).unwrap()).unwrap();
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    for (k, e) in entries.iter().enumerate() {
        let s = &e["summary"];
        if k == 2 {
            assert_eq!(s["double"], 1);
            let marks = e["double_marks"][0]["passes_through"].as_array().unwrap();
            assert!(marks.iter().any(|m| m == "i"));
        } else {
            assert_eq!((s["positive"].as_u64(), s["negative"].as_u64()), (Some(3), Some(3)));
        }
        for r in e["reports"].as_array().unwrap() {
            holoflow_core::report::validate_configuration(r).unwrap();
        }
    }
    assert_eq!(v["changes"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let code = |a: &[&str]| holoflow(a, d.path()).status.code();
    assert_eq!(code(&["equilibria", "x^2-1"]), Some(0));
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(code(&["equilibria", "x^^2"]), Some(1));
    assert_eq!(code(&["equilibria", "x", "--window", "1,1,0,0"]), Some(1));
    assert_eq!(code(&["separatrices", "x^2", "--res", "8,8"]), Some(1));
    assert_eq!(code(&["sweep", "x^2", "--param", "A"]), Some(1));
    // a vanishing field has no isolated equilibria
    assert_eq!(code(&["equilibria", "0*x"]), Some(2));
}

#[test]
fn strict_verdict_failure_exits_three() {
    let d = tempfile::tempdir().unwrap();
    // a time budget shorter than the blow-up times leaves the sector's
    // boundary orbits unresolved
    let o = holoflow(
        &["separatrices", "x^2", "--res", "16", "--budget", "0.5", "--strict"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn equilibria_json_lists_classes() {
    let d = tempfile::tempdir().unwrap();
    let o = holoflow(&["equilibria", "1+x^2", "--window", "-3,-3,3,3", "--json", "e.json"], d.path());
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(d.path().join("e.json")).unwrap()).unwrap();
    let eqs = v["equilibria"].as_array().unwrap();
    assert_eq!(eqs.len(), 2);
    assert!(eqs.iter().all(|e| e["class"] == "Center"));
    let p = eqs[0]["period"].as_f64().unwrap();
    assert!((p - std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn verify_table_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = holoflow(&["verify", "--strict", "--json", "v.json"], d.path());
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(!out.contains("FAIL"));
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(d.path().join("v.json")).unwrap()).unwrap();
    assert!(v.as_array().unwrap().iter().all(|r| r["pass"] == true));
}
