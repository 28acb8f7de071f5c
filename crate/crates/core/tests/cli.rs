use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simplicial"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const K4: &str = "1 2\n1 3\n1 4\n2 3\n2 4\n3 4\n";

#[test]
fn summarize_k3_and_empty() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "k3.txt", "a 0 1\n");
    let o = run(&["summarize", "k3.txt"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    write(tmp.path(), "k3.txt", "0 1\n1 2\n2 0\n");
    let o = run(&["summarize", "k3.txt"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let row: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(row["nodes"], 3);
    assert_eq!(row["edges"], 3);
    assert_eq!(row["avg_cc"], 1.0);

    write(tmp.path(), "empty.txt", "");
    let o = run(&["summarize", "empty.txt"], tmp.path());
    assert_ne!(o.status.code(), Some(0));
    let row: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((row["nodes"].as_u64(), row["edges"].as_u64()), (Some(0), Some(0)));
    assert_eq!(row["error"], "empty graph");

    let o = run(&["summarize", "missing.txt"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn census_rows() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "k4.txt", K4);
    write(tmp.path(), "c5.txt", "0 1\n1 2\n2 3\n3 4\n4 0\n");
    let o = run(&["census", "k4.txt", "--kind", "s"], tmp.path());
    assert_eq!(stdout(&o), "factor,count,freq\n2,6,1.0\n");
    let o = run(&["census", "k4.txt", "--kind", "t", "--units", "units.csv"], tmp.path());
    assert_eq!(stdout(&o), "factor,count,freq\n0,4,1.0\n");
    let units = std::fs::read_to_string(tmp.path().join("units.csv")).unwrap();
    assert_eq!(units.lines().count(), 5);
    assert!(units.starts_with("a,b,c,factor\n"));
    let o = run(&["census", "c5.txt", "--kind", "t"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no triangles"));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["census", "x.txt", "--kind", "q"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["frobnicate"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["generate", "--n", "10", "--m", "4", "--n0", "2"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["--help"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn generate_calibrate_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &["generate", "--n", "800", "--m", "2", "--pt", "0.5", "--seed", "17", "--out", "g.txt"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(tmp.path().join("g.txt")).unwrap();
    assert_eq!(text.lines().count(), 3 + 2 * 797);
    let again = run(&["generate", "--n", "800", "--m", "2", "--pt", "0.5", "--seed", "17"], tmp.path());
    assert_eq!(stdout(&again), text);

    let o = run(&["calibrate", "--n", "800", "--m", "2", "--target", "0.99"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unreachable"));
    let o = run(
        &["calibrate", "--n", "800", "--m", "2", "--target", "0.2", "--tolerance", "0.02", "--seed", "3"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r["achieved_cc"].as_f64().unwrap() - 0.2).abs() <= 0.02);

    let o = run(&["census", "g.txt", "--kind", "t", "--out", "t.csv"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["fit", "t.csv", "--model", "emg", "--curve", "curve.csv"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let fit: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["model", "params", "sse", "mnd", "support_min", "support_max", "converged", "restarts"] {
        assert!(fit.get(key).is_some(), "missing {key}");
    }
    assert_eq!(fit["model"], "emg");
    let curve = std::fs::read_to_string(tmp.path().join("curve.csv")).unwrap();
    assert!(curve.starts_with("x,model\n"));

    write(tmp.path(), "tiny.csv", "factor,count,freq\n0,1,0.5\n1,1,0.5\n");
    let o = run(&["fit", "tiny.csv", "--model", "s"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
}
