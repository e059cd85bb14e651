use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FORMULA: &str = "p cnf 3 4\n1 2 3 0\n1 2 -3 0\n-1 -2 3 0\n-1 -2 -3 0\n";

fn hedonic(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hedonic"))
        .current_dir(dir)
        .env_remove("HEDONIC_TIMEOUT_SECS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn reduce_then_solve_yields_satisfying_assignment() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "f.cnf", FORMULA);
    for target in ["path", "forest"] {
        let o = hedonic(
            d,
            &["reduce", "--cnf", "f.cnf", "--target", target, "--out", "inst.json"],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let inst: Value = serde_json::from_str(&std::fs::read_to_string(d.join("inst.json")).unwrap()).unwrap();
        assert_eq!(inst["players"], 31);

        let o = hedonic(d, &["solve-consistency", "--instance", "inst.json"]);
        assert_eq!(code(&o), 0);
        let sol = stdout_json(&o);
        assert_eq!(sol["status"], "found");
        assert_eq!(sol["ordering"].as_array().unwrap().len(), 31);
        let a: Vec<bool> = serde_json::from_value(sol["assignment"].clone()).unwrap();
        // Clauses (x1|x2|x3), (x1|x2|~x3), (~x1|~x2|x3), (~x1|~x2|~x3).
        assert!(a[0] != a[1], "{a:?}");
    }
}

#[test]
fn non_b2_formula_is_a_domain_error() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "bad.cnf",
        "p cnf 3 4\n1 2 3 0\n1 2 -3 0\n-1 -2 3 0\n-1 1 -3 0\n",
    );
    let o = hedonic(tmp.path(), &["reduce", "--cnf", "bad.cnf"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(3,B2)"));
}

#[test]
fn capacity_and_timeout_exit_with_three() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "f.cnf", FORMULA);
    assert_eq!(
        code(&hedonic(d, &["reduce", "--cnf", "f.cnf", "--out", "inst.json"])),
        0
    );
    let o = hedonic(
        d,
        &["solve-consistency", "--instance", "inst.json", "--method", "bruteforce"],
    );
    assert_eq!(code(&o), 3);

    let o = Command::new(env!("CARGO_BIN_EXE_hedonic"))
        .current_dir(d)
        .env("HEDONIC_TIMEOUT_SECS", "0.000000001")
        .args(["solve-consistency", "--instance", "inst.json"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
    assert_eq!(stdout_json(&o)["status"], "unknown");
}

#[test]
fn plain_instances_use_both_methods() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(
        d,
        "inst.json",
        r#"{"n":4,"target":"path","samples":[
            {"vertices":[0,2],"label":1},{"vertices":[1,2],"label":1},{"vertices":[0,1,3],"label":0}]}"#,
    );
    for method in ["backtrack", "bruteforce"] {
        let o = hedonic(d, &["solve-consistency", "--instance", "inst.json", "--method", method]);
        assert_eq!(code(&o), 0);
        let sol = stdout_json(&o);
        assert_eq!(sol["status"], "found");
        assert!(sol.get("assignment").is_none());
    }
    write(
        d,
        "forest.json",
        r#"{"n":3,"samples":[{"vertices":[0,1,2],"label":1},{"vertices":[0,2],"label":0}]}"#,
    );
    let o = hedonic(
        d,
        &[
            "solve-consistency",
            "--instance",
            "forest.json",
            "--method",
            "bruteforce",
        ],
    );
    assert_eq!(stdout_json(&o)["forest"]["edges"], serde_json::json!([[0, 1], [1, 2]]));
}

#[test]
fn counterexample_files_feed_check() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let o = hedonic(d, &["counterexample", "--k", "4", "--out", "ce"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["disjoint"], true);
    for f in ["gamma1.json", "gamma2.json", "D.json"] {
        assert!(d.join("ce").join(f).exists(), "{f}");
    }
    write(d, "pi.json", r#"{"blocks":[[0],[1],[2],[3]]}"#);
    let args = [
        "check",
        "--partition",
        "pi.json",
        "--distribution",
        "ce/D.json",
        "--game",
    ];
    let o = hedonic(d, &[&args[..], &["ce/gamma2.json"]].concat());
    let r = stdout_json(&o);
    assert_eq!(r["blocking_probability"], 1.0);
    assert_eq!(r["blockers"].as_array().unwrap().len(), 3);
    let o = hedonic(d, &[&args[..], &["ce/gamma1.json"]].concat());
    assert_eq!(stdout_json(&o)["blocking_probability"], 0.0);

    write(d, "short.json", r#"{"blocks":[[0],[1],[2]]}"#);
    let o = hedonic(
        d,
        &[
            "check",
            "--partition",
            "short.json",
            "--distribution",
            "ce/D.json",
            "--game",
            "ce/gamma1.json",
        ],
    );
    assert_eq!(code(&o), 1);

    assert_eq!(code(&hedonic(d, &["counterexample", "--k", "3"])), 1);
}

#[test]
fn experiment_csv_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let args = [
        "experiment",
        "--n",
        "7",
        "--trials",
        "5",
        "--format",
        "csv",
        "--seed",
        "9",
    ];
    let a = hedonic(d, &args);
    let b = hedonic(d, &args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("trial,seed,n,m,epsilon,delta,blocking_prob,pass\n"));
    assert_eq!(text.lines().count(), 6);

    let o = hedonic(d, &["experiment", "--n", "6", "--trials", "2", "--out", "r.json"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(r["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn stabilize_rejects_cycles_and_short_sample_lists() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(
        d,
        "cyc.json",
        r#"{"graph":{"n":3,"edges":[[0,1],[1,2],[0,2]]},"utilities":{"type":"hashed","seed":1}}"#,
    );
    write(
        d,
        "path.json",
        r#"{"graph":{"n":3,"edges":[[0,1],[1,2]]},"utilities":{"type":"hashed","seed":1}}"#,
    );
    write(d, "s.json", r#"[{"coalition":[1,2],"values":{"1":0.5,"2":0.25}}]"#);
    let base = ["--samples", "s.json", "--epsilon", "0.5", "--delta", "0.5"];
    let o = hedonic(
        d,
        &[&["stabilize", "--game", "cyc.json", "--force"][..], &base].concat(),
    );
    assert_eq!(code(&o), 2);
    let o = hedonic(d, &[&["stabilize", "--game", "path.json"][..], &base].concat());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("insufficient samples"));
    let o = hedonic(
        d,
        &[&["stabilize", "--game", "path.json", "--force"][..], &base].concat(),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["blocks"], serde_json::json!([[0], [1, 2]]));
}

#[test]
fn infer_forest_and_shatter() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(
        d,
        "ok.json",
        r#"[{"vertices":[0,1],"label":1},{"vertices":[1,2],"label":1}]"#,
    );
    let o = hedonic(d, &["infer-forest", "--samples", "ok.json", "--n", "3"]);
    assert_eq!(stdout_json(&o)["edges"], serde_json::json!([[0, 1], [1, 2]]));
    write(
        d,
        "tri.json",
        r#"[{"vertices":[0,1],"label":1},{"vertices":[1,2],"label":1},{"vertices":[0,2],"label":1}]"#,
    );
    assert_eq!(
        code(&hedonic(d, &["infer-forest", "--samples", "tri.json", "--n", "3"])),
        2
    );

    write(d, "g.json", r#"{"n":3,"edges":[[0,1],[1,2]]}"#);
    write(
        d,
        "l.json",
        r#"[{"coalition":[0,1],"label":true},{"coalition":[0,1,2],"label":false}]"#,
    );
    let o = hedonic(
        d,
        &["shatter", "--graph", "g.json", "--player", "1", "--labels", "l.json"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["utilities"]["type"], "table");
    write(d, "l2.json", r#"[{"coalition":[0,2],"label":true}]"#);
    assert_eq!(
        code(&hedonic(
            d,
            &["shatter", "--graph", "g.json", "--player", "0", "--labels", "l2.json"]
        )),
        1
    );
}

#[test]
fn stabilize_unknown_reports_partition_and_forest() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let stream: Vec<Value> = (0..400)
        .map(|i| {
            let (c, v) = match i % 3 {
                0 => (vec![0, 1], serde_json::json!({"0": 1.0, "1": 1.0})),
                1 => (vec![1, 2], serde_json::json!({"1": -1.0, "2": 0.5})),
                _ => (vec![2], serde_json::json!({"2": 0.0})),
            };
            serde_json::json!({"coalition": c, "values": v, "connected": true})
        })
        .collect();
    write(d, "stream.json", &serde_json::to_string(&stream).unwrap());
    let o = hedonic(
        d,
        &[
            "stabilize-unknown",
            "--stream",
            "stream.json",
            "--n",
            "3",
            "--epsilon",
            "0.5",
            "--delta",
            "0.5",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    assert_eq!(r["blocks"], serde_json::json!([[0, 1], [2]]));
    assert_eq!(r["inferred"]["edges"], serde_json::json!([[0, 1], [1, 2]]));
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&hedonic(tmp.path(), &["bogus"])), 1);
    assert_eq!(code(&hedonic(tmp.path(), &["reduce"])), 1);
    assert_eq!(code(&hedonic(tmp.path(), &["reduce", "--cnf", "missing.cnf"])), 1);
    assert_eq!(code(&hedonic(tmp.path(), &["--help"])), 0);
}
