use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mteid::policy::Condition;
use mteid::{load_model, load_policy};
use mteid_core::{Assignment, Value};

const ORDER: &str = "C,P,V,O,D,R,T";

fn model(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(format!("oil_wildcatter_{name}.json"))
}

fn mteid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mteid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn validate_bundled_models() {
    for name in ["discrete", "continuous"] {
        let o = mteid(&["validate", path_str(&model(name))]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o).trim(), "ok");
    }
}

#[test]
fn solve_discrete_writes_policy_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("policy.json");
    let trace = dir.path().join("trace.txt");
    let m = model("discrete");
    let o = mteid(&[
        "solve",
        path_str(&m),
        "--order",
        ORDER,
        "--policy",
        path_str(&policy),
        "--trace",
        path_str(&trace),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meu: f64 = stdout(&o).trim().parse().unwrap();

    let pf = load_policy(&policy).unwrap();
    assert_eq!(pf.meu, meu);
    let t = pf.decision("T").unwrap();
    assert_eq!(t.rules.len(), 1);
    assert_eq!(t.rules[0].choose, "test");
    let d = pf.decision("D").unwrap();
    for rule in &d.rules {
        let Some(Condition::State(r)) = rule.when.get("R") else {
            panic!("D depends on R")
        };
        if rule.when.get("T") == Some(&Condition::State("test".into())) && r != "no_result" {
            let want = if r == "open" || r == "closed" {
                "drill"
            } else {
                "not_drill"
            };
            assert_eq!(rule.choose, want, "{r}");
        }
    }
    let reread = load_policy(&policy).unwrap();
    assert_eq!(reread, pf);

    let log = std::fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 8);
    for (line, var) in lines.iter().zip(ORDER.split(',')) {
        assert!(line.contains(&format!("delete {var}:")), "{line}");
    }
    assert_eq!(lines[7], format!("meu {meu}"));
}

#[test]
fn solve_output_is_deterministic() {
    let m = model("discrete");
    let a = mteid(&["solve", path_str(&m), "--order", ORDER]);
    let b = mteid(&["solve", path_str(&m), "--order", ORDER]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn observation_after_decision_is_refused() {
    let o = mteid(&[
        "solve",
        path_str(&model("discrete")),
        "--order",
        "C,P,V,O,R,D,T",
    ]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("E_INVALID_ORDER"), "{}", stderr(&o));
}

#[test]
fn empty_model_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    let o = mteid(&["validate", path_str(&empty)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("E_PARSE"), "{}", stderr(&o));
    assert!(stderr(&o).contains("1:1"), "{}", stderr(&o));
}

#[test]
fn missing_model_is_an_io_error() {
    let o = mteid(&["validate", "/nonexistent/model.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("E_IO"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_are_usage_errors() {
    let o = mteid(&["solve"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("E_USAGE"));
}

fn read_csv(path: &Path) -> Vec<(f64, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,value"));
    lines
        .map(|l| {
            let (x, v) = l.split_once(',').unwrap();
            (x.parse().unwrap(), v.parse().unwrap())
        })
        .collect()
}

#[test]
fn plot_price_density() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rho.csv");
    let o = mteid(&[
        "plot",
        path_str(&model("discrete")),
        "--potential",
        "rho",
        "--var",
        "P",
        "--points",
        "4",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].0, 1.86706);
    assert_eq!(rows[3].0, 129.93107);
    assert!(rows.iter().all(|&(_, v)| v >= -1e-3), "{rows:?}");
}

#[test]
fn plot_matches_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("normal.json");
    std::fs::write(
        &m,
        r#"{
  "variables": [{"name": "x", "kind": "continuous", "interval": [-3, 3]}],
  "potentials": [{"name": "f", "child": "x", "template": {"name": "normal", "variable": "x", "mu": 0, "sigma": 1}}]
}"#,
    )
    .unwrap();
    let out = dir.path().join("f.csv");
    let o = mteid(&[
        "plot",
        path_str(&m),
        "--potential",
        "f",
        "--var",
        "x",
        "--points",
        "601",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 601);
    let d = load_model(&m).unwrap();
    let f = d.potential("f").unwrap();
    for (x, v) in rows {
        assert_eq!(
            f.evaluate(&Assignment::new().real("x", x)).unwrap(),
            v,
            "{x}"
        );
    }
}

#[test]
fn eval_prints_the_value() {
    let m = model("discrete");
    let o = mteid(&[
        "eval",
        path_str(&m),
        "--potential",
        "theta",
        "--at",
        "O=wet",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.3);

    let o = mteid(&[
        "eval",
        path_str(&m),
        "--potential",
        "u1",
        "--at",
        "D=not_drill,T=test,C=70,P=20,V=5",
    ]);
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), -10.0);

    let d = load_model(&m).unwrap();
    let mut at = Assignment::new();
    at.set("O", Value::State("soaking".into()));
    at.set("V", Value::Real(13.5));
    let want = d.potential("nu").unwrap().evaluate(&at).unwrap();
    let o = mteid(&[
        "eval",
        path_str(&m),
        "--potential",
        "nu",
        "--at",
        "O=soaking,V=13.5",
    ]);
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), want);
}

#[test]
fn fit_normal_prints_pieces() {
    let o = mteid(&["fit", "normal", "--mu", "-2", "--sigma", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["interval"], serde_json::json!([-3.5, -0.5]));
    assert_eq!(doc["pieces"].as_array().unwrap().len(), 2);
}

#[test]
fn fit_pdf_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.json");
    let o = mteid(&[
        "fit",
        "pdf",
        "--target",
        "beta:3.2,3.2",
        "--interval",
        "0,1",
        "--splits",
        "0.2,0.5,0.8",
        "--normalize",
        "--var",
        "R",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["variable"], "R");
    assert_eq!(doc["pieces"].as_array().unwrap().len(), 4);
    assert!(doc["max_abs_error"].as_f64().unwrap() < 0.01);

    let o = mteid(&[
        "fit",
        "pdf",
        "--target",
        "normal:0,1",
        "--interval",
        "-3,3",
        "--pieces",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["pieces"].as_array().unwrap().len(), 2);
}

#[test]
fn check_bundled_models() {
    for name in ["discrete", "continuous"] {
        let o = mteid(&["check", path_str(&model(name))]);
        assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
        assert_eq!(
            stdout(&o).lines().filter(|l| l.starts_with("ok ")).count(),
            5
        );
    }
}

#[test]
fn continuous_policy_drills_on_middle_readings() {
    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("policy.json");
    let o = mteid(&[
        "solve",
        path_str(&model("continuous")),
        "--order",
        ORDER,
        "--policy",
        path_str(&policy),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let pf = load_policy(&policy).unwrap();
    assert_eq!(pf.decision("T").unwrap().rules[0].choose, "test");
    let middle = pf.decision("D").unwrap().rules.iter().any(|rule| {
        let tested = rule.when.get("T") == Some(&Condition::State("test".into()));
        match rule.when.get("R") {
            Some(Condition::Interval { lo, hi, .. }) => {
                tested
                    && rule.choose == "drill"
                    && (lo - 0.212).abs() <= 0.02
                    && (hi - 0.788).abs() <= 0.02
            }
            _ => false,
        }
    });
    assert!(middle, "{}", pf.to_json());
}
