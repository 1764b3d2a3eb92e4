use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rockland"))
        .args(args)
        .output()
        .expect("spawn rockland")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn catalog_lists_computed_gradings() {
    let o = run(&["catalog"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.lines().any(|l| l.starts_with("engel") && l.contains("dims 2,1,1; step 3")), "{s}");
    assert!(s.lines().any(|l| l.starts_with("n4") && l.contains("dims 3,2,1; step 3")), "{s}");
}

#[test]
fn engel_scalar_inside_and_on_spectrum() {
    let o = run(&["check", "engel", "--gamma", "0.5i"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "CertifiedHypoelliptic");

    let o = run(&["check", "engel", "--gamma", "i"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "CertifiedNotHypoelliptic");
}

#[test]
fn malformed_symbol_reports_position() {
    let dir = std::env::temp_dir().join(format!("rockland-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("bad.json");
    std::fs::write(&p, r#"{"N":1,"gammas":[[[{"re":0 "im":0.5}]]]}"#).unwrap();
    let o = run(&["check", "n4", "--symbol", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("line") && e.contains("column"), "{e}");
    assert!(!e.contains("panicked"), "{e}");
}

#[test]
fn star_probe_is_attached() {
    let dir = std::env::temp_dir().join(format!("rockland-cli-star-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("g.json");
    std::fs::write(
        &p,
        r#"{"N":1,"gammas":[[[{"re":0,"im":0.3}]],[[{"re":0,"im":-0.2}]]]}"#,
    )
    .unwrap();
    let o = run(&["check", "n4", "--symbol", p.to_str().unwrap(), "--star-probe", "--samples", "256"]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.get("star_probe").is_some());
}

#[test]
fn empty_sweep_range_emits_only_summary() {
    let o = run(&["sweep", "n4", "--eta", "0:1:0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let lines: Vec<_> = s.lines().collect();
    assert_eq!(lines.len(), 1, "{s}");
    let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(v["summary"]["points"], 0);
}

#[test]
fn oversized_discretization_is_refused() {
    let o = run(&["sweep", "htilde", "--hbar", "1", "--disc-size", "2000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("resource guard"));
}

#[test]
fn unknown_algebra_is_an_error() {
    let o = run(&["check", "no_such_algebra", "--gamma", "i"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
}
