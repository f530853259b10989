use std::process::Command;

fn csp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_csp"))
}

#[test]
fn exit_codes_follow_the_result() {
    let out = csp().args(["solve", "queens:n=8"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("result sat"));
    assert!(text.contains("solution q0="));

    let out = csp()
        .args(["solve", "langford:k=2,n=5", "--var", "dom/wdeg+rsc", "--scheme", "arc", "--rev", "a_dom/wdeg"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = csp().args(["solve", "langford:k=2,n=9", "--timeout", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = csp().args(["solve", "queens:n=4", "--rev", "c_wcon"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = csp().args(["solve", "no-such-file.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn count_mode_reports_solutions() {
    let out = csp().args(["solve", "queens:n=6", "--mode", "count"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("solutions 4"), "{text}");
}

#[test]
fn bench_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("q5.json");
    let out = csp().args(["gen", "queens:n=5", "--out"]).arg(&inst).output().unwrap();
    assert!(out.status.success());
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"instances": ["q5.json", "langford:k=2,n=4"],
            "var_heuristics": ["dom/wdeg"],
            "revision_policies": ["fifo", "dom", "v_dom/wdeg"]}"#,
    )
    .unwrap();
    let csv = dir.path().join("results.csv");
    let out = csp().arg("bench").arg(&spec).arg("--out").arg(&csv).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "instance,scheme,var_heur,rev_heur,restart,value_order,seed,result,time_ms,nodes,checks,revisions,dwos"
    );
    assert_eq!(lines.count(), 6);

    let out = csp().args(["report", "variance"]).arg(&csv).output().unwrap();
    let report = String::from_utf8(out.stdout).unwrap();
    assert_eq!(report.lines().count(), 3, "{report}");
    assert!(report.contains("q5.json"));
}
