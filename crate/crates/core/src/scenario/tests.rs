use super::*;

fn parse(text: &str) -> Result<Scenario> {
    Scenario::parse(text, "test.json", Path::new("."))
}

const HARDY: &str = r#"{
    "schema_version": 1,
    "params": { "p": 2.0, "d": 3, "zeta": "origin" },
    "potential": { "family": { "kind": "hardy_constant", "lambda": 0.21 }, "sign": { "kind": "minus" } },
    "tasks": ["hardy"]
}"#;

fn dry() -> RunOptions {
    RunOptions { dry_run: true, ..Default::default() }
}

#[test]
fn hardy_scenario_finds_both_exponents() {
    let rep = run(&parse(HARDY).unwrap(), &dry()).unwrap();
    assert!(rep.passed(), "{:?}", rep.tasks[0].detail);
    let e = &rep.tasks[0].summary["exponents"];
    assert!((e["gamma_minus"].as_f64().unwrap() + 0.7).abs() < 1e-10);
    assert!((e["gamma_plus"].as_f64().unwrap() + 0.3).abs() < 1e-10);
}

#[test]
fn empty_task_list_is_a_parse_error() {
    let text = HARDY.replace(r#"["hardy"]"#, "[]");
    match parse(&text) {
        Err(Error::Parse { location, .. }) => assert_eq!(location, "tasks"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn syntax_errors_carry_a_position() {
    match parse("{ \"schema_version\": 1,\n  \"params\": oops }") {
        Err(Error::Parse { location, .. }) => assert!(location.starts_with("test.json:2:"), "{location}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn rejects_unknown_schema_and_fields() {
    assert!(matches!(parse(&HARDY.replace("\"schema_version\": 1", "\"schema_version\": 2")), Err(Error::Parse { .. })));
    assert!(matches!(parse(&HARDY.replace("\"tasks\"", "\"seed\": 1, \"taks\"")), Err(Error::Parse { .. })));
}

#[test]
fn lambda_sweep_flags_the_double_root() {
    let text = HARDY.replace(
        r#""tasks": ["hardy"]"#,
        r#""tasks": ["sweep"], "sweep": { "axis": "lambda", "values": [0, 0.1, 0.2, 0.25], "tasks": ["hardy"] }"#,
    );
    let rep = run_sweep(&parse(&text).unwrap(), false).unwrap();
    assert_eq!(rep.rows.len(), 4);
    let flags: Vec<&str> = rep.rows.iter().map(|r| r.tasks[0].headline[4].1.as_str()).collect();
    assert_eq!(flags, ["false", "false", "false", "true"]);
    assert!(rep.rows.iter().all(|r| r.verdict == Verdict::Pass));
    let csv = rep.csv();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("lambda,verdict,hardy.lambda,"));
}

#[test]
fn axis_must_match_family() {
    let text = HARDY.replace(
        r#""tasks": ["hardy"]"#,
        r#""tasks": ["sweep"], "sweep": { "axis": "epsilon", "values": [1], "tasks": ["hardy"] }"#,
    );
    assert!(matches!(parse(&text), Err(Error::Parse { .. })));
}

#[test]
fn inapplicable_tasks_do_not_fail_the_run() {
    let text = HARDY.replace(r#"["hardy"]"#, r#"["minimal-growth"]"#);
    let rep = run(&parse(&text).unwrap(), &dry()).unwrap();
    assert_eq!(rep.tasks[0].verdict, Verdict::NotApplicable);
    assert!(rep.passed());
}

#[test]
fn epsilon_sweep_of_kato_condition_is_finite() {
    let text = r#"{
        "schema_version": 1,
        "params": { "p": 2.0, "d": 3, "zeta": "origin" },
        "potential": { "family": { "kind": "power_law", "epsilon": 1.0 } },
        "tasks": ["sweep"],
        "sweep": { "axis": "epsilon", "values": [0.5, 1, 2], "tasks": ["conditions"] }
    }"#;
    let rep = run_sweep(&parse(text).unwrap(), false).unwrap();
    for row in &rep.rows {
        assert_eq!(row.tasks[0].headline[0].1, "finite", "ε = {}", row.value);
    }
}
