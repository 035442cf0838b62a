use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn grammar(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../grammars").join(format!("{name}.g"));
    p.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netparse")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn check_reports_the_running_pilot() {
    let out = run(&["check", &grammar("paren_list")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("ELR(1): OK, pilot m-states: 9"));
}

#[test]
fn check_fails_with_exit_one_on_conflicts() {
    let out = run(&["check", "--ell1", &grammar("multi_base")]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("ELL(1): FAILED"));
    assert!(text.contains("guide sets overlap at 0_S"));
    let out = run(&["check", &grammar("convergent_conflict")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn grammar_errors_exit_with_two() {
    let dir = std::env::temp_dir().join(format!("netparse-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.g");
    std::fs::write(&bad, "S : A ;\n").unwrap();
    let out = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("undefined nonterminal `A`"));
    assert_eq!(run(&["check", dir.join("missing.g").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["parse", "--algo", "bogus", &grammar("paren_list"), "a"]).status.code(), Some(2));
}

#[test]
fn earley_parse_prints_the_tree() {
    let out = run(&["parse", "--algo", "earley", &grammar("nested_lists"), "a a b b a a"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("( a a b ( b ( ε )_B a )_B a )_S"));
}

#[test]
fn every_engine_parses_the_running_example() {
    for algo in ["elr", "elr-vector", "pointerless", "predictive", "earley"] {
        let out = run(&["parse", "--algo", algo, &grammar("paren_list"), "( ( ) a )"]);
        assert_eq!(out.status.code(), Some(0), "{algo}");
        assert!(stdout(&out).contains("( ( ( ( ( ( ( ε )_E ) )_T ( a )_T )_E ) )_T )_E"), "{algo}");
    }
}

#[test]
fn bottom_up_parse_lists_reductions_and_rejects() {
    let out = run(&["parse", &grammar("paren_list"), "( ( ) a )"]);
    let text = stdout(&out);
    let order: Vec<usize> = ["reduce ε⤳E", "reduce ( E )⤳T", "reduce a⤳T", "reduce T T⤳E", "reduce T⤳E"]
        .iter()
        .map(|r| text.find(r).unwrap_or_else(|| panic!("missing {r}")))
        .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]));
    let out = run(&["parse", &grammar("paren_list"), "( ) ("]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("syntax error at token 3"));
}

#[test]
fn input_can_come_from_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_netparse"))
        .args(["parse", &grammar("paren_list")])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"( a )\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn json_output_carries_a_schema_version() {
    let out = run(&["--format", "json", "check", &grammar("paren_list")]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["elr1"]["mstates"], 9);
    assert_eq!(v["elr1"]["ok"], true);
    let out = run(&["--format", "json", "parse", "--algo", "earley", &grammar("nested_lists"), "a a b b a a"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
}

#[test]
fn emit_rd_and_oracle() {
    let out = run(&["emit-rd", &grammar("paren_list")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("call E"));
    assert_eq!(run(&["emit-rd", &grammar("left_recursive")]).status.code(), Some(1));
    let out = run(&["oracle", &grammar("convergent_conflict")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("2_S -> c 3_S vs 4_S -> c 3_S on e"));
}

#[test]
fn graph_exports_dot() {
    for what in ["net", "pilot", "compact", "pcfg"] {
        let out = run(&["graph", "--what", what, &grammar("paren_list")]);
        assert_eq!(out.status.code(), Some(0), "{what}");
        assert!(stdout(&out).starts_with("digraph"), "{what}");
    }
}
