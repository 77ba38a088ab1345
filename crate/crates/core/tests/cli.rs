mod common;

use std::process::{Command, Output};

use serde_json::Value;

fn ivy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ivy")).args(args).env_remove("IVY_STORAGE_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn safe() -> String {
    common::fixture_path(common::SAFE).to_str().unwrap().to_string()
}

#[test]
fn ask_prints_the_refined_answer() {
    let o = ivy(&["ask", "--model", &safe(), "--question", "Who is a guard?", "--provider", "mock"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with(common::GUARD_ANSWER));
    assert!(stdout(&o).contains("cited: river/knowledge/guards"));
}

#[test]
fn validate_reports_errors_with_exit_one() {
    let ok = ivy(&["validate", &safe()]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).starts_with("0 error(s)"));

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.tmk.json");
    let text =
        std::fs::read_to_string(safe()).unwrap().replace("\"task_ref\": \"transport\"", "\"task_ref\": \"nope\"");
    std::fs::write(&broken, text).unwrap();
    let o = ivy(&["validate", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("error: methods[ferry].task_ref: task `nope` is not declared"), "{}", stdout(&o));

    let o = ivy(&["validate", broken.to_str().unwrap(), "--json"]);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["errors"][0]["code"], "dangling_reference");
}

#[test]
fn simulate_ends_reached_with_everyone_across() {
    let dir = tempfile::tempdir().unwrap();
    let o = ivy(&["simulate", "--model", &safe(), "--task", "transport", "--storage", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.trim_end().ends_with("Outcome: reached_end after 11 transition(s)."), "{out}");
    assert!(out.contains("Final state: {all_across=true, boat=right, left_guards=0, left_prisoners=0, right_guards=3, right_prisoners=3}"));
    let id = out.lines().next().unwrap().strip_prefix("trace ").unwrap();
    assert!(dir.path().join("traces").join(format!("{id}.json")).exists());
    assert!(stderr(&o).contains(id));
}

#[test]
fn simulate_with_limit_and_init() {
    let dir = tempfile::tempdir().unwrap();
    let init = dir.path().join("init.json");
    std::fs::write(
        &init,
        r#"{"left_guards": 3, "left_prisoners": 3, "right_guards": 0, "right_prisoners": 0, "boat": "left"}"#,
    )
    .unwrap();
    let storage = dir.path().join("store");
    let args =
        ["simulate", "--model", &safe(), "--task", "transport", "--init", init.to_str().unwrap(), "--limit", "3"];
    let o = ivy(&[&args[..], &["--storage", storage.to_str().unwrap(), "--json"]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let body: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(body["trace"]["outcome"], "step_limit");
    assert_eq!(body["summary"]["transitions_taken"].as_array().unwrap().len(), 3);
}

#[test]
fn docs_lists_stable_ids() {
    let o = ivy(&["docs", "--model", &safe()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for id in ["river/knowledge/guards", "river/knowledge/river", "river/task/transport", "river/method/ferry"] {
        assert!(out.contains(&format!("== {id} [")), "{id}");
    }
}

#[test]
fn eval_scores_full_consistency() {
    let questions = common::fixture_path("questions.txt");
    let o = ivy(&["eval", "--model", &safe(), "--questions", questions.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let reports = report["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 9);
    for r in reports {
        assert_eq!(r["consistency_band"], 5, "{r}");
    }
    let table = ivy(&["eval", "--model", &safe(), "--questions", questions.to_str().unwrap(), "--runs", "2"]);
    assert!(stdout(&table).contains("not a human rating"));
}

#[test]
fn usage_and_provider_failures_have_their_own_codes() {
    assert_eq!(ivy(&[]).status.code(), Some(2));
    assert_eq!(ivy(&["ask", "--model", &safe()]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_ivy"))
        .args(["ask", "--model", &safe(), "--question", "Who is a guard?", "--provider", "remote"])
        .env("IVY_LLM_BASE_URL", "http://127.0.0.1:1/v1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn exit_codes_are_stable() {
    let missing = "/nonexistent.tmk.json";
    for _ in 0..3 {
        assert_eq!(ivy(&["ask", "--model", &safe(), "--question", "Name the boat."]).status.code(), Some(0));
        assert_eq!(ivy(&["validate", missing]).status.code(), Some(1));
    }
}
