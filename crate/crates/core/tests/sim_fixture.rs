use ivy::sim::{explore, first_violation, replay_trace, simulate, summarize_trace, ExploreLimits, Outcome, SimOptions};
use ivy::tmk::{load_model, validate_model, Expression, TmkModel, Value};

fn fixture(name: &str) -> TmkModel {
    load_model(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn safe_organizer_reaches_end_in_eleven_trips() {
    let model = fixture("river_crossing.tmk.json");
    let report = validate_model(&model);
    assert!(report.is_valid(), "{report}");
    assert!(report.warnings.is_empty(), "{report}");
    let init = model.default_initial.clone().unwrap();
    let trace = simulate(&model, "transport", &init, SimOptions::default()).unwrap();
    assert_eq!(trace.outcome, Outcome::ReachedEnd);
    assert_eq!(trace.transition_count(), 11);
    assert_eq!(trace.final_state().get("all_across"), Some(&Value::Bool(true)));
    assert_eq!(trace.final_state().get("right_guards"), Some(&Value::Int(3)));
    assert_eq!(trace.final_state().get("right_prisoners"), Some(&Value::Int(3)));
    replay_trace(&model, &trace).unwrap();
    assert_eq!(first_violation(&model, &trace).unwrap(), None);
    let narrative = summarize_trace(&trace).narrate(Some(&model));
    assert!(narrative.contains("reached_end after 11 transition(s)"), "{narrative}");
}

#[test]
fn unsafe_organizer_violates_at_first_step() {
    let model = fixture("river_crossing_unsafe.tmk.json");
    assert!(validate_model(&model).is_valid());
    let init = model.default_initial.clone().unwrap();
    let trace = simulate(&model, "transport", &init, SimOptions::default()).unwrap();
    assert_eq!(trace.outcome, Outcome::ConstraintViolation);
    let v = trace.violation.as_ref().unwrap();
    assert_eq!(v.step_index, 1);
    assert_eq!(first_violation(&model, &trace).unwrap(), Some(1));
    replay_trace(&model, &trace).unwrap();
}

#[test]
fn explore_finds_eleven_step_plan() {
    let model = fixture("river_crossing.tmk.json");
    let init = model.default_initial.clone().unwrap();
    let goal = Expression::cmp(ivy::tmk::CmpOp::Eq, Expression::slot("all_across"), Expression::Bool(true));
    let trace = explore(&model, "transport", &init, &goal, ExploreLimits::default()).unwrap().unwrap();
    assert_eq!(trace.transition_count(), 11);
    replay_trace(&model, &trace).unwrap();
    let unsafe_model = fixture("river_crossing_unsafe.tmk.json");
    let trace = explore(&unsafe_model, "transport", &init, &goal, ExploreLimits::default()).unwrap().unwrap();
    assert_eq!(trace.transition_count(), 11);
}
