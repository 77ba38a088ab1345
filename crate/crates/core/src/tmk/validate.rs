use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::expr::{self, ExprType, Expression, SlotTypes, TypeError};
use super::model::{Method, Task, TmkModel, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueCode {
    DuplicateId,
    DanglingReference,
    TypeError,
    InvalidParameter,
    UnreachableState,
    NoEndStateReachable,
    OrphanTask,
    UnknownSlot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    /// Path to the offending component, e.g. `methods[ferry].transitions[t1].condition`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, code: IssueCode, location: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue { code, location: location.into(), message: message.into() });
    }

    fn warn(&mut self, code: IssueCode, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue { code, location: location.into(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} error(s), {} warning(s)", self.errors.len(), self.warnings.len())?;
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Checks structural integrity. Problems are reported as data, never as `Err`.
pub fn validate_model(model: &TmkModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_unique_ids(model, &mut report);

    for task in &model.tasks {
        check_task(task, &mut report);
        if model.methods_for(&task.id).next().is_none() {
            report.warn(IssueCode::OrphanTask, format!("tasks[{}]", task.id), "no method accomplishes this task");
        }
    }
    for method in &model.methods {
        check_method(model, method, &mut report);
    }

    let entity_ids: BTreeSet<&str> = model.knowledge.iter().map(|k| k.id.as_str()).collect();
    for entity in &model.knowledge {
        for rel in &entity.relations {
            if !entity_ids.contains(rel.target.as_str()) {
                report.error(
                    IssueCode::DanglingReference,
                    format!("knowledge[{}].relations[{}]", entity.id, rel.name),
                    format!("relation target `{}` is not a declared knowledge entity", rel.target),
                );
            }
        }
    }

    if let Some(initial) = &model.default_initial {
        let declared: HashMap<&str, _> =
            model.tasks.iter().flat_map(|t| t.givens.iter().chain(&t.makes)).map(|p| (p.name.as_str(), p)).collect();
        for (slot, value) in initial.iter() {
            match declared.get(slot.as_str()) {
                None => report.warn(
                    IssueCode::UnknownSlot,
                    format!("default_initial.{slot}"),
                    "slot is not declared by any task",
                ),
                Some(spec) if !spec.admits(value) => report.error(
                    IssueCode::TypeError,
                    format!("default_initial.{slot}"),
                    format!("value `{value}` does not fit declared kind {}", spec.value_kind),
                ),
                Some(_) => {}
            }
        }
    }
    report
}

fn check_unique_ids(model: &TmkModel, report: &mut ValidationReport) {
    let mut seen: BTreeMap<&str, &'static str> = BTreeMap::new();
    let mut ids: Vec<(&str, &'static str)> = Vec::new();
    ids.extend(model.tasks.iter().map(|t| (t.id.as_str(), "task")));
    ids.extend(model.methods.iter().map(|m| (m.id.as_str(), "method")));
    for m in &model.methods {
        ids.extend(m.states.iter().map(|s| (s.id.as_str(), "state")));
        ids.extend(m.transitions.iter().map(|t| (t.id.as_str(), "transition")));
    }
    ids.extend(model.knowledge.iter().map(|k| (k.id.as_str(), "knowledge entity")));
    for (id, kind) in ids {
        if let Some(first) = seen.insert(id, kind) {
            report.error(
                IssueCode::DuplicateId,
                format!("{kind}[{id}]"),
                format!("duplicate id `{id}` (already used by a {first})"),
            );
        }
    }
}

fn check_task(task: &Task, report: &mut ValidationReport) {
    let mut names = BTreeSet::new();
    for p in task.givens.iter().chain(&task.makes) {
        let loc = format!("tasks[{}].{}", task.id, p.name);
        if !names.insert(p.name.as_str()) {
            report.error(IssueCode::InvalidParameter, &loc, format!("parameter `{}` declared twice", p.name));
        }
        match (p.value_kind, &p.enum_values) {
            (ValueKind::Enum, None) => {
                report.error(IssueCode::InvalidParameter, &loc, "enum parameter needs enum_values")
            }
            (ValueKind::Enum, Some(v)) if v.is_empty() => {
                report.error(IssueCode::InvalidParameter, &loc, "enum_values must not be empty")
            }
            (ValueKind::Integer | ValueKind::Boolean, Some(_)) => {
                report.error(IssueCode::InvalidParameter, &loc, "enum_values only allowed on enum parameters")
            }
            _ => {}
        }
    }
    let slots = expr::slot_types(task.givens.iter().chain(&task.makes));
    for p in task.givens.iter().chain(&task.makes) {
        if let Some(c) = &p.constraint {
            check_boolean(c, &slots, format!("tasks[{}].{}.constraint", task.id, p.name), report);
        }
    }
}

fn check_boolean(e: &Expression, slots: &SlotTypes, location: String, report: &mut ValidationReport) {
    match expr::type_of(e, slots) {
        Ok(ExprType::Boolean) => {}
        Ok(other) => {
            report.error(IssueCode::TypeError, location, format!("expected a boolean expression, found {other}"))
        }
        Err(err) => push_type_error(err, location, report),
    }
}

fn push_type_error(err: TypeError, location: String, report: &mut ValidationReport) {
    let code = match err {
        TypeError::UndeclaredSlot(_) => IssueCode::DanglingReference,
        _ => IssueCode::TypeError,
    };
    report.error(code, location, err.to_string());
}

fn check_method(model: &TmkModel, method: &Method, report: &mut ValidationReport) {
    let loc = format!("methods[{}]", method.id);
    let task = model.task(&method.task_ref);
    if task.is_none() {
        report.error(
            IssueCode::DanglingReference,
            format!("{loc}.task_ref"),
            format!("task `{}` is not declared", method.task_ref),
        );
    }
    let slots = expr::slot_types(task.map(|t| t.givens.iter().chain(&t.makes)).into_iter().flatten());

    let states: BTreeSet<&str> = method.states.iter().map(|s| s.id.as_str()).collect();
    let state_ref = |field: String, id: &str, report: &mut ValidationReport| {
        if !states.contains(id) {
            report.error(IssueCode::DanglingReference, field, format!("state `{id}` is not declared"));
        }
    };
    state_ref(format!("{loc}.start_state"), &method.start_state, report);
    for end in &method.end_states {
        state_ref(format!("{loc}.end_states"), end, report);
    }
    for t in &method.transitions {
        let tloc = format!("{loc}.transitions[{}]", t.id);
        state_ref(format!("{tloc}.from_state"), &t.from_state, report);
        state_ref(format!("{tloc}.to_state"), &t.to_state, report);
        check_boolean(&t.condition, &slots, format!("{tloc}.condition"), report);
        for a in &t.actions {
            let aloc = format!("{tloc}.actions[{}]", a.slot);
            let Some(target) = slots.get(&a.slot) else {
                report.error(IssueCode::DanglingReference, aloc, format!("undeclared slot `{}`", a.slot));
                continue;
            };
            match expr::type_of(&a.expression, &slots).and_then(|ty| expr::unify(target, &ty)) {
                Ok(()) => {}
                Err(err) => push_type_error(err, aloc, report),
            }
        }
    }
    for s in &method.states {
        if let Some(sub) = &s.sub_task_ref {
            if model.task(sub).is_none() {
                report.error(
                    IssueCode::DanglingReference,
                    format!("{loc}.states[{}].sub_task_ref", s.id),
                    format!("sub-task `{sub}` is not declared"),
                );
            }
        }
    }
    if let Some(inv) = &method.invariant {
        check_boolean(inv, &slots, format!("{loc}.invariant"), report);
    }

    if !states.contains(method.start_state.as_str()) {
        return;
    }
    let reachable = reachable_states(method);
    for s in &method.states {
        if !reachable.contains(s.id.as_str()) {
            report.warn(
                IssueCode::UnreachableState,
                format!("{loc}.states[{}]", s.id),
                "state is unreachable from the start state",
            );
        }
    }
    if !method.end_states.iter().any(|e| reachable.contains(e.as_str())) {
        report.warn(IssueCode::NoEndStateReachable, loc, "no end state reachable from the start state");
    }
}

/// States reachable from the start state, ignoring transition conditions.
pub fn reachable_states(method: &Method) -> BTreeSet<&str> {
    let mut seen = BTreeSet::from([method.start_state.as_str()]);
    let mut queue = VecDeque::from([method.start_state.as_str()]);
    while let Some(s) = queue.pop_front() {
        for t in method.outgoing(s) {
            if seen.insert(t.to_state.as_str()) {
                queue.push_back(t.to_state.as_str());
            }
        }
    }
    seen
}
