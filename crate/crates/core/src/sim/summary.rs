use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::tmk::{TmkModel, WorldState};

use super::trace::{DerivationalTrace, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVisit {
    pub step_index: usize,
    pub state_id: String,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTaken {
    pub step_index: usize,
    pub transition_id: String,
    pub description: String,
    pub to_state: String,
    pub world_state: WorldState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationDetail {
    pub step_index: usize,
    pub method_id: String,
    /// The violated invariant, rendered infix.
    pub expression: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub trace_id: String,
    pub task_id: String,
    pub outcome: Outcome,
    pub states_visited: Vec<StateVisit>,
    pub transitions_taken: Vec<TransitionTaken>,
    pub violation: Option<ViolationDetail>,
    pub initial_state: WorldState,
    pub final_state: WorldState,
}

pub fn summarize_trace(trace: &DerivationalTrace) -> TraceSummary {
    let states_visited = trace
        .events
        .iter()
        .map(|e| StateVisit { step_index: e.step_index, state_id: e.state_id.clone(), depth: e.depth })
        .collect();
    let transitions_taken = trace
        .events
        .iter()
        .filter_map(|e| {
            e.transition_id.as_ref().map(|tid| TransitionTaken {
                step_index: e.step_index,
                transition_id: tid.clone(),
                description: e.note.clone(),
                to_state: e.state_id.clone(),
                world_state: e.world_state.clone(),
            })
        })
        .collect();
    TraceSummary {
        trace_id: trace.trace_id.clone(),
        task_id: trace.task_id.clone(),
        outcome: trace.outcome,
        states_visited,
        transitions_taken,
        violation: trace.violation.as_ref().map(|v| ViolationDetail {
            step_index: v.step_index,
            method_id: v.method_id.clone(),
            expression: v.invariant.to_string(),
        }),
        initial_state: trace.events.first().map(|e| e.world_state.clone()).unwrap_or_default(),
        final_state: trace.final_state().clone(),
    }
}

impl TraceSummary {
    /// Step-by-step prose. State and task names are resolved through `model` when given.
    pub fn narrate(&self, model: Option<&TmkModel>) -> String {
        let state_name = |id: &str| -> String {
            model
                .and_then(|m| m.methods.iter().find_map(|me| me.state(id)))
                .map_or_else(|| id.to_string(), |s| s.name.clone())
        };
        let task_name =
            model.and_then(|m| m.task(&self.task_id)).map_or_else(|| self.task_id.clone(), |t| t.name.clone());
        let mut out = String::new();
        let start = self.states_visited.first().map(|s| state_name(&s.state_id)).unwrap_or_default();
        let _ = writeln!(out, "Simulating \"{task_name}\" starting at {start} with {}.", self.initial_state);
        let mut previous = &self.initial_state;
        for (n, t) in self.transitions_taken.iter().enumerate() {
            let after = &t.world_state;
            let changes: Vec<String> =
                after.diff(previous).into_iter().map(|(slot, _, new)| format!("{slot}={new}")).collect();
            let _ = writeln!(
                out,
                "{}. {} Now at {}{}.",
                n + 1,
                t.description,
                state_name(&t.to_state),
                if changes.is_empty() { String::new() } else { format!(" ({})", changes.join(", ")) }
            );
            previous = after;
        }
        let _ = writeln!(out, "Final state: {}.", self.final_state);
        let _ = write!(out, "Outcome: {} after {} transition(s).", self.outcome, self.transitions_taken.len());
        if let Some(v) = &self.violation {
            let _ = write!(out, " The invariant `{}` was violated at step {}.", v.expression, v.step_index);
        }
        out
    }
}
