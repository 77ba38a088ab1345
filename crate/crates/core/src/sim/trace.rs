use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::tmk::{Expression, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step_index: usize,
    pub state_id: String,
    /// Absent for the initial event and for the entry event of a sub-task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition_id: Option<String>,
    /// Snapshot after the event.
    pub world_state: WorldState,
    pub note: String,
    /// Sub-task nesting level; 0 for the top-level method.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub depth: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ReachedEnd,
    StepLimit,
    Stuck,
    ConstraintViolation,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::ReachedEnd => "reached_end",
            Outcome::StepLimit => "step_limit",
            Outcome::Stuck => "stuck",
            Outcome::ConstraintViolation => "constraint_violation",
        })
    }
}

/// The invariant that failed and where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub step_index: usize,
    pub method_id: String,
    pub invariant: Expression,
}

/// Ordered log of the states visited and transitions taken while executing a method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationalTrace {
    pub trace_id: String,
    pub model_id: String,
    pub task_id: String,
    pub method_id: String,
    pub events: Vec<TraceEvent>,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation: Option<Violation>,
}

impl DerivationalTrace {
    pub(crate) fn new(
        model_id: &str,
        task_id: &str,
        method_id: &str,
        events: Vec<TraceEvent>,
        outcome: Outcome,
        violation: Option<Violation>,
    ) -> Self {
        let mut trace = DerivationalTrace {
            trace_id: String::new(),
            model_id: model_id.to_string(),
            task_id: task_id.to_string(),
            method_id: method_id.to_string(),
            events,
            outcome,
            violation,
        };
        trace.trace_id = trace.content_id();
        trace
    }

    /// Content-derived id: identical executions share an id, so persisted
    /// traces are reproducible byte for byte.
    pub fn content_id(&self) -> String {
        let body = serde_json::json!({
            "model_id": self.model_id,
            "task_id": self.task_id,
            "method_id": self.method_id,
            "events": self.events,
            "outcome": self.outcome,
            "violation": self.violation,
        });
        let digest = Sha256::digest(body.to_string().as_bytes());
        digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
    }

    pub fn final_state(&self) -> &WorldState {
        &self.events.last().expect("traces are never empty").world_state
    }

    /// Number of fired transitions (events that carry a transition id).
    pub fn transition_count(&self) -> usize {
        self.events.iter().filter(|e| e.transition_id.is_some()).count()
    }
}
