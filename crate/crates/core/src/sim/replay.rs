//! Independent re-execution of a recorded trace against its model.

use crate::tmk::{Method, TmkModel};

use super::engine::prepare_initial;
use super::eval::{apply_actions, eval_condition, EvalError};
use super::trace::DerivationalTrace;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("trace has no events")]
    Empty,
    #[error("method `{0}` not found in the model")]
    UnknownMethod(String),
    #[error("event {index}: {message}")]
    Mismatch { index: usize, message: String },
    #[error("event {index}: {source}")]
    Eval {
        index: usize,
        #[source]
        source: EvalError,
    },
}

fn mismatch(index: usize, message: impl Into<String>) -> ReplayError {
    ReplayError::Mismatch { index, message: message.into() }
}

/// Verifies that every event follows from its predecessor: the fired
/// transition leaves the current state, its condition held on the previous
/// snapshot, and its actions reproduce the next snapshot exactly.
pub fn replay_trace(model: &TmkModel, trace: &DerivationalTrace) -> Result<(), ReplayError> {
    let first = trace.events.first().ok_or(ReplayError::Empty)?;
    let root = model.method(&trace.method_id).ok_or_else(|| ReplayError::UnknownMethod(trace.method_id.clone()))?;
    if first.depth != 0 || first.transition_id.is_some() || first.state_id != root.start_state {
        return Err(mismatch(0, "trace must open at the method's start state without a transition"));
    }
    let mut stack: Vec<(&Method, &str)> = vec![(root, first.state_id.as_str())];

    for (i, pair) in trace.events.windows(2).enumerate() {
        let (prev, event) = (&pair[0], &pair[1]);
        let index = i + 1;
        if event.step_index <= prev.step_index {
            return Err(mismatch(index, "step indices must strictly increase"));
        }
        let top = stack.len() - 1;
        if event.depth == top + 1 {
            let (method, current) = *stack.last().expect("non-empty");
            let sub = method
                .state(current)
                .and_then(|s| s.sub_task_ref.as_deref())
                .ok_or_else(|| mismatch(index, "deeper event without a sub-task state"))?;
            let child = model.methods_for(sub).next().ok_or_else(|| mismatch(index, "sub-task has no method"))?;
            if event.transition_id.is_some() || event.state_id != child.start_state {
                return Err(mismatch(index, "sub-task entry must open at the child's start state"));
            }
            let expected = prepare_initial(model, sub, &prev.world_state)
                .map_err(|e| mismatch(index, format!("sub-task entry: {e}")))?;
            if expected != event.world_state {
                return Err(mismatch(index, "sub-task entry snapshot differs"));
            }
            stack.push((child, event.state_id.as_str()));
            continue;
        }
        if event.depth > top {
            return Err(mismatch(index, format!("depth jumped from {top} to {}", event.depth)));
        }
        while stack.len() - 1 > event.depth {
            let (child, current) = stack.pop().expect("non-empty");
            if !child.end_states.contains(current) {
                return Err(mismatch(index, format!("left sub-task `{}` before an end state", child.id)));
            }
        }
        let (method, current) = stack.last_mut().expect("non-empty");
        let tid = event.transition_id.as_deref().ok_or_else(|| mismatch(index, "missing transition id"))?;
        let t = method.transition(tid).ok_or_else(|| mismatch(index, format!("unknown transition `{tid}`")))?;
        if t.from_state != *current {
            return Err(mismatch(index, format!("`{tid}` does not leave `{current}`")));
        }
        let holds =
            eval_condition(&t.condition, &prev.world_state).map_err(|source| ReplayError::Eval { index, source })?;
        if !holds {
            return Err(mismatch(index, format!("condition of `{tid}` was false")));
        }
        let next =
            apply_actions(&t.actions, &prev.world_state).map_err(|source| ReplayError::Eval { index, source })?;
        if next != event.world_state {
            return Err(mismatch(index, format!("actions of `{tid}` do not reproduce the snapshot")));
        }
        if t.to_state != event.state_id {
            return Err(mismatch(index, format!("`{tid}` leads to `{}`, not `{}`", t.to_state, event.state_id)));
        }
        *current = event.state_id.as_str();
    }
    Ok(())
}

/// Index of the first top-level snapshot that breaks the method invariant.
pub fn first_violation(model: &TmkModel, trace: &DerivationalTrace) -> Result<Option<usize>, ReplayError> {
    let method = model.method(&trace.method_id).ok_or_else(|| ReplayError::UnknownMethod(trace.method_id.clone()))?;
    let Some(inv) = &method.invariant else {
        return Ok(None);
    };
    for (index, e) in trace.events.iter().enumerate().filter(|(_, e)| e.depth == 0) {
        if !eval_condition(inv, &e.world_state).map_err(|source| ReplayError::Eval { index, source })? {
            return Ok(Some(index));
        }
    }
    Ok(None)
}
