use std::collections::{HashSet, VecDeque};

use crate::tmk::{Expression, TmkModel, WorldState};

use super::engine::{first_method, prepare_initial, Runner, SimError, SimOptions, DEFAULT_STEP_LIMIT};
use super::eval::{apply_actions, eval_condition, EvalError};
use super::trace::{DerivationalTrace, Outcome, TraceEvent};

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreLimits {
    /// Maximum number of search nodes generated.
    pub node_budget: usize,
    /// Maximum path length in transitions.
    pub step_limit: usize,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits { node_budget: DEFAULT_NODE_BUDGET, step_limit: DEFAULT_STEP_LIMIT }
    }
}

struct Node {
    state: String,
    ws: WorldState,
    parent: Option<usize>,
    depth: usize,
    /// Events produced by arriving here: the transition, then any sub-task events.
    events: Vec<TraceEvent>,
}

fn eval_err(location: String) -> impl FnOnce(EvalError) -> SimError {
    move |source| SimError::Eval { location, source }
}

/// Breadth-first search over (state, world state) pairs, expanding every
/// enabled transition. Returns a shortest trace that ends in an end state
/// with `goal` true, or `None` when no such trace exists.
///
/// Snapshots that break the method's invariant are pruned, end states are
/// not expanded, and sub-task states run their child method deterministically.
pub fn explore(
    model: &TmkModel,
    task_id: &str,
    initial: &WorldState,
    goal: &Expression,
    limits: ExploreLimits,
) -> Result<Option<DerivationalTrace>, SimError> {
    let method = first_method(model, task_id)?;
    let ws = prepare_initial(model, task_id, initial)?;
    let sim_options = SimOptions { step_limit: limits.step_limit, ..SimOptions::default() };

    let safe = |ws: &WorldState| -> Result<bool, SimError> {
        match &method.invariant {
            Some(inv) => eval_condition(inv, ws).map_err(eval_err(format!("invariant of `{}`", method.id))),
            None => Ok(true),
        }
    };
    let is_goal = |state: &str, ws: &WorldState| -> Result<bool, SimError> {
        Ok(method.end_states.contains(state) && eval_condition(goal, ws).map_err(eval_err("goal".into()))?)
    };
    // Runs the sub-task attached to `state`, returning its events and final snapshot.
    let arrive = |state: &str, mut ws: WorldState| -> Result<Option<(Vec<TraceEvent>, WorldState)>, SimError> {
        let mut runner = Runner::new(model, sim_options);
        Ok(match runner.enter_sub_task(method, state, &mut ws, 0)? {
            Some(_) => None,
            None => Some((runner.events, ws)),
        })
    };

    if !safe(&ws)? {
        return Ok(None);
    }
    let start_event = TraceEvent {
        step_index: 0,
        state_id: method.start_state.clone(),
        transition_id: None,
        world_state: ws.clone(),
        note: format!("start at {}", method.state_name(&method.start_state)),
        depth: 0,
    };
    let Some((child_events, ws)) = arrive(&method.start_state, ws)? else {
        return Ok(None);
    };
    let mut nodes = vec![Node {
        state: method.start_state.clone(),
        ws: ws.clone(),
        parent: None,
        depth: 0,
        events: std::iter::once(start_event).chain(child_events).collect(),
    }];
    let finish = |nodes: &[Node], idx: usize| -> DerivationalTrace {
        let mut chain = Vec::new();
        let mut cur = Some(idx);
        while let Some(i) = cur {
            chain.push(i);
            cur = nodes[i].parent;
        }
        let mut events: Vec<TraceEvent> = chain.iter().rev().flat_map(|&i| nodes[i].events.iter().cloned()).collect();
        for (i, e) in events.iter_mut().enumerate() {
            e.step_index = i;
        }
        DerivationalTrace::new(&model.id, task_id, &method.id, events, Outcome::ReachedEnd, None)
    };
    if is_goal(&method.start_state, &ws)? {
        return Ok(Some(finish(&nodes, 0)));
    }

    let mut visited: HashSet<(String, WorldState)> = HashSet::from([(method.start_state.clone(), ws)]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(idx) = queue.pop_front() {
        let (state, depth) = (nodes[idx].state.clone(), nodes[idx].depth);
        if method.end_states.contains(&state) || depth >= limits.step_limit {
            continue;
        }
        for t in method.outgoing(&state) {
            let current = &nodes[idx].ws;
            if !eval_condition(&t.condition, current).map_err(eval_err(format!("transition `{}` condition", t.id)))? {
                continue;
            }
            let next =
                apply_actions(&t.actions, current).map_err(eval_err(format!("transition `{}` actions", t.id)))?;
            if !safe(&next)? {
                continue;
            }
            let event = TraceEvent {
                step_index: 0,
                state_id: t.to_state.clone(),
                transition_id: Some(t.id.clone()),
                world_state: next.clone(),
                note: t.description.clone(),
                depth: 0,
            };
            let Some((child_events, next)) = arrive(&t.to_state, next)? else {
                continue;
            };
            if !visited.insert((t.to_state.clone(), next.clone())) {
                continue;
            }
            if nodes.len() >= limits.node_budget {
                return Err(SimError::SearchBudgetExhausted(limits.node_budget));
            }
            nodes.push(Node {
                state: t.to_state.clone(),
                ws: next,
                parent: Some(idx),
                depth: depth + 1,
                events: std::iter::once(event).chain(child_events).collect(),
            });
            let new_idx = nodes.len() - 1;
            if is_goal(&nodes[new_idx].state, &nodes[new_idx].ws)? {
                return Ok(Some(finish(&nodes, new_idx)));
            }
            queue.push_back(new_idx);
        }
    }
    Ok(None)
}
