use crate::tmk::{Expression, Method, TmkModel, Value, WorldState};

use super::eval::{apply_actions, eval_condition, EvalError};
use super::trace::{DerivationalTrace, Outcome, TraceEvent, Violation};

pub const DEFAULT_STEP_LIMIT: usize = 10_000;
pub const DEFAULT_MAX_DEPTH: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("task `{0}` has no method")]
    NoMethodForTask(String),
    #[error("method `{method}` references undeclared state `{state}`")]
    UnknownState { method: String, state: String },
    #[error("initial state: slot `{slot}` {reason}")]
    InvalidInitialState { slot: String, reason: String },
    #[error("initial state violates the constraint on `{slot}`: {constraint}")]
    GivenConstraintViolated { slot: String, constraint: Expression },
    #[error("sub-task nesting exceeds the depth limit of {0}")]
    DepthLimit(usize),
    #[error("search exhausted its budget of {0} nodes")]
    SearchBudgetExhausted(usize),
    #[error("{location}: {source}")]
    Eval {
        location: String,
        #[source]
        source: EvalError,
    },
}

fn eval_err(location: impl Into<String>) -> impl FnOnce(EvalError) -> SimError {
    let location = location.into();
    move |source| SimError::Eval { location, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    /// Maximum number of transitions fired, across all nesting levels.
    pub step_limit: usize,
    /// Maximum sub-task nesting.
    pub max_depth: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { step_limit: DEFAULT_STEP_LIMIT, max_depth: DEFAULT_MAX_DEPTH }
    }
}

impl SimOptions {
    pub fn with_step_limit(step_limit: usize) -> Self {
        SimOptions { step_limit, ..Default::default() }
    }
}

/// Result of firing one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub next_state: String,
    pub world: WorldState,
    pub event: TraceEvent,
}

/// Fires the first transition, in declaration order, that leaves `current`
/// and whose condition holds on `ws`. `None` when nothing is enabled.
pub fn step(method: &Method, current: &str, ws: &WorldState, step_index: usize) -> Result<Option<Step>, SimError> {
    if method.state(current).is_none() {
        return Err(SimError::UnknownState { method: method.id.clone(), state: current.to_string() });
    }
    for t in method.outgoing(current) {
        if eval_condition(&t.condition, ws).map_err(eval_err(format!("transition `{}` condition", t.id)))? {
            let world = apply_actions(&t.actions, ws).map_err(eval_err(format!("transition `{}` actions", t.id)))?;
            let event = TraceEvent {
                step_index,
                state_id: t.to_state.clone(),
                transition_id: Some(t.id.clone()),
                world_state: world.clone(),
                note: t.description.clone(),
                depth: 0,
            };
            return Ok(Some(Step { next_state: t.to_state.clone(), world, event }));
        }
    }
    Ok(None)
}

pub(crate) fn first_method<'a>(model: &'a TmkModel, task_id: &str) -> Result<&'a Method, SimError> {
    if model.task(task_id).is_none() {
        return Err(SimError::UnknownTask(task_id.to_string()));
    }
    model.methods_for(task_id).next().ok_or_else(|| SimError::NoMethodForTask(task_id.to_string()))
}

/// Checks the supplied givens, fills unassigned `makes` slots with their
/// defaults and enforces given constraints.
pub fn prepare_initial(model: &TmkModel, task_id: &str, initial: &WorldState) -> Result<WorldState, SimError> {
    let task = model.task(task_id).ok_or_else(|| SimError::UnknownTask(task_id.to_string()))?;
    let mut ws = initial.clone();
    for given in &task.givens {
        match initial.get(&given.name) {
            None => {
                return Err(SimError::InvalidInitialState { slot: given.name.clone(), reason: "is missing".into() })
            }
            Some(v) if !given.admits(v) => {
                return Err(SimError::InvalidInitialState {
                    slot: given.name.clone(),
                    reason: format!("holds `{v}`, which does not fit kind {}", given.value_kind),
                })
            }
            Some(_) => {}
        }
    }
    for made in &task.makes {
        match ws.get(&made.name) {
            None => ws.insert(made.name.clone(), made.default_value()),
            Some(v) if !made.admits(v) => {
                return Err(SimError::InvalidInitialState {
                    slot: made.name.clone(),
                    reason: format!("holds `{v}`, which does not fit kind {}", made.value_kind),
                })
            }
            Some(_) => {}
        }
    }
    for given in &task.givens {
        if let Some(c) = &given.constraint {
            let ok = eval_condition(c, &ws).map_err(eval_err(format!("constraint on `{}`", given.name)))?;
            if !ok {
                return Err(SimError::GivenConstraintViolated { slot: given.name.clone(), constraint: c.clone() });
            }
        }
    }
    Ok(ws)
}

/// Runs the task's first method from its start state until an end state,
/// a stuck state, a violated invariant, or the step limit.
pub fn simulate(
    model: &TmkModel,
    task_id: &str,
    initial: &WorldState,
    options: SimOptions,
) -> Result<DerivationalTrace, SimError> {
    let method = first_method(model, task_id)?;
    let ws = prepare_initial(model, task_id, initial)?;
    let mut runner = Runner::new(model, options);
    let (_, outcome) =
        runner.run_method(method, ws, 0, format!("start at {}", method.state_name(&method.start_state)))?;
    Ok(DerivationalTrace::new(&model.id, task_id, &method.id, runner.events, outcome, runner.violation))
}

pub(crate) struct Runner<'a> {
    model: &'a TmkModel,
    options: SimOptions,
    pub(crate) events: Vec<TraceEvent>,
    fired: usize,
    guards: Vec<(&'a str, &'a Expression)>,
    pub(crate) violation: Option<Violation>,
}

impl<'a> Runner<'a> {
    pub(crate) fn new(model: &'a TmkModel, options: SimOptions) -> Self {
        Runner { model, options, events: Vec::new(), fired: 0, guards: Vec::new(), violation: None }
    }

    fn push(&mut self, mut event: TraceEvent, depth: usize) {
        event.step_index = self.events.len();
        event.depth = depth;
        self.events.push(event);
    }

    /// Checks every active invariant against the latest event. Records the
    /// first violation and returns false when one fails.
    fn invariants_hold(&mut self) -> Result<bool, SimError> {
        let last = self.events.last().expect("checked after push");
        for (method_id, inv) in &self.guards {
            let ok = eval_condition(inv, &last.world_state).map_err(eval_err(format!("invariant of `{method_id}`")))?;
            if !ok {
                self.violation = Some(Violation {
                    step_index: last.step_index,
                    method_id: method_id.to_string(),
                    invariant: (*inv).clone(),
                });
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub(crate) fn run_method(
        &mut self,
        method: &'a Method,
        ws: WorldState,
        depth: usize,
        entry_note: String,
    ) -> Result<(WorldState, Outcome), SimError> {
        if depth > self.options.max_depth {
            return Err(SimError::DepthLimit(self.options.max_depth));
        }
        if method.state(&method.start_state).is_none() {
            return Err(SimError::UnknownState { method: method.id.clone(), state: method.start_state.clone() });
        }
        let guarded = method.invariant.as_ref().map(|inv| self.guards.push((&method.id, inv))).is_some();
        let result = self.drive(method, ws, depth, entry_note);
        if guarded {
            self.guards.pop();
        }
        result
    }

    fn drive(
        &mut self,
        method: &'a Method,
        ws: WorldState,
        depth: usize,
        entry_note: String,
    ) -> Result<(WorldState, Outcome), SimError> {
        let start = TraceEvent {
            step_index: 0,
            state_id: method.start_state.clone(),
            transition_id: None,
            world_state: ws.clone(),
            note: entry_note,
            depth,
        };
        self.push(start, depth);
        if !self.invariants_hold()? {
            return Ok((ws, Outcome::ConstraintViolation));
        }
        let mut state = method.start_state.clone();
        let mut ws = ws;
        if let Some(failed) = self.enter_sub_task(method, &state, &mut ws, depth)? {
            return Ok((ws, failed));
        }
        loop {
            if method.end_states.contains(&state) {
                return Ok((ws, Outcome::ReachedEnd));
            }
            if self.fired >= self.options.step_limit {
                return Ok((ws, Outcome::StepLimit));
            }
            let Some(next) = step(method, &state, &ws, self.events.len())? else {
                return Ok((ws, Outcome::Stuck));
            };
            self.fired += 1;
            self.push(next.event, depth);
            state = next.next_state;
            ws = next.world;
            if !self.invariants_hold()? {
                return Ok((ws, Outcome::ConstraintViolation));
            }
            if let Some(failed) = self.enter_sub_task(method, &state, &mut ws, depth)? {
                return Ok((ws, failed));
            }
        }
    }

    /// Runs the sub-task attached to `state_id`, if any, updating `ws` with its
    /// final snapshot. Returns the child's outcome when it did not finish.
    pub(crate) fn enter_sub_task(
        &mut self,
        method: &Method,
        state_id: &str,
        ws: &mut WorldState,
        depth: usize,
    ) -> Result<Option<Outcome>, SimError> {
        let model = self.model;
        let state = method
            .state(state_id)
            .ok_or_else(|| SimError::UnknownState { method: method.id.clone(), state: state_id.to_string() })?;
        let Some(sub) = &state.sub_task_ref else {
            return Ok(None);
        };
        let child = first_method(model, sub)?;
        let prepared = prepare_initial(model, sub, ws)?;
        let name = model.task(sub).map_or(sub.as_str(), |t| t.name.as_str());
        let (out_ws, outcome) = self.run_method(child, prepared, depth + 1, format!("enter sub-task {name}"))?;
        *ws = out_ws;
        Ok((outcome != Outcome::ReachedEnd).then_some(outcome))
    }
}

/// Convenience for building world states in tests and examples.
pub fn world<const N: usize>(pairs: [(&str, Value); N]) -> WorldState {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
