//! Deterministic execution of TMK methods and the traces it produces.

mod engine;
mod eval;
mod explore;
mod replay;
mod store;
mod summary;
mod trace;

pub use engine::{
    prepare_initial, simulate, step, world, SimError, SimOptions, Step, DEFAULT_MAX_DEPTH, DEFAULT_STEP_LIMIT,
};
pub use eval::{apply_actions, eval_condition, eval_expression, EvalError};
pub use explore::{explore, ExploreLimits, DEFAULT_NODE_BUDGET};
pub use replay::{first_violation, replay_trace, ReplayError};
pub use store::{valid_trace_id, write_atomic, FileTraceStore, MemoryTraceStore, StoreError, TraceStore};
pub use summary::{summarize_trace, StateVisit, TraceSummary, TransitionTaken, ViolationDetail};
pub use trace::{DerivationalTrace, Outcome, TraceEvent, Violation};
