//! The Task-Method-Knowledge data model, its `.tmk.json` file format, and
//! structural validation.

pub mod expr;
mod model;
mod parse;
mod validate;

pub use expr::{ArithOp, CmpOp, ExprType, Expression};
pub use model::{
    Action, EntityKind, KnowledgeEntity, Method, ParameterSpec, Relation, State, Task, TmkModel, Transition, Value,
    ValueKind, WorldState,
};
pub use parse::{load_model, parse_model, serialize_model, ParseError};
pub use validate::{reachable_states, validate_model, Issue, IssueCode, ValidationReport};
