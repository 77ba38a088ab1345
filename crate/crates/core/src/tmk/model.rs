use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::expr::Expression;

/// A skill's full design: goals, the mechanisms that achieve them, and the
/// vocabulary of the environment they operate in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmkModel {
    pub id: String,
    pub title: String,
    pub description: String,
    pub tasks: Vec<Task>,
    pub methods: Vec<Method>,
    pub knowledge: Vec<KnowledgeEntity>,
    /// Instance used when an episodic question needs a concrete world state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_initial: Option<WorldState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub givens: Vec<ParameterSpec>,
    #[serde(default)]
    pub makes: Vec<ParameterSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Integer,
    Boolean,
    Enum,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Integer => "integer",
            ValueKind::Boolean => "boolean",
            ValueKind::Enum => "enum",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpec {
    pub name: String,
    pub value_kind: ValueKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enum_values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<Expression>,
}

impl ParameterSpec {
    /// Value a `makes` slot holds before the method assigns it.
    pub fn default_value(&self) -> Value {
        match self.value_kind {
            ValueKind::Integer => Value::Int(0),
            ValueKind::Boolean => Value::Bool(false),
            ValueKind::Enum => {
                Value::Sym(self.enum_values.as_ref().and_then(|v| v.first()).cloned().unwrap_or_default())
            }
        }
    }

    pub fn admits(&self, value: &Value) -> bool {
        match (self.value_kind, value) {
            (ValueKind::Integer, Value::Int(_)) | (ValueKind::Boolean, Value::Bool(_)) => true,
            (ValueKind::Enum, Value::Sym(s)) => {
                self.enum_values.as_ref().is_some_and(|vals| vals.iter().any(|v| v == s))
            }
            _ => false,
        }
    }
}

/// An Organizer: a deterministic finite state machine for accomplishing a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Method {
    pub id: String,
    pub task_ref: String,
    pub description: String,
    pub states: Vec<State>,
    /// Declaration order decides which enabled transition fires.
    pub transitions: Vec<Transition>,
    pub start_state: String,
    pub end_states: BTreeSet<String>,
    /// Safety constraint checked after every step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariant: Option<Expression>,
}

impl Method {
    pub fn state(&self, id: &str) -> Option<&State> {
        self.states.iter().find(|s| s.id == id)
    }

    pub fn transition(&self, id: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.id == id)
    }

    pub fn outgoing<'a>(&'a self, state_id: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| t.from_state == state_id)
    }

    /// Display name of a state, falling back to its id.
    pub fn state_name<'a>(&'a self, id: &'a str) -> &'a str {
        self.state(id).map_or(id, |s| s.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub id: String,
    pub name: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_task_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transition {
    pub id: String,
    pub from_state: String,
    pub to_state: String,
    pub description: String,
    pub condition: Expression,
    #[serde(default)]
    pub actions: Vec<Action>,
}

impl Transition {
    /// Short label: the description up to its first colon.
    pub fn label(&self) -> &str {
        self.description.split(':').next().unwrap_or(&self.description).trim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    pub slot: String,
    pub expression: Expression,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} := {}", self.slot, self.expression)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Concept,
    Object,
    Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeEntity {
    pub id: String,
    pub name: String,
    pub kind: EntityKind,
    pub description: String,
    #[serde(default)]
    pub properties: BTreeMap<String, ValueKind>,
    #[serde(default)]
    pub relations: Vec<Relation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relation {
    /// Verb phrase, e.g. "watch over".
    pub name: String,
    pub target: String,
    /// Optional sentence stating the relationship in prose.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// A slot value. Serialized untagged: numbers, booleans, and strings for enum symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Sym(String),
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Int(_) => ValueKind::Integer,
            Value::Bool(_) => ValueKind::Boolean,
            Value::Sym(_) => ValueKind::Enum,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Sym(s) => f.write_str(s),
        }
    }
}

/// Immutable snapshot of every slot at one instant of a problem instance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorldState(BTreeMap<String, Value>);

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, slot: &str) -> Option<&Value> {
        self.0.get(slot)
    }

    pub fn contains(&self, slot: &str) -> bool {
        self.0.contains_key(slot)
    }

    /// Returns a new snapshot with `slot` set.
    pub fn with(mut self, slot: impl Into<String>, value: Value) -> Self {
        self.0.insert(slot.into(), value);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn insert(&mut self, slot: String, value: Value) {
        self.0.insert(slot, value);
    }

    /// Slots whose values differ from `previous`, as (slot, old, new).
    pub fn diff<'a>(&'a self, previous: &'a WorldState) -> Vec<(&'a str, Option<&'a Value>, &'a Value)> {
        self.0
            .iter()
            .filter(|(k, v)| previous.get(k) != Some(*v))
            .map(|(k, v)| (k.as_str(), previous.get(k), v))
            .collect()
    }
}

impl FromIterator<(String, Value)> for WorldState {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        WorldState(iter.into_iter().collect())
    }
}

impl fmt::Display for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl TmkModel {
    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn method(&self, id: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.id == id)
    }

    pub fn entity(&self, id: &str) -> Option<&KnowledgeEntity> {
        self.knowledge.iter().find(|k| k.id == id)
    }

    /// Methods accomplishing `task_id`, in declaration order.
    pub fn methods_for<'a, 'b>(&'a self, task_id: &'b str) -> impl Iterator<Item = &'a Method> + use<'a, 'b> {
        self.methods.iter().filter(move |m| m.task_ref == task_id)
    }

    /// Declared world-state slots for a task: its givens followed by its makes.
    pub fn slots_for(&self, task_id: &str) -> Vec<&ParameterSpec> {
        self.task(task_id).map(|t| t.givens.iter().chain(&t.makes).collect()).unwrap_or_default()
    }

    /// Compact description used in classification prompts.
    pub fn summary(&self) -> String {
        let tasks: Vec<&str> = self.tasks.iter().map(|t| t.name.as_str()).collect();
        let entities: Vec<&str> = self.knowledge.iter().map(|k| k.name.as_str()).collect();
        format!(
            "{}: {} Tasks: {}. Knowledge: {}.",
            self.title,
            self.description,
            if tasks.is_empty() { "none".to_string() } else { tasks.join(", ") },
            if entities.is_empty() { "none".to_string() } else { entities.join(", ") },
        )
    }
}
