//! Answer generation: iterative refinement, transition explanation, trace narration,
//! and the pipeline that routes a question through them.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classify::{classify, Category, ClassifyError, MemoryKind};
use crate::prompts::{render, verbosity_instruction, PromptSet};
use crate::providers::{complete_checked, CompletionRequest, LanguageModel, ProviderError, Providers};
use crate::retrieval::{
    build_index, compile_documents, select_for_category, DocCategory, Document, Index, RetrievalError, RetrievalSet,
};
use crate::sim::{simulate, summarize_trace, SimError, SimOptions, StoreError, TraceStore};
use crate::tmk::{Method, Task, TmkModel, Transition, WorldState};

/// Category reported on an answer: a classification category, or Episodic for simulated answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnswerCategory {
    KnowledgeModel,
    MethodTaskModel,
    MultiModel,
    Irrelevant,
    Episodic,
}

impl From<Category> for AnswerCategory {
    fn from(c: Category) -> Self {
        match c {
            Category::KnowledgeModel => AnswerCategory::KnowledgeModel,
            Category::MethodTaskModel => AnswerCategory::MethodTaskModel,
            Category::MultiModel => AnswerCategory::MultiModel,
            Category::Irrelevant => AnswerCategory::Irrelevant,
        }
    }
}

impl fmt::Display for AnswerCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnswerCategory::KnowledgeModel => "Knowledge Model",
            AnswerCategory::MethodTaskModel => "Method/Task Model",
            AnswerCategory::MultiModel => "Multi Model",
            AnswerCategory::Irrelevant => "Irrelevant",
            AnswerCategory::Episodic => "Episodic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub model_id: String,
    pub question: String,
    pub text: String,
    pub memory_kind: MemoryKind,
    pub category: AnswerCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_score: Option<u8>,
    pub cited_doc_ids: Vec<String>,
    /// Every draft in order; the first is the initial response.
    pub refinement_history: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("draft is empty")]
    EmptyDraft,
    #[error("no transitions to explain")]
    NoTransitions,
    #[error("classification: {0}")]
    Classify(#[source] ClassifyError),
    #[error("retrieval: {0}")]
    Retrieval(#[source] RetrievalError),
    #[error("{stage}: {source}")]
    Provider {
        stage: &'static str,
        #[source]
        source: ProviderError,
    },
    #[error("document `{0}` does not resolve to a model component")]
    DanglingDocument(String),
    #[error("simulation: model `{0}` declares no default_initial state")]
    NoInitialState(String),
    #[error("simulation: {0}")]
    Simulation(#[source] SimError),
    #[error("trace store: {0}")]
    Store(#[source] StoreError),
}

impl GenerationError {
    /// True when the failure came from a language model or embedder.
    pub fn is_provider_failure(&self) -> bool {
        matches!(
            self,
            GenerationError::Provider { .. }
                | GenerationError::Classify(ClassifyError::Provider(_))
                | GenerationError::Retrieval(RetrievalError::Provider(_))
        )
    }
}

fn provider(stage: &'static str) -> impl FnOnce(ProviderError) -> GenerationError {
    move |source| GenerationError::Provider { stage, source }
}

fn max_length(k_score: u8) -> u32 {
    match k_score {
        1 => 16,
        2 => 128,
        3 => 384,
        _ => 1024,
    }
}

pub fn initial_prompt(question: &str, doc: &Document, k_score: u8, topic: &str, prompts: &PromptSet) -> String {
    render(
        &prompts.initial,
        &[
            ("question", question),
            ("k_score", &k_score.to_string()),
            ("verbosity", verbosity_instruction(k_score)),
            ("topic", topic),
            ("context", &doc.text),
        ],
    )
}

pub fn refine_prompt(
    question: &str,
    draft: &str,
    doc: &Document,
    k_score: u8,
    topic: &str,
    prompts: &PromptSet,
) -> String {
    render(
        &prompts.refine,
        &[
            ("question", question),
            ("k_score", &k_score.to_string()),
            ("verbosity", verbosity_instruction(k_score)),
            ("topic", topic),
            ("draft", draft),
            ("context", &doc.text),
        ],
    )
}

/// Drafts an answer from the single most relevant document.
pub fn generate_initial(
    question: &str,
    doc: &Document,
    k_score: u8,
    topic: &str,
    llm: &dyn LanguageModel,
    prompts: &PromptSet,
) -> Result<String, GenerationError> {
    if question.trim().is_empty() {
        return Err(GenerationError::EmptyQuestion);
    }
    let request = CompletionRequest::new(initial_prompt(question, doc, k_score, topic, prompts))
        .with_max_length(max_length(k_score));
    complete_checked(llm, &request).map(|s| s.trim().to_string()).map_err(provider("initial response"))
}

/// Revises `draft` with one more document. May return the draft unchanged.
pub fn refine(
    question: &str,
    draft: &str,
    doc: &Document,
    k_score: u8,
    topic: &str,
    llm: &dyn LanguageModel,
    prompts: &PromptSet,
) -> Result<String, GenerationError> {
    if draft.trim().is_empty() {
        return Err(GenerationError::EmptyDraft);
    }
    let request = CompletionRequest::new(refine_prompt(question, draft, doc, k_score, topic, prompts))
        .with_max_length(max_length(k_score));
    complete_checked(llm, &request).map(|s| s.trim().to_string()).map_err(provider("refinement"))
}

/// Breadth-first from the start state; each visited state contributes its outgoing
/// transitions in declaration order. Transitions never reached follow, in declaration order.
pub fn extract_transitions(method: &Method) -> Vec<&Transition> {
    let mut out: Vec<&Transition> = Vec::with_capacity(method.transitions.len());
    let mut taken: BTreeSet<&str> = BTreeSet::new();
    let mut seen: BTreeSet<&str> = BTreeSet::from([method.start_state.as_str()]);
    let mut queue = VecDeque::from([method.start_state.as_str()]);
    while let Some(state) = queue.pop_front() {
        for t in method.transitions.iter().filter(|t| t.from_state == state) {
            if taken.insert(t.id.as_str()) {
                out.push(t);
            }
            if seen.insert(t.to_state.as_str()) {
                queue.push_back(t.to_state.as_str());
            }
        }
    }
    out.extend(method.transitions.iter().filter(|t| !taken.contains(t.id.as_str())));
    out
}

/// One line per transition, as the explanation prompt documents.
pub fn transitions_block(method: &Method, transitions: &[&Transition]) -> String {
    transitions
        .iter()
        .map(|t| {
            let actions: Vec<String> = t.actions.iter().map(ToString::to_string).collect();
            format!(
                "    - {} | from {} | to {} | when {} | do {} | {}",
                t.id,
                method.state_name(&t.from_state),
                method.state_name(&t.to_state),
                t.condition,
                if actions.is_empty() { "nothing".to_string() } else { actions.join(", ") },
                t.description.trim()
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn cot_prompt(
    question: &str,
    method: &Method,
    transitions: &[&Transition],
    task: &Task,
    k_score: u8,
    prompts: &PromptSet,
) -> String {
    let examples = render(&prompts.cot_examples, &[]);
    render(
        &prompts.cot_transitions,
        &[
            ("examples", &examples),
            ("question", question),
            ("k_score", &k_score.to_string()),
            ("verbosity", verbosity_instruction(k_score)),
            ("task_name", &task.name),
            ("task_description", &task.description),
            ("transitions", &transitions_block(method, transitions)),
        ],
    )
}

/// Chain-of-thought walk through the method's transitions.
pub fn explain_transitions(
    question: &str,
    method: &Method,
    transitions: &[&Transition],
    task: &Task,
    k_score: u8,
    llm: &dyn LanguageModel,
    prompts: &PromptSet,
) -> Result<String, GenerationError> {
    if transitions.is_empty() {
        return Err(GenerationError::NoTransitions);
    }
    let request = CompletionRequest::new(cot_prompt(question, method, transitions, task, k_score, prompts))
        .with_max_length(max_length(k_score).max(256));
    complete_checked(llm, &request).map(|s| s.trim().to_string()).map_err(provider("transition explanation"))
}

pub fn irrelevant_reply(model: &TmkModel, prompts: &PromptSet) -> String {
    render(&prompts.irrelevant, &[("topic", &model.title)])
}

/// A model bound to its document index, providers and prompts.
#[derive(Clone)]
pub struct Pipeline {
    model: Arc<TmkModel>,
    index: Arc<Index>,
    providers: Providers,
    prompts: Arc<PromptSet>,
    traces: Option<Arc<dyn TraceStore>>,
    sim_options: SimOptions,
}

impl fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pipeline")
            .field("model", &self.model.id)
            .field("documents", &self.index.len())
            .field("providers", &self.providers)
            .finish()
    }
}

impl Pipeline {
    /// Compiles and indexes the model's documents.
    pub fn new(model: TmkModel, providers: Providers, prompts: Arc<PromptSet>) -> Result<Self, RetrievalError> {
        let docs = compile_documents(&model, &prompts);
        let index = build_index(docs, providers.embedder.as_ref())?;
        Ok(Self::from_parts(Arc::new(model), Arc::new(index), providers, prompts))
    }

    pub fn from_parts(model: Arc<TmkModel>, index: Arc<Index>, providers: Providers, prompts: Arc<PromptSet>) -> Self {
        Pipeline { model, index, providers, prompts, traces: None, sim_options: SimOptions::default() }
    }

    /// Episodic answers persist their traces here.
    pub fn with_trace_store(mut self, store: Arc<dyn TraceStore>) -> Self {
        self.traces = Some(store);
        self
    }

    pub fn with_sim_options(mut self, options: SimOptions) -> Self {
        self.sim_options = options;
        self
    }

    pub fn model(&self) -> &TmkModel {
        &self.model
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn prompts(&self) -> &PromptSet {
        &self.prompts
    }

    pub fn providers(&self) -> &Providers {
        &self.providers
    }

    /// Answers with the model's `default_initial` state for episodic questions.
    pub fn answer(&self, question: &str) -> Result<Answer, GenerationError> {
        self.answer_with(question, None)
    }

    pub fn answer_with(&self, question: &str, initial: Option<&WorldState>) -> Result<Answer, GenerationError> {
        let question = question.trim();
        if question.is_empty() {
            return Err(GenerationError::EmptyQuestion);
        }
        let llm = self.providers.llm.as_ref();
        let classified = classify(question, &self.model, llm, &self.prompts).map_err(GenerationError::Classify)?;
        let mut answer = Answer {
            model_id: self.model.id.clone(),
            question: question.to_string(),
            text: String::new(),
            memory_kind: classified.memory_kind,
            category: AnswerCategory::Episodic,
            k_score: classified.k_score,
            cited_doc_ids: Vec::new(),
            refinement_history: Vec::new(),
            trace_id: None,
            note: None,
        };
        let Some(category) = classified.category else {
            self.episodic(&mut answer, initial)?;
            return Ok(answer);
        };
        answer.category = category.into();
        let k = classified.k_score.unwrap_or(2);
        match category {
            Category::Irrelevant => answer.text = irrelevant_reply(&self.model, &self.prompts),
            Category::KnowledgeModel | Category::MultiModel => self.refined(&mut answer, category, k)?,
            Category::MethodTaskModel => self.explained(&mut answer, k)?,
        }
        Ok(answer)
    }

    fn refined(&self, answer: &mut Answer, category: Category, k: u8) -> Result<(), GenerationError> {
        let llm = self.providers.llm.as_ref();
        let set = select_for_category(&self.index, &answer.question, category, k, self.providers.embedder.as_ref())
            .map_err(GenerationError::Retrieval)?;
        let docs = set.documents();
        let Some((first, rest)) = docs.split_first() else {
            answer.text = irrelevant_reply(&self.model, &self.prompts);
            answer.note = Some("no documents matched the requested categories".into());
            return Ok(());
        };
        let topic = &self.model.title;
        let mut draft = generate_initial(&answer.question, first, k, topic, llm, &self.prompts)?;
        answer.cited_doc_ids.push(first.doc_id.clone());
        answer.refinement_history.push(draft.clone());
        for doc in rest {
            draft = refine(&answer.question, &draft, doc, k, topic, llm, &self.prompts)?;
            answer.cited_doc_ids.push(doc.doc_id.clone());
            answer.refinement_history.push(draft.clone());
        }
        answer.text = draft;
        Ok(())
    }

    fn explained(&self, answer: &mut Answer, k: u8) -> Result<(), GenerationError> {
        let set = select_for_category(
            &self.index,
            &answer.question,
            Category::MethodTaskModel,
            k,
            self.providers.embedder.as_ref(),
        )
        .map_err(GenerationError::Retrieval)?;
        let RetrievalSet::TaskMethod { task: task_doc, method: method_doc } = set else {
            unreachable!("method/task retrieval always yields a pair");
        };
        let task = self
            .model
            .task(&task_doc.document.source_ref)
            .ok_or_else(|| GenerationError::DanglingDocument(task_doc.document.doc_id.clone()))?;
        let method = self
            .model
            .method(&method_doc.source_ref)
            .ok_or_else(|| GenerationError::DanglingDocument(method_doc.doc_id.clone()))?;
        let transitions = extract_transitions(method);
        let text = explain_transitions(
            &answer.question,
            method,
            &transitions,
            task,
            k,
            self.providers.llm.as_ref(),
            &self.prompts,
        )?;
        answer.cited_doc_ids = vec![task_doc.document.doc_id.clone(), method_doc.doc_id.clone()];
        answer.refinement_history = vec![text.clone()];
        answer.text = text;
        Ok(())
    }

    fn episodic(&self, answer: &mut Answer, initial: Option<&WorldState>) -> Result<(), GenerationError> {
        let task_doc = self
            .index
            .top_k(&answer.question, 1, Some(&[DocCategory::Task]), self.providers.embedder.as_ref())
            .map_err(GenerationError::Retrieval)?
            .into_iter()
            .next()
            .ok_or(GenerationError::Retrieval(RetrievalError::NoTaskDocument))?;
        let task_id = task_doc.document.source_ref.clone();
        let (initial, note) = match initial {
            Some(ws) => (ws.clone(), "Simulated from the session's initial state."),
            None => (
                self.model
                    .default_initial
                    .clone()
                    .ok_or_else(|| GenerationError::NoInitialState(self.model.id.clone()))?,
                "Simulated from the model's default initial state.",
            ),
        };
        let trace = simulate(&self.model, &task_id, &initial, self.sim_options).map_err(GenerationError::Simulation)?;
        if let Some(store) = &self.traces {
            store.put(&trace).map_err(GenerationError::Store)?;
        }
        answer.text = summarize_trace(&trace).narrate(Some(&self.model));
        answer.cited_doc_ids = vec![task_doc.document.doc_id];
        answer.trace_id = Some(trace.trace_id);
        answer.note = Some(note.into());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tmk::{Expression, State};

    fn state(id: &str) -> State {
        State { id: id.into(), name: id.to_uppercase(), description: String::new(), sub_task_ref: None }
    }

    fn transition(id: &str, from: &str, to: &str) -> Transition {
        Transition {
            id: id.into(),
            from_state: from.into(),
            to_state: to.into(),
            description: format!("{id}: step"),
            condition: Expression::Bool(true),
            actions: vec![],
        }
    }

    fn method(transitions: Vec<Transition>, states: &[&str]) -> Method {
        Method {
            id: "m".into(),
            task_ref: "t".into(),
            description: String::new(),
            states: states.iter().map(|s| state(s)).collect(),
            transitions,
            start_state: "a".into(),
            end_states: ["c".to_string()].into(),
            invariant: None,
        }
    }

    #[test]
    fn chain_is_linearized_in_chain_order() {
        let m = method(vec![transition("bc", "b", "c"), transition("ab", "a", "b")], &["a", "b", "c"]);
        let ids: Vec<&str> = extract_transitions(&m).iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, ["ab", "bc"]);
    }

    #[test]
    fn unreachable_island_follows_in_declaration_order() {
        let m = method(
            vec![
                transition("yx", "y", "x"),
                transition("bc", "b", "c"),
                transition("xy", "x", "y"),
                transition("ab", "a", "b"),
            ],
            &["a", "b", "c", "x", "y"],
        );
        let ids: Vec<&str> = extract_transitions(&m).iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, ["ab", "bc", "yx", "xy"]);
    }

    #[test]
    fn block_lists_every_transition() {
        let m = method(vec![transition("ab", "a", "b")], &["a", "b", "c"]);
        let block = transitions_block(&m, &extract_transitions(&m));
        assert_eq!(block, "    - ab | from A | to B | when true | do nothing | ab: step");
    }
}
