//! Two-stage question classification and verbosity (k-score) estimation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::prompts::{render, PromptSet};
use crate::providers::{complete_checked, CompletionRequest, LanguageModel, ProviderError};
use crate::tmk::TmkModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MemoryKind {
    Semantic,
    Episodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    KnowledgeModel,
    MethodTaskModel,
    MultiModel,
    Irrelevant,
}

impl Category {
    pub const ALL: [Category; 4] =
        [Category::KnowledgeModel, Category::MethodTaskModel, Category::MultiModel, Category::Irrelevant];

    /// Label as it appears in prompts.
    pub fn label(self) -> &'static str {
        match self {
            Category::KnowledgeModel => "Knowledge Model",
            Category::MethodTaskModel => "Method/Task Model",
            Category::MultiModel => "Multi Model",
            Category::Irrelevant => "Irrelevant",
        }
    }

    fn description(self) -> &'static str {
        match self {
            Category::KnowledgeModel => {
                "Questions about the objects, concepts and relationships that make up the environment of the skill."
            }
            Category::MethodTaskModel => {
                "Questions about the goals of the skill and the states, transitions and steps used to reach them."
            }
            Category::MultiModel => "Questions that tie entities of the environment to tasks or method steps.",
            Category::Irrelevant => "Questions that have nothing to do with this model.",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for MemoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemoryKind::Semantic => "Semantic",
            MemoryKind::Episodic => "Episodic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifiedQuestion {
    pub text: String,
    pub memory_kind: MemoryKind,
    /// Only for semantic questions.
    pub category: Option<Category>,
    /// Only for semantic questions that will be answered from documents.
    pub k_score: Option<u8>,
    pub rationale: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("{stage} completion `{completion}` is not a known label")]
    UnparseableLabel { stage: &'static str, completion: String },
    #[error("k-score completion `{0}` contains no integer")]
    NoScore(String),
}

fn non_empty(question: &str) -> Result<&str, ClassifyError> {
    let q = question.trim();
    if q.is_empty() {
        Err(ClassifyError::EmptyQuestion)
    } else {
        Ok(q)
    }
}

fn normalize_label(completion: &str) -> String {
    let lower = completion.trim().to_lowercase();
    lower.trim_matches(|c: char| !c.is_alphanumeric() && c != '/').to_string()
}

/// Exact match against any alias, then the longest alias the completion starts with
/// at a word boundary. Anything else is `None`.
pub fn parse_label<T: Copy>(completion: &str, lexicon: &[(&str, T)]) -> Option<T> {
    let norm = normalize_label(completion);
    if let Some((_, v)) = lexicon.iter().find(|(alias, _)| *alias == norm) {
        return Some(*v);
    }
    let mut aliases: Vec<&(&str, T)> = lexicon.iter().collect();
    aliases.sort_by_key(|(alias, _)| std::cmp::Reverse(alias.len()));
    aliases
        .into_iter()
        .find(|(alias, _)| {
            norm.strip_prefix(alias).is_some_and(|rest| rest.chars().next().is_some_and(|c| !c.is_alphanumeric()))
        })
        .map(|(_, v)| *v)
}

const MEMORY_LEXICON: &[(&str, MemoryKind)] = &[
    ("semantic", MemoryKind::Semantic),
    ("semantic knowledge", MemoryKind::Semantic),
    ("episodic", MemoryKind::Episodic),
    ("episodic knowledge", MemoryKind::Episodic),
];

const CATEGORY_LEXICON: &[(&str, Category)] = &[
    ("knowledge model", Category::KnowledgeModel),
    ("knowledge", Category::KnowledgeModel),
    ("knowledgemodel", Category::KnowledgeModel),
    ("method/task model", Category::MethodTaskModel),
    ("method/task", Category::MethodTaskModel),
    ("task/method model", Category::MethodTaskModel),
    ("method task model", Category::MethodTaskModel),
    ("methodtaskmodel", Category::MethodTaskModel),
    ("multi model", Category::MultiModel),
    ("multi-model", Category::MultiModel),
    ("multi", Category::MultiModel),
    ("multimodel", Category::MultiModel),
    ("irrelevant", Category::Irrelevant),
];

pub fn parse_memory_kind(completion: &str) -> Option<MemoryKind> {
    parse_label(completion, MEMORY_LEXICON)
}

pub fn parse_category(completion: &str) -> Option<Category> {
    parse_label(completion, CATEGORY_LEXICON)
}

/// First integer in the completion, clamped into 1..=4 with a warning when outside.
pub fn parse_k_score(completion: &str) -> Result<u8, ClassifyError> {
    let bytes = completion.as_bytes();
    let start = bytes.iter().position(u8::is_ascii_digit).ok_or_else(|| ClassifyError::NoScore(completion.into()))?;
    let end = bytes[start..].iter().position(|b| !b.is_ascii_digit()).map_or(bytes.len(), |n| start + n);
    let negative = start > 0 && bytes[start - 1] == b'-';
    let magnitude: u64 = completion[start..end].parse().unwrap_or(u64::MAX);
    let clamped = if negative && magnitude > 0 { 1 } else { magnitude.clamp(1, 4) as u8 };
    if negative || u64::from(clamped) != magnitude {
        log::warn!("k-score completion {completion:?} is outside 1..=4; using {clamped}");
    }
    Ok(clamped)
}

pub fn memory_prompt(question: &str, model: &TmkModel, prompts: &PromptSet) -> String {
    render(&prompts.classify_memory, &[("question", question), ("model_summary", &model.summary())])
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Per-category context blocks listing the model's entities, tasks and method steps.
pub fn category_descriptions(model: &TmkModel) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!("    {}:", Category::KnowledgeModel.label()));
    line(format!("    {}", Category::KnowledgeModel.description()));
    line("    In the context of this problem, we have the following knowledge entities:".into());
    for e in &model.knowledge {
        line(format!("        - {}: {}", e.name, one_line(&e.description)));
    }
    line(format!("    {}:", Category::MethodTaskModel.label()));
    line(format!("    {}", Category::MethodTaskModel.description()));
    line("    In the context of this problem, we have the following tasks:".into());
    for t in &model.tasks {
        let methods: Vec<String> = model.methods_for(&t.id).map(|m| one_line(&m.description)).collect();
        let how = if methods.is_empty() { String::new() } else { format!(" Method: {}", methods.join(" ")) };
        line(format!("        - {}: {}{how}", t.name, one_line(&t.description)));
    }
    line("    and the following method steps:".into());
    let mut steps: Vec<&str> = Vec::new();
    for m in &model.methods {
        for name in m.states.iter().map(|s| s.name.as_str()).chain(m.transitions.iter().map(|t| t.label())) {
            if !steps.contains(&name) {
                steps.push(name);
            }
        }
    }
    for s in steps {
        line(format!("        - {s}"));
    }
    line(format!("    {}:", Category::MultiModel.label()));
    line(format!("    {}", Category::MultiModel.description()));
    let names: Vec<&str> =
        model.tasks.iter().map(|t| t.name.as_str()).chain(model.knowledge.iter().map(|k| k.name.as_str())).collect();
    line(format!(
        "    In the context of this problem, we have the following Task, Method, and Knowledge entities: {}",
        names.join(", ")
    ));
    line(format!("    {}:", Category::Irrelevant.label()));
    line(format!("    {}", Category::Irrelevant.description()));
    out.trim_end().to_string()
}

pub fn category_prompt(question: &str, model: &TmkModel, prompts: &PromptSet) -> String {
    let examples = render(&prompts.category_examples, &[]);
    render(
        &prompts.classify_category,
        &[("question", question), ("category_descriptions", &category_descriptions(model)), ("examples", &examples)],
    )
}

pub fn k_score_prompt(question: &str, prompts: &PromptSet) -> String {
    render(&prompts.k_score, &[("question", question)])
}

pub fn classify_memory(
    question: &str,
    model: &TmkModel,
    llm: &dyn LanguageModel,
    prompts: &PromptSet,
) -> Result<MemoryKind, ClassifyError> {
    let q = non_empty(question)?;
    let completion =
        complete_checked(llm, &CompletionRequest::new(memory_prompt(q, model, prompts)).with_max_length(8))?;
    parse_memory_kind(&completion).ok_or(ClassifyError::UnparseableLabel { stage: "memory", completion })
}

pub fn classify_category(
    question: &str,
    model: &TmkModel,
    llm: &dyn LanguageModel,
    prompts: &PromptSet,
) -> Result<Category, ClassifyError> {
    let q = non_empty(question)?;
    let completion =
        complete_checked(llm, &CompletionRequest::new(category_prompt(q, model, prompts)).with_max_length(8))?;
    parse_category(&completion).ok_or(ClassifyError::UnparseableLabel { stage: "category", completion })
}

pub fn compute_k_score(question: &str, llm: &dyn LanguageModel, prompts: &PromptSet) -> Result<u8, ClassifyError> {
    let q = non_empty(question)?;
    let completion = complete_checked(llm, &CompletionRequest::new(k_score_prompt(q, prompts)).with_max_length(4))?;
    parse_k_score(&completion)
}

/// Memory kind, then category for semantic questions, then a k-score unless irrelevant.
pub fn classify(
    question: &str,
    model: &TmkModel,
    llm: &dyn LanguageModel,
    prompts: &PromptSet,
) -> Result<ClassifiedQuestion, ClassifyError> {
    let text = non_empty(question)?.to_string();
    let memory_kind = classify_memory(&text, model, llm, prompts)?;
    if memory_kind == MemoryKind::Episodic {
        return Ok(ClassifiedQuestion {
            text,
            memory_kind,
            category: None,
            k_score: None,
            rationale: format!("{} classified the question as episodic", llm.name()),
        });
    }
    let category = classify_category(&text, model, llm, prompts)?;
    let k_score = match category {
        Category::Irrelevant => None,
        _ => Some(compute_k_score(&text, llm, prompts)?),
    };
    Ok(ClassifiedQuestion {
        text,
        memory_kind,
        category: Some(category),
        k_score,
        rationale: format!("{} classified the question as semantic, {}", llm.name(), category.label()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_parsing_exact_then_prefix() {
        assert_eq!(parse_category("Knowledge Model"), Some(Category::KnowledgeModel));
        assert_eq!(parse_category("  method/task model.\n"), Some(Category::MethodTaskModel));
        assert_eq!(parse_category("Multi Model question, because"), Some(Category::MultiModel));
        assert_eq!(parse_category("\"Irrelevant\""), Some(Category::Irrelevant));
        assert_eq!(parse_category("knowledgeable"), None);
        assert_eq!(parse_category("I think it is knowledge"), None);
        assert_eq!(parse_memory_kind("Episodic."), Some(MemoryKind::Episodic));
        assert_eq!(parse_memory_kind("procedural"), None);
    }

    #[test]
    fn k_score_parsing_clamps() {
        assert_eq!(parse_k_score("2").unwrap(), 2);
        assert_eq!(parse_k_score("7").unwrap(), 4);
        assert_eq!(parse_k_score("0").unwrap(), 1);
        assert_eq!(parse_k_score("score: -3").unwrap(), 1);
        assert_eq!(parse_k_score("99999999999999999999999").unwrap(), 4);
        assert_eq!(parse_k_score("k=3, maybe 4").unwrap(), 3);
        assert!(matches!(parse_k_score("two"), Err(ClassifyError::NoScore(_))));
    }

    #[test]
    fn empty_question_is_rejected() {
        let model: TmkModel = serde_json::from_value(serde_json::json!({
            "id": "m", "title": "T", "description": "", "tasks": [], "methods": [], "knowledge": []
        }))
        .unwrap();
        let llm = crate::providers::MockLanguageModel::new();
        let err = classify_memory("   ", &model, &llm, &PromptSet::builtin()).unwrap_err();
        assert!(matches!(err, ClassifyError::EmptyQuestion));
    }
}
