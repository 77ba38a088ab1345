//! Prompt and document templates. Built-in copies are compiled in; any file of the
//! same name in an override directory replaces its built-in counterpart.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// First line of each provider-facing template. The mock provider dispatches on these.
pub mod leads {
    pub const MEMORY: &str =
        "Classify the following question as relating to either semantic knowledge or episodic knowledge:";
    pub const CATEGORY: &str = "Classify the following question as either a Knowledge Model, Method/Task Model, Multi Model, or Irrelevant question:";
    pub const K_SCORE: &str = "Estimate the verbosity of the expected response to the following question";
    pub const INITIAL: &str = "Generate a response to the following question:";
    pub const REFINE: &str = "Refine the response to the following question if necessary:";
    pub const COT: &str = "Explain how the following task is accomplished by stepping through its transitions";
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("cannot read prompt template {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub classify_memory: String,
    pub classify_category: String,
    pub category_examples: String,
    pub k_score: String,
    pub initial: String,
    pub refine: String,
    pub cot_transitions: String,
    pub cot_examples: String,
    pub irrelevant: String,
    pub doc_knowledge: String,
    pub doc_relationships: String,
    pub doc_task: String,
    pub doc_method: String,
}

macro_rules! builtin {
    ($file:literal) => {
        include_str!(concat!("../prompts/", $file))
    };
}

const FILES: [&str; 13] = [
    "classify_memory.txt",
    "classify_category.txt",
    "category_examples.txt",
    "k_score.txt",
    "initial.txt",
    "refine.txt",
    "cot_transitions.txt",
    "cot_examples.txt",
    "irrelevant.txt",
    "doc_templates/knowledge.txt",
    "doc_templates/relationships.txt",
    "doc_templates/task.txt",
    "doc_templates/method.txt",
];

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet::builtin()
    }
}

impl PromptSet {
    pub fn builtin() -> Self {
        PromptSet {
            classify_memory: builtin!("classify_memory.txt").into(),
            classify_category: builtin!("classify_category.txt").into(),
            category_examples: builtin!("category_examples.txt").into(),
            k_score: builtin!("k_score.txt").into(),
            initial: builtin!("initial.txt").into(),
            refine: builtin!("refine.txt").into(),
            cot_transitions: builtin!("cot_transitions.txt").into(),
            cot_examples: builtin!("cot_examples.txt").into(),
            irrelevant: builtin!("irrelevant.txt").into(),
            doc_knowledge: builtin!("doc_templates/knowledge.txt").into(),
            doc_relationships: builtin!("doc_templates/relationships.txt").into(),
            doc_task: builtin!("doc_templates/task.txt").into(),
            doc_method: builtin!("doc_templates/method.txt").into(),
        }
    }

    /// Built-ins overridden by whichever template files exist under `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut set = PromptSet::builtin();
        for name in FILES {
            let path = dir.join(name);
            match fs::read_to_string(&path) {
                Ok(text) => *set.slot_mut(name) = text,
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(source) => return Err(PromptError::Io { path, source }),
            }
        }
        Ok(set)
    }

    fn slot_mut(&mut self, file: &str) -> &mut String {
        match file {
            "classify_memory.txt" => &mut self.classify_memory,
            "classify_category.txt" => &mut self.classify_category,
            "category_examples.txt" => &mut self.category_examples,
            "k_score.txt" => &mut self.k_score,
            "initial.txt" => &mut self.initial,
            "refine.txt" => &mut self.refine,
            "cot_transitions.txt" => &mut self.cot_transitions,
            "cot_examples.txt" => &mut self.cot_examples,
            "irrelevant.txt" => &mut self.irrelevant,
            "doc_templates/knowledge.txt" => &mut self.doc_knowledge,
            "doc_templates/relationships.txt" => &mut self.doc_relationships,
            "doc_templates/task.txt" => &mut self.doc_task,
            "doc_templates/method.txt" => &mut self.doc_method,
            other => unreachable!("unknown template {other}"),
        }
    }
}

/// Removes `#` comment lines and fills `{name}` placeholders in one pass, so
/// braces inside substituted values are never expanded. Unknown placeholders stay literal.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let body: Vec<&str> = template.lines().filter(|l| !l.starts_with('#')).collect();
    let body = body.join("\n");
    let mut out = String::with_capacity(body.len());
    let mut rest = body.as_str();
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(after.len());
        let name = &after[..name_len];
        match vars.iter().find(|(k, _)| *k == name) {
            Some((_, value)) if after[name_len..].starts_with('}') => {
                out.push_str(value);
                rest = &after[name_len + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out.trim().to_string()
}

/// Renders and then drops lines left blank by empty placeholders.
pub fn render_compact(template: &str, vars: &[(&str, &str)]) -> String {
    render(template, vars).lines().filter(|l| !l.trim().is_empty()).collect::<Vec<_>>().join("\n")
}

/// Verbosity instruction embedded in generation prompts.
pub fn verbosity_instruction(k_score: u8) -> &'static str {
    match k_score {
        1 => "very brief, 3-5 words",
        2 => "short, a few sentences",
        3 => "detailed, about one paragraph",
        _ => "comprehensive, several paragraphs",
    }
}
