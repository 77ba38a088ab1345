//! Compiles a model into categorized documents and retrieves them by cosine similarity.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classify::Category;
use crate::prompts::{render_compact, PromptSet};
use crate::providers::{cosine, Embedder, EmbeddingVector, ProviderError};
use crate::text::singular;
use crate::tmk::{KnowledgeEntity, Method, ParameterSpec, Task, TmkModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DocCategory {
    Knowledge,
    Task,
    Method,
}

impl DocCategory {
    pub const ALL: [DocCategory; 3] = [DocCategory::Knowledge, DocCategory::Task, DocCategory::Method];

    pub fn slug(self) -> &'static str {
        match self {
            DocCategory::Knowledge => "knowledge",
            DocCategory::Task => "task",
            DocCategory::Method => "method",
        }
    }
}

impl fmt::Display for DocCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DocCategory::Knowledge => "Knowledge",
            DocCategory::Task => "Task",
            DocCategory::Method => "Method",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub category: DocCategory,
    pub title: String,
    pub text: String,
    pub source_ref: String,
    /// Task documents only: the doc id of the task's method document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub associated_method_ref: Option<String>,
}

pub fn doc_id(model_id: &str, category: DocCategory, source_ref: &str) -> String {
    format!("{model_id}/{}/{source_ref}", category.slug())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDocument {
    pub document: Document,
    pub score: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("cannot build an index from an empty corpus")]
    EmptyCorpus,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("vector for `{doc_id}` has dimension {found}, expected {expected}")]
    DimensionMismatch { doc_id: String, expected: usize, found: usize },
    #[error("task document `{0}` has no associated method document")]
    MissingAssociatedMethod(String),
    #[error("the corpus has no task documents")]
    NoTaskDocument,
    #[error("irrelevant questions are not answered from documents")]
    NotRetrievable,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn entity_name<'a>(model: &'a TmkModel, id: &'a str) -> &'a str {
    model.entity(id).map_or(id, |e| e.name.as_str())
}

fn knowledge_document(model: &TmkModel, e: &KnowledgeEntity, prompts: &PromptSet) -> Document {
    let properties = if e.properties.is_empty() {
        String::new()
    } else {
        let list: Vec<String> = e.properties.iter().map(|(n, k)| format!("{n} ({k})")).collect();
        format!("Properties of {}: {}.", e.name, join_list(&list))
    };
    let relations: Vec<String> =
        e.relations.iter().map(|r| format!("{} {} {}.", e.name, r.name, entity_name(model, &r.target))).collect();
    let kind = serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let text = render_compact(
        &prompts.doc_knowledge,
        &[
            ("name", &e.name),
            ("kind", &kind),
            ("description", &e.description),
            ("properties", &properties),
            ("relations", &relations.join(" ")),
        ],
    );
    Document {
        doc_id: doc_id(&model.id, DocCategory::Knowledge, &e.id),
        category: DocCategory::Knowledge,
        title: format!("{} Definition", singular(&e.name)),
        text,
        source_ref: e.id.clone(),
        associated_method_ref: None,
    }
}

fn relationships_document(model: &TmkModel, prompts: &PromptSet) -> Option<Document> {
    let sentences: Vec<String> = model
        .knowledge
        .iter()
        .flat_map(|e| {
            e.relations.iter().map(move |r| match &r.description {
                Some(d) => d.trim().to_string(),
                None => format!("{} {} {}.", e.name, r.name, entity_name(model, &r.target)),
            })
        })
        .collect();
    if sentences.is_empty() {
        return None;
    }
    let text =
        render_compact(&prompts.doc_relationships, &[("topic", &model.title), ("relations", &sentences.join("\n"))]);
    Some(Document {
        doc_id: doc_id(&model.id, DocCategory::Knowledge, &model.id),
        category: DocCategory::Knowledge,
        title: "Relationships".into(),
        text,
        source_ref: model.id.clone(),
        associated_method_ref: None,
    })
}

fn parameter_list(params: &[ParameterSpec]) -> String {
    if params.is_empty() {
        return "none".into();
    }
    let items: Vec<String> = params
        .iter()
        .map(|p| {
            let mut kind = p.value_kind.to_string();
            if let Some(values) = &p.enum_values {
                kind = format!("{kind} of {}", values.join("/"));
            }
            match &p.constraint {
                Some(c) => format!("{} ({kind}, {c})", p.name),
                None => format!("{} ({kind})", p.name),
            }
        })
        .collect();
    items.join(", ")
}

fn task_document(model: &TmkModel, t: &Task, prompts: &PromptSet) -> Document {
    let text = render_compact(
        &prompts.doc_task,
        &[
            ("name", &t.name),
            ("description", &t.description),
            ("givens", &parameter_list(&t.givens)),
            ("makes", &parameter_list(&t.makes)),
        ],
    );
    Document {
        doc_id: doc_id(&model.id, DocCategory::Task, &t.id),
        category: DocCategory::Task,
        title: t.name.clone(),
        text,
        source_ref: t.id.clone(),
        associated_method_ref: model.methods_for(&t.id).next().map(|m| doc_id(&model.id, DocCategory::Method, &m.id)),
    }
}

fn method_document(model: &TmkModel, m: &Method, prompts: &PromptSet) -> Document {
    let task_name = model.task(&m.task_ref).map_or(m.task_ref.as_str(), |t| t.name.as_str());
    let ends: Vec<String> = m.end_states.iter().map(|s| m.state_name(s).to_string()).collect();
    let invariant = m.invariant.as_ref().map(|i| format!("Checked after every step: {i}.")).unwrap_or_default();
    let states: Vec<String> = m
        .states
        .iter()
        .map(|s| match &s.sub_task_ref {
            Some(sub) => format!("- {}: {} Sub-task: {sub}.", s.name, s.description),
            None => format!("- {}: {}", s.name, s.description),
        })
        .collect();
    let transitions: Vec<String> = m
        .transitions
        .iter()
        .map(|t| {
            let actions: Vec<String> = t.actions.iter().map(ToString::to_string).collect();
            let actions = if actions.is_empty() { String::new() } else { format!(" Sets {}.", actions.join(", ")) };
            format!(
                "- {} From {} to {} when {}.{actions}",
                t.description,
                m.state_name(&t.from_state),
                m.state_name(&t.to_state),
                t.condition
            )
        })
        .collect();
    let text = render_compact(
        &prompts.doc_method,
        &[
            ("task_name", task_name),
            ("description", &m.description),
            ("start", m.state_name(&m.start_state)),
            ("ends", &join_list(&ends)),
            ("invariant", &invariant),
            ("states", &states.join("\n")),
            ("transitions", &transitions.join("\n")),
        ],
    );
    Document {
        doc_id: doc_id(&model.id, DocCategory::Method, &m.id),
        category: DocCategory::Method,
        title: format!("{task_name} Method"),
        text,
        source_ref: m.id.clone(),
        associated_method_ref: None,
    }
}

/// One Knowledge document per entity plus an aggregate "Relationships" document
/// when any relation exists, one Task document per task, one Method document per method.
pub fn compile_documents(model: &TmkModel, prompts: &PromptSet) -> Vec<Document> {
    let mut docs: Vec<Document> = model.knowledge.iter().map(|e| knowledge_document(model, e, prompts)).collect();
    docs.extend(relationships_document(model, prompts));
    docs.extend(model.tasks.iter().map(|t| task_document(model, t, prompts)));
    docs.extend(model.methods.iter().map(|m| method_document(model, m, prompts)));
    docs
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub document: Document,
    pub vector: EmbeddingVector,
}

/// Exact nearest-neighbour index. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    dimension: usize,
    entries: Vec<IndexEntry>,
}

/// Text that gets embedded for a document.
pub fn embedding_text(doc: &Document) -> String {
    format!("{}\n{}", doc.title, doc.text)
}

pub fn build_index(docs: Vec<Document>, embedder: &dyn Embedder) -> Result<Index, RetrievalError> {
    let pairs =
        docs.into_iter().map(|d| embedder.embed(&embedding_text(&d)).map(|v| (d, v))).collect::<Result<Vec<_>, _>>()?;
    Index::from_vectors(pairs)
}

impl Index {
    pub fn from_vectors(pairs: Vec<(Document, EmbeddingVector)>) -> Result<Self, RetrievalError> {
        let dimension = pairs.first().ok_or(RetrievalError::EmptyCorpus)?.1.dimension();
        let mut entries = Vec::with_capacity(pairs.len());
        for (document, vector) in pairs {
            if vector.dimension() != dimension {
                return Err(RetrievalError::DimensionMismatch {
                    doc_id: document.doc_id,
                    expected: dimension,
                    found: vector.dimension(),
                });
            }
            entries.push(IndexEntry { document, vector });
        }
        Ok(Index { dimension, entries })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.entries.iter().map(|e| &e.document)
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents().find(|d| d.doc_id == doc_id)
    }

    /// Highest cosine first, ties by ascending doc id; at most `k` results.
    pub fn top_k_vector(
        &self,
        query: &EmbeddingVector,
        k: usize,
        filter: Option<&[DocCategory]>,
    ) -> Result<Vec<ScoredDocument>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::InvalidK);
        }
        let mut scored: Vec<(&IndexEntry, f64)> = self
            .entries
            .iter()
            .filter(|e| filter.is_none_or(|f| f.contains(&e.document.category)))
            .map(|e| (e, cosine(query, &e.vector)))
            .collect();
        scored.sort_by(|(a, sa), (b, sb)| {
            sb.partial_cmp(sa).unwrap_or(Ordering::Equal).then_with(|| a.document.doc_id.cmp(&b.document.doc_id))
        });
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(e, score)| ScoredDocument { document: e.document.clone(), score })
            .collect())
    }

    pub fn top_k(
        &self,
        query: &str,
        k: usize,
        filter: Option<&[DocCategory]>,
        embedder: &dyn Embedder,
    ) -> Result<Vec<ScoredDocument>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::InvalidK);
        }
        self.top_k_vector(&embedder.embed(query)?, k, filter)
    }
}

/// Documents selected for one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum RetrievalSet {
    Ranked { documents: Vec<ScoredDocument> },
    TaskMethod { task: ScoredDocument, method: Document },
}

impl RetrievalSet {
    pub fn documents(&self) -> Vec<&Document> {
        match self {
            RetrievalSet::Ranked { documents } => documents.iter().map(|d| &d.document).collect(),
            RetrievalSet::TaskMethod { task, method } => vec![&task.document, method],
        }
    }
}

/// Knowledge: top `k_score` Knowledge docs. Multi: top `k_score` of any category.
/// Method/Task: the best Task doc and its method's doc.
pub fn select_for_category(
    index: &Index,
    query: &str,
    category: Category,
    k_score: u8,
    embedder: &dyn Embedder,
) -> Result<RetrievalSet, RetrievalError> {
    let k = usize::from(k_score.clamp(1, 4));
    match category {
        Category::KnowledgeModel => {
            Ok(RetrievalSet::Ranked { documents: index.top_k(query, k, Some(&[DocCategory::Knowledge]), embedder)? })
        }
        Category::MultiModel => Ok(RetrievalSet::Ranked { documents: index.top_k(query, k, None, embedder)? }),
        Category::MethodTaskModel => {
            let task = index
                .top_k(query, 1, Some(&[DocCategory::Task]), embedder)?
                .into_iter()
                .next()
                .ok_or(RetrievalError::NoTaskDocument)?;
            let method = task
                .document
                .associated_method_ref
                .as_deref()
                .and_then(|id| index.document(id))
                .ok_or_else(|| RetrievalError::MissingAssociatedMethod(task.document.doc_id.clone()))?
                .clone();
            Ok(RetrievalSet::TaskMethod { task, method })
        }
        Category::Irrelevant => Err(RetrievalError::NotRetrievable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::HashedNgramEmbedder;

    fn doc(id: &str, category: DocCategory) -> Document {
        Document {
            doc_id: id.into(),
            category,
            title: id.into(),
            text: format!("text of {id}"),
            source_ref: id.into(),
            associated_method_ref: None,
        }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(build_index(vec![], &HashedNgramEmbedder::default()), Err(RetrievalError::EmptyCorpus)));
    }

    #[test]
    fn ties_break_by_doc_id() {
        let v = EmbeddingVector(vec![1.0, 0.0]);
        let index = Index::from_vectors(vec![
            (doc("b", DocCategory::Knowledge), v.clone()),
            (doc("a", DocCategory::Knowledge), v.clone()),
            (doc("c", DocCategory::Task), EmbeddingVector(vec![0.0, 1.0])),
        ])
        .unwrap();
        let ids: Vec<String> =
            index.top_k_vector(&v, 5, None).unwrap().into_iter().map(|s| s.document.doc_id).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert!(matches!(index.top_k_vector(&v, 0, None), Err(RetrievalError::InvalidK)));
    }

    #[test]
    fn self_query_ranks_first() {
        let e = HashedNgramEmbedder::default();
        let mut a = doc("a", DocCategory::Knowledge);
        a.text = "the boat carries two people".into();
        let b = doc("b", DocCategory::Knowledge);
        let index = build_index(vec![a.clone(), b], &e).unwrap();
        let top = index.top_k(&embedding_text(&a), 1, None, &e).unwrap();
        assert_eq!(top[0].document.doc_id, "a");
        assert!((top[0].score - 1.0).abs() < 1e-9);
    }

    #[test]
    fn task_without_method_is_typed_error() {
        let e = HashedNgramEmbedder::default();
        let index = build_index(vec![doc("t", DocCategory::Task)], &e).unwrap();
        let err = select_for_category(&index, "anything", Category::MethodTaskModel, 2, &e).unwrap_err();
        assert!(matches!(err, RetrievalError::MissingAssociatedMethod(id) if id == "t"));
    }
}
