//! Language-model and embedding contracts with offline implementations and an HTTP client.

mod embed;
mod mock;
mod remote;

use std::sync::Arc;

pub use embed::{cosine, EmbeddingVector, HashedNgramEmbedder, DEFAULT_DIMENSION};
pub use mock::MockLanguageModel;
pub use remote::{RemoteConfig, RemoteLanguageModel};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("provider returned an empty completion")]
    EmptyCompletion,
    #[error("completion prompt is empty")]
    EmptyPrompt,
    #[error("cannot embed empty text")]
    EmptyText,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    /// Rough upper bound on the completion length, in tokens.
    pub max_length_hint: u32,
    /// Ignored by deterministic providers.
    pub temperature: f64,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        CompletionRequest { prompt: prompt.into(), max_length_hint: 512, temperature: 0.0 }
    }

    pub fn with_max_length(mut self, hint: u32) -> Self {
        self.max_length_hint = hint.max(1);
        self
    }
}

pub trait LanguageModel: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError>;
}

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, ProviderError>;
}

impl<T: LanguageModel + ?Sized> LanguageModel for Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<T: Embedder + ?Sized> Embedder for Arc<T> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn embed(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        (**self).embed(text)
    }
}

/// Rejects empty prompts and empty completions around an inner call.
pub fn complete_checked(llm: &dyn LanguageModel, request: &CompletionRequest) -> Result<String, ProviderError> {
    if request.prompt.trim().is_empty() {
        return Err(ProviderError::EmptyPrompt);
    }
    let text = llm.complete(request)?;
    if text.trim().is_empty() {
        return Err(ProviderError::EmptyCompletion);
    }
    Ok(text)
}

/// The pair of providers the pipeline needs.
#[derive(Clone)]
pub struct Providers {
    pub llm: Arc<dyn LanguageModel>,
    pub embedder: Arc<dyn Embedder>,
}

impl Providers {
    /// Mock language model with the hashed n-gram embedder.
    pub fn mock() -> Self {
        Providers { llm: Arc::new(MockLanguageModel::new()), embedder: Arc::new(HashedNgramEmbedder::default()) }
    }

    pub fn with_llm(llm: Arc<dyn LanguageModel>) -> Self {
        Providers { llm, embedder: Arc::new(HashedNgramEmbedder::default()) }
    }
}

impl std::fmt::Debug for Providers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Providers")
            .field("llm", &self.llm.name())
            .field("embedder_dimension", &self.embedder.dimension())
            .finish()
    }
}
