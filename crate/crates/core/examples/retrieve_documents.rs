//! Compiles the model into documents, indexes them and ranks them for a query.
//!
//! cargo run --example retrieve_documents -- "what does the boat carry"

use ivy::prompts::PromptSet;
use ivy::providers::HashedNgramEmbedder;
use ivy::retrieval::{build_index, compile_documents, DocCategory};
use ivy::tmk::load_model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let query = std::env::args().nth(1).unwrap_or_else(|| "Who is a guard?".into());
    let model = load_model(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/river_crossing.tmk.json"))?;
    let embedder = HashedNgramEmbedder::default();
    let index = build_index(compile_documents(&model, &PromptSet::builtin()), &embedder)?;
    println!("query: {query}\n\nall categories:");
    for hit in index.top_k(&query, index.len(), None, &embedder)? {
        println!("  {:.3}  {:<28} {}", hit.score, hit.document.doc_id, hit.document.title);
    }
    println!("\nknowledge only, k = 2:");
    for hit in index.top_k(&query, 2, Some(&[DocCategory::Knowledge]), &embedder)? {
        println!("  {:.3}  {}", hit.score, hit.document.title);
    }
    Ok(())
}
