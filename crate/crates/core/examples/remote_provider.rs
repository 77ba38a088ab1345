//! Asks a question through an OpenAI-compatible chat completion endpoint.
//!
//! IVY_LLM_BASE_URL=http://localhost:8000/v1 IVY_LLM_API_KEY=... IVY_LLM_MODEL=... \
//!     cargo run --example remote_provider -- "Who is a guard?"
//!
//! Without a reachable endpoint this prints the provider error and exits with status 3.

use std::sync::Arc;

use ivy::generation::Pipeline;
use ivy::prompts::PromptSet;
use ivy::providers::{Providers, RemoteConfig, RemoteLanguageModel};
use ivy::tmk::load_model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let question = std::env::args().nth(1).unwrap_or_else(|| "Who is a guard?".into());
    let config = RemoteConfig::from_env();
    println!("endpoint {} model {}", config.base_url, config.model);
    let llm = RemoteLanguageModel::new(config)?;
    let model = load_model(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/river_crossing.tmk.json"))?;
    let pipeline = Pipeline::new(model, Providers::with_llm(Arc::new(llm)), Arc::new(PromptSet::builtin()))?;
    match pipeline.answer(&question) {
        Ok(answer) => println!("{}\n\ncited: {:?}", answer.text, answer.cited_doc_ids),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(if e.is_provider_failure() { 3 } else { 1 });
        }
    }
    Ok(())
}
