//! "Who is a guard?" end to end: classification, retrieval, initial draft and refinement.

use std::sync::Arc;

use ivy::generation::Pipeline;
use ivy::prompts::PromptSet;
use ivy::providers::Providers;
use ivy::tmk::load_model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = load_model(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/river_crossing.tmk.json"))?;
    let pipeline = Pipeline::new(model, Providers::mock(), Arc::new(PromptSet::builtin()))?;
    let answer = pipeline.answer("Who is a guard?")?;
    println!("memory kind: {:?}", answer.memory_kind);
    println!("category:    {}", answer.category);
    println!("k-score:     {:?}", answer.k_score);
    for (i, (doc, draft)) in answer.cited_doc_ids.iter().zip(&answer.refinement_history).enumerate() {
        let title = &pipeline.index().document(doc).expect("cited doc is indexed").title;
        println!("\ndraft {} after {title}:\n  {draft}", i + 1);
    }
    println!("\nanswer:\n  {}", answer.text);
    Ok(())
}
