//! Classifies a handful of questions with the mock provider.

use ivy::classify::classify;
use ivy::prompts::PromptSet;
use ivy::providers::MockLanguageModel;
use ivy::tmk::load_model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = load_model(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/river_crossing.tmk.json"))?;
    let prompts = PromptSet::builtin();
    let llm = MockLanguageModel::new();
    let questions = [
        "Who is a guard?",
        "Name the boat.",
        "How does the method transport everyone across?",
        "How do guard counts affect the loading step?",
        "How do I get everyone across the river?",
        "What is the weather today?",
    ];
    for q in questions {
        let c = classify(q, &model, &llm, &prompts)?;
        let category = c.category.map_or("-", |c| c.label());
        let k = c.k_score.map_or("-".to_string(), |k| k.to_string());
        println!("{q:<50} {:<9} {category:<18} k={k}", format!("{:?}", c.memory_kind));
    }
    Ok(())
}
