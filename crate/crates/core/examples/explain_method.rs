//! Chain-of-thought explanation of the ferry method at each verbosity level.

use ivy::generation::{explain_transitions, extract_transitions};
use ivy::prompts::PromptSet;
use ivy::providers::MockLanguageModel;
use ivy::tmk::load_model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = load_model(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/river_crossing.tmk.json"))?;
    let method = model.method("ferry").expect("fixture method");
    let task = model.task(&method.task_ref).expect("fixture task");
    let transitions = extract_transitions(method);
    let question = "How does the method transport everyone across?";
    for k in 1..=4 {
        let text = explain_transitions(
            question,
            method,
            &transitions,
            task,
            k,
            &MockLanguageModel::new(),
            &PromptSet::builtin(),
        )?;
        println!("== k = {k}\n{text}\n");
    }
    Ok(())
}
