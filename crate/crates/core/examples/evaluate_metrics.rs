//! Scores the bundled question file with the token-overlap proxies.

use std::sync::Arc;

use ivy::eval::{evaluate, parse_questions};
use ivy::generation::Pipeline;
use ivy::prompts::PromptSet;
use ivy::providers::Providers;
use ivy::tmk::load_model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let model = load_model(format!("{dir}/river_crossing.tmk.json"))?;
    let questions = parse_questions(&std::fs::read_to_string(format!("{dir}/questions.txt"))?);
    let pipeline = Pipeline::new(model, Providers::mock(), Arc::new(PromptSet::builtin()))?;
    let report = evaluate(&pipeline, &questions, 5)?;
    println!("scorer: {}\nreference: {}\n", report.metadata.scorer, report.metadata.reference);
    print!("{}", report.table());
    Ok(())
}
