//! Loads a model file, prints its summary and validation report.
//!
//! cargo run --example parse_and_validate -- [path/to/model.tmk.json]

use ivy::tmk::{load_model, validate_model};

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/river_crossing.tmk.json").into());
    let model = match load_model(&path) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{path}: {e}");
            std::process::exit(1);
        }
    };
    println!("{}\n", model.summary());
    for method in &model.methods {
        println!("method {} ({} states, {} transitions)", method.id, method.states.len(), method.transitions.len());
        if let Some(inv) = &method.invariant {
            println!("  invariant: {inv}");
        }
    }
    print!("\n{}", validate_model(&model));
}
