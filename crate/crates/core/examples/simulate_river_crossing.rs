//! Runs the safe and unsafe river crossing organizers and narrates both traces.

use ivy::sim::{first_violation, replay_trace, simulate, summarize_trace, SimOptions};
use ivy::tmk::load_model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["river_crossing.tmk.json", "river_crossing_unsafe.tmk.json"] {
        let model = load_model(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR")))?;
        let initial = model.default_initial.clone().expect("fixture declares an initial state");
        let trace = simulate(&model, "transport", &initial, SimOptions::default())?;
        replay_trace(&model, &trace)?;
        println!("== {name} (trace {})", trace.trace_id);
        println!("{}", summarize_trace(&trace).narrate(Some(&model)));
        println!("first violation: {:?}\n", first_violation(&model, &trace)?);
    }
    Ok(())
}
