//! Breadth-first search for the shortest sequence of transitions that gets everyone across.

use ivy::sim::{explore, ExploreLimits};
use ivy::tmk::{load_model, CmpOp, Expression};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = load_model(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/river_crossing.tmk.json"))?;
    let initial = model.default_initial.clone().expect("fixture declares an initial state");
    let goal = Expression::cmp(CmpOp::Eq, Expression::slot("all_across"), Expression::Bool(true));
    let method = model.method("ferry").expect("fixture method");
    match explore(&model, "transport", &initial, &goal, ExploreLimits::default())? {
        Some(plan) => {
            println!("shortest plan: {} transitions", plan.transition_count());
            for event in plan.events.iter().filter(|e| e.transition_id.is_some()) {
                let t = method.transition(event.transition_id.as_deref().unwrap()).unwrap();
                println!("{:>3}. {:<22} {}", event.step_index, t.id, event.world_state);
            }
        }
        None => println!("no plan reaches the goal"),
    }
    Ok(())
}
