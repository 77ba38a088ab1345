//! Starts the HTTP service on a random port, uploads the fixture and asks one question over HTTP.

use std::net::SocketAddr;

use ivy::prompts::PromptSet;
use ivy::providers::Providers;
use ivy::service::{start, AppState};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let storage = std::env::temp_dir().join(format!("ivy-example-{}", std::process::id()));
    let state = AppState::open(&storage, Providers::mock(), PromptSet::builtin())?;
    let (addr, server) = start(state, SocketAddr::from(([127, 0, 0, 1], 0))).await?;
    println!("listening on http://{addr}, storage {}", storage.display());

    let client = reqwest::Client::new();
    let model = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/river_crossing.tmk.json"))?;
    let uploaded = client.post(format!("http://{addr}/models")).body(model).send().await?;
    println!("POST /models -> {}\n{}", uploaded.status(), uploaded.text().await?);
    let asked = client
        .post(format!("http://{addr}/ask"))
        .json(&serde_json::json!({"model_id": "river", "question": "Who is a guard?"}))
        .send()
        .await?;
    println!("POST /ask -> {}\n{}", asked.status(), asked.text().await?);

    server.abort();
    std::fs::remove_dir_all(&storage)?;
    Ok(())
}
