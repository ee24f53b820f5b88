//! Write a certificate to JSON, read it back, replay it, audit it in model
//! algebras, and watch a tampered copy get rejected.
//!
//! cargo run --release --example certificate_replay -- 2

use maltsev::cert::{replay, soundness_audit, Certificate, ChainStep, Mode};
use maltsev::engine::direct_jonsson;
use maltsev::models::{majority_jonsson, random_jonsson_model, ModelShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let k: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let cert = direct_jonsson(k).certificate;
    let json = cert.to_json();
    println!("k={k}: {} steps, {} bytes of JSON", cert.steps.len(), json.len());

    let back = Certificate::from_json(&json).expect("well-formed");
    assert_eq!(back, cert);
    let end = replay(&back).expect("replays");
    println!("replay ends at {end}");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let models = vec![
        majority_jonsson(k),
        random_jonsson_model(ModelShape { k, size: 3, mode: Mode::Full, middle: true }, &mut rng),
        random_jonsson_model(ModelShape { k, size: 3, mode: Mode::Full, middle: false }, &mut rng),
    ];
    match soundness_audit(&back, &models) {
        Ok(()) => println!("audit passed in {} models", models.len()),
        Err(e) => println!("audit failed: {e}"),
    }

    let mut bad = cert.clone();
    let i = bad.steps.iter().position(|s| matches!(s, ChainStep::Rewrite(_))).unwrap();
    if let ChainStep::Rewrite(ai) = &mut bad.steps[i] {
        ai.dir = ai.dir.flip();
    }
    println!("flipped step {i}: {}", replay(&bad).unwrap_err());

    let mut text: serde_json::Value = serde_json::from_str(&json).unwrap();
    text["steps"].as_array_mut().unwrap().pop();
    match Certificate::from_json(&text.to_string()) {
        Ok(c) => println!("truncated: {}", replay(&c).unwrap_err()),
        Err(e) => println!("truncated: {e}"),
    }
}
