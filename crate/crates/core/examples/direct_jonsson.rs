//! Build weak directed Jónsson terms from `J1 .. J(2k+1)`, replay the
//! certificate, and check the chain on a few finite models.
//!
//! cargo run --release --example direct_jonsson -- 3

use std::time::Instant;

use maltsev::cert::{replay, Mode};
use maltsev::chain::verify_chain;
use maltsev::engine::{chain_length_formula, direct_jonsson};
use maltsev::models::{majority_jonsson, random_jonsson_model, ModelShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let k: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let t0 = Instant::now();
    let d = direct_jonsson(k);
    let built = t0.elapsed();
    let edges = d.chain.len();
    let rewrites = d.certificate.steps.len() - edges;
    println!("k={k}: m={edges} edges, {rewrites} rewrites, built in {built:?}");
    println!("formula value {}", chain_length_formula(k));
    let max_size = d.chain.terms.iter().map(|t| t.size()).max().unwrap_or(0);
    let max_dag = d.chain.terms.iter().map(|t| t.dag_size()).max().unwrap_or(0);
    println!("largest witness: {max_size} nodes as a tree, {max_dag} shared");

    let t1 = Instant::now();
    let end = replay(&d.certificate).expect("certificate replays");
    println!("replayed to {end} in {:?}", t1.elapsed());
    let json = d.certificate.to_json();
    println!("certificate JSON: {} bytes", json.len());

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut models = vec![majority_jonsson(k)];
    for size in [2, 3] {
        models.push(random_jonsson_model(ModelShape { k, size, mode: Mode::Full, middle: true }, &mut rng));
    }
    let mut strict = d.chain.clone();
    strict.weak = false;
    for (i, m) in models.iter().enumerate() {
        println!("model {i} (size {}): {}", m.size(), verify_chain(m, &[], &strict).expect("evaluates"));
    }
    if k <= 2 {
        for (i, t) in d.chain.terms.iter().enumerate() {
            println!("D{} = {}", i + 1, t);
        }
    }
}
