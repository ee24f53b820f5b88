//! Build weak directed Gumm terms from a Gumm chain `J1 .. J(2k+1), P` and
//! check them on the bundled Gumm models.
//!
//! cargo run --release --example direct_gumm -- 2

use std::path::Path;

use maltsev::algebra::FiniteAlgebra;
use maltsev::cert::replay;
use maltsev::chain::verify_chain;
use maltsev::engine::direct_gumm;

fn main() {
    let k: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let d = direct_gumm(k);
    let q = d.chain.tail.as_ref().expect("Gumm chain has a tail");
    println!("k={k}: {} directed terms, tail Q of size {} ({} shared)", d.len(), q.size(), q.dag_size());
    if q.size() < 200 {
        println!("Q = {q}");
    }
    replay(&d.certificate).expect("certificate replays");
    println!("certificate replays ({} steps, weak mode)", d.certificate.steps.len());

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("models/gumm");
    let mut paths: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    for p in paths {
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        if !name.starts_with(&format!("gumm_k{k}_")) {
            continue;
        }
        let alg = FiniteAlgebra::from_json(&std::fs::read_to_string(&p).unwrap()).unwrap();
        println!("{name}: {}", verify_chain(&alg, &[], &d.chain).unwrap());
    }
}
