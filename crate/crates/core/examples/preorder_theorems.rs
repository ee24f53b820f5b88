//! Check the preorder collapse and the Gumm preorder property on random
//! model algebras with random relations `E ⊆ F`.
//!
//! cargo run --release --example preorder_theorems -- 1000

use maltsev::deciders::{verify_gumm_preorder_property, verify_preorder_collapse};
use maltsev::models::{random_gumm_instance, random_preorder_instance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut held, mut skipped) = (0, 0);
    for _ in 0..n {
        let i = random_preorder_instance(&mut rng);
        match verify_preorder_collapse(&i.alg, &i.chain, &i.e, &i.f) {
            Ok(v) if v.holds() => held += 1,
            Ok(v) => println!("{v}: E = {:?}, F = {:?}", i.e.pairs(), i.f.pairs()),
            Err(_) => skipped += 1,
        }
    }
    println!("preorder collapse: {held} held, {skipped} failed a precondition");

    let (mut held, mut skipped, mut proper) = (0, 0, 0);
    for _ in 0..n {
        let i = random_gumm_instance(&mut rng);
        match verify_gumm_preorder_property(&i.alg, &i.chain, &i.e, &i.f) {
            Ok(v) if v.holds() => {
                held += 1;
                proper += usize::from(i.e != i.f);
            }
            Ok(v) => println!("{v}: E = {:?}, F = {:?}", i.e.pairs(), i.f.pairs()),
            Err(_) => skipped += 1,
        }
    }
    println!("Gumm property: {held} held ({proper} with E != F), {skipped} failed a precondition");
}
