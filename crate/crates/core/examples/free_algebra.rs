//! Free algebras on two and three generators, with a witness term for
//! every element.
//!
//! cargo run --example free_algebra

use maltsev::algebra::DEFAULT_CAP;
use maltsev::models::{affine, lattice, majority, pixley, projections};

fn main() {
    for (name, alg) in [
        ("majority", majority()),
        ("lattice", lattice()),
        ("x+y+z", affine()),
        ("pixley", pixley()),
        ("projections", projections()),
    ] {
        let f2 = alg.free_algebra(2, DEFAULT_CAP).expect("small");
        let f3 = alg.free_algebra(3, DEFAULT_CAP).expect("small");
        println!("{name}: |F(2)| = {}, |F(3)| = {}", f2.len(), f3.len());
        for i in 0..f2.len() {
            println!("    {:?}  {}", f2.element(i), f2.witness(i));
        }
    }

    let maj = majority();
    let f3 = maj.free_algebra(3, DEFAULT_CAP).unwrap();
    let idem = f3.filter(|v| v[0] == 0 && v[v.len() - 1] == 1);
    println!("majority: {} of {} ternary term operations are idempotent", idem.len(), f3.len());
}
