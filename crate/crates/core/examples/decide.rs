//! Decide the Maltsev conditions for an algebra file, or for each of the
//! bundled two-element algebras.
//!
//! cargo run --example decide -- models/basic/lattice.json

use maltsev::algebra::FiniteAlgebra;
use maltsev::deciders::{decide, DecideOptions};
use maltsev::models::{affine, lattice, majority, pixley, projections};

fn main() {
    let algebras: Vec<(String, FiniteAlgebra)> = match std::env::args().nth(1) {
        Some(path) => {
            let text = std::fs::read_to_string(&path).expect("readable file");
            vec![(path, FiniteAlgebra::from_json(&text).expect("algebra JSON"))]
        }
        None => vec![
            ("majority".into(), majority()),
            ("lattice".into(), lattice()),
            ("x+y+z".into(), affine()),
            ("pixley".into(), pixley()),
            ("projections".into(), projections()),
        ],
    };
    for (name, alg) in algebras {
        let opts = DecideOptions {
            ef: maltsev::deciders::EFOptions {
                idempotent_reduct: !alg.is_idempotent(),
                ..Default::default()
            },
            ..Default::default()
        };
        println!("== {name}");
        match decide(&alg, opts) {
            Ok(report) => print!("{report}"),
            Err(e) => println!("error: {e}"),
        }
    }
}
