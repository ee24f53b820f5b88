//! Conversions between chain kinds, each checked on an algebra.
//!
//! cargo run --example converters

use maltsev::chain::{verify_chain, ChainKind, TermChain};
use maltsev::engine::{
    convert_absorption_to_dj, convert_dj_to_simultaneous, convert_pixley_to_hm, convert_pixley_to_jonsson,
};
use maltsev::models::{lattice, majority, pixley};
use maltsev::term::parse_term;

fn show(label: &str, chain: &TermChain, alg: &maltsev::algebra::FiniteAlgebra) {
    let terms: Vec<String> = chain.terms.iter().map(|t| t.to_string()).collect();
    println!("{label}: {} [{}]: {}", chain.kind, terms.join(", "), verify_chain(alg, &[], chain).unwrap());
}

fn main() {
    let alg = pixley();
    let p = TermChain::new(ChainKind::P, vec![parse_term("(p x y z)", alg.signature()).unwrap()]);
    show("pixley", &p, &alg);
    show("pixley -> jonsson", &convert_pixley_to_jonsson(&p), &alg);
    show("pixley -> hagemann-mitschke", &convert_pixley_to_hm(&p), &alg);

    let alg = majority();
    let dj = TermChain::new(ChainKind::DJ, vec![parse_term("(maj x y z)", alg.signature()).unwrap()]);
    show("directed jonsson", &dj, &alg);
    show("directed -> jonsson", &convert_dj_to_simultaneous(&dj), &alg);

    // The 4-ary near-unanimity term of the lattice.
    let alg = lattice();
    let s = parse_term(
        "(join (meet v1 v2) (join (meet v1 v3) (join (meet v1 v4) (join (meet v2 v3) (join (meet v2 v4) (meet v3 v4))))))",
        alg.signature(),
    );
    match s {
        Ok(s) => {
            let d = convert_absorption_to_dj(&s, 4);
            show("absorption -> directed jonsson", &d, &alg);
            show("  -> jonsson", &convert_dj_to_simultaneous(&d), &alg);
        }
        Err(e) => println!("parse error: {e}"),
    }
}
