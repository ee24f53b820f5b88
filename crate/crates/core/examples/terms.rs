//! Parse, print and rewrite terms, and check identities on a finite algebra.
//!
//! cargo run --example terms

use maltsev::algebra::IdentityCheck;
use maltsev::models::majority;
use maltsev::term::{left_power, parse_term, Identity, Term, Var};

fn main() {
    let alg = majority();
    let sig = alg.signature();
    let t = parse_term("(maj x (maj x y z) z)", sig).expect("parses");
    println!("t = {t}, size {}, variables {:?}", t.size(), t.vars());
    println!("t(x,x,z) = {}", t.at(&Term::x(), &Term::x(), &Term::z()));
    println!("t(z,y,x) = {}", t.at(&Term::z(), &Term::y(), &Term::x()));
    println!("subterm at [1] = {}", t.subterm_at(&[1]).expect("exists"));

    let swapped = t.rename(Var::X, Var::Z);
    println!("x renamed to z: {swapped}");

    // Equal terms built twice share one node.
    let again = parse_term("(maj x (maj x y z) z)", sig).unwrap();
    println!("shared node: {}", t.ptr_eq(&again));

    // Nested powers grow as trees but stay small as DAGs.
    let a = parse_term("(maj x (maj x z z) z)", sig).unwrap();
    let p = left_power(&a, 30).unwrap();
    println!("a^30: {} nodes as a tree, {} shared", p.size(), p.dag_size());
    let mut d = Term::x();
    for _ in 0..20 {
        d = t.at(&d, &d, &d);
    }
    println!("t(d,d,d) nested 20 times: {} nodes as a tree, {} shared", d.size(), d.dag_size());

    for (lhs, rhs) in [("(maj x x y)", "x"), ("(maj x y x)", "x"), ("(maj x y y)", "x")] {
        let id = Identity::new(parse_term(lhs, sig).unwrap(), parse_term(rhs, sig).unwrap());
        match alg.check_identity(&id).unwrap() {
            IdentityCheck::Holds => println!("{lhs} = {rhs}: holds"),
            IdentityCheck::Fails(c) => println!("{lhs} = {rhs}: fails at {c}"),
        }
    }
}
