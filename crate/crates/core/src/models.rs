//! Small reference algebras and seeded random models of chain axioms.

use rand::Rng;

use crate::algebra::{tuples, BinRel, FiniteAlgebra, TableEvaluator};
use crate::cert::{j_symbol, Axiom, Mode};
use crate::chain::{verify_chain, ChainKind, TermChain};
use crate::engine::{gumm_symbol, symbolic_jonsson_chain};
use crate::term::{Term, Var};

/// `({0,1}, maj)`.
pub fn majority() -> FiniteAlgebra {
    FiniteAlgebra::new(2, vec![("maj", 3, vec![0, 0, 0, 1, 0, 1, 1, 1])]).expect("valid table")
}

/// The two-element lattice `({0,1}, meet, join)`.
pub fn lattice() -> FiniteAlgebra {
    FiniteAlgebra::from_fn(
        2,
        vec![
            ("meet", 2, &|a: &[u8]| a[0] & a[1]),
            ("join", 2, &|a: &[u8]| a[0] | a[1]),
        ],
    )
    .expect("valid tables")
}

/// `({0,1}, m)` with `m(x,y,z) = x + y + z mod 2`.
pub fn affine() -> FiniteAlgebra {
    FiniteAlgebra::from_fn(2, vec![("m", 3, &|a: &[u8]| a[0] ^ a[1] ^ a[2])]).expect("valid table")
}

/// `({0,1}, p)` with `p = (x & !y) | (z & !y) | (x & z)`.
pub fn pixley() -> FiniteAlgebra {
    FiniteAlgebra::from_fn(
        2,
        vec![("p", 3, &|a: &[u8]| {
            let (x, y, z) = (a[0], a[1], a[2]);
            (x & (1 - y)) | (z & (1 - y)) | (x & z)
        })],
    )
    .expect("valid table")
}

/// A two-element set whose only term operations are projections.
pub fn projections() -> FiniteAlgebra {
    FiniteAlgebra::from_fn(2, vec![("f", 2, &|a: &[u8]| a[0])]).expect("valid table")
}

/// `({0,1}, J1 .. J(2k+1))` with every `Ji` the majority operation.
pub fn majority_jonsson(k: usize) -> FiniteAlgebra {
    let maj = [0u8, 0, 0, 1, 0, 1, 1, 1];
    let names: Vec<String> = (1..=2 * k + 1).map(|i| j_symbol(i).name().to_string()).collect();
    FiniteAlgebra::new(2, names.iter().map(|n| (n.as_str(), 3, maj.to_vec())).collect()).expect("valid tables")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelShape {
    pub k: usize,
    pub size: usize,
    /// `J(2k+1)(x,y,y) = y`; otherwise the last value is free.
    pub mode: Mode,
    /// `Ji(x,y,x) = x` for all `i`.
    pub middle: bool,
}

/// Random operation tables `J1 .. J(2k+1)` satisfying the chain equations
/// of the given shape. Entries not constrained by the equations are drawn
/// uniformly. The result is idempotent.
pub fn random_jonsson_model(shape: ModelShape, rng: &mut impl Rng) -> FiniteAlgebra {
    let tables = jonsson_tables(shape, rng, |_, _| None);
    build(shape, tables, None)
}

/// Random Gumm model: a weak Jónsson part `J1 .. J(2k+1)` whose last
/// operation meets a tail `P` in `J(2k+1)(x,y,y) = P(x,y,y)` and
/// `P(x,x,y) = y`.
pub fn random_gumm_model(k: usize, size: usize, middle: bool, rng: &mut impl Rng) -> FiniteAlgebra {
    let shape = ModelShape {
        k,
        size,
        mode: Mode::Weak,
        middle,
    };
    let n = size;
    let mut p: Vec<u8> = (0..n * n * n).map(|_| rng.gen_range(0..n) as u8).collect();
    for a in 0..n {
        for b in 0..n {
            p[a * n * n + a * n + b] = b as u8;
        }
    }
    let tables = jonsson_tables(shape, rng, |a, b| Some(p[a * n * n + b * n + b]));
    build(shape, tables, Some(p))
}

/// `Ji(x,y,z) = x` for all `i` and a random tail `P` with
/// `P(x,x,y) = y` and `P(x,y,y) = x`.
pub fn projection_gumm_model(k: usize, size: usize, rng: &mut impl Rng) -> FiniteAlgebra {
    let n = size;
    let mut p: Vec<u8> = (0..n * n * n).map(|_| rng.gen_range(0..n) as u8).collect();
    for a in 0..n {
        for b in 0..n {
            p[a * n * n + a * n + b] = b as u8;
            p[a * n * n + b * n + b] = a as u8;
        }
    }
    let first: Vec<u8> = tuples(n, 3).map(|t| t[0]).collect();
    let shape = ModelShape {
        k,
        size,
        mode: Mode::Weak,
        middle: true,
    };
    build(shape, vec![first; 2 * k + 1], Some(p))
}

/// Fill the tables. `last(a, b)` overrides `J(2k+1)(a,b,b)` when given.
fn jonsson_tables(shape: ModelShape, rng: &mut impl Rng, last: impl Fn(usize, usize) -> Option<u8>) -> Vec<Vec<u8>> {
    let ModelShape { k, size: n, mode, middle } = shape;
    let m = 2 * k + 1;
    let idx = |a: usize, b: usize, c: usize| a * n * n + b * n + c;
    let mut t: Vec<Vec<u8>> = (0..m)
        .map(|_| (0..n * n * n).map(|_| rng.gen_range(0..n) as u8).collect())
        .collect();
    for a in 0..n {
        for b in 0..n {
            // v[0] = J1(a,a,b), v[2i+1] = J(2i+1)(a,b,b) = J(2i+2)(a,b,b),
            // v[2i] = J(2i)(a,a,b) = J(2i+1)(a,a,b)
            let mut v: Vec<u8> = (0..=m).map(|_| rng.gen_range(0..n) as u8).collect();
            v[0] = a as u8;
            if a == b {
                v.iter_mut().for_each(|e| *e = a as u8);
            } else if let Some(l) = last(a, b) {
                v[m] = l;
            } else if mode == Mode::Full {
                v[m] = b as u8;
            }
            for (i, tab) in t.iter_mut().enumerate() {
                // operation J(i+1)
                tab[idx(a, a, b)] = v[i + (i % 2)];
                tab[idx(a, b, b)] = v[i + 1 - (i % 2)];
            }
            if middle || a == b {
                for tab in t.iter_mut() {
                    tab[idx(a, b, a)] = a as u8;
                }
            }
        }
    }
    t
}

fn build(shape: ModelShape, tables: Vec<Vec<u8>>, tail: Option<Vec<u8>>) -> FiniteAlgebra {
    let names: Vec<String> = (1..=2 * shape.k + 1).map(|i| j_symbol(i).name().to_string()).collect();
    let mut ops: Vec<(&str, usize, Vec<u8>)> = names.iter().map(|s| s.as_str()).zip(tables).map(|(s, t)| (s, 3, t)).collect();
    if let Some(p) = tail {
        ops.push(("P", 3, p));
    }
    FiniteAlgebra::new(shape.size, ops).expect("valid tables")
}

/// Whether `alg` satisfies the weak or full Jónsson chain equations on its
/// operations `J1 .. J(2k+1)`, optionally with the middle equations.
pub fn satisfies_jonsson(alg: &FiniteAlgebra, k: usize, mode: Mode, middle: bool) -> bool {
    let ok = Axiom::all(k, mode).iter().all(|ax| {
        alg.check_identity(&ax.identity(k))
            .map(|c| c.holds())
            .unwrap_or(false)
    });
    if !ok {
        return false;
    }
    if !middle {
        return true;
    }
    let (x, y) = (Term::x(), Term::y());
    (1..=2 * k + 1).all(|i| {
        let t = crate::cert::j(i, &x, &y, &x);
        alg.check_identity(&crate::term::Identity::new(t, x.clone()))
            .map(|c| c.holds())
            .unwrap_or(false)
    })
}

/// Whether `alg` satisfies the Gumm chain equations on `J1 .. J(2k+1), P`.
pub fn satisfies_gumm(alg: &FiniteAlgebra, k: usize, middle: bool) -> bool {
    let mut chain = symbolic_jonsson_chain(k);
    chain.kind = ChainKind::G;
    let (x, y, z) = (Term::x(), Term::y(), Term::z());
    chain.tail = Some(Term::app(&gumm_symbol(), vec![x, y, z]));
    chain.weak = !middle;
    verify_chain(alg, &[], &chain).map(|v| v.holds()).unwrap_or(false)
}

/// Every idempotent ternary operation on a set of size `n`,
/// enumerated lexicographically; used by brute-force searches on tiny sets.
pub fn idempotent_ternary_tables(n: usize) -> impl Iterator<Item = Vec<u8>> {
    let free: Vec<usize> = tuples(n, 3)
        .enumerate()
        .filter(|(_, t)| !(t[0] == t[1] && t[1] == t[2]))
        .map(|(i, _)| i)
        .collect();
    let total = n.pow(free.len() as u32);
    (0..total).map(move |mut code| {
        let mut tab: Vec<u8> = tuples(n, 3).map(|t| t[0]).collect();
        for &i in &free {
            tab[i] = (code % n) as u8;
            code /= n;
        }
        tab
    })
}

/// The weak Jónsson chain `J1 .. J(2k+1)` as a [`TermChain`] over the
/// model's own symbols.
pub fn model_chain(k: usize, weak: bool) -> TermChain {
    let mut c = symbolic_jonsson_chain(k);
    c.weak = weak;
    c
}

/// An algebra with a chain interpretation and relations `E ⊆ F` for the
/// preorder theorems.
#[derive(Clone, Debug)]
pub struct RelationInstance {
    pub alg: FiniteAlgebra,
    pub chain: TermChain,
    pub e: BinRel,
    pub f: BinRel,
}

fn close(alg: &FiniteAlgebra, r: &BinRel, transitive: bool) -> BinRel {
    let mut r = r.clone();
    loop {
        let mut next = r.subalgebra_closure(alg).expect("small closure");
        if transitive {
            next = next.transitive_closure();
        }
        if next == r {
            return r;
        }
        r = next;
    }
}

/// Smallest relation containing `e` closed under the operations, under
/// `t(E, F, E)` for every chain term, and under composition if `transitive`.
pub fn absorption_closure(alg: &FiniteAlgebra, terms: &[Term], e: &BinRel, f: &BinRel, transitive: bool) -> BinRel {
    let n = alg.size();
    let mut ev = TableEvaluator::new(alg, &[Var::X, Var::Y, Var::Z]);
    let tabs: Vec<_> = terms.iter().map(|t| ev.table(t).expect("chain over the algebra")).collect();
    let fp = f.pairs();
    let mut e = close(alg, e, transitive);
    loop {
        let mut next = e.clone();
        let ep = e.pairs();
        for tab in &tabs {
            for &(a1, b1) in &ep {
                for &(a2, b2) in &fp {
                    for &(a3, b3) in &ep {
                        next.insert(tab[a1 * n * n + a2 * n + a3] as usize, tab[b1 * n * n + b2 * n + b3] as usize);
                    }
                }
            }
        }
        next = close(alg, &next, transitive);
        if next == e {
            return e;
        }
        e = next;
    }
}

fn random_relations(
    alg: &FiniteAlgebra,
    terms: &[Term],
    transitive: bool,
    rng: &mut impl Rng,
) -> (BinRel, BinRel) {
    let n = alg.size();
    let mut f = BinRel::diagonal(n);
    for _ in 0..rng.gen_range(0..=3) {
        f.insert(rng.gen_range(0..n), rng.gen_range(0..n));
    }
    let f = close(alg, &f, transitive);
    let mut e = BinRel::diagonal(n);
    for (a, b) in f.pairs() {
        if rng.gen_bool(0.25) {
            e.insert(a, b);
        }
    }
    let e = if rng.gen_bool(0.5) {
        absorption_closure(alg, terms, &e, &f, transitive)
    } else {
        close(alg, &e, transitive)
    };
    (e, f)
}

/// Random admissible preorders `E ⊆ F` on a random model of a weak Jónsson
/// chain (`k <= 2`, at most three elements). Half of the time `E` is closed
/// under absorption, otherwise it is only closed under the operations.
pub fn random_preorder_instance(rng: &mut impl Rng) -> RelationInstance {
    let shape = ModelShape {
        k: rng.gen_range(1..=2),
        size: rng.gen_range(2..=3),
        mode: Mode::Full,
        middle: rng.gen_bool(0.5),
    };
    let alg = random_jonsson_model(shape, rng);
    let chain = model_chain(shape.k, true);
    let (e, f) = random_relations(&alg, &chain.terms, true, rng);
    RelationInstance { alg, chain, e, f }
}

/// Random reflexive subuniverses `E ⊆ F` of `A^2` on a random model of a
/// weak Gumm chain.
/// A third of the models have every `Ji` the first projection and a random
/// Maltsev tail, so that absorption holds for any `E ⊆ F`.
pub fn random_gumm_instance(rng: &mut impl Rng) -> RelationInstance {
    let k = rng.gen_range(1..=2);
    let size = rng.gen_range(2..=3);
    let alg = if rng.gen_ratio(1, 3) {
        projection_gumm_model(k, size, rng)
    } else {
        random_gumm_model(k, size, rng.gen_bool(0.5), rng)
    };
    let mut chain = model_chain(k, true);
    chain.kind = ChainKind::G;
    chain.tail = Some(Term::app(&gumm_symbol(), vec![Term::x(), Term::y(), Term::z()]));
    let (e, f) = random_relations(&alg, &chain.terms, false, rng);
    RelationInstance { alg, chain, e, f }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_models_satisfy_their_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 1..=3 {
            for size in 2..=3 {
                for (mode, middle) in [(Mode::Full, true), (Mode::Full, false), (Mode::Weak, true), (Mode::Weak, false)] {
                    let shape = ModelShape { k, size, mode, middle };
                    let a = random_jonsson_model(shape, &mut rng);
                    assert!(a.is_idempotent());
                    assert!(satisfies_jonsson(&a, k, mode, middle), "{shape:?}");
                }
                let g = random_gumm_model(k, size, true, &mut rng);
                assert!(satisfies_gumm(&g, k, true));
                assert!(satisfies_gumm(&projection_gumm_model(k, size, &mut rng), k, true));
            }
        }
    }

    #[test]
    fn random_relations_are_nested() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let i = random_preorder_instance(&mut rng);
            assert!(i.e.is_subset(&i.f));
            assert!(crate::algebra::is_admissible_preorder(&i.alg, &i.f).is_admissible());
            assert!(crate::algebra::is_admissible_preorder(&i.alg, &i.e).is_admissible());
            let g = random_gumm_instance(&mut rng);
            assert!(g.e.is_subset(&g.f) && g.e.is_reflexive());
            assert!(crate::algebra::is_subuniverse_of_square(&g.alg, &g.f).is_none());
        }
    }

    #[test]
    fn majority_models() {
        for k in 1..=3 {
            assert!(satisfies_jonsson(&majority_jonsson(k), k, Mode::Full, true));
        }
    }

    #[test]
    fn idempotent_tables_on_two_elements() {
        assert_eq!(idempotent_ternary_tables(2).count(), 64);
        assert!(idempotent_ternary_tables(2).all(|t| t[0] == 0 && t[7] == 1));
    }
}
