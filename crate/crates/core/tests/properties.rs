use std::collections::{BTreeSet, HashMap};

use maltsev::algebra::{BinRel, FiniteAlgebra, IdentityCheck};
use maltsev::chain::{verify_chain, ChainKind};
use maltsev::deciders::{
    build_EF, decide_directed_gumm, decide_directed_jonsson, decide_hagemann_mitschke, decide_pixley, DeciderError,
    EFOptions,
};
use maltsev::engine::convert_dj_to_simultaneous;
use maltsev::term::{parse_term, Identity, Term, Var};
use proptest::prelude::*;

/// A size-`n` algebra with a ternary `f` and a binary `g`, both idempotent.
fn algebra(n: usize, f: &[u8], g: &[u8]) -> FiniteAlgebra {
    let mut f = f.iter().map(|v| v % n as u8).collect::<Vec<_>>();
    let mut g = g.iter().map(|v| v % n as u8).collect::<Vec<_>>();
    for a in 0..n {
        f[a * n * n + a * n + a] = a as u8;
        g[a * n + a] = a as u8;
    }
    FiniteAlgebra::new(n, vec![("f", 3, f), ("g", 2, g)]).unwrap()
}

fn arb_algebra(max: usize) -> impl Strategy<Value = FiniteAlgebra> {
    (2..=max).prop_flat_map(|n| {
        (Just(n), prop::collection::vec(any::<u8>(), n * n * n), prop::collection::vec(any::<u8>(), n * n))
            .prop_map(|(n, f, g)| algebra(n, &f, &g))
    })
}

/// Terms over `f/3`, `g/2` in `x, y, z`.
#[derive(Clone, Debug)]
enum Tree {
    Var(u8),
    F(Box<Tree>, Box<Tree>, Box<Tree>),
    G(Box<Tree>, Box<Tree>),
}

fn arb_tree() -> impl Strategy<Value = Tree> {
    let leaf = (0u8..3).prop_map(Tree::Var);
    leaf.prop_recursive(4, 40, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(a, b, c)| Tree::F(Box::new(a), Box::new(b), Box::new(c))),
            (inner.clone(), inner).prop_map(|(a, b)| Tree::G(Box::new(a), Box::new(b))),
        ]
    })
}

impl Tree {
    fn text(&self) -> String {
        match self {
            Tree::Var(i) => ["x", "y", "z"][*i as usize].to_string(),
            Tree::F(a, b, c) => format!("(f {} {} {})", a.text(), b.text(), c.text()),
            Tree::G(a, b) => format!("(g {} {})", a.text(), b.text()),
        }
    }

    /// Direct evaluation from the tables.
    fn eval(&self, alg: &FiniteAlgebra, env: [u8; 3]) -> u8 {
        let n = alg.size();
        match self {
            Tree::Var(i) => env[*i as usize],
            Tree::F(a, b, c) => {
                let (a, b, c) = (a.eval(alg, env) as usize, b.eval(alg, env) as usize, c.eval(alg, env) as usize);
                alg.op("f").unwrap().table[a * n * n + b * n + c]
            }
            Tree::G(a, b) => {
                let (a, b) = (a.eval(alg, env) as usize, b.eval(alg, env) as usize);
                alg.op("g").unwrap().table[a * n + b]
            }
        }
    }
}

fn term(t: &Tree, alg: &FiniteAlgebra) -> Term {
    parse_term(&t.text(), alg.signature()).unwrap()
}

/// Every ternary term operation, by closing the projections under the
/// operations coordinatewise.
fn clone_oracle(alg: &FiniteAlgebra) -> BTreeSet<Vec<u8>> {
    let n = alg.size();
    let len = n * n * n;
    let proj = |i: usize| -> Vec<u8> { (0..len).map(|c| [c / (n * n), (c / n) % n, c % n][i] as u8).collect() };
    let mut set: BTreeSet<Vec<u8>> = (0..3).map(proj).collect();
    loop {
        let cur: Vec<Vec<u8>> = set.iter().cloned().collect();
        let mut next = set.clone();
        for op in alg.ops() {
            let r = op.symbol.arity();
            let mut idx = vec![0usize; r];
            loop {
                let v: Vec<u8> = (0..len)
                    .map(|c| {
                        let args: Vec<u8> = idx.iter().map(|&i| cur[i][c]).collect();
                        alg.apply(op, &args)
                    })
                    .collect();
                next.insert(v);
                let mut j = 0;
                while j < r {
                    idx[j] += 1;
                    if idx[j] < cur.len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == r {
                    break;
                }
            }
        }
        if next.len() == set.len() {
            return set;
        }
        set = next;
    }
}

fn warshall(r: &BinRel) -> BinRel {
    let n = r.size();
    let mut m: Vec<Vec<bool>> = (0..n).map(|a| (0..n).map(|b| r.contains(a, b)).collect()).collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if m[i][k] && m[k][j] {
                    m[i][j] = true;
                }
            }
        }
    }
    BinRel::from_pairs(n, (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| m[a][b])).unwrap()
}

fn arb_rel() -> impl Strategy<Value = BinRel> {
    (1usize..6).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..12).prop_map(move |ps| BinRel::from_pairs(n, ps).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identity_check_matches_evaluation(alg in arb_algebra(3), l in arb_tree(), r in arb_tree()) {
        let id = Identity::new(term(&l, &alg), term(&r, &alg));
        let n = alg.size() as u8;
        let vars: BTreeSet<u8> = [&l, &r].iter().flat_map(|t| {
            let mut s = BTreeSet::new();
            collect(t, &mut s);
            s
        }).collect();
        let mut oracle = true;
        for a in 0..n { for b in 0..n { for c in 0..n {
            let env = [a, b, c];
            if l.eval(&alg, env) != r.eval(&alg, env) {
                oracle = false;
            }
        }}}
        let got = alg.check_identity(&id).unwrap();
        prop_assert_eq!(got.holds(), oracle);
        if let IdentityCheck::Fails(c) = got {
            let mut env = [0u8; 3];
            for (v, a) in &c.assignment {
                let i = match v { Var::X => 0, Var::Y => 1, Var::Z => 2, _ => unreachable!() };
                prop_assert!(vars.contains(&(i as u8)));
                env[i] = *a;
            }
            prop_assert_ne!(l.eval(&alg, env), r.eval(&alg, env));
        }
    }

    #[test]
    fn term_text_round_trips(alg in arb_algebra(2), t in arb_tree()) {
        let parsed = term(&t, &alg);
        prop_assert_eq!(parsed.to_sexp(), t.text());
        prop_assert_eq!(parse_term(&parsed.to_string(), alg.signature()).unwrap(), parsed.clone());
        let table = alg.term_table(&parsed, &[Var::X, Var::Y, Var::Z]).unwrap();
        let n = alg.size() as u8;
        let mut i = 0;
        for a in 0..n { for b in 0..n { for c in 0..n {
            prop_assert_eq!(table[i], t.eval(&alg, [a, b, c]));
            i += 1;
        }}}
    }

    #[test]
    fn free_algebra_matches_clone_oracle(alg in arb_algebra(2)) {
        let f3 = alg.free_algebra(3, 1 << 20).unwrap();
        let got: BTreeSet<Vec<u8>> = f3.elements().map(|e| e.to_vec()).collect();
        prop_assert_eq!(got.len(), f3.len());
        prop_assert_eq!(&got, &clone_oracle(&alg));
        for i in 0..f3.len() {
            let t = alg.term_table(f3.witness(i), &[Var::X, Var::Y, Var::Z]).unwrap();
            prop_assert_eq!(&t[..], f3.element(i));
        }
    }

    #[test]
    fn transitive_closure_is_a_closure(r in arb_rel(), extra in arb_rel()) {
        let c = r.transitive_closure();
        prop_assert_eq!(&c, &warshall(&r));
        prop_assert!(r.is_subset(&c));
        prop_assert!(c.is_transitive());
        prop_assert_eq!(c.transitive_closure(), c.clone());
        if extra.size() == r.size() {
            let u = r.union(&extra);
            prop_assert!(c.is_subset(&u.transitive_closure()));
        }
    }

    #[test]
    fn subalgebra_closure_is_a_closure(alg in arb_algebra(3), pairs in prop::collection::vec((0usize..3, 0usize..3), 0..4)) {
        let n = alg.size();
        let r = BinRel::from_pairs(n, pairs.into_iter().map(|(a, b)| (a % n, b % n))).unwrap();
        let c = r.subalgebra_closure(&alg).unwrap();
        prop_assert!(r.is_subset(&c));
        prop_assert_eq!(c.subalgebra_closure(&alg).unwrap(), c.clone());
        prop_assert!(maltsev::algebra::is_subuniverse_of_square(&alg, &c).is_none());
    }

    #[test]
    fn decider_outputs_are_consistent(alg in arb_algebra(2)) {
        check_deciders(&alg, EFOptions::default())?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn three_element_decider_outputs_are_consistent(alg in arb_algebra(3)) {
        check_deciders(&alg, EFOptions { cap: 20_000, ..EFOptions::default() })?;
    }
}

fn check_deciders(alg: &FiniteAlgebra, opts: EFOptions) -> Result<(), TestCaseError> {
    let ef = match build_EF(alg, opts) {
        Ok(ef) => ef,
        Err(DeciderError::Algebra(_)) => return Ok(()),
        Err(e) => return Err(TestCaseError::fail(e.to_string())),
    };
    let dj = decide_directed_jonsson(&ef).unwrap();
    let hm = decide_hagemann_mitschke(&ef, 8).unwrap();
    let px = decide_pixley(&ef, 8).unwrap();
    let dg = decide_directed_gumm(&ef).unwrap();
    for found in [&dj, &hm, &px, &dg].into_iter().flatten() {
        prop_assert!(verify_chain(alg, &[], &found.chain).unwrap().holds());
        prop_assert_eq!(found.path.len(), found.chain.len());
    }
    // paths in E carry witnesses of their edges
    for found in [&dj, &px, &dg].into_iter().flatten() {
        for (i, w) in found.path.witnesses.iter().enumerate() {
            let (a, b) = (found.path.nodes[i], found.path.nodes[i + 1]);
            prop_assert!(ef.check_edge(a, b, w).is_ok(), "edge {} of {}", i, found.chain.kind);
        }
    }
    if let Some(d) = &dj {
        let j = convert_dj_to_simultaneous(&d.chain);
        prop_assert_eq!(j.kind, ChainKind::J);
        prop_assert_eq!(j.len(), 2 * d.chain.len() - 1);
        prop_assert!(verify_chain(alg, &[], &j).unwrap().holds());
        prop_assert!(dg.is_some(), "directed Jonsson without directed Gumm");
    }
    if hm.is_some() {
        prop_assert!(dg.is_some(), "Hagemann-Mitschke without directed Gumm");
    }
    if let Some(p) = &px {
        prop_assert!(dj.is_some() && hm.is_some());
        prop_assert!(hm.as_ref().unwrap().chain.len() <= p.chain.len());
    }
    // bounded searches are monotone in the bound
    if let Some(h) = &hm {
        let k = h.chain.len();
        for kmax in 1..=8 {
            let again = decide_hagemann_mitschke(&ef, kmax).unwrap();
            prop_assert_eq!(again.is_some(), kmax >= k);
        }
    }
    Ok(())
}

fn collect(t: &Tree, out: &mut BTreeSet<u8>) {
    match t {
        Tree::Var(i) => {
            out.insert(*i);
        }
        Tree::F(a, b, c) => {
            collect(a, out);
            collect(b, out);
            collect(c, out);
        }
        Tree::G(a, b) => {
            collect(a, out);
            collect(b, out);
        }
    }
}

#[test]
fn majority_clone_has_four_ternary_operations() {
    let alg = maltsev::models::majority();
    let f3 = alg.free_algebra(3, 1000).unwrap();
    assert_eq!(f3.len(), 4);
    assert_eq!(clone_oracle(&alg).len(), 4);
    let mut seen = HashMap::new();
    for i in 0..f3.len() {
        seen.insert(f3.element(i).to_vec(), f3.witness(i).to_string());
    }
    assert_eq!(seen[&vec![0, 0, 0, 1, 0, 1, 1, 1]], "(maj x y z)");
}
