//! Deciding Maltsev conditions of a finite idempotent algebra through the
//! relations `E` and `F` on its two-generated free algebra, plus checkers
//! for the two preorder theorems.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{
    is_admissible_preorder, is_subuniverse_of_square, AlgebraError, BinRel, FiniteAlgebra, PreorderCheck, Subpower,
    TableEvaluator, DEFAULT_CAP,
};
pub use crate::chain::verify_chain;
use crate::chain::{ChainFile, ChainKind, ChainVerdict, TermChain};
use crate::engine::convert_dj_to_simultaneous;
use crate::term::{Term, Var};

#[derive(Debug, Error)]
pub enum DeciderError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal soundness failure: {0}")]
    Unsound(String),
}

#[derive(Clone, Copy, Debug)]
pub struct EFOptions {
    pub cap: usize,
    /// Work in the clone of idempotent term operations instead of
    /// rejecting a non-idempotent algebra.
    pub idempotent_reduct: bool,
}

impl Default for EFOptions {
    fn default() -> Self {
        EFOptions {
            cap: DEFAULT_CAP,
            idempotent_reduct: false,
        }
    }
}

/// `F2` and `F3` of the variety of an algebra with the relations `E` and
/// `F` on `F2` and a first (BFS-minimal) witness for every pair.
#[derive(Clone, Debug)]
pub struct EFStructure {
    alg: FiniteAlgebra,
    pub f2: Subpower,
    pub f3: Subpower,
    /// `gset[i]`: element `i` of `F3` satisfies `t(x,y,x) = x`.
    pub gset: Vec<bool>,
    pub e: BinRel,
    pub f: BinRel,
    /// `(t(x,x,z), t(x,z,z))` for each element of `F3`, as `F2` indices.
    ends: Vec<(usize, usize)>,
    e_wit: HashMap<(usize, usize), usize>,
    f_wit: HashMap<(usize, usize), usize>,
    e_adj: Vec<Vec<usize>>,
    f_adj: Vec<Vec<usize>>,
    x: usize,
    z: usize,
    pub reduct: bool,
}

fn idempotent_vector(v: &[u8], n: usize, g: u32) -> bool {
    let stride: usize = (0..g).map(|i| n.pow(i)).sum();
    (0..n).all(|a| v[a * stride] as usize == a)
}

fn adjacency(n: usize, pairs: &HashMap<(usize, usize), usize>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in pairs.keys() {
        adj[a].push(b);
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
    }
    adj
}

#[allow(non_snake_case)]
pub fn build_EF(alg: &FiniteAlgebra, opts: EFOptions) -> Result<EFStructure, DeciderError> {
    if !opts.idempotent_reduct {
        if let Some(op) = alg.first_non_idempotent() {
            return Err(AlgebraError::NotIdempotent(op.to_string()).into());
        }
    }
    let n = alg.size();
    let mut f2 = alg.free_algebra(2, opts.cap)?;
    let mut f3 = alg.free_algebra(3, opts.cap)?;
    if opts.idempotent_reduct {
        f2 = f2.filter(|v| idempotent_vector(v, n, 2));
        f3 = f3.filter(|v| idempotent_vector(v, n, 3));
    }
    let proj = |i: usize| -> Vec<u8> { (0..n * n).map(|c| [c / n, c % n][i] as u8).collect() };
    let x = f2.index_of(&proj(0)).expect("x generates F2");
    let z = f2.index_of(&proj(1)).expect("z generates F2");
    let mut ends = Vec::with_capacity(f3.len());
    let mut gset = Vec::with_capacity(f3.len());
    let mut e_wit = HashMap::new();
    let mut f_wit = HashMap::new();
    let mut lo = vec![0u8; n * n];
    let mut hi = vec![0u8; n * n];
    for (i, v) in f3.elements().enumerate() {
        for a in 0..n {
            for c in 0..n {
                lo[a * n + c] = v[a * n * n + a * n + c];
                hi[a * n + c] = v[a * n * n + c * n + c];
            }
        }
        let (Some(p), Some(q)) = (f2.index_of(&lo), f2.index_of(&hi)) else {
            return Err(DeciderError::Unsound(format!("binary part of F3 element {i} is not in F2")));
        };
        let g = (0..n).all(|a| (0..n).all(|b| v[a * n * n + b * n + a] as usize == a));
        ends.push((p, q));
        gset.push(g);
        f_wit.entry((p, q)).or_insert(i);
        if g {
            e_wit.entry((p, q)).or_insert(i);
        }
    }
    let m = f2.len();
    let e = BinRel::from_pairs(m, e_wit.keys().copied())?;
    let f = BinRel::from_pairs(m, f_wit.keys().copied())?;
    Ok(EFStructure {
        alg: alg.clone(),
        e_adj: adjacency(m, &e_wit),
        f_adj: adjacency(m, &f_wit),
        f2,
        f3,
        gset,
        e,
        f,
        ends,
        e_wit,
        f_wit,
        x,
        z,
        reduct: opts.idempotent_reduct,
    })
}

/// A path `nodes[0] E nodes[1] E ...` in `F2` with one witness per edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EPath {
    pub nodes: Vec<usize>,
    pub witnesses: Vec<Term>,
}

impl EPath {
    pub fn len(&self) -> usize {
        self.witnesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Found {
    pub chain: TermChain,
    pub path: EPath,
    /// For bounded searches, every `k' <= kmax` at which the target is
    /// reachable in at most `k'` steps.
    pub reachable_at: Vec<usize>,
}

impl EFStructure {
    pub fn algebra(&self) -> &FiniteAlgebra {
        &self.alg
    }

    pub fn x(&self) -> usize {
        self.x
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn ends(&self, i: usize) -> (usize, usize) {
        self.ends[i]
    }

    pub fn e_witness(&self, a: usize, b: usize) -> Option<&Term> {
        self.e_wit.get(&(a, b)).map(|&i| self.f3.witness(i))
    }

    pub fn f_witness(&self, a: usize, b: usize) -> Option<&Term> {
        self.f_wit.get(&(a, b)).map(|&i| self.f3.witness(i))
    }

    /// `{t(x,z,z) : t(x,x,z) = z}` with the first witness of each element.
    pub fn gumm_targets(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for (i, &(p, q)) in self.ends.iter().enumerate() {
            if p == self.z {
                m.entry(q).or_insert(i);
            }
        }
        m
    }

    /// Check that `w` witnesses `a E b`: `w(x,y,x) = x` on the algebra and
    /// `(w(x,x,z), w(x,z,z)) = (a, b)` in `F2`.
    pub fn check_edge(&self, a: usize, b: usize, w: &Term) -> Result<(), String> {
        let n = self.alg.size();
        let mut ev = TableEvaluator::new(&self.alg, &[Var::X, Var::Y, Var::Z]);
        let tab = ev.table(w).map_err(|e| e.to_string())?;
        if !(0..n).all(|p| (0..n).all(|q| tab[p * n * n + q * n + p] as usize == p)) {
            return Err("witness fails t(x,y,x)=x".into());
        }
        let lo: Vec<u8> = (0..n * n).map(|c| tab[(c / n) * n * n + (c / n) * n + c % n]).collect();
        let hi: Vec<u8> = (0..n * n).map(|c| tab[(c / n) * n * n + (c % n) * n + c % n]).collect();
        if lo != self.f2.element(a) || hi != self.f2.element(b) {
            return Err(format!("witness does not join F2 elements {a} and {b}"));
        }
        Ok(())
    }

    fn refl_witness(&self, a: usize) -> Term {
        self.f2.witness(a).clone()
    }

    fn path(&self, adj: &[Vec<usize>], from: usize, hit: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        let mut parent = vec![usize::MAX; adj.len()];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if hit(u) {
                let mut nodes = vec![u];
                let mut v = u;
                while v != from {
                    v = parent[v];
                    nodes.push(v);
                }
                nodes.reverse();
                return Some(nodes);
            }
            for &v in &adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        None
    }

    fn distance(&self, adj: &[Vec<usize>], from: usize, to: usize) -> Option<usize> {
        self.path(adj, from, |u| u == to).map(|p| p.len() - 1)
    }

    fn edge_path(&self, mut nodes: Vec<usize>, wit: &HashMap<(usize, usize), usize>) -> EPath {
        if nodes.len() == 1 {
            nodes.push(nodes[0]);
        }
        let witnesses = nodes
            .windows(2)
            .map(|w| match wit.get(&(w[0], w[1])) {
                Some(&i) => self.f3.witness(i).clone(),
                None => self.refl_witness(w[0]),
            })
            .collect();
        EPath { nodes, witnesses }
    }

    fn sound(&self, chain: TermChain) -> Result<TermChain, DeciderError> {
        match verify_chain(&self.alg, &[], &chain)? {
            ChainVerdict::Holds => Ok(chain),
            v => Err(DeciderError::Unsound(format!("extracted {} chain: {v}", chain.kind))),
        }
    }
}

/// Shortest `E`-path from `x` to `z`; its witnesses are directed Jónsson
/// terms.
pub fn decide_directed_jonsson(ef: &EFStructure) -> Result<Option<Found>, DeciderError> {
    let Some(nodes) = ef.path(&ef.e_adj, ef.x, |u| u == ef.z) else {
        return Ok(None);
    };
    let path = ef.edge_path(nodes, &ef.e_wit);
    let chain = ef.sound(TermChain::new(ChainKind::DJ, path.witnesses.clone()))?;
    Ok(Some(Found {
        chain,
        path,
        reachable_at: Vec::new(),
    }))
}

/// Jónsson terms, obtained from the directed chain.
pub fn decide_jonsson(ef: &EFStructure) -> Result<Option<TermChain>, DeciderError> {
    match decide_directed_jonsson(ef)? {
        Some(found) => Ok(Some(ef.sound(convert_dj_to_simultaneous(&found.chain))?)),
        None => Ok(None),
    }
}

fn bounded(
    ef: &EFStructure,
    kmax: usize,
    adj: &[Vec<usize>],
    wit: &HashMap<(usize, usize), usize>,
    kind: ChainKind,
) -> Result<Option<Found>, DeciderError> {
    if kmax == 0 {
        return Err(DeciderError::Invalid("kmax must be at least 1".into()));
    }
    let Some(d) = ef.distance(adj, ef.z, ef.x) else {
        return Ok(None);
    };
    if d > kmax {
        return Ok(None);
    }
    let nodes = ef.path(adj, ef.z, |u| u == ef.x).expect("reachable");
    let path = ef.edge_path(nodes, wit);
    let terms = path.witnesses.iter().rev().cloned().collect();
    let chain = ef.sound(TermChain::new(kind, terms))?;
    Ok(Some(Found {
        reachable_at: (chain.len()..=kmax).collect(),
        chain,
        path,
    }))
}

/// Least `k <= kmax` with `z F^k x`; the reversed path witnesses are
/// Hagemann-Mitschke terms.
pub fn decide_hagemann_mitschke(ef: &EFStructure, kmax: usize) -> Result<Option<Found>, DeciderError> {
    bounded(ef, kmax, &ef.f_adj, &ef.f_wit, ChainKind::HM)
}

/// Least `k <= kmax` with `z E^k x`; the reversed path witnesses are
/// Pixley terms.
pub fn decide_pixley(ef: &EFStructure, kmax: usize) -> Result<Option<Found>, DeciderError> {
    bounded(ef, kmax, &ef.e_adj, &ef.e_wit, ChainKind::P)
}

/// Shortest `E`-path from `x` into `{t(x,z,z) : t(x,x,z) = z}`; the tail is
/// the witness of its endpoint.
pub fn decide_directed_gumm(ef: &EFStructure) -> Result<Option<Found>, DeciderError> {
    let targets = ef.gumm_targets();
    let Some(nodes) = ef.path(&ef.e_adj, ef.x, |u| targets.contains_key(&u)) else {
        return Ok(None);
    };
    let end = *nodes.last().expect("nonempty path");
    let path = ef.edge_path(nodes, &ef.e_wit);
    let q = ef.f3.witness(targets[&end]).clone();
    let chain = ef.sound(TermChain::with_tail(ChainKind::DG, path.witnesses.clone(), q))?;
    Ok(Some(Found {
        chain,
        path,
        reachable_at: Vec::new(),
    }))
}

/// Shorten an `E`-path of length `k+1` to length `k` using
/// Hagemann-Mitschke terms `H1 .. Hk`: the new inner nodes are
/// `c_i = H(i+1)(a_i, a(i+1), a(i+1))`.
pub fn collapse_chain(ef: &EFStructure, path: &EPath, hm: &TermChain) -> Result<EPath, DeciderError> {
    let k = hm.len();
    if hm.kind != ChainKind::HM || k == 0 {
        return Err(DeciderError::Invalid("expected a nonempty HM chain".into()));
    }
    if path.len() != k + 1 || path.nodes.len() != k + 2 {
        return Err(DeciderError::Invalid(format!("path must have {} edges, has {}", k + 1, path.len())));
    }
    if let v @ (ChainVerdict::Fails { .. } | ChainVerdict::Malformed(_)) = verify_chain(&ef.alg, &[], hm)? {
        return Err(DeciderError::Invalid(format!("HM chain: {v}")));
    }
    for (i, w) in path.witnesses.iter().enumerate() {
        ef.check_edge(path.nodes[i], path.nodes[i + 1], w)
            .map_err(|e| DeciderError::Invalid(format!("edge {i}: {e}")))?;
    }
    let n = ef.alg.size();
    let mut ev = TableEvaluator::new(&ef.alg, &[Var::X, Var::Y, Var::Z]);
    let a = &path.nodes;
    let mut nodes = vec![a[0]];
    let mut witnesses = Vec::with_capacity(k);
    for i in 0..k {
        let h = &hm.terms[i];
        let tab = ev.table(h)?;
        let (p, q) = (ef.f2.element(a[i]), ef.f2.element(a[i + 1]));
        let r = ef.f2.element(a[i + 2]);
        let image = |u: &[u8], v: &[u8], w: &[u8]| -> Vec<u8> {
            (0..n * n).map(|c| tab[u[c] as usize * n * n + v[c] as usize * n + w[c] as usize]).collect()
        };
        let from = ef
            .f2
            .index_of(&image(p, q, q))
            .ok_or_else(|| DeciderError::Unsound("c_i outside F2".into()))?;
        let to = if i + 1 < k {
            ef.f2
                .index_of(&image(q, r, r))
                .ok_or_else(|| DeciderError::Unsound("c_i outside F2".into()))?
        } else {
            a[k + 1]
        };
        if from != *nodes.last().expect("nonempty") {
            return Err(DeciderError::Unsound(format!("c_{i} does not continue the path")));
        }
        let w = h.at(&path.witnesses[i], &ef.refl_witness(a[i + 1]), &path.witnesses[i + 1]);
        ef.check_edge(from, to, &w)
            .map_err(|e| DeciderError::Unsound(format!("collapsed edge {i}: {e}")))?;
        nodes.push(to);
        witnesses.push(w);
    }
    Ok(EPath { nodes, witnesses })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PreconditionError {
    #[error("chain does not hold: {0}")]
    Chain(String),
    #[error("{which} is not an admissible preorder: {check:?}")]
    NotPreorder { which: &'static str, check: PreorderCheck },
    #[error("{0} is not a reflexive subuniverse of A^2")]
    NotReflexiveSubuniverse(&'static str),
    #[error("E is not contained in F")]
    NotSubset,
    #[error("E does not absorb F via term {term}: {e1:?} {f:?} {e3:?}")]
    NotAbsorbing {
        term: usize,
        e1: (usize, usize),
        f: (usize, usize),
        e3: (usize, usize),
    },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TheoremVerdict {
    Holds,
    Violation { a: usize, b: usize },
}

impl TheoremVerdict {
    pub fn holds(&self) -> bool {
        *self == TheoremVerdict::Holds
    }
}

impl fmt::Display for TheoremVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoremVerdict::Holds => f.write_str("holds"),
            TheoremVerdict::Violation { a, b } => write!(f, "THEOREM VIOLATION at ({a},{b})"),
        }
    }
}

/// First triple `e1, f, e3` and term with `t(e1, f, e3)` outside `E`.
pub fn find_absorption_failure(
    alg: &FiniteAlgebra,
    terms: &[Term],
    e: &BinRel,
    f: &BinRel,
) -> Result<Option<PreconditionError>, AlgebraError> {
    let n = alg.size();
    let mut ev = TableEvaluator::new(alg, &[Var::X, Var::Y, Var::Z]);
    let ep = e.pairs();
    let fp = f.pairs();
    for (ti, t) in terms.iter().enumerate() {
        let tab = ev.table(t)?;
        let at = |u: usize, v: usize, w: usize| tab[u * n * n + v * n + w] as usize;
        for &e1 in &ep {
            for &fm in &fp {
                for &e3 in &ep {
                    if !e.contains(at(e1.0, fm.0, e3.0), at(e1.1, fm.1, e3.1)) {
                        return Ok(Some(PreconditionError::NotAbsorbing { term: ti, e1, f: fm, e3 }));
                    }
                }
            }
        }
    }
    Ok(None)
}

fn chain_holds(alg: &FiniteAlgebra, chain: &TermChain, kind: ChainKind) -> Result<(), PreconditionError> {
    if chain.kind != kind {
        return Err(PreconditionError::Chain(format!("expected a {kind} chain, got {}", chain.kind)));
    }
    match verify_chain(alg, &[], chain)? {
        ChainVerdict::Holds => Ok(()),
        v => Err(PreconditionError::Chain(v.to_string())),
    }
}

/// For admissible preorders `E ⊆ F` such that `E` middle absorbs `F` with
/// respect to the (weak) Jónsson chain, `E = F`.
pub fn verify_preorder_collapse(
    alg: &FiniteAlgebra,
    jchain: &TermChain,
    e: &BinRel,
    f: &BinRel,
) -> Result<TheoremVerdict, PreconditionError> {
    chain_holds(alg, jchain, ChainKind::J)?;
    for (which, r) in [("E", e), ("F", f)] {
        if r.size() != alg.size() {
            return Err(PreconditionError::NotReflexiveSubuniverse(which));
        }
        let check = is_admissible_preorder(alg, r);
        if !check.is_admissible() {
            return Err(PreconditionError::NotPreorder { which, check });
        }
    }
    if !e.is_subset(f) {
        return Err(PreconditionError::NotSubset);
    }
    if let Some(err) = find_absorption_failure(alg, &jchain.terms, e, f)? {
        return Err(err);
    }
    Ok(match f.pairs().into_iter().find(|&(a, b)| !e.contains(a, b)) {
        Some((a, b)) => TheoremVerdict::Violation { a, b },
        None => TheoremVerdict::Holds,
    })
}

/// For reflexive subuniverses `E ⊆ F` of `A^2` such that `E` middle absorbs
/// `F` with respect to the Jónsson part of a (weak) Gumm chain: every
/// `(a,b) ∈ F` has some `c` with `(b,c) ∈ F` and `a ->E* c`.
pub fn verify_gumm_preorder_property(
    alg: &FiniteAlgebra,
    gchain: &TermChain,
    e: &BinRel,
    f: &BinRel,
) -> Result<TheoremVerdict, PreconditionError> {
    chain_holds(alg, gchain, ChainKind::G)?;
    for (which, r) in [("E", e), ("F", f)] {
        if r.size() != alg.size() || !r.is_reflexive() || is_subuniverse_of_square(alg, r).is_some() {
            return Err(PreconditionError::NotReflexiveSubuniverse(which));
        }
    }
    if !e.is_subset(f) {
        return Err(PreconditionError::NotSubset);
    }
    if let Some(err) = find_absorption_failure(alg, &gchain.terms, e, f)? {
        return Err(err);
    }
    let reach = e.transitive_closure();
    let n = alg.size();
    for (a, b) in f.pairs() {
        if !(0..n).any(|c| f.contains(b, c) && reach.contains(a, c)) {
            return Ok(TheoremVerdict::Violation { a, b });
        }
    }
    Ok(TheoremVerdict::Holds)
}

#[derive(Clone, Copy, Debug)]
pub struct DecideOptions {
    pub max_hm: usize,
    pub max_pixley: usize,
    pub ef: EFOptions,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            max_hm: 8,
            max_pixley: 8,
            ef: EFOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Found,
    NotFound,
    ResourceExceeded,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kmax: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_length: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reachable_at: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainFile>,
}

impl ConditionReport {
    fn missing(status: Status, kmax: Option<usize>) -> ConditionReport {
        ConditionReport {
            status,
            k: None,
            kmax,
            path_length: None,
            reachable_at: Vec::new(),
            chain: None,
        }
    }

    fn from_found(found: Option<Found>, kmax: Option<usize>) -> ConditionReport {
        match found {
            None => ConditionReport::missing(Status::NotFound, kmax),
            Some(f) => ConditionReport {
                status: Status::Found,
                k: Some(f.chain.len()),
                kmax,
                path_length: Some(f.path.len()),
                reachable_at: f.reachable_at,
                chain: Some(f.chain.to_file()),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchStats {
    pub f2: usize,
    pub f3: usize,
    pub gset: usize,
    pub e_pairs: usize,
    pub f_pairs: usize,
    pub idempotent_reduct: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MaltsevReport {
    pub size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<SearchStats>,
    pub conditions: BTreeMap<String, ConditionReport>,
}

pub const CONDITIONS: [&str; 5] = [
    "directed-jonsson",
    "jonsson",
    "hagemann-mitschke",
    "pixley",
    "directed-gumm",
];

impl MaltsevReport {
    pub fn resource_exceeded(&self) -> bool {
        self.conditions.values().any(|c| c.status == Status::ResourceExceeded)
    }

    pub fn get(&self, name: &str) -> &ConditionReport {
        &self.conditions[name]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

impl fmt::Display for MaltsevReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(s) = &self.stats {
            writeln!(
                f,
                "|F2| = {}, |F3| = {}, |G| = {}, |E| = {}, |F| = {}{}",
                s.f2,
                s.f3,
                s.gset,
                s.e_pairs,
                s.f_pairs,
                if s.idempotent_reduct { " (idempotent reduct)" } else { "" }
            )?;
        }
        for name in CONDITIONS {
            let c = &self.conditions[name];
            write!(f, "{name:<18} ")?;
            match c.status {
                Status::ResourceExceeded => writeln!(f, "resource exceeded")?,
                Status::NotFound => match c.kmax {
                    Some(k) => writeln!(f, "not found for k <= {k}")?,
                    None => writeln!(f, "not found")?,
                },
                Status::Found => {
                    writeln!(f, "found, length {}", c.k.unwrap_or(0))?;
                    if let Some(ch) = &c.chain {
                        for (i, t) in ch.terms.iter().enumerate() {
                            writeln!(f, "    {}: {t}", i + 1)?;
                        }
                        if let Some(t) = &ch.tail {
                            writeln!(f, "    tail: {t}")?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Run every decider.
pub fn decide(alg: &FiniteAlgebra, opts: DecideOptions) -> Result<MaltsevReport, DeciderError> {
    let ef = match build_EF(alg, opts.ef) {
        Ok(ef) => ef,
        Err(DeciderError::Algebra(AlgebraError::ResourceExceeded { .. })) => {
            let conditions = CONDITIONS
                .iter()
                .map(|&c| (c.to_string(), ConditionReport::missing(Status::ResourceExceeded, None)))
                .collect();
            return Ok(MaltsevReport {
                size: alg.size(),
                stats: None,
                conditions,
            });
        }
        Err(e) => return Err(e),
    };
    let dj = decide_directed_jonsson(&ef)?;
    let j = match &dj {
        Some(found) => Some(ef.sound(convert_dj_to_simultaneous(&found.chain))?),
        None => None,
    };
    let mut conditions = BTreeMap::new();
    conditions.insert(
        "jonsson".to_string(),
        match j {
            Some(chain) => ConditionReport {
                status: Status::Found,
                k: Some(chain.len()),
                kmax: None,
                path_length: dj.as_ref().map(|f| f.path.len()),
                reachable_at: Vec::new(),
                chain: Some(chain.to_file()),
            },
            None => ConditionReport::missing(Status::NotFound, None),
        },
    );
    conditions.insert("directed-jonsson".into(), ConditionReport::from_found(dj, None));
    conditions.insert(
        "hagemann-mitschke".into(),
        ConditionReport::from_found(decide_hagemann_mitschke(&ef, opts.max_hm)?, Some(opts.max_hm)),
    );
    conditions.insert(
        "pixley".into(),
        ConditionReport::from_found(decide_pixley(&ef, opts.max_pixley)?, Some(opts.max_pixley)),
    );
    conditions.insert("directed-gumm".into(), ConditionReport::from_found(decide_directed_gumm(&ef)?, None));
    Ok(MaltsevReport {
        size: alg.size(),
        stats: Some(SearchStats {
            f2: ef.f2.len(),
            f3: ef.f3.len(),
            gset: ef.gset.iter().filter(|&&g| g).count(),
            e_pairs: ef.e.len(),
            f_pairs: ef.f.len(),
            idempotent_reduct: ef.reduct,
        }),
        conditions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{affine, lattice, majority, pixley, projections};

    fn ef(a: &FiniteAlgebra) -> EFStructure {
        build_EF(a, EFOptions::default()).unwrap()
    }

    fn sexps(c: &TermChain) -> Vec<String> {
        c.terms.iter().map(|t| t.to_sexp()).collect()
    }

    #[test]
    fn majority_is_one_directed_step() {
        let s = ef(&majority());
        assert!(s.e.contains(s.x(), s.z()));
        let f = decide_directed_jonsson(&s).unwrap().unwrap();
        assert_eq!(sexps(&f.chain), vec!["(maj x y z)"]);
        assert!(decide_hagemann_mitschke(&s, 8).unwrap().is_none());
        assert!(decide_pixley(&s, 8).unwrap().is_none());
        let g = decide_directed_gumm(&s).unwrap().unwrap();
        assert_eq!(g.chain.len(), 1);
    }

    #[test]
    fn lattice_has_majority_but_no_hm() {
        let s = ef(&lattice());
        assert_eq!(s.f2.len(), 4);
        let f = decide_directed_jonsson(&s).unwrap().unwrap();
        assert_eq!(f.chain.len(), 1);
        let med = s.f3.witness(s.e_wit[&(s.x(), s.z())]);
        let a = lattice();
        let tab = TableEvaluator::new(&a, &[Var::X, Var::Y, Var::Z]).table(med).unwrap();
        assert_eq!(&tab[..], &[0, 0, 0, 1, 0, 1, 1, 1]);
        assert!(decide_hagemann_mitschke(&s, 8).unwrap().is_none());
    }

    #[test]
    fn affine_is_maltsev_not_cd() {
        let s = ef(&affine());
        assert!(decide_directed_jonsson(&s).unwrap().is_none());
        assert!(decide_pixley(&s, 8).unwrap().is_none());
        let h = decide_hagemann_mitschke(&s, 8).unwrap().unwrap();
        assert_eq!(sexps(&h.chain), vec!["(m x y z)"]);
        assert_eq!(h.reachable_at, (1..=8).collect::<Vec<_>>());
        let g = decide_directed_gumm(&s).unwrap().unwrap();
        assert_eq!(sexps(&g.chain), vec!["x"]);
        assert_eq!(g.chain.tail.unwrap().to_sexp(), "(m x y z)");
    }

    #[test]
    fn pixley_at_one() {
        let s = ef(&pixley());
        let p = decide_pixley(&s, 8).unwrap().unwrap();
        assert_eq!(sexps(&p.chain), vec!["(p x y z)"]);
        assert!(decide_directed_jonsson(&s).unwrap().is_some());
        assert_eq!(decide_hagemann_mitschke(&s, 8).unwrap().unwrap().chain.len(), 1);
    }

    #[test]
    fn projection_relations() {
        let s = ef(&projections());
        assert_eq!(s.f2.len(), 2);
        assert_eq!(s.f3.len(), 3);
        assert_eq!(s.e.pairs(), vec![(0, 0), (1, 1)]);
        assert_eq!(s.f.pairs(), vec![(0, 0), (0, 1), (1, 1)]);
        assert!(decide_directed_gumm(&s).unwrap().is_none());
    }

    #[test]
    fn non_idempotent_needs_reduct() {
        let a = FiniteAlgebra::from_fn(2, vec![("m", 3, &|v: &[u8]| v[0] ^ v[1] ^ v[2]), ("n", 1, &|v: &[u8]| 1 - v[0])]).unwrap();
        assert!(matches!(build_EF(&a, EFOptions::default()), Err(DeciderError::Algebra(AlgebraError::NotIdempotent(_)))));
        let s = build_EF(
            &a,
            EFOptions {
                idempotent_reduct: true,
                ..EFOptions::default()
            },
        )
        .unwrap();
        assert_eq!(decide_hagemann_mitschke(&s, 8).unwrap().unwrap().chain.len(), 1);
    }

    #[test]
    fn edge_witnesses_are_sound() {
        for a in [majority(), lattice(), affine(), pixley()] {
            let s = ef(&a);
            for (a, b) in s.e.pairs() {
                s.check_edge(a, b, s.e_witness(a, b).unwrap()).unwrap();
            }
        }
    }

    #[test]
    fn collapse_shortens_paths() {
        let a = FiniteAlgebra::from_fn(
            2,
            vec![
                ("m", 3, &|v: &[u8]| v[0] ^ v[1] ^ v[2]),
                ("maj", 3, &|v: &[u8]| (v[0] & v[1]) | (v[1] & v[2]) | (v[0] & v[2])),
            ],
        )
        .unwrap();
        let s = ef(&a);
        let hm = decide_hagemann_mitschke(&s, 4).unwrap().unwrap().chain;
        assert_eq!(hm.len(), 1);
        let mut n = 0;
        for (p, q) in s.e.pairs() {
            for r in 0..s.f2.len() {
                if let Some(w2) = s.e_witness(q, r) {
                    let path = EPath {
                        nodes: vec![p, q, r],
                        witnesses: vec![s.e_witness(p, q).unwrap().clone(), w2.clone()],
                    };
                    let c = collapse_chain(&s, &path, &hm).unwrap();
                    assert_eq!(c.nodes, vec![p, r]);
                    n += 1;
                }
            }
        }
        assert!(n > 4);
        let x = s.x();
        let w = s.refl_witness(x);
        let path = EPath {
            nodes: vec![x, x, x],
            witnesses: vec![w.clone(), w],
        };
        assert_eq!(collapse_chain(&s, &path, &hm).unwrap().nodes, vec![x, x]);
    }

    #[test]
    fn preorder_examples() {
        let a = majority();
        let j = TermChain::new(ChainKind::J, vec![crate::term::parse_term("(maj x y z)", a.signature()).unwrap()]);
        let d = BinRel::diagonal(2);
        let le = BinRel::from_pairs(2, [(0, 0), (0, 1), (1, 1)]).unwrap();
        assert_eq!(verify_preorder_collapse(&a, &j, &d, &d), Ok(TheoremVerdict::Holds));
        assert_eq!(verify_preorder_collapse(&a, &j, &le, &le), Ok(TheoremVerdict::Holds));
        assert!(matches!(
            verify_preorder_collapse(&a, &j, &d, &le),
            Err(PreconditionError::NotAbsorbing { .. })
        ));
    }

    #[test]
    fn gumm_property_on_affine() {
        let a = FiniteAlgebra::from_fn(2, vec![("m", 3, &|v: &[u8]| v[0] ^ v[1] ^ v[2])]).unwrap();
        let m = crate::term::parse_term("(m x y z)", a.signature()).unwrap();
        let g = TermChain::with_tail(ChainKind::G, vec![Term::x()], m).weak();
        let v = verify_gumm_preorder_property(&a, &g, &BinRel::diagonal(2), &BinRel::full(2));
        assert_eq!(v, Ok(TheoremVerdict::Holds));
    }

    #[test]
    fn report_shape() {
        let r = decide(&majority(), DecideOptions::default()).unwrap();
        assert_eq!(r.get("directed-jonsson").status, Status::Found);
        assert_eq!(r.get("jonsson").k, Some(1));
        assert_eq!(r.get("hagemann-mitschke").status, Status::NotFound);
        assert_eq!(r.get("directed-gumm").status, Status::Found);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["conditions"]["directed-jonsson"]["chain"]["terms"][0], "(maj x y z)");
        assert_eq!(json["conditions"]["pixley"]["status"], "not-found");
    }
}
