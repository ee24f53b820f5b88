//! Finite algebras given by operation tables, free algebras as subpowers,
//! identity checking and binary relations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{Identity, OpSymbol, Signature, Term, Var};

/// Largest supported universe; elements are stored as bytes.
pub const MAX_SIZE: usize = 255;

/// Default element cap for subpower closures.
pub const DEFAULT_CAP: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("invalid algebra: {0}")]
    Invalid(String),
    #[error("unknown operation symbol {0}")]
    UnknownSymbol(String),
    #[error("unbound variable {0}")]
    UnboundVariable(Var),
    #[error("element {0} out of range")]
    OutOfRange(usize),
    #[error("closure exceeded {cap} elements")]
    ResourceExceeded { cap: usize },
    #[error("operation {0} is not idempotent")]
    NotIdempotent(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operation {
    pub symbol: OpSymbol,
    pub table: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAlgebra {
    size: usize,
    ops: Vec<Operation>,
    sig: Signature,
}

#[derive(Serialize, Deserialize)]
struct AlgebraFile {
    size: usize,
    ops: BTreeMap<String, OpFile>,
}

#[derive(Serialize, Deserialize)]
struct OpFile {
    arity: usize,
    table: Vec<usize>,
}

impl FiniteAlgebra {
    pub fn new(size: usize, ops: Vec<(&str, usize, Vec<u8>)>) -> Result<FiniteAlgebra, AlgebraError> {
        if size == 0 || size > MAX_SIZE {
            return Err(AlgebraError::Invalid(format!("size {size} not in 1..={MAX_SIZE}")));
        }
        let mut out = Vec::new();
        let mut sig = Signature::default();
        for (name, arity, table) in ops {
            let symbol = OpSymbol::new(name, arity).map_err(|e| AlgebraError::Invalid(e.to_string()))?;
            let expected = size
                .checked_pow(arity as u32)
                .ok_or_else(|| AlgebraError::Invalid(format!("table of {name} too large")))?;
            if table.len() != expected {
                return Err(AlgebraError::Invalid(format!(
                    "operation {name}: table has {} entries, expected {expected}",
                    table.len()
                )));
            }
            if let Some(v) = table.iter().find(|&&v| v as usize >= size) {
                return Err(AlgebraError::Invalid(format!(
                    "operation {name}: entry {v} outside universe of size {size}"
                )));
            }
            sig.push(symbol.clone()).map_err(|e| AlgebraError::Invalid(e.to_string()))?;
            out.push(Operation { symbol, table });
        }
        Ok(FiniteAlgebra { size, ops: out, sig })
    }

    /// Operation with the given arity, defined by a function on argument tuples.
    pub fn from_fn(size: usize, ops: Vec<(&str, usize, &dyn Fn(&[u8]) -> u8)>) -> Result<FiniteAlgebra, AlgebraError> {
        let tables = ops
            .into_iter()
            .map(|(name, arity, f)| {
                let table = tuples(size, arity).map(|t| f(&t)).collect();
                (name, arity, table)
            })
            .collect();
        FiniteAlgebra::new(size, tables)
    }

    pub fn from_json(text: &str) -> Result<FiniteAlgebra, AlgebraError> {
        let file: AlgebraFile =
            serde_json::from_str(text).map_err(|e| AlgebraError::Invalid(e.to_string()))?;
        let mut ops = Vec::new();
        for (name, op) in &file.ops {
            if let Some(v) = op.table.iter().find(|&&v| v >= file.size.max(1)) {
                return Err(AlgebraError::Invalid(format!(
                    "operation {name}: entry {v} outside universe of size {}",
                    file.size
                )));
            }
            ops.push((name.as_str(), op.arity, op.table.iter().map(|&v| v as u8).collect()));
        }
        FiniteAlgebra::new(file.size, ops)
    }

    pub fn to_json(&self) -> String {
        let file = AlgebraFile {
            size: self.size,
            ops: self
                .ops
                .iter()
                .map(|op| {
                    (
                        op.symbol.name().to_string(),
                        OpFile {
                            arity: op.symbol.arity(),
                            table: op.table.iter().map(|&v| v as usize).collect(),
                        },
                    )
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("serializable")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn op(&self, name: &str) -> Option<&Operation> {
        self.sig.position(name).map(|i| &self.ops[i])
    }

    pub fn apply(&self, op: &Operation, args: &[u8]) -> u8 {
        let idx = args.iter().fold(0usize, |acc, &a| acc * self.size + a as usize);
        op.table[idx]
    }

    pub fn is_idempotent(&self) -> bool {
        self.ops.iter().all(|op| {
            (0..self.size as u8).all(|a| {
                let args = vec![a; op.symbol.arity()];
                self.apply(op, &args) == a
            })
        })
    }

    pub fn first_non_idempotent(&self) -> Option<&str> {
        self.ops
            .iter()
            .find(|op| {
                (0..self.size as u8).any(|a| self.apply(op, &vec![a; op.symbol.arity()]) != a)
            })
            .map(|op| op.symbol.name())
    }

    /// A new algebra on the same universe whose operations are the given
    /// term operations. Each term uses the positional variables of its arity.
    pub fn interpret(&self, defs: &[(OpSymbol, Term)]) -> Result<FiniteAlgebra, AlgebraError> {
        let mut ops = Vec::new();
        for (sym, t) in defs {
            let vars = Var::positional(sym.arity());
            if let Some(v) = t.vars().into_iter().find(|v| !vars.contains(v)) {
                return Err(AlgebraError::UnboundVariable(v));
            }
            let table = self.term_table(t, &vars)?;
            ops.push((sym.name(), sym.arity(), table));
        }
        FiniteAlgebra::new(self.size, ops)
    }

    /// The operations of `self` plus the given term operations; a definition
    /// replaces an existing operation of the same name.
    pub fn extend(&self, defs: &[(OpSymbol, Term)]) -> Result<FiniteAlgebra, AlgebraError> {
        let derived = self.interpret(defs)?;
        let mut ops: Vec<(&str, usize, Vec<u8>)> = self
            .ops
            .iter()
            .filter(|op| derived.op(op.symbol.name()).is_none())
            .map(|op| (op.symbol.name(), op.symbol.arity(), op.table.clone()))
            .collect();
        ops.extend(
            derived
                .ops
                .iter()
                .map(|op| (op.symbol.name(), op.symbol.arity(), op.table.clone())),
        );
        FiniteAlgebra::new(self.size, ops)
    }

    /// Value of a term under an assignment.
    pub fn evaluate(&self, t: &Term, assignment: &HashMap<Var, u8>) -> Result<u8, AlgebraError> {
        if let Some(&a) = assignment.values().find(|&&a| a as usize >= self.size) {
            return Err(AlgebraError::OutOfRange(a as usize));
        }
        let mut memo = HashMap::new();
        self.eval_rec(t, assignment, &mut memo)
    }

    fn eval_rec(
        &self,
        t: &Term,
        assignment: &HashMap<Var, u8>,
        memo: &mut HashMap<u64, Vec<(Term, u8)>>,
    ) -> Result<u8, AlgebraError> {
        if let Some(v) = t.as_var() {
            return assignment.get(&v).copied().ok_or(AlgebraError::UnboundVariable(v));
        }
        if let Some(bucket) = memo.get(&t.hash64()) {
            if let Some((_, val)) = bucket.iter().find(|(s, _)| s.ptr_eq(t)) {
                return Ok(*val);
            }
        }
        let op = t.op().expect("application");
        let opi = self
            .op(op.name())
            .filter(|o| o.symbol.arity() == op.arity())
            .ok_or_else(|| AlgebraError::UnknownSymbol(op.name().to_string()))?;
        let mut args = Vec::with_capacity(op.arity());
        for a in t.args() {
            args.push(self.eval_rec(a, assignment, memo)?);
        }
        let val = self.apply(opi, &args);
        memo.entry(t.hash64()).or_default().push((t.clone(), val));
        Ok(val)
    }

    /// The table of a term operation over `vars` (first variable most
    /// significant), of length `size^vars.len()`.
    pub fn term_table(&self, t: &Term, vars: &[Var]) -> Result<Vec<u8>, AlgebraError> {
        let mut ev = TableEvaluator::new(self, vars);
        ev.table(t).map(|v| v.to_vec())
    }

    /// Exhaustive identity check. Returns the first counterexample in
    /// lexicographic order of assignments.
    pub fn check_identity(&self, id: &Identity) -> Result<IdentityCheck, AlgebraError> {
        let vars: Vec<Var> = id.vars().into_iter().collect();
        let mut ev = TableEvaluator::new(self, &vars);
        let l = ev.table(&id.lhs)?;
        let r = ev.table(&id.rhs)?;
        Ok(match l.iter().zip(r.iter()).position(|(a, b)| a != b) {
            None => IdentityCheck::Holds,
            Some(i) => IdentityCheck::Fails(Counterexample {
                assignment: vars.iter().copied().zip(decode(i, self.size, vars.len())).collect(),
                lhs: l[i],
                rhs: r[i],
            }),
        })
    }

    /// Middle absorption of `b` with respect to each ternary term; also
    /// checks idempotence of each term.
    pub fn check_middle_absorption(&self, b: &[u8], terms: &[Term]) -> Result<AbsorptionCheck, AlgebraError> {
        if b.is_empty() {
            return Err(AlgebraError::Invalid("absorbing set must be nonempty".into()));
        }
        if let Some(&e) = b.iter().find(|&&e| e as usize >= self.size) {
            return Err(AlgebraError::OutOfRange(e as usize));
        }
        let mut inb = vec![false; self.size];
        for &e in b {
            inb[e as usize] = true;
        }
        let vars = [Var::X, Var::Y, Var::Z];
        let mut ev = TableEvaluator::new(self, &vars);
        let n = self.size;
        for (ti, t) in terms.iter().enumerate() {
            let tab = ev.table(t)?;
            for a in 0..n {
                if tab[a * n * n + a * n + a] as usize != a {
                    return Ok(AbsorptionCheck::NotIdempotent { term: ti, element: a as u8 });
                }
            }
            for &a in b {
                for m in 0..n {
                    for &c in b {
                        let v = tab[a as usize * n * n + m * n + c as usize];
                        if !inb[v as usize] {
                            return Ok(AbsorptionCheck::Fails {
                                term: ti,
                                args: [a, m as u8, c],
                            });
                        }
                    }
                }
            }
        }
        Ok(AbsorptionCheck::Holds)
    }

    /// Close a set of vectors (all of the same length) under the coordinatewise
    /// operations. Deterministic: BFS rounds, operations in signature order,
    /// argument index tuples in lexicographic order, each tuple using at least
    /// one element found in the previous round.
    pub fn generate_subuniverse(&self, generators: Vec<(Vec<u8>, Term)>, cap: usize) -> Result<Subpower, AlgebraError> {
        let len = generators.first().map(|g| g.0.len()).unwrap_or(0);
        let mut sp = Subpower {
            len,
            elements: Vec::new(),
            witnesses: Vec::new(),
            index: HashMap::new(),
        };
        for (v, w) in generators {
            if v.len() != len {
                return Err(AlgebraError::Invalid("generators differ in length".into()));
            }
            if let Some(&e) = v.iter().find(|&&e| e as usize >= self.size) {
                return Err(AlgebraError::OutOfRange(e as usize));
            }
            sp.insert(v.into_boxed_slice(), w);
        }
        if sp.elements.len() > cap {
            return Err(AlgebraError::ResourceExceeded { cap });
        }
        // Coordinates with equal generator columns stay equal, and constant
        // columns stay constant when the operations are idempotent.
        let mut columns: Vec<Vec<u8>> = (0..len).map(|c| sp.elements.iter().map(|e| e[c]).collect()).collect();
        if self.is_idempotent() {
            columns.retain(|col| !col.iter().all(|&a| a == col[0]));
        }
        columns.sort();
        columns.dedup();
        let full = u32::try_from(columns.len()).ok().and_then(|d| self.size.checked_pow(d));
        let dense_len = u32::try_from(len).ok().and_then(|l| self.size.checked_pow(l)).filter(|&d| d <= 1 << 22);
        let mut dense = vec![false; dense_len.unwrap_or(0)];
        let code = |v: &[u8]| v.iter().fold(0usize, |t, &a| t * self.size + a as usize);
        if dense_len.is_some() {
            for e in &sp.elements {
                dense[code(e)] = true;
            }
        }
        let mut old = 0;
        loop {
            let cur = sp.elements.len();
            if old == cur || Some(cur) == full {
                break;
            }
            let mut buf = vec![0u8; len];
            let mut base = vec![0usize; len];
            for op in &self.ops {
                let r = op.symbol.arity();
                // lexicographic over [0, cur)^r with the last index innermost,
                // skipping tuples inside [0, old)^r
                let mut prefix = vec![0usize; r - 1];
                'tuples: loop {
                    for (c, b) in base.iter_mut().enumerate() {
                        *b = prefix.iter().fold(0, |t, &i| (t + sp.elements[i][c] as usize) * self.size);
                    }
                    let first = if prefix.iter().all(|&i| i < old) { old } else { 0 };
                    for last in first..cur {
                        let e = &sp.elements[last];
                        for (c, slot) in buf.iter_mut().enumerate() {
                            *slot = op.table[base[c] + e[c] as usize];
                        }
                        let new = if dense_len.is_some() {
                            let seen = &mut dense[code(&buf)];
                            !std::mem::replace(seen, true)
                        } else {
                            !sp.index.contains_key(&buf[..])
                        };
                        if new {
                            let args = prefix.iter().chain([&last]).map(|&i| sp.witnesses[i].clone()).collect();
                            sp.insert(buf.clone().into_boxed_slice(), Term::app(&op.symbol, args));
                            if sp.elements.len() > cap {
                                return Err(AlgebraError::ResourceExceeded { cap });
                            }
                            if Some(sp.elements.len()) == full {
                                return Ok(sp);
                            }
                        }
                    }
                    let mut p = r - 1;
                    loop {
                        if p == 0 {
                            break 'tuples;
                        }
                        p -= 1;
                        prefix[p] += 1;
                        if prefix[p] < cur {
                            for q in prefix.iter_mut().skip(p + 1) {
                                *q = 0;
                            }
                            break;
                        }
                    }
                }
            }
            old = cur;
        }
        Ok(sp)
    }

    /// The free algebra on `g` generators of the variety generated by this
    /// algebra, as a subpower of `A^(A^g)`.
    pub fn free_algebra(&self, g: usize, cap: usize) -> Result<Subpower, AlgebraError> {
        let vars: Vec<Var> = match g {
            1 => vec![Var::X],
            2 => vec![Var::X, Var::Z],
            3 => vec![Var::X, Var::Y, Var::Z],
            _ => return Err(AlgebraError::Invalid(format!("free algebra rank {g} not supported"))),
        };
        let n = self.size;
        let len = n
            .checked_pow(g as u32)
            .filter(|&l| l <= 1 << 24)
            .ok_or(AlgebraError::ResourceExceeded { cap })?;
        let gens = (0..g)
            .map(|i| {
                let v: Vec<u8> = (0..len).map(|c| decode(c, n, g)[i]).collect();
                (v, Term::var(vars[i]))
            })
            .collect();
        self.generate_subuniverse(gens, cap)
    }

    /// Index of the coordinate `(a1, ..., ag)` in a vector of `A^(A^g)`.
    pub fn coord(&self, args: &[u8]) -> usize {
        args.iter().fold(0, |acc, &a| acc * self.size + a as usize)
    }
}

/// Memoized evaluation of terms to function tables, sharing work across
/// terms with common subterms.
pub struct TableEvaluator<'a> {
    alg: &'a FiniteAlgebra,
    vars: Vec<Var>,
    len: usize,
    memo: HashMap<u64, Vec<(Term, Arc<[u8]>)>>,
}

impl<'a> TableEvaluator<'a> {
    pub fn new(alg: &'a FiniteAlgebra, vars: &[Var]) -> TableEvaluator<'a> {
        TableEvaluator {
            alg,
            vars: vars.to_vec(),
            len: alg.size.pow(vars.len() as u32),
            memo: HashMap::new(),
        }
    }

    pub fn table(&mut self, t: &Term) -> Result<Arc<[u8]>, AlgebraError> {
        if let Some(bucket) = self.memo.get(&t.hash64()) {
            if let Some((_, tab)) = bucket.iter().find(|(s, _)| s.ptr_eq(t)) {
                return Ok(tab.clone());
            }
        }
        let tab: Arc<[u8]> = match t.as_var() {
            Some(v) => {
                let i = self
                    .vars
                    .iter()
                    .position(|&w| w == v)
                    .ok_or(AlgebraError::UnboundVariable(v))?;
                let n = self.alg.size;
                let k = self.vars.len();
                (0..self.len).map(|c| decode(c, n, k)[i]).collect()
            }
            None => {
                let sym = t.op().expect("application");
                let op = self
                    .alg
                    .op(sym.name())
                    .filter(|o| o.symbol.arity() == sym.arity())
                    .ok_or_else(|| AlgebraError::UnknownSymbol(sym.name().to_string()))?;
                let mut args = Vec::with_capacity(sym.arity());
                for a in t.args() {
                    args.push(self.table(a)?);
                }
                let n = self.alg.size;
                (0..self.len)
                    .map(|c| {
                        let idx = args.iter().fold(0usize, |acc, a| acc * n + a[c] as usize);
                        op.table[idx]
                    })
                    .collect()
            }
        };
        self.memo
            .entry(t.hash64())
            .or_default()
            .push((t.clone(), tab.clone()));
        Ok(tab)
    }
}

fn decode(mut i: usize, n: usize, k: usize) -> Vec<u8> {
    let mut out = vec![0u8; k];
    for slot in out.iter_mut().rev() {
        *slot = (i % n) as u8;
        i /= n;
    }
    out
}

/// All tuples of `[0, n)^r` in lexicographic order.
pub fn tuples(n: usize, r: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..n.pow(r as u32)).map(move |i| decode(i, n, r))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdentityCheck {
    Holds,
    Fails(Counterexample),
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        matches!(self, IdentityCheck::Holds)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub assignment: Vec<(Var, u8)>,
    pub lhs: u8,
    pub rhs: u8,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.assignment.iter().map(|(v, a)| format!("{v}={a}")).collect();
        write!(f, "{} (lhs {}, rhs {})", parts.join(","), self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AbsorptionCheck {
    Holds,
    NotIdempotent { term: usize, element: u8 },
    Fails { term: usize, args: [u8; 3] },
}

/// A subuniverse of a power `A^len` with a witness term per element.
#[derive(Clone, Debug)]
pub struct Subpower {
    len: usize,
    elements: Vec<Box<[u8]>>,
    witnesses: Vec<Term>,
    index: HashMap<Box<[u8]>, usize>,
}

impl Subpower {
    fn insert(&mut self, v: Box<[u8]>, w: Term) {
        if self.index.contains_key(&v) {
            return;
        }
        self.index.insert(v.clone(), self.elements.len());
        self.elements.push(v);
        self.witnesses.push(w);
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn vector_len(&self) -> usize {
        self.len
    }

    pub fn element(&self, i: usize) -> &[u8] {
        &self.elements[i]
    }

    pub fn witness(&self, i: usize) -> &Term {
        &self.witnesses[i]
    }

    pub fn index_of(&self, v: &[u8]) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn elements(&self) -> impl Iterator<Item = &[u8]> {
        self.elements.iter().map(|e| &e[..])
    }

    /// The elements satisfying `keep`, in their original order.
    pub fn filter(&self, keep: impl Fn(&[u8]) -> bool) -> Subpower {
        let mut sp = Subpower {
            len: self.len,
            elements: Vec::new(),
            witnesses: Vec::new(),
            index: HashMap::new(),
        };
        for (e, w) in self.elements.iter().zip(&self.witnesses) {
            if keep(e) {
                sp.insert(e.clone(), w.clone());
            }
        }
        sp
    }
}

/// A binary relation on `{0..n-1}` stored as a bit matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct BinRel {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BinRel {
    pub fn empty(n: usize) -> BinRel {
        let words = n.div_ceil(64).max(1);
        BinRel {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn diagonal(n: usize) -> BinRel {
        let mut r = BinRel::empty(n);
        for a in 0..n {
            r.insert(a, a);
        }
        r
    }

    pub fn full(n: usize) -> BinRel {
        let mut r = BinRel::empty(n);
        for a in 0..n {
            for b in 0..n {
                r.insert(a, b);
            }
        }
        r
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<BinRel, AlgebraError> {
        let mut r = BinRel::empty(n);
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(AlgebraError::OutOfRange(a.max(b)));
            }
            r.insert(a, b);
        }
        Ok(r)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        self.bits[a * self.words + b / 64] |= 1 << (b % 64);
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        a < self.n && b < self.n && self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in 0..self.n {
                if self.contains(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_subset(&self, other: &BinRel) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|a| self.contains(a, a))
    }

    pub fn is_transitive(&self) -> bool {
        self.transitive_closure() == *self
    }

    /// Warshall's algorithm on bit rows.
    pub fn transitive_closure(&self) -> BinRel {
        let mut r = self.clone();
        let w = self.words;
        for k in 0..self.n {
            let row_k: Vec<u64> = r.bits[k * w..(k + 1) * w].to_vec();
            for i in 0..self.n {
                if r.contains(i, k) {
                    for (dst, src) in r.bits[i * w..(i + 1) * w].iter_mut().zip(&row_k) {
                        *dst |= *src;
                    }
                }
            }
        }
        r
    }

    pub fn union(&self, other: &BinRel) -> BinRel {
        let mut r = self.clone();
        for (a, b) in r.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
        r
    }

    /// Pairs as two-coordinate vectors, for closure computations in `A^2`.
    pub fn as_vectors(&self) -> Vec<Vec<u8>> {
        self.pairs().into_iter().map(|(a, b)| vec![a as u8, b as u8]).collect()
    }

    /// Smallest subuniverse of `A^2` containing the relation.
    pub fn subalgebra_closure(&self, alg: &FiniteAlgebra) -> Result<BinRel, AlgebraError> {
        let gens = self
            .as_vectors()
            .into_iter()
            .map(|v| (v, Term::x()))
            .collect::<Vec<_>>();
        if gens.is_empty() {
            return Ok(self.clone());
        }
        let sp = alg.generate_subuniverse(gens, DEFAULT_CAP)?;
        BinRel::from_pairs(self.n, sp.elements().map(|v| (v[0] as usize, v[1] as usize)))
    }
}

impl fmt::Debug for BinRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PreorderCheck {
    Admissible,
    NotReflexive(usize),
    NotTransitive,
    NotClosed { op: String },
}

impl PreorderCheck {
    pub fn is_admissible(&self) -> bool {
        matches!(self, PreorderCheck::Admissible)
    }
}

/// Is the relation closed under the coordinatewise operations of `A`?
pub fn is_subuniverse_of_square(alg: &FiniteAlgebra, r: &BinRel) -> Option<String> {
    let pairs = r.pairs();
    for op in alg.ops() {
        let k = op.symbol.arity();
        let mut idx = vec![0usize; k];
        if pairs.is_empty() {
            continue;
        }
        loop {
            let a: Vec<u8> = idx.iter().map(|&i| pairs[i].0 as u8).collect();
            let b: Vec<u8> = idx.iter().map(|&i| pairs[i].1 as u8).collect();
            if !r.contains(alg.apply(op, &a) as usize, alg.apply(op, &b) as usize) {
                return Some(op.symbol.name().to_string());
            }
            let mut p = k;
            loop {
                if p == 0 {
                    break;
                }
                p -= 1;
                idx[p] += 1;
                if idx[p] < pairs.len() {
                    break;
                }
                idx[p] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    None
}

pub fn is_admissible_preorder(alg: &FiniteAlgebra, r: &BinRel) -> PreorderCheck {
    if let Some(a) = (0..r.size()).find(|&a| !r.contains(a, a)) {
        return PreorderCheck::NotReflexive(a);
    }
    if !r.is_transitive() {
        return PreorderCheck::NotTransitive;
    }
    match is_subuniverse_of_square(alg, r) {
        Some(op) => PreorderCheck::NotClosed { op },
        None => PreorderCheck::Admissible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    pub fn maj() -> FiniteAlgebra {
        FiniteAlgebra::new(2, vec![("maj", 3, vec![0, 0, 0, 1, 0, 1, 1, 1])]).unwrap()
    }

    fn xor3() -> FiniteAlgebra {
        FiniteAlgebra::from_fn(2, vec![("m", 3, &|a: &[u8]| a[0] ^ a[1] ^ a[2])]).unwrap()
    }

    fn meet() -> FiniteAlgebra {
        FiniteAlgebra::from_fn(2, vec![("meet", 2, &|a: &[u8]| a[0] & a[1])]).unwrap()
    }

    fn lattice() -> FiniteAlgebra {
        FiniteAlgebra::from_fn(
            2,
            vec![
                ("meet", 2, &|a: &[u8]| a[0] & a[1]),
                ("join", 2, &|a: &[u8]| a[0] | a[1]),
            ],
        )
        .unwrap()
    }

    fn id(alg: &FiniteAlgebra, l: &str, r: &str) -> Identity {
        Identity::new(
            parse_term(l, alg.signature()).unwrap(),
            parse_term(r, alg.signature()).unwrap(),
        )
    }

    #[test]
    fn evaluate_examples() {
        let a = maj();
        let t = parse_term("(maj x y z)", a.signature()).unwrap();
        let asg: HashMap<Var, u8> = [(Var::X, 0), (Var::Y, 1), (Var::Z, 1)].into();
        assert_eq!(a.evaluate(&t, &asg).unwrap(), 1);
        let x = xor3();
        let t = parse_term("(m x y z)", x.signature()).unwrap();
        let asg: HashMap<Var, u8> = [(Var::X, 1), (Var::Y, 1), (Var::Z, 0)].into();
        assert_eq!(x.evaluate(&t, &asg).unwrap(), 0);
        let big = FiniteAlgebra::from_fn(8, vec![]).unwrap();
        let asg: HashMap<Var, u8> = [(Var::X, 7)].into();
        assert_eq!(big.evaluate(&Term::x(), &asg).unwrap(), 7);
    }

    #[test]
    fn identity_examples() {
        let l = lattice();
        assert!(l.check_identity(&id(&l, "(meet x (join y x))", "x")).unwrap().holds());
        let a = maj();
        assert!(a.check_identity(&id(&a, "(maj x y x)", "x")).unwrap().holds());
        let p = FiniteAlgebra::from_fn(2, vec![("p", 3, &|a: &[u8]| a[0])]).unwrap();
        match p.check_identity(&id(&p, "(p x y y)", "y")).unwrap() {
            IdentityCheck::Fails(c) => assert_eq!(c.assignment, vec![(Var::X, 0), (Var::Y, 1)]),
            IdentityCheck::Holds => panic!("projection is not a Maltsev term"),
        }
    }

    #[test]
    fn invalid_tables_rejected() {
        assert!(FiniteAlgebra::new(2, vec![("f", 2, vec![0, 1, 1])]).is_err());
        assert!(FiniteAlgebra::new(2, vec![("f", 1, vec![0, 2])]).is_err());
        assert!(FiniteAlgebra::from_json(r#"{"size":2,"ops":{"f":{"arity":2,"table":[0,1]}}}"#).is_err());
        let a = FiniteAlgebra::from_json(r#"{"size":2,"ops":{"maj":{"arity":3,"table":[0,0,0,1,0,1,1,1]}}}"#)
            .unwrap();
        assert_eq!(a, maj());
        assert_eq!(FiniteAlgebra::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn meet_free_algebra() {
        let f2 = meet().free_algebra(2, DEFAULT_CAP).unwrap();
        assert_eq!(f2.len(), 3);
        assert_eq!(f2.element(0), &[0, 0, 1, 1]);
        assert_eq!(f2.element(1), &[0, 1, 0, 1]);
        assert_eq!(f2.element(2), &[0, 0, 0, 1]);
        assert_eq!(f2.witness(2).to_sexp(), "(meet x z)");
    }

    #[test]
    fn maj_f2_is_projections() {
        assert_eq!(maj().free_algebra(2, DEFAULT_CAP).unwrap().len(), 2);
        let proj = FiniteAlgebra::from_fn(2, vec![("p", 3, &|a: &[u8]| a[0])]).unwrap();
        assert_eq!(proj.free_algebra(2, DEFAULT_CAP).unwrap().len(), 2);
    }

    #[test]
    fn maj_f3_matches_clone_enumeration() {
        // Independent oracle: close the set of ternary Boolean functions under
        // maj by naive fixpoint iteration over truth tables packed as u8.
        let mut clone: std::collections::BTreeSet<u8> = [0b00001111u8, 0b00110011, 0b01010101].into();
        loop {
            let cur: Vec<u8> = clone.iter().copied().collect();
            let mut grew = false;
            for &f in &cur {
                for &g in &cur {
                    for &h in &cur {
                        let m = (f & g) | (f & h) | (g & h);
                        grew |= clone.insert(m);
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let f3 = maj().free_algebra(3, DEFAULT_CAP).unwrap();
        assert_eq!(f3.len(), clone.len());
        assert_eq!(f3.len(), 4);
    }

    #[test]
    fn witnesses_reproduce_elements() {
        for alg in [maj(), xor3(), lattice()] {
            let f3 = alg.free_algebra(3, DEFAULT_CAP).unwrap();
            for i in 0..f3.len() {
                let tab = alg.term_table(f3.witness(i), &[Var::X, Var::Y, Var::Z]).unwrap();
                assert_eq!(&tab[..], f3.element(i));
            }
        }
    }

    #[test]
    fn closure_is_idempotent() {
        let alg = lattice();
        let f3 = alg.free_algebra(3, DEFAULT_CAP).unwrap();
        let gens = (0..f3.len())
            .map(|i| (f3.element(i).to_vec(), f3.witness(i).clone()))
            .collect();
        let again = alg.generate_subuniverse(gens, DEFAULT_CAP).unwrap();
        assert_eq!(again.len(), f3.len());
    }

    #[test]
    fn cap_is_enforced() {
        let err = lattice().free_algebra(3, 5).unwrap_err();
        assert_eq!(err, AlgebraError::ResourceExceeded { cap: 5 });
    }

    #[test]
    fn absorption_examples() {
        let a = maj();
        let m = parse_term("(maj x y z)", a.signature()).unwrap();
        assert_eq!(a.check_middle_absorption(&[0], std::slice::from_ref(&m)).unwrap(), AbsorptionCheck::Holds);
        assert_eq!(
            a.check_middle_absorption(&[0], &[Term::y()]).unwrap(),
            AbsorptionCheck::Fails { term: 0, args: [0, 1, 0] }
        );
        assert_eq!(a.check_middle_absorption(&[0, 1], &[m]).unwrap(), AbsorptionCheck::Holds);
        let k0 = FiniteAlgebra::from_fn(2, vec![("c", 3, &|_: &[u8]| 0)]).unwrap();
        let c = parse_term("(c x y z)", k0.signature()).unwrap();
        assert!(matches!(
            k0.check_middle_absorption(&[0], &[c]).unwrap(),
            AbsorptionCheck::NotIdempotent { term: 0, element: 1 }
        ));
    }

    #[test]
    fn closure_of_relations() {
        let r = BinRel::from_pairs(4, [(1, 2), (2, 3)]).unwrap();
        let c = r.transitive_closure();
        assert!(c.contains(1, 3));
        assert_eq!(c.len(), 3);
        assert!(BinRel::diagonal(3).transitive_closure().is_reflexive());
        assert!(BinRel::empty(3).transitive_closure().is_empty());
    }

    #[test]
    fn preorder_examples() {
        let a = maj();
        assert!(is_admissible_preorder(&a, &BinRel::diagonal(2)).is_admissible());
        let le = BinRel::from_pairs(2, [(0, 0), (0, 1), (1, 1)]).unwrap();
        assert!(is_admissible_preorder(&a, &le).is_admissible());
        let bad = BinRel::from_pairs(2, [(0, 1)]).unwrap();
        assert_eq!(is_admissible_preorder(&a, &bad), PreorderCheck::NotReflexive(0));
        let x = xor3();
        assert!(matches!(
            is_admissible_preorder(&x, &le),
            PreorderCheck::NotClosed { .. }
        ));
    }
}
