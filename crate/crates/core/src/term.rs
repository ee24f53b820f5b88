//! Terms over a finite signature.
//!
//! Terms are immutable trees behind `Arc`, so subterms may be shared freely.
//! Nested left powers such as `J^(2^k - 1)` are exponentially large as trees
//! but stay small as DAGs; every traversal in this module memoizes on node
//! identity so that work is proportional to the DAG, not the tree.
//!
//! Applications are hash-consed per thread: building a term that is
//! structurally equal to a live term on the same thread returns the same
//! node. Equality still falls back to a structural comparison.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Weak};

use thiserror::Error;

/// A variable. Chain terms use `x`, `y` and `z`; indexed
/// variables `v1, v2, ...` name the arguments of operations of higher arity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    Z,
    Indexed(u32),
}

impl Var {
    pub fn name(&self) -> String {
        match self {
            Var::X => "x".into(),
            Var::Y => "y".into(),
            Var::Z => "z".into(),
            Var::Indexed(i) => format!("v{i}"),
        }
    }

    pub fn parse(token: &str) -> Option<Var> {
        match token {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "z" => Some(Var::Z),
            _ => {
                let digits = token.strip_prefix('v')?;
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return None;
                }
                digits.parse().ok().map(Var::Indexed)
            }
        }
    }

    /// Positional variables used for the arguments of an `arity`-ary operation:
    /// `x, y, z` for arity up to three, `v1 .. vn` otherwise.
    pub fn positional(arity: usize) -> Vec<Var> {
        match arity {
            0 => vec![],
            1 => vec![Var::X],
            2 => vec![Var::X, Var::Z],
            3 => vec![Var::X, Var::Y, Var::Z],
            n => (1..=n as u32).map(Var::Indexed).collect(),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X => f.write_str("x"),
            Var::Y => f.write_str("y"),
            Var::Z => f.write_str("z"),
            Var::Indexed(i) => write!(f, "v{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpSymbol {
    name: Arc<str>,
    arity: usize,
}

impl OpSymbol {
    pub fn new(name: &str, arity: usize) -> Result<OpSymbol, TermError> {
        if !is_symbol_name(name) {
            return Err(TermError::BadSymbolName(name.to_string()));
        }
        if arity == 0 {
            return Err(TermError::ZeroArity(name.to_string()));
        }
        Ok(OpSymbol {
            name: Arc::from(name),
            arity,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

impl fmt::Display for OpSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `[A-Za-z][A-Za-z0-9]*`
pub fn is_symbol_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => chars.all(|c| c.is_ascii_alphanumeric()),
        _ => false,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    symbols: Vec<OpSymbol>,
    index: HashMap<Arc<str>, usize>,
}

impl Signature {
    pub fn new(symbols: impl IntoIterator<Item = OpSymbol>) -> Result<Signature, TermError> {
        let mut sig = Signature::default();
        for s in symbols {
            sig.push(s)?;
        }
        Ok(sig)
    }

    pub fn push(&mut self, symbol: OpSymbol) -> Result<(), TermError> {
        if self.index.contains_key(&symbol.name) {
            return Err(TermError::DuplicateSymbol(symbol.name.to_string()));
        }
        self.index.insert(symbol.name.clone(), self.symbols.len());
        self.symbols.push(symbol);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&OpSymbol> {
        self.index.get(name).map(|&i| &self.symbols[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn symbols(&self) -> &[OpSymbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Infer a signature from S-expression text: every head symbol gets the
    /// arity of its first use, later uses must agree.
    pub fn infer(texts: &[&str]) -> Result<Signature, ParseError> {
        let mut sig = Signature::default();
        for text in texts {
            let tokens = tokenize(text)?;
            let mut depth_stack: Vec<(usize, String, usize)> = Vec::new();
            let mut i = 0;
            while i < tokens.len() {
                match &tokens[i].kind {
                    Tok::Open => {
                        let (off, name) = match tokens.get(i + 1) {
                            Some(Token {
                                kind: Tok::Atom(a),
                                offset,
                            }) => (*offset, a.clone()),
                            Some(t) => {
                                return Err(ParseError::syntax(t.offset, "expected operation symbol"))
                            }
                            None => return Err(ParseError::syntax(text.len(), "unexpected end")),
                        };
                        if let Some((_, _, n)) = depth_stack.last_mut() {
                            *n += 1;
                        }
                        depth_stack.push((off, name, 0));
                        i += 2;
                        continue;
                    }
                    Tok::Close => {
                        let (off, name, n) = depth_stack
                            .pop()
                            .ok_or_else(|| ParseError::syntax(tokens[i].offset, "unbalanced ')'"))?;
                        match sig.get(&name) {
                            Some(s) if s.arity != n => {
                                return Err(ParseError {
                                    offset: off,
                                    kind: ParseErrorKind::ArityMismatch {
                                        symbol: name,
                                        expected: s.arity,
                                        found: n,
                                    },
                                })
                            }
                            Some(_) => {}
                            None => {
                                let sym = OpSymbol::new(&name, n).map_err(|_| ParseError {
                                    offset: off,
                                    kind: ParseErrorKind::UnknownSymbol(name.clone()),
                                })?;
                                sig.push(sym).expect("fresh symbol");
                            }
                        }
                    }
                    Tok::Atom(_) => {
                        if let Some((_, _, n)) = depth_stack.last_mut() {
                            *n += 1;
                        }
                    }
                }
                i += 1;
            }
        }
        Ok(sig)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("invalid operation symbol name {0:?}")]
    BadSymbolName(String),
    #[error("operation symbol {0} must have positive arity")]
    ZeroArity(String),
    #[error("duplicate operation symbol {0}")]
    DuplicateSymbol(String),
    #[error("unbound variable {0}")]
    UnboundVariable(Var),
    #[error("term {0} is not binary: it mentions y")]
    NotBinary(String),
    #[error("position {0:?} does not exist in term")]
    BadPosition(Vec<usize>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("at offset {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown operation symbol {0}")]
    UnknownSymbol(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("{symbol} expects {expected} arguments, found {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    fn syntax(offset: usize, msg: &str) -> ParseError {
        ParseError {
            offset,
            kind: ParseErrorKind::Syntax(msg.to_string()),
        }
    }
}

pub type Bindings = BTreeMap<Var, Term>;

/// Position of a subterm: the sequence of argument indices from the root.
pub type Position = Vec<usize>;

#[derive(Clone)]
pub struct Term(Arc<Node>);

enum Node {
    Var(Var),
    App(App),
}

struct App {
    op: OpSymbol,
    args: Box<[Term]>,
    hash: u64,
    size: u64,
}

struct Interner {
    vars: HashMap<Var, Term>,
    apps: HashMap<u64, Vec<Weak<Node>>>,
    entries: usize,
    next_sweep: usize,
}

thread_local! {
    static INTERNER: RefCell<Interner> = RefCell::new(Interner {
        vars: HashMap::new(),
        apps: HashMap::new(),
        entries: 0,
        next_sweep: 1 << 16,
    });
}

impl Interner {
    fn app(&mut self, op: &OpSymbol, args: Vec<Term>, hash: u64, size: u64) -> Term {
        let bucket = self.apps.entry(hash).or_default();
        for w in bucket.iter() {
            if let Some(node) = w.upgrade() {
                if let Node::App(a) = &*node {
                    if a.op == *op && a.args.iter().zip(&args).all(|(p, q)| p.ptr_eq(q)) {
                        return Term(node);
                    }
                }
            }
        }
        let node = Arc::new(Node::App(App {
            op: op.clone(),
            args: args.into_boxed_slice(),
            hash,
            size,
        }));
        bucket.push(Arc::downgrade(&node));
        self.entries += 1;
        if self.entries >= self.next_sweep {
            self.apps.retain(|_, b| {
                b.retain(|w| w.strong_count() > 0);
                !b.is_empty()
            });
            self.entries = self.apps.values().map(Vec::len).sum();
            self.next_sweep = (2 * self.entries).max(1 << 16);
        }
        Term(node)
    }
}

const VAR_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut h: u64, v: u64) -> u64 {
    h ^= v.wrapping_add(VAR_SEED).wrapping_add(h << 6).wrapping_add(h >> 2);
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^ (h >> 33)
}

fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl Term {
    pub fn var(v: Var) -> Term {
        INTERNER.with(|i| {
            let mut i = i.borrow_mut();
            i.vars.entry(v).or_insert_with(|| Term(Arc::new(Node::Var(v)))).clone()
        })
    }

    pub fn x() -> Term {
        Term::var(Var::X)
    }

    pub fn y() -> Term {
        Term::var(Var::Y)
    }

    pub fn z() -> Term {
        Term::var(Var::Z)
    }

    /// Build an application. Panics if the number of arguments does not match
    /// the arity; use [`parse_term`] for untrusted input.
    pub fn app(op: &OpSymbol, args: Vec<Term>) -> Term {
        assert_eq!(
            op.arity,
            args.len(),
            "arity mismatch building {}: expected {}, got {}",
            op.name,
            op.arity,
            args.len()
        );
        let mut hash = mix(name_hash(&op.name), op.arity as u64);
        let mut size: u64 = 1;
        for a in &args {
            hash = mix(hash, a.hash64());
            size = size.saturating_add(a.size());
        }
        INTERNER.with(|i| i.borrow_mut().app(op, args, hash, size))
    }

    pub fn as_var(&self) -> Option<Var> {
        match &*self.0 {
            Node::Var(v) => Some(*v),
            Node::App(_) => None,
        }
    }

    pub fn is_var(&self) -> bool {
        self.as_var().is_some()
    }

    pub fn op(&self) -> Option<&OpSymbol> {
        match &*self.0 {
            Node::Var(_) => None,
            Node::App(a) => Some(&a.op),
        }
    }

    pub fn args(&self) -> &[Term] {
        match &*self.0 {
            Node::Var(_) => &[],
            Node::App(a) => &a.args,
        }
    }

    /// Structural hash, stable across runs.
    pub fn hash64(&self) -> u64 {
        match &*self.0 {
            Node::Var(v) => mix(VAR_SEED, var_code(*v)),
            Node::App(a) => a.hash,
        }
    }

    /// Number of nodes of the term as a tree (saturating).
    pub fn size(&self) -> u64 {
        match &*self.0 {
            Node::Var(_) => 1,
            Node::App(a) => a.size,
        }
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Address of the shared node, stable while the term is alive.
    pub fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    /// Number of distinct nodes reachable by identity.
    pub fn dag_size(&self) -> usize {
        let mut seen = HashSet::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            if seen.insert(t.addr()) {
                stack.extend(t.args());
            }
        }
        seen.len()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        let mut seen = HashSet::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            if !seen.insert(t.addr()) {
                continue;
            }
            match &*t.0 {
                Node::Var(v) => {
                    out.insert(*v);
                }
                Node::App(a) => stack.extend(a.args.iter()),
            }
        }
        out
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.vars().contains(&v)
    }

    /// A binary term mentions no variables besides `x` and `z`.
    pub fn is_binary(&self) -> bool {
        self.vars().iter().all(|v| matches!(v, Var::X | Var::Z))
    }

    /// Visit every distinct node once (post-order not guaranteed).
    pub fn for_each_node(&self, mut f: impl FnMut(&Term)) {
        let mut seen = HashSet::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            if seen.insert(t.addr()) {
                f(t);
                stack.extend(t.args());
            }
        }
    }

    /// Simultaneous substitution; every variable of the term must be bound.
    pub fn substitute(&self, bindings: &Bindings) -> Result<Term, TermError> {
        for v in self.vars() {
            if !bindings.contains_key(&v) {
                return Err(TermError::UnboundVariable(v));
            }
        }
        Ok(self.replace_vars(bindings))
    }

    /// Simultaneous substitution leaving unbound variables in place.
    pub fn replace_vars(&self, bindings: &Bindings) -> Term {
        let mut memo: HashMap<usize, Term> = HashMap::new();
        self.replace_vars_memo(bindings, &mut memo)
    }

    fn replace_vars_memo(&self, bindings: &Bindings, memo: &mut HashMap<usize, Term>) -> Term {
        if let Some(t) = memo.get(&self.addr()) {
            return t.clone();
        }
        let out = match &*self.0 {
            Node::Var(v) => bindings.get(v).cloned().unwrap_or_else(|| self.clone()),
            Node::App(a) => {
                let args: Vec<Term> = a
                    .args
                    .iter()
                    .map(|t| t.replace_vars_memo(bindings, memo))
                    .collect();
                if args.iter().zip(a.args.iter()).all(|(n, o)| n.ptr_eq(o)) {
                    self.clone()
                } else {
                    Term::app(&a.op, args)
                }
            }
        };
        memo.insert(self.addr(), out.clone());
        out
    }

    /// Shorthand for substituting `x`, `y` and `z`.
    pub fn at(&self, x: &Term, y: &Term, z: &Term) -> Term {
        let b: Bindings = [(Var::X, x.clone()), (Var::Y, y.clone()), (Var::Z, z.clone())]
            .into_iter()
            .collect();
        self.replace_vars(&b)
    }

    /// `t(x, z)` for a binary term, i.e. substitute `x` and `z`.
    pub fn at2(&self, x: &Term, z: &Term) -> Term {
        let b: Bindings = [(Var::X, x.clone()), (Var::Z, z.clone())].into_iter().collect();
        self.replace_vars(&b)
    }

    /// Rename a single variable.
    pub fn rename(&self, from: Var, to: Var) -> Term {
        let b: Bindings = [(from, Term::var(to))].into_iter().collect();
        self.replace_vars(&b)
    }

    pub fn subterm_at(&self, pos: &[usize]) -> Option<&Term> {
        let mut t = self;
        for &i in pos {
            t = t.args().get(i)?;
        }
        Some(t)
    }

    /// Replace the subterm at `pos`, sharing everything off the path.
    pub fn replace_at(&self, pos: &[usize], new: Term) -> Result<Term, TermError> {
        match pos.split_first() {
            None => Ok(new),
            Some((&i, rest)) => match &*self.0 {
                Node::App(a) if i < a.args.len() => {
                    let mut args = a.args.to_vec();
                    args[i] = args[i].replace_at(rest, new)?;
                    Ok(Term::app(&a.op, args))
                }
                _ => Err(TermError::BadPosition(pos.to_vec())),
            },
        }
    }

    /// Tree positions of every occurrence of variable `v`.
    pub fn var_positions(&self, v: Var) -> Vec<Position> {
        let mut memo: HashMap<usize, Arc<Vec<Position>>> = HashMap::new();
        self.var_positions_memo(v, &mut memo).as_ref().clone()
    }

    fn var_positions_memo(&self, v: Var, memo: &mut HashMap<usize, Arc<Vec<Position>>>) -> Arc<Vec<Position>> {
        if let Some(p) = memo.get(&self.addr()) {
            return p.clone();
        }
        let out = match &*self.0 {
            Node::Var(w) if *w == v => Arc::new(vec![vec![]]),
            Node::Var(_) => Arc::new(vec![]),
            Node::App(a) => {
                let mut acc = Vec::new();
                for (i, arg) in a.args.iter().enumerate() {
                    for p in arg.var_positions_memo(v, memo).iter() {
                        let mut q = Vec::with_capacity(p.len() + 1);
                        q.push(i);
                        q.extend_from_slice(p);
                        acc.push(q);
                    }
                }
                Arc::new(acc)
            }
        };
        memo.insert(self.addr(), out.clone());
        out
    }

    /// Number of tree occurrences of `v` (saturating).
    pub fn count_var(&self, v: Var) -> u64 {
        let mut memo: HashMap<usize, u64> = HashMap::new();
        fn go(t: &Term, v: Var, memo: &mut HashMap<usize, u64>) -> u64 {
            if let Some(&c) = memo.get(&t.addr()) {
                return c;
            }
            let c = match &*t.0 {
                Node::Var(w) => u64::from(*w == v),
                Node::App(a) => a
                    .args
                    .iter()
                    .fold(0u64, |acc, s| acc.saturating_add(go(s, v, memo))),
            };
            memo.insert(t.addr(), c);
            c
        }
        go(self, v, &mut memo)
    }

    /// Canonical S-expression text.
    pub fn to_sexp(&self) -> String {
        let mut s = String::new();
        self.write_sexp(&mut s);
        s
    }

    fn write_sexp(&self, out: &mut String) {
        match &*self.0 {
            Node::Var(v) => out.push_str(&v.name()),
            Node::App(a) => {
                out.push('(');
                out.push_str(&a.op.name);
                for arg in a.args.iter() {
                    out.push(' ');
                    arg.write_sexp(out);
                }
                out.push(')');
            }
        }
    }
}

fn var_code(v: Var) -> u64 {
    match v {
        Var::X => 1,
        Var::Y => 2,
        Var::Z => 3,
        Var::Indexed(i) => 16 + i as u64,
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        if self.hash64() != other.hash64() || self.size() != other.size() {
            return false;
        }
        if self.size() < 512 {
            shallow_eq(self, other)
        } else {
            let mut memo = HashSet::new();
            deep_eq(self, other, &mut memo)
        }
    }
}

impl Eq for Term {}

fn shallow_eq(a: &Term, b: &Term) -> bool {
    if a.ptr_eq(b) {
        return true;
    }
    match (&*a.0, &*b.0) {
        (Node::Var(v), Node::Var(w)) => v == w,
        (Node::App(p), Node::App(q)) => {
            p.hash == q.hash
                && p.op == q.op
                && p.args.iter().zip(q.args.iter()).all(|(s, t)| shallow_eq(s, t))
        }
        _ => false,
    }
}

fn deep_eq(a: &Term, b: &Term, memo: &mut HashSet<(usize, usize)>) -> bool {
    if a.ptr_eq(b) {
        return true;
    }
    match (&*a.0, &*b.0) {
        (Node::Var(v), Node::Var(w)) => v == w,
        (Node::App(p), Node::App(q)) => {
            if p.hash != q.hash || p.size != q.size || p.op != q.op {
                return false;
            }
            if memo.contains(&(a.addr(), b.addr())) {
                return true;
            }
            let eq = p
                .args
                .iter()
                .zip(q.args.iter())
                .all(|(s, t)| deep_eq(s, t, memo));
            if eq {
                memo.insert((a.addr(), b.addr()));
            }
            eq
        }
        _ => false,
    }
}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash64());
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexp())
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.size() <= 200 {
            f.write_str(&self.to_sexp())
        } else {
            write!(f, "<term size={} hash={:016x}>", self.size(), self.hash64())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Identity {
    pub lhs: Term,
    pub rhs: Term,
}

impl Identity {
    pub fn new(lhs: Term, rhs: Term) -> Identity {
        Identity { lhs, rhs }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut v = self.lhs.vars();
        v.extend(self.rhs.vars());
        v
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// Left power: `a^0 = z`, `a^(k+1)(x, z) = a(x, a^k)`.
pub fn left_power(a: &Term, k: usize) -> Result<Term, TermError> {
    if !a.is_binary() {
        return Err(TermError::NotBinary(a.to_sexp()));
    }
    let mut acc = Term::z();
    for _ in 0..k {
        acc = a.at2(&Term::x(), &acc);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'(' => {
                out.push(Token { kind: Tok::Open, offset: i });
                i += 1;
            }
            b')' => {
                out.push(Token { kind: Tok::Close, offset: i });
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: Tok::Atom(text[start..i].to_string()),
                    offset: start,
                });
            }
            _ => return Err(ParseError::syntax(i, &format!("unexpected character {:?}", c as char))),
        }
    }
    Ok(out)
}

/// Parse an S-expression term: `term := var | "(" symbol term+ ")"`.
pub fn parse_term(text: &str, sig: &Signature) -> Result<Term, ParseError> {
    let tokens = tokenize(text)?;
    let mut pos = 0;
    let t = parse_tokens(&tokens, &mut pos, sig, text.len())?;
    if let Some(extra) = tokens.get(pos) {
        return Err(ParseError::syntax(extra.offset, "trailing input after term"));
    }
    Ok(t)
}

fn parse_tokens(tokens: &[Token], pos: &mut usize, sig: &Signature, end: usize) -> Result<Term, ParseError> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| ParseError::syntax(end, "unexpected end of input"))?;
    *pos += 1;
    match &tok.kind {
        Tok::Close => Err(ParseError::syntax(tok.offset, "unexpected ')'")),
        Tok::Atom(a) => Var::parse(a).map(Term::var).ok_or_else(|| ParseError {
            offset: tok.offset,
            kind: ParseErrorKind::UnknownVariable(a.clone()),
        }),
        Tok::Open => {
            let head = tokens
                .get(*pos)
                .ok_or_else(|| ParseError::syntax(end, "unexpected end of input"))?;
            let name = match &head.kind {
                Tok::Atom(a) => a,
                _ => return Err(ParseError::syntax(head.offset, "expected operation symbol")),
            };
            *pos += 1;
            let op = sig.get(name).ok_or_else(|| ParseError {
                offset: head.offset,
                kind: ParseErrorKind::UnknownSymbol(name.clone()),
            })?;
            let mut args = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(ParseError::syntax(end, "missing ')'")),
                    Some(Token { kind: Tok::Close, .. }) => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => args.push(parse_tokens(tokens, pos, sig, end)?),
                }
            }
            if args.len() != op.arity() {
                return Err(ParseError {
                    offset: head.offset,
                    kind: ParseErrorKind::ArityMismatch {
                        symbol: name.clone(),
                        expected: op.arity(),
                        found: args.len(),
                    },
                });
            }
            Ok(Term::app(op, args))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        Signature::new([
            OpSymbol::new("J1", 3).unwrap(),
            OpSymbol::new("J2", 3).unwrap(),
            OpSymbol::new("J3", 3).unwrap(),
            OpSymbol::new("b", 2).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn parse_application() {
        let t = parse_term("(J1 x x z)", &sig()).unwrap();
        assert_eq!(t.op().unwrap().name(), "J1");
        assert_eq!(t.args(), &[Term::x(), Term::x(), Term::z()]);
        assert_eq!(t.to_sexp(), "(J1 x x z)");
    }

    #[test]
    fn parse_variable() {
        assert_eq!(parse_term("x", &sig()).unwrap(), Term::x());
        assert_eq!(parse_term("  v12 ", &sig()).unwrap(), Term::var(Var::Indexed(12)));
    }

    #[test]
    fn parse_arity_mismatch() {
        let err = parse_term("(J1 x (J2 x y z))", &sig()).unwrap_err();
        assert!(matches!(
            err.kind,
            ParseErrorKind::ArityMismatch { expected: 3, found: 2, .. }
        ));
        assert_eq!(err.offset, 1);
    }

    #[test]
    fn parse_errors_report_position() {
        let err = parse_term("(J1 x x", &sig()).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
        let err = parse_term("(K x x x)", &sig()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownSymbol("K".into()));
        assert_eq!(err.offset, 1);
        let err = parse_term("(J1 x w z)", &sig()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownVariable("w".into()));
        assert_eq!(err.offset, 6);
        assert!(parse_term("x y", &sig()).is_err());
        assert!(parse_term("(J1 x x z))", &sig()).is_err());
    }

    #[test]
    fn substitute_simultaneous() {
        let s = sig();
        let t = parse_term("(J1 x y z)", &s).unwrap();
        let a = parse_term("(b x z)", &s).unwrap();
        let b = parse_term("(b z x)", &s).unwrap();
        let bind: Bindings = [(Var::X, a.clone()), (Var::Y, a.clone()), (Var::Z, b.clone())]
            .into_iter()
            .collect();
        assert_eq!(
            t.substitute(&bind).unwrap().to_sexp(),
            "(J1 (b x z) (b x z) (b z x))"
        );
        let swap: Bindings = [(Var::X, Term::z()), (Var::Z, Term::x())].into_iter().collect();
        assert_eq!(Term::x().substitute(&swap).unwrap(), Term::z());
        let partial: Bindings = [(Var::X, Term::z())].into_iter().collect();
        assert_eq!(
            t.substitute(&partial).unwrap_err(),
            TermError::UnboundVariable(Var::Y)
        );
    }

    #[test]
    fn substitute_matches_box_recursion() {
        // q2 = b(q1, a) with q1 = x
        let s = sig();
        let b = parse_term("(b x z)", &s).unwrap();
        let a = parse_term("(J2 x x z)", &s).unwrap();
        let q1 = Term::x();
        let q2 = b.at2(&q1, &a);
        assert_eq!(q2.to_sexp(), "(b x (J2 x x z))");
    }

    #[test]
    fn left_power_basics() {
        let s = sig();
        let j = parse_term("(J3 x z z)", &s).unwrap();
        assert_eq!(left_power(&j, 0).unwrap(), Term::z());
        assert_eq!(left_power(&j, 1).unwrap(), j);
        assert_eq!(
            left_power(&j, 2).unwrap().to_sexp(),
            "(J3 x (J3 x z z) (J3 x z z))"
        );
        assert_eq!(left_power(&Term::z(), 5).unwrap(), Term::z());
        let bad = parse_term("(J3 x y z)", &s).unwrap();
        assert!(matches!(left_power(&bad, 2), Err(TermError::NotBinary(_))));
    }

    #[test]
    fn sharing_keeps_large_powers_cheap() {
        let s = sig();
        let j = parse_term("(J3 x z z)", &s).unwrap();
        let big = left_power(&j, 40).unwrap();
        assert!(big.size() > 1 << 40);
        assert!(big.dag_size() < 200);
        let big2 = left_power(&j, 40).unwrap();
        assert!(big.ptr_eq(&big2));
        assert_eq!(big, big2);
        assert_ne!(big, left_power(&j, 39).unwrap());
        assert_eq!(big.count_var(Var::Z), 1 << 40);
    }

    #[test]
    fn positions_and_replacement() {
        let s = sig();
        let t = parse_term("(J1 x (b x z) z)", &s).unwrap();
        assert_eq!(t.var_positions(Var::X), vec![vec![0], vec![1, 0]]);
        assert_eq!(t.subterm_at(&[1]).unwrap().to_sexp(), "(b x z)");
        let r = t.replace_at(&[1, 1], Term::x()).unwrap();
        assert_eq!(r.to_sexp(), "(J1 x (b x x) z)");
        assert!(t.replace_at(&[0, 0], Term::x()).is_err());
    }

    #[test]
    fn infer_signature() {
        let sig = Signature::infer(&["(f x (g y))", "(g (f z z))"]).unwrap();
        assert_eq!(sig.get("f").unwrap().arity(), 2);
        assert_eq!(sig.get("g").unwrap().arity(), 1);
        assert!(Signature::infer(&["(f x)", "(f x y)"]).is_err());
    }
}
