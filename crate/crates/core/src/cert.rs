//! Proof certificates for E-chains in the variety W generated by the
//! operations `J1 .. J(2k+1)`, and an independent replay checker.
//!
//! A certificate is a start term and a list of steps. A rewrite step applies
//! one axiom instance at a position below every hole of a context (the
//! trivial context `y` addresses the root); an edge step replaces the whole
//! current term `w(x,x,z)` by `w(x,z,z)` for a witness `w` of the grammar
//! `G ::= x | z | Ji(G, T, G)`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::algebra::{AlgebraError, FiniteAlgebra, TableEvaluator};
use crate::term::{Identity, OpSymbol, Position, Signature, Term, Var};

pub fn j_symbol(i: usize) -> OpSymbol {
    OpSymbol::new(&format!("J{i}"), 3).expect("valid symbol")
}

/// `J1 .. J(2k+1)`.
pub fn w_signature(k: usize) -> Signature {
    Signature::new((1..=2 * k + 1).map(j_symbol)).expect("distinct symbols")
}

/// Index `i` of a ternary symbol named `Ji`.
pub fn j_index(sym: &OpSymbol) -> Option<usize> {
    if sym.arity() != 3 {
        return None;
    }
    let digits = sym.name().strip_prefix('J')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

pub fn j(i: usize, a: &Term, b: &Term, c: &Term) -> Term {
    Term::app(&j_symbol(i), vec![a.clone(), b.clone(), c.clone()])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    /// `J1(x,x,y) = x`
    J1Unit,
    /// `J(2i+1)(x,y,y) = J(2i+2)(x,y,y)`, `0 <= i <= k-1`
    OddEven(usize),
    /// `J(2i)(x,x,y) = J(2i+1)(x,x,y)`, `1 <= i <= k`
    EvenOdd(usize),
    /// `J(2k+1)(x,y,y) = y`, full mode only
    JCollapse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "weak")]
    Weak,
    #[serde(rename = "full")]
    Full,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Weak => "weak",
            Mode::Full => "full",
        })
    }
}

impl Axiom {
    pub fn id(&self) -> String {
        match self {
            Axiom::J1Unit => "j1-unit".into(),
            Axiom::OddEven(i) => format!("odd-even:{i}"),
            Axiom::EvenOdd(i) => format!("even-odd:{i}"),
            Axiom::JCollapse => "j-collapse".into(),
        }
    }

    pub fn parse(id: &str) -> Option<Axiom> {
        match id {
            "j1-unit" => Some(Axiom::J1Unit),
            "j-collapse" => Some(Axiom::JCollapse),
            _ => {
                let (name, i) = id.split_once(':')?;
                let i: usize = i.parse().ok()?;
                match name {
                    "odd-even" => Some(Axiom::OddEven(i)),
                    "even-odd" => Some(Axiom::EvenOdd(i)),
                    _ => None,
                }
            }
        }
    }

    pub fn check_range(&self, k: usize, mode: Mode) -> Result<(), String> {
        match *self {
            Axiom::J1Unit => Ok(()),
            Axiom::OddEven(i) if i < k => Ok(()),
            Axiom::EvenOdd(i) if (1..=k).contains(&i) => Ok(()),
            Axiom::JCollapse if mode == Mode::Full => Ok(()),
            Axiom::JCollapse => Err("j-collapse is only available in full mode".into()),
            _ => Err(format!("axiom {} out of range for k={k}", self.id())),
        }
    }

    /// Both sides, in variables `x` and `y`.
    pub fn sides(&self, k: usize) -> (Term, Term) {
        self.instantiate(k, &Term::x(), &Term::y())
    }

    /// Both sides with `x` and `y` replaced by the given terms.
    pub fn instantiate(&self, k: usize, x: &Term, y: &Term) -> (Term, Term) {
        let (x, y) = (x.clone(), y.clone());
        match *self {
            Axiom::J1Unit => (j(1, &x, &x, &y), x),
            Axiom::OddEven(i) => (j(2 * i + 1, &x, &y, &y), j(2 * i + 2, &x, &y, &y)),
            Axiom::EvenOdd(i) => (j(2 * i, &x, &x, &y), j(2 * i + 1, &x, &x, &y)),
            Axiom::JCollapse => (j(2 * k + 1, &x, &y, &y), y),
        }
    }

    pub fn identity(&self, k: usize) -> Identity {
        let (l, r) = self.sides(k);
        Identity::new(l, r)
    }

    /// All axioms of W for the given k, plus the collapse axiom in full mode.
    pub fn all(k: usize, mode: Mode) -> Vec<Axiom> {
        let mut v = vec![Axiom::J1Unit];
        v.extend((0..k).map(Axiom::OddEven));
        v.extend((1..=k).map(Axiom::EvenOdd));
        if mode == Mode::Full {
            v.push(Axiom::JCollapse);
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dir {
    Lr,
    Rl,
}

impl Dir {
    pub fn flip(self) -> Dir {
        match self {
            Dir::Lr => Dir::Rl,
            Dir::Rl => Dir::Lr,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Dir::Lr => "lr",
            Dir::Rl => "rl",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomInstance {
    pub axiom: Axiom,
    pub dir: Dir,
    /// Context with hole `y`; its other leaves must match the current term.
    pub ctx: Term,
    /// Position below each hole.
    pub pos: Position,
    pub x: Term,
    pub y: Term,
}

impl AxiomInstance {
    pub fn at_root(axiom: Axiom, dir: Dir, pos: Position, x: &Term, y: &Term) -> AxiomInstance {
        AxiomInstance {
            axiom,
            dir,
            ctx: Term::y(),
            pos,
            x: x.clone(),
            y: y.clone(),
        }
    }

    /// Instantiated (source, target) in the direction of application.
    pub fn source_target(&self, k: usize) -> (Term, Term) {
        let (l, r) = self.axiom.instantiate(k, &self.x, &self.y);
        match self.dir {
            Dir::Lr => (l, r),
            Dir::Rl => (r, l),
        }
    }

    /// Apply to `cur`, rewriting below every hole of the context.
    pub fn apply(&self, cur: &Term, k: usize) -> Result<Term, String> {
        if !self.ctx.contains_var(Var::Y) {
            return Err("context has no hole".into());
        }
        let (src, tgt) = self.source_target(k);
        rewrite_below(cur, &self.ctx, &[(self, src, tgt)], &mut HashMap::new())
    }

    pub fn reversed(&self) -> AxiomInstance {
        AxiomInstance {
            dir: self.dir.flip(),
            ..self.clone()
        }
    }
}

/// Apply a run of rewrites sharing one context: at every hole, the
/// rewrites in order.
fn rewrite_below(
    cur: &Term,
    ctx: &Term,
    run: &[(&AxiomInstance, Term, Term)],
    memo: &mut HashMap<(usize, usize), Term>,
) -> Result<Term, String> {
    match ctx.as_var() {
        Some(Var::Y) => {
            let mut t = cur.clone();
            for (ai, src, tgt) in run {
                let found = t
                    .subterm_at(&ai.pos)
                    .ok_or_else(|| format!("position {:?} does not exist", ai.pos))?;
                if found != src {
                    return Err(format!(
                        "{} {} expected {} at {:?}, found {}",
                        ai.axiom.id(),
                        ai.dir.as_str(),
                        abbreviate(src),
                        ai.pos,
                        abbreviate(found)
                    ));
                }
                t = t.replace_at(&ai.pos, tgt.clone()).expect("position checked");
            }
            Ok(t)
        }
        Some(_) => {
            if cur != ctx {
                return Err(format!("context leaf {ctx} does not match {}", abbreviate(cur)));
            }
            Ok(cur.clone())
        }
        None => {
            if let Some(t) = memo.get(&(cur.addr(), ctx.addr())) {
                return Ok(t.clone());
            }
            if cur.op() != ctx.op() {
                return Err(format!(
                    "context symbol {} does not match {}",
                    ctx.op().expect("application"),
                    abbreviate(cur)
                ));
            }
            let mut args = Vec::with_capacity(ctx.args().len());
            for (c, t) in cur.args().iter().zip(ctx.args()) {
                args.push(rewrite_below(c, t, run, memo)?);
            }
            let out = Term::app(ctx.op().expect("application"), args);
            memo.insert((cur.addr(), ctx.addr()), out.clone());
            Ok(out)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChainStep {
    Rewrite(AxiomInstance),
    Edge(Term),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub k: usize,
    pub mode: Mode,
    pub start: Term,
    pub steps: Vec<ChainStep>,
    pub end: Term,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GError {
    #[error("outer slot holds {0}, expected x, z or a J application")]
    BadOuter(String),
    #[error("symbol {0} is not in J1..J{1}")]
    BadSymbol(String, usize),
}

/// Check that `t` is derivable in `G ::= x | z | Ji(G, T, G)` with
/// `i <= 2k+1`, where `T` is any term over the same symbols.
pub fn check_g_membership(t: &Term, k: usize) -> Result<(), GError> {
    GChecker::new(k).check(t)
}

struct GChecker {
    k: usize,
    g_ok: HashSet<usize>,
    t_ok: HashSet<usize>,
    keep: Vec<Term>,
}

impl GChecker {
    fn new(k: usize) -> GChecker {
        GChecker {
            k,
            g_ok: HashSet::new(),
            t_ok: HashSet::new(),
            keep: Vec::new(),
        }
    }

    fn symbol(&self, sym: &OpSymbol) -> Result<(), GError> {
        match j_index(sym) {
            Some(i) if (1..=2 * self.k + 1).contains(&i) => Ok(()),
            _ => Err(GError::BadSymbol(sym.name().to_string(), 2 * self.k + 1)),
        }
    }

    fn check(&mut self, t: &Term) -> Result<(), GError> {
        match t.as_var() {
            Some(Var::X) | Some(Var::Z) => Ok(()),
            Some(v) => Err(GError::BadOuter(v.name())),
            None => {
                if self.g_ok.contains(&t.addr()) {
                    return Ok(());
                }
                self.symbol(t.op().expect("application"))?;
                let a = t.args();
                self.check(&a[0])?;
                self.check_any(&a[1])?;
                self.check(&a[2])?;
                self.g_ok.insert(t.addr());
                self.keep.push(t.clone());
                Ok(())
            }
        }
    }

    fn check_any(&mut self, t: &Term) -> Result<(), GError> {
        if t.is_var() || self.t_ok.contains(&t.addr()) {
            return Ok(());
        }
        self.symbol(t.op().expect("application"))?;
        for a in t.args() {
            self.check_any(a)?;
        }
        self.t_ok.insert(t.addr());
        self.keep.push(t.clone());
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("step {step}: {reason}")]
pub struct ReplayError {
    /// Index of the failing step; `steps.len()` for a final mismatch.
    pub step: usize,
    pub reason: String,
}

/// Replay with the certificate's own `k`.
pub fn replay(cert: &Certificate) -> Result<Term, ReplayError> {
    replay_with_k(cert, cert.k)
}

/// Replay, checking axiom ranges and witness symbols against `k`.
pub fn replay_with_k(cert: &Certificate, k: usize) -> Result<Term, ReplayError> {
    replay_trace(cert, k, |_, _, _, _| Ok(()))
}

/// Replay and call `visit(index, before, after, steps)` after each edge and
/// after each maximal run of rewrites that share a context (`index` is the
/// first step of the run).
pub fn replay_trace(
    cert: &Certificate,
    k: usize,
    mut visit: impl FnMut(usize, &Term, &Term, &[ChainStep]) -> Result<(), String>,
) -> Result<Term, ReplayError> {
    let mut g = GChecker::new(k);
    let mut cur = cert.start.clone();
    let fail = |step: usize, reason: String| ReplayError { step, reason };
    let steps = &cert.steps;
    let mut idx = 0;
    while idx < steps.len() {
        let (next, end) = match &steps[idx] {
            ChainStep::Rewrite(first) => {
                let ctx = &first.ctx;
                let mut end = idx + 1;
                while let Some(ChainStep::Rewrite(ai)) = steps.get(end) {
                    if !ai.ctx.ptr_eq(ctx) {
                        break;
                    }
                    end += 1;
                }
                let mut run = Vec::with_capacity(end - idx);
                for (i, s) in steps[idx..end].iter().enumerate() {
                    let ChainStep::Rewrite(ai) = s else { unreachable!() };
                    ai.axiom.check_range(k, cert.mode).map_err(|r| fail(idx + i, r))?;
                    g.check_any(&ai.x)
                        .and_then(|_| g.check_any(&ai.y))
                        .map_err(|e| fail(idx + i, format!("substitution: {e}")))?;
                    let (src, tgt) = ai.source_target(k);
                    run.push((ai, src, tgt));
                }
                if !ctx.contains_var(Var::Y) {
                    return Err(fail(idx, "context has no hole".into()));
                }
                let next = match rewrite_below(&cur, ctx, &run, &mut HashMap::new()) {
                    Ok(t) => t,
                    Err(_) => {
                        // locate the first failing step of the run
                        let mut t = cur.clone();
                        for (i, r) in run.iter().enumerate() {
                            t = rewrite_below(&t, ctx, std::slice::from_ref(r), &mut HashMap::new())
                                .map_err(|e| fail(idx + i, e))?;
                        }
                        t
                    }
                };
                (next, end)
            }
            ChainStep::Edge(w) => {
                g.check(w).map_err(|e| fail(idx, format!("witness not in G: {e}")))?;
                let from = w.at(&Term::x(), &Term::x(), &Term::z());
                if from != cur {
                    return Err(fail(
                        idx,
                        format!("edge expects {}, found {}", abbreviate(&from), abbreviate(&cur)),
                    ));
                }
                (w.at(&Term::x(), &Term::z(), &Term::z()), idx + 1)
            }
        };
        visit(idx, &cur, &next, &steps[idx..end]).map_err(|r| fail(idx, r))?;
        cur = next;
        idx = end;
    }
    if cur != cert.end {
        return Err(fail(
            cert.steps.len(),
            format!(
                "replay ends at {}, certificate claims {}",
                abbreviate(&cur),
                abbreviate(&cert.end)
            ),
        ));
    }
    Ok(cur)
}

fn abbreviate(t: &Term) -> String {
    if t.size() <= 40 {
        t.to_sexp()
    } else {
        format!("<term size={} hash={:016x}>", t.size(), t.hash64())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditError {
    #[error("model {model} does not satisfy {axiom}")]
    ModelNotInW { model: usize, axiom: String },
    #[error("model {model}: {source}")]
    Model { model: usize, source: AlgebraError },
    #[error("model {model}: {reason}")]
    Unsound { model: usize, reason: String },
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Replay the certificate and check every step in each model: rewrites
/// preserve the binary term operation, edges relate their endpoints through
/// the witness, and the witness satisfies `w(x,y,x) = x` whenever the model
/// satisfies `Ji(x,y,x) = x` for all `i`.
pub fn soundness_audit(cert: &Certificate, models: &[FiniteAlgebra]) -> Result<(), AuditError> {
    let k = cert.k;
    replay_with_k(cert, k)?;
    let (x, y) = (Term::x(), Term::y());
    for (mi, m) in models.iter().enumerate() {
        let model_err = |source| AuditError::Model { model: mi, source };
        for ax in Axiom::all(k, cert.mode) {
            if !m.check_identity(&ax.identity(k)).map_err(model_err)?.holds() {
                return Err(AuditError::ModelNotInW {
                    model: mi,
                    axiom: ax.id(),
                });
            }
        }
        let mut middle = true;
        for i in 1..=2 * k + 1 {
            let id = Identity::new(j(i, &x, &y, &x), x.clone());
            middle &= m.check_identity(&id).map_err(model_err)?.holds();
        }
        let n = m.size();
        let mut ev2 = TableEvaluator::new(m, &[Var::X, Var::Z]);
        let mut ev3 = TableEvaluator::new(m, &[Var::X, Var::Y, Var::Z]);
        replay_trace(cert, k, |_, before, after, steps| {
            let b = ev2.table(before).map_err(|e| e.to_string())?;
            let a = ev2.table(after).map_err(|e| e.to_string())?;
            match &steps[0] {
                ChainStep::Rewrite(ai) => {
                    if a != b {
                        return Err(format!("rewrite {} changes the term operation", ai.axiom.id()));
                    }
                }
                ChainStep::Edge(w) => {
                    let t = ev3.table(w).map_err(|e| e.to_string())?;
                    for p in 0..n {
                        for q in 0..n {
                            let at = |u: usize, v: usize, w: usize| t[u * n * n + v * n + w];
                            if at(p, p, q) != b[p * n + q] || at(p, q, q) != a[p * n + q] {
                                return Err("edge endpoints do not match the witness".into());
                            }
                            if middle && at(p, q, p) as usize != p {
                                return Err("edge witness violates w(x,y,x) = x".into());
                            }
                        }
                    }
                }
            }
            Ok(())
        })
        .map_err(|e| AuditError::Unsound {
            model: mi,
            reason: e.to_string(),
        })?;
    }
    Ok(())
}

// ---- JSON ----

#[derive(Serialize, Deserialize)]
struct CertFile {
    k: usize,
    mode: Mode,
    start: String,
    end: String,
    terms: BTreeMap<String, NodeFile>,
    steps: Vec<StepFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeFile {
    Var { var: String },
    App(Vec<String>),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "t")]
enum StepFile {
    #[serde(rename = "rw")]
    Rw {
        ax: String,
        dir: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ctx: Option<String>,
        pos: Vec<usize>,
        sub: SubFile,
    },
    #[serde(rename = "edge")]
    Edge { w: String },
}

#[derive(Serialize, Deserialize)]
struct SubFile {
    x: String,
    y: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertFormatError {
    #[error("malformed certificate JSON: {0}")]
    Json(String),
    #[error("unknown term reference {0}")]
    MissingTerm(String),
    #[error("term {0} does not hash to its key")]
    HashMismatch(String),
    #[error("cyclic term reference at {0}")]
    Cycle(String),
    #[error("bad node {0}: {1}")]
    BadNode(String, String),
    #[error("unknown axiom {0}")]
    UnknownAxiom(String),
    #[error("unknown direction {0}")]
    UnknownDirection(String),
}

fn node_digest(t: &Term, memo: &mut HashMap<usize, [u8; 32]>, keep: &mut Vec<Term>) -> [u8; 32] {
    let key = t.addr();
    if let Some(d) = memo.get(&key) {
        return *d;
    }
    let mut h = Sha256::new();
    match t.as_var() {
        Some(v) => {
            h.update(b"v");
            h.update(v.name().as_bytes());
        }
        None => {
            h.update(b"a");
            h.update(t.op().expect("application").name().as_bytes());
            h.update([0u8]);
            for a in t.args() {
                h.update(&node_digest(a, memo, keep)[..REF_BYTES]);
            }
        }
    }
    let d: [u8; 32] = h.finalize().into();
    memo.insert(key, d);
    keep.push(t.clone());
    d
}

/// Term references are SHA-256 digests truncated to this many bytes.
const REF_BYTES: usize = 16;

fn hex(d: &[u8; 32]) -> String {
    const DIGITS: &[u8; 16] = b"0123456789abcdef";
    let mut s = String::with_capacity(2 * REF_BYTES);
    for b in &d[..REF_BYTES] {
        s.push(DIGITS[(b >> 4) as usize] as char);
        s.push(DIGITS[(b & 15) as usize] as char);
    }
    s
}

struct Writer {
    memo: HashMap<usize, [u8; 32]>,
    keep: Vec<Term>,
    terms: BTreeMap<String, NodeFile>,
    emitted: HashSet<[u8; 32]>,
}

impl Writer {
    fn reference(&mut self, t: &Term) -> String {
        let d = node_digest(t, &mut self.memo, &mut self.keep);
        self.emit(t, d);
        hex(&d)
    }

    fn emit(&mut self, t: &Term, d: [u8; 32]) {
        if !self.emitted.insert(d) {
            return;
        }
        let node = match t.as_var() {
            Some(v) => NodeFile::Var { var: v.name() },
            None => {
                let mut v = vec![t.op().expect("application").name().to_string()];
                for a in t.args() {
                    let ad = node_digest(a, &mut self.memo, &mut self.keep);
                    self.emit(a, ad);
                    v.push(hex(&ad));
                }
                NodeFile::App(v)
            }
        };
        self.terms.insert(hex(&d), node);
    }
}

impl Certificate {
    pub fn to_json(&self) -> String {
        let mut w = Writer {
            memo: HashMap::new(),
            keep: Vec::new(),
            terms: BTreeMap::new(),
            emitted: HashSet::new(),
        };
        let start = w.reference(&self.start);
        let end = w.reference(&self.end);
        let steps = self
            .steps
            .iter()
            .map(|s| match s {
                ChainStep::Rewrite(ai) => StepFile::Rw {
                    ax: ai.axiom.id(),
                    dir: ai.dir.as_str().into(),
                    ctx: (ai.ctx.as_var() != Some(Var::Y)).then(|| w.reference(&ai.ctx)),
                    pos: ai.pos.clone(),
                    sub: SubFile {
                        x: w.reference(&ai.x),
                        y: w.reference(&ai.y),
                    },
                },
                ChainStep::Edge(t) => StepFile::Edge { w: w.reference(t) },
            })
            .collect();
        let file = CertFile {
            k: self.k,
            mode: self.mode,
            start,
            end,
            terms: w.terms,
            steps,
        };
        serde_json::to_string(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Certificate, CertFormatError> {
        let file: CertFile = serde_json::from_str(text).map_err(|e| CertFormatError::Json(e.to_string()))?;
        let mut r = Reader {
            nodes: &file.terms,
            built: HashMap::new(),
            active: HashSet::new(),
            symbols: HashMap::new(),
        };
        let start = r.term(&file.start)?;
        let end = r.term(&file.end)?;
        let mut steps = Vec::with_capacity(file.steps.len());
        for s in &file.steps {
            steps.push(match s {
                StepFile::Rw { ax, dir, ctx, pos, sub } => ChainStep::Rewrite(AxiomInstance {
                    axiom: Axiom::parse(ax).ok_or_else(|| CertFormatError::UnknownAxiom(ax.clone()))?,
                    dir: match dir.as_str() {
                        "lr" => Dir::Lr,
                        "rl" => Dir::Rl,
                        d => return Err(CertFormatError::UnknownDirection(d.to_string())),
                    },
                    ctx: match ctx {
                        Some(c) => r.term(c)?,
                        None => Term::y(),
                    },
                    pos: pos.clone(),
                    x: r.term(&sub.x)?,
                    y: r.term(&sub.y)?,
                }),
                StepFile::Edge { w } => ChainStep::Edge(r.term(w)?),
            });
        }
        Ok(Certificate {
            k: file.k,
            mode: file.mode,
            start,
            steps,
            end,
        })
    }
}

struct Reader<'a> {
    nodes: &'a BTreeMap<String, NodeFile>,
    built: HashMap<String, Term>,
    active: HashSet<String>,
    symbols: HashMap<(String, usize), OpSymbol>,
}

impl Reader<'_> {
    fn term(&mut self, key: &str) -> Result<Term, CertFormatError> {
        if let Some(t) = self.built.get(key) {
            return Ok(t.clone());
        }
        if !self.active.insert(key.to_string()) {
            return Err(CertFormatError::Cycle(key.to_string()));
        }
        let node = self
            .nodes
            .get(key)
            .ok_or_else(|| CertFormatError::MissingTerm(key.to_string()))?;
        let t = match node {
            NodeFile::Var { var } => Term::var(
                Var::parse(var).ok_or_else(|| CertFormatError::BadNode(key.into(), format!("variable {var}")))?,
            ),
            NodeFile::App(v) => {
                let (name, args) = v
                    .split_first()
                    .ok_or_else(|| CertFormatError::BadNode(key.into(), "empty application".into()))?;
                if args.is_empty() {
                    return Err(CertFormatError::BadNode(key.into(), "no arguments".into()));
                }
                let sym = match self.symbols.get(&(name.clone(), args.len())) {
                    Some(s) => s.clone(),
                    None => {
                        let s = OpSymbol::new(name, args.len())
                            .map_err(|e| CertFormatError::BadNode(key.into(), e.to_string()))?;
                        self.symbols.insert((name.clone(), args.len()), s.clone());
                        s
                    }
                };
                let mut children = Vec::with_capacity(args.len());
                for a in args {
                    children.push(self.term(a)?);
                }
                Term::app(&sym, children)
            }
        };
        if hex(&digest_from_keys(node)) != key {
            return Err(CertFormatError::HashMismatch(key.to_string()));
        }
        self.active.remove(key);
        self.built.insert(key.to_string(), t.clone());
        Ok(t)
    }
}

fn digest_from_keys(node: &NodeFile) -> [u8; 32] {
    let mut h = Sha256::new();
    match node {
        NodeFile::Var { var } => {
            h.update(b"v");
            h.update(var.as_bytes());
        }
        NodeFile::App(v) => {
            h.update(b"a");
            h.update(v[0].as_bytes());
            h.update([0u8]);
            for key in &v[1..] {
                h.update(unhex(key).unwrap_or_default());
            }
        }
    }
    h.finalize().into()
}

fn unhex(s: &str) -> Option<Vec<u8>> {
    if s.len() % 2 != 0 {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(s.get(i..i + 2)?, 16).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::direct_jonsson;
    use crate::models::majority_jonsson;

    fn rw(axiom: Axiom, dir: Dir, a: &Term, b: &Term) -> ChainStep {
        ChainStep::Rewrite(AxiomInstance::at_root(axiom, dir, vec![], a, b))
    }

    // x = J1(x,x,z) -> J1(x,z,z) = J2(x,z,z)
    fn small() -> Certificate {
        let (x, y, z) = (Term::x(), Term::y(), Term::z());
        Certificate {
            k: 1,
            mode: Mode::Weak,
            start: x.clone(),
            steps: vec![
                rw(Axiom::J1Unit, Dir::Rl, &x, &z),
                ChainStep::Edge(j(1, &x, &y, &z)),
                rw(Axiom::OddEven(0), Dir::Lr, &x, &z),
            ],
            end: j(2, &x, &z, &z),
        }
    }

    #[test]
    fn hand_certificate_replays() {
        let c = small();
        assert_eq!(replay(&c).unwrap(), c.end);
        soundness_audit(&c, &[majority_jonsson(1)]).unwrap();
    }

    #[test]
    fn wrong_direction_is_rejected_at_its_step() {
        let mut c = small();
        if let ChainStep::Rewrite(ai) = &mut c.steps[2] {
            ai.dir = Dir::Rl;
        }
        assert_eq!(replay(&c).unwrap_err().step, 2);
    }

    #[test]
    fn out_of_range_axiom() {
        assert_eq!(replay_with_k(&small(), 0).unwrap_err().step, 2);
        let (x, z) = (Term::x(), Term::z());
        let mut c = Certificate {
            k: 1,
            mode: Mode::Weak,
            start: j(3, &x, &z, &z),
            steps: vec![rw(Axiom::JCollapse, Dir::Lr, &x, &z)],
            end: z,
        };
        assert_eq!(replay(&c).unwrap_err().step, 0);
        c.mode = Mode::Full;
        assert!(replay(&c).is_ok());
    }

    #[test]
    fn edge_witness_must_be_in_g() {
        let mut c = small();
        c.steps[1] = ChainStep::Edge(Term::app(&OpSymbol::new("J1", 3).unwrap(), vec![Term::x(), Term::y(), Term::y()]));
        assert!(replay(&c).is_err());
        assert!(check_g_membership(&j(2, &Term::y(), &Term::x(), &Term::z()), 1).is_err());
        assert!(matches!(check_g_membership(&j(4, &Term::x(), &Term::x(), &Term::z()), 1), Err(GError::BadSymbol(..))));
        assert!(check_g_membership(&j(3, &j(1, &Term::x(), &Term::y(), &Term::z()), &Term::y(), &Term::z()), 1).is_ok());
    }

    #[test]
    fn truncated_certificate_fails_at_end() {
        let mut c = small();
        c.steps.pop();
        assert_eq!(replay(&c).unwrap_err().step, c.steps.len());
    }

    #[test]
    fn json_round_trip() {
        for k in 1..=2 {
            let c = direct_jonsson(k).certificate;
            let text = c.to_json();
            let back = Certificate::from_json(&text).unwrap();
            assert_eq!(back, c);
            assert_eq!(replay(&back).unwrap(), Term::z());
        }
    }

    #[test]
    fn tampered_json_is_rejected() {
        let text = small().to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let terms = v["terms"].as_object().unwrap();
        let (key, node) = terms.iter().find(|(_, n)| n.is_array()).unwrap();
        let mut changed = v.clone();
        let mut arr = node.as_array().unwrap().clone();
        arr[0] = serde_json::Value::String("J9".into());
        changed["terms"][key] = serde_json::Value::Array(arr);
        assert!(matches!(
            Certificate::from_json(&changed.to_string()),
            Err(CertFormatError::HashMismatch(_))
        ));
        let mut missing = v.clone();
        missing["start"] = serde_json::Value::String("00".into());
        assert!(matches!(Certificate::from_json(&missing.to_string()), Err(CertFormatError::MissingTerm(_))));
        assert!(Certificate::from_json(&text[..text.len() / 2]).is_err());
    }

    #[test]
    fn audit_catches_non_models() {
        let c = small();
        let proj = FiniteAlgebra::from_fn(
            2,
            ["J1", "J2", "J3"].iter().map(|&s| (s, 3, &(|a: &[u8]| a[2]) as &dyn Fn(&[u8]) -> u8)).collect(),
        )
        .unwrap();
        assert!(matches!(soundness_audit(&c, &[proj]), Err(AuditError::ModelNotInW { .. })));
    }
}
