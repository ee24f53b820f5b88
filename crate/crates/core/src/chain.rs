//! Typed term chains and their defining equations.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, Counterexample, FiniteAlgebra, IdentityCheck};
use crate::term::{parse_term, Identity, OpSymbol, ParseError, Signature, Term, Var};

/// Terms whose tree size exceeds this are written in the shared encoding.
pub const PRINT_LIMIT: u64 = 50_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChainKind {
    /// Jónsson terms `J1 .. J(2n+1)`.
    J,
    /// Directed Jónsson terms `D1 .. Dn`.
    DJ,
    /// Gumm terms: a Jónsson-style part followed by a tail `P`.
    G,
    /// Directed Gumm terms `D1 .. Dn` with tail `Q`.
    DG,
    /// Pixley terms `P1 .. Pn`.
    P,
    /// Hagemann-Mitschke terms `H1 .. Hk`.
    HM,
}

impl ChainKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChainKind::J => "j",
            ChainKind::DJ => "dj",
            ChainKind::G => "g",
            ChainKind::DG => "dg",
            ChainKind::P => "p",
            ChainKind::HM => "hm",
        }
    }

    pub fn has_tail(&self) -> bool {
        matches!(self, ChainKind::G | ChainKind::DG)
    }

    fn prefix(&self) -> &'static str {
        match self {
            ChainKind::J | ChainKind::G => "J",
            ChainKind::DJ | ChainKind::DG => "D",
            ChainKind::P => "P",
            ChainKind::HM => "H",
        }
    }
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChainKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "j" => ChainKind::J,
            "dj" => ChainKind::DJ,
            "g" => ChainKind::G,
            "dg" => ChainKind::DG,
            "p" => ChainKind::P,
            "hm" => ChainKind::HM,
            _ => return Err(format!("unknown chain kind {s}")),
        })
    }
}

/// Ternary terms in `x, y, z` forming a chain of the given kind. A weak
/// chain omits the equations `t(x,y,x) = x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermChain {
    pub kind: ChainKind,
    pub terms: Vec<Term>,
    pub tail: Option<Term>,
    pub weak: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChainVerdict {
    Holds,
    Fails {
        equation: String,
        counterexample: Counterexample,
    },
    Malformed(String),
}

impl ChainVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ChainVerdict::Holds)
    }
}

impl fmt::Display for ChainVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainVerdict::Holds => f.write_str("holds"),
            ChainVerdict::Fails {
                equation,
                counterexample,
            } => write!(f, "fails {equation} at {counterexample}"),
            ChainVerdict::Malformed(m) => write!(f, "malformed chain: {m}"),
        }
    }
}

impl TermChain {
    pub fn new(kind: ChainKind, terms: Vec<Term>) -> TermChain {
        TermChain {
            kind,
            terms,
            tail: None,
            weak: false,
        }
    }

    pub fn with_tail(kind: ChainKind, terms: Vec<Term>, tail: Term) -> TermChain {
        TermChain {
            kind,
            terms,
            tail: Some(tail),
            weak: false,
        }
    }

    pub fn weak(mut self) -> TermChain {
        self.weak = true;
        self
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn shape_error(&self) -> Option<String> {
        if self.terms.is_empty() {
            return Some("no terms".into());
        }
        if matches!(self.kind, ChainKind::J | ChainKind::G) && self.terms.len() % 2 == 0 {
            return Some(format!("{} chain needs an odd number of terms, got {}", self.kind, self.terms.len()));
        }
        if self.kind.has_tail() != self.tail.is_some() {
            return Some(if self.kind.has_tail() {
                format!("{} chain needs a tail term", self.kind)
            } else {
                format!("{} chain has no tail term", self.kind)
            });
        }
        None
    }

    /// The full equation schema, labelled, in variables `x` and `y`.
    pub fn equations(&self) -> Vec<(String, Identity)> {
        let (x, y) = (Term::x(), Term::y());
        let t = &self.terms;
        let n = t.len();
        let p = self.kind.prefix();
        let xxy = |s: &Term| s.at(&x, &x, &y);
        let xyy = |s: &Term| s.at(&x, &y, &y);
        let mut out: Vec<(String, Identity)> = Vec::new();
        let mut eq = |label: String, l: Term, r: Term| out.push((label, Identity::new(l, r)));
        let tail_name = if self.kind == ChainKind::G { "P" } else { "Q" };
        match self.kind {
            ChainKind::J | ChainKind::G => {
                eq(format!("{p}1(x,x,y)=x"), xxy(&t[0]), x.clone());
                for i in 0..n / 2 {
                    eq(format!("{p}{}(x,y,y)={p}{}(x,y,y)", 2 * i + 1, 2 * i + 2), xyy(&t[2 * i]), xyy(&t[2 * i + 1]));
                    eq(format!("{p}{}(x,x,y)={p}{}(x,x,y)", 2 * i + 2, 2 * i + 3), xxy(&t[2 * i + 1]), xxy(&t[2 * i + 2]));
                }
            }
            ChainKind::DJ | ChainKind::DG => {
                eq(format!("{p}1(x,x,y)=x"), xxy(&t[0]), x.clone());
                for i in 0..n - 1 {
                    eq(format!("{p}{}(x,y,y)={p}{}(x,x,y)", i + 1, i + 2), xyy(&t[i]), xxy(&t[i + 1]));
                }
            }
            ChainKind::P => {
                eq(format!("{p}1(x,y,y)=x"), xyy(&t[0]), x.clone());
                for i in 0..n - 1 {
                    eq(format!("{p}{}(x,x,y)={p}{}(x,y,y)", i + 1, i + 2), xxy(&t[i]), xyy(&t[i + 1]));
                }
                eq(format!("{p}{n}(x,x,y)=y"), xxy(&t[n - 1]), y.clone());
            }
            ChainKind::HM => {
                eq(format!("{p}1(x,y,y)=x"), xyy(&t[0]), x.clone());
                for i in 0..n - 1 {
                    eq(format!("{p}{}(x,x,y)={p}{}(x,y,y)", i + 1, i + 2), xxy(&t[i]), xyy(&t[i + 1]));
                }
                eq(format!("{p}{n}(x,x,y)=y"), xxy(&t[n - 1]), y.clone());
            }
        }
        match (self.kind, &self.tail) {
            (ChainKind::J | ChainKind::DJ, _) => eq(format!("{p}{n}(x,y,y)=y"), xyy(&t[n - 1]), y.clone()),
            (ChainKind::G | ChainKind::DG, Some(q)) => {
                eq(format!("{p}{n}(x,y,y)={tail_name}(x,y,y)"), xyy(&t[n - 1]), xyy(q));
                eq(format!("{tail_name}(x,x,y)=y"), xxy(q), y.clone());
            }
            _ => {}
        }
        if !self.weak && self.kind != ChainKind::HM {
            for (i, s) in t.iter().enumerate() {
                eq(format!("{p}{}(x,y,x)=x", i + 1), s.at(&x, &y, &x), x.clone());
            }
        }
        out
    }
}

/// On-disk form of a chain. Terms are S-expressions, or indices into `dag`
/// when they are too large to print.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainFile {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<String>,
    #[serde(default)]
    pub weak: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dag: Option<DagFile>,
}

/// Shared term encoding: each node is `{"var": name}` or `[op, [children]]`,
/// children listed before their parents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagFile {
    pub nodes: Vec<DagNode>,
    pub terms: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DagNode {
    Var { var: String },
    App(String, Vec<usize>),
}

#[derive(Debug, Error)]
pub enum ChainFormatError {
    #[error("malformed chain file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Kind(String),
    #[error("term {index}: {error}")]
    Term { index: usize, error: ParseError },
    #[error("bad node {0}")]
    Node(usize),
    #[error("{0}")]
    Shape(String),
}

struct DagWriter {
    nodes: Vec<DagNode>,
    seen: HashMap<usize, usize>,
}

impl DagWriter {
    fn add(&mut self, t: &Term) -> usize {
        if let Some(&i) = self.seen.get(&t.addr()) {
            return i;
        }
        let node = match t.as_var() {
            Some(v) => DagNode::Var { var: v.name() },
            None => {
                let kids = t.args().iter().map(|a| self.add(a)).collect();
                DagNode::App(t.op().expect("application").name().to_string(), kids)
            }
        };
        self.nodes.push(node);
        let i = self.nodes.len() - 1;
        self.seen.insert(t.addr(), i);
        i
    }
}

fn read_dag(dag: &DagFile) -> Result<Vec<Term>, ChainFormatError> {
    let mut built: Vec<Term> = Vec::with_capacity(dag.nodes.len());
    for (i, node) in dag.nodes.iter().enumerate() {
        let t = match node {
            DagNode::Var { var } => Term::var(Var::parse(var).ok_or(ChainFormatError::Node(i))?),
            DagNode::App(op, kids) => {
                let sym = OpSymbol::new(op, kids.len()).map_err(|_| ChainFormatError::Node(i))?;
                let args = kids
                    .iter()
                    .map(|&k| built.get(k).cloned().ok_or(ChainFormatError::Node(i)))
                    .collect::<Result<Vec<_>, _>>()?;
                Term::app(&sym, args)
            }
        };
        built.push(t);
    }
    Ok(built)
}

impl TermChain {
    pub fn to_file(&self) -> ChainFile {
        let all = self.terms.iter().chain(self.tail.iter());
        let large = all.clone().any(|t| t.size() > PRINT_LIMIT);
        let mut file = ChainFile {
            kind: self.kind.name().to_string(),
            terms: Vec::new(),
            tail: None,
            weak: self.weak,
            dag: None,
        };
        if large {
            let mut w = DagWriter {
                nodes: Vec::new(),
                seen: HashMap::new(),
            };
            let terms = self.terms.iter().map(|t| w.add(t)).collect();
            let tail = self.tail.as_ref().map(|t| w.add(t));
            file.dag = Some(DagFile {
                nodes: w.nodes,
                terms,
                tail,
            });
        } else {
            file.terms = self.terms.iter().map(|t| t.to_sexp()).collect();
            file.tail = self.tail.as_ref().map(|t| t.to_sexp());
        }
        file
    }

    pub fn from_file(file: &ChainFile) -> Result<TermChain, ChainFormatError> {
        let kind: ChainKind = file.kind.parse().map_err(ChainFormatError::Kind)?;
        let (terms, tail) = match &file.dag {
            Some(dag) => {
                if !file.terms.is_empty() || file.tail.is_some() {
                    return Err(ChainFormatError::Shape("both printed and shared terms given".into()));
                }
                let built = read_dag(dag)?;
                let get = |i: usize| built.get(i).cloned().ok_or(ChainFormatError::Node(i));
                let terms = dag.terms.iter().map(|&i| get(i)).collect::<Result<Vec<_>, _>>()?;
                (terms, dag.tail.map(get).transpose()?)
            }
            None => {
                let mut texts: Vec<&str> = file.terms.iter().map(|s| s.as_str()).collect();
                texts.extend(file.tail.as_deref());
                let sig = Signature::infer(&texts).map_err(|error| ChainFormatError::Term { index: 0, error })?;
                let mut parsed = texts
                    .iter()
                    .enumerate()
                    .map(|(index, s)| parse_term(s, &sig).map_err(|error| ChainFormatError::Term { index, error }))
                    .collect::<Result<Vec<_>, _>>()?;
                let tail = file.tail.as_ref().map(|_| parsed.pop().expect("tail parsed"));
                (parsed, tail)
            }
        };
        Ok(TermChain {
            kind,
            terms,
            tail,
            weak: file.weak,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<TermChain, ChainFormatError> {
        TermChain::from_file(&serde_json::from_str(text)?)
    }
}

/// Check every equation of the chain on `alg`, whose operations are
/// extended by the symbol definitions in `interpretation`.
pub fn verify_chain(
    alg: &FiniteAlgebra,
    interpretation: &[(OpSymbol, Term)],
    chain: &TermChain,
) -> Result<ChainVerdict, AlgebraError> {
    if let Some(m) = chain.shape_error() {
        return Ok(ChainVerdict::Malformed(m));
    }
    let owned;
    let model = if interpretation.is_empty() {
        alg
    } else {
        owned = alg.extend(interpretation)?;
        &owned
    };
    for (label, id) in chain.equations() {
        if let IdentityCheck::Fails(counterexample) = model.check_identity(&id)? {
            return Ok(ChainVerdict::Fails {
                equation: label,
                counterexample,
            });
        }
    }
    Ok(ChainVerdict::Holds)
}
