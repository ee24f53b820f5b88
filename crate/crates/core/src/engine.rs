//! Symbolic construction of directed Jónsson and Gumm chains.
//!
//! Elements live in the two-generated free algebra of W, represented as
//! binary terms in `x` and `z` over `J1 .. J(2k+1)`. An [`Arrow`] is a path
//! of certificate steps between two such terms. Arrows of kind `E` use only
//! edges whose witnesses belong to the grammar `G`; arrows of kind `F` may
//! use arbitrary witnesses and are only ever placed under a middle argument.

use std::collections::HashMap;

use num_rational::Ratio;

use crate::cert::{j, j_symbol, Axiom, AxiomInstance, Certificate, ChainStep, Dir, Mode};
use crate::chain::{ChainKind, TermChain};
use crate::term::{left_power, Bindings, OpSymbol, Position, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArrowKind {
    E,
    F,
}

#[derive(Clone, Debug)]
pub struct Arrow {
    pub kind: ArrowKind,
    pub source: Term,
    pub target: Term,
    pub steps: Vec<ChainStep>,
}

impl Arrow {
    pub fn identity(t: &Term) -> Arrow {
        Arrow {
            kind: ArrowKind::E,
            source: t.clone(),
            target: t.clone(),
            steps: Vec::new(),
        }
    }

    pub fn then(mut self, next: Arrow) -> Arrow {
        assert!(
            self.target == next.source,
            "arrow composition mismatch: {} then {}",
            self.target,
            next.source
        );
        if next.kind == ArrowKind::F {
            self.kind = ArrowKind::F;
        }
        self.steps.extend(next.steps);
        self.target = next.target;
        self
    }

    pub fn edge_count(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, ChainStep::Edge(_))).count()
    }

    pub fn rewrite_count(&self) -> usize {
        self.steps.len() - self.edge_count()
    }

    /// Reverse of an edge-free arrow.
    fn reversed(&self) -> Arrow {
        let steps = self
            .steps
            .iter()
            .rev()
            .map(|s| match s {
                ChainStep::Rewrite(ai) => ChainStep::Rewrite(ai.reversed()),
                ChainStep::Edge(_) => panic!("cannot reverse an edge"),
            })
            .collect();
        Arrow {
            kind: self.kind,
            source: self.target.clone(),
            target: self.source.clone(),
            steps,
        }
    }
}

/// `n`-fence from `x`: `x -> b1 <- a1 -> b2 <- ... <- an -> b(n+1)`.
#[derive(Clone, Debug)]
pub struct Fence {
    /// `a[0] = x`, then the peaks `a1 .. an`.
    pub a: Vec<Term>,
    /// `b1 .. b(n+1)`.
    pub b: Vec<Term>,
    /// `right[i]: a[i] -> b[i]`.
    pub right: Vec<Arrow>,
    /// `left[i]: a[i+1] -> b[i]`.
    pub left: Vec<Arrow>,
}

impl Fence {
    pub fn size(&self) -> usize {
        self.a.len() - 1
    }

    pub fn end(&self) -> &Term {
        self.b.last().expect("nonempty fence")
    }
}

/// `l`-box built from a 1-fence `x -> b <- a -> d`.
#[derive(Clone, Debug)]
pub struct BoxShape {
    pub q: Vec<Term>,
    pub p: Vec<Term>,
    /// `q[i] -> q[i+1]`
    pub qq: Vec<Arrow>,
    /// `p[i] -> p[i+1]`
    pub pp: Vec<Arrow>,
    /// `q[i] ~> p[i]` (kind F)
    pub qp: Vec<Arrow>,
    /// `p[i] -> q[i+1]`
    pub pq: Vec<Arrow>,
    /// `q[l-1] -> b`
    pub qb: Arrow,
    /// `p[l-1] -> d(b,d)`
    pub p_end: Arrow,
    pub b: Term,
    pub d_end: Term,
}

#[derive(Clone, Copy, Debug)]
pub struct Engine {
    pub k: usize,
    /// When false, arrows carry only their edges. Edges do not depend on
    /// rewrites, so this measures chain lengths at a fraction of the memory.
    pub rewrites: bool,
}

fn hole() -> Term {
    Term::y()
}

impl Engine {
    pub fn new(k: usize) -> Engine {
        assert!(k >= 1, "k must be at least 1");
        Engine { k, rewrites: true }
    }

    pub fn edges_only(k: usize) -> Engine {
        Engine {
            rewrites: false,
            ..Engine::new(k)
        }
    }

    fn keep(&self, steps: Vec<ChainStep>) -> Vec<ChainStep> {
        if self.rewrites {
            return steps;
        }
        steps.into_iter().filter(|s| matches!(s, ChainStep::Edge(_))).collect()
    }

    /// `J(x,z) = J(2k+1)(x,z,z)`.
    pub fn jterm(&self) -> Term {
        j(2 * self.k + 1, &Term::x(), &Term::z(), &Term::z())
    }

    fn rw(&self, axiom: Axiom, dir: Dir, pos: Position, x: &Term, y: &Term) -> ChainStep {
        ChainStep::Rewrite(AxiomInstance::at_root(axiom, dir, pos, x, y))
    }

    /// Steps taking `Ji(v,v,v)` at `pos` to `v`.
    fn idempotence(&self, i: usize, v: &Term, pos: &[usize], out: &mut Vec<ChainStep>) {
        if !self.rewrites {
            return;
        }
        let mut i = i;
        loop {
            if i == 1 {
                out.push(self.rw(Axiom::J1Unit, Dir::Lr, pos.to_vec(), v, v));
                return;
            }
            let ax = if i % 2 == 0 {
                Axiom::OddEven(i / 2 - 1)
            } else {
                Axiom::EvenOdd(i / 2)
            };
            out.push(self.rw(ax, Dir::Rl, pos.to_vec(), v, v));
            i -= 1;
        }
    }

    fn jindex(t: &Term) -> usize {
        crate::cert::j_index(t.op().expect("application")).expect("J symbol")
    }

    /// `t(u,u) -> u` by rewrites only.
    pub fn collapse(&self, t: &Term, u: &Term) -> Arrow {
        let mut steps = Vec::new();
        self.collapse_rec(t, u, &mut Vec::new(), &mut steps);
        Arrow {
            kind: ArrowKind::E,
            source: t.at2(u, u),
            target: u.clone(),
            steps,
        }
    }

    fn collapse_rec(&self, t: &Term, u: &Term, pos: &mut Vec<usize>, out: &mut Vec<ChainStep>) {
        if t.is_var() {
            return;
        }
        let args: Vec<Term> = t.args().iter().map(|c| c.at2(u, u)).collect();
        let i = Self::jindex(t);
        if args[1] == args[0] && args[2] == args[0] {
            self.idempotence(i, &args[0], pos, out);
            self.collapse_rec(&t.args()[0], u, pos, out);
        } else {
            for (c, child) in t.args().iter().enumerate() {
                pos.push(c);
                self.collapse_rec(child, u, pos, out);
                pos.pop();
            }
            self.idempotence(i, u, pos, out);
        }
    }

    /// `u -> t(u,u)`.
    pub fn expand(&self, t: &Term, u: &Term) -> Arrow {
        self.collapse(t, u).reversed()
    }

    /// `ctx[H:=source] -> ctx[H:=target]`, where the hole `H` is the
    /// variable `y` of `ctx`.
    pub fn lift(&self, ctx: &Term, p: &Arrow) -> Arrow {
        let fill = |t: &Term| ctx.at(&Term::x(), t, &Term::z());
        let mut composed: HashMap<usize, Term> = HashMap::new();
        let steps = p
            .steps
            .iter()
            .map(|s| match s {
                ChainStep::Rewrite(ai) => {
                    let c = composed.entry(ai.ctx.addr()).or_insert_with(|| fill(&ai.ctx)).clone();
                    ChainStep::Rewrite(AxiomInstance { ctx: c, ..ai.clone() })
                }
                ChainStep::Edge(w) => ChainStep::Edge(fill(w)),
            })
            .collect();
        Arrow {
            kind: p.kind,
            source: fill(&p.source),
            target: fill(&p.target),
            steps,
        }
    }

    /// The image of `p` under the endomorphism `x -> a, z -> b`, given an
    /// F-arrow `fab: a ~> b`.
    pub fn apply_special_endomorphism(&self, p: &Arrow, a: &Term, b: &Term, fab: &Arrow) -> Arrow {
        assert!(fab.source == *a && fab.target == *b, "endomorphism needs a ~> b");
        let mut out = Arrow {
            kind: p.kind,
            source: p.source.at2(a, b),
            target: p.source.at2(a, b),
            steps: Vec::new(),
        };
        let mut ctxs: HashMap<usize, Term> = HashMap::new();
        for s in &p.steps {
            match s {
                ChainStep::Rewrite(ai) => {
                    let ctx = ctxs
                        .entry(ai.ctx.addr())
                        .or_insert_with(|| ai.ctx.at(a, &hole(), b))
                        .clone();
                    out.steps.push(ChainStep::Rewrite(AxiomInstance {
                        ctx,
                        x: ai.x.at2(a, b),
                        y: ai.y.at2(a, b),
                        ..ai.clone()
                    }));
                }
                ChainStep::Edge(w) => {
                    if !w.contains_var(Var::Y) {
                        continue;
                    }
                    let ctx = w.at(a, &hole(), b);
                    let lifted = self.lift(&ctx, fab);
                    out.steps.extend(lifted.steps);
                }
            }
        }
        out.target = p.target.at2(a, b);
        out
    }

    /// `x ~> c` through `x -> c(x,x)` and the F-edge `c(x,y)`.
    pub fn f_arrow_to(&self, c: &Term) -> Arrow {
        let w = c.at2(&Term::x(), &Term::y());
        let mut p = self.expand(c, &Term::x());
        p.kind = ArrowKind::F;
        p.steps.push(ChainStep::Edge(w));
        p.target = c.clone();
        p
    }

    /// `a(x,a) -> b(x,b)` from `a -> b`.
    pub fn power_lift(&self, p: &Arrow) -> Arrow {
        let (a, b) = (&p.source, &p.target);
        let first = self.lift(&a.at2(&Term::x(), &hole()), p);
        let second = self.apply_special_endomorphism(p, &Term::x(), b, &self.f_arrow_to(b));
        first.then(second)
    }

    pub fn base_fence(&self) -> Fence {
        let k = self.k;
        let (x, y, z) = (Term::x(), Term::y(), Term::z());
        let edge = |i: usize| ChainStep::Edge(j(i, &x, &y, &z));
        let b: Vec<Term> = (1..=k + 1).map(|l| j(2 * l - 1, &x, &z, &z)).collect();
        let mut a = vec![x.clone()];
        a.extend((1..=k).map(|l| j(2 * l, &x, &x, &z)));
        let mut right = vec![Arrow {
            kind: ArrowKind::E,
            source: x.clone(),
            target: b[0].clone(),
            steps: self.keep(vec![self.rw(Axiom::J1Unit, Dir::Rl, vec![], &x, &z), edge(1)]),
        }];
        let mut left = Vec::new();
        for l in 1..=k {
            left.push(Arrow {
                kind: ArrowKind::E,
                source: a[l].clone(),
                target: b[l - 1].clone(),
                steps: self.keep(vec![edge(2 * l), self.rw(Axiom::OddEven(l - 1), Dir::Rl, vec![], &x, &z)]),
            });
            right.push(Arrow {
                kind: ArrowKind::E,
                source: a[l].clone(),
                target: b[l].clone(),
                steps: self.keep(vec![self.rw(Axiom::EvenOdd(l), Dir::Lr, vec![], &x, &z), edge(2 * l + 1)]),
            });
        }
        Fence { a, b, right, left }
    }

    /// Box of size `l` from the 1-fence `xb: x -> b`, `ab: a -> b`,
    /// `ad: a -> d`.
    pub fn fence_to_box(&self, xb: &Arrow, ab: &Arrow, ad: &Arrow, l: usize) -> BoxShape {
        assert!(l >= 2, "box size must be at least 2");
        let (x, h) = (Term::x(), hole());
        let (b, a, d) = (&xb.target, &ab.source, &ad.target);
        assert!(xb.source == x && ab.target == *b && ad.source == *a, "malformed fence");
        let b_ha = b.at2(&h, a);
        let mut q = vec![x.clone()];
        let mut p = vec![a.at2(&x, a)];
        let mut qa = vec![self.f_arrow_to(a)];
        let mut qq = vec![self.apply_special_endomorphism(xb, &x, a, &qa[0])];
        let mut qb = xb.clone();
        let collapse_ba = self.collapse(b, a);
        let collapse_bb = self.collapse(b, b);
        let lift_ab = self.lift(&b.at2(b, &h), ab);
        for i in 1..l {
            let qi = b.at2(&q[i - 1], a);
            p.push(a.at2(&qi, a));
            q.push(qi);
            qa.push(self.lift(&b_ha, &qa[i - 1]).then(collapse_ba.clone()));
            if i + 1 < l {
                qq.push(self.lift(&b_ha, &qq[i - 1]));
            }
            qb = self.lift(&b_ha, &qb).then(lift_ab.clone()).then(collapse_bb.clone());
        }
        let a_ha = a.at2(&h, a);
        let pp = qq.iter().map(|s| self.lift(&a_ha, s)).collect();
        let pq = (0..l - 1)
            .map(|i| self.apply_special_endomorphism(ab, &q[i], a, &qa[i]))
            .collect();
        let qp = (0..l)
            .map(|i| {
                let mut s = self.expand(a, &q[i]).then(self.lift(&a.at2(&q[i], &h), &qa[i]));
                s.kind = ArrowKind::F;
                s
            })
            .collect();
        let last = l - 1;
        let p_end = self
            .apply_special_endomorphism(ad, &q[last], a, &qa[last])
            .then(self.lift(&d.at2(&h, a), &qb))
            .then(self.lift(&d.at2(b, &h), ad));
        BoxShape {
            d_end: d.at2(b, d),
            b: b.clone(),
            q,
            p,
            qq,
            pp,
            qp,
            pq,
            qb,
            p_end,
        }
    }

    /// Chain from `x` to `J(2k+1)(b, d', d')` through a `(k+1)`-box ending
    /// at `b` and `d'`.
    pub fn box_to_chain(&self, bx: &BoxShape) -> Arrow {
        let k = self.k;
        assert_eq!(bx.q.len(), k + 1, "box size must be k+1");
        let (x, h) = (Term::x(), hole());
        let (q, p) = (&bx.q, &bx.p);
        let mut path = Arrow {
            kind: ArrowKind::E,
            source: x.clone(),
            target: j(1, &x, &x, &p[0]),
            steps: self.keep(vec![self.rw(Axiom::J1Unit, Dir::Rl, vec![], &x, &p[0])]),
        };
        let step = |path: Arrow, ctx: Term, arrow: &Arrow| -> Arrow {
            let lifted = self.lift(&ctx, arrow);
            path.then(lifted)
        };
        let rewrite = |path: Arrow, axiom: Axiom, sx: &Term, sy: &Term| -> Arrow {
            let ai = AxiomInstance::at_root(axiom, Dir::Lr, vec![], sx, sy);
            let (_, target) = ai.source_target(k);
            let mut path = path;
            if self.rewrites {
                path.steps.push(ChainStep::Rewrite(ai));
            }
            path.target = target;
            path
        };
        for i in 0..k {
            let ji = 2 * i + 1;
            path = step(path, j(ji, &h, &q[i], &p[i]), &bx.qq[i]);
            path = step(path, j(ji, &q[i + 1], &h, &p[i]), &bx.qp[i]);
            path = rewrite(path, Axiom::OddEven(i), &q[i + 1], &p[i]);
            path = step(path, j(ji + 1, &q[i + 1], &h, &p[i]), &bx.pq[i]);
            path = step(path, j(ji + 1, &q[i + 1], &q[i + 1], &h), &bx.pp[i]);
            path = rewrite(path, Axiom::EvenOdd(i + 1), &q[i + 1], &p[i + 1]);
        }
        let jl = 2 * k + 1;
        path = step(path, j(jl, &q[k], &h, &p[k]), &bx.qp[k]);
        path = step(path, j(jl, &h, &p[k], &p[k]), &bx.qb);
        path = step(path, j(jl, &bx.b, &h, &h), &bx.p_end);
        path.kind = ArrowKind::E;
        path
    }

    /// `x -> J(b, d(b,d))` from the leading 1-fence of `f`.
    fn lead_chain(&self, f: &Fence) -> Arrow {
        let bx = self.fence_to_box(&f.right[0], &f.left[0], &f.right[1], self.k + 1);
        self.box_to_chain(&bx)
    }

    /// One induction step: a fence of size `n` to a fence of size `n-1`.
    pub fn shrink_fence(&self, f: &Fence) -> Fence {
        let n = f.size();
        assert!(n >= 2, "cannot shrink a 1-fence");
        let (x, h) = (Term::x(), hole());
        let jt = self.jterm();
        let jx = jt.at2(&x, &h);
        let sq = |t: &Term| t.at2(&x, t);
        let lead = self.lead_chain(f);
        let (b1, b2) = (&f.b[0], &f.b[1]);
        let mut a = vec![x.clone()];
        let mut b = vec![lead.target.clone()];
        let mut right = vec![lead];
        let mut left = Vec::new();
        for l in 1..n {
            a.push(jt.at2(&x, &sq(&f.a[l + 1])));
            b.push(jt.at2(&x, &sq(&f.b[l + 1])));
            let mut up_left = self.lift(&jx, &self.power_lift(&f.left[l]));
            if l == 1 {
                let ctx = jt.at2(&h, &b2.at2(&h, b2));
                up_left = up_left.then(self.lift(&ctx, &f.right[0]));
                debug_assert!(up_left.target == jt.at2(b1, &b2.at2(b1, b2)));
            }
            left.push(up_left);
            right.push(self.lift(&jx, &self.power_lift(&f.right[l + 1])));
        }
        Fence { a, b, right, left }
    }

    /// The E-chain from `x` to `J^(2^k)(b, J^(2^k - 1))`, and the `b` of the
    /// final 1-fence.
    pub fn build_directed_core(&self) -> (Arrow, Term) {
        let mut f = self.base_fence();
        while f.size() > 1 {
            f = self.shrink_fence(&f);
        }
        let chain = self.lead_chain(&f);
        let jt = self.jterm();
        let m = 1usize << self.k;
        let expected = left_power(&jt, m)
            .expect("binary")
            .at2(&f.b[0], &left_power(&jt, m - 1).expect("binary"));
        assert!(chain.target == expected, "core endpoint mismatch");
        (chain, f.b[0].clone())
    }

    /// Root rewrites `J(2k+1)(u,v,v) -> v` until no longer applicable.
    pub fn normalize(&self, t: &Term) -> (Term, Vec<ChainStep>) {
        let top = 2 * self.k + 1;
        let mut cur = t.clone();
        let mut steps = Vec::new();
        while !cur.is_var() && crate::cert::j_index(cur.op().expect("application")) == Some(top) {
            let args = cur.args();
            if args[1] != args[2] {
                break;
            }
            steps.push(self.rw(Axiom::JCollapse, Dir::Lr, vec![], &args[0], &args[1]));
            cur = args[1].clone();
        }
        (cur, steps)
    }
}

/// A directed chain built by the engine with its certificate.
#[derive(Clone, Debug)]
pub struct Directed {
    pub chain: TermChain,
    pub certificate: Certificate,
    /// Final fence `b` term, in `x` and `z`.
    pub b: Term,
}

impl Directed {
    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }
}

fn witnesses(steps: &[ChainStep]) -> Vec<Term> {
    steps
        .iter()
        .filter_map(|s| match s {
            ChainStep::Edge(w) => Some(w.clone()),
            ChainStep::Rewrite(_) => None,
        })
        .collect()
}

/// Weak directed Jónsson terms over `J1 .. J(2k+1)`. The certificate is in
/// full mode: it continues past the core endpoint with collapse rewrites
/// down to `z`.
pub fn direct_jonsson(k: usize) -> Directed {
    let e = Engine::new(k);
    let (core, b) = e.build_directed_core();
    let (end, tail) = e.normalize(&core.target);
    assert!(end == Term::z(), "endpoint does not normalize to z");
    let chain = TermChain::new(ChainKind::DJ, witnesses(&core.steps)).weak();
    let mut steps = core.steps;
    steps.extend(tail);
    Directed {
        chain,
        certificate: Certificate {
            k,
            mode: Mode::Full,
            start: Term::x(),
            steps,
            end,
        },
        b,
    }
}

/// The Gumm tail symbol.
pub fn gumm_symbol() -> OpSymbol {
    OpSymbol::new("P", 3).expect("valid symbol")
}

/// Weak directed Gumm terms `D1 .. Dm, Q` over `J1 .. J(2k+1)` and `P`.
/// The certificate is the weak-mode core chain.
pub fn direct_gumm(k: usize) -> Directed {
    let e = Engine::new(k);
    let (core, b) = e.build_directed_core();
    let p = gumm_symbol();
    let (x, y, z) = (Term::x(), Term::y(), Term::z());
    let bxy = b.at2(&x, &y);
    let mut q = Term::app(&p, vec![x.clone(), y.clone(), z.clone()]);
    let half = 1usize << k;
    for i in 2..2 * half {
        let first = if i < half { &x } else { &bxy };
        q = Term::app(&p, vec![first.clone(), q.at(&x, &y, &y), q]);
    }
    let chain = TermChain::with_tail(ChainKind::DG, witnesses(&core.steps), q).weak();
    Directed {
        chain,
        certificate: Certificate {
            k,
            mode: Mode::Weak,
            start: Term::x(),
            end: core.target,
            steps: core.steps,
        },
        b,
    }
}

/// Number of directed terms `direct_jonsson(k)` produces, computed without
/// materializing rewrites.
pub fn measure_chain_length(k: usize) -> usize {
    Engine::edges_only(k).build_directed_core().0.edge_count()
}

/// `(2k+1)(k+1)((k+1)^(k-2) - 1)/k`, exactly.
pub fn chain_length_formula(k: usize) -> Ratio<i128> {
    assert!(k >= 1);
    let k = k as i128;
    let base = Ratio::from_integer(k + 1).pow((k - 2) as i32);
    Ratio::from_integer((2 * k + 1) * (k + 1)) * (base - 1) / Ratio::from_integer(k)
}

/// `J1 = D1, J(2i) = D(i+1)(x,x,z), J(2i+1) = D(i+1)`; a directed Gumm
/// chain keeps its tail and becomes a Gumm chain.
pub fn convert_dj_to_simultaneous(d: &TermChain) -> TermChain {
    assert!(matches!(d.kind, ChainKind::DJ | ChainKind::DG), "expected a directed chain");
    let (x, z) = (Term::x(), Term::z());
    let mut terms = vec![d.terms[0].clone()];
    for t in &d.terms[1..] {
        terms.push(t.at(&x, &x, &z));
        terms.push(t.clone());
    }
    TermChain {
        kind: if d.kind == ChainKind::DJ { ChainKind::J } else { ChainKind::G },
        terms,
        tail: d.tail.clone(),
        weak: d.weak,
    }
}

/// `J1 = x, J(2i) = Pi, J(2i+1) = P(i+1)(x,z,z), J(2n+1) = z`.
pub fn convert_pixley_to_jonsson(p: &TermChain) -> TermChain {
    assert_eq!(p.kind, ChainKind::P, "expected a Pixley chain");
    let (x, z) = (Term::x(), Term::z());
    let n = p.terms.len();
    let mut terms = vec![x.clone()];
    for i in 0..n {
        terms.push(p.terms[i].clone());
        terms.push(if i + 1 < n {
            p.terms[i + 1].at(&x, &z, &z)
        } else {
            z.clone()
        });
    }
    TermChain {
        kind: ChainKind::J,
        terms,
        tail: None,
        weak: p.weak,
    }
}

pub fn convert_pixley_to_hm(p: &TermChain) -> TermChain {
    assert_eq!(p.kind, ChainKind::P, "expected a Pixley chain");
    TermChain {
        kind: ChainKind::HM,
        terms: p.terms.clone(),
        tail: None,
        weak: true,
    }
}

/// `Qj = s(x,..,x,y,z,..,z)` with `y` in place `n-j+1`, for an `n`-ary term
/// `s` in the positional variables of arity `n`.
pub fn convert_absorption_to_dj(s: &Term, n: usize) -> TermChain {
    assert!(n >= 2, "absorbing term needs arity at least 2");
    let vars = Var::positional(n);
    let terms = (1..=n)
        .map(|jx| {
            let slot = n - jx;
            let b: Bindings = vars
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let t = match i.cmp(&slot) {
                        std::cmp::Ordering::Less => Term::x(),
                        std::cmp::Ordering::Equal => Term::y(),
                        std::cmp::Ordering::Greater => Term::z(),
                    };
                    (*v, t)
                })
                .collect();
            s.replace_vars(&b)
        })
        .collect();
    TermChain::new(ChainKind::DJ, terms).weak()
}

/// `J1 .. J(2k+1)` as the interpretation of a weak Jónsson chain of symbols.
pub fn symbolic_jonsson_chain(k: usize) -> TermChain {
    let (x, y, z) = (Term::x(), Term::y(), Term::z());
    let terms = (1..=2 * k + 1).map(|i| j(i, &x, &y, &z)).collect();
    TermChain::new(ChainKind::J, terms)
}

pub fn jonsson_symbols(k: usize) -> Vec<OpSymbol> {
    (1..=2 * k + 1).map(j_symbol).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cert::{check_g_membership, replay};

    fn replays(a: &Arrow, k: usize) {
        let cert = Certificate {
            k,
            mode: Mode::Weak,
            start: a.source.clone(),
            steps: a.steps.clone(),
            end: a.target.clone(),
        };
        replay(&cert).unwrap();
    }

    #[test]
    fn base_fence_arrows_replay() {
        for k in 1..=3 {
            let f = Engine::new(k).base_fence();
            assert_eq!(f.size(), k);
            assert_eq!(*f.end(), Engine::new(k).jterm());
            for a in f.right.iter().chain(&f.left) {
                replays(a, k);
            }
        }
    }

    #[test]
    fn collapse_and_expand_replay() {
        let e = Engine::new(2);
        let (x, z) = (Term::x(), Term::z());
        let t = j(5, &j(2, &x, &z, &x), &x, &j(4, &z, &z, &x));
        let u = j(3, &x, &z, &z);
        replays(&e.collapse(&t, &u), 2);
        replays(&e.expand(&t, &u), 2);
    }

    #[test]
    fn idempotence_takes_i_steps() {
        let e = Engine::new(3);
        for i in 1..=7 {
            let t = j(i, &Term::x(), &Term::x(), &Term::z());
            let c = e.collapse(&t, &Term::x());
            assert_eq!(c.steps.len(), i);
        }
    }

    #[test]
    fn box_k1_shapes() {
        let e = Engine::new(1);
        let f = e.base_fence();
        let bx = e.fence_to_box(&f.right[0], &f.left[0], &f.right[1], 2);
        let (x, a, b) = (Term::x(), f.a[1].clone(), f.b[0].clone());
        assert_eq!(bx.q[1], b.at2(&x, &a));
        assert_eq!(bx.p[1], a.at2(&b.at2(&x, &a), &a));
        for arrow in bx.qq.iter().chain(&bx.pp).chain(&bx.pq).chain([&bx.qb, &bx.p_end]) {
            assert_eq!(arrow.kind, ArrowKind::E);
            replays(arrow, 1);
        }
    }

    #[test]
    fn core_replays_small_k() {
        for k in 1..=2 {
            let d = direct_jonsson(k);
            replay(&d.certificate).unwrap();
            for w in &d.chain.terms {
                check_g_membership(w, k).unwrap();
            }
        }
    }

    #[test]
    fn edges_only_matches_full_build() {
        for k in 1..=2 {
            let full = direct_jonsson(k);
            assert_eq!(measure_chain_length(k), full.len());
            let (core, _) = Engine::edges_only(k).build_directed_core();
            assert_eq!(core.rewrite_count(), 0);
            let w: Vec<Term> = core.steps.iter().map(|s| match s {
                ChainStep::Edge(w) => w.clone(),
                ChainStep::Rewrite(_) => unreachable!(),
            }).collect();
            assert_eq!(w, full.chain.terms);
        }
    }

    #[test]
    fn formula_values() {
        assert_eq!(chain_length_formula(1), Ratio::from_integer(-3));
        assert_eq!(chain_length_formula(2), Ratio::from_integer(0));
        assert_eq!(chain_length_formula(3), Ratio::from_integer(28));
        assert_eq!(chain_length_formula(4), Ratio::from_integer(270));
    }

    #[test]
    fn converter_shapes() {
        let (x, y, z) = (Term::x(), Term::y(), Term::z());
        let d2 = TermChain::new(ChainKind::DJ, vec![j(1, &x, &y, &z), j(2, &x, &y, &z)]);
        let jc = convert_dj_to_simultaneous(&d2);
        assert_eq!(jc.terms, vec![j(1, &x, &y, &z), j(2, &x, &x, &z), j(2, &x, &y, &z)]);
        let p = TermChain::new(ChainKind::P, vec![j(1, &x, &y, &z)]);
        assert_eq!(convert_pixley_to_jonsson(&p).terms, vec![x.clone(), j(1, &x, &y, &z), z.clone()]);
        let s = j(1, &x, &y, &z);
        let q = convert_absorption_to_dj(&s, 3);
        assert_eq!(q.terms, vec![j(1, &x, &x, &y), j(1, &x, &y, &z), j(1, &y, &z, &z)]);
    }
}
