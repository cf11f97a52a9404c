//! Core terms in locally nameless form.
//!
//! All three binder sorts share one de Bruijn index space. Free variables are
//! [`Name`]s. A [`Bind`] records the sort and display hint of each variable it
//! binds; the innermost binder has index 0.

use std::collections::{HashMap, HashSet};
use std::convert::Infallible;
use std::sync::Arc;

use thiserror::Error;

use crate::interval::{Constraint, Dim, Name, Sort, Var};

pub type Tm = Arc<Term>;

/// Byte range in a source file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub start: u32,
    pub end: u32,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start: start as u32, end: end as u32 }
    }

    pub fn join(self, other: Span) -> Span {
        Span { start: self.start.min(other.start), end: self.end.max(other.end) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binder {
    pub sort: Sort,
    pub hint: Arc<str>,
}

/// A body under one or more binders.
#[derive(Clone, Debug)]
pub struct Bind {
    pub binders: Arc<[Binder]>,
    pub body: Tm,
}

/// What a bound variable is instantiated with.
#[derive(Clone, Debug)]
pub enum Inst {
    Term(Tm),
    Dim(Dim),
}

#[derive(Clone, Debug)]
pub enum Arg {
    Term(Tm),
    Dim(Dim),
}

#[derive(Clone, Debug)]
pub struct Tube {
    pub constraint: Constraint,
    pub line: Bind,
}

pub type System = Vec<Tube>;

#[derive(Clone, Debug)]
pub struct Extent {
    pub index: Dim,
    pub arg: Tm,
    /// `x. A`
    pub dom: Bind,
    /// `x. a. B`
    pub cod: Bind,
    /// `a0. N0`
    pub end0: Bind,
    /// `a1. N1`
    pub end1: Bind,
    /// `a0. a1. aa. NN`
    pub line: Bind,
}

#[derive(Clone, Debug)]
pub enum Term {
    Var(Var),
    Def(Arc<str>, Vec<Arg>),
    Ann(Tm, Tm),
    Loc(Span, Tm),
    U,
    Pi(Tm, Bind),
    Lam(Bind),
    App(Tm, Tm),
    Sigma(Tm, Bind),
    Pair(Tm, Tm),
    Fst(Tm),
    Snd(Tm),
    Path(Bind, Tm, Tm),
    PLam(Bind),
    PApp(Tm, Dim),
    Bridge(Bind, Tm, Tm),
    BLam(Bind),
    BApp(Tm, Dim),
    /// `Gel r A0 A1 (a0.a1. R)`
    Gel(Dim, Tm, Tm, Bind),
    /// `gel r M0 M1 P`
    GelIn(Dim, Tm, Tm, Tm),
    /// `ungel (x. Q)`
    Ungel(Bind),
    Extent(Box<Extent>),
    Coe(Bind, Dim, Dim, Tm),
    HCom(Tm, Dim, Dim, Tm, System),
    Com(Bind, Dim, Dim, Tm, System),
    /// `V r A B I`
    V(Dim, Tm, Tm, Tm),
    /// `Vin r M N`
    Vin(Dim, Tm, Tm),
    /// `Vproj r P I`
    Vproj(Dim, Tm, Tm),
    Bool,
    True,
    False,
    If(Bind, Tm, Tm, Tm),
    Int,
    IntLit(i64),
    Add(Tm, Tm),
    Z2,
    ZIn(Tm),
    ZMod(Tm, Dim),
    /// `z2elim (a. C) M (n. Qin) (n.x. Qmod)`
    Z2Elim(Bind, Tm, Bind, Bind),
    Unit,
    Star,
    Empty,
    Abort(Tm, Tm),
}

/// A child of a term node, in left-to-right order.
pub enum Part<'a> {
    Term(&'a Tm),
    Dim(&'a Dim),
    Bind(&'a Bind),
    System(&'a System),
}

/// Rebuilds a node from mapped children.
pub trait PartMap<E> {
    fn term(&mut self, t: &Tm) -> Result<Tm, E>;
    fn dim(&mut self, d: &Dim) -> Result<Dim, E>;
    fn bind(&mut self, b: &Bind) -> Result<Bind, E>;

    fn constraint(&mut self, c: &Constraint) -> Result<Constraint, E> {
        Ok(match c {
            Constraint::PathEq(r, s) => Constraint::PathEq(self.dim(r)?, self.dim(s)?),
            Constraint::BridgeEq(r, e) => Constraint::BridgeEq(self.dim(r)?, *e),
        })
    }

    fn system(&mut self, sys: &System) -> Result<System, E> {
        sys.iter()
            .map(|t| Ok(Tube { constraint: self.constraint(&t.constraint)?, line: self.bind(&t.line)? }))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("bridge variable `{0}` already occurs in the term")]
    DiagonalSubstitution(String),
}

pub fn mk(t: Term) -> Tm {
    Arc::new(t)
}

impl Term {
    pub fn var(x: &Name) -> Tm {
        mk(Term::Var(Var::Free(x.clone())))
    }

    pub fn app(f: Tm, a: Tm) -> Tm {
        mk(Term::App(f, a))
    }

    pub fn apps(f: Tm, args: impl IntoIterator<Item = Tm>) -> Tm {
        args.into_iter().fold(f, Term::app)
    }

    pub fn papp(p: Tm, r: Dim) -> Tm {
        mk(Term::PApp(p, r))
    }

    pub fn bapp(p: Tm, r: Dim) -> Tm {
        mk(Term::BApp(p, r))
    }

    pub fn fst(p: Tm) -> Tm {
        mk(Term::Fst(p))
    }

    pub fn snd(p: Tm) -> Tm {
        mk(Term::Snd(p))
    }

    pub fn pair(a: Tm, b: Tm) -> Tm {
        mk(Term::Pair(a, b))
    }

    pub fn lam(x: &Name, body: &Tm) -> Tm {
        mk(Term::Lam(Bind::close(&[(x.clone(), Sort::Term)], body)))
    }

    pub fn plam(x: &Name, body: &Tm) -> Tm {
        mk(Term::PLam(Bind::close(&[(x.clone(), Sort::Path)], body)))
    }

    pub fn blam(x: &Name, body: &Tm) -> Tm {
        mk(Term::BLam(Bind::close(&[(x.clone(), Sort::Bridge)], body)))
    }

    pub fn arrow(a: Tm, b: Tm) -> Tm {
        mk(Term::Pi(a, Bind::constant(&[Sort::Term], b)))
    }

    pub fn times(a: Tm, b: Tm) -> Tm {
        mk(Term::Sigma(a, Bind::constant(&[Sort::Term], b)))
    }

    pub fn path(a: Tm, m0: Tm, m1: Tm) -> Tm {
        mk(Term::Path(Bind::constant(&[Sort::Path], a), m0, m1))
    }

    pub fn bridge(a: Tm, m0: Tm, m1: Tm) -> Tm {
        mk(Term::Bridge(Bind::constant(&[Sort::Bridge], a), m0, m1))
    }

    pub fn def(name: &str, args: Vec<Arg>) -> Tm {
        mk(Term::Def(Arc::from(name), args))
    }

    /// Removes any source-location wrappers at the root.
    pub fn unloc(t: &Tm) -> &Tm {
        let mut t = t;
        while let Term::Loc(_, inner) = &**t {
            t = inner;
        }
        t
    }

    pub fn parts(&self) -> Vec<Part<'_>> {
        use Part as P;
        match self {
            Term::Var(_) | Term::U | Term::Bool | Term::True | Term::False | Term::Int | Term::IntLit(_) => vec![],
            Term::Z2 | Term::Unit | Term::Star | Term::Empty => vec![],
            Term::Def(_, args) => args
                .iter()
                .map(|a| match a {
                    Arg::Term(t) => P::Term(t),
                    Arg::Dim(d) => P::Dim(d),
                })
                .collect(),
            Term::Ann(a, b) | Term::App(a, b) | Term::Pair(a, b) | Term::Add(a, b) | Term::Abort(a, b) => {
                vec![P::Term(a), P::Term(b)]
            }
            Term::Loc(_, a) | Term::Fst(a) | Term::Snd(a) | Term::ZIn(a) => vec![P::Term(a)],
            Term::Pi(a, b) | Term::Sigma(a, b) => vec![P::Term(a), P::Bind(b)],
            Term::Lam(b) | Term::PLam(b) | Term::BLam(b) | Term::Ungel(b) => vec![P::Bind(b)],
            Term::Path(b, m0, m1) | Term::Bridge(b, m0, m1) => vec![P::Bind(b), P::Term(m0), P::Term(m1)],
            Term::PApp(m, r) | Term::BApp(m, r) | Term::ZMod(m, r) => vec![P::Term(m), P::Dim(r)],
            Term::Gel(r, a0, a1, rel) => vec![P::Dim(r), P::Term(a0), P::Term(a1), P::Bind(rel)],
            Term::GelIn(r, m0, m1, p) => vec![P::Dim(r), P::Term(m0), P::Term(m1), P::Term(p)],
            Term::Extent(e) => vec![
                P::Dim(&e.index),
                P::Term(&e.arg),
                P::Bind(&e.dom),
                P::Bind(&e.cod),
                P::Bind(&e.end0),
                P::Bind(&e.end1),
                P::Bind(&e.line),
            ],
            Term::Coe(l, r, s, m) => vec![P::Bind(l), P::Dim(r), P::Dim(s), P::Term(m)],
            Term::HCom(a, r, s, m, sys) => vec![P::Term(a), P::Dim(r), P::Dim(s), P::Term(m), P::System(sys)],
            Term::Com(l, r, s, m, sys) => vec![P::Bind(l), P::Dim(r), P::Dim(s), P::Term(m), P::System(sys)],
            Term::V(r, a, b, i) => vec![P::Dim(r), P::Term(a), P::Term(b), P::Term(i)],
            Term::Vin(r, m, n) | Term::Vproj(r, m, n) => vec![P::Dim(r), P::Term(m), P::Term(n)],
            Term::If(c, m, t, f) => vec![P::Bind(c), P::Term(m), P::Term(t), P::Term(f)],
            Term::Z2Elim(c, m, qi, qm) => vec![P::Bind(c), P::Term(m), P::Bind(qi), P::Bind(qm)],
        }
    }

    pub fn try_map_parts<E>(&self, f: &mut dyn PartMap<E>) -> Result<Term, E> {
        Ok(match self {
            Term::Var(_) | Term::U | Term::Bool | Term::True | Term::False | Term::Int | Term::IntLit(_) => {
                self.clone()
            }
            Term::Z2 | Term::Unit | Term::Star | Term::Empty => self.clone(),
            Term::Def(n, args) => Term::Def(
                n.clone(),
                args.iter()
                    .map(|a| match a {
                        Arg::Term(t) => f.term(t).map(Arg::Term),
                        Arg::Dim(d) => f.dim(d).map(Arg::Dim),
                    })
                    .collect::<Result<_, E>>()?,
            ),
            Term::Ann(a, b) => Term::Ann(f.term(a)?, f.term(b)?),
            Term::Loc(sp, a) => Term::Loc(*sp, f.term(a)?),
            Term::Pi(a, b) => Term::Pi(f.term(a)?, f.bind(b)?),
            Term::Lam(b) => Term::Lam(f.bind(b)?),
            Term::App(a, b) => Term::App(f.term(a)?, f.term(b)?),
            Term::Sigma(a, b) => Term::Sigma(f.term(a)?, f.bind(b)?),
            Term::Pair(a, b) => Term::Pair(f.term(a)?, f.term(b)?),
            Term::Fst(a) => Term::Fst(f.term(a)?),
            Term::Snd(a) => Term::Snd(f.term(a)?),
            Term::Path(b, m0, m1) => Term::Path(f.bind(b)?, f.term(m0)?, f.term(m1)?),
            Term::PLam(b) => Term::PLam(f.bind(b)?),
            Term::PApp(m, r) => Term::PApp(f.term(m)?, f.dim(r)?),
            Term::Bridge(b, m0, m1) => Term::Bridge(f.bind(b)?, f.term(m0)?, f.term(m1)?),
            Term::BLam(b) => Term::BLam(f.bind(b)?),
            Term::BApp(m, r) => Term::BApp(f.term(m)?, f.dim(r)?),
            Term::Gel(r, a0, a1, rel) => Term::Gel(f.dim(r)?, f.term(a0)?, f.term(a1)?, f.bind(rel)?),
            Term::GelIn(r, m0, m1, p) => Term::GelIn(f.dim(r)?, f.term(m0)?, f.term(m1)?, f.term(p)?),
            Term::Ungel(b) => Term::Ungel(f.bind(b)?),
            Term::Extent(e) => Term::Extent(Box::new(Extent {
                index: f.dim(&e.index)?,
                arg: f.term(&e.arg)?,
                dom: f.bind(&e.dom)?,
                cod: f.bind(&e.cod)?,
                end0: f.bind(&e.end0)?,
                end1: f.bind(&e.end1)?,
                line: f.bind(&e.line)?,
            })),
            Term::Coe(l, r, s, m) => Term::Coe(f.bind(l)?, f.dim(r)?, f.dim(s)?, f.term(m)?),
            Term::HCom(a, r, s, m, sys) => Term::HCom(f.term(a)?, f.dim(r)?, f.dim(s)?, f.term(m)?, f.system(sys)?),
            Term::Com(l, r, s, m, sys) => Term::Com(f.bind(l)?, f.dim(r)?, f.dim(s)?, f.term(m)?, f.system(sys)?),
            Term::V(r, a, b, i) => Term::V(f.dim(r)?, f.term(a)?, f.term(b)?, f.term(i)?),
            Term::Vin(r, m, n) => Term::Vin(f.dim(r)?, f.term(m)?, f.term(n)?),
            Term::Vproj(r, m, n) => Term::Vproj(f.dim(r)?, f.term(m)?, f.term(n)?),
            Term::If(c, m, t, e) => Term::If(f.bind(c)?, f.term(m)?, f.term(t)?, f.term(e)?),
            Term::Add(a, b) => Term::Add(f.term(a)?, f.term(b)?),
            Term::ZIn(a) => Term::ZIn(f.term(a)?),
            Term::ZMod(a, r) => Term::ZMod(f.term(a)?, f.dim(r)?),
            Term::Z2Elim(c, m, qi, qm) => Term::Z2Elim(f.bind(c)?, f.term(m)?, f.bind(qi)?, f.bind(qm)?),
            Term::Abort(c, m) => Term::Abort(f.term(c)?, f.term(m)?),
        })
    }

    pub fn map_parts(&self, f: &mut dyn PartMap<Infallible>) -> Term {
        match self.try_map_parts(f) {
            Ok(t) => t,
            Err(e) => match e {},
        }
    }

    /// Whether two nodes have the same constructor and the same non-child data.
    pub fn same_head(&self, other: &Term) -> bool {
        match (self, other) {
            (Term::Def(a, xs), Term::Def(b, ys)) => a == b && xs.len() == ys.len(),
            (Term::IntLit(a), Term::IntLit(b)) => a == b,
            (Term::Var(a), Term::Var(b)) => a == b,
            _ => std::mem::discriminant(self) == std::mem::discriminant(other),
        }
    }
}

/// Replaces variable occurrences.
trait VarFn {
    fn term(&mut self, v: &Var, depth: u32) -> Option<Tm>;
    fn dim(&mut self, v: &Var, depth: u32) -> Option<Dim>;
}

struct Walk<'a, F: VarFn> {
    depth: u32,
    f: &'a mut F,
}

impl<F: VarFn> PartMap<Infallible> for Walk<'_, F> {
    fn term(&mut self, t: &Tm) -> Result<Tm, Infallible> {
        Ok(walk(t, self.depth, self.f))
    }

    fn dim(&mut self, d: &Dim) -> Result<Dim, Infallible> {
        Ok(match d {
            Dim::Var(v) => self.f.dim(v, self.depth).unwrap_or_else(|| d.clone()),
            _ => d.clone(),
        })
    }

    fn bind(&mut self, b: &Bind) -> Result<Bind, Infallible> {
        let depth = self.depth + b.arity() as u32;
        Ok(Bind { binders: b.binders.clone(), body: walk(&b.body, depth, self.f) })
    }
}

fn walk<F: VarFn>(t: &Tm, depth: u32, f: &mut F) -> Tm {
    match &**t {
        Term::Var(v) => f.term(v, depth).unwrap_or_else(|| t.clone()),
        _ if t.parts().is_empty() => t.clone(),
        _ => mk(t.map_parts(&mut Walk { depth, f })),
    }
}

/// Visits every variable occurrence with the current binder depth.
pub fn visit_vars(t: &Tm, depth: u32, f: &mut dyn FnMut(&Var, Sort, u32)) {
    match &**t {
        Term::Var(v) => f(v, Sort::Term, depth),
        _ => {
            for p in t.parts() {
                visit_part(p, depth, f)
            }
        }
    }
}

fn visit_part(p: Part<'_>, depth: u32, f: &mut dyn FnMut(&Var, Sort, u32)) {
    match p {
        Part::Term(t) => visit_vars(t, depth, f),
        Part::Dim(Dim::Var(v)) => f(v, Sort::Path, depth),
        Part::Dim(_) => {}
        Part::Bind(b) => visit_vars(&b.body, depth + b.arity() as u32, f),
        Part::System(sys) => {
            for tube in sys {
                for d in tube.constraint.dims() {
                    if let Dim::Var(v) = d {
                        f(v, Sort::Path, depth)
                    }
                }
                visit_vars(&tube.line.body, depth + tube.line.arity() as u32, f)
            }
        }
    }
}

struct Open<'a> {
    args: &'a [Inst],
}

impl VarFn for Open<'_> {
    fn term(&mut self, v: &Var, depth: u32) -> Option<Tm> {
        match self.slot(v, depth)? {
            Inst::Term(t) => Some(t.clone()),
            Inst::Dim(_) => panic!("term variable instantiated with a dimension"),
        }
    }

    fn dim(&mut self, v: &Var, depth: u32) -> Option<Dim> {
        match self.slot(v, depth)? {
            Inst::Dim(d) => Some(d.clone()),
            Inst::Term(_) => panic!("dimension variable instantiated with a term"),
        }
    }
}

impl Open<'_> {
    fn slot(&self, v: &Var, depth: u32) -> Option<&Inst> {
        match v {
            Var::Bound(k) if *k >= depth && *k < depth + self.args.len() as u32 => {
                Some(&self.args[self.args.len() - 1 - (*k - depth) as usize])
            }
            _ => None,
        }
    }
}

struct Close<'a> {
    names: &'a [Name],
}

impl Close<'_> {
    fn index(&self, v: &Var, depth: u32) -> Option<Var> {
        match v {
            Var::Free(x) => {
                let i = self.names.iter().rposition(|n| n == x)?;
                Some(Var::Bound(depth + (self.names.len() - 1 - i) as u32))
            }
            Var::Bound(_) => None,
        }
    }
}

impl VarFn for Close<'_> {
    fn term(&mut self, v: &Var, depth: u32) -> Option<Tm> {
        self.index(v, depth).map(|v| mk(Term::Var(v)))
    }

    fn dim(&mut self, v: &Var, depth: u32) -> Option<Dim> {
        self.index(v, depth).map(Dim::Var)
    }
}

struct Subst<'a> {
    map: &'a HashMap<Name, Inst>,
}

impl VarFn for Subst<'_> {
    fn term(&mut self, v: &Var, _: u32) -> Option<Tm> {
        match v {
            Var::Free(x) => match self.map.get(x)? {
                Inst::Term(t) => Some(t.clone()),
                Inst::Dim(_) => None,
            },
            Var::Bound(_) => None,
        }
    }

    fn dim(&mut self, v: &Var, _: u32) -> Option<Dim> {
        match v {
            Var::Free(x) => match self.map.get(x)? {
                Inst::Dim(d) => Some(d.clone()),
                Inst::Term(_) => None,
            },
            Var::Bound(_) => None,
        }
    }
}

impl Bind {
    /// Binds `names` (outermost first) in `body`.
    pub fn close(names: &[(Name, Sort)], body: &Tm) -> Bind {
        let ns: Vec<Name> = names.iter().map(|(n, _)| n.clone()).collect();
        let binders = names.iter().map(|(n, s)| Binder { sort: *s, hint: Arc::from(n.hint()) }).collect();
        Bind { binders, body: walk(body, 0, &mut Close { names: &ns }) }
    }

    /// A binder whose variables do not occur in the body.
    pub fn constant(sorts: &[Sort], body: Tm) -> Bind {
        let binders = sorts.iter().map(|s| Binder { sort: *s, hint: Arc::from("_") }).collect();
        Bind { binders, body }
    }

    pub fn arity(&self) -> usize {
        self.binders.len()
    }

    pub fn sorts(&self) -> Vec<Sort> {
        self.binders.iter().map(|b| b.sort).collect()
    }

    pub fn open(&self, args: &[Inst]) -> Tm {
        assert_eq!(args.len(), self.arity(), "binder arity mismatch");
        walk(&self.body, 0, &mut Open { args })
    }

    pub fn open_dim(&self, r: &Dim) -> Tm {
        self.open(&[Inst::Dim(r.clone())])
    }

    pub fn open_term(&self, t: &Tm) -> Tm {
        self.open(&[Inst::Term(t.clone())])
    }

    pub fn open_terms(&self, ts: &[Tm]) -> Tm {
        let args: Vec<Inst> = ts.iter().map(|t| Inst::Term(t.clone())).collect();
        self.open(&args)
    }

    /// Fresh names for the binders, outermost first.
    pub fn fresh_names(&self) -> Vec<Name> {
        self.binders.iter().map(|b| Name::fresh(&b.hint)).collect()
    }

    /// Opens with fresh names.
    pub fn unbind(&self) -> (Vec<Name>, Tm) {
        let names = self.fresh_names();
        let args: Vec<Inst> = names
            .iter()
            .zip(self.binders.iter())
            .map(|(n, b)| match b.sort {
                Sort::Term => Inst::Term(Term::var(n)),
                _ => Inst::Dim(Dim::name(n)),
            })
            .collect();
        let body = self.open(&args);
        (names, body)
    }

    pub fn unbind1(&self) -> (Name, Tm) {
        let (mut ns, body) = self.unbind();
        (ns.remove(0), body)
    }

    /// Rebinds after transforming an opened body.
    pub fn rebind(&self, names: &[Name], body: &Tm) -> Bind {
        let pairs: Vec<(Name, Sort)> = names.iter().cloned().zip(self.sorts()).collect();
        let mut b = Bind::close(&pairs, body);
        b.binders = self.binders.clone();
        b
    }

    pub fn map_body(&self, f: impl FnOnce(&Tm) -> Tm) -> Bind {
        let (names, body) = self.unbind();
        self.rebind(&names, &f(&body))
    }

    /// Whether the variable bound at position `i` (outermost = 0) occurs.
    pub fn uses(&self, i: usize) -> bool {
        let target = (self.arity() - 1 - i) as u32;
        let mut found = false;
        visit_vars(&self.body, 0, &mut |v, _, depth| {
            if let Var::Bound(k) = v {
                if *k >= depth && *k - depth == target {
                    found = true;
                }
            }
        });
        found
    }
}

/// Simultaneous substitution for free names.
pub fn subst(t: &Tm, map: &HashMap<Name, Inst>) -> Tm {
    if map.is_empty() {
        return t.clone();
    }
    walk(t, 0, &mut Subst { map })
}

pub fn subst_dims(t: &Tm, map: &HashMap<Name, Dim>) -> Tm {
    let m: HashMap<Name, Inst> = map.iter().map(|(k, v)| (k.clone(), Inst::Dim(v.clone()))).collect();
    subst(t, &m)
}

pub fn subst_term(m: &Tm, n: &Tm, a: &Name) -> Tm {
    subst(m, &HashMap::from([(a.clone(), Inst::Term(n.clone()))]))
}

pub fn subst_path(m: &Tm, r: &Dim, x: &Name) -> Tm {
    subst(m, &HashMap::from([(x.clone(), Inst::Dim(r.clone()))]))
}

/// Fresh substitution of a bridge term. A variable may only replace `x` if it
/// does not already occur.
pub fn subst_bridge(m: &Tm, r: &Dim, x: &Name) -> Result<Tm, SubstError> {
    if let Some(y) = r.as_name() {
        if y != x && occurs(m, y) {
            return Err(SubstError::DiagonalSubstitution(y.hint().to_string()));
        }
    }
    Ok(subst_path(m, r, x))
}

pub fn abstract_bridge(m: &Tm, x: &Name) -> Bind {
    Bind::close(&[(x.clone(), Sort::Bridge)], m)
}

pub fn system_subst(sys: &System, map: &HashMap<Name, Inst>) -> System {
    sys.iter()
        .map(|t| {
            let c = match &t.constraint {
                Constraint::PathEq(r, s) => Constraint::PathEq(dim_subst(r, map), dim_subst(s, map)),
                Constraint::BridgeEq(r, e) => Constraint::BridgeEq(dim_subst(r, map), *e),
            };
            let line = Bind { binders: t.line.binders.clone(), body: subst(&t.line.body, map) };
            Tube { constraint: c, line }
        })
        .collect()
}

pub fn dim_subst(d: &Dim, map: &HashMap<Name, Inst>) -> Dim {
    match d.as_name().and_then(|x| map.get(x)) {
        Some(Inst::Dim(r)) => r.clone(),
        _ => d.clone(),
    }
}

/// Whether the free name occurs (as a term or a dimension).
pub fn occurs(t: &Tm, x: &Name) -> bool {
    let mut found = false;
    visit_vars(t, 0, &mut |v, _, _| {
        if let Var::Free(y) = v {
            if y == x {
                found = true;
            }
        }
    });
    found
}

pub fn apart(t: &Tm, x: &Name) -> bool {
    !occurs(t, x)
}

/// Free names in order of first occurrence.
pub fn free_names(t: &Tm) -> Vec<Name> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    visit_vars(t, 0, &mut |v, _, _| {
        if let Var::Free(x) = v {
            if seen.insert(x.clone()) {
                out.push(x.clone());
            }
        }
    });
    out
}

/// Free names used in term position.
pub fn free_term_vars(t: &Tm) -> Vec<Name> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    visit_vars(t, 0, &mut |v, sort, _| {
        if let (Var::Free(x), Sort::Term) = (v, sort) {
            if seen.insert(x.clone()) {
                out.push(x.clone());
            }
        }
    });
    out
}

/// Free names used in dimension position.
pub fn free_dims(t: &Tm) -> Vec<Name> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    visit_vars(t, 0, &mut |v, sort, _| {
        if let (Var::Free(x), Sort::Path) = (v, sort) {
            if seen.insert(x.clone()) {
                out.push(x.clone());
            }
        }
    });
    out
}

/// Whether the term contains no bound index that escapes its binders.
pub fn locally_closed(t: &Tm) -> bool {
    let mut ok = true;
    visit_vars(t, 0, &mut |v, _, depth| {
        if let Var::Bound(k) = v {
            if *k >= depth {
                ok = false;
            }
        }
    });
    ok
}

/// Structural equality up to binder names and source locations.
pub fn alpha_eq(a: &Tm, b: &Tm) -> bool {
    let (a, b) = (Term::unloc(a), Term::unloc(b));
    if Arc::ptr_eq(a, b) {
        return true;
    }
    if !a.same_head(b) {
        return false;
    }
    let (pa, pb) = (a.parts(), b.parts());
    pa.len() == pb.len() && pa.into_iter().zip(pb).all(|(x, y)| part_eq(x, y))
}

fn part_eq(a: Part<'_>, b: Part<'_>) -> bool {
    match (a, b) {
        (Part::Term(x), Part::Term(y)) => alpha_eq(x, y),
        (Part::Dim(x), Part::Dim(y)) => x == y,
        (Part::Bind(x), Part::Bind(y)) => bind_eq(x, y),
        (Part::System(x), Part::System(y)) => {
            x.len() == y.len()
                && x.iter().zip(y).all(|(s, t)| s.constraint == t.constraint && bind_eq(&s.line, &t.line))
        }
        _ => false,
    }
}

pub fn bind_eq(a: &Bind, b: &Bind) -> bool {
    a.sorts() == b.sorts() && alpha_eq(&a.body, &b.body)
}

/// Strips every source-location wrapper.
pub fn strip_locs(t: &Tm) -> Tm {
    struct Strip;
    impl PartMap<Infallible> for Strip {
        fn term(&mut self, t: &Tm) -> Result<Tm, Infallible> {
            Ok(strip_locs(t))
        }
        fn dim(&mut self, d: &Dim) -> Result<Dim, Infallible> {
            Ok(d.clone())
        }
        fn bind(&mut self, b: &Bind) -> Result<Bind, Infallible> {
            Ok(Bind { binders: b.binders.clone(), body: strip_locs(&b.body) })
        }
    }
    let t = Term::unloc(t);
    if t.parts().is_empty() {
        return t.clone();
    }
    mk(t.map_parts(&mut Strip))
}

/// Number of nodes, for diagnostics and test budgets.
pub fn size(t: &Tm) -> usize {
    1 + t
        .parts()
        .into_iter()
        .map(|p| match p {
            Part::Term(t) => size(t),
            Part::Dim(_) => 1,
            Part::Bind(b) => size(&b.body),
            Part::System(s) => s.iter().map(|t| 1 + size(&t.line.body)).sum(),
        })
        .sum::<usize>()
}

/// `Iso A B`: a map with a two-sided inverse.
pub fn iso_type(a: &Tm, b: &Tm) -> Tm {
    let f = Name::fresh("f");
    let g = Name::fresh("g");
    let h = Name::fresh("h");
    let x = Name::fresh("a");
    let y = Name::fresh("b");
    let (fv, gv, hv, xv, yv) = (Term::var(&f), Term::var(&g), Term::var(&h), Term::var(&x), Term::var(&y));
    let retract = mk(Term::Pi(
        a.clone(),
        Bind::close(
            &[(x.clone(), Sort::Term)],
            &Term::path(a.clone(), Term::app(gv.clone(), Term::app(fv.clone(), xv.clone())), xv.clone()),
        ),
    ));
    let section = mk(Term::Pi(
        b.clone(),
        Bind::close(
            &[(y.clone(), Sort::Term)],
            &Term::path(b.clone(), Term::app(fv.clone(), Term::app(hv.clone(), yv.clone())), yv.clone()),
        ),
    ));
    let left = mk(Term::Sigma(Term::arrow(b.clone(), a.clone()), Bind::close(&[(g.clone(), Sort::Term)], &retract)));
    let right = mk(Term::Sigma(Term::arrow(b.clone(), a.clone()), Bind::close(&[(h.clone(), Sort::Term)], &section)));
    mk(Term::Sigma(Term::arrow(a.clone(), b.clone()), Bind::close(&[(f, Sort::Term)], &Term::times(left, right))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &Name) -> Tm {
        Term::var(x)
    }

    #[test]
    fn term_substitution() {
        let (a, b) = (Name::fresh("a"), Name::fresh("b"));
        let n = mk(Term::True);
        let m = Term::lam(&b, &Term::app(v(&b), v(&a)));
        assert!(alpha_eq(&subst_term(&m, &n, &a), &Term::lam(&b, &Term::app(v(&b), n.clone()))));
        assert!(alpha_eq(&subst_term(&v(&a), &n, &a), &n));
        let id = Term::lam(&a, &v(&a));
        assert!(alpha_eq(&subst_term(&id, &n, &a), &id));
    }

    #[test]
    fn path_substitution() {
        let (p, x, y, x2) = (Name::fresh("p"), Name::fresh("x"), Name::fresh("y"), Name::fresh("x'"));
        let m = Term::plam(&y, &Term::papp(v(&p), Dim::name(&y)));
        assert!(alpha_eq(&subst_path(&m, &Dim::name(&x2), &x), &m));
        let m = Term::papp(v(&p), Dim::name(&x));
        assert!(alpha_eq(&subst_path(&m, &Dim::Zero, &x), &Term::papp(v(&p), Dim::Zero)));
        let h = mk(Term::HCom(mk(Term::Bool), Dim::name(&x), Dim::One, mk(Term::True), vec![]));
        let expect = mk(Term::HCom(mk(Term::Bool), Dim::name(&y), Dim::One, mk(Term::True), vec![]));
        assert!(alpha_eq(&subst_path(&h, &Dim::name(&y), &x), &expect));
    }

    #[test]
    fn bridge_substitution() {
        let (x, y, p) = (Name::fresh("x"), Name::fresh("y"), Name::fresh("p"));
        let g = mk(Term::GelIn(Dim::name(&x), mk(Term::True), mk(Term::False), v(&p)));
        let g0 = mk(Term::GelIn(Dim::Zero, mk(Term::True), mk(Term::False), v(&p)));
        assert!(alpha_eq(&subst_bridge(&g, &Dim::Zero, &x).unwrap(), &g0));
        let q = Term::bapp(v(&p), Dim::name(&y));
        assert!(matches!(subst_bridge(&q, &Dim::name(&y), &x), Err(SubstError::DiagonalSubstitution(_))));
        let r = Name::fresh("r");
        let bl = Term::blam(&y, &Term::bapp(v(&p), Dim::name(&x)));
        let out = subst_bridge(&bl, &Dim::name(&r), &x).unwrap();
        assert!(alpha_eq(&out, &Term::blam(&y, &Term::bapp(v(&p), Dim::name(&r)))));
    }

    #[test]
    fn abstraction_round_trip() {
        let (x, y, f) = (Name::fresh("x"), Name::fresh("y"), Name::fresh("f"));
        let m = Term::bapp(v(&f), Dim::name(&x));
        let b = abstract_bridge(&m, &x);
        assert!(alpha_eq(&b.open_dim(&Dim::name(&y)), &Term::bapp(v(&f), Dim::name(&y))));
        assert!(alpha_eq(&b.open_dim(&Dim::Zero), &subst_path(&m, &Dim::Zero, &x)));
        assert!(!abstract_bridge(&v(&f), &x).uses(0));
    }

    #[test]
    fn alpha_equivalence() {
        let (a, b, p, x, y) =
            (Name::fresh("a"), Name::fresh("b"), Name::fresh("p"), Name::fresh("x"), Name::fresh("y"));
        assert!(alpha_eq(&Term::lam(&a, &v(&a)), &Term::lam(&b, &v(&b))));
        assert!(alpha_eq(
            &Term::plam(&x, &Term::papp(v(&p), Dim::name(&x))),
            &Term::plam(&y, &Term::papp(v(&p), Dim::name(&y)))
        ));
        assert!(!alpha_eq(&mk(Term::True), &mk(Term::False)));
        assert!(!alpha_eq(&Term::lam(&a, &v(&a)), &Term::lam(&a, &v(&b))));
    }

    #[test]
    fn multi_binders_index_innermost_first() {
        let (a0, a1) = (Name::fresh("a0"), Name::fresh("a1"));
        let body = Term::app(v(&a0), v(&a1));
        let b = Bind::close(&[(a0.clone(), Sort::Term), (a1.clone(), Sort::Term)], &body);
        match &*b.body {
            Term::App(f, x) => {
                assert!(matches!(&**f, Term::Var(Var::Bound(1))));
                assert!(matches!(&**x, Term::Var(Var::Bound(0))));
            }
            _ => panic!(),
        }
        let out = b.open_terms(&[mk(Term::True), mk(Term::False)]);
        assert!(alpha_eq(&out, &Term::app(mk(Term::True), mk(Term::False))));
    }

    #[test]
    fn iso_type_is_closed() {
        let t = iso_type(&mk(Term::Bool), &mk(Term::Bool));
        assert!(locally_closed(&t));
        assert!(free_names(&t).is_empty());
    }
}
