//! Deterministic small-step evaluation.
//!
//! Evaluation is leftmost-outermost with the principal argument of every
//! eliminator forced first. Inputs are closed with respect to term variables
//! but may mention interval variables. When a [`Oracle`] is supplied the
//! stepper also works on open terms: it reads endpoints of neutral paths and
//! bridges from their types and decides apartness for extent.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::context::Signature;
use crate::interval::{forall_x, Constraint, Dim, Name, Sort, Status};
use crate::syntax::System;
use crate::syntax::{
    abstract_bridge, free_term_vars, mk, subst_path, system_subst, Bind, Extent, Inst, PartMap, Term, Tm, Tube,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StuckReason {
    /// Blocked on a variable or an opaque definition.
    Neutral,
    IllTyped(String),
    Unsupported(String),
}

impl fmt::Display for StuckReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StuckReason::Neutral => f.write_str("neutral term"),
            StuckReason::IllTyped(m) => write!(f, "ill-typed term: {m}"),
            StuckReason::Unsupported(m) => write!(f, "no reduction rule: {m}"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum StepResult {
    Value,
    Steps(Tm),
    Stuck(StuckReason),
}

#[derive(Clone, Debug, Error)]
pub enum EvalError {
    #[error("evaluation is stuck: {reason}")]
    Stuck { term: Tm, reason: StuckReason },
    #[error("fuel exhausted after {0} steps")]
    FuelExhausted(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Loc,
    Ann,
    Delta,
    Beta,
    Fst,
    Snd,
    PathBeta,
    PathBoundary,
    BridgeBeta,
    BridgeBoundary,
    UngelBeta,
    ExtentEndpoint,
    ExtentVar,
    GelEndpoint,
    GelInEndpoint,
    VEndpoint,
    VinEndpoint,
    VprojZero,
    VprojOne,
    VprojBeta,
    ZModEndpoint,
    CoePi,
    CoeSigma,
    CoePath,
    CoeBridge,
    CoeGel,
    CoeBase,
    CoeUniverse,
    CoeRefl,
    HComPi,
    HComSigma,
    HComPath,
    HComBridge,
    HComGel,
    HComRefl,
    HComTube,
    Com,
    IfTrue,
    IfFalse,
    IfHCom,
    Z2ElimIn,
    Z2ElimMod,
    Z2ElimHCom,
    AbortHCom,
    Add,
    AddHCom,
    TubeDrop,
    TubeRestrict,
}

impl Rule {
    pub fn name(self) -> &'static str {
        use Rule::*;
        match self {
            Loc => "loc",
            Ann => "ann",
            Delta => "delta",
            Beta => "beta",
            Fst => "fst",
            Snd => "snd",
            PathBeta => "papp-beta",
            PathBoundary => "papp-boundary",
            BridgeBeta => "bapp-beta",
            BridgeBoundary => "bapp-boundary",
            UngelBeta => "ungel-beta",
            ExtentEndpoint => "extent-endpoint",
            ExtentVar => "extent-var",
            GelEndpoint => "Gel-endpoint",
            GelInEndpoint => "gel-endpoint",
            VEndpoint => "V-endpoint",
            VinEndpoint => "Vin-endpoint",
            VprojZero => "Vproj-0",
            VprojOne => "Vproj-1",
            VprojBeta => "Vproj-beta",
            ZModEndpoint => "zmod-endpoint",
            CoePi => "coe-Pi",
            CoeSigma => "coe-Sig",
            CoePath => "coe-Path",
            CoeBridge => "coe-Bridge",
            CoeGel => "coe-Gel",
            CoeBase => "coe-base",
            CoeUniverse => "coe-U",
            CoeRefl => "coe-refl",
            HComPi => "hcom-Pi",
            HComSigma => "hcom-Sig",
            HComPath => "hcom-Path",
            HComBridge => "hcom-Bridge",
            HComGel => "hcom-Gel",
            HComRefl => "hcom-refl",
            HComTube => "hcom-tube",
            Com => "com",
            IfTrue => "if-tt",
            IfFalse => "if-ff",
            IfHCom => "if-hcom",
            Z2ElimIn => "z2elim-zin",
            Z2ElimMod => "z2elim-zmod",
            Z2ElimHCom => "z2elim-hcom",
            AbortHCom => "abort-hcom",
            Add => "add",
            AddHCom => "add-hcom",
            TubeDrop => "tube-drop",
            TubeRestrict => "tube-restrict",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One reduction step, with the rule that fired and where.
#[derive(Clone, Debug)]
pub struct Stepped {
    pub term: Tm,
    pub rule: Rule,
    pub path: Vec<&'static str>,
}

impl Stepped {
    fn at(term: Tm, rule: Rule) -> Stepped {
        Stepped { term, rule, path: Vec::new() }
    }

    pub fn location(&self) -> String {
        if self.path.is_empty() {
            "root".to_string()
        } else {
            self.path.join(".")
        }
    }
}

enum Outcome {
    Value,
    Step(Stepped),
    Stuck(StuckReason),
}

/// Information about open terms that the stepper cannot compute itself.
pub trait Oracle {
    /// The endpoint of a neutral path (`sort = Path`) or bridge, read off its type.
    fn boundary(&self, head: &Tm, sort: Sort, end: bool) -> Option<Tm>;
    /// Whether term variable `a` is bound before bridge variable `x`.
    fn apart(&self, a: &Name, x: &Name) -> bool;
}

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug)]
pub struct Fuel {
    limit: u64,
    left: Cell<u64>,
}

impl Fuel {
    pub fn new(limit: u64) -> Fuel {
        Fuel { limit, left: Cell::new(limit) }
    }

    pub fn take(&self) -> Result<(), EvalError> {
        match self.left.get() {
            0 => Err(EvalError::FuelExhausted(self.limit)),
            n => {
                self.left.set(n - 1);
                Ok(())
            }
        }
    }

    pub fn used(&self) -> u64 {
        self.limit - self.left.get()
    }

    pub fn reset(&self) {
        self.left.set(self.limit)
    }
}

impl Default for Fuel {
    fn default() -> Fuel {
        Fuel::new(DEFAULT_FUEL)
    }
}

pub struct Machine<'a> {
    sig: &'a Signature,
    fuel: &'a Fuel,
    oracle: Option<&'a dyn Oracle>,
    trace: Option<&'a RefCell<Vec<String>>>,
}

fn base_type(t: &Term) -> bool {
    matches!(t, Term::Bool | Term::Int | Term::Z2 | Term::Unit | Term::Empty)
}

/// Structural value judgment.
pub fn isval(m: &Tm) -> bool {
    match &**m {
        Term::U | Term::Pi(..) | Term::Sigma(..) | Term::Path(..) | Term::Bridge(..) => true,
        Term::Bool | Term::Int | Term::Z2 | Term::Unit | Term::Empty => true,
        Term::Lam(_) | Term::Pair(..) | Term::PLam(_) | Term::BLam(_) => true,
        Term::True | Term::False | Term::IntLit(_) | Term::Star | Term::ZIn(_) => true,
        Term::ZMod(_, r) | Term::Gel(r, ..) | Term::GelIn(r, ..) | Term::V(r, ..) | Term::Vin(r, ..) => r.is_var(),
        Term::HCom(a, r, s, _, sys) => {
            base_type(a) && r != s && sys.iter().all(|t| t.constraint.status() != Status::True)
        }
        _ => false,
    }
}

/// Heterogeneous composition as coercion followed by homogeneous composition.
pub fn com(line: &Bind, r: &Dim, s: &Dim, m: &Tm, sys: &System) -> Tm {
    let tubes = sys
        .iter()
        .map(|t| {
            let (y, n) = t.line.unbind1();
            let body = mk(Term::Coe(line.clone(), Dim::name(&y), s.clone(), n));
            Tube { constraint: t.constraint.clone(), line: t.line.rebind(&[y], &body) }
        })
        .collect();
    mk(Term::HCom(
        line.open_dim(s),
        r.clone(),
        s.clone(),
        mk(Term::Coe(line.clone(), r.clone(), s.clone(), m.clone())),
        tubes,
    ))
}

fn path_bind(x: &Name, body: &Tm) -> Bind {
    Bind::close(&[(x.clone(), Sort::Path)], body)
}

fn map_tubes(sys: &System, f: impl Fn(Tm) -> Tm) -> System {
    sys.iter().map(|t| Tube { constraint: t.constraint.clone(), line: t.line.map_body(|b| f(b.clone())) }).collect()
}

fn const_tube(c: Constraint, body: &Tm) -> Tube {
    Tube { constraint: c, line: Bind::constant(&[Sort::Path], body.clone()) }
}

fn first_true_tube(sys: &System) -> Option<&Tube> {
    sys.iter().find(|t| t.constraint.status() == Status::True)
}

impl<'a> Machine<'a> {
    pub fn new(sig: &'a Signature, fuel: &'a Fuel) -> Machine<'a> {
        Machine { sig, fuel, oracle: None, trace: None }
    }

    pub fn with_oracle(mut self, oracle: &'a dyn Oracle) -> Machine<'a> {
        self.oracle = Some(oracle);
        self
    }

    pub fn with_trace(mut self, trace: &'a RefCell<Vec<String>>) -> Machine<'a> {
        self.trace = Some(trace);
        self
    }

    pub fn signature(&self) -> &'a Signature {
        self.sig
    }

    pub fn fuel(&self) -> &'a Fuel {
        self.fuel
    }

    pub fn step(&self, m: &Tm) -> StepResult {
        match self.step_in(m) {
            Outcome::Value => StepResult::Value,
            Outcome::Step(s) => StepResult::Steps(s.term),
            Outcome::Stuck(r) => StepResult::Stuck(r),
        }
    }

    /// Like [`Machine::step`] but reports the rule and redex position.
    pub fn step_traced(&self, m: &Tm) -> Result<Option<Stepped>, StuckReason> {
        match self.step_in(m) {
            Outcome::Value => Ok(None),
            Outcome::Step(s) => Ok(Some(s)),
            Outcome::Stuck(r) => Err(r),
        }
    }

    fn record(&self, s: &Stepped) {
        if let Some(t) = self.trace {
            let mut t = t.borrow_mut();
            let n = t.len() + 1;
            t.push(format!("{n} {} at {}", s.rule, s.location()));
        }
    }

    /// Iterates to a value.
    pub fn eval(&self, m: &Tm) -> Result<Tm, EvalError> {
        let mut m = m.clone();
        loop {
            match self.step_in(&m) {
                Outcome::Value => return Ok(m),
                Outcome::Step(s) => {
                    self.fuel.take()?;
                    self.record(&s);
                    m = s.term;
                }
                Outcome::Stuck(reason) => return Err(EvalError::Stuck { term: m, reason }),
            }
        }
    }

    /// Iterates to a value or a stuck term.
    pub fn whnf(&self, m: &Tm) -> Result<Tm, EvalError> {
        let mut m = m.clone();
        loop {
            match self.step_in(&m) {
                Outcome::Step(s) => {
                    self.fuel.take()?;
                    self.record(&s);
                    m = s.term;
                }
                _ => return Ok(m),
            }
        }
    }

    fn cong(&self, child: &Tm, label: &'static str, rebuild: impl FnOnce(Tm) -> Tm) -> Outcome {
        match self.step_in(child) {
            Outcome::Step(mut s) => {
                s.term = rebuild(s.term);
                s.path.insert(0, label);
                Outcome::Step(s)
            }
            other => other,
        }
    }

    fn step_in(&self, t: &Tm) -> Outcome {
        use Outcome::*;
        match &**t {
            Term::Loc(_, m) => Step(Stepped::at(m.clone(), Rule::Loc)),
            Term::Ann(m, _) => Step(Stepped::at(m.clone(), Rule::Ann)),
            Term::Var(crate::interval::Var::Free(_)) => Stuck(StuckReason::Neutral),
            Term::Var(_) => Stuck(StuckReason::IllTyped("unbound index".into())),
            Term::Def(name, args) => match self.sig.get(name) {
                Some(d) => match d.unfold(args) {
                    Some(body) => Step(Stepped::at(body, Rule::Delta)),
                    None => Stuck(StuckReason::Neutral),
                },
                None => Stuck(StuckReason::IllTyped(format!("unknown definition `{name}`"))),
            },
            Term::U | Term::Pi(..) | Term::Sigma(..) | Term::Path(..) | Term::Bridge(..) => Value,
            Term::Bool | Term::Int | Term::Z2 | Term::Unit | Term::Empty => Value,
            Term::Lam(_) | Term::Pair(..) | Term::PLam(_) | Term::BLam(_) => Value,
            Term::True | Term::False | Term::IntLit(_) | Term::Star | Term::ZIn(_) => Value,
            Term::ZMod(n, r) => match r.as_endpoint() {
                Some(false) => Step(Stepped::at(mk(Term::ZIn(n.clone())), Rule::ZModEndpoint)),
                Some(true) => {
                    Step(Stepped::at(mk(Term::ZIn(mk(Term::Add(n.clone(), mk(Term::IntLit(2)))))), Rule::ZModEndpoint))
                }
                None => Value,
            },
            Term::Gel(r, a0, a1, _) => match r.as_endpoint() {
                Some(e) => Step(Stepped::at(if e { a1.clone() } else { a0.clone() }, Rule::GelEndpoint)),
                None => Value,
            },
            Term::GelIn(r, m0, m1, _) => match r.as_endpoint() {
                Some(e) => Step(Stepped::at(if e { m1.clone() } else { m0.clone() }, Rule::GelInEndpoint)),
                None => Value,
            },
            Term::V(r, a, b, _) => match r.as_endpoint() {
                Some(e) => Step(Stepped::at(if e { b.clone() } else { a.clone() }, Rule::VEndpoint)),
                None => Value,
            },
            Term::Vin(r, m, n) => match r.as_endpoint() {
                Some(e) => Step(Stepped::at(if e { n.clone() } else { m.clone() }, Rule::VinEndpoint)),
                None => Value,
            },
            Term::App(f, a) => match Term::unloc(f).as_ref() {
                Term::Lam(b) => Step(Stepped::at(b.open_term(a), Rule::Beta)),
                _ => self.elim(f, "app", |f| Term::app(f, a.clone()), "application of a non-function"),
            },
            Term::Fst(p) => match Term::unloc(p).as_ref() {
                Term::Pair(a, _) => Step(Stepped::at(a.clone(), Rule::Fst)),
                _ => self.elim(p, "fst", Term::fst, "projection from a non-pair"),
            },
            Term::Snd(p) => match Term::unloc(p).as_ref() {
                Term::Pair(_, b) => Step(Stepped::at(b.clone(), Rule::Snd)),
                _ => self.elim(p, "snd", Term::snd, "projection from a non-pair"),
            },
            Term::PApp(p, r) => match Term::unloc(p).as_ref() {
                Term::PLam(b) => Step(Stepped::at(b.open_dim(r), Rule::PathBeta)),
                _ => self.dim_app(p, r, Sort::Path),
            },
            Term::BApp(p, r) => match Term::unloc(p).as_ref() {
                Term::BLam(b) => Step(Stepped::at(b.open_dim(r), Rule::BridgeBeta)),
                _ => self.dim_app(p, r, Sort::Bridge),
            },
            Term::Ungel(b) => {
                let (names, q) = b.unbind();
                let x = &names[0];
                if let Term::GelIn(Dim::Var(crate::interval::Var::Free(y)), _, _, p) = Term::unloc(&q).as_ref() {
                    if y == x {
                        return Step(Stepped::at(p.clone(), Rule::UngelBeta));
                    }
                }
                match self.cong(&q, "ungel", |q| mk(Term::Ungel(b.rebind(&names, &q)))) {
                    Value => Stuck(StuckReason::IllTyped("ungel of a non-gel".into())),
                    other => other,
                }
            }
            Term::Extent(e) => self.extent(e),
            Term::Coe(line, r, s, m) => self.coe(line, r, s, m),
            Term::HCom(a, r, s, m, sys) => self.hcom(a, r, s, m, sys),
            Term::Com(line, r, s, m, sys) => Step(Stepped::at(com(line, r, s, m, sys), Rule::Com)),
            Term::Vproj(r, p, i) => match r.as_endpoint() {
                Some(false) => Step(Stepped::at(Term::app(Term::fst(i.clone()), p.clone()), Rule::VprojZero)),
                Some(true) => Step(Stepped::at(p.clone(), Rule::VprojOne)),
                None => match Term::unloc(p).as_ref() {
                    Term::Vin(r2, _, n) if r2 == r => Step(Stepped::at(n.clone(), Rule::VprojBeta)),
                    _ => {
                        self.elim(p, "Vproj", |p| mk(Term::Vproj(r.clone(), p, i.clone())), "Vproj of a non-V element")
                    }
                },
            },
            Term::If(c, m, tt, ff) => match Term::unloc(m).as_ref() {
                Term::True => Step(Stepped::at(tt.clone(), Rule::IfTrue)),
                Term::False => Step(Stepped::at(ff.clone(), Rule::IfFalse)),
                Term::HCom(a, r, s, cap, sys) if isval(m) && matches!(**a, Term::Bool) => {
                    let elim = |n: Tm| mk(Term::If(c.clone(), n, tt.clone(), ff.clone()));
                    Step(Stepped::at(self.elim_hcom(c, a, r, s, cap, sys, elim), Rule::IfHCom))
                }
                _ => self.elim(m, "if", |m| mk(Term::If(c.clone(), m, tt.clone(), ff.clone())), "if on a non-boolean"),
            },
            Term::Z2Elim(c, m, qin, qmod) => match Term::unloc(m).as_ref() {
                Term::ZIn(n) => Step(Stepped::at(qin.open_term(n), Rule::Z2ElimIn)),
                Term::ZMod(n, r) if r.is_var() => {
                    Step(Stepped::at(qmod.open(&[Inst::Term(n.clone()), Inst::Dim(r.clone())]), Rule::Z2ElimMod))
                }
                Term::HCom(a, r, s, cap, sys) if isval(m) && matches!(**a, Term::Z2) => {
                    let elim = |n: Tm| mk(Term::Z2Elim(c.clone(), n, qin.clone(), qmod.clone()));
                    Step(Stepped::at(self.elim_hcom(c, a, r, s, cap, sys, elim), Rule::Z2ElimHCom))
                }
                _ => self.elim(
                    m,
                    "z2elim",
                    |m| mk(Term::Z2Elim(c.clone(), m, qin.clone(), qmod.clone())),
                    "z2elim on a non-z2 value",
                ),
            },
            Term::Abort(c, m) => match Term::unloc(m).as_ref() {
                Term::HCom(a, r, s, cap, sys) if isval(m) && matches!(**a, Term::Empty) => {
                    let ab = |n: Tm| mk(Term::Abort(c.clone(), n));
                    let out = mk(Term::HCom(c.clone(), r.clone(), s.clone(), ab(cap.clone()), map_tubes(sys, ab)));
                    Step(Stepped::at(out, Rule::AbortHCom))
                }
                _ => self.elim(m, "abort", |m| mk(Term::Abort(c.clone(), m)), "abort of a non-empty value"),
            },
            Term::Add(a, b) => self.add(a, b),
        }
    }

    /// Congruence on a principal argument whose value is not a redex.
    fn elim(&self, p: &Tm, label: &'static str, rebuild: impl FnOnce(Tm) -> Tm, msg: &str) -> Outcome {
        match self.cong(p, label, rebuild) {
            Outcome::Value => Outcome::Stuck(StuckReason::IllTyped(msg.into())),
            other => other,
        }
    }

    fn dim_app(&self, p: &Tm, r: &Dim, sort: Sort) -> Outcome {
        let label = if sort == Sort::Path { "papp" } else { "bapp" };
        let rebuild = |p: Tm| mk(if sort == Sort::Path { Term::PApp(p, r.clone()) } else { Term::BApp(p, r.clone()) });
        match self.cong(p, label, rebuild) {
            Outcome::Value => Outcome::Stuck(StuckReason::IllTyped(format!("{label} of a non-abstraction"))),
            Outcome::Stuck(StuckReason::Neutral) => {
                let found = match (r.as_endpoint(), self.oracle) {
                    (Some(e), Some(o)) => o.boundary(p, sort, e),
                    _ => None,
                };
                match found {
                    Some(b) => {
                        let rule = if sort == Sort::Path { Rule::PathBoundary } else { Rule::BridgeBoundary };
                        Outcome::Step(Stepped::at(b, rule))
                    }
                    None => Outcome::Stuck(StuckReason::Neutral),
                }
            }
            other => other,
        }
    }

    fn extent_fires(&self, arg: &Tm, x: &Name) -> bool {
        let vars = free_term_vars(arg);
        if vars.is_empty() {
            return true;
        }
        match self.oracle {
            Some(o) => vars.iter().all(|a| o.apart(a, x)),
            None => false,
        }
    }

    fn extent(&self, e: &Extent) -> Outcome {
        match &e.index {
            Dim::Zero => Outcome::Step(Stepped::at(e.end0.open_term(&e.arg), Rule::ExtentEndpoint)),
            Dim::One => Outcome::Step(Stepped::at(e.end1.open_term(&e.arg), Rule::ExtentEndpoint)),
            Dim::Var(crate::interval::Var::Free(x)) => {
                if self.extent_fires(&e.arg, x) {
                    let m0 = subst_path(&e.arg, &Dim::Zero, x);
                    let m1 = subst_path(&e.arg, &Dim::One, x);
                    let line = mk(Term::BLam(abstract_bridge(&e.arg, x)));
                    let body = e.line.open_terms(&[m0, m1, line]);
                    return Outcome::Step(Stepped::at(Term::bapp(body, e.index.clone()), Rule::ExtentVar));
                }
                let rebuild = |arg: Tm| mk(Term::Extent(Box::new(Extent { arg, ..e.clone() })));
                match self.cong(&e.arg, "extent", rebuild) {
                    Outcome::Value => Outcome::Stuck(StuckReason::Neutral),
                    other => other,
                }
            }
            Dim::Var(_) => Outcome::Stuck(StuckReason::IllTyped("unbound index".into())),
        }
    }

    fn coe(&self, line: &Bind, r: &Dim, s: &Dim, m: &Tm) -> Outcome {
        let (names, a) = line.unbind();
        let x = &names[0];
        let head =
            match self.cong(&a, "coe", |a| mk(Term::Coe(line.rebind(&names, &a), r.clone(), s.clone(), m.clone()))) {
                Outcome::Step(st) => return Outcome::Step(st),
                Outcome::Stuck(StuckReason::Neutral) => None,
                Outcome::Stuck(reason) => return Outcome::Stuck(reason),
                Outcome::Value => Some(a),
            };
        let refl = || {
            if r == s {
                Outcome::Step(Stepped::at(m.clone(), Rule::CoeRefl))
            } else {
                Outcome::Stuck(StuckReason::Neutral)
            }
        };
        let Some(a) = head else { return refl() };
        let a = Term::unloc(&a).clone();
        let step = |t: Tm, rule: Rule| Outcome::Step(Stepped::at(t, rule));
        match &*a {
            Term::Pi(dom, cod) => {
                let v = Name::fresh("a");
                let dom_line = path_bind(x, dom);
                let back = |to: Dim| mk(Term::Coe(dom_line.clone(), s.clone(), to, Term::var(&v)));
                let cod_line = path_bind(x, &cod.open_term(&back(Dim::name(x))));
                let body = mk(Term::Coe(cod_line, r.clone(), s.clone(), Term::app(m.clone(), back(r.clone()))));
                step(Term::lam(&v, &body), Rule::CoePi)
            }
            Term::Sigma(dom, cod) => {
                let dom_line = path_bind(x, dom);
                let m1 = Term::fst(m.clone());
                let first = mk(Term::Coe(dom_line.clone(), r.clone(), s.clone(), m1.clone()));
                let moving = mk(Term::Coe(dom_line, r.clone(), Dim::name(x), m1));
                let cod_line = path_bind(x, &cod.open_term(&moving));
                let second = mk(Term::Coe(cod_line, r.clone(), s.clone(), Term::snd(m.clone())));
                step(Term::pair(first, second), Rule::CoeSigma)
            }
            Term::Path(pline, p0, p1) => {
                let y = Name::fresh("y");
                let a_line = path_bind(x, &pline.open_dim(&Dim::name(&y)));
                let sys = vec![
                    Tube { constraint: Constraint::PathEq(Dim::name(&y), Dim::Zero), line: path_bind(x, p0) },
                    Tube { constraint: Constraint::PathEq(Dim::name(&y), Dim::One), line: path_bind(x, p1) },
                ];
                let body = mk(Term::Com(a_line, r.clone(), s.clone(), Term::papp(m.clone(), Dim::name(&y)), sys));
                step(Term::plam(&y, &body), Rule::CoePath)
            }
            Term::Bridge(bline, m0, m1) => {
                let bx = Name::fresh("x");
                let a_line = path_bind(x, &bline.open_dim(&Dim::name(&bx)));
                let sys = vec![
                    Tube { constraint: Constraint::BridgeEq(Dim::name(&bx), false), line: path_bind(x, m0) },
                    Tube { constraint: Constraint::BridgeEq(Dim::name(&bx), true), line: path_bind(x, m1) },
                ];
                let body = mk(Term::Com(a_line, r.clone(), s.clone(), Term::bapp(m.clone(), Dim::name(&bx)), sys));
                step(Term::blam(&bx, &body), Rule::CoeBridge)
            }
            Term::Gel(Dim::Var(crate::interval::Var::Free(bx)), a0, a1, rel) => {
                let end =
                    |a: &Tm, e: Dim, to: Dim| mk(Term::Coe(path_bind(x, a), r.clone(), to, subst_path(m, &e, bx)));
                let rel_line =
                    path_bind(x, &rel.open_terms(&[end(a0, Dim::Zero, Dim::name(x)), end(a1, Dim::One, Dim::name(x))]));
                let p = mk(Term::Coe(rel_line, r.clone(), s.clone(), mk(Term::Ungel(abstract_bridge(m, bx)))));
                let out =
                    mk(Term::GelIn(Dim::name(bx), end(a0, Dim::Zero, s.clone()), end(a1, Dim::One, s.clone()), p));
                step(out, Rule::CoeGel)
            }
            t if base_type(t) => step(m.clone(), Rule::CoeBase),
            Term::U => step(m.clone(), Rule::CoeUniverse),
            Term::V(..) => match refl() {
                Outcome::Stuck(_) => Outcome::Stuck(StuckReason::Unsupported("coe across a V-type".into())),
                o => o,
            },
            _ => Outcome::Stuck(StuckReason::IllTyped("coe along a non-type".into())),
        }
    }

    fn hcom_generic(&self, r: &Dim, s: &Dim, m: &Tm, sys: &System) -> Option<Outcome> {
        if r == s {
            return Some(Outcome::Step(Stepped::at(m.clone(), Rule::HComRefl)));
        }
        first_true_tube(sys).map(|t| Outcome::Step(Stepped::at(t.line.open_dim(s), Rule::HComTube)))
    }

    fn hcom(&self, a: &Tm, r: &Dim, s: &Dim, m: &Tm, sys: &System) -> Outcome {
        let rebuild = |a: Tm| mk(Term::HCom(a, r.clone(), s.clone(), m.clone(), sys.clone()));
        match self.cong(a, "hcom", rebuild) {
            Outcome::Step(st) => return Outcome::Step(st),
            Outcome::Stuck(StuckReason::Neutral) => {
                return self.hcom_generic(r, s, m, sys).unwrap_or(Outcome::Stuck(StuckReason::Neutral))
            }
            Outcome::Stuck(reason) => return Outcome::Stuck(reason),
            Outcome::Value => {}
        }
        let step = |t: Tm, rule: Rule| Outcome::Step(Stepped::at(t, rule));
        match &**a {
            Term::Pi(_, cod) => {
                let v = Name::fresh("a");
                let av = Term::var(&v);
                let tubes = map_tubes(sys, |n| Term::app(n, av.clone()));
                let body =
                    mk(Term::HCom(cod.open_term(&av), r.clone(), s.clone(), Term::app(m.clone(), av.clone()), tubes));
                step(Term::lam(&v, &body), Rule::HComPi)
            }
            Term::Sigma(dom, cod) => {
                let firsts = map_tubes(sys, Term::fst);
                let first = |to: Dim| mk(Term::HCom(dom.clone(), r.clone(), to, Term::fst(m.clone()), firsts.clone()));
                let z = Name::fresh("z");
                let line = path_bind(&z, &cod.open_term(&first(Dim::name(&z))));
                let second = mk(Term::Com(line, r.clone(), s.clone(), Term::snd(m.clone()), map_tubes(sys, Term::snd)));
                step(Term::pair(first(s.clone()), second), Rule::HComSigma)
            }
            Term::Path(pline, p0, p1) => {
                let y = Name::fresh("y");
                let yd = Dim::name(&y);
                let mut tubes = map_tubes(sys, |n| Term::papp(n, yd.clone()));
                tubes.push(const_tube(Constraint::PathEq(yd.clone(), Dim::Zero), p0));
                tubes.push(const_tube(Constraint::PathEq(yd.clone(), Dim::One), p1));
                let body = mk(Term::HCom(pline.open_dim(&yd), r.clone(), s.clone(), Term::papp(m.clone(), yd), tubes));
                step(Term::plam(&y, &body), Rule::HComPath)
            }
            Term::Bridge(bline, m0, m1) => {
                let bx = Name::fresh("x");
                let xd = Dim::name(&bx);
                let mut tubes = map_tubes(sys, |n| Term::bapp(n, xd.clone()));
                tubes.push(const_tube(Constraint::BridgeEq(xd.clone(), false), m0));
                tubes.push(const_tube(Constraint::BridgeEq(xd.clone(), true), m1));
                let body = mk(Term::HCom(bline.open_dim(&xd), r.clone(), s.clone(), Term::bapp(m.clone(), xd), tubes));
                step(Term::blam(&bx, &body), Rule::HComBridge)
            }
            Term::Gel(Dim::Var(crate::interval::Var::Free(bx)), a0, a1, rel) => {
                let end = |ty: &Tm, e: Dim, to: Dim| {
                    let map = HashMap::from([(bx.clone(), Inst::Dim(e.clone()))]);
                    mk(Term::HCom(ty.clone(), r.clone(), to, subst_path(m, &e, bx), system_subst(sys, &map)))
                };
                let y = Name::fresh("y");
                let rel_line = path_bind(
                    &y,
                    &rel.open_terms(&[end(a0, Dim::Zero, Dim::name(&y)), end(a1, Dim::One, Dim::name(&y))]),
                );
                let tubes = sys
                    .iter()
                    .map(|t| Tube {
                        constraint: forall_x(bx, &t.constraint),
                        line: t.line.map_body(|q| mk(Term::Ungel(abstract_bridge(q, bx)))),
                    })
                    .collect();
                let p = mk(Term::Com(rel_line, r.clone(), s.clone(), mk(Term::Ungel(abstract_bridge(m, bx))), tubes));
                let out =
                    mk(Term::GelIn(Dim::name(bx), end(a0, Dim::Zero, s.clone()), end(a1, Dim::One, s.clone()), p));
                step(out, Rule::HComGel)
            }
            t if base_type(t) => self.hcom_generic(r, s, m, sys).unwrap_or(Outcome::Value),
            Term::U => self
                .hcom_generic(r, s, m, sys)
                .unwrap_or_else(|| Outcome::Stuck(StuckReason::Unsupported("hcom in the universe".into()))),
            Term::V(..) => self
                .hcom_generic(r, s, m, sys)
                .unwrap_or_else(|| Outcome::Stuck(StuckReason::Unsupported("hcom in a V-type".into()))),
            _ => Outcome::Stuck(StuckReason::IllTyped("hcom at a non-type".into())),
        }
    }

    /// An eliminator applied to a formal composite commutes with it.
    #[allow(clippy::too_many_arguments)]
    fn elim_hcom(
        &self,
        motive: &Bind,
        a: &Tm,
        r: &Dim,
        s: &Dim,
        cap: &Tm,
        sys: &System,
        elim: impl Fn(Tm) -> Tm,
    ) -> Tm {
        let z = Name::fresh("z");
        let partial = mk(Term::HCom(a.clone(), r.clone(), Dim::name(&z), cap.clone(), sys.clone()));
        let line = path_bind(&z, &motive.open_term(&partial));
        mk(Term::Com(line, r.clone(), s.clone(), elim(cap.clone()), map_tubes(sys, elim)))
    }

    fn add(&self, a: &Tm, b: &Tm) -> Outcome {
        let rebuild_l = |a: Tm| mk(Term::Add(a, b.clone()));
        match self.cong(a, "add.0", rebuild_l) {
            Outcome::Value => {}
            other => return other,
        }
        let a_val = Term::unloc(a);
        if let Term::HCom(ty, r, s, cap, sys) = a_val.as_ref() {
            let f = |n: Tm| mk(Term::Add(n, b.clone()));
            let out = mk(Term::HCom(ty.clone(), r.clone(), s.clone(), f(cap.clone()), map_tubes(sys, f)));
            return Outcome::Step(Stepped::at(out, Rule::AddHCom));
        }
        let Term::IntLit(i) = a_val.as_ref() else {
            return Outcome::Stuck(StuckReason::IllTyped("addition of a non-integer".into()));
        };
        let rebuild_r = |b: Tm| mk(Term::Add(a.clone(), b));
        match self.cong(b, "add.1", rebuild_r) {
            Outcome::Value => {}
            other => return other,
        }
        match Term::unloc(b).as_ref() {
            Term::IntLit(j) => match i.checked_add(*j) {
                Some(k) => Outcome::Step(Stepped::at(mk(Term::IntLit(k)), Rule::Add)),
                None => Outcome::Stuck(StuckReason::Unsupported("integer overflow".into())),
            },
            Term::HCom(ty, r, s, cap, sys) => {
                let f = |n: Tm| mk(Term::Add(a.clone(), n));
                let out = mk(Term::HCom(ty.clone(), r.clone(), s.clone(), f(cap.clone()), map_tubes(sys, f)));
                Outcome::Step(Stepped::at(out, Rule::AddHCom))
            }
            _ => Outcome::Stuck(StuckReason::IllTyped("addition of a non-integer".into())),
        }
    }

    /// Full normalization: weak-head evaluation, then recursively under every
    /// former. Tubes whose constraint is false are dropped and tubes with an
    /// endpoint constraint have it applied to their body.
    pub fn normalize(&self, m: &Tm) -> Result<Tm, EvalError> {
        let w = self.whnf(m)?;
        if w.parts().is_empty() {
            return Ok(w);
        }
        let out = mk(w.try_map_parts(&mut Normalizer { machine: self })?);
        Ok(if matches!(*out, Term::Add(..)) { linear_form(&out) } else { out })
    }

    /// One step of the normalization strategy of [`Machine::normalize`],
    /// anywhere in the term.
    pub fn deep_step(&self, m: &Tm) -> Result<Option<Stepped>, EvalError> {
        match self.step_in(m) {
            Outcome::Step(s) => return Ok(Some(s)),
            Outcome::Stuck(StuckReason::IllTyped(msg)) => {
                return Err(EvalError::Stuck { term: m.clone(), reason: StuckReason::IllTyped(msg) })
            }
            _ => {}
        }
        if m.parts().is_empty() {
            return Ok(None);
        }
        let mut finder = DeepStep { machine: self, found: None };
        let out = m.try_map_parts(&mut finder)?;
        Ok(finder.found.map(|(rule, path)| Stepped { term: mk(out), rule, path }))
    }
}

/// Rewrites a stuck sum as its atoms in order followed by one literal.
fn linear_form(t: &Tm) -> Tm {
    fn walk(t: &Tm, atoms: &mut Vec<Tm>, k: &mut Option<i64>) {
        match Term::unloc(t).as_ref() {
            Term::Add(a, b) => {
                walk(a, atoms, k);
                walk(b, atoms, k);
            }
            Term::IntLit(n) => *k = k.and_then(|k| k.checked_add(*n)),
            _ => atoms.push(t.clone()),
        }
    }
    let mut atoms = Vec::new();
    let mut k = Some(0);
    walk(t, &mut atoms, &mut k);
    let Some(k) = k else { return t.clone() };
    let lit = (k != 0 || atoms.is_empty()).then(|| mk(Term::IntLit(k)));
    atoms.into_iter().chain(lit).reduce(|a, b| mk(Term::Add(a, b))).expect("nonempty sum")
}

/// Drops false tubes and applies endpoint constraints to tube bodies.
/// Returns `None` when the system is already tidy.
fn tidy_system(sys: &System) -> Option<(System, Rule)> {
    if let Some(i) = sys.iter().position(|t| t.constraint.status() == Status::False) {
        let mut out = sys.clone();
        out.remove(i);
        return Some((out, Rule::TubeDrop));
    }
    for (i, t) in sys.iter().enumerate() {
        if let Some((x, e)) = endpoint_constraint(&t.constraint) {
            if crate::syntax::occurs(&t.line.body, &x) {
                let mut out = sys.clone();
                out[i].line = t.line.map_body(|b| subst_path(b, &e, &x));
                return Some((out, Rule::TubeRestrict));
            }
        }
    }
    None
}

fn endpoint_constraint(c: &Constraint) -> Option<(Name, Dim)> {
    match c {
        Constraint::PathEq(a, b) => match (a.as_name(), b.as_endpoint(), b.as_name(), a.as_endpoint()) {
            (Some(x), Some(_), _, _) => Some((x.clone(), b.clone())),
            (_, _, Some(x), Some(_)) => Some((x.clone(), a.clone())),
            _ => None,
        },
        Constraint::BridgeEq(a, e) => a.as_name().map(|x| (x.clone(), Dim::endpoint(*e))),
    }
}

fn tidy_all(sys: &System) -> System {
    let mut sys = sys.clone();
    while let Some((next, _)) = tidy_system(&sys) {
        sys = next;
    }
    sys
}

struct Normalizer<'m, 'a> {
    machine: &'m Machine<'a>,
}

impl PartMap<EvalError> for Normalizer<'_, '_> {
    fn term(&mut self, t: &Tm) -> Result<Tm, EvalError> {
        self.machine.normalize(t)
    }

    fn dim(&mut self, d: &Dim) -> Result<Dim, EvalError> {
        Ok(d.clone())
    }

    fn bind(&mut self, b: &Bind) -> Result<Bind, EvalError> {
        let (names, body) = b.unbind();
        Ok(b.rebind(&names, &self.machine.normalize(&body)?))
    }

    fn system(&mut self, sys: &System) -> Result<System, EvalError> {
        tidy_all(sys).iter().map(|t| Ok(Tube { constraint: t.constraint.clone(), line: self.bind(&t.line)? })).collect()
    }
}

struct DeepStep<'m, 'a> {
    machine: &'m Machine<'a>,
    found: Option<(Rule, Vec<&'static str>)>,
}

impl DeepStep<'_, '_> {
    fn child(&mut self, t: &Tm) -> Result<Tm, EvalError> {
        if self.found.is_some() {
            return Ok(t.clone());
        }
        match self.machine.deep_step(t)? {
            Some(s) => {
                let mut path = vec!["sub"];
                path.extend(s.path);
                self.found = Some((s.rule, path));
                Ok(s.term)
            }
            None => Ok(t.clone()),
        }
    }
}

impl PartMap<EvalError> for DeepStep<'_, '_> {
    fn term(&mut self, t: &Tm) -> Result<Tm, EvalError> {
        self.child(t)
    }

    fn dim(&mut self, d: &Dim) -> Result<Dim, EvalError> {
        Ok(d.clone())
    }

    fn bind(&mut self, b: &Bind) -> Result<Bind, EvalError> {
        if self.found.is_some() {
            return Ok(b.clone());
        }
        let (names, body) = b.unbind();
        let out = self.child(&body)?;
        if self.found.is_some() {
            Ok(b.rebind(&names, &out))
        } else {
            Ok(b.clone())
        }
    }

    fn system(&mut self, sys: &System) -> Result<System, EvalError> {
        if self.found.is_some() {
            return Ok(sys.clone());
        }
        if let Some((out, rule)) = tidy_system(sys) {
            self.found = Some((rule, vec!["sys"]));
            return Ok(out);
        }
        sys.iter().map(|t| Ok(Tube { constraint: t.constraint.clone(), line: self.bind(&t.line)? })).collect()
    }
}

/// Evaluates a closed term with a fresh signature-only machine.
pub fn eval(sig: &Signature, m: &Tm, fuel: u64) -> Result<Tm, EvalError> {
    let fuel = Fuel::new(fuel);
    Machine::new(sig, &fuel).eval(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::alpha_eq;

    fn tt() -> Tm {
        mk(Term::True)
    }

    fn ff() -> Tm {
        mk(Term::False)
    }

    #[test]
    fn identity_applied() {
        let sig = Signature::new();
        let a = Name::fresh("a");
        let m = Term::app(Term::lam(&a, &Term::var(&a)), tt());
        assert!(alpha_eq(&eval(&sig, &m, 100).unwrap(), &tt()));
    }

    #[test]
    fn sums_normalize_to_atoms_then_literal() {
        let sig = Signature::new();
        let fuel = Fuel::new(100);
        let n = Term::var(&Name::fresh("n"));
        let lit = |k| mk(Term::IntLit(k));
        let sum = |a, b| mk(Term::Add(a, b));
        let m = Machine::new(&sig, &fuel);
        let a = m.normalize(&sum(sum(n.clone(), lit(2)), lit(1))).unwrap();
        let b = m.normalize(&sum(sum(n.clone(), lit(1)), lit(2))).unwrap();
        assert!(alpha_eq(&a, &b));
        assert!(alpha_eq(&a, &sum(n.clone(), lit(3))));
        assert!(alpha_eq(&m.normalize(&sum(sum(n.clone(), lit(1)), lit(-1))).unwrap(), &n));
    }

    #[test]
    fn gel_with_variable_index_is_a_value() {
        let sig = Signature::new();
        let x = Name::fresh("x");
        let w = Name::fresh("w");
        let g = mk(Term::GelIn(Dim::name(&x), tt(), ff(), Term::var(&w)));
        assert!(isval(&g));
        assert!(alpha_eq(&eval(&sig, &g, 10).unwrap(), &g));
    }

    #[test]
    fn constant_line_coercion() {
        let sig = Signature::new();
        let m = mk(Term::Coe(Bind::constant(&[Sort::Path], mk(Term::Bool)), Dim::Zero, Dim::One, tt()));
        assert!(alpha_eq(&eval(&sig, &m, 10).unwrap(), &tt()));
    }

    #[test]
    fn fhcom_cases() {
        let sig = Signature::new();
        let x = Name::fresh("x");
        let tube = |c, b: Tm| Tube { constraint: c, line: Bind::constant(&[Sort::Path], b) };
        let refl = mk(Term::HCom(mk(Term::Bool), Dim::name(&x), Dim::name(&x), tt(), vec![]));
        assert!(alpha_eq(&eval(&sig, &refl, 10).unwrap(), &tt()));
        let sel = mk(Term::HCom(
            mk(Term::Bool),
            Dim::Zero,
            Dim::One,
            tt(),
            vec![
                tube(Constraint::PathEq(Dim::name(&x), Dim::Zero), tt()),
                tube(Constraint::PathEq(Dim::One, Dim::One), ff()),
            ],
        ));
        assert!(alpha_eq(&eval(&sig, &sel, 10).unwrap(), &ff()));
        let val = mk(Term::HCom(
            mk(Term::Bool),
            Dim::Zero,
            Dim::One,
            tt(),
            vec![tube(Constraint::PathEq(Dim::name(&x), Dim::Zero), tt())],
        ));
        assert!(isval(&val));
    }

    #[test]
    fn com_expansion_is_syntactic() {
        let line = Bind::constant(&[Sort::Path], mk(Term::Bool));
        let c = com(&line, &Dim::Zero, &Dim::One, &tt(), &vec![]);
        let expect = mk(Term::HCom(
            mk(Term::Bool),
            Dim::Zero,
            Dim::One,
            mk(Term::Coe(line.clone(), Dim::Zero, Dim::One, tt())),
            vec![],
        ));
        assert!(alpha_eq(&c, &expect));
    }

    #[test]
    fn fuel_is_enforced() {
        let sig = Signature::new();
        let x = Name::fresh("x");
        let w = Term::lam(&x, &Term::app(Term::var(&x), Term::var(&x)));
        let omega = Term::app(w.clone(), w);
        assert!(matches!(eval(&sig, &omega, 50), Err(EvalError::FuelExhausted(50))));
    }

    #[test]
    fn zmod_endpoints() {
        let sig = Signature::new();
        let m = mk(Term::ZMod(mk(Term::IntLit(3)), Dim::One));
        let fuel = Fuel::default();
        let out = Machine::new(&sig, &fuel).normalize(&m).unwrap();
        assert!(alpha_eq(&out, &mk(Term::ZIn(mk(Term::IntLit(5))))));
    }
}
