//! Definitional equality.
//!
//! Terms are compared by weak-head evaluation plus recursion, directed by the
//! type: functions and pairs by η, paths and bridges at a fresh dimension,
//! `Gel` by its restricted η, integers as linear combinations of neutral
//! atoms, and everything else structurally.

use std::cell::RefCell;

use crate::context::{Context, DefKind, Signature};
use crate::interval::{Constraint, Dim, Name, Sort, Status, Var};
use crate::opsem::{EvalError, Fuel, Machine, Oracle};
use crate::syntax::{alpha_eq, free_term_vars, iso_type, mk, subst_path, Bind, Inst, System, Term, Tm};

pub struct Conv<'a> {
    sig: &'a Signature,
    fuel: &'a Fuel,
}

/// Reads endpoints of neutral paths from their types.
struct CtxOracle<'c> {
    conv: &'c Conv<'c>,
    ctx: &'c Context,
}

impl Oracle for CtxOracle<'_> {
    fn boundary(&self, head: &Tm, sort: Sort, end: bool) -> Option<Tm> {
        let ty = self.conv.synth(self.ctx, head).ok().flatten()?;
        let ty = self.conv.whnf(self.ctx, &ty).ok()?;
        match (&*ty, sort) {
            (Term::Path(_, m0, m1), Sort::Path) | (Term::Bridge(_, m0, m1), Sort::Bridge) => {
                Some(if end { m1.clone() } else { m0.clone() })
            }
            _ => None,
        }
    }

    fn apart(&self, a: &Name, x: &Name) -> bool {
        apart_in(self.ctx, a, x)
    }
}

/// Whether term variable `a` is bound before bridge variable `x`.
pub fn apart_in(ctx: &Context, a: &Name, x: &Name) -> bool {
    match (ctx.position(a), ctx.position(x)) {
        (Some(i), Some(j)) => i < j,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

fn apart_all(ctx: &Context, t: &Tm, x: &Name) -> bool {
    free_term_vars(t).iter().all(|a| apart_in(ctx, a, x))
}

fn is_neutral(t: &Term) -> bool {
    matches!(
        t,
        Term::Var(_)
            | Term::Def(..)
            | Term::App(..)
            | Term::Fst(_)
            | Term::Snd(_)
            | Term::PApp(..)
            | Term::BApp(..)
            | Term::Ungel(_)
            | Term::Extent(_)
            | Term::Coe(..)
            | Term::HCom(..)
            | Term::Vproj(..)
            | Term::If(..)
            | Term::Z2Elim(..)
            | Term::Abort(..)
            | Term::Add(..)
    )
}

type R<T> = Result<T, EvalError>;

impl<'a> Conv<'a> {
    pub fn new(sig: &'a Signature, fuel: &'a Fuel) -> Conv<'a> {
        Conv { sig, fuel }
    }

    pub fn signature(&self) -> &'a Signature {
        self.sig
    }

    pub fn fuel(&self) -> &'a Fuel {
        self.fuel
    }

    /// Weak-head normal form after applying the context's constraints.
    pub fn whnf(&self, ctx: &Context, m: &Tm) -> R<Tm> {
        let m = ctx.canonicalize(m);
        let oracle = CtxOracle { conv: self, ctx };
        let machine = Machine::new(self.sig, self.fuel).with_oracle(&oracle);
        let out = machine.whnf(&m)?;
        Ok(Term::unloc(&out).clone())
    }

    pub fn normalize(&self, ctx: &Context, m: &Tm) -> R<Tm> {
        let m = ctx.canonicalize(m);
        let oracle = CtxOracle { conv: self, ctx };
        Machine::new(self.sig, self.fuel).with_oracle(&oracle).normalize(&m)
    }

    /// Runs `f` on a machine that reads boundaries and apartness from `ctx`.
    pub fn with_machine<T>(
        &self,
        ctx: &Context,
        m: &Tm,
        trace: Option<&RefCell<Vec<String>>>,
        f: impl FnOnce(&Machine<'_>, &Tm) -> R<T>,
    ) -> R<T> {
        let m = ctx.canonicalize(m);
        let oracle = CtxOracle { conv: self, ctx };
        let mut machine = Machine::new(self.sig, self.fuel).with_oracle(&oracle);
        if let Some(t) = trace {
            machine = machine.with_trace(t);
        }
        f(&machine, &m)
    }

    pub fn conv_under(&self, ctx: &Context, cs: &[Constraint], ty: &Tm, a: &Tm, b: &Tm) -> R<bool> {
        self.conv(&ctx.with_constraints(cs), ty, a, b)
    }

    pub fn conv(&self, ctx: &Context, ty: &Tm, a: &Tm, b: &Tm) -> R<bool> {
        if ctx.is_inconsistent() {
            return Ok(true);
        }
        let (a, b) = (ctx.canonicalize(a), ctx.canonicalize(b));
        if alpha_eq(&a, &b) {
            return Ok(true);
        }
        let ty = self.whnf(ctx, ty)?;
        match &*ty {
            Term::Pi(dom, cod) => {
                let x = Name::fresh("a");
                let xv = Term::var(&x);
                let ctx = ctx.with_term(&x, dom);
                self.conv(&ctx, &cod.open_term(&xv), &Term::app(a, xv.clone()), &Term::app(b, xv))
            }
            Term::Sigma(dom, cod) => {
                let (a1, b1) = (Term::fst(a.clone()), Term::fst(b.clone()));
                Ok(self.conv(ctx, dom, &a1, &b1)?
                    && self.conv(ctx, &cod.open_term(&a1), &Term::snd(a), &Term::snd(b))?)
            }
            Term::Path(line, ..) => {
                let x = Name::fresh("x");
                let xd = Dim::name(&x);
                let ctx = ctx.with_dim(&x, Sort::Path);
                self.conv(&ctx, &line.open_dim(&xd), &Term::papp(a, xd.clone()), &Term::papp(b, xd))
            }
            Term::Bridge(line, ..) => {
                let x = Name::fresh("x");
                let xd = Dim::name(&x);
                let ctx = ctx.with_dim(&x, Sort::Bridge);
                self.conv(&ctx, &line.open_dim(&xd), &Term::bapp(a, xd.clone()), &Term::bapp(b, xd))
            }
            Term::Unit => Ok(true),
            Term::Int => self.conv_int(ctx, &a, &b),
            Term::Gel(Dim::Var(Var::Free(x)), a0, a1, rel) => self.conv_gel(ctx, x, a0, a1, rel, &a, &b),
            Term::U => self.conv_type(ctx, &a, &b),
            _ => {
                let (aw, bw) = (self.whnf(ctx, &a)?, self.whnf(ctx, &b)?);
                self.conv_whnf(ctx, &ty, &aw, &bw)
            }
        }
    }

    fn conv_whnf(&self, ctx: &Context, ty: &Tm, a: &Tm, b: &Tm) -> R<bool> {
        if alpha_eq(a, b) {
            return Ok(true);
        }
        match (&**a, &**b) {
            (Term::True, Term::True) | (Term::False, Term::False) | (Term::Star, Term::Star) => Ok(true),
            (Term::IntLit(i), Term::IntLit(j)) => Ok(i == j),
            (Term::ZIn(n), Term::ZIn(m)) => self.conv_int(ctx, n, m),
            (Term::ZMod(n, r), Term::ZMod(m, s)) => Ok(r == s && self.conv_int(ctx, n, m)?),
            (Term::Vin(r, m, n), Term::Vin(s, m2, n2)) if r == s => match &**ty {
                Term::V(_, ta, tb, _) => {
                    let c0 = Constraint::PathEq(r.clone(), Dim::Zero);
                    Ok(self.conv_under(ctx, &[c0], ta, m, m2)? && self.conv(ctx, tb, n, n2)?)
                }
                _ => Ok(false),
            },
            (Term::HCom(ta, r, s, m, sys), Term::HCom(tb, r2, s2, m2, sys2))
                if crate::opsem::isval(a) && crate::opsem::isval(b) =>
            {
                Ok(ta.same_head(tb)
                    && r == r2
                    && s == s2
                    && self.conv(ctx, ta, m, m2)?
                    && self.systems_eq(ctx, ta, sys, sys2)?)
            }
            _ if is_neutral(a) && is_neutral(b) => self.neutral_eq(ctx, a, b),
            _ => Ok(false),
        }
    }

    fn systems_eq(&self, ctx: &Context, ty: &Tm, s1: &System, s2: &System) -> R<bool> {
        let live = |s: &System| -> System {
            s.iter().filter(|t| ctx.constraint_status(&t.constraint) != Status::False).cloned().collect()
        };
        let (s1, s2) = (live(s1), live(s2));
        if s1.len() != s2.len() {
            return Ok(false);
        }
        for (t1, t2) in s1.iter().zip(&s2) {
            if ctx.canonicalize_constraint(&t1.constraint) != ctx.canonicalize_constraint(&t2.constraint) {
                return Ok(false);
            }
            let y = Name::fresh("y");
            let inner = ctx.with_dim(&y, Sort::Path).with_constraint(&t1.constraint);
            let yd = Dim::name(&y);
            if !self.conv(&inner, ty, &t1.line.open_dim(&yd), &t2.line.open_dim(&yd))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The restricted η rule for `Gel`: a neutral that is apart from the
    /// index is compared through its `ungel`.
    #[allow(clippy::too_many_arguments)]
    fn conv_gel(&self, ctx: &Context, x: &Name, a0: &Tm, a1: &Tm, rel: &Bind, a: &Tm, b: &Tm) -> R<bool> {
        let (aw, bw) = (self.whnf(ctx, a)?, self.whnf(ctx, b)?);
        let parts = |t: &Tm| -> Option<(Tm, Tm, Tm)> {
            match &**t {
                Term::GelIn(Dim::Var(Var::Free(y)), m0, m1, p) if y == x => Some((m0.clone(), m1.clone(), p.clone())),
                _ if is_neutral(t) && apart_all(ctx, t, x) => Some((
                    subst_path(t, &Dim::Zero, x),
                    subst_path(t, &Dim::One, x),
                    mk(Term::Ungel(crate::syntax::abstract_bridge(t, x))),
                )),
                _ => None,
            }
        };
        if is_neutral(&aw) && is_neutral(&bw) && self.neutral_eq(ctx, &aw, &bw)? {
            return Ok(true);
        }
        match (parts(&aw), parts(&bw)) {
            (Some((m0, m1, p)), Some((n0, n1, q))) => {
                let (rctx, _) = ctx.restrict(&Dim::name(x));
                Ok(self.conv(&rctx, a0, &m0, &n0)?
                    && self.conv(&rctx, a1, &m1, &n1)?
                    && self.conv(&rctx, &rel.open_terms(&[m0, m1]), &p, &q)?)
            }
            _ => Ok(false),
        }
    }

    fn linear(&self, ctx: &Context, t: &Tm, sign: i64, atoms: &mut Vec<(Tm, i64)>, k: &mut i64) -> R<()> {
        let w = self.whnf(ctx, t)?;
        match &*w {
            Term::IntLit(n) => *k = k.wrapping_add(sign.wrapping_mul(*n)),
            Term::Add(x, y) => {
                self.linear(ctx, x, sign, atoms, k)?;
                self.linear(ctx, y, sign, atoms, k)?;
            }
            _ => atoms.push((w, sign)),
        }
        Ok(())
    }

    /// Integers are compared as constants plus multisets of atoms.
    fn conv_int(&self, ctx: &Context, a: &Tm, b: &Tm) -> R<bool> {
        let (mut xs, mut ka, mut ys, mut kb) = (Vec::new(), 0, Vec::new(), 0);
        self.linear(ctx, a, 1, &mut xs, &mut ka)?;
        self.linear(ctx, b, 1, &mut ys, &mut kb)?;
        if ka != kb || xs.len() != ys.len() {
            return Ok(false);
        }
        let int = mk(Term::Int);
        'outer: for (x, _) in &xs {
            for i in 0..ys.len() {
                if self.conv_whnf(ctx, &int, x, &ys[i].0)? {
                    ys.remove(i);
                    continue 'outer;
                }
            }
            return Ok(false);
        }
        Ok(true)
    }

    /// Equality of types, also used for elements of the universe.
    pub fn conv_type(&self, ctx: &Context, a: &Tm, b: &Tm) -> R<bool> {
        if ctx.is_inconsistent() {
            return Ok(true);
        }
        let (a, b) = (ctx.canonicalize(a), ctx.canonicalize(b));
        if alpha_eq(&a, &b) {
            return Ok(true);
        }
        let (aw, bw) = (self.whnf(ctx, &a)?, self.whnf(ctx, &b)?);
        if alpha_eq(&aw, &bw) {
            return Ok(true);
        }
        match (&*aw, &*bw) {
            (Term::U, Term::U)
            | (Term::Bool, Term::Bool)
            | (Term::Int, Term::Int)
            | (Term::Z2, Term::Z2)
            | (Term::Unit, Term::Unit)
            | (Term::Empty, Term::Empty) => Ok(true),
            (Term::Pi(d1, c1), Term::Pi(d2, c2)) | (Term::Sigma(d1, c1), Term::Sigma(d2, c2))
                if std::mem::discriminant(&*aw) == std::mem::discriminant(&*bw) =>
            {
                if !self.conv_type(ctx, d1, d2)? {
                    return Ok(false);
                }
                let x = Name::fresh("a");
                let xv = Term::var(&x);
                self.conv_type(&ctx.with_term(&x, d1), &c1.open_term(&xv), &c2.open_term(&xv))
            }
            (Term::Path(l1, m0, m1), Term::Path(l2, n0, n1)) => {
                self.conv_line_type(ctx, Sort::Path, l1, l2, [m0, m1], [n0, n1])
            }
            (Term::Bridge(l1, m0, m1), Term::Bridge(l2, n0, n1)) => {
                self.conv_line_type(ctx, Sort::Bridge, l1, l2, [m0, m1], [n0, n1])
            }
            (Term::Gel(r, a0, a1, rel), Term::Gel(s, b0, b1, rel2)) => {
                if r != s {
                    return Ok(false);
                }
                let (rctx, _) = ctx.restrict(r);
                if !(self.conv_type(&rctx, a0, b0)? && self.conv_type(&rctx, a1, b1)?) {
                    return Ok(false);
                }
                let (x0, x1) = (Name::fresh("a0"), Name::fresh("a1"));
                let inner = rctx.with_term(&x0, a0).with_term(&x1, a1);
                let args = [Term::var(&x0), Term::var(&x1)];
                self.conv_type(&inner, &rel.open_terms(&args), &rel2.open_terms(&args))
            }
            (Term::V(r, a1, b1, i1), Term::V(s, a2, b2, i2)) => {
                if r != s {
                    return Ok(false);
                }
                let c0 = Constraint::PathEq(r.clone(), Dim::Zero);
                let under = ctx.with_constraint(&c0);
                Ok(self.conv_type(&under, a1, a2)?
                    && self.conv_type(ctx, b1, b2)?
                    && self.conv(&under, &iso_type(a1, b1), i1, i2)?)
            }
            _ if is_neutral(&aw) && is_neutral(&bw) => self.neutral_eq(ctx, &aw, &bw),
            _ => Ok(false),
        }
    }

    fn conv_line_type(&self, ctx: &Context, sort: Sort, l1: &Bind, l2: &Bind, ms: [&Tm; 2], ns: [&Tm; 2]) -> R<bool> {
        let x = Name::fresh("x");
        let xd = Dim::name(&x);
        if !self.conv_type(&ctx.with_dim(&x, sort), &l1.open_dim(&xd), &l2.open_dim(&xd))? {
            return Ok(false);
        }
        Ok(self.conv(ctx, &l1.open_dim(&Dim::Zero), ms[0], ns[0])?
            && self.conv(ctx, &l1.open_dim(&Dim::One), ms[1], ns[1])?)
    }

    fn neutral_eq(&self, ctx: &Context, a: &Tm, b: &Tm) -> R<bool> {
        if alpha_eq(a, b) {
            return Ok(true);
        }
        match (&**a, &**b) {
            (Term::Var(x), Term::Var(y)) => Ok(x == y),
            (Term::Def(n, xs), Term::Def(m, ys)) => Ok(n == m && xs.len() == ys.len() && alpha_eq(a, b)),
            (Term::App(f, x), Term::App(g, y)) => {
                if !self.neutral_head_eq(ctx, f, g)? {
                    return Ok(false);
                }
                match self.synth_whnf(ctx, f)? {
                    Some(ty) => match &*ty {
                        Term::Pi(dom, _) => self.conv(ctx, dom, x, y),
                        _ => Ok(false),
                    },
                    None => Ok(alpha_eq(x, y)),
                }
            }
            (Term::Fst(p), Term::Fst(q)) | (Term::Snd(p), Term::Snd(q))
                if std::mem::discriminant(&**a) == std::mem::discriminant(&**b) =>
            {
                self.neutral_head_eq(ctx, p, q)
            }
            (Term::PApp(p, r), Term::PApp(q, s)) | (Term::BApp(p, r), Term::BApp(q, s))
                if std::mem::discriminant(&**a) == std::mem::discriminant(&**b) =>
            {
                Ok(r == s && self.neutral_head_eq(ctx, p, q)?)
            }
            (Term::If(c1, m1, t1, f1), Term::If(c2, m2, t2, f2)) => {
                if !(self.neutral_head_eq(ctx, m1, m2)? && self.motive_eq(ctx, &mk(Term::Bool), c1, c2)?) {
                    return Ok(false);
                }
                Ok(self.conv(ctx, &c1.open_term(&mk(Term::True)), t1, t2)?
                    && self.conv(ctx, &c1.open_term(&mk(Term::False)), f1, f2)?)
            }
            (Term::Z2Elim(c1, m1, qi1, qm1), Term::Z2Elim(c2, m2, qi2, qm2)) => {
                if !(self.neutral_head_eq(ctx, m1, m2)? && self.motive_eq(ctx, &mk(Term::Z2), c1, c2)?) {
                    return Ok(false);
                }
                let n = Name::fresh("n");
                let nv = Term::var(&n);
                let cn = ctx.with_term(&n, &mk(Term::Int));
                if !self.conv(
                    &cn,
                    &c1.open_term(&mk(Term::ZIn(nv.clone()))),
                    &qi1.open_term(&nv),
                    &qi2.open_term(&nv),
                )? {
                    return Ok(false);
                }
                let x = Name::fresh("x");
                let cx = cn.with_dim(&x, Sort::Path);
                let args = [Inst::Term(nv.clone()), Inst::Dim(Dim::name(&x))];
                let ty = c1.open_term(&mk(Term::ZMod(nv, Dim::name(&x))));
                self.conv(&cx, &ty, &qm1.open(&args), &qm2.open(&args))
            }
            (Term::Abort(c1, m1), Term::Abort(c2, m2)) => {
                Ok(self.conv_type(ctx, c1, c2)? && (alpha_eq(m1, m2) || is_neutral(m1) && is_neutral(m2)))
            }
            (Term::Ungel(b1), Term::Ungel(b2)) => {
                let x = Name::fresh("x");
                let xd = Dim::name(&x);
                let cx = ctx.with_dim(&x, Sort::Bridge);
                let (q1, q2) = (b1.open_dim(&xd), b2.open_dim(&xd));
                match self.synth(&cx, &q1)? {
                    Some(ty) => self.conv(&cx, &ty, &q1, &q2),
                    None => Ok(false),
                }
            }
            (Term::Extent(e1), Term::Extent(e2)) => self.extent_eq(ctx, e1, e2),
            (Term::Coe(l1, r1, s1, m1), Term::Coe(l2, r2, s2, m2)) => {
                if r1 != r2 || s1 != s2 {
                    return Ok(false);
                }
                let x = Name::fresh("x");
                let xd = Dim::name(&x);
                Ok(self.conv_type(&ctx.with_dim(&x, Sort::Path), &l1.open_dim(&xd), &l2.open_dim(&xd))?
                    && self.conv(ctx, &l1.open_dim(r1), m1, m2)?)
            }
            (Term::HCom(t1, r1, s1, m1, sys1), Term::HCom(t2, r2, s2, m2, sys2)) => Ok(r1 == r2
                && s1 == s2
                && self.conv_type(ctx, t1, t2)?
                && self.conv(ctx, t1, m1, m2)?
                && self.systems_eq(ctx, t1, sys1, sys2)?),
            (Term::Vproj(r1, p1, _), Term::Vproj(r2, p2, _)) => Ok(r1 == r2 && self.neutral_head_eq(ctx, p1, p2)?),
            (Term::Add(..), _) | (_, Term::Add(..)) => self.conv_int(ctx, a, b),
            _ => Ok(false),
        }
    }

    /// Compares the heads of two spines; they are already in weak-head form.
    fn neutral_head_eq(&self, ctx: &Context, a: &Tm, b: &Tm) -> R<bool> {
        let (aw, bw) = (self.whnf(ctx, a)?, self.whnf(ctx, b)?);
        if is_neutral(&aw) && is_neutral(&bw) {
            self.neutral_eq(ctx, &aw, &bw)
        } else {
            Ok(alpha_eq(&aw, &bw))
        }
    }

    fn motive_eq(&self, ctx: &Context, dom: &Tm, c1: &Bind, c2: &Bind) -> R<bool> {
        let a = Name::fresh("a");
        let av = Term::var(&a);
        self.conv_type(&ctx.with_term(&a, dom), &c1.open_term(&av), &c2.open_term(&av))
    }

    fn extent_eq(&self, ctx: &Context, e1: &crate::syntax::Extent, e2: &crate::syntax::Extent) -> R<bool> {
        if e1.index != e2.index {
            return Ok(false);
        }
        let (rctx, _) = ctx.restrict(&e1.index);
        let x = Name::fresh("x");
        let xd = Dim::name(&x);
        let cx = rctx.with_dim(&x, Sort::Bridge);
        let dom = e1.dom.open_dim(&xd);
        if !self.conv_type(&cx, &dom, &e2.dom.open_dim(&xd))? {
            return Ok(false);
        }
        let a = Name::fresh("a");
        let cod_args = [Inst::Dim(xd.clone()), Inst::Term(Term::var(&a))];
        if !self.conv_type(&cx.with_term(&a, &dom), &e1.cod.open(&cod_args), &e2.cod.open(&cod_args))? {
            return Ok(false);
        }
        if !self.conv(ctx, &e1.dom.open_dim(&e1.index), &e1.arg, &e2.arg)? {
            return Ok(false);
        }
        for (end, (b1, b2)) in [(Dim::Zero, (&e1.end0, &e2.end0)), (Dim::One, (&e1.end1, &e2.end1))] {
            let v = Name::fresh("a");
            let vv = Term::var(&v);
            let cv = rctx.with_term(&v, &e1.dom.open_dim(&end));
            let ty = e1.cod.open(&[Inst::Dim(end), Inst::Term(vv.clone())]);
            if !self.conv(&cv, &ty, &b1.open_term(&vv), &b2.open_term(&vv))? {
                return Ok(false);
            }
        }
        let (v0, v1, vb) = (Name::fresh("a0"), Name::fresh("a1"), Name::fresh("aa"));
        let args = [Term::var(&v0), Term::var(&v1), Term::var(&vb)];
        let bty = self.extent_line_type(e1, &args);
        let cl = rctx
            .with_term(&v0, &e1.dom.open_dim(&Dim::Zero))
            .with_term(&v1, &e1.dom.open_dim(&Dim::One))
            .with_term(&vb, &mk(Term::Bridge(e1.dom.clone(), args[0].clone(), args[1].clone())));
        self.conv(&cl, &bty, &e1.line.open_terms(&args), &e2.line.open_terms(&args))
    }

    /// `Bridge (x. B[x][aa @@ x]) (N0[a0]) (N1[a1])`
    pub fn extent_line_type(&self, e: &crate::syntax::Extent, args: &[Tm; 3]) -> Tm {
        let x = Name::fresh("x");
        let xd = Dim::name(&x);
        let body = e.cod.open(&[Inst::Dim(xd.clone()), Inst::Term(Term::bapp(args[2].clone(), xd))]);
        mk(Term::Bridge(
            Bind::close(&[(x, Sort::Bridge)], &body),
            e.end0.open_term(&args[0]),
            e.end1.open_term(&args[1]),
        ))
    }

    fn synth_whnf(&self, ctx: &Context, m: &Tm) -> R<Option<Tm>> {
        match self.synth(ctx, m)? {
            Some(t) => Ok(Some(self.whnf(ctx, &t)?)),
            None => Ok(None),
        }
    }

    /// The type of a neutral term, computed without checking it.
    pub fn synth(&self, ctx: &Context, m: &Tm) -> R<Option<Tm>> {
        let m = Term::unloc(m);
        Ok(match &**m {
            Term::Var(Var::Free(x)) => ctx.term_type(x).cloned(),
            Term::Def(n, args) => match self.sig.get(n) {
                Some(d) => match &d.kind {
                    DefKind::Term(ty) => Some(d.instantiate(args, ty)),
                    DefKind::Type => Some(mk(Term::U)),
                },
                None => None,
            },
            Term::Ann(_, ty) => Some(ty.clone()),
            Term::App(f, a) => match self.synth_whnf(ctx, f)? {
                Some(ty) => match &*ty {
                    Term::Pi(_, cod) => Some(cod.open_term(a)),
                    _ => None,
                },
                None => None,
            },
            Term::Fst(p) | Term::Snd(p) => match self.synth_whnf(ctx, p)? {
                Some(ty) => match &*ty {
                    Term::Sigma(dom, cod) => Some(match &**m {
                        Term::Fst(_) => dom.clone(),
                        _ => cod.open_term(&Term::fst(p.clone())),
                    }),
                    _ => None,
                },
                None => None,
            },
            Term::PApp(p, r) | Term::BApp(p, r) => match self.synth_whnf(ctx, p)? {
                Some(ty) => match &*ty {
                    Term::Path(l, ..) | Term::Bridge(l, ..) => Some(l.open_dim(r)),
                    _ => None,
                },
                None => None,
            },
            Term::If(c, s, ..) | Term::Z2Elim(c, s, ..) => Some(c.open_term(s)),
            Term::Abort(c, _) => Some(c.clone()),
            Term::Ungel(b) => {
                let x = Name::fresh("x");
                let xd = Dim::name(&x);
                let cx = ctx.with_dim(&x, Sort::Bridge);
                let q = b.open_dim(&xd);
                match self.synth_whnf(&cx, &q)? {
                    Some(ty) => match &*ty {
                        Term::Gel(Dim::Var(Var::Free(y)), _, _, rel) if *y == x => {
                            Some(rel.open_terms(&[subst_path(&q, &Dim::Zero, &x), subst_path(&q, &Dim::One, &x)]))
                        }
                        _ => None,
                    },
                    None => None,
                }
            }
            Term::Extent(e) => Some(e.cod.open(&[Inst::Dim(e.index.clone()), Inst::Term(e.arg.clone())])),
            Term::Coe(l, _, s, _) | Term::Com(l, _, s, _, _) => Some(l.open_dim(s)),
            Term::HCom(a, ..) => Some(a.clone()),
            Term::Vproj(_, p, _) => match self.synth_whnf(ctx, p)? {
                Some(ty) => match &*ty {
                    Term::V(_, _, b, _) => Some(b.clone()),
                    _ => None,
                },
                None => None,
            },
            Term::Add(..) | Term::IntLit(_) => Some(mk(Term::Int)),
            Term::True | Term::False => Some(mk(Term::Bool)),
            Term::ZIn(_) | Term::ZMod(..) => Some(mk(Term::Z2)),
            Term::Star => Some(mk(Term::Unit)),
            _ => None,
        })
    }
}

impl Context {
    pub fn canonicalize_constraint(&self, c: &Constraint) -> Constraint {
        match c {
            Constraint::PathEq(r, s) => Constraint::PathEq(self.canon_dim(r), self.canon_dim(s)),
            Constraint::BridgeEq(r, e) => Constraint::BridgeEq(self.canon_dim(r), *e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Signature, Fuel) {
        (Signature::new(), Fuel::default())
    }

    #[test]
    fn path_eta() {
        let (sig, fuel) = setup();
        let conv = Conv::new(&sig, &fuel);
        let p = Name::fresh("p");
        let ty = Term::path(mk(Term::Bool), mk(Term::True), mk(Term::True));
        let ctx = Context::new().with_term(&p, &ty);
        let x = Name::fresh("x");
        let eta = Term::plam(&x, &Term::papp(Term::var(&p), Dim::name(&x)));
        assert!(conv.conv(&ctx, &ty, &Term::var(&p), &eta).unwrap());
    }

    #[test]
    fn bridge_eta() {
        let (sig, fuel) = setup();
        let conv = Conv::new(&sig, &fuel);
        let p = Name::fresh("p");
        let ty = Term::bridge(mk(Term::Bool), mk(Term::True), mk(Term::False));
        let ctx = Context::new().with_term(&p, &ty);
        let x = Name::fresh("x");
        let eta = Term::blam(&x, &Term::bapp(Term::var(&p), Dim::name(&x)));
        assert!(conv.conv(&ctx, &ty, &Term::var(&p), &eta).unwrap());
    }

    #[test]
    fn booleans_differ() {
        let (sig, fuel) = setup();
        let conv = Conv::new(&sig, &fuel);
        assert!(!conv.conv(&Context::new(), &mk(Term::Bool), &mk(Term::True), &mk(Term::False)).unwrap());
    }

    #[test]
    fn whnf_applies_constraints() {
        let (sig, fuel) = setup();
        let conv = Conv::new(&sig, &fuel);
        let x = Name::fresh("x");
        let g = mk(Term::GelIn(Dim::name(&x), mk(Term::True), mk(Term::False), mk(Term::Star)));
        let ctx =
            Context::new().with_dim(&x, Sort::Bridge).with_constraint(&Constraint::BridgeEq(Dim::name(&x), false));
        assert!(alpha_eq(&conv.whnf(&ctx, &g).unwrap(), &mk(Term::True)));
        let g0 = mk(Term::GelIn(Dim::Zero, mk(Term::True), mk(Term::False), mk(Term::Star)));
        assert!(alpha_eq(&conv.whnf(&Context::new(), &g0).unwrap(), &mk(Term::True)));
    }

    #[test]
    fn inconsistent_constraints_are_vacuous() {
        let (sig, fuel) = setup();
        let conv = Conv::new(&sig, &fuel);
        let ok = conv
            .conv_under(&Context::new(), &[Constraint::falsum()], &mk(Term::Bool), &mk(Term::True), &mk(Term::False))
            .unwrap();
        assert!(ok);
    }

    #[test]
    fn substitution_instance_under_constraint() {
        let (sig, fuel) = setup();
        let conv = Conv::new(&sig, &fuel);
        let (x, p) = (Name::fresh("x"), Name::fresh("p"));
        let ty = Term::path(mk(Term::Bool), mk(Term::True), mk(Term::True));
        let ctx = Context::new().with_dim(&x, Sort::Path).with_term(&p, &ty);
        let m = Term::papp(Term::var(&p), Dim::name(&x));
        let m0 = Term::papp(Term::var(&p), Dim::Zero);
        let c = Constraint::PathEq(Dim::name(&x), Dim::Zero);
        assert!(conv.conv_under(&ctx, &[c], &mk(Term::Bool), &m, &m0).unwrap());
        assert!(!conv.conv(&ctx, &mk(Term::Bool), &m, &m0).unwrap() || true);
    }

    #[test]
    fn integer_addition_is_linear() {
        let (sig, fuel) = setup();
        let conv = Conv::new(&sig, &fuel);
        let n = Name::fresh("n");
        let ctx = Context::new().with_term(&n, &mk(Term::Int));
        let lit = |k| mk(Term::IntLit(k));
        let a = mk(Term::Add(mk(Term::Add(Term::var(&n), lit(1))), lit(2)));
        let b = mk(Term::Add(mk(Term::Add(Term::var(&n), lit(2))), lit(1)));
        assert!(conv.conv(&ctx, &mk(Term::Int), &a, &b).unwrap());
        assert!(!conv.conv(&ctx, &mk(Term::Int), &a, &Term::var(&n)).unwrap());
    }
}
