//! Bidirectional type checking.
//!
//! `infer` synthesizes types for eliminators and annotated forms, `check`
//! handles introduction forms, and `check_type` accepts types, including
//! large ones such as `Pi (A : U) A -> A` that are not elements of `U`.

use crate::context::{Context, DefKind, Param, Signature};
use crate::conversion::{apart_in, Conv};
use crate::diagnostic::{Code, Diagnostic};
use crate::frontend::print::{print, print_constraint, print_dim};
use crate::interval::{Constraint, Dim, Name, Sort, Var};
use crate::opsem::Fuel;
use crate::syntax::{
    free_names, free_term_vars, iso_type, mk, occurs, subst_path, Arg, Bind, Extent, Inst, System, Term, Tm,
};

type R<T> = Result<T, Diagnostic>;

fn err<T>(code: Code, msg: impl Into<String>) -> R<T> {
    Err(Diagnostic::new(code, msg))
}

pub struct Checker<'a> {
    conv: Conv<'a>,
}

impl<'a> Checker<'a> {
    pub fn new(sig: &'a Signature, fuel: &'a Fuel) -> Checker<'a> {
        Checker { conv: Conv::new(sig, fuel) }
    }

    pub fn conv(&self) -> &Conv<'a> {
        &self.conv
    }

    fn sig(&self) -> &'a Signature {
        self.conv.signature()
    }

    fn whnf(&self, ctx: &Context, t: &Tm) -> R<Tm> {
        Ok(self.conv.whnf(ctx, t)?)
    }

    fn eq(&self, ctx: &Context, ty: &Tm, a: &Tm, b: &Tm) -> R<bool> {
        Ok(self.conv.conv(ctx, ty, a, b)?)
    }

    fn eq_type(&self, ctx: &Context, a: &Tm, b: &Tm) -> R<bool> {
        Ok(self.conv.conv_type(ctx, a, b)?)
    }

    pub fn check_dim(&self, ctx: &Context, d: &Dim, sort: Sort) -> R<()> {
        let x = match d {
            Dim::Zero | Dim::One => return Ok(()),
            Dim::Var(Var::Bound(_)) => return err(Code::UnboundVariable, "dangling bound dimension"),
            Dim::Var(Var::Free(x)) => x,
        };
        match ctx.dim_sort(x) {
            Some(s) if s == sort => Ok(()),
            Some(s) => err(
                Code::TypeMismatch,
                format!("`{}` is a {} dimension, expected a {} dimension", x.hint(), sort_word(s), sort_word(sort)),
            ),
            None => match ctx.dropped_by(x) {
                Some(b) if b == x => {
                    err(Code::NotApart, format!("bridge variable `{}` is used again where it must be fresh", x.hint()))
                }
                Some(b) => {
                    err(Code::NotApart, format!("`{}` is not apart from bridge variable `{}`", x.hint(), b.hint()))
                }
                None => err(Code::UnboundVariable, format!("unbound dimension `{}`", x.hint())),
            },
        }
    }

    pub fn check_constraint(&self, ctx: &Context, c: &Constraint) -> R<()> {
        match c {
            Constraint::PathEq(r, s) => {
                self.check_dim(ctx, r, Sort::Path)?;
                self.check_dim(ctx, s, Sort::Path)
            }
            Constraint::BridgeEq(r, _) => self.check_dim(ctx, r, Sort::Bridge),
        }
    }

    fn restrict(&self, ctx: &Context, r: &Dim) -> R<Context> {
        self.check_dim(ctx, r, Sort::Bridge)?;
        Ok(ctx.restrict(r).0)
    }

    /// Checks that `a` is a type.
    pub fn check_type(&self, ctx: &Context, a: &Tm) -> R<()> {
        match &**a {
            Term::Loc(span, inner) => self.check_type(ctx, inner).map_err(|d| d.at(*span)),
            Term::U | Term::Bool | Term::Int | Term::Z2 | Term::Unit | Term::Empty => Ok(()),
            Term::Pi(dom, cod) | Term::Sigma(dom, cod) => {
                self.check_type(ctx, dom)?;
                let x = Name::fresh(&cod.binders[0].hint);
                self.check_type(&ctx.with_term(&x, dom), &cod.open_term(&Term::var(&x)))
            }
            Term::Path(line, m0, m1) => self.check_line_type(ctx, Sort::Path, line, m0, m1, true),
            Term::Bridge(line, m0, m1) => self.check_line_type(ctx, Sort::Bridge, line, m0, m1, true),
            Term::Gel(r, a0, a1, rel) => self.check_gel_type(ctx, r, a0, a1, rel, true),
            Term::V(r, ta, tb, iso) => self.check_v_type(ctx, r, ta, tb, iso, true),
            Term::Def(n, args) if self.sig().get(n).is_some_and(|d| d.is_type()) => {
                let d = self.sig().get(n).cloned().unwrap();
                self.check_args(ctx, &d.name, &d.params, args)
            }
            _ => {
                let ty = self.infer(ctx, a)?;
                if self.eq_type(ctx, &ty, &mk(Term::U))? {
                    Ok(())
                } else {
                    err(Code::TypeMismatch, format!("expected a type, found `{}` of type `{}`", print(a), print(&ty)))
                }
            }
        }
    }

    fn check_line_type(&self, ctx: &Context, sort: Sort, line: &Bind, m0: &Tm, m1: &Tm, large: bool) -> R<()> {
        let x = Name::fresh(&line.binders[0].hint);
        let inner = ctx.with_dim(&x, sort);
        let body = line.open_dim(&Dim::name(&x));
        if large {
            self.check_type(&inner, &body)?;
        } else {
            self.check(&inner, &body, &mk(Term::U))?;
        }
        self.check(ctx, m0, &line.open_dim(&Dim::Zero))?;
        self.check(ctx, m1, &line.open_dim(&Dim::One))
    }

    fn check_gel_type(&self, ctx: &Context, r: &Dim, a0: &Tm, a1: &Tm, rel: &Bind, large: bool) -> R<()> {
        let rctx = self.restrict(ctx, r)?;
        let small = |c: &Context, t: &Tm| if large { self.check_type(c, t) } else { self.check(c, t, &mk(Term::U)) };
        small(&rctx, a0)?;
        small(&rctx, a1)?;
        let (x0, x1) = (Name::fresh(&rel.binders[0].hint), Name::fresh(&rel.binders[1].hint));
        let inner = rctx.with_term(&x0, a0).with_term(&x1, a1);
        small(&inner, &rel.open_terms(&[Term::var(&x0), Term::var(&x1)]))
    }

    fn check_v_type(&self, ctx: &Context, r: &Dim, ta: &Tm, tb: &Tm, iso: &Tm, large: bool) -> R<()> {
        self.check_dim(ctx, r, Sort::Path)?;
        let under = ctx.with_constraint(&Constraint::PathEq(r.clone(), Dim::Zero));
        let small = |c: &Context, t: &Tm| if large { self.check_type(c, t) } else { self.check(c, t, &mk(Term::U)) };
        small(&under, ta)?;
        small(ctx, tb)?;
        self.check(&under, iso, &iso_type(ta, tb))
    }

    /// Checks definition arguments against a parameter telescope.
    pub fn check_args(&self, ctx: &Context, name: &str, params: &[Param], args: &[Arg]) -> R<()> {
        if params.len() != args.len() {
            return err(
                Code::TypeMismatch,
                format!("`{name}` expects {} argument(s), given {}", params.len(), args.len()),
            );
        }
        let d = self.sig().get(name).cloned();
        for (i, (p, a)) in params.iter().zip(args).enumerate() {
            match (p.sort, a) {
                (Sort::Term, Arg::Term(t)) => {
                    let ty = p.ty.clone().unwrap_or_else(|| mk(Term::U));
                    let ty = match &d {
                        Some(d) => d.instantiate(&args[..i], &ty),
                        None => ty,
                    };
                    self.check(ctx, t, &ty)?;
                }
                (Sort::Bridge, Arg::Dim(r)) => {
                    self.check_dim(ctx, r, Sort::Bridge)?;
                    if let Some(x) = r.as_name() {
                        for earlier in &args[..i] {
                            let ok = match earlier {
                                Arg::Term(t) => {
                                    !free_names(t).contains(x) && free_term_vars(t).iter().all(|v| apart_in(ctx, v, x))
                                }
                                Arg::Dim(d) => !d.mentions(x),
                            };
                            if !ok {
                                return err(
                                    Code::NotApart,
                                    format!("arguments of `{name}` before `{}` must be apart from it", x.hint()),
                                );
                            }
                        }
                    }
                }
                (Sort::Path, Arg::Dim(r)) => self.check_dim(ctx, r, Sort::Path)?,
                _ => {
                    return err(Code::TypeMismatch, format!("argument {} of `{name}` has the wrong sort", i + 1));
                }
            }
        }
        Ok(())
    }

    fn check_discarded(&self, ctx: &Context, side: &[Tm]) -> R<()> {
        for t in side {
            match self.infer(ctx, t) {
                Err(d) if d.code != Code::CannotInfer => return Err(d),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn check(&self, ctx: &Context, m: &Tm, ty: &Tm) -> R<()> {
        match &**m {
            Term::Loc(span, inner) => return self.check(ctx, inner, ty).map_err(|d| d.at(*span)),
            Term::Lam(b) => {
                let tyw = self.whnf(ctx, ty)?;
                return match &*tyw {
                    Term::Pi(dom, cod) => {
                        let x = Name::fresh(&b.binders[0].hint);
                        let xv = Term::var(&x);
                        self.check(&ctx.with_term(&x, dom), &b.open_term(&xv), &cod.open_term(&xv))
                    }
                    _ => self.mismatch("a function type", m, &tyw),
                };
            }
            Term::Pair(a, b) => {
                let tyw = self.whnf(ctx, ty)?;
                return match &*tyw {
                    Term::Sigma(dom, cod) => {
                        self.check(ctx, a, dom)?;
                        self.check(ctx, b, &cod.open_term(a))
                    }
                    _ => self.mismatch("a pair type", m, &tyw),
                };
            }
            Term::PLam(b) | Term::BLam(b) => {
                let sort = if matches!(&**m, Term::PLam(_)) { Sort::Path } else { Sort::Bridge };
                let tyw = self.whnf(ctx, ty)?;
                let (line, m0, m1) = match (&*tyw, sort) {
                    (Term::Path(l, m0, m1), Sort::Path) | (Term::Bridge(l, m0, m1), Sort::Bridge) => (l, m0, m1),
                    _ => {
                        return self.mismatch(if sort == Sort::Path { "a path type" } else { "a bridge type" }, m, &tyw)
                    }
                };
                let x = Name::fresh(&b.binders[0].hint);
                let xd = Dim::name(&x);
                self.check(&ctx.with_dim(&x, sort), &b.open_dim(&xd), &line.open_dim(&xd))?;
                for (e, want) in [(Dim::Zero, m0), (Dim::One, m1)] {
                    let got = b.open_dim(&e);
                    if !self.eq(ctx, &line.open_dim(&e), &got, want)? {
                        return err(
                            Code::BoundaryMismatch,
                            format!("endpoint {}: expected `{}`, found `{}`", print_dim(&e), print(want), print(&got)),
                        );
                    }
                }
                return Ok(());
            }
            Term::GelIn(r, m0, m1, p) => {
                self.check_dim(ctx, r, Sort::Bridge)?;
                let r = ctx.canon_dim(r);
                if let Some(e) = r.as_endpoint() {
                    return self.check(ctx, if e { m1 } else { m0 }, ty);
                }
                let tyw = self.whnf(ctx, ty)?;
                return match &*tyw {
                    Term::Gel(s, a0, a1, rel) if *s == r => {
                        let rctx = ctx.restrict(&r).0;
                        self.check(&rctx, m0, a0)?;
                        self.check(&rctx, m1, a1)?;
                        self.check(&rctx, p, &rel.open_terms(&[m0.clone(), m1.clone()]))
                    }
                    _ => self.mismatch(&format!("a Gel type over `{}`", print_dim(&r)), m, &tyw),
                };
            }
            Term::Vin(r, a, b) => {
                self.check_dim(ctx, r, Sort::Path)?;
                let r = ctx.canon_dim(r);
                if let Some(e) = r.as_endpoint() {
                    return self.check(ctx, if e { b } else { a }, ty);
                }
                let tyw = self.whnf(ctx, ty)?;
                return match &*tyw {
                    Term::V(s, ta, tb, iso) if *s == r => {
                        let under = ctx.with_constraint(&Constraint::PathEq(r.clone(), Dim::Zero));
                        self.check(&under, a, ta)?;
                        self.check(ctx, b, tb)?;
                        let image = Term::app(Term::fst(iso.clone()), a.clone());
                        if !self.eq(&under, tb, &image, b)? {
                            return err(
                                Code::BoundaryMismatch,
                                format!(
                                    "Vin: `{}` is not the image of `{}` at {} = 0",
                                    print(b),
                                    print(a),
                                    print_dim(&r)
                                ),
                            );
                        }
                        Ok(())
                    }
                    _ => self.mismatch("a V type", m, &tyw),
                };
            }
            Term::Vproj(r, p, _) if ctx.canon_dim(r) == Dim::One => {
                self.check_dim(ctx, r, Sort::Path)?;
                return self.check(ctx, p, ty);
            }
            _ => {}
        }
        if let Some((side, reduct)) = beta_head(m) {
            self.check_discarded(ctx, &side)?;
            return self.check(ctx, &reduct, ty);
        }
        let got = self.infer(ctx, m)?;
        if self.eq_type(ctx, &got, ty)? {
            Ok(())
        } else {
            err(
                Code::TypeMismatch,
                format!("`{}` has type `{}` but `{}` was expected", print(m), print(&got), print(ty)),
            )
        }
    }

    fn mismatch<T>(&self, what: &str, m: &Tm, ty: &Tm) -> R<T> {
        err(Code::TypeMismatch, format!("`{}` cannot have type `{}`, which is not {what}", print(m), print(ty)))
    }

    pub fn infer(&self, ctx: &Context, m: &Tm) -> R<Tm> {
        match &**m {
            Term::Loc(span, inner) => self.infer(ctx, inner).map_err(|d| d.at(*span)),
            Term::Var(Var::Free(x)) => match ctx.term_type(x) {
                Some(t) => Ok(t.clone()),
                None => match (ctx.dim_sort(x), ctx.dropped_by(x)) {
                    (Some(_), _) => err(Code::TypeMismatch, format!("dimension `{}` used as a term", x.hint())),
                    (None, Some(b)) => {
                        err(Code::NotApart, format!("`{}` is not apart from bridge variable `{}`", x.hint(), b.hint()))
                    }
                    (None, None) => err(Code::UnboundVariable, format!("unbound variable `{}`", x.hint())),
                },
            },
            Term::Var(Var::Bound(_)) => err(Code::UnboundVariable, "dangling bound variable"),
            Term::Def(n, args) => {
                let Some(d) = self.sig().get(n).cloned() else {
                    return err(Code::UnboundVariable, format!("unknown definition `{n}`"));
                };
                self.check_args(ctx, n, &d.params, args)?;
                match &d.kind {
                    DefKind::Term(ty) => Ok(d.instantiate(args, ty)),
                    DefKind::Type => {
                        err(Code::TypeMismatch, format!("`{n}` is a large type, not an element of a type"))
                    }
                }
            }
            Term::Ann(t, a) => {
                self.check_type(ctx, a)?;
                self.check(ctx, t, a)?;
                Ok(a.clone())
            }
            Term::U => err(Code::TypeMismatch, "`U` is not an element of any type"),
            Term::Bool | Term::Int | Term::Z2 | Term::Unit | Term::Empty => Ok(mk(Term::U)),
            Term::Pi(dom, cod) | Term::Sigma(dom, cod) => {
                self.check(ctx, dom, &mk(Term::U))?;
                let x = Name::fresh(&cod.binders[0].hint);
                self.check(&ctx.with_term(&x, dom), &cod.open_term(&Term::var(&x)), &mk(Term::U))?;
                Ok(mk(Term::U))
            }
            Term::Path(line, m0, m1) => {
                self.check_line_type(ctx, Sort::Path, line, m0, m1, false)?;
                Ok(mk(Term::U))
            }
            Term::Bridge(line, m0, m1) => {
                self.check_line_type(ctx, Sort::Bridge, line, m0, m1, false)?;
                Ok(mk(Term::U))
            }
            Term::Gel(r, a0, a1, rel) => {
                self.check_gel_type(ctx, r, a0, a1, rel, false)?;
                Ok(mk(Term::U))
            }
            Term::V(r, ta, tb, iso) => {
                self.check_v_type(ctx, r, ta, tb, iso, false)?;
                Ok(mk(Term::U))
            }
            Term::App(..)
            | Term::PApp(..)
            | Term::BApp(..)
            | Term::Fst(_)
            | Term::Snd(_)
            | Term::Ungel(_)
            | Term::Vproj(..)
                if beta_head(m).is_some() =>
            {
                let (side, reduct) = beta_head(m).expect("checked");
                self.check_discarded(ctx, &side)?;
                self.infer(ctx, &reduct)
            }
            Term::App(f, a) => {
                let fty = self.infer(ctx, f)?;
                let fty = self.whnf(ctx, &fty)?;
                match &*fty {
                    Term::Pi(dom, cod) => {
                        self.check(ctx, a, dom)?;
                        Ok(cod.open_term(a))
                    }
                    _ => self.mismatch("a function type", f, &fty),
                }
            }
            Term::Fst(p) | Term::Snd(p) => {
                let pty = self.infer(ctx, p)?;
                let pty = self.whnf(ctx, &pty)?;
                match &*pty {
                    Term::Sigma(dom, cod) => Ok(match &**m {
                        Term::Fst(_) => dom.clone(),
                        _ => cod.open_term(&Term::fst(p.clone())),
                    }),
                    _ => self.mismatch("a pair type", p, &pty),
                }
            }
            Term::PApp(p, r) => {
                self.check_dim(ctx, r, Sort::Path)?;
                let pty = self.infer(ctx, p)?;
                let pty = self.whnf(ctx, &pty)?;
                match &*pty {
                    Term::Path(line, ..) => Ok(line.open_dim(r)),
                    _ => self.mismatch("a path type", p, &pty),
                }
            }
            Term::BApp(p, r) => {
                let rctx = self.restrict(ctx, r)?;
                let pty = self.infer(&rctx, p)?;
                let pty = self.whnf(&rctx, &pty)?;
                match &*pty {
                    Term::Bridge(line, ..) => Ok(line.open_dim(r)),
                    _ => self.mismatch("a bridge type", p, &pty),
                }
            }
            Term::Ungel(b) => {
                let x = Name::fresh(&b.binders[0].hint);
                let xd = Dim::name(&x);
                let inner = ctx.with_dim(&x, Sort::Bridge);
                let q = b.open_dim(&xd);
                let qty = self.infer(&inner, &q)?;
                let qty = self.whnf(&inner, &qty)?;
                match &*qty {
                    Term::Gel(Dim::Var(Var::Free(y)), _, _, rel) if *y == x => {
                        Ok(rel.open_terms(&[subst_path(&q, &Dim::Zero, &x), subst_path(&q, &Dim::One, &x)]))
                    }
                    _ => self.mismatch(&format!("a Gel type over `{}`", x.hint()), &q, &qty),
                }
            }
            Term::Extent(e) => self.check_extent(ctx, e),
            Term::Coe(line, r, s, t) => {
                self.check_dim(ctx, r, Sort::Path)?;
                self.check_dim(ctx, s, Sort::Path)?;
                self.check_kan_line(ctx, line)?;
                self.check(ctx, t, &line.open_dim(r))?;
                Ok(line.open_dim(s))
            }
            Term::HCom(a, r, s, cap, sys) => {
                self.check_dim(ctx, r, Sort::Path)?;
                self.check_dim(ctx, s, Sort::Path)?;
                self.check_type(ctx, a)?;
                self.check_kan_type(ctx, a)?;
                self.check(ctx, cap, a)?;
                let line = Bind::constant(&[Sort::Path], a.clone());
                self.check_system(ctx, &line, sys, cap, r)?;
                Ok(a.clone())
            }
            Term::Com(line, r, s, cap, sys) => {
                self.check_dim(ctx, r, Sort::Path)?;
                self.check_dim(ctx, s, Sort::Path)?;
                self.check_kan_line(ctx, line)?;
                self.check(ctx, cap, &line.open_dim(r))?;
                self.check_system(ctx, line, sys, cap, r)?;
                Ok(line.open_dim(s))
            }
            Term::Vproj(r, p, iso) => {
                self.check_dim(ctx, r, Sort::Path)?;
                let pty = self.infer(ctx, p)?;
                let pty = self.whnf(ctx, &pty)?;
                match &*pty {
                    Term::V(s, ta, tb, iso2) if *s == ctx.canon_dim(r) => {
                        let under = ctx.with_constraint(&Constraint::PathEq(r.clone(), Dim::Zero));
                        self.check(&under, iso, &iso_type(ta, tb))?;
                        if !self.eq(&under, &iso_type(ta, tb), iso, iso2)? {
                            return err(Code::TypeMismatch, "Vproj: the equivalence does not match the V type");
                        }
                        Ok(tb.clone())
                    }
                    _ if ctx.canon_dim(r) == Dim::Zero => {
                        let ity = self.infer(ctx, iso)?;
                        let ity = self.whnf(ctx, &ity)?;
                        let fty = match &*ity {
                            Term::Sigma(f, _) => self.whnf(ctx, f)?,
                            _ => return self.mismatch("an equivalence", iso, &ity),
                        };
                        match &*fty {
                            Term::Pi(ta, tb) if !tb.uses(0) => {
                                self.check(ctx, p, ta)?;
                                Ok(tb.body.clone())
                            }
                            _ => self.mismatch("an equivalence", iso, &ity),
                        }
                    }
                    _ if ctx.canon_dim(r) == Dim::One => {
                        err(Code::CannotInfer, "Vproj at 1 needs the target type; annotate the term")
                    }
                    _ => self.mismatch("a V type", p, &pty),
                }
            }
            Term::True | Term::False => Ok(mk(Term::Bool)),
            Term::If(c, b, t, f) => {
                self.check_motive(ctx, c, &mk(Term::Bool))?;
                self.check(ctx, b, &mk(Term::Bool))?;
                self.check(ctx, t, &c.open_term(&mk(Term::True)))?;
                self.check(ctx, f, &c.open_term(&mk(Term::False)))?;
                Ok(c.open_term(b))
            }
            Term::IntLit(_) => Ok(mk(Term::Int)),
            Term::Add(a, b) => {
                self.check(ctx, a, &mk(Term::Int))?;
                self.check(ctx, b, &mk(Term::Int))?;
                Ok(mk(Term::Int))
            }
            Term::ZIn(n) => {
                self.check(ctx, n, &mk(Term::Int))?;
                Ok(mk(Term::Z2))
            }
            Term::ZMod(n, r) => {
                self.check_dim(ctx, r, Sort::Path)?;
                self.check(ctx, n, &mk(Term::Int))?;
                Ok(mk(Term::Z2))
            }
            Term::Z2Elim(c, z, qi, qm) => {
                self.check_motive(ctx, c, &mk(Term::Z2))?;
                self.check(ctx, z, &mk(Term::Z2))?;
                self.check_z2_clauses(ctx, c, qi, qm)?;
                Ok(c.open_term(z))
            }
            Term::Star => Ok(mk(Term::Unit)),
            Term::Abort(c, t) => {
                self.check_type(ctx, c)?;
                self.check(ctx, t, &mk(Term::Empty))?;
                Ok(c.clone())
            }
            Term::Lam(_) | Term::Pair(..) | Term::PLam(_) | Term::BLam(_) | Term::GelIn(..) | Term::Vin(..) => {
                err(Code::CannotInfer, format!("cannot infer a type for `{}`; add an annotation", print(m)))
            }
        }
    }

    fn check_motive(&self, ctx: &Context, c: &Bind, dom: &Tm) -> R<()> {
        let a = Name::fresh(&c.binders[0].hint);
        self.check_type(&ctx.with_term(&a, dom), &c.open_term(&Term::var(&a)))
    }

    /// The coherence premises of the circle-like eliminator: the `zmod`
    /// clause must agree with the `zin` clause on its boundary.
    fn check_z2_clauses(&self, ctx: &Context, c: &Bind, qi: &Bind, qm: &Bind) -> R<()> {
        let int = mk(Term::Int);
        let n = Name::fresh(&qi.binders[0].hint);
        let nv = Term::var(&n);
        let cn = ctx.with_term(&n, &int);
        let zin = |k: Tm| mk(Term::ZIn(k));
        self.check(&cn, &qi.open_term(&nv), &c.open_term(&zin(nv.clone())))?;
        let n2 = Name::fresh(&qm.binders[0].hint);
        let x = Name::fresh(&qm.binders[1].hint);
        let nv2 = Term::var(&n2);
        let cx = ctx.with_term(&n2, &int).with_dim(&x, Sort::Path);
        let body = qm.open(&[Inst::Term(nv2.clone()), Inst::Dim(Dim::name(&x))]);
        self.check(&cx, &body, &c.open_term(&mk(Term::ZMod(nv2.clone(), Dim::name(&x)))))?;
        let cn2 = ctx.with_term(&n2, &int);
        let plus2 = mk(Term::Add(nv2.clone(), mk(Term::IntLit(2))));
        for (e, target) in [(Dim::Zero, nv2.clone()), (Dim::One, plus2)] {
            let face = qm.open(&[Inst::Term(nv2.clone()), Inst::Dim(e.clone())]);
            let want = qi.open_term(&target);
            if !self.eq(&cn2, &c.open_term(&zin(target.clone())), &face, &want)? {
                return err(
                    Code::BoundaryMismatch,
                    format!(
                        "the zmod clause at {} is `{}` but the zin clause gives `{}`",
                        print_dim(&e),
                        print(&face),
                        print(&want)
                    ),
                );
            }
        }
        Ok(())
    }

    fn check_kan_type(&self, ctx: &Context, a: &Tm) -> R<()> {
        let aw = self.whnf(ctx, a)?;
        match &*aw {
            Term::U => err(Code::UnsupportedKan, "composition in the universe is not supported"),
            Term::V(r, ..) if r.is_var() => {
                err(Code::UnsupportedKan, "Kan operations in V types with a variable index are not supported")
            }
            _ => Ok(()),
        }
    }

    fn check_kan_line(&self, ctx: &Context, line: &Bind) -> R<()> {
        let x = Name::fresh(&line.binders[0].hint);
        let inner = ctx.with_dim(&x, Sort::Path);
        let a = line.open_dim(&Dim::name(&x));
        self.check_type(&inner, &a)?;
        let aw = self.whnf(&inner, &a)?;
        match &*aw {
            Term::V(r, ..) if r.is_var() => {
                err(Code::UnsupportedKan, "coercion across V types with a variable index is not supported")
            }
            _ => Ok(()),
        }
    }

    /// Checks tubes against a type line, against the cap at `r`, and
    /// pairwise on their overlaps.
    pub fn check_system(&self, ctx: &Context, line: &Bind, sys: &System, cap: &Tm, r: &Dim) -> R<()> {
        let mut opened = Vec::new();
        for (i, tube) in sys.iter().enumerate() {
            self.check_constraint(ctx, &tube.constraint)?;
            let under = ctx.with_constraint(&tube.constraint);
            let y = Name::fresh(&tube.line.binders[0].hint);
            let yd = Dim::name(&y);
            let inner = under.with_dim(&y, Sort::Path);
            if !under.is_inconsistent() {
                self.check(&inner, &tube.line.open_dim(&yd), &line.open_dim(&yd))
                    .map_err(|d| d.context(&format!("tube {}", i + 1)))?;
            }
            let at_r = tube.line.open_dim(r);
            if !self.eq(&under, &line.open_dim(r), &at_r, cap)? {
                return err(
                    Code::BoundaryMismatch,
                    format!(
                        "tube {} ({}) does not agree with the cap at {}: `{}` vs `{}`",
                        i + 1,
                        print_constraint(&tube.constraint),
                        print_dim(r),
                        print(&at_r),
                        print(cap)
                    ),
                );
            }
            opened.push((y, inner));
        }
        for i in 0..sys.len() {
            for j in i + 1..sys.len() {
                let y = Name::fresh("y");
                let yd = Dim::name(&y);
                let both = ctx
                    .with_constraint(&sys[i].constraint)
                    .with_constraint(&sys[j].constraint)
                    .with_dim(&y, Sort::Path);
                let (a, b) = (sys[i].line.open_dim(&yd), sys[j].line.open_dim(&yd));
                if !self.eq(&both, &line.open_dim(&yd), &a, &b)? {
                    return err(
                        Code::TubeMismatch,
                        format!(
                            "tubes {} ({}) and {} ({}) disagree where both apply",
                            i + 1,
                            print_constraint(&sys[i].constraint),
                            j + 1,
                            print_constraint(&sys[j].constraint)
                        ),
                    );
                }
            }
        }
        Ok(())
    }

    /// The seven premises of the extent rule.
    pub fn check_extent(&self, ctx: &Context, e: &Extent) -> R<Tm> {
        let premise = |k: u8| move |d: Diagnostic| d.context(&format!("extent premise {k}"));
        self.check_dim(ctx, &e.index, Sort::Bridge).map_err(premise(1))?;
        let rctx = ctx.restrict(&e.index).0;
        let x = Name::fresh(&e.dom.binders[0].hint);
        let xd = Dim::name(&x);
        let cx = rctx.with_dim(&x, Sort::Bridge);
        let dom = e.dom.open_dim(&xd);
        self.check_type(&cx, &dom).map_err(premise(2))?;
        let a = Name::fresh(&e.cod.binders[1].hint);
        let cod = e.cod.open(&[Inst::Dim(xd.clone()), Inst::Term(Term::var(&a))]);
        self.check_type(&cx.with_term(&a, &dom), &cod).map_err(premise(3))?;
        self.check(ctx, &e.arg, &e.dom.open_dim(&e.index)).map_err(premise(4))?;
        for (k, end, clause) in [(5, Dim::Zero, &e.end0), (6, Dim::One, &e.end1)] {
            let v = Name::fresh(&clause.binders[0].hint);
            let vv = Term::var(&v);
            let cv = rctx.with_term(&v, &e.dom.open_dim(&end));
            let ty = e.cod.open(&[Inst::Dim(end), Inst::Term(vv.clone())]);
            self.check(&cv, &clause.open_term(&vv), &ty).map_err(premise(k))?;
        }
        let names: Vec<Name> = e.line.binders.iter().map(|b| Name::fresh(&b.hint)).collect();
        let args = [Term::var(&names[0]), Term::var(&names[1]), Term::var(&names[2])];
        let cl = rctx
            .with_term(&names[0], &e.dom.open_dim(&Dim::Zero))
            .with_term(&names[1], &e.dom.open_dim(&Dim::One))
            .with_term(&names[2], &mk(Term::Bridge(e.dom.clone(), args[0].clone(), args[1].clone())));
        let bty = self.conv.extent_line_type(e, &args);
        let nbar = e.line.open_terms(&args);
        if let Err(d) = self.check(&cl, &nbar, &bty) {
            if let Term::Bridge(line, ..) = &*bty {
                let own = mk(Term::Bridge(
                    line.clone(),
                    Term::bapp(nbar.clone(), Dim::Zero),
                    Term::bapp(nbar.clone(), Dim::One),
                ));
                if self.check(&cl, &nbar, &own).is_ok() {
                    return err(
                        Code::TubeMismatch,
                        "extent premise 7: the endpoints of the bridge clause do not match the endpoint clauses",
                    );
                }
            }
            return Err(premise(7)(d));
        }
        Ok(e.cod.open(&[Inst::Dim(e.index.clone()), Inst::Term(e.arg.clone())]))
    }
}

fn sort_word(s: Sort) -> &'static str {
    match s {
        Sort::Term => "term",
        Sort::Path => "path",
        Sort::Bridge => "bridge",
    }
}

/// For an elimination spine whose head is an unannotated introduction form,
/// the components the contraction discards and the spine with that redex
/// contracted. Discarded components are only checked when they infer.
fn beta_head(m: &Tm) -> Option<(Vec<Tm>, Tm)> {
    let head = |t: &Tm| Term::unloc(t).clone();
    match Term::unloc(m).as_ref() {
        Term::App(f, a) => match head(f).as_ref() {
            Term::Lam(b) => Some((vec![a.clone()], b.open_term(a))),
            _ => beta_head(f).map(|(x, r)| (x, Term::app(r, a.clone()))),
        },
        Term::PApp(p, r) => match head(p).as_ref() {
            Term::PLam(b) => Some((vec![], b.open_dim(r))),
            _ => beta_head(p).map(|(x, t)| (x, Term::papp(t, r.clone()))),
        },
        Term::BApp(p, r) => match head(p).as_ref() {
            Term::BLam(b) => Some((vec![], b.open_dim(r))),
            _ => beta_head(p).map(|(x, t)| (x, Term::bapp(t, r.clone()))),
        },
        Term::Fst(p) => match head(p).as_ref() {
            Term::Pair(a, b) => Some((vec![b.clone()], a.clone())),
            _ => beta_head(p).map(|(x, t)| (x, Term::fst(t))),
        },
        Term::Snd(p) => match head(p).as_ref() {
            Term::Pair(a, b) => Some((vec![a.clone()], b.clone())),
            _ => beta_head(p).map(|(x, t)| (x, Term::snd(t))),
        },
        Term::Vproj(r, p, _) if r.as_endpoint().is_none() => match head(p).as_ref() {
            Term::Vin(r2, m0, n) if r2 == r => Some((vec![m0.clone()], n.clone())),
            _ => None,
        },
        Term::Ungel(b) => {
            let (names, q) = b.unbind();
            match Term::unloc(&q).as_ref() {
                Term::GelIn(r, m0, m1, p) if r.as_name() == Some(&names[0]) => {
                    let side = [m0, m1].into_iter().filter(|t| !occurs(t, &names[0])).cloned().collect();
                    Some((side, p.clone()))
                }
                _ => None,
            }
        }
        _ => None,
    }
}
