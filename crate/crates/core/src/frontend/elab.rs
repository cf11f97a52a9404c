//! Name resolution from surface trees to core terms, and definition checking.

use std::sync::Arc;

use crate::checker::Checker;
use crate::context::{Context, DefKind, Definition, Param, Signature};
use crate::diagnostic::{Code, Diagnostic};
use crate::interval::{Constraint, Dim, Name, Sort};
use crate::opsem::Fuel;
use crate::syntax::{mk, Arg, Bind, Extent, Span, Term, Tm, Tube};

use super::parser::{Decl, DeclTy, DimE, Expr, ExprKind, Ident, KArg, LamKind, TeleEntry, TeleTy, TubeE};

type R<T> = Result<T, Diagnostic>;

fn err<T>(code: Code, msg: impl Into<String>, span: Span) -> R<T> {
    Err(Diagnostic::new(code, msg).at(span))
}

#[derive(Clone)]
struct Local {
    surface: String,
    name: Name,
    sort: Sort,
}

/// Lexical scope for resolving surface names.
#[derive(Clone, Default)]
pub struct Scope {
    locals: Vec<Local>,
}

impl Scope {
    pub fn new() -> Scope {
        Scope::default()
    }

    pub fn bind(&mut self, surface: &str, sort: Sort) -> Name {
        let name = Name::fresh(surface);
        self.locals.push(Local { surface: surface.to_string(), name: name.clone(), sort });
        name
    }

    pub fn bind_name(&mut self, surface: &str, name: &Name, sort: Sort) {
        self.locals.push(Local { surface: surface.to_string(), name: name.clone(), sort });
    }

    fn lookup(&self, s: &str) -> Option<&Local> {
        if s == "_" {
            return None;
        }
        self.locals.iter().rev().find(|l| l.surface == s)
    }

    fn truncate(&mut self, n: usize) {
        self.locals.truncate(n);
    }
}

pub struct Elab<'a> {
    sig: &'a Signature,
    scope: Scope,
}

impl<'a> Elab<'a> {
    pub fn new(sig: &'a Signature) -> Elab<'a> {
        Elab { sig, scope: Scope::new() }
    }

    pub fn with_scope(sig: &'a Signature, scope: Scope) -> Elab<'a> {
        Elab { sig, scope }
    }

    fn under<T>(&mut self, binders: &[(&Ident, Sort)], f: impl FnOnce(&mut Self, &[Name]) -> R<T>) -> R<T> {
        let mark = self.scope.locals.len();
        let names: Vec<Name> = binders.iter().map(|(i, s)| self.scope.bind(&i.name, *s)).collect();
        let out = f(self, &names);
        self.scope.truncate(mark);
        out
    }

    fn bind(&mut self, binders: &[Ident], sorts: &[Sort], body: &Expr) -> R<Bind> {
        let pairs: Vec<(&Ident, Sort)> = binders.iter().zip(sorts.iter().copied()).collect();
        self.under(&pairs, |el, names| {
            let b = el.expr(body)?;
            let closed: Vec<(Name, Sort)> = names.iter().cloned().zip(sorts.iter().copied()).collect();
            Ok(Bind::close(&closed, &b))
        })
    }

    pub fn dim(&self, d: &DimE, sort: Sort) -> R<Dim> {
        match d {
            DimE::Zero(_) => Ok(Dim::Zero),
            DimE::One(_) => Ok(Dim::One),
            DimE::Var(i) => match self.scope.lookup(&i.name) {
                Some(l) if l.sort == sort => Ok(Dim::name(&l.name)),
                Some(l) if l.sort == Sort::Term => {
                    err(Code::TypeMismatch, format!("`{}` is a term variable, expected a dimension", i.name), i.span)
                }
                Some(_) => err(
                    Code::TypeMismatch,
                    format!("`{}` is a {} dimension", i.name, if sort == Sort::Path { "bridge" } else { "path" }),
                    i.span,
                ),
                None => err(Code::UnboundVariable, format!("unbound dimension `{}`", i.name), i.span),
            },
        }
    }

    fn dim_sort_of(&self, d: &DimE) -> Option<Sort> {
        match d {
            DimE::Var(i) => self.scope.lookup(&i.name).map(|l| l.sort),
            _ => None,
        }
    }

    fn constraint(&self, lhs: &DimE, rhs: &DimE) -> R<Constraint> {
        let bridge = self.dim_sort_of(lhs) == Some(Sort::Bridge) || self.dim_sort_of(rhs) == Some(Sort::Bridge);
        if !bridge {
            return Ok(Constraint::PathEq(self.dim(lhs, Sort::Path)?, self.dim(rhs, Sort::Path)?));
        }
        let (var, other) = if self.dim_sort_of(lhs) == Some(Sort::Bridge) { (lhs, rhs) } else { (rhs, lhs) };
        match other {
            DimE::Zero(_) => Ok(Constraint::BridgeEq(self.dim(var, Sort::Bridge)?, false)),
            DimE::One(_) => Ok(Constraint::BridgeEq(self.dim(var, Sort::Bridge)?, true)),
            DimE::Var(i) => {
                err(Code::TypeMismatch, "bridge constraints may only equate a bridge variable with 0 or 1", i.span)
            }
        }
    }

    pub fn expr(&mut self, e: &Expr) -> R<Tm> {
        let t = self.expr_inner(e).map_err(|d| d.at(e.span))?;
        Ok(mk(Term::Loc(e.span, t)))
    }

    fn arg_as_dim(&self, e: &Expr, sort: Sort) -> R<Dim> {
        match &e.kind {
            ExprKind::Int(0) => Ok(Dim::Zero),
            ExprKind::Int(1) => Ok(Dim::One),
            ExprKind::Var(v) => self.dim(&DimE::Var(Ident { name: v.clone(), span: e.span }), sort),
            _ => err(Code::TypeMismatch, "expected a dimension argument", e.span),
        }
    }

    /// Elaborates an application spine whose head names a definition.
    fn def_app(&mut self, name: &str, head_span: Span, args: &[&Expr], span: Span) -> R<Tm> {
        let d = self.sig.get(name).cloned().expect("caller checked");
        let n = d.params.len().min(args.len());
        let mut core_args = Vec::new();
        for (p, a) in d.params.iter().zip(&args[..n]) {
            core_args.push(match p.sort {
                Sort::Term => Arg::Term(self.expr(a)?),
                s => Arg::Dim(self.arg_as_dim(a, s)?),
            });
        }
        let mut lams = Vec::new();
        if args.len() < d.params.len() {
            for p in &d.params[args.len()..] {
                if p.sort != Sort::Term {
                    return err(
                        Code::TypeMismatch,
                        format!("`{name}` expects a dimension argument for `{}`", p.name.hint()),
                        span,
                    );
                }
                let x = Name::fresh(p.name.hint());
                core_args.push(Arg::Term(Term::var(&x)));
                lams.push(x);
            }
        }
        let mut t = mk(Term::Loc(head_span, mk(Term::Def(Arc::from(name), core_args))));
        for x in lams.iter().rev() {
            t = Term::lam(x, &t);
        }
        for a in &args[n..] {
            t = Term::app(t, self.expr(a)?);
        }
        Ok(t)
    }

    fn expr_inner(&mut self, e: &Expr) -> R<Tm> {
        Ok(match &e.kind {
            ExprKind::Var(v) => match self.scope.lookup(v) {
                Some(l) if l.sort == Sort::Term => Term::var(&l.name),
                Some(_) => return err(Code::TypeMismatch, format!("dimension `{v}` used as a term"), e.span),
                None if self.sig.contains(v) => return self.def_app(v, e.span, &[], e.span),
                None => return err(Code::UnboundVariable, format!("unbound variable `{v}`"), e.span),
            },
            ExprKind::Int(n) => mk(Term::IntLit(*n)),
            ExprKind::Const(k) => mk(match *k {
                "U" => Term::U,
                "bool" => Term::Bool,
                "tt" => Term::True,
                "ff" => Term::False,
                "int" => Term::Int,
                "z2" => Term::Z2,
                "unit" => Term::Unit,
                "star" => Term::Star,
                _ => Term::Empty,
            }),
            ExprKind::Ann(m, a) => mk(Term::Ann(self.expr(m)?, self.expr(a)?)),
            ExprKind::Pair(a, b) => Term::pair(self.expr(a)?, self.expr(b)?),
            ExprKind::App(..) => {
                let mut args = Vec::new();
                let mut head = e;
                while let ExprKind::App(f, a) = &head.kind {
                    args.push(&**a);
                    head = f;
                }
                args.reverse();
                if let ExprKind::Var(v) = &head.kind {
                    if self.scope.lookup(v).is_none() && self.sig.contains(v) {
                        return self.def_app(v, head.span, &args, e.span);
                    }
                }
                let mut t = self.expr(head)?;
                for a in args {
                    t = Term::app(t, self.expr(a)?);
                }
                t
            }
            ExprKind::PApp(p, d) => Term::papp(self.expr(p)?, self.dim(d, Sort::Path)?),
            ExprKind::BApp(p, d) => Term::bapp(self.expr(p)?, self.dim(d, Sort::Bridge)?),
            ExprKind::Arrow(a, b) => Term::arrow(self.expr(a)?, self.expr(b)?),
            ExprKind::Times(a, b) => Term::times(self.expr(a)?, self.expr(b)?),
            ExprKind::Add(a, b) => mk(Term::Add(self.expr(a)?, self.expr(b)?)),
            ExprKind::Pi(tele, body) | ExprKind::Sig(tele, body) => {
                let pi = matches!(e.kind, ExprKind::Pi(..));
                return self.binder_type(pi, tele, body);
            }
            ExprKind::Lam(kind, names, body) => {
                let sort = match kind {
                    LamKind::Lam => Sort::Term,
                    LamKind::PLam => Sort::Path,
                    LamKind::BLam => Sort::Bridge,
                };
                let pairs: Vec<(&Ident, Sort)> = names.iter().map(|n| (n, sort)).collect();
                return self.under(&pairs, |el, ns| {
                    let mut t = el.expr(body)?;
                    for n in ns.iter().rev() {
                        t = wrap_lam(sort, n, &t);
                    }
                    Ok(t)
                });
            }
            ExprKind::Form(kw, args) => self.form(kw, args, e.span)?,
        })
    }

    fn binder_type(&mut self, pi: bool, tele: &[TeleEntry], body: &Expr) -> R<Tm> {
        let Some((first, rest)) = tele.split_first() else {
            return self.expr(body);
        };
        let ty = match &first.ty {
            TeleTy::Term(t) => t,
            _ => {
                let span = first.names[0].span;
                return err(Code::TypeMismatch, "dimension binders are not allowed in Pi or Sig", span);
            }
        };
        let dom = self.expr(ty)?;
        let mark = self.scope.locals.len();
        let mut names = Vec::new();
        for n in &first.names {
            names.push(self.scope.bind(&n.name, Sort::Term));
        }
        let inner = self.binder_type(pi, rest, body);
        self.scope.truncate(mark);
        let mut t = inner?;
        for n in names.iter().rev() {
            let b = Bind::close(&[(n.clone(), Sort::Term)], &t);
            t = mk(if pi { Term::Pi(dom.clone(), b) } else { Term::Sigma(dom.clone(), b) });
        }
        Ok(t)
    }

    fn karg_bind(&mut self, a: &KArg, sorts: &[Sort]) -> R<Bind> {
        match a {
            KArg::Bind(names, body) => self.bind(names, sorts, body),
            KArg::Expr(e) => Ok(Bind::constant(sorts, self.expr(e)?)),
            _ => unreachable!("parser produces binder arguments"),
        }
    }

    fn karg_expr(&mut self, a: &KArg) -> R<Tm> {
        match a {
            KArg::Expr(e) => self.expr(e),
            _ => unreachable!("parser produces term arguments"),
        }
    }

    fn karg_dim(&self, a: &KArg, sort: Sort) -> R<Dim> {
        match a {
            KArg::Dim(d) => self.dim(d, sort),
            _ => unreachable!("parser produces dimension arguments"),
        }
    }

    fn system(&mut self, a: &KArg) -> R<Vec<Tube>> {
        let KArg::System(tubes) = a else { unreachable!("parser produces systems") };
        tubes.iter().map(|t| self.tube(t)).collect()
    }

    fn tube(&mut self, t: &TubeE) -> R<Tube> {
        let constraint = self.constraint(&t.lhs, &t.rhs)?;
        let line = match &t.var {
            Some(v) => self.bind(std::slice::from_ref(v), &[Sort::Path], &t.body)?,
            None => Bind::constant(&[Sort::Path], self.expr(&t.body)?),
        };
        Ok(Tube { constraint, line })
    }

    fn form(&mut self, kw: &str, a: &[KArg], _span: Span) -> R<Tm> {
        use Sort::{Bridge as B, Path as P, Term as T};
        Ok(mk(match kw {
            "fst" => Term::Fst(self.karg_expr(&a[0])?),
            "snd" => Term::Snd(self.karg_expr(&a[0])?),
            "zin" => Term::ZIn(self.karg_expr(&a[0])?),
            "Path" | "Bridge" => {
                let s = if kw == "Path" { P } else { B };
                let line = self.karg_bind(&a[0], &[s])?;
                let (m0, m1) = (self.karg_expr(&a[1])?, self.karg_expr(&a[2])?);
                if s == P {
                    Term::Path(line, m0, m1)
                } else {
                    Term::Bridge(line, m0, m1)
                }
            }
            "Gel" => Term::Gel(
                self.karg_dim(&a[0], B)?,
                self.karg_expr(&a[1])?,
                self.karg_expr(&a[2])?,
                self.karg_bind(&a[3], &[T, T])?,
            ),
            "gel" => Term::GelIn(
                self.karg_dim(&a[0], B)?,
                self.karg_expr(&a[1])?,
                self.karg_expr(&a[2])?,
                self.karg_expr(&a[3])?,
            ),
            "V" => Term::V(
                self.karg_dim(&a[0], P)?,
                self.karg_expr(&a[1])?,
                self.karg_expr(&a[2])?,
                self.karg_expr(&a[3])?,
            ),
            "ungel" => Term::Ungel(self.karg_bind(&a[0], &[B])?),
            "extent" => Term::Extent(Box::new(Extent {
                index: self.karg_dim(&a[0], B)?,
                arg: self.karg_expr(&a[1])?,
                dom: self.karg_bind(&a[2], &[B])?,
                cod: self.karg_bind(&a[3], &[B, T])?,
                end0: self.karg_bind(&a[4], &[T])?,
                end1: self.karg_bind(&a[5], &[T])?,
                line: self.karg_bind(&a[6], &[T, T, T])?,
            })),
            "coe" => Term::Coe(
                self.karg_bind(&a[0], &[P])?,
                self.karg_dim(&a[1], P)?,
                self.karg_dim(&a[2], P)?,
                self.karg_expr(&a[3])?,
            ),
            "hcom" => Term::HCom(
                self.karg_expr(&a[0])?,
                self.karg_dim(&a[1], P)?,
                self.karg_dim(&a[2], P)?,
                self.karg_expr(&a[3])?,
                self.system(&a[4])?,
            ),
            "com" => Term::Com(
                self.karg_bind(&a[0], &[P])?,
                self.karg_dim(&a[1], P)?,
                self.karg_dim(&a[2], P)?,
                self.karg_expr(&a[3])?,
                self.system(&a[4])?,
            ),
            "Vin" => Term::Vin(self.karg_dim(&a[0], P)?, self.karg_expr(&a[1])?, self.karg_expr(&a[2])?),
            "Vproj" => Term::Vproj(self.karg_dim(&a[0], P)?, self.karg_expr(&a[1])?, self.karg_expr(&a[2])?),
            "if" => Term::If(
                self.karg_bind(&a[0], &[T])?,
                self.karg_expr(&a[1])?,
                self.karg_expr(&a[2])?,
                self.karg_expr(&a[3])?,
            ),
            "zmod" => Term::ZMod(self.karg_expr(&a[0])?, self.karg_dim(&a[1], P)?),
            "z2elim" => Term::Z2Elim(
                self.karg_bind(&a[0], &[T])?,
                self.karg_expr(&a[1])?,
                self.karg_bind(&a[2], &[T])?,
                self.karg_bind(&a[3], &[T, P])?,
            ),
            "abort" => Term::Abort(self.karg_expr(&a[0])?, self.karg_expr(&a[1])?),
            _ => unreachable!("unknown keyword form `{kw}`"),
        }))
    }

    /// Elaborates a telescope, leaving its variables in scope.
    fn telescope(&mut self, tele: &[TeleEntry]) -> R<Vec<Param>> {
        let mut params = Vec::new();
        for entry in tele {
            let (sort, ty) = match &entry.ty {
                TeleTy::Path => (Sort::Path, None),
                TeleTy::Bridge => (Sort::Bridge, None),
                TeleTy::Term(t) => (Sort::Term, Some(self.expr(t)?)),
            };
            for n in &entry.names {
                let name = self.scope.bind(&n.name, sort);
                params.push(Param { name, sort, ty: ty.clone() });
            }
        }
        Ok(params)
    }
}

fn wrap_lam(sort: Sort, x: &Name, body: &Tm) -> Tm {
    match sort {
        Sort::Term => Term::lam(x, body),
        Sort::Path => Term::plam(x, body),
        Sort::Bridge => Term::blam(x, body),
    }
}

/// Elaborates and checks one declaration against the definitions so far.
pub fn check_decl(sig: &Signature, decl: &Decl, fuel: &Fuel) -> (Option<Definition>, Option<Diagnostic>) {
    let name = &decl.name;
    if sig.contains(&name.name) {
        let d = Diagnostic::new(Code::DuplicateDefinition, format!("`{}` is already defined", name.name)).at(name.span);
        return (None, Some(d));
    }
    let mut el = Elab::new(sig);
    let header = (|| -> R<(Vec<Param>, DefKind)> {
        let params = el.telescope(&decl.tele)?;
        let kind = match &decl.ty {
            DeclTy::Type => DefKind::Type,
            DeclTy::Term(t) => DefKind::Term(el.expr(t)?),
        };
        Ok((params, kind))
    })();
    let (params, kind) = match header {
        Ok(h) => h,
        Err(d) => return (None, Some(d)),
    };
    let checker = Checker::new(sig, fuel);
    let mut ctx = Context::new();
    for p in &params {
        if let Some(ty) = &p.ty {
            if let Err(d) = checker.check_type(&ctx, ty) {
                return (None, Some(d));
            }
        }
        ctx = match &p.ty {
            Some(ty) => ctx.with_term(&p.name, ty),
            None => ctx.with_dim(&p.name, p.sort),
        };
    }
    if let DefKind::Term(ty) = &kind {
        if let Err(d) = checker.check_type(&ctx, ty) {
            return (None, Some(d));
        }
    }
    let mut def = Definition { name: Arc::from(name.name.as_str()), params, kind, body: None, span: decl.span };
    let result = el.expr(&decl.body).and_then(|body| {
        match &def.kind {
            DefKind::Type => checker.check_type(&ctx, &body)?,
            DefKind::Term(ty) => checker.check(&ctx, &body, ty)?,
        }
        Ok(body)
    });
    match result {
        Ok(body) => {
            def.body = Some(body);
            (Some(def), None)
        }
        Err(d) => (Some(def), Some(d)),
    }
}

/// The result of checking one source file.
#[derive(Debug, Default)]
pub struct Checked {
    pub signature: Signature,
    pub diagnostics: Vec<Diagnostic>,
}

impl Checked {
    pub fn ok(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Checks every declaration in order, continuing past failures.
pub fn check_decls(decls: &[Decl], fuel_limit: u64) -> Checked {
    let mut out = Checked::default();
    for decl in decls {
        let fuel = Fuel::new(fuel_limit);
        let (def, diag) = check_decl(&out.signature, decl, &fuel);
        if let Some(d) = def {
            out.signature.insert(d);
        }
        out.diagnostics.extend(diag);
    }
    out
}

/// Elaborates a standalone term in the scope of a signature.
pub fn elab_term(sig: &Signature, e: &Expr) -> R<Tm> {
    Elab::new(sig).expr(e)
}

pub fn elab_term_in(sig: &Signature, scope: Scope, e: &Expr) -> R<Tm> {
    Elab::with_scope(sig, scope).expr(e)
}
