//! Pretty printing of core terms in the surface syntax.
//!
//! Bound variables are named deterministically from their hints, avoiding
//! every name visible at that point, so the output parses back to an
//! alpha-equivalent term.

use std::collections::HashSet;
use std::fmt::Write;

use crate::interval::{Constraint, Dim, Name, Sort, Var};
use crate::syntax::{free_names, Arg, Bind, Inst, System, Term, Tm};

use super::lexer::is_keyword;

const TERM: u8 = 0;
const PROD: u8 = 1;
const SUM: u8 = 2;
const POSTFIX: u8 = 3;
const SPINE: u8 = 4;
const ATOM: u8 = 5;

pub fn print(t: &Tm) -> String {
    let mut p = Printer::new(t);
    let mut out = String::new();
    p.term(&mut out, t, TERM);
    out
}

pub fn print_dim(d: &Dim) -> String {
    dim_str(d)
}

pub fn print_constraint(c: &Constraint) -> String {
    match c {
        Constraint::PathEq(r, s) => format!("{} = {}", dim_str(r), dim_str(s)),
        Constraint::BridgeEq(r, e) => format!("{} = {}", dim_str(r), u8::from(*e)),
    }
}

fn dim_str(d: &Dim) -> String {
    match d {
        Dim::Zero => "0".into(),
        Dim::One => "1".into(),
        Dim::Var(Var::Free(x)) => x.hint().to_string(),
        Dim::Var(Var::Bound(i)) => format!("#{i}"),
    }
}

struct Printer {
    taken: HashSet<String>,
}

impl Printer {
    fn new(t: &Tm) -> Printer {
        Printer { taken: free_names(t).iter().map(|n| n.hint().to_string()).collect() }
    }

    /// Opens a binder with printable names.
    fn open(&mut self, b: &Bind) -> (Vec<String>, Tm, Vec<String>) {
        let mut shown = Vec::new();
        let mut args = Vec::new();
        let mut added = Vec::new();
        for (i, binder) in b.binders.iter().enumerate() {
            if !b.uses(i) {
                shown.push("_".to_string());
                let n = Name::fresh("_");
                args.push(inst(&n, binder.sort));
                continue;
            }
            let base = sanitize(&binder.hint);
            let mut cand = base.clone();
            let mut k = 1;
            while self.taken.contains(&cand) || is_keyword(&cand) {
                cand = format!("{base}{k}");
                k += 1;
            }
            self.taken.insert(cand.clone());
            added.push(cand.clone());
            args.push(inst(&Name::fresh(&cand), binder.sort));
            shown.push(cand);
        }
        (shown, b.open(&args), added)
    }

    fn close(&mut self, added: Vec<String>) {
        for n in added {
            self.taken.remove(&n);
        }
    }

    fn bind(&mut self, out: &mut String, b: &Bind) {
        let (names, body, added) = self.open(b);
        out.push('(');
        for n in &names {
            let _ = write!(out, "{n}.");
        }
        out.push(' ');
        self.term(out, &body, TERM);
        out.push(')');
        self.close(added);
    }

    /// A line binder; constant lines are printed without a binder.
    fn line(&mut self, out: &mut String, b: &Bind) {
        if b.arity() == 1 && !b.uses(0) {
            self.term(out, &b.body, ATOM);
        } else {
            self.bind(out, b);
        }
    }

    fn system(&mut self, out: &mut String, sys: &System) {
        out.push('[');
        for (i, tube) in sys.iter().enumerate() {
            if i > 0 {
                out.push_str(" | ");
            }
            out.push_str(&print_constraint(&tube.constraint));
            out.push_str(" -> ");
            let (names, body, added) = self.open(&tube.line);
            let _ = write!(out, "{}. ", names[0]);
            self.term(out, &body, TERM);
            self.close(added);
        }
        out.push(']');
    }

    fn lambda(&mut self, out: &mut String, kw: &str, t: &Tm) {
        let mut names = Vec::new();
        let mut added_all = Vec::new();
        let mut cur = t.clone();
        while let (Term::Lam(b), "lam") | (Term::PLam(b), "plam") | (Term::BLam(b), "blam") = (&*cur, kw) {
            let b = b.clone();
            let (ns, body, added) = self.open(&b);
            names.extend(ns);
            added_all.extend(added);
            cur = body;
        }
        let _ = write!(out, "{kw} {}. ", names.join(" "));
        self.term(out, &cur, TERM);
        self.close(added_all);
    }

    fn binder_type(&mut self, out: &mut String, kw: &str, dom: &Tm, cod: &Bind) {
        let (names, body, added) = self.open(cod);
        let _ = write!(out, "{kw} ({} : ", names[0]);
        self.term(out, dom, TERM);
        out.push_str(") ");
        self.term(out, &body, TERM);
        self.close(added);
    }

    fn args(&mut self, out: &mut String, parts: &[Piece<'_>]) {
        for p in parts {
            out.push(' ');
            match p {
                Piece::T(t) => self.term(out, t, ATOM),
                Piece::D(d) => out.push_str(&dim_str(d)),
                Piece::B(b) => self.bind(out, b),
                Piece::L(b) => self.line(out, b),
                Piece::S(s) => self.system(out, s),
            }
        }
    }

    fn term(&mut self, out: &mut String, t: &Tm, prec: u8) {
        let t = Term::unloc(t);
        let level = level(t);
        let paren = level < prec;
        if paren {
            out.push('(');
        }
        self.term_inner(out, t);
        if paren {
            out.push(')');
        }
    }

    fn term_inner(&mut self, out: &mut String, t: &Tm) {
        use Piece::*;
        match &**t {
            Term::Var(Var::Free(x)) => out.push_str(x.hint()),
            Term::Var(Var::Bound(i)) => {
                let _ = write!(out, "#{i}");
            }
            Term::Def(n, args) => {
                out.push_str(n);
                let ps: Vec<Piece<'_>> = args
                    .iter()
                    .map(|a| match a {
                        Arg::Term(t) => T(t),
                        Arg::Dim(d) => D(d),
                    })
                    .collect();
                self.args(out, &ps);
            }
            Term::Ann(m, a) => {
                out.push('(');
                self.term(out, m, TERM);
                out.push_str(" : ");
                self.term(out, a, TERM);
                out.push(')');
            }
            Term::Loc(_, m) => self.term_inner(out, m),
            Term::U => out.push('U'),
            Term::Pi(dom, cod) if !cod.uses(0) => {
                self.term(out, dom, PROD);
                out.push_str(" -> ");
                self.term(out, &cod.body, TERM);
            }
            Term::Pi(dom, cod) => self.binder_type(out, "Pi", dom, cod),
            Term::Sigma(dom, cod) if !cod.uses(0) => {
                self.term(out, dom, SUM);
                out.push_str(" * ");
                self.term(out, &cod.body, PROD);
            }
            Term::Sigma(dom, cod) => self.binder_type(out, "Sig", dom, cod),
            Term::Lam(_) => self.lambda(out, "lam", t),
            Term::PLam(_) => self.lambda(out, "plam", t),
            Term::BLam(_) => self.lambda(out, "blam", t),
            Term::App(f, a) => {
                self.term(out, f, SPINE);
                out.push(' ');
                self.term(out, a, ATOM);
            }
            Term::Pair(a, b) => {
                out.push('(');
                self.term(out, a, TERM);
                let mut rest = b;
                while let Term::Pair(a, b) = &**rest {
                    out.push_str(", ");
                    self.term(out, a, TERM);
                    rest = b;
                }
                out.push_str(", ");
                self.term(out, rest, TERM);
                out.push(')');
            }
            Term::Fst(p) => self.keyword(out, "fst", &[T(p)]),
            Term::Snd(p) => self.keyword(out, "snd", &[T(p)]),
            Term::Path(l, m0, m1) => self.keyword(out, "Path", &[L(l), T(m0), T(m1)]),
            Term::Bridge(l, m0, m1) => self.keyword(out, "Bridge", &[L(l), T(m0), T(m1)]),
            Term::PApp(p, r) | Term::BApp(p, r) => {
                self.term(out, p, POSTFIX);
                let op = if matches!(&**t, Term::PApp(..)) { "@" } else { "@@" };
                let _ = write!(out, " {op} {}", dim_str(r));
            }
            Term::Gel(r, a0, a1, rel) => self.keyword(out, "Gel", &[D(r), T(a0), T(a1), B(rel)]),
            Term::GelIn(r, m0, m1, p) => self.keyword(out, "gel", &[D(r), T(m0), T(m1), T(p)]),
            Term::Ungel(b) => self.keyword(out, "ungel", &[B(b)]),
            Term::Extent(e) => self.keyword(
                out,
                "extent",
                &[D(&e.index), T(&e.arg), B(&e.dom), B(&e.cod), B(&e.end0), B(&e.end1), B(&e.line)],
            ),
            Term::Coe(l, r, s, m) => self.keyword(out, "coe", &[L(l), D(r), D(s), T(m)]),
            Term::HCom(a, r, s, m, sys) => self.keyword(out, "hcom", &[T(a), D(r), D(s), T(m), S(sys)]),
            Term::Com(l, r, s, m, sys) => self.keyword(out, "com", &[L(l), D(r), D(s), T(m), S(sys)]),
            Term::V(r, a, b, i) => self.keyword(out, "V", &[D(r), T(a), T(b), T(i)]),
            Term::Vin(r, m, n) => self.keyword(out, "Vin", &[D(r), T(m), T(n)]),
            Term::Vproj(r, p, i) => self.keyword(out, "Vproj", &[D(r), T(p), T(i)]),
            Term::Bool => out.push_str("bool"),
            Term::True => out.push_str("tt"),
            Term::False => out.push_str("ff"),
            Term::If(c, m, a, b) => self.keyword(out, "if", &[B(c), T(m), T(a), T(b)]),
            Term::Int => out.push_str("int"),
            Term::IntLit(n) => {
                let _ = write!(out, "{n}");
            }
            Term::Add(a, b) => {
                self.term(out, a, SUM);
                out.push_str(" + ");
                self.term(out, b, POSTFIX);
            }
            Term::Z2 => out.push_str("z2"),
            Term::ZIn(n) => self.keyword(out, "zin", &[T(n)]),
            Term::ZMod(n, r) => self.keyword(out, "zmod", &[T(n), D(r)]),
            Term::Z2Elim(c, m, qi, qm) => self.keyword(out, "z2elim", &[B(c), T(m), B(qi), B(qm)]),
            Term::Unit => out.push_str("unit"),
            Term::Star => out.push_str("star"),
            Term::Empty => out.push_str("empty"),
            Term::Abort(c, m) => self.keyword(out, "abort", &[T(c), T(m)]),
        }
    }

    fn keyword(&mut self, out: &mut String, kw: &str, parts: &[Piece<'_>]) {
        out.push_str(kw);
        self.args(out, parts);
    }
}

enum Piece<'a> {
    T(&'a Tm),
    D(&'a Dim),
    B(&'a Bind),
    L(&'a Bind),
    S(&'a System),
}

fn inst(n: &Name, sort: Sort) -> Inst {
    match sort {
        Sort::Term => Inst::Term(Term::var(n)),
        _ => Inst::Dim(Dim::name(n)),
    }
}

fn sanitize(hint: &str) -> String {
    let s: String = hint.chars().filter(|c| c.is_alphanumeric() || *c == '_' || *c == '\'').collect();
    match s.chars().next() {
        Some(c) if c.is_alphabetic() => s,
        _ => "v".to_string(),
    }
}

fn level(t: &Term) -> u8 {
    match t {
        Term::Lam(_) | Term::PLam(_) | Term::BLam(_) => TERM,
        Term::Pi(_, cod) if !cod.uses(0) => TERM,
        Term::Pi(..) => TERM,
        Term::Sigma(_, cod) if !cod.uses(0) => PROD,
        Term::Sigma(..) => TERM,
        Term::Add(..) => SUM,
        Term::PApp(..) | Term::BApp(..) => POSTFIX,
        Term::IntLit(n) if *n < 0 => ATOM,
        Term::App(..)
        | Term::Fst(_)
        | Term::Snd(_)
        | Term::Path(..)
        | Term::Bridge(..)
        | Term::Gel(..)
        | Term::GelIn(..)
        | Term::Ungel(_)
        | Term::Extent(_)
        | Term::Coe(..)
        | Term::HCom(..)
        | Term::Com(..)
        | Term::V(..)
        | Term::Vin(..)
        | Term::Vproj(..)
        | Term::If(..)
        | Term::ZIn(_)
        | Term::ZMod(..)
        | Term::Z2Elim(..)
        | Term::Abort(..) => SPINE,
        Term::Def(_, args) if !args.is_empty() => SPINE,
        Term::Loc(_, m) => level(m),
        _ => ATOM,
    }
}
