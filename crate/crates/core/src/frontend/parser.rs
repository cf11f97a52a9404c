//! Recursive-descent parser producing a name-carrying surface tree.

use crate::diagnostic::{Code, Diagnostic};
use crate::syntax::Span;

use super::lexer::{tokenize, Tok, Token};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DimE {
    Zero(Span),
    One(Span),
    Var(Ident),
}

impl DimE {
    pub fn span(&self) -> Span {
        match self {
            DimE::Zero(s) | DimE::One(s) => *s,
            DimE::Var(i) => i.span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TubeE {
    pub lhs: DimE,
    pub rhs: DimE,
    pub var: Option<Ident>,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KArg {
    Expr(Expr),
    Dim(DimE),
    Bind(Vec<Ident>, Expr),
    System(Vec<TubeE>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TeleTy {
    Path,
    Bridge,
    Term(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TeleEntry {
    pub names: Vec<Ident>,
    pub ty: TeleTy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LamKind {
    Lam,
    PLam,
    BLam,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Var(String),
    Int(i64),
    /// A keyword constant such as `U` or `tt`.
    Const(&'static str),
    Ann(Box<Expr>, Box<Expr>),
    Pair(Box<Expr>, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    PApp(Box<Expr>, DimE),
    BApp(Box<Expr>, DimE),
    Arrow(Box<Expr>, Box<Expr>),
    Times(Box<Expr>, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Pi(Vec<TeleEntry>, Box<Expr>),
    Sig(Vec<TeleEntry>, Box<Expr>),
    Lam(LamKind, Vec<Ident>, Box<Expr>),
    /// A keyword form with its fixed arguments.
    Form(&'static str, Vec<KArg>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeclTy {
    Type,
    Term(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub name: Ident,
    pub tele: Vec<TeleEntry>,
    pub ty: DeclTy,
    pub body: Expr,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ArgKind {
    Expr,
    Dim,
    Bind(usize),
    System,
}

fn form_args(kw: &str) -> Option<&'static [ArgKind]> {
    use ArgKind::*;
    Some(match kw {
        "fst" | "snd" | "zin" => &[Expr],
        "Path" | "Bridge" => &[Bind(1), Expr, Expr],
        "Gel" => &[Dim, Expr, Expr, Bind(2)],
        "gel" | "V" => &[Dim, Expr, Expr, Expr],
        "ungel" => &[Bind(1)],
        "extent" => &[Dim, Expr, Bind(1), Bind(2), Bind(1), Bind(1), Bind(3)],
        "coe" => &[Bind(1), Dim, Dim, Expr],
        "hcom" => &[Expr, Dim, Dim, Expr, System],
        "com" => &[Bind(1), Dim, Dim, Expr, System],
        "Vin" | "Vproj" => &[Dim, Expr, Expr],
        "if" => &[Bind(1), Expr, Expr, Expr],
        "zmod" => &[Expr, Dim],
        "z2elim" => &[Bind(1), Expr, Bind(1), Bind(2)],
        "abort" => &[Expr, Expr],
        _ => return None,
    })
}

const CONSTANTS: &[&str] = &["U", "bool", "tt", "ff", "int", "z2", "unit", "star", "empty"];

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    expected: Vec<String>,
}

type P<T> = Result<T, Diagnostic>;

impl Parser {
    pub fn new(src: &str) -> P<Parser> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, expected: Vec::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_end(&self) -> u32 {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].span.end
        }
    }

    fn since(&self, start: Span) -> Span {
        Span { start: start.start, end: self.prev_end().max(start.start) }
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        self.expected.clear();
        t
    }

    fn check(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            true
        } else {
            self.expected.push(t.to_string());
            false
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        let ok = self.check(t);
        if ok {
            self.bump();
        }
        ok
    }

    fn fail<T>(&mut self, what: &str) -> P<T> {
        let mut exp = std::mem::take(&mut self.expected);
        exp.push(what.to_string());
        exp.sort();
        exp.dedup();
        let msg = format!("expected {}; found {}", exp.join(", "), self.peek());
        Err(Diagnostic::new(Code::ParseError, msg).at(self.span()))
    }

    fn expect(&mut self, t: &Tok) -> P<Token> {
        if self.check(t) {
            Ok(self.bump())
        } else {
            self.fail(&t.to_string())
        }
    }

    fn ident(&mut self) -> P<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok(Ident { name, span })
            }
            _ => self.fail("identifier"),
        }
    }

    pub fn file(&mut self) -> P<Vec<Decl>> {
        let mut out = Vec::new();
        while !self.check(&Tok::Eof) {
            out.push(self.decl()?);
        }
        Ok(out)
    }

    fn decl(&mut self) -> P<Decl> {
        let start = self.span();
        self.expect(&Tok::Kw("def"))?;
        let name = self.ident()?;
        let mut tele = Vec::new();
        while self.check(&Tok::LParen) {
            tele.push(self.tele_entry()?);
        }
        self.expect(&Tok::Colon)?;
        let ty = if self.eat(&Tok::Kw("Type")) { DeclTy::Type } else { DeclTy::Term(self.term()?) };
        self.expect(&Tok::Eq)?;
        let body = self.term()?;
        Ok(Decl { name, tele, ty, body, span: self.since(start) })
    }

    fn tele_entry(&mut self) -> P<TeleEntry> {
        self.expect(&Tok::LParen)?;
        let mut names = vec![self.ident()?];
        while matches!(self.peek(), Tok::Ident(_)) {
            names.push(self.ident()?);
        }
        self.expect(&Tok::Colon)?;
        let ty = if self.eat(&Tok::BridgeI) {
            TeleTy::Bridge
        } else if matches!(self.peek(), Tok::Ident(s) if s == "I") && self.peek_at(1) == &Tok::RParen {
            self.bump();
            TeleTy::Path
        } else {
            TeleTy::Term(self.term()?)
        };
        self.expect(&Tok::RParen)?;
        Ok(TeleEntry { names, ty })
    }

    pub fn term(&mut self) -> P<Expr> {
        let start = self.span();
        let lam = match self.peek() {
            Tok::Kw("lam") => Some(LamKind::Lam),
            Tok::Kw("plam") => Some(LamKind::PLam),
            Tok::Kw("blam") => Some(LamKind::BLam),
            _ => None,
        };
        if let Some(kind) = lam {
            self.bump();
            let mut names = vec![self.ident()?];
            while matches!(self.peek(), Tok::Ident(_)) {
                names.push(self.ident()?);
            }
            self.expect(&Tok::Dot)?;
            let body = self.term()?;
            return Ok(Expr { kind: ExprKind::Lam(kind, names, Box::new(body)), span: self.since(start) });
        }
        if matches!(self.peek(), Tok::Kw("Pi") | Tok::Kw("Sig")) {
            let pi = self.bump().tok == Tok::Kw("Pi");
            let mut tele = vec![self.tele_entry()?];
            while self.check(&Tok::LParen) && self.is_tele_start() {
                tele.push(self.tele_entry()?);
            }
            let body = Box::new(self.term()?);
            let kind = if pi { ExprKind::Pi(tele, body) } else { ExprKind::Sig(tele, body) };
            return Ok(Expr { kind, span: self.since(start) });
        }
        let lhs = self.prod()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.term()?;
            return Ok(Expr { kind: ExprKind::Arrow(Box::new(lhs), Box::new(rhs)), span: self.since(start) });
        }
        Ok(lhs)
    }

    /// `( ident+ :` begins another telescope entry rather than the body.
    fn is_tele_start(&self) -> bool {
        let mut k = 1;
        while matches!(self.peek_at(k), Tok::Ident(_)) {
            k += 1;
        }
        k > 1 && self.peek_at(k) == &Tok::Colon
    }

    fn prod(&mut self) -> P<Expr> {
        let start = self.span();
        let lhs = self.sum()?;
        if self.eat(&Tok::Star) {
            let rhs = self.prod()?;
            return Ok(Expr { kind: ExprKind::Times(Box::new(lhs), Box::new(rhs)), span: self.since(start) });
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> P<Expr> {
        let start = self.span();
        let mut lhs = self.postfix()?;
        while self.eat(&Tok::Plus) {
            let rhs = self.postfix()?;
            lhs = Expr { kind: ExprKind::Add(Box::new(lhs), Box::new(rhs)), span: self.since(start) };
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> P<Expr> {
        let start = self.span();
        let mut e = self.spine()?;
        loop {
            if self.eat(&Tok::At) {
                let d = self.dim()?;
                e = Expr { kind: ExprKind::PApp(Box::new(e), d), span: self.since(start) };
            } else if self.eat(&Tok::AtAt) {
                let d = self.dim()?;
                e = Expr { kind: ExprKind::BApp(Box::new(e), d), span: self.since(start) };
            } else {
                return Ok(e);
            }
        }
    }

    fn at_atom_start(&mut self) -> bool {
        let ok = match self.peek() {
            Tok::Ident(_) | Tok::Int(_) | Tok::LParen => true,
            Tok::Kw(k) => CONSTANTS.contains(k),
            _ => false,
        };
        if !ok {
            self.expected.push("argument".into());
        }
        ok
    }

    fn spine(&mut self) -> P<Expr> {
        let start = self.span();
        let mut head = match self.peek().clone() {
            Tok::Kw(k) if form_args(k).is_some() => {
                self.bump();
                let mut args = Vec::new();
                for kind in form_args(k).unwrap_or(&[]) {
                    args.push(self.karg(*kind)?);
                }
                Expr { kind: ExprKind::Form(k, args), span: self.since(start) }
            }
            _ => self.atom()?,
        };
        while self.at_atom_start() {
            let arg = self.atom()?;
            head = Expr { kind: ExprKind::App(Box::new(head), Box::new(arg)), span: self.since(start) };
        }
        Ok(head)
    }

    fn karg(&mut self, kind: ArgKind) -> P<KArg> {
        match kind {
            ArgKind::Expr => Ok(KArg::Expr(self.atom()?)),
            ArgKind::Dim => Ok(KArg::Dim(self.dim()?)),
            ArgKind::System => Ok(KArg::System(self.system()?)),
            ArgKind::Bind(n) => {
                if self.is_binder_start() {
                    self.expect(&Tok::LParen)?;
                    let mut names = Vec::new();
                    while matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Dot {
                        names.push(self.ident()?);
                        self.bump();
                    }
                    if names.len() != n {
                        let msg = format!("expected a binder over {n} variable(s), found {}", names.len());
                        return Err(Diagnostic::new(Code::ParseError, msg).at(names[0].span));
                    }
                    let body = self.term()?;
                    self.expect(&Tok::RParen)?;
                    Ok(KArg::Bind(names, body))
                } else {
                    Ok(KArg::Expr(self.atom()?))
                }
            }
        }
    }

    fn is_binder_start(&self) -> bool {
        self.peek() == &Tok::LParen && matches!(self.peek_at(1), Tok::Ident(_)) && self.peek_at(2) == &Tok::Dot
    }

    fn dim(&mut self) -> P<DimE> {
        match self.peek().clone() {
            Tok::Int(0) => Ok(DimE::Zero(self.bump().span)),
            Tok::Int(1) => Ok(DimE::One(self.bump().span)),
            Tok::Ident(_) => Ok(DimE::Var(self.ident()?)),
            _ => self.fail("dimension"),
        }
    }

    fn system(&mut self) -> P<Vec<TubeE>> {
        self.expect(&Tok::LBrack)?;
        let mut tubes = Vec::new();
        if self.eat(&Tok::RBrack) {
            return Ok(tubes);
        }
        loop {
            let lhs = self.dim()?;
            self.expect(&Tok::Eq)?;
            let rhs = self.dim()?;
            self.expect(&Tok::Arrow)?;
            let var = if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Dot {
                let v = self.ident()?;
                self.bump();
                Some(v)
            } else {
                None
            };
            let body = self.term()?;
            tubes.push(TubeE { lhs, rhs, var, body });
            if self.eat(&Tok::RBrack) {
                return Ok(tubes);
            }
            self.expect(&Tok::Pipe)?;
        }
    }

    fn atom(&mut self) -> P<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(Expr { kind: ExprKind::Var(name), span: start })
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Expr { kind: ExprKind::Int(n), span: start })
            }
            Tok::Kw(k) if CONSTANTS.contains(&k) => {
                self.bump();
                Ok(Expr { kind: ExprKind::Const(k), span: start })
            }
            Tok::LParen => {
                self.bump();
                let e = self.term()?;
                let kind = if self.eat(&Tok::Colon) {
                    ExprKind::Ann(Box::new(e), Box::new(self.term()?))
                } else if self.eat(&Tok::Comma) {
                    let mut items = vec![e, self.term()?];
                    while self.eat(&Tok::Comma) {
                        items.push(self.term()?);
                    }
                    let mut last = items.pop().unwrap();
                    while let Some(a) = items.pop() {
                        let span = a.span.join(last.span);
                        last = Expr { kind: ExprKind::Pair(Box::new(a), Box::new(last)), span };
                    }
                    self.expect(&Tok::RParen)?;
                    return Ok(Expr { span: self.since(start), ..last });
                } else {
                    self.expect(&Tok::RParen)?;
                    return Ok(Expr { span: self.since(start), ..e });
                };
                self.expect(&Tok::RParen)?;
                Ok(Expr { kind, span: self.since(start) })
            }
            _ => self.fail("term"),
        }
    }
}

pub fn parse_file(src: &str) -> P<Vec<Decl>> {
    Parser::new(src)?.file()
}

pub fn parse_term(src: &str) -> P<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.term()?;
    p.expect(&Tok::Eof)?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dependent_function() {
        let e = parse_term("Pi (A : U) A -> A").unwrap();
        match e.kind {
            ExprKind::Pi(tele, body) => {
                assert_eq!(tele.len(), 1);
                assert!(matches!(body.kind, ExprKind::Arrow(..)));
            }
            k => panic!("unexpected {k:?}"),
        }
    }

    #[test]
    fn gel_relation_binder() {
        let e = parse_term("Gel x A B (a.b. Path B (f a) b)").unwrap();
        match e.kind {
            ExprKind::Form("Gel", args) => {
                assert!(matches!(&args[3], KArg::Bind(ns, _) if ns.len() == 2));
            }
            k => panic!("unexpected {k:?}"),
        }
    }

    #[test]
    fn unbalanced_bracket() {
        let e = parse_term("hcom A 0 1 M [x=0 -> y. N").unwrap_err();
        assert_eq!(e.code, Code::ParseError);
        assert!(e.message.contains("`]`"), "{}", e.message);
    }

    #[test]
    fn application_binds_tighter_than_path_application() {
        let e = parse_term("f a @ x").unwrap();
        assert!(matches!(e.kind, ExprKind::PApp(ref f, _) if matches!(f.kind, ExprKind::App(..))));
        let e = parse_term("a -> b -> c").unwrap();
        assert!(matches!(e.kind, ExprKind::Arrow(_, ref r) if matches!(r.kind, ExprKind::Arrow(..))));
    }

    #[test]
    fn declarations() {
        let ds = parse_file("def id (A : U) (a : A) : A = a\ndef w : Type = Pi (A : U) A\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds[1].ty, DeclTy::Type);
        let ds = parse_file("def p (x : I) (y : #I) : bool = tt").unwrap();
        assert_eq!(ds[0].tele[0].ty, TeleTy::Path);
        assert_eq!(ds[0].tele[1].ty, TeleTy::Bridge);
    }
}
