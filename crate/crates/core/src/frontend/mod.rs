//! Surface syntax: lexing, parsing, elaboration and printing.

pub mod elab;
pub mod lexer;
pub mod parser;
pub mod print;

pub use elab::{check_decls, elab_term, Checked};
pub use parser::{parse_file, parse_term};
pub use print::print;

use crate::diagnostic::Diagnostic;

/// Parses and checks a whole source file.
pub fn check_source(src: &str, fuel_limit: u64) -> Checked {
    match parse_file(src) {
        Ok(decls) => check_decls(&decls, fuel_limit),
        Err(d) => Checked { diagnostics: vec![d], ..Checked::default() },
    }
}

/// Parses and elaborates a closed term against a signature.
pub fn read_term(sig: &crate::context::Signature, src: &str) -> Result<crate::syntax::Tm, Diagnostic> {
    elab_term(sig, &parse_term(src)?)
}

/// A definition applied to its own parameters, with dimension parameters
/// optionally replaced by the given values in order.
pub struct Opened {
    pub context: crate::context::Context,
    pub term: crate::syntax::Tm,
    pub ty: Option<crate::syntax::Tm>,
}

pub fn open_definition(def: &crate::context::Definition, dims: &[crate::interval::Dim]) -> Opened {
    use crate::context::{Context, DefKind};
    use crate::interval::{Dim, Sort};
    use crate::syntax::{Arg, Term};

    let mut ctx = Context::new();
    let mut args = Vec::new();
    let mut given = dims.iter();
    for p in &def.params {
        let arg = match (&p.ty, p.sort) {
            (Some(_), _) | (None, Sort::Term) => Arg::Term(Term::var(&p.name)),
            (None, _) => Arg::Dim(given.next().cloned().unwrap_or_else(|| Dim::name(&p.name))),
        };
        let ty = p.ty.as_ref().map(|t| def.instantiate(&args, t));
        ctx = match ty {
            Some(ty) => ctx.with_term(&p.name, &ty),
            None => ctx.with_dim(&p.name, p.sort),
        };
        args.push(arg);
    }
    let ty = match &def.kind {
        DefKind::Type => None,
        DefKind::Term(t) => Some(def.instantiate(&args, t)),
    };
    Opened { context: ctx, term: Term::def(&def.name, args), ty }
}
