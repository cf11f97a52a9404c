//! Structured errors with source positions.

use std::fmt;

use thiserror::Error;

use crate::opsem::EvalError;
use crate::syntax::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Code {
    NotApart,
    DiagonalSubstitution,
    TubeMismatch,
    BoundaryMismatch,
    UnsupportedKan,
    TypeMismatch,
    UnboundVariable,
    CannotInfer,
    DuplicateDefinition,
    FuelExhausted,
    Stuck,
    LexError,
    ParseError,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::NotApart => "NotApart",
            Code::DiagonalSubstitution => "DiagonalSubstitution",
            Code::TubeMismatch => "TubeMismatch",
            Code::BoundaryMismatch => "BoundaryMismatch",
            Code::UnsupportedKan => "UnsupportedKan",
            Code::TypeMismatch => "TypeMismatch",
            Code::UnboundVariable => "UnboundVariable",
            Code::CannotInfer => "CannotInfer",
            Code::DuplicateDefinition => "DuplicateDefinition",
            Code::FuelExhausted => "FuelExhausted",
            Code::Stuck => "Stuck",
            Code::LexError => "LexError",
            Code::ParseError => "ParseError",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{code}: {message}")]
pub struct Diagnostic {
    pub code: Code,
    pub message: String,
    pub span: Option<Span>,
}

impl Diagnostic {
    pub fn new(code: Code, message: impl Into<String>) -> Diagnostic {
        Diagnostic { code, message: message.into(), span: None }
    }

    /// Attaches a span unless a more precise one is already present.
    pub fn at(mut self, span: Span) -> Diagnostic {
        if self.span.is_none() {
            self.span = Some(span);
        }
        self
    }

    pub fn context(mut self, prefix: &str) -> Diagnostic {
        self.message = format!("{prefix}: {}", self.message);
        self
    }

    /// `file:line:col: code: message`
    pub fn render(&self, file: &str, src: &str) -> String {
        let (line, col) = match self.span {
            Some(s) => line_col(src, s.start as usize),
            None => (1, 1),
        };
        format!("{file}:{line}:{col}: {}: {}", self.code, self.message)
    }
}

impl From<EvalError> for Diagnostic {
    fn from(e: EvalError) -> Diagnostic {
        match e {
            EvalError::FuelExhausted(n) => {
                Diagnostic::new(Code::FuelExhausted, format!("evaluation exceeded {n} steps"))
            }
            e @ EvalError::Stuck { .. } => Diagnostic::new(Code::Stuck, e.to_string()),
        }
    }
}

/// One-based line and column (in characters) of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions() {
        let src = "def a : bool = tt\ndef b : bool = q\n";
        assert_eq!(line_col(src, 0), (1, 1));
        assert_eq!(line_col(src, 33), (2, 16));
        let d = Diagnostic::new(Code::UnboundVariable, "unbound variable `q`").at(Span::new(33, 34));
        assert_eq!(d.render("x.ptt", src), "x.ptt:2:16: UnboundVariable: unbound variable `q`");
    }

    #[test]
    fn innermost_span_wins() {
        let d = Diagnostic::new(Code::TypeMismatch, "m").at(Span::new(4, 5)).at(Span::new(0, 9));
        assert_eq!(d.span, Some(Span::new(4, 5)));
    }
}
