use std::fmt;

use crate::diagnostic::{Code, Diagnostic};
use crate::syntax::Span;

pub const KEYWORDS: &[&str] = &[
    "U", "Path", "Bridge", "Gel", "gel", "ungel", "extent", "coe", "hcom", "com", "V", "Vin", "Vproj", "bool", "tt",
    "ff", "if", "int", "z2", "zin", "zmod", "z2elim", "unit", "star", "empty", "abort", "lam", "plam", "blam", "fst",
    "snd", "Sig", "Pi", "def", "Type",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Kw(&'static str),
    Int(i64),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Dot,
    Colon,
    Comma,
    Pipe,
    Eq,
    Arrow,
    Star,
    Plus,
    At,
    AtAt,
    /// `#I`, the bridge interval in a telescope.
    BridgeI,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Kw(k) => write!(f, "`{k}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::At => f.write_str("`@`"),
            Tok::AtAt => f.write_str("`@@`"),
            Tok::BridgeI => f.write_str("`#I`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let at = |i: usize| chars.get(i).map(|&(_, c)| c);
    let off = |i: usize| chars.get(i).map_or(src.len(), |&(o, _)| o);
    let mut i = 0;
    while let Some(c) = at(i) {
        let start = off(i);
        let err = |msg: String, end: usize| Err(Diagnostic::new(Code::LexError, msg).at(Span::new(start, end)));
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '-' && at(i + 1) == Some('-') {
            while at(i).is_some_and(|c| c != '\n') {
                i += 1;
            }
            continue;
        }
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBrack, 1),
            ']' => (Tok::RBrack, 1),
            '.' => (Tok::Dot, 1),
            ':' => (Tok::Colon, 1),
            ',' => (Tok::Comma, 1),
            '|' => (Tok::Pipe, 1),
            '=' => (Tok::Eq, 1),
            '*' => (Tok::Star, 1),
            '+' => (Tok::Plus, 1),
            '-' if at(i + 1) == Some('>') => (Tok::Arrow, 2),
            '@' if at(i + 1) == Some('@') && at(i + 2) == Some('@') => {
                return err("unexpected `@@@`".into(), off(i + 3));
            }
            '@' if at(i + 1) == Some('@') => (Tok::AtAt, 2),
            '@' => (Tok::At, 1),
            '#' if at(i + 1) == Some('I') && !at(i + 2).is_some_and(ident_char) => (Tok::BridgeI, 2),
            c if c.is_ascii_digit() || (c == '-' && at(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut j = i + 1;
                while at(j).is_some_and(|d| d.is_ascii_digit()) {
                    j += 1;
                }
                let text = &src[start..off(j)];
                match text.parse::<i64>() {
                    Ok(n) => (Tok::Int(n), j - i),
                    Err(_) => return err(format!("integer literal `{text}` out of range"), off(j)),
                }
            }
            c if ident_start(c) => {
                let mut j = i + 1;
                while at(j).is_some_and(ident_char) {
                    j += 1;
                }
                let text = &src[start..off(j)];
                let tok = match KEYWORDS.iter().find(|k| **k == text) {
                    Some(k) => Tok::Kw(k),
                    None => Tok::Ident(text.to_string()),
                };
                (tok, j - i)
            }
            c => return err(format!("unexpected character `{c}`"), off(i + 1)),
        };
        out.push(Token { tok, span: Span::new(start, off(i + len)) });
        i += len;
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(src.len(), src.len()) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn bridge_application() {
        assert_eq!(
            toks("blam x. a @@ x"),
            vec![
                Tok::Kw("blam"),
                Tok::Ident("x".into()),
                Tok::Dot,
                Tok::Ident("a".into()),
                Tok::AtAt,
                Tok::Ident("x".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn systems() {
        let t = toks("hcom A 0 1 M [x=0 -> y. N]");
        assert_eq!(t[0], Tok::Kw("hcom"));
        assert_eq!(t[5], Tok::LBrack);
        assert_eq!(t[7], Tok::Eq);
        assert_eq!(t[9], Tok::Arrow);
        assert_eq!(t[13], Tok::RBrack);
    }

    #[test]
    fn triple_at_is_an_error() {
        let e = tokenize("p @@@ x").unwrap_err();
        assert_eq!(e.code, Code::LexError);
        assert_eq!(e.span, Some(Span::new(2, 5)));
    }

    #[test]
    fn comments_and_literals() {
        assert_eq!(toks("-- note\n-3 -> x"), vec![Tok::Int(-3), Tok::Arrow, Tok::Ident("x".into()), Tok::Eof]);
        assert_eq!(toks("(x : #I)")[3], Tok::BridgeI);
    }
}
