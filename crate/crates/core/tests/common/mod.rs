#![allow(dead_code)]

pub mod criteria;
pub mod rules;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use ptt::context::Signature;
use ptt::frontend::elab::{elab_term_in, Scope};
use ptt::frontend::{check_source, parse_term, Checked};
use ptt::interval::{Name, Sort};
use ptt::opsem::{Fuel, Machine, Oracle, Stepped};
use ptt::syntax::{alpha_eq, strip_locs, Tm};

pub const FUEL: u64 = 1_000_000;

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub struct Source {
    pub name: String,
    pub src: String,
    pub checked: Checked,
}

pub fn load(path: &Path) -> Source {
    let src = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let checked = check_source(&src, FUEL);
    let name = path.file_stem().unwrap().to_string_lossy().into_owned();
    Source { name, src, checked }
}

fn ptt_files(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "ptt"))
        .collect();
    out.sort();
    out
}

pub fn corpus() -> Vec<Source> {
    ptt_files(&corpus_dir()).iter().map(|p| load(p)).collect()
}

pub fn negatives() -> Vec<Source> {
    ptt_files(&corpus_dir().join("negative")).iter().map(|p| load(p)).collect()
}

pub fn corpus_file(name: &str) -> Source {
    load(&corpus_dir().join(format!("{name}.ptt")))
}

/// Free variables in scope for parsing test terms.
pub struct Env {
    pub sig: Signature,
    pub scope: Scope,
    pub vars: HashMap<String, Name>,
}

impl Env {
    pub fn new(vars: &[(&str, Sort)]) -> Env {
        let mut scope = Scope::new();
        let mut map = HashMap::new();
        for (s, sort) in vars {
            map.insert(s.to_string(), scope.bind(s, *sort));
        }
        Env { sig: Signature::new(), scope, vars: map }
    }

    pub fn term(&self, src: &str) -> Tm {
        let e = parse_term(src).unwrap_or_else(|d| panic!("{src}: {}", d.message));
        strip_locs(&elab_term_in(&self.sig, self.scope.clone(), &e).unwrap_or_else(|d| panic!("{src}: {}", d.message)))
    }

    pub fn name(&self, s: &str) -> &Name {
        &self.vars[s]
    }
}

/// Reads boundaries from a fixed table and treats every variable as apart.
pub struct TableOracle {
    pub ends: Vec<(Name, Tm, Tm)>,
    pub apart: bool,
}

impl Oracle for TableOracle {
    fn boundary(&self, head: &Tm, _sort: Sort, end: bool) -> Option<Tm> {
        let name = match &**head {
            ptt::syntax::Term::Var(ptt::interval::Var::Free(n)) => n,
            _ => return None,
        };
        self.ends.iter().find(|(n, _, _)| n == name).map(|(_, a, b)| if end { b.clone() } else { a.clone() })
    }

    fn apart(&self, _a: &Name, _x: &Name) -> bool {
        self.apart
    }
}

pub fn step_with(env: &Env, oracle: Option<&dyn Oracle>, t: &Tm) -> Result<Option<Stepped>, String> {
    let fuel = Fuel::new(FUEL);
    let mut m = Machine::new(&env.sig, &fuel);
    if let Some(o) = oracle {
        m = m.with_oracle(o);
    }
    m.step_traced(t).map_err(|r| format!("stuck: {r}"))
}

/// Steps `redex` once and compares the reduct with `expected` up to alpha.
pub fn expect_step(env: &Env, oracle: Option<&dyn Oracle>, redex: &str, expected: &str) -> Result<(), String> {
    let t = env.term(redex);
    let want = env.term(expected);
    match step_with(env, oracle, &t)? {
        None => Err(format!("`{redex}` is a value")),
        Some(s) if alpha_eq(&s.term, &want) => Ok(()),
        Some(s) => Err(format!(
            "`{redex}` stepped by {} to `{}`, expected `{}`",
            s.rule,
            ptt::frontend::print(&s.term),
            ptt::frontend::print(&want)
        )),
    }
}
