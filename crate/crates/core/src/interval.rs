//! Dimension algebra for the two interval sorts.
//!
//! Path dimensions are structural: they may be duplicated and identified with
//! each other. Bridge dimensions are affine: a bridge variable may only be
//! identified with an endpoint, and substitutions never send two bridge
//! variables to the same variable.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

pub use crate::context::{restrict, Renaming};

static NEXT_NAME: AtomicU64 = AtomicU64::new(1);

/// A free variable. Identity is the numeric id; the hint is only for display.
#[derive(Clone)]
pub struct Name {
    id: u64,
    hint: Arc<str>,
}

impl Name {
    pub fn fresh(hint: &str) -> Name {
        let hint = if hint.is_empty() { "_" } else { hint };
        Name { id: NEXT_NAME.fetch_add(1, Ordering::Relaxed), hint: Arc::from(hint) }
    }

    pub fn refresh(&self) -> Name {
        Name::fresh(&self.hint)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn hint(&self) -> &str {
        &self.hint
    }
}

impl PartialEq for Name {
    fn eq(&self, other: &Name) -> bool {
        self.id == other.id
    }
}

impl Eq for Name {}

impl Hash for Name {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}

impl PartialOrd for Name {
    fn partial_cmp(&self, other: &Name) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Name {
    fn cmp(&self, other: &Name) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.hint, self.id)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hint)
    }
}

/// Binder sorts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sort {
    Term,
    Path,
    Bridge,
}

impl Sort {
    pub fn is_dim(self) -> bool {
        !matches!(self, Sort::Term)
    }
}

/// A variable occurrence: a de Bruijn index under a binder or a free name.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Bound(u32),
    Free(Name),
}

/// An interval term of either sort. The sort of a variable comes from its
/// binding site.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Dim {
    Zero,
    One,
    Var(Var),
}

pub type PathTerm = Dim;
pub type BridgeTerm = Dim;

impl Dim {
    pub fn name(n: &Name) -> Dim {
        Dim::Var(Var::Free(n.clone()))
    }

    pub fn endpoint(e: bool) -> Dim {
        if e {
            Dim::One
        } else {
            Dim::Zero
        }
    }

    pub fn as_endpoint(&self) -> Option<bool> {
        match self {
            Dim::Zero => Some(false),
            Dim::One => Some(true),
            Dim::Var(_) => None,
        }
    }

    pub fn as_name(&self) -> Option<&Name> {
        match self {
            Dim::Var(Var::Free(n)) => Some(n),
            _ => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Dim::Var(_))
    }

    pub fn mentions(&self, x: &Name) -> bool {
        self.as_name() == Some(x)
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Zero => f.write_str("0"),
            Dim::One => f.write_str("1"),
            Dim::Var(Var::Free(n)) => write!(f, "{n}"),
            Dim::Var(Var::Bound(i)) => write!(f, "#{i}"),
        }
    }
}

/// An equation between interval terms. Bridge equations always have an
/// endpoint on the right, so two bridge variables are never identified.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    PathEq(Dim, Dim),
    BridgeEq(Dim, bool),
}

impl Constraint {
    pub fn falsum() -> Constraint {
        Constraint::PathEq(Dim::Zero, Dim::One)
    }

    pub fn dims(&self) -> Vec<&Dim> {
        match self {
            Constraint::PathEq(r, s) => vec![r, s],
            Constraint::BridgeEq(r, _) => vec![r],
        }
    }

    pub fn mentions(&self, x: &Name) -> bool {
        self.dims().into_iter().any(|d| d.mentions(x))
    }

    /// Status without hypotheses.
    pub fn status(&self) -> Status {
        ConstraintSet::default().status(self)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::PathEq(r, s) => write!(f, "{r} = {s}"),
            Constraint::BridgeEq(r, e) => write!(f, "{r} = {}", u8::from(*e)),
        }
    }
}

/// The `∀x` operator on constraints: a constraint on `x` itself becomes false.
pub fn forall_x(x: &Name, c: &Constraint) -> Constraint {
    match c {
        Constraint::BridgeEq(r, _) if r.mentions(x) => Constraint::falsum(),
        _ => c.clone(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    True,
    False,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Key {
    Const(bool),
    Var(Name),
}

/// Equivalence closure of a list of constraints: union-find over path terms
/// plus a valuation for bridge variables.
#[derive(Clone, Debug, Default)]
pub struct ConstraintSet {
    parent: HashMap<Key, Key>,
    rank: HashMap<Name, usize>,
    bridge: HashMap<Name, bool>,
    inconsistent: bool,
    len: usize,
}

impl ConstraintSet {
    /// Registers a variable so that earlier declarations are preferred as
    /// class representatives.
    pub fn declare(&mut self, x: &Name) {
        let next = self.rank.len();
        self.rank.entry(x.clone()).or_insert(next);
    }

    pub fn is_inconsistent(&self) -> bool {
        self.inconsistent
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn key(&mut self, d: &Dim) -> Option<Key> {
        match d {
            Dim::Zero => Some(Key::Const(false)),
            Dim::One => Some(Key::Const(true)),
            Dim::Var(Var::Free(n)) => {
                self.declare(n);
                Some(Key::Var(n.clone()))
            }
            Dim::Var(Var::Bound(_)) => None,
        }
    }

    fn find(&self, k: &Key) -> Key {
        let mut k = k.clone();
        while let Some(p) = self.parent.get(&k) {
            k = p.clone();
        }
        k
    }

    fn rank_of(&self, k: &Key) -> usize {
        match k {
            Key::Const(_) => 0,
            Key::Var(n) => 1 + self.rank.get(n).copied().unwrap_or(usize::MAX - 1),
        }
    }

    pub fn add(&mut self, c: &Constraint) {
        self.len += 1;
        match c {
            Constraint::PathEq(r, s) => {
                let (Some(a), Some(b)) = (self.key(r), self.key(s)) else { return };
                let (ra, rb) = (self.find(&a), self.find(&b));
                if ra == rb {
                    return;
                }
                if let (Key::Const(_), Key::Const(_)) = (&ra, &rb) {
                    self.inconsistent = true;
                    return;
                }
                let (root, child) = if self.rank_of(&ra) <= self.rank_of(&rb) { (ra, rb) } else { (rb, ra) };
                self.parent.insert(child, root);
            }
            Constraint::BridgeEq(r, e) => match r {
                Dim::Zero | Dim::One => {
                    if r.as_endpoint() != Some(*e) {
                        self.inconsistent = true;
                    }
                }
                Dim::Var(Var::Free(x)) => match self.bridge.get(x) {
                    Some(v) if v != e => self.inconsistent = true,
                    _ => {
                        self.bridge.insert(x.clone(), *e);
                    }
                },
                Dim::Var(Var::Bound(_)) => {}
            },
        }
    }

    pub fn with(mut self, c: &Constraint) -> ConstraintSet {
        self.add(c);
        self
    }

    fn rep(&self, d: &Dim) -> Dim {
        match d {
            Dim::Var(Var::Free(n)) => match self.find(&Key::Var(n.clone())) {
                Key::Const(e) => Dim::endpoint(e),
                Key::Var(m) => Dim::name(&m),
            },
            _ => d.clone(),
        }
    }

    pub fn status(&self, c: &Constraint) -> Status {
        if self.inconsistent {
            return Status::True;
        }
        match c {
            Constraint::PathEq(r, s) => {
                let (a, b) = (self.rep(r), self.rep(s));
                if a == b {
                    Status::True
                } else if a.as_endpoint().is_some() && b.as_endpoint().is_some() {
                    Status::False
                } else {
                    Status::Undetermined
                }
            }
            Constraint::BridgeEq(r, e) => {
                let v = match r {
                    Dim::Var(Var::Free(x)) => self.bridge.get(x).copied(),
                    _ => r.as_endpoint(),
                };
                match v {
                    Some(v) if v == *e => Status::True,
                    Some(_) => Status::False,
                    None => Status::Undetermined,
                }
            }
        }
    }

    /// The canonical representative of a path variable.
    pub fn resolve_path(&self, x: &Name) -> Dim {
        self.rep(&Dim::name(x))
    }

    pub fn resolve_bridge(&self, x: &Name) -> Option<bool> {
        self.bridge.get(x).copied()
    }

    /// The substitution that sends every constrained variable to its
    /// representative.
    pub fn canonical_map(&self) -> HashMap<Name, Dim> {
        let mut map = HashMap::new();
        for k in self.parent.keys() {
            if let Key::Var(x) = k {
                let r = self.resolve_path(x);
                if r != Dim::name(x) {
                    map.insert(x.clone(), r);
                }
            }
        }
        for (x, e) in &self.bridge {
            map.insert(x.clone(), Dim::endpoint(*e));
        }
        map
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("two bridge variables are sent to the same variable `{0}`")]
    DiagonalSubstitution(String),
    #[error("`{0}` is sent to a term of the wrong sort")]
    SortMismatch(String),
    #[error("`{0}` is not bound in the source context")]
    Unbound(String),
    #[error("substitution has {found} images for {expected} entries")]
    Arity { expected: usize, found: usize },
    #[error("composed substitutions do not chain")]
    DomainMismatch,
}

/// An ordered context of interval variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntervalCtx {
    entries: Vec<(Name, Sort)>,
}

impl IntervalCtx {
    pub fn new() -> IntervalCtx {
        IntervalCtx::default()
    }

    pub fn push(&mut self, x: Name, sort: Sort) {
        assert!(sort.is_dim(), "interval contexts hold only dimensions");
        self.entries.push((x, sort));
    }

    pub fn with(mut self, x: &Name, sort: Sort) -> IntervalCtx {
        self.push(x.clone(), sort);
        self
    }

    pub fn entries(&self) -> &[(Name, Sort)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sort_of(&self, x: &Name) -> Option<Sort> {
        self.entries.iter().find(|(n, _)| n == x).map(|(_, s)| *s)
    }

    /// A copy of this context with every variable renamed apart.
    pub fn fresh_copy(&self) -> IntervalCtx {
        IntervalCtx { entries: self.entries.iter().map(|(n, s)| (n.refresh(), *s)).collect() }
    }
}

/// A substitution from `target` (the context the substituted terms live in)
/// to `source` (the context of the images).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalSubst {
    source: IntervalCtx,
    target: IntervalCtx,
    images: Vec<Dim>,
}

impl IntervalSubst {
    pub fn new(source: IntervalCtx, target: IntervalCtx, images: Vec<Dim>) -> Result<IntervalSubst, IntervalError> {
        if images.len() != target.len() {
            return Err(IntervalError::Arity { expected: target.len(), found: images.len() });
        }
        let mut used = Vec::new();
        for ((x, sort), img) in target.entries.iter().zip(&images) {
            if let Some(y) = img.as_name() {
                match source.sort_of(y) {
                    None => return Err(IntervalError::Unbound(y.hint().to_string())),
                    Some(s) if s != *sort => return Err(IntervalError::SortMismatch(x.hint().to_string())),
                    Some(Sort::Bridge) => {
                        if used.contains(y) {
                            return Err(IntervalError::DiagonalSubstitution(y.hint().to_string()));
                        }
                        used.push(y.clone());
                    }
                    Some(_) => {}
                }
            } else if img.is_var() {
                return Err(IntervalError::Unbound(x.hint().to_string()));
            }
        }
        Ok(IntervalSubst { source, target, images })
    }

    pub fn identity(ctx: &IntervalCtx) -> IntervalSubst {
        let images = ctx.entries.iter().map(|(n, _)| Dim::name(n)).collect();
        IntervalSubst { source: ctx.clone(), target: ctx.clone(), images }
    }

    pub fn source(&self) -> &IntervalCtx {
        &self.source
    }

    pub fn target(&self) -> &IntervalCtx {
        &self.target
    }

    pub fn images(&self) -> &[Dim] {
        &self.images
    }

    pub fn image(&self, x: &Name) -> Option<&Dim> {
        self.target.entries.iter().position(|(n, _)| n == x).map(|i| &self.images[i])
    }

    pub fn apply_dim(&self, d: &Dim) -> Dim {
        match d.as_name().and_then(|x| self.image(x)) {
            Some(img) => img.clone(),
            None => d.clone(),
        }
    }

    pub fn apply_constraint(&self, c: &Constraint) -> Constraint {
        match c {
            Constraint::PathEq(r, s) => Constraint::PathEq(self.apply_dim(r), self.apply_dim(s)),
            Constraint::BridgeEq(r, e) => Constraint::BridgeEq(self.apply_dim(r), *e),
        }
    }

    pub fn as_map(&self) -> HashMap<Name, Dim> {
        self.target.entries.iter().map(|(n, _)| n.clone()).zip(self.images.iter().cloned()).collect()
    }

    /// `compose(outer, inner)` acts as `inner` followed by `outer`.
    pub fn compose(outer: &IntervalSubst, inner: &IntervalSubst) -> Result<IntervalSubst, IntervalError> {
        if outer.target != inner.source {
            return Err(IntervalError::DomainMismatch);
        }
        let images = inner.images.iter().map(|d| outer.apply_dim(d)).collect();
        IntervalSubst::new(outer.source.clone(), inner.target.clone(), images)
    }
}

pub fn compose_subst(outer: &IntervalSubst, inner: &IntervalSubst) -> Result<IntervalSubst, IntervalError> {
    IntervalSubst::compose(outer, inner)
}
