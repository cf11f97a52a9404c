//! Typing contexts, context restriction, and the global signature.

use std::collections::HashMap;
use std::sync::Arc;

use crate::interval::{Constraint, ConstraintSet, Dim, Name, Sort, Status};
use crate::syntax::{subst, subst_dims, Arg, Inst, Span, Tm};

#[derive(Clone, Debug)]
pub enum Entry {
    Term(Name, Tm),
    PathDim(Name),
    BridgeDim(Name),
    Constr(Constraint),
}

impl Entry {
    pub fn name(&self) -> Option<&Name> {
        match self {
            Entry::Term(n, _) | Entry::PathDim(n) | Entry::BridgeDim(n) => Some(n),
            Entry::Constr(_) => None,
        }
    }
}

/// Positions of the kept entries of a restricted context within the original.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Renaming {
    pub kept: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct Context {
    entries: Vec<Entry>,
    /// Variables removed by restriction, with the bridge variable responsible.
    dropped: Vec<(Name, Name)>,
    constraints: ConstraintSet,
}

impl Context {
    pub fn new() -> Context {
        Context::default()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, e: Entry) {
        match &e {
            Entry::PathDim(x) | Entry::BridgeDim(x) => self.constraints.declare(x),
            Entry::Constr(c) => self.constraints.add(c),
            Entry::Term(..) => {}
        }
        self.entries.push(e);
    }

    pub fn with_term(&self, x: &Name, ty: &Tm) -> Context {
        let mut c = self.clone();
        c.push(Entry::Term(x.clone(), ty.clone()));
        c
    }

    pub fn with_dim(&self, x: &Name, sort: Sort) -> Context {
        let mut c = self.clone();
        c.push(match sort {
            Sort::Bridge => Entry::BridgeDim(x.clone()),
            _ => Entry::PathDim(x.clone()),
        });
        c
    }

    pub fn with_constraint(&self, k: &Constraint) -> Context {
        let mut c = self.clone();
        c.push(Entry::Constr(k.clone()));
        c
    }

    pub fn with_constraints(&self, ks: &[Constraint]) -> Context {
        let mut c = self.clone();
        for k in ks {
            c.push(Entry::Constr(k.clone()));
        }
        c
    }

    pub fn position(&self, x: &Name) -> Option<usize> {
        self.entries.iter().position(|e| e.name() == Some(x))
    }

    pub fn lookup(&self, x: &Name) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.name() == Some(x))
    }

    pub fn term_type(&self, x: &Name) -> Option<&Tm> {
        match self.lookup(x)? {
            Entry::Term(_, ty) => Some(ty),
            _ => None,
        }
    }

    pub fn dim_sort(&self, x: &Name) -> Option<Sort> {
        match self.lookup(x)? {
            Entry::PathDim(_) => Some(Sort::Path),
            Entry::BridgeDim(_) => Some(Sort::Bridge),
            _ => None,
        }
    }

    /// The bridge variable whose restriction removed `x`, if any.
    pub fn dropped_by(&self, x: &Name) -> Option<&Name> {
        self.dropped.iter().find(|(n, _)| n == x).map(|(_, b)| b)
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn is_inconsistent(&self) -> bool {
        self.constraints.is_inconsistent()
    }

    pub fn constraint_status(&self, c: &Constraint) -> Status {
        self.constraints.status(c)
    }

    /// Applies the constraint valuation to a dimension.
    pub fn canon_dim(&self, d: &Dim) -> Dim {
        match d.as_name() {
            Some(x) => match self.dim_sort(x) {
                Some(Sort::Bridge) => match self.constraints.resolve_bridge(x) {
                    Some(e) => Dim::endpoint(e),
                    None => d.clone(),
                },
                _ => self.constraints.resolve_path(x),
            },
            None => d.clone(),
        }
    }

    /// Replaces constrained dimension variables by their representatives.
    pub fn canonicalize(&self, t: &Tm) -> Tm {
        if self.constraints.is_empty() {
            return t.clone();
        }
        let map = self.constraints.canonical_map();
        if map.is_empty() {
            t.clone()
        } else {
            subst_dims(t, &map)
        }
    }

    /// `Γ|r`: the part of the context guaranteed apart from `r`.
    pub fn restrict(&self, r: &Dim) -> (Context, Renaming) {
        let r = self.canon_dim(r);
        let Some(x) = r.as_name() else {
            return (self.clone(), Renaming { kept: (0..self.entries.len()).collect() });
        };
        let Some(pos) = self.position(x) else {
            return (self.clone(), Renaming { kept: (0..self.entries.len()).collect() });
        };
        let mut out = Context { dropped: self.dropped.clone(), ..Context::default() };
        let mut kept = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            let keep = match e {
                _ if i == pos => false,
                Entry::Term(..) => i < pos,
                Entry::PathDim(_) | Entry::BridgeDim(_) => true,
                Entry::Constr(c) => !c.mentions(x),
            };
            if keep {
                kept.push(i);
                out.push(e.clone());
            } else if let Some(n) = e.name() {
                out.dropped.push((n.clone(), x.clone()));
            }
        }
        (out, Renaming { kept })
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.entries.iter().filter_map(Entry::name)
    }
}

pub fn restrict(ctx: &Context, r: &Dim) -> (Context, Renaming) {
    ctx.restrict(r)
}

#[derive(Clone, Debug)]
pub struct Param {
    pub name: Name,
    pub sort: Sort,
    /// The type of a term parameter.
    pub ty: Option<Tm>,
}

#[derive(Clone, Debug)]
pub enum DefKind {
    /// A large type, such as a Pi over the universe.
    Type,
    Term(Tm),
}

#[derive(Clone, Debug)]
pub struct Definition {
    pub name: Arc<str>,
    pub params: Vec<Param>,
    pub kind: DefKind,
    /// `None` when the body failed to check; the definition is then opaque.
    pub body: Option<Tm>,
    pub span: Span,
}

impl Definition {
    pub fn instantiate(&self, args: &[Arg], t: &Tm) -> Tm {
        let map: HashMap<Name, Inst> = self
            .params
            .iter()
            .zip(args)
            .map(|(p, a)| {
                let v = match a {
                    Arg::Term(t) => Inst::Term(t.clone()),
                    Arg::Dim(d) => Inst::Dim(d.clone()),
                };
                (p.name.clone(), v)
            })
            .collect();
        subst(t, &map)
    }

    pub fn unfold(&self, args: &[Arg]) -> Option<Tm> {
        self.body.as_ref().map(|b| self.instantiate(args, b))
    }

    pub fn is_type(&self) -> bool {
        matches!(self.kind, DefKind::Type)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Signature {
    defs: HashMap<Arc<str>, Arc<Definition>>,
    order: Vec<Arc<str>>,
}

impl Signature {
    pub fn new() -> Signature {
        Signature::default()
    }

    pub fn get(&self, name: &str) -> Option<&Arc<Definition>> {
        self.defs.get(name)
    }

    pub fn insert(&mut self, d: Definition) {
        if !self.defs.contains_key(&d.name) {
            self.order.push(d.name.clone());
        }
        self.defs.insert(d.name.clone(), Arc::new(d));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.defs.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<Definition>> {
        self.order.iter().map(|n| &self.defs[n])
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}
