//! Corpus-level checks shared by the integration tests and the acceptance
//! runner. Each returns a short summary on success.

use std::collections::{HashMap, HashSet};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ptt::checker::Checker;
use ptt::context::{Context, DefKind, Definition, Entry, Signature};
use ptt::conversion::Conv;
use ptt::diagnostic::Code;
use ptt::frontend::{open_definition, print, read_term, Opened};
use ptt::interval::Status;
use ptt::interval::{Constraint, Dim, Name, Sort};
use ptt::opsem::{isval, Fuel, Rule, StepResult};
use ptt::syntax::{alpha_eq, strip_locs, subst_dims, Term, Tm};

use super::{corpus, corpus_file, negatives, Source, FUEL};

pub type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn checks(s: &Source) -> Result<(), String> {
    match s.checked.diagnostics.first() {
        None => Ok(()),
        Some(d) => Err(d.render(&format!("{}.ptt", s.name), &s.src)),
    }
}

fn has_body(s: &Source, name: &str) -> Result<(), String> {
    match s.checked.signature.get(name) {
        Some(d) if d.body.is_some() => Ok(()),
        Some(_) => Err(format!("`{name}` did not check")),
        None => Err(format!("`{name}` is missing from {}", s.name)),
    }
}

pub fn normalize_def(sig: &Signature, name: &str) -> Result<Tm, String> {
    let def = sig.get(name).ok_or_else(|| format!("no definition `{name}`"))?;
    let o = open_definition(def, &[]);
    let fuel = Fuel::new(FUEL);
    Conv::new(sig, &fuel).normalize(&o.context, &o.term).map_err(|e| e.to_string())
}

/// Normalizes each probe step by step and returns the rules that fired.
fn rules_fired(sig: &Signature, probes: &[Tm]) -> Result<HashSet<Rule>, String> {
    let fuel = Fuel::new(FUEL);
    let conv = Conv::new(sig, &fuel);
    let mut out = HashSet::new();
    for p in probes {
        let mut t = p.clone();
        for _ in 0..5000 {
            let next =
                conv.with_machine(&Context::new(), &t, None, |m, t| m.deep_step(t)).map_err(|e| e.to_string())?;
            match next {
                Some(s) => {
                    out.insert(s.rule);
                    t = s.term;
                }
                None => break,
            }
        }
    }
    Ok(out)
}

pub fn church_booleans() -> Outcome {
    let s = corpus_file("church_bool");
    checks(&s)?;
    for (name, want) in [("roundtrip_tt", "tt"), ("roundtrip_ff", "ff")] {
        let v = print(&normalize_def(&s.checked.signature, name)?);
        ensure(v == want, || format!("{name} normalized to `{v}`"))?;
    }
    has_body(&s, "FGk")?;
    has_body(&s, "FG")?;
    Ok(format!("{} definitions, roundtrips tt/ff", s.checked.signature.len()))
}

pub fn bridge_discrete_bool() -> Outcome {
    let s = corpus_file("loosen_tighten_bool");
    checks(&s)?;
    for n in ["loosen", "tighten", "loosentighten", "J", "conn", "orcnx"] {
        has_body(&s, n)?;
    }
    let sig = &s.checked.signature;
    let probes: Vec<Tm> = [
        "blam x. loosen bool tt tt (plam _. tt) @@ x",
        "tighten tt tt (blam _. tt)",
        "ttx 0",
        "blam x. lt x ff",
        "conn bool tt tt (plam _. tt) 1 1",
        "plam y. plam z. orcnx bool tt tt (plam _. tt) @ y @ z",
    ]
    .iter()
    .map(|src| read_term(sig, src).map_err(|d| d.message))
    .collect::<Result<_, _>>()?;
    let fired = rules_fired(sig, &probes)?;
    let want = [
        Rule::CoeBridge,
        Rule::UngelBeta,
        Rule::IfTrue,
        Rule::GelInEndpoint,
        Rule::ExtentVar,
        Rule::CoePath,
        Rule::HComTube,
    ];
    let missing: Vec<_> = want.iter().filter(|r| !fired.contains(r)).map(|r| r.name()).collect();
    ensure(missing.is_empty(), || format!("rules never fired: {missing:?}"))?;
    Ok(format!("{} definitions, {} distinct rules exercised", sig.len(), fired.len()))
}

pub fn wlem_refutation() -> Outcome {
    let s = corpus_file("lem_refutation");
    checks(&s)?;
    for n in ["to_bridge_discrete", "const_at", "notWLEM"] {
        has_body(&s, n)?;
    }
    Ok(format!("{} definitions", s.checked.signature.len()))
}

pub fn bridge_funext() -> Outcome {
    let s = corpus_file("bridge_funext");
    checks(&s)?;
    for n in ["bfunext", "bfunapp", "bfunext_beta"] {
        has_body(&s, n)?;
    }
    let sig = &s.checked.signature;
    let def = sig.get("bfunext_beta").unwrap();
    let o = open_definition(def, &[]);
    let args: Vec<String> = def.params.iter().map(|p| p.name.hint().to_string()).collect();
    let fuel = Fuel::new(FUEL);
    let conv = Conv::new(sig, &fuel);
    let [a, b, f0, f1, h, a0, a1, aa] = &args[..] else { return Err("unexpected telescope".into()) };
    let mut scope = ptt::frontend::elab::Scope::new();
    for p in &def.params {
        scope.bind_name(p.name.hint(), &p.name, p.sort);
    }
    let elab = |src: &str| -> Result<Tm, String> {
        let e = ptt::frontend::parse_term(src).map_err(|d| d.message)?;
        ptt::frontend::elab::elab_term_in(sig, scope.clone(), &e).map(|t| strip_locs(&t)).map_err(|d| d.message)
    };
    let lhs = elab(&format!("bfunapp {a} {b} {f0} {f1} (bfunext {a} {b} {f0} {f1} {h}) {a0} {a1} {aa}"))?;
    let rhs = elab(&format!("{h} {a0} {a1} {aa}"))?;
    let ty = elab(&format!("BridgeOver {a} {b} {f0} {f1} {a0} {a1} {aa}"))?;
    let same = conv.conv(&o.context, &ty, &lhs, &rhs).map_err(|e| e.to_string())?;
    ensure(same, || "bfunapp after bfunext is not convertible with the input".into())?;
    Ok("bfunext checks; bfunapp (bfunext H) == H".into())
}

/// Path and bridge variables of a context, with their sorts.
fn dims_of(ctx: &Context) -> Vec<(Name, Sort)> {
    ctx.entries()
        .iter()
        .filter_map(|e| match e {
            Entry::PathDim(x) => Some((x.clone(), Sort::Path)),
            Entry::BridgeDim(x) => Some((x.clone(), Sort::Bridge)),
            _ => None,
        })
        .collect()
}

/// Applies paths and bridges at fresh dimensions, up to two levels deep.
fn probe(sig: &Signature, o: &Opened) -> Result<(Context, Tm), String> {
    let fuel = Fuel::new(FUEL);
    let conv = Conv::new(sig, &fuel);
    let mut ctx = o.context.clone();
    let mut t = o.term.clone();
    let Some(mut ty) = o.ty.clone() else { return Ok((ctx, t)) };
    for _ in 0..2 {
        let w = conv.whnf(&ctx, &ty).map_err(|e| e.to_string())?;
        let (line, sort) = match &*w {
            Term::Path(l, _, _) => (l.clone(), Sort::Path),
            Term::Bridge(l, _, _) => (l.clone(), Sort::Bridge),
            _ => break,
        };
        let x = Name::fresh(if sort == Sort::Path { "i" } else { "j" });
        ctx = ctx.with_dim(&x, sort);
        let d = Dim::name(&x);
        t = if sort == Sort::Path { Term::papp(t, d.clone()) } else { Term::bapp(t, d.clone()) };
        ty = line.open_dim(&d);
    }
    Ok((ctx, t))
}

fn random_subst(rng: &mut StdRng, dims: &[(Name, Sort)]) -> HashMap<Name, Dim> {
    let paths: Vec<&Name> = dims.iter().filter(|(_, s)| *s == Sort::Path).map(|(n, _)| n).collect();
    dims.iter()
        .map(|(x, sort)| {
            let img = match rng.gen_range(0..3) {
                0 => Dim::Zero,
                1 => Dim::One,
                _ if *sort == Sort::Path => Dim::name(paths[rng.gen_range(0..paths.len())]),
                _ => Dim::name(x),
            };
            (x.clone(), img)
        })
        .collect()
}

fn subst_context(ctx: &Context, map: &HashMap<Name, Dim>) -> Context {
    let mut out = Context::new();
    for e in ctx.entries() {
        out = match e {
            Entry::Term(a, ty) => out.with_term(a, &subst_dims(ty, map)),
            Entry::PathDim(x) => out.with_dim(x, Sort::Path),
            Entry::BridgeDim(x) => out.with_dim(x, Sort::Bridge),
            Entry::Constr(c) => out.with_constraint(c),
        };
    }
    out
}

fn checked_defs(sources: &[Source]) -> Vec<(&Source, &std::sync::Arc<Definition>)> {
    sources.iter().flat_map(|s| s.checked.signature.iter().filter(|d| d.body.is_some()).map(move |d| (s, d))).collect()
}

pub const SAMPLES: usize = 100;

pub fn coherence() -> Outcome {
    let sources = corpus();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (mut defs, mut samples, mut distinct) = (0, 0, 0);
    for (s, def) in checked_defs(&sources) {
        let sig = &s.checked.signature;
        let o = open_definition(def, &[]);
        let (ctx, m) = probe(sig, &o)?;
        let dims = dims_of(&ctx);
        let fuel = Fuel::new(FUEL);
        let conv = Conv::new(sig, &fuel);
        let norm = |ctx: &Context, t: &Tm| {
            fuel.reset();
            conv.normalize(ctx, t).map_err(|e| format!("{}.{}: {e}", s.name, def.name))
        };
        let evaluated = norm(&ctx, &m)?;
        let mut seen: HashSet<Vec<String>> = HashSet::new();
        defs += 1;
        for _ in 0..SAMPLES {
            let psi = random_subst(&mut rng, &dims);
            samples += 1;
            let key: Vec<String> = dims.iter().map(|(x, _)| psi[x].to_string()).collect();
            if !seen.insert(key) {
                continue;
            }
            distinct += 1;
            let cpsi = subst_context(&ctx, &psi);
            let direct = norm(&cpsi, &subst_dims(&m, &psi))?;
            let later = norm(&cpsi, &subst_dims(&evaluated, &psi))?;
            if !alpha_eq(&direct, &later) {
                let shown: Vec<String> = dims.iter().map(|(x, _)| format!("{}:={}", x.hint(), psi[x])).collect();
                return Err(format!(
                    "{}.{} under [{}]: `{}` vs `{}`",
                    s.name,
                    def.name,
                    shown.join(", "),
                    print(&direct),
                    print(&later)
                ));
            }
        }
    }
    Ok(format!("{defs} definitions, {samples} substitutions ({distinct} distinct)"))
}

fn canonical(t: &Tm, ty: &Term) -> bool {
    match (ty, &**t) {
        (Term::Bool, Term::True | Term::False) => true,
        (Term::Z2, Term::ZIn(n)) => matches!(**n, Term::IntLit(_)),
        (Term::Z2, Term::ZMod(n, _)) => matches!(**n, Term::IntLit(_)),
        (Term::Z2, Term::HCom(a, _, _, _, sys)) => {
            matches!(**a, Term::Z2) && sys.iter().all(|t| t.constraint.status() != Status::False)
        }
        _ => false,
    }
}

pub fn canonicity() -> Outcome {
    let sources = corpus();
    let (mut bools, mut z2s) = (0, 0);
    for (s, def) in checked_defs(&sources) {
        if def.params.iter().any(|p| p.ty.is_some()) {
            continue;
        }
        let DefKind::Term(ty) = &def.kind else { continue };
        let sig = &s.checked.signature;
        let o = open_definition(def, &[]);
        let fuel = Fuel::new(FUEL);
        let conv = Conv::new(sig, &fuel);
        let ty = conv.whnf(&o.context, ty).map_err(|e| e.to_string())?;
        if !matches!(*ty, Term::Bool | Term::Z2) {
            continue;
        }
        let v = conv.normalize(&o.context, &o.term).map_err(|e| format!("{}.{}: {e}", s.name, def.name))?;
        ensure(canonical(&v, &ty), || format!("{}.{} evaluated to `{}`", s.name, def.name, print(&v)))?;
        if matches!(*ty, Term::Bool) {
            bools += 1
        } else {
            z2s += 1
        }
    }
    ensure(bools > 0 && z2s > 0, || "no closed bool or z2 definitions found".into())?;
    Ok(format!("{bools} bool and {z2s} z2 definitions canonical"))
}

pub const NEGATIVE: &[(&str, Code)] = &[
    ("diagonal", Code::NotApart),
    ("gel_wrong_relation", Code::TypeMismatch),
    ("tube_mismatch", Code::TubeMismatch),
    ("hcom_universe", Code::UnsupportedKan),
    ("z2_incoherent", Code::BoundaryMismatch),
];

pub fn negative_suite() -> Outcome {
    let found = negatives();
    for (name, code) in NEGATIVE {
        let s = found.iter().find(|s| s.name == *name).ok_or_else(|| format!("missing fixture {name}"))?;
        let got = s.checked.diagnostics.first().map(|d| d.code);
        ensure(got == Some(*code), || format!("{name}: expected {code}, got {got:?}"))?;
    }
    Ok(format!("{} fixtures rejected with the expected codes", NEGATIVE.len()))
}

pub const MAX_STEPS: usize = 400;

pub fn subject_reduction() -> Outcome {
    let sources = corpus();
    let (mut defs, mut steps) = (0, 0);
    for (s, def) in checked_defs(&sources) {
        let sig = &s.checked.signature;
        let o = open_definition(def, &[]);
        let fuel = Fuel::new(FUEL);
        let conv = Conv::new(sig, &fuel);
        let checker = Checker::new(sig, &fuel);
        let recheck = |t: &Tm| -> Result<(), String> {
            fuel.reset();
            let r = match &o.ty {
                Some(ty) => checker.check(&o.context, t, ty),
                None => checker.check_type(&o.context, t),
            };
            r.map_err(|d| format!("{}.{}: reduct `{}` does not check: {}", s.name, def.name, print(t), d.message))
        };
        let mut t = o.term.clone();
        defs += 1;
        for _ in 0..MAX_STEPS {
            fuel.reset();
            let (next, val, head) = conv
                .with_machine(&o.context, &t, None, |m, t| Ok((m.deep_step(t)?, isval(t), m.step(t))))
                .map_err(|e| format!("{}.{}: {e}", s.name, def.name))?;
            let head_steps = matches!(head, StepResult::Steps(_));
            ensure(!(val && head_steps), || format!("{}.{}: a value steps: `{}`", s.name, def.name, print(&t)))?;
            let Some(st) = next else { break };
            let again = conv
                .with_machine(&o.context, &t, None, |m, t| m.deep_step(t))
                .map_err(|e| e.to_string())?
                .map(|s| s.term);
            ensure(again.is_some_and(|a| alpha_eq(&a, &st.term)), || {
                format!("{}.{}: stepping is not deterministic", s.name, def.name)
            })?;
            t = st.term;
            steps += 1;
            recheck(&t)?;
        }
    }
    Ok(format!("{defs} definitions, {steps} steps re-checked"))
}

/// The restriction clauses, written out directly on a list of entries.
fn reference_restrict(entries: &[Entry], x: &Name) -> Vec<usize> {
    let Some(pos) = entries.iter().position(|e| e.name() == Some(x)) else {
        return (0..entries.len()).collect();
    };
    let mut kept: Vec<usize> = (0..pos).collect();
    for (i, e) in entries.iter().enumerate().skip(pos + 1) {
        let keep = match e {
            Entry::PathDim(_) | Entry::BridgeDim(_) => true,
            Entry::Term(..) => false,
            Entry::Constr(c) => !c.mentions(x),
        };
        if keep {
            kept.push(i);
        }
    }
    kept
}

fn extensions(prefix: &[Entry]) -> Vec<Entry> {
    let ty = ptt::syntax::mk(Term::Bool);
    let mut out =
        vec![Entry::Term(Name::fresh("a"), ty), Entry::PathDim(Name::fresh("y")), Entry::BridgeDim(Name::fresh("x"))];
    for e in prefix {
        match e {
            Entry::PathDim(y) => {
                out.push(Entry::Constr(Constraint::PathEq(Dim::name(y), Dim::Zero)));
                out.push(Entry::Constr(Constraint::PathEq(Dim::name(y), Dim::One)));
                for f in prefix {
                    if let Entry::PathDim(z) = f {
                        if z != y {
                            out.push(Entry::Constr(Constraint::PathEq(Dim::name(y), Dim::name(z))));
                        }
                    }
                }
            }
            Entry::BridgeDim(x) => {
                out.push(Entry::Constr(Constraint::BridgeEq(Dim::name(x), false)));
                out.push(Entry::Constr(Constraint::BridgeEq(Dim::name(x), true)));
            }
            _ => {}
        }
    }
    out
}

fn all_contexts(n: usize) -> Vec<Vec<Entry>> {
    let mut level = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for prefix in &level {
            for e in extensions(prefix) {
                let mut c = prefix.clone();
                c.push(e);
                next.push(c);
            }
        }
        level = next;
    }
    level
}

pub fn restriction_tables() -> Outcome {
    let (mut contexts, mut cases) = (0, 0);
    for entries in all_contexts(3) {
        let mut ctx = Context::new();
        for e in &entries {
            ctx.push(e.clone());
        }
        contexts += 1;
        let mut targets = vec![Dim::Zero, Dim::One];
        targets.extend(entries.iter().filter_map(|e| match e {
            Entry::BridgeDim(x) => Some(Dim::name(x)),
            _ => None,
        }));
        for r in &targets {
            cases += 1;
            let (_, ren) = ctx.restrict(r);
            let want = match ctx.canon_dim(r).as_name() {
                Some(x) => reference_restrict(&entries, x),
                None => (0..entries.len()).collect(),
            };
            ensure(ren.kept == want, || {
                format!("restricting {entries:?} at {r}: kept {:?}, expected {want:?}", ren.kept)
            })?;
            if let Some(x) = ctx.canon_dim(r).as_name() {
                let (rctx, _) = ctx.restrict(r);
                for e in rctx.entries() {
                    if let Entry::Term(a, _) = e {
                        ensure(ptt::conversion::apart_in(&ctx, a, x), || format!("{a:?} kept but not apart"))?;
                    }
                }
            }
        }
        for x in entries.iter().filter_map(|e| match e {
            Entry::BridgeDim(x) => Some(x),
            _ => None,
        }) {
            for e in &entries {
                let Entry::Constr(c) = e else { continue };
                cases += 1;
                let want = match c {
                    Constraint::BridgeEq(r, _) if r.mentions(x) => Constraint::PathEq(Dim::Zero, Dim::One),
                    _ => c.clone(),
                };
                let got = ptt::interval::forall_x(x, c);
                ensure(got == want, || format!("forall {x:?}. {c}: got {got}, expected {want}"))?;
            }
        }
    }
    Ok(format!("{contexts} contexts, {cases} cases"))
}
