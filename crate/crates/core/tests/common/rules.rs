//! One case per reduction rule for bridges, extent and Gel, plus coercion in
//! Sigma. Each case steps a redex once and compares the reduct exactly.

use ptt::interval::{Constraint, Sort};
use ptt::syntax::Term;

use super::{expect_step, step_with, Env, TableOracle};

pub type Case = (&'static str, fn() -> Result<(), String>);

pub const CASES: &[Case] = &[
    ("bapp_beta", bapp_beta),
    ("bapp_congruence", bapp_congruence),
    ("bapp_boundary", bapp_boundary),
    ("bridge_hcom", bridge_hcom),
    ("bridge_coe", bridge_coe),
    ("extent_endpoint", extent_endpoint),
    ("extent_variable", extent_variable),
    ("extent_not_apart", extent_not_apart),
    ("gel_endpoint", gel_endpoint),
    ("gelin_endpoint", gelin_endpoint),
    ("ungel_beta", ungel_beta),
    ("ungel_congruence", ungel_congruence),
    ("gel_hcom", gel_hcom),
    ("gel_hcom_forall", gel_hcom_forall),
    ("gel_coe", gel_coe),
    ("sigma_coe", sigma_coe),
];

fn terms(names: &[&'static str]) -> Vec<(&'static str, Sort)> {
    names.iter().map(|n| (*n, Sort::Term)).collect()
}

fn env(term_vars: &[&'static str], path: &[&'static str], bridge: &[&'static str]) -> Env {
    let mut vars = terms(term_vars);
    vars.extend(path.iter().map(|n| (*n, Sort::Path)));
    vars.extend(bridge.iter().map(|n| (*n, Sort::Bridge)));
    Env::new(&vars)
}

fn bapp_beta() -> Result<(), String> {
    let e = env(&["f", "Q"], &[], &["x"]);
    expect_step(&e, None, "(blam y. f (Q @@ y)) @@ x", "f (Q @@ x)")
}

fn bapp_congruence() -> Result<(), String> {
    let e = env(&["Q"], &[], &["x"]);
    expect_step(&e, None, "((lam b. b) Q) @@ x", "Q @@ x")
}

fn bapp_boundary() -> Result<(), String> {
    let e = env(&["Q", "M0", "M1"], &[], &[]);
    let o = TableOracle { ends: vec![(e.name("Q").clone(), e.term("M0"), e.term("M1"))], apart: true };
    expect_step(&e, Some(&o), "Q @@ 0", "M0")?;
    expect_step(&e, Some(&o), "Q @@ 1", "M1")
}

fn bridge_hcom() -> Result<(), String> {
    let e = env(&["A", "M0", "M1", "P", "Q"], &["y"], &[]);
    expect_step(
        &e,
        None,
        "hcom (Bridge A M0 M1) 0 1 P [y = 0 -> z. Q]",
        "blam x. hcom A 0 1 (P @@ x) [y = 0 -> z. Q @@ x | x = 0 -> _. M0 | x = 1 -> _. M1]",
    )
}

fn bridge_coe() -> Result<(), String> {
    let e = env(&["C", "K", "L", "P"], &[], &[]);
    expect_step(
        &e,
        None,
        "coe (z. Bridge C (K @ z) (L @ z)) 0 1 P",
        "blam x. com (_. C) 0 1 (P @@ x) [x = 0 -> z. K @ z | x = 1 -> z. L @ z]",
    )
}

const EXTENT_TAIL: &str = "(_. A) (_._. B) (a. N0 a) (a. N1 a) (a.b.c. H a b c)";

fn extent_endpoint() -> Result<(), String> {
    let e = env(&["M", "A", "B", "N0", "N1", "H"], &[], &[]);
    expect_step(&e, None, &format!("extent 0 M {EXTENT_TAIL}"), "N0 M")?;
    expect_step(&e, None, &format!("extent 1 M {EXTENT_TAIL}"), "N1 M")
}

fn extent_variable() -> Result<(), String> {
    let e = env(&["K", "A", "B", "N0", "N1", "H"], &[], &["x"]);
    expect_step(&e, None, &format!("extent x tt {EXTENT_TAIL}"), "H tt tt (blam _. tt) @@ x")?;
    let o = TableOracle { ends: vec![], apart: true };
    expect_step(&e, Some(&o), &format!("extent x (K @@ x) {EXTENT_TAIL}"), "H (K @@ 0) (K @@ 1) (blam x. K @@ x) @@ x")
}

fn extent_not_apart() -> Result<(), String> {
    let e = env(&["A", "B", "N0", "N1", "H", "K"], &[], &["x"]);
    let o = TableOracle { ends: vec![], apart: false };
    let t = e.term(&format!("extent x (K @@ x) {EXTENT_TAIL}"));
    match step_with(&e, Some(&o), &t) {
        Err(_) => Ok(()),
        Ok(s) => Err(format!("extent over a variable that is not apart reduced: {:?}", s.map(|s| s.rule))),
    }
}

fn gel_endpoint() -> Result<(), String> {
    let e = env(&["A0", "A1", "R"], &[], &[]);
    expect_step(&e, None, "Gel 0 A0 A1 (a.b. R a b)", "A0")?;
    expect_step(&e, None, "Gel 1 A0 A1 (a.b. R a b)", "A1")
}

fn gelin_endpoint() -> Result<(), String> {
    let e = env(&["M0", "M1", "P"], &[], &[]);
    expect_step(&e, None, "gel 0 M0 M1 P", "M0")?;
    expect_step(&e, None, "gel 1 M0 M1 P", "M1")
}

fn ungel_beta() -> Result<(), String> {
    let e = env(&["M0", "M1", "P"], &[], &[]);
    expect_step(&e, None, "ungel (x. gel x M0 M1 P)", "P")
}

fn ungel_congruence() -> Result<(), String> {
    let e = env(&["Q"], &[], &[]);
    expect_step(&e, None, "ungel (x. (lam b. b) (Q @@ x))", "ungel (x. Q @@ x)")
}

fn gel_hcom() -> Result<(), String> {
    let e = env(&["A0", "A1", "R", "Q", "T"], &["y"], &["x"]);
    expect_step(
        &e,
        None,
        "hcom (Gel x A0 A1 (a.b. R a b)) 0 1 (Q @@ x) [y = 1 -> z. T @@ x]",
        "gel x (hcom A0 0 1 (Q @@ 0) [y = 1 -> z. T @@ 0]) (hcom A1 0 1 (Q @@ 1) [y = 1 -> z. T @@ 1]) \
         (com (w. R (hcom A0 0 w (Q @@ 0) [y = 1 -> z. T @@ 0]) (hcom A1 0 w (Q @@ 1) [y = 1 -> z. T @@ 1])) \
         0 1 (ungel (x. Q @@ x)) [y = 1 -> z. ungel (x. T @@ x)])",
    )
}

fn gel_hcom_forall() -> Result<(), String> {
    let e = env(&["A0", "A1", "R", "Q", "T", "S"], &["y"], &["x", "x2"]);
    let t =
        e.term("hcom (Gel x A0 A1 (a.b. R a b)) 0 1 (Q @@ x) [x = 0 -> z. T @@ x | x2 = 1 -> z. S | y = 0 -> z. S]");
    let s = step_with(&e, None, &t)?.ok_or("value")?;
    let Term::GelIn(_, _, _, p) = &*s.term else {
        return Err(format!("not a gel: {}", ptt::frontend::print(&s.term)));
    };
    let Term::Com(_, _, _, _, sys) = &**p else {
        return Err(format!("witness is not a com: {}", ptt::frontend::print(p)));
    };
    let got: Vec<Constraint> = sys.iter().map(|t| t.constraint.clone()).collect();
    let x2 = ptt::interval::Dim::name(e.name("x2"));
    let y = ptt::interval::Dim::name(e.name("y"));
    let want =
        vec![Constraint::falsum(), Constraint::BridgeEq(x2, true), Constraint::PathEq(y, ptt::interval::Dim::Zero)];
    if got == want {
        Ok(())
    } else {
        Err(format!("witness constraints {got:?}, expected {want:?}"))
    }
}

fn gel_coe() -> Result<(), String> {
    let e = env(&["A0", "A1", "R", "Q"], &[], &["x"]);
    expect_step(
        &e,
        None,
        "coe (z. Gel x A0 A1 (a.b. R a b)) 0 1 (Q @@ x)",
        "gel x (coe (_. A0) 0 1 (Q @@ 0)) (coe (_. A1) 0 1 (Q @@ 1)) \
         (coe (z. R (coe (_. A0) 0 z (Q @@ 0)) (coe (_. A1) 0 z (Q @@ 1))) 0 1 (ungel (x. Q @@ x)))",
    )
}

fn sigma_coe() -> Result<(), String> {
    let e = env(&["A", "B", "P"], &[], &[]);
    expect_step(
        &e,
        None,
        "coe (_. Sig (a : A) B a) 0 1 P",
        "(coe (_. A) 0 1 (fst P), coe (z. B (coe (_. A) 0 z (fst P))) 0 1 (snd P))",
    )
}
