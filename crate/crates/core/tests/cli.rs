use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

fn ptt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptt")).args(args).output().expect("run ptt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_ok() {
    let f = corpus("church_bool.ptt");
    let o = ptt(&["check", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).trim_end().ends_with("church_bool.ptt: ok (9 definitions)"));
}

#[test]
fn files_reported_in_order() {
    let names = ["z2_elim.ptt", "church_bool.ptt", "bridge_funext.ptt"];
    let paths: Vec<String> = names.iter().map(|n| corpus(n).display().to_string()).collect();
    let mut args = vec!["check"];
    args.extend(paths.iter().map(String::as_str));
    let o = ptt(&args);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    for (line, name) in lines.iter().zip(names) {
        assert!(line.contains(name), "{line}");
    }
}

#[test]
fn normalize_prints_value() {
    let f = corpus("church_bool.ptt");
    let o = ptt(&["normalize", f.to_str().unwrap(), "--def", "roundtrip_tt"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "tt");
}

#[test]
fn eval_with_dimensions() {
    let f = corpus("z2_elim.ptt");
    let o = ptt(&["eval", f.to_str().unwrap(), "--def", "sq", "--dims", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "zin 0");
}

#[test]
fn trace_goes_to_stderr() {
    let f = corpus("church_bool.ptt");
    let o = ptt(&["--trace", "normalize", f.to_str().unwrap(), "--def", "roundtrip_ff"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "ff");
    assert!(stderr(&o).contains("delta"));
}

#[test]
fn diagnostics_exit_one() {
    let f = corpus("negative/diagonal.ptt");
    let o = ptt(&["check", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    let first = err.lines().next().unwrap_or_default();
    let rest = first.split_once("diagonal.ptt:").map(|(_, r)| r).unwrap_or_else(|| panic!("{first}"));
    let mut parts = rest.splitn(3, ':');
    assert!(parts.next().unwrap().parse::<usize>().is_ok(), "{first}");
    assert!(parts.next().unwrap().parse::<usize>().is_ok(), "{first}");
    assert!(parts.next().unwrap().trim_start().starts_with("NotApart:"), "{first}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn unknown_definition_is_usage_error() {
    let f = corpus("church_bool.ptt");
    let o = ptt(&["normalize", f.to_str().unwrap(), "--def", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_usage_exits_two() {
    assert_eq!(ptt(&[]).status.code(), Some(2));
    assert_eq!(ptt(&["check"]).status.code(), Some(2));
    assert_eq!(ptt(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ptt(&["check", "/nonexistent/file.ptt"]).status.code(), Some(2));
}

#[test]
fn fuel_exhaustion_is_reported() {
    let f = corpus("church_bool.ptt");
    let o = ptt(&["--fuel", "3", "normalize", f.to_str().unwrap(), "--def", "roundtrip_tt"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}
