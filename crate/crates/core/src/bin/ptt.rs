use std::cell::RefCell;
use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;

use anyhow::{bail, Context as _};
use clap::{Parser, Subcommand};

use ptt::conversion::Conv;
use ptt::diagnostic::Diagnostic;
use ptt::frontend::{check_source, open_definition, print, Checked};
use ptt::interval::{Dim, Name};
use ptt::opsem::Fuel;

#[derive(Parser)]
#[command(name = "ptt", version, about = "Check and evaluate parametric cubical type theory files")]
struct Cli {
    /// Evaluation step budget per definition.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    fuel: u64,
    /// Print every reduction step to stderr.
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check files.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Print the full normal form of a definition.
    Normalize {
        file: PathBuf,
        #[arg(long = "def")]
        name: String,
    },
    /// Evaluate a definition to a value.
    Eval {
        file: PathBuf,
        #[arg(long = "def")]
        name: String,
        /// Values for the dimension parameters, in order: `0`, `1` or a name.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<String>,
    },
}

struct Loaded {
    path: String,
    src: String,
    checked: Checked,
}

fn load(path: &PathBuf, fuel: u64) -> anyhow::Result<Loaded> {
    let src = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let checked = check_source(&src, fuel);
    Ok(Loaded { path: path.display().to_string(), src, checked })
}

fn report(l: &Loaded, d: &Diagnostic) {
    eprintln!("{}", d.render(&l.path, &l.src));
}

fn check(files: &[PathBuf], fuel: u64) -> anyhow::Result<bool> {
    let results: Vec<anyhow::Result<Loaded>> = thread::scope(|s| {
        let handles: Vec<_> = files.iter().map(|f| s.spawn(move || load(f, fuel))).collect();
        handles.into_iter().map(|h| h.join().expect("checker thread panicked")).collect()
    });
    let mut ok = true;
    for r in results {
        let l = r?;
        for d in &l.checked.diagnostics {
            report(&l, d);
        }
        if l.checked.ok() {
            println!("{}: ok ({} definitions)", l.path, l.checked.signature.len());
        } else {
            ok = false;
        }
    }
    Ok(ok)
}

fn parse_dim(s: &str) -> Dim {
    match s.trim() {
        "0" => Dim::Zero,
        "1" => Dim::One,
        x => Dim::name(&Name::fresh(x)),
    }
}

fn run_def(file: &PathBuf, name: &str, dims: &[String], full: bool, fuel: u64, trace: bool) -> anyhow::Result<bool> {
    let l = load(file, fuel)?;
    for d in &l.checked.diagnostics {
        report(&l, d);
    }
    if !l.checked.ok() {
        return Ok(false);
    }
    let Some(def) = l.checked.signature.get(name) else {
        bail!("no definition named `{name}` in {}", l.path);
    };
    let dims: Vec<Dim> = dims.iter().map(|s| parse_dim(s)).collect();
    let opened = open_definition(def, &dims);
    let fuel = Fuel::new(fuel);
    let conv = Conv::new(&l.checked.signature, &fuel);
    let log = RefCell::new(Vec::new());
    let result = conv.with_machine(&opened.context, &opened.term, trace.then_some(&log), |m, t| {
        if full {
            m.normalize(t)
        } else {
            m.eval(t)
        }
    });
    for line in log.borrow().iter() {
        eprintln!("{line}");
    }
    match result {
        Ok(v) => {
            println!("{}", print(&v));
            Ok(true)
        }
        Err(e) => {
            let d = Diagnostic::from(e).at(def.span);
            report(&l, &d);
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Check { files } => check(files, cli.fuel),
        Command::Normalize { file, name } => run_def(file, name, &[], true, cli.fuel, cli.trace),
        Command::Eval { file, name, dims } => run_def(file, name, dims, false, cli.fuel, cli.trace),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("ptt: {e:#}");
            ExitCode::from(2)
        }
    }
}
